"""`query`: answer one template instance over a scene graph, or many in a loop."""

import argparse
import sys
from pathlib import Path

from ..config import CliConfig
from ..exceptions import City3DQAError, ConfigurationError
from ..services.lookup import SceneIndex
from ..services.oracle import OracleParams, answer
from ..services.semantics import read_scene_graph
from ..services.templates import Binding, QuestionTemplate, SlotKind, get_template, instantiate
from . import load_template_registry

NAME = "query"
HELP = "scene graph + template + bindings -> answer"
DESCRIPTION = """\
Ask the symbolic oracle a registered template question about one scene graph.

  query scene.graph.json --template RQ-01 --bind "instance label=the bank" --bind ...
  query scene.graph.json --repl
  query --list-templates

Slot names may be written as in the pattern ("instance label 1") or with
underscores ("instance_label_1"). Instances are referenced as "the <label>" or
"the <label> in the <location>". --repl reads a template id, then one value per
slot, and prints the question and its answer; an empty template id or end of
input leaves the loop. Only registered template instances are answered.
"""


def register(subparsers, common: argparse.ArgumentParser) -> None:
    """Add the subcommand parser."""
    p = subparsers.add_parser(
        NAME, help=HELP, description=DESCRIPTION, parents=[common], formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.add_argument("graph", type=Path, nargs="?", help="scene graph file")
    p.add_argument("--template", help="template id, e.g. RQ-01")
    p.add_argument("--bind", action="append", default=[], metavar="SLOT=VALUE", help="slot value (repeatable)")
    p.add_argument("--repl", action="store_true", help="read template ids and slot values from standard input")
    p.add_argument("--list-templates", action="store_true", help="print the registered templates and exit")
    p.add_argument("--templates", type=Path, help="extra template JSON file")
    p.add_argument("--near-radius", type=float, help="radius of 'near' in meters (default 100)")
    p.add_argument("--tie-tolerance", type=float, help="distance tie tolerance in meters (default 1e-9)")


def parse_slot(name: str) -> SlotKind:
    """Slot kind from "instance label 1", "[instance label 1]" or "instance_label_1".

    Raises:
        ConfigurationError: On an unknown slot name.
    """
    key = "_".join(name.strip().strip("[]").replace("_", " ").split()).lower()
    try:
        return SlotKind(key)
    except ValueError:
        known = ", ".join(s.value for s in SlotKind)
        raise ConfigurationError(f"unknown slot {name!r} (known: {known})") from None


def parse_bindings(items: list[str]) -> Binding:
    """Binding from SLOT=VALUE strings."""
    values: dict[SlotKind, str] = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--bind expects SLOT=VALUE, got {item!r}")
        values[parse_slot(name)] = value.strip()
    return Binding(values=values)


def ask(
    idx: SceneIndex, t: QuestionTemplate, binding: Binding, registry, params: OracleParams
) -> tuple[str, str]:
    """The instantiated question and its answer."""
    question = instantiate(t, binding)
    return question, answer(idx, t.id, binding, registry, params).value


def _list_templates(registry, out) -> None:
    for t in registry:
        out.write(f"{t.id}\t{t.category.value}\t{t.hops.value}\t{t.pattern}\n")


def _repl(idx: SceneIndex, registry, params: OracleParams, out) -> None:
    out.write(f"scene {idx.graph.city}/{idx.graph.scene_id}: {len(idx.instances)} instances\n")
    while True:
        try:
            template_id = input("template> ").strip()
            if not template_id:
                return
            t = get_template(template_id, registry)
            values = {slot: input(f"{slot.placeholder}> ").strip() for slot in t.slots}
            question, value = ask(idx, t, Binding(values=values), registry, params)
        except EOFError:
            out.write("\n")
            return
        except City3DQAError as exc:
            out.write(f"error: {exc}\n")
            continue
        out.write(f"{question}\n{value}\n")


def run(args: argparse.Namespace, config: CliConfig) -> int:
    """Run the subcommand."""
    registry = load_template_registry(args.templates)
    out = sys.stdout
    if args.list_templates:
        _list_templates(registry, out)
        return 0
    if args.graph is None:
        raise ConfigurationError("query needs a scene graph file")

    with open(args.graph, encoding="utf-8") as f:
        idx = SceneIndex(read_scene_graph(f))
    params = OracleParams(near_radius=config.near_radius, tie_tolerance=config.tie_tolerance)

    if args.repl:
        _repl(idx, registry, params, out)
        return 0
    if not args.template:
        raise ConfigurationError("query needs --template (or --repl)")
    question, value = ask(idx, get_template(args.template, registry), parse_bindings(args.bind), registry, params)
    out.write(f"{question}\n{value}\n")
    return 0
