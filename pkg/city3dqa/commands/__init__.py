"""Subcommand modules of the command-line tool, plus helpers they share.

Every module exposes NAME, HELP, `register(subparsers, common)` and
`run(args, config) -> int`.
"""

import sys
from contextlib import contextmanager
from pathlib import Path

from ..services.dataset import QaPair, read_dataset, read_split
from ..services.scene import SceneGraph
from ..services.semantics import load_scene_graphs
from ..services.templates import QuestionTemplate, load_registry, load_templates, merge_registry

GRAPH_SUFFIX = ".graph.json"


@contextmanager
def open_output(path: Path | None):
    """Yield a text stream for `path`, or standard output for None and "-"."""
    if path is None or str(path) == "-":
        yield sys.stdout
        sys.stdout.flush()
        return
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        yield f


def graph_files(paths: list[Path]) -> list[Path]:
    """Expand directories into their scene graph files; files pass through. Sorted, unique."""
    found: set[Path] = set()
    for p in paths:
        p = Path(p)
        if p.is_dir():
            found.update(p.glob(f"*{GRAPH_SUFFIX}"))
        else:
            found.add(p)
    return sorted(found)


def load_graphs(paths: list[Path]) -> dict[tuple[str, str], SceneGraph]:
    """Scene graphs from files and directories, keyed by (city, scene_id)."""
    return load_scene_graphs(graph_files(paths))


def load_pairs(path: Path) -> list[QaPair]:
    """Read a dataset file."""
    with open(path, encoding="utf-8") as f:
        return read_dataset(f)


def show_progress(args) -> bool:
    """Progress bars only on an interactive stderr and without --quiet."""
    return not getattr(args, "quiet", False) and sys.stderr.isatty()


def select_part(pairs: list[QaPair], split_path: Path | None, part: str) -> list[QaPair]:
    """Pairs of one split part, or all pairs without a split manifest."""
    if split_path is None:
        return pairs
    with open(split_path, encoding="utf-8") as f:
        wanted = set(getattr(read_split(f), part))
    return [p for p in pairs if p.qid in wanted]


def load_template_registry(path: Path | None) -> tuple[QuestionTemplate, ...]:
    """Built-in templates, plus the user file when given."""
    if path is None:
        return load_registry()
    return merge_registry(load_registry(), load_templates(path))
