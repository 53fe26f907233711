"""`baseline`: oracle or majority-answer prediction files."""

import argparse
from pathlib import Path

from ..config import CliConfig
from ..exceptions import ConfigurationError
from ..services.evaluation import majority_baseline, oracle_predictions, write_predictions
from . import load_graphs, load_pairs, load_template_registry, open_output, select_part

NAME = "baseline"
HELP = "dataset -> baseline predictions"
DESCRIPTION = """\
Write reference predictions in the eval format.

  oracle    re-answers every question from its provenance over --graphs
            (upper bound; Top@1 = 1.0 on an unchanged dataset)
  majority  the ten most frequent answers of --train for every question
"""


def register(subparsers, common: argparse.ArgumentParser) -> None:
    """Add the subcommand parser."""
    p = subparsers.add_parser(
        NAME, help=HELP, description=DESCRIPTION, parents=[common], formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.add_argument("dataset", type=Path, help="dataset line-record file to predict for")
    p.add_argument("--kind", choices=["oracle", "majority"], default="oracle")
    p.add_argument("--graphs", type=Path, nargs="+", help="scene graph files or directories (oracle)")
    p.add_argument("--train", type=Path, help="dataset whose answers are counted (majority)")
    p.add_argument("--templates", type=Path, help="extra template JSON file")
    p.add_argument("--split", type=Path, help="split manifest; predicts only --part")
    p.add_argument("--part", choices=["train", "val", "test"], default="test")
    p.add_argument("-o", "--output", type=Path, help="predictions path (default: standard output)")


def run(args: argparse.Namespace, config: CliConfig) -> int:
    """Run the subcommand."""
    pairs = select_part(load_pairs(args.dataset), args.split, args.part)
    if args.kind == "oracle":
        if not args.graphs:
            raise ConfigurationError("the oracle baseline needs --graphs")
        preds = oracle_predictions(pairs, load_graphs(args.graphs), load_template_registry(args.templates))
    else:
        if args.train is None:
            raise ConfigurationError("the majority baseline needs --train")
        preds = majority_baseline(load_pairs(args.train), pairs)
    with open_output(config.output) as sink:
        write_predictions(preds, sink)
    return 0
