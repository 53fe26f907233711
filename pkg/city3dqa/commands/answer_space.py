"""`answer-space`: the closed answer vocabulary of a dataset."""

import argparse
from pathlib import Path

from ..config import CliConfig
from ..services.dataset import build_answer_space, write_answer_space
from . import load_pairs, open_output, select_part

NAME = "answer-space"
HELP = "dataset -> answer space"
DESCRIPTION = """\
Count the normalized gold answers of a dataset (usually its train split) and
write them as JSON {entries: [{answer, count}]}, most frequent first.
"""


def register(subparsers, common: argparse.ArgumentParser) -> None:
    """Add the subcommand parser."""
    p = subparsers.add_parser(
        NAME, help=HELP, description=DESCRIPTION, parents=[common], formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.add_argument("dataset", type=Path, help="dataset line-record file")
    p.add_argument("--split", type=Path, help="split manifest; restricts to --part")
    p.add_argument("--part", choices=["train", "val", "test"], default="train")
    p.add_argument("-o", "--output", type=Path, help="answer space path (default: standard output)")


def run(args: argparse.Namespace, config: CliConfig) -> int:
    """Run the subcommand."""
    pairs = select_part(load_pairs(args.dataset), args.split, args.part)
    with open_output(config.output) as sink:
        write_answer_space(build_answer_space(pairs), sink)
    return 0
