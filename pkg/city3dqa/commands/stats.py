"""`stats`: category, hop and question-length distribution of a dataset."""

import argparse
import logging
from pathlib import Path

from ..config import CliConfig
from ..services.analytics import summarize, write_charts_html, write_stats
from . import load_pairs, open_output, select_part

logger = logging.getLogger(__name__)

NAME = "stats"
HELP = "dataset -> distribution summary"
DESCRIPTION = """\
Summarize a dataset: counts and fractions per category, hop class, city and
answer kind, plus the question-length histogram (words). --plot writes the
same numbers as interactive bar charts in one HTML page.
"""


def register(subparsers, common: argparse.ArgumentParser) -> None:
    """Add the subcommand parser."""
    p = subparsers.add_parser(
        NAME, help=HELP, description=DESCRIPTION, parents=[common], formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.add_argument("dataset", type=Path, help="dataset line-record file")
    p.add_argument("--split", type=Path, help="split manifest; summarizes only --part")
    p.add_argument("--part", choices=["train", "val", "test"], default="train")
    p.add_argument("--plot", type=Path, help="HTML chart file")
    p.add_argument("-o", "--output", type=Path, help="summary path (default: standard output)")


def run(args: argparse.Namespace, config: CliConfig) -> int:
    """Run the subcommand."""
    stats = summarize(select_part(load_pairs(args.dataset), args.split, args.part))
    with open_output(config.output) as sink:
        write_stats(stats, sink)
    if args.plot:
        write_charts_html(stats, args.plot)
        logger.info("charts written to %s", args.plot)
    return 0
