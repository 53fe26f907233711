"""`split`: train/val/test manifests, sentence-wise or city-wise."""

import argparse
from pathlib import Path

from ..config import CliConfig
from ..services.dataset import split_city_wise, split_sentence_wise, write_split
from . import load_pairs, open_output

NAME = "split"
HELP = "dataset -> split manifest"
DESCRIPTION = """\
Partition a dataset into disjoint train/val/test qid lists.

  sentence  seeded random split; val and test get floor(n * ratio) pairs, every
            city keeps the same proportions (default ratios 0.69 0.17 0.14)
  city      whole cities per split (default train Longhua Wuhu Qingdao Yingrenshi,
            val Lihu, test Yuehai); a city present in the data but in no list
            is an error

Output: JSON {mode, params, train, val, test} with sorted qid lists.
"""


def register(subparsers, common: argparse.ArgumentParser) -> None:
    """Add the subcommand parser."""
    p = subparsers.add_parser(
        NAME, help=HELP, description=DESCRIPTION, parents=[common], formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.add_argument("dataset", type=Path, help="dataset line-record file")
    p.add_argument("--mode", choices=["sentence", "city"], default="sentence")
    p.add_argument("--ratios", dest="split_ratios", type=float, nargs=3, metavar=("TRAIN", "VAL", "TEST"))
    p.add_argument("--train-cities", nargs="+")
    p.add_argument("--val-cities", nargs="+")
    p.add_argument("--test-cities", nargs="+")
    p.add_argument("-o", "--output", type=Path, help="split manifest path (default: standard output)")


def run(args: argparse.Namespace, config: CliConfig) -> int:
    """Run the subcommand."""
    pairs = load_pairs(args.dataset)
    if args.mode == "city":
        assignment = split_city_wise(pairs, config.train_cities, config.val_cities, config.test_cities)
    else:
        assignment = split_sentence_wise(pairs, config.split_ratios, config.seed)
    with open_output(config.output) as sink:
        write_split(assignment, sink)
    return 0
