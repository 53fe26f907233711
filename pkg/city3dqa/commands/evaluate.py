"""`eval`: Top@1/Top@10 of a prediction file against a dataset."""

import argparse
from pathlib import Path

from ..config import CliConfig
from ..services.dataset import read_answer_space
from ..services.evaluation import command_snapper, evaluate, file_sha256, load_predictions, write_report
from . import load_pairs, open_output, select_part

NAME = "eval"
HELP = "dataset + predictions -> report"
DESCRIPTION = """\
Score ranked predictions: Top@1 and Top@10 overall, per hop class and per category.

Predictions: one JSON object per line, {"qid": str, "answers": [str, ... up to 10]}.
Answers are compared after normalization (case, spaces, leading articles,
number words). Questions without a prediction score zero.

--answer-space counts gold answers outside the given space; --snap-command runs
an external program that reads and writes prediction lines, mapping free-form
answers onto the space (its path is passed as CITY3DQA_ANSWER_SPACE).
"""


def register(subparsers, common: argparse.ArgumentParser) -> None:
    """Add the subcommand parser."""
    p = subparsers.add_parser(
        NAME, help=HELP, description=DESCRIPTION, parents=[common], formatter_class=argparse.RawDescriptionHelpFormatter
    )
    p.add_argument("dataset", type=Path, help="dataset line-record file")
    p.add_argument("predictions", type=Path, help="prediction line-record file")
    p.add_argument("--split", type=Path, help="split manifest; scores only --part")
    p.add_argument("--part", choices=["train", "val", "test"], default="test")
    p.add_argument("--answer-space", type=Path, help="answer space JSON")
    p.add_argument("--snap-command", help="command mapping predictions onto the answer space")
    p.add_argument("-o", "--output", type=Path, help="report path (default: standard output)")


def _fingerprint(path) -> dict:
    return {"path": str(path), "sha256": file_sha256(path)}


def run(args: argparse.Namespace, config: CliConfig) -> int:
    """Run the subcommand."""
    pairs = select_part(load_pairs(args.dataset), args.split, args.part)
    with open(args.predictions, encoding="utf-8") as f:
        preds = load_predictions(f)

    space = None
    if args.answer_space:
        with open(args.answer_space, encoding="utf-8") as f:
            space = read_answer_space(f)
    snap = command_snapper(args.snap_command, args.answer_space) if args.snap_command else None

    report = evaluate(pairs, preds, answer_space=space, snap=snap)
    metadata = {
        "dataset": _fingerprint(args.dataset),
        "predictions": _fingerprint(args.predictions),
        "split": {**_fingerprint(args.split), "part": args.part} if args.split else None,
        "answer_space": _fingerprint(args.answer_space) if args.answer_space else None,
        "snap_command": args.snap_command,
    }
    with open_output(config.output) as sink:
        write_report(report.model_copy(update={"metadata": metadata}), sink)
    return 0
