"""Top-k scoring of prediction files, stratified by hop class and question category."""

import hashlib
import json
import logging
import os
import shlex
import subprocess
from collections.abc import Callable, Iterable, Mapping, Sequence
from pathlib import Path

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..exceptions import DataValidationError, ExternalServiceError, PredictionFormatError, describe_validation_error
from .dataset import AnswerSpace, QaPair, rank_answers, reanswer
from .lookup import SceneIndex
from .scene import SceneGraph
from .templates import QuestionTemplate
from .text import normalize_answer

logger = logging.getLogger(__name__)

MAX_ANSWERS = 10
TOP_KS = (1, 10)

PredictionSet = dict[str, tuple[str, ...]]
Snapper = Callable[[PredictionSet], PredictionSet]


class PredictionLine(BaseModel):
    """One prediction record: a qid and up to ten ranked answers."""

    model_config = ConfigDict(extra="forbid")

    qid: str = Field(min_length=1)
    answers: list[str] = Field(min_length=1, max_length=MAX_ANSWERS)


def load_predictions(source) -> PredictionSet:
    """Read `{qid, answers}` line records.

    Answers equal after normalization are collapsed to their best rank.

    Raises:
        PredictionFormatError: With the line number, for bad JSON, unknown fields,
            an empty or over-long answer list, or a repeated qid.
    """
    preds: PredictionSet = {}
    for line_number, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            record = PredictionLine.model_validate_json(line)
        except ValidationError as exc:
            raise PredictionFormatError(f"line {line_number}: {describe_validation_error(exc)}") from None
        if record.qid in preds:
            raise PredictionFormatError(f"line {line_number}: duplicate qid {record.qid}")
        ranked: dict[str, str] = {}
        for a in record.answers:
            ranked.setdefault(normalize_answer(a), a)
        preds[record.qid] = tuple(ranked.values())
    return preds


def write_predictions(preds: Mapping[str, Sequence[str]], sink) -> None:
    """Write predictions as `{qid, answers}` lines in qid order."""
    for qid in sorted(preds):
        sink.write(json.dumps({"qid": qid, "answers": list(preds[qid])}, ensure_ascii=False))
        sink.write("\n")


def accuracy_at_k(gold: str, ranked: Sequence[str], k: int) -> int:
    """1 iff the normalized gold answer is among the first `k` normalized predictions."""
    if k < 1:
        raise ValueError("k must be positive")
    target = normalize_answer(gold)
    return int(any(normalize_answer(a) == target for a in ranked[:k]))


class StratumScore(BaseModel):
    """Accuracy over one group of questions."""

    model_config = ConfigDict(frozen=True)

    count: int
    acc_at_1: float
    acc_at_10: float


class EvalReport(BaseModel):
    """Overall and stratified Top@1/Top@10."""

    model_config = ConfigDict(frozen=True)

    overall: StratumScore
    by_hops: dict[str, StratumScore]
    by_category: dict[str, StratumScore]
    missing_predictions: int
    unknown_predictions: int = 0
    out_of_space: int | None = None
    metadata: dict = {}


def _scores(frame: pd.DataFrame) -> StratumScore:
    if frame.empty:
        return StratumScore(count=0, acc_at_1=0.0, acc_at_10=0.0)
    return StratumScore(
        count=len(frame), acc_at_1=float(frame["hit1"].mean()), acc_at_10=float(frame["hit10"].mean())
    )


def evaluate(
    dataset: Iterable[QaPair],
    preds: Mapping[str, Sequence[str]],
    answer_space: AnswerSpace | None = None,
    snap: Snapper | None = None,
) -> EvalReport:
    """Score predictions against a dataset.

    Questions without a prediction score zero and are counted as missing.
    Predictions for qids not in the dataset are logged and ignored.

    Args:
        dataset (Iterable[QaPair]): Gold pairs.
        preds (Mapping[str, Sequence[str]]): qid -> ranked answers.
        answer_space (AnswerSpace | None): When given, golds outside it are counted.
        snap (Snapper | None): Optional mapping of free-form answers onto the answer space.

    Returns:
        EvalReport: Deterministic report with strata in sorted order.
    """
    pairs = sorted(dataset, key=lambda p: p.qid)
    if snap is not None:
        preds = snap(dict(preds))

    known = {p.qid for p in pairs}
    unknown = sorted(set(preds) - known)
    if unknown:
        logger.warning("%d predictions for qids not in the dataset ignored (first: %s)", len(unknown), unknown[0])

    rows = []
    for p in pairs:
        ranked = preds.get(p.qid)
        rows.append(
            {
                "qid": p.qid,
                "hops": p.hops.value,
                "category": p.category.value,
                "missing": ranked is None,
                "hit1": accuracy_at_k(p.answer.value, ranked, 1) if ranked else 0,
                "hit10": accuracy_at_k(p.answer.value, ranked, 10) if ranked else 0,
                "in_space": (p.answer.value in answer_space) if answer_space is not None else True,
            }
        )
    frame = pd.DataFrame(rows, columns=["qid", "hops", "category", "missing", "hit1", "hit10", "in_space"])

    return EvalReport(
        overall=_scores(frame),
        by_hops={str(k): _scores(g) for k, g in sorted(frame.groupby("hops"), key=lambda kv: kv[0])},
        by_category={str(k): _scores(g) for k, g in sorted(frame.groupby("category"), key=lambda kv: kv[0])},
        missing_predictions=int(frame["missing"].sum()),
        unknown_predictions=len(unknown),
        out_of_space=int((~frame["in_space"].astype(bool)).sum()) if answer_space is not None else None,
    )


def oracle_predictions(
    dataset: Iterable[QaPair],
    graphs: Mapping[tuple[str, str], SceneGraph],
    registry: Sequence[QuestionTemplate] | None = None,
) -> PredictionSet:
    """Re-answer every pair from its provenance: the upper-bound baseline.

    Raises:
        DataValidationError: Listing the (city/scene) ids whose graphs are missing.
    """
    pairs = list(dataset)
    missing = sorted({(p.city, p.scene_id) for p in pairs} - set(graphs))
    if missing:
        raise DataValidationError(f"missing scene graphs: {', '.join(f'{c}/{s}' for c, s in missing)}")
    indexes = {key: SceneIndex(g) for key, g in graphs.items()}
    return {p.qid: (reanswer(p, indexes[(p.city, p.scene_id)], registry).value,) for p in pairs}


def majority_baseline(train_pairs: Iterable[QaPair], eval_pairs: Iterable[QaPair]) -> PredictionSet:
    """Predict the ten most frequent normalized train answers for every eval question.

    Raises:
        DataValidationError: If there are no train pairs.
    """
    space = rank_answers(p.answer.value for p in train_pairs)
    if not space.entries:
        raise DataValidationError("majority baseline needs at least one train pair")
    top = tuple(space.answers[:MAX_ANSWERS])
    return {p.qid: top for p in eval_pairs}


def command_snapper(command: str, answer_space_path: str | Path | None = None, timeout: float = 600.0) -> Snapper:
    """Snap answers with an external command.

    The command reads prediction lines on stdin and writes prediction lines on
    stdout. The answer space path, if any, is exported as CITY3DQA_ANSWER_SPACE.
    """

    def snap(preds: PredictionSet) -> PredictionSet:
        payload = "".join(
            json.dumps({"qid": qid, "answers": list(answers)}, ensure_ascii=False) + "\n"
            for qid, answers in sorted(preds.items())
        )
        env = dict(os.environ)
        if answer_space_path is not None:
            env["CITY3DQA_ANSWER_SPACE"] = str(answer_space_path)
        try:
            result = subprocess.run(
                shlex.split(command),
                input=payload,
                capture_output=True,
                text=True,
                check=True,
                timeout=timeout,
                env=env,
            )
        except (OSError, subprocess.SubprocessError) as exc:
            raise ExternalServiceError(f"snap command failed: {exc}") from exc
        return load_predictions(result.stdout.splitlines())

    return snap


def file_sha256(path: str | Path) -> str:
    """Hex SHA-256 of a file, streamed."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_report(report: EvalReport, sink) -> None:
    """Write an evaluation report as indented JSON."""
    sink.write(report.model_dump_json(indent=2))
    sink.write("\n")
