"""Unit tests for prediction files, Top@k scoring, baselines and answer snapping."""

import io
import shlex
import sys

import pytest

from city3dqa.exceptions import DataValidationError, ExternalServiceError, PredictionFormatError
from city3dqa.services.dataset import GenerationConfig, Provenance, QaPair, generate_pairs, rank_answers
from city3dqa.services.evaluation import (
    StratumScore,
    accuracy_at_k,
    command_snapper,
    evaluate,
    file_sha256,
    load_predictions,
    majority_baseline,
    oracle_predictions,
    write_predictions,
)
from city3dqa.services.oracle import Answer, OracleParams
from city3dqa.services.templates import AnswerKind, Binding, Category, Hops


def _qa(qid: str, category: Category, value: str, kind: AnswerKind = AnswerKind.YES_NO) -> QaPair:
    hops = Hops.MULTI if category in (Category.SPATIAL_COMPARISON, Category.USAGE_COMPARISON) else Hops.SINGLE
    return QaPair(
        qid=qid,
        city="Testville",
        scene_id="s1",
        category=category,
        hops=hops,
        question=f"question {qid}?",
        answer=Answer(kind=kind, value=value),
        provenance=Provenance(template_id="II-01", binding=Binding(values={}), oracle_params=OracleParams()),
    )


@pytest.fixture
def gold():
    """Two single-hop and two multi-hop questions."""
    return [
        _qa("0000000000000001", Category.INSTANCE_IDENTIFICATION, "yes"),
        _qa("0000000000000002", Category.INSTANCE_IDENTIFICATION, "3", AnswerKind.COUNT),
        _qa("0000000000000003", Category.SPATIAL_COMPARISON, "the bank", AnswerKind.INSTANCE_CHOICE),
        _qa("0000000000000004", Category.USAGE_COMPARISON, "equal", AnswerKind.INSTANCE_CHOICE),
    ]


@pytest.fixture
def preds():
    """Top@1 hit, Top@10 hit, normalized Top@1 hit, missing, plus one unknown qid."""
    return {
        "0000000000000001": ("Yes",),
        "0000000000000002": ("2", "three"),
        "0000000000000003": ("Bank",),
        "ffffffffffffffff": ("no",),
    }


def test_accuracy_at_k_normalizes():
    """Validate normalization on both sides and the k cut-off."""
    assert accuracy_at_k("3", ["2", "three"], 10) == 1
    assert accuracy_at_k("3", ["2", "three"], 1) == 0
    assert accuracy_at_k("The Bank", ["bank"], 1) == 1
    with pytest.raises(ValueError):
        accuracy_at_k("yes", ["yes"], 0)


def test_evaluate_overall_and_strata(gold, preds):
    """Validate overall, per-hop and per-category accuracy with a missing and an unknown prediction."""
    report = evaluate(gold, preds)
    assert report.overall == StratumScore(count=4, acc_at_1=0.5, acc_at_10=0.75)
    assert report.by_hops == {
        "multi": StratumScore(count=2, acc_at_1=0.5, acc_at_10=0.5),
        "single": StratumScore(count=2, acc_at_1=0.5, acc_at_10=1.0),
    }
    assert list(report.by_category) == ["instance_identification", "spatial_comparison", "usage_comparison"]
    assert report.by_category["usage_comparison"].acc_at_10 == 0.0
    assert report.missing_predictions == 1
    assert report.unknown_predictions == 1
    assert report.out_of_space is None


def test_evaluate_counts_golds_outside_answer_space(gold, preds):
    """Validate out-of-space golds are counted when an answer space is given."""
    report = evaluate(gold, preds, answer_space=rank_answers(["Yes", "three"]))
    assert report.out_of_space == 2


def test_evaluate_empty_dataset():
    """Validate an empty dataset scores zero without failing."""
    report = evaluate([], {})
    assert report.overall == StratumScore(count=0, acc_at_1=0.0, acc_at_10=0.0)
    assert report.by_hops == {}


def test_load_predictions_and_errors():
    """Validate normalized duplicates collapse and malformed lines name their line."""
    text = '{"qid": "a", "answers": ["Yes", "yes", "no"]}\n\n{"qid": "b", "answers": ["2"]}\n'
    preds = load_predictions(io.StringIO(text))
    assert preds == {"a": ("Yes", "no"), "b": ("2",)}

    bad = [
        '{"qid": "a", "answers": ["x"]}\n{"qid": "a", "answers": ["y"]}\n',
        '{"qid": "a", "answers": []}\n',
        '{"qid": "a", "answers": ' + str([str(i) for i in range(11)]).replace("'", '"') + "}\n",
        '{"qid": "a", "answers": ["x"], "score": 1}\n',
        "not json\n",
    ]
    for text in bad:
        with pytest.raises(PredictionFormatError, match="line"):
            load_predictions(io.StringIO(text))


def test_write_predictions_sorted(preds):
    """Validate qid order and that the output reads back."""
    buf = io.StringIO()
    write_predictions(preds, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith('{"qid": "0000000000000001"')
    assert load_predictions(io.StringIO(buf.getvalue())) == preds


def test_majority_baseline(gold):
    """Validate the most frequent train answers are predicted everywhere."""
    train = [_qa(f"{i:016x}", Category.INSTANCE_IDENTIFICATION, v) for i, v in enumerate(["yes", "no", "yes", "3"])]
    preds = majority_baseline(train, gold)
    assert preds["0000000000000001"] == ("yes", "3", "no")
    assert set(preds) == {p.qid for p in gold}
    with pytest.raises(DataValidationError):
        majority_baseline([], gold)


def test_oracle_baseline_scores_perfectly(scene_graph):
    """Validate re-answered predictions score 1.0 and missing graphs are reported."""
    pairs = generate_pairs(scene_graph, config=GenerationConfig(per_template_limit=4))
    preds = oracle_predictions(pairs, {scene_graph.key: scene_graph})
    report = evaluate(pairs, preds)
    assert report.overall.acc_at_1 == 1.0
    assert report.missing_predictions == 0
    with pytest.raises(DataValidationError, match="Testville/s1"):
        oracle_predictions(pairs, {})


def test_command_snapper(tmp_path, gold):
    """Validate answers are rewritten by the external command, which sees the answer space path."""
    script = tmp_path / "snap.py"
    script.write_text(
        "import json, os, sys\n"
        "for line in sys.stdin:\n"
        "    record = json.loads(line)\n"
        "    answer = 'yes' if record['qid'].endswith('1') else os.environ['CITY3DQA_ANSWER_SPACE']\n"
        "    print(json.dumps({'qid': record['qid'], 'answers': [answer]}))\n",
        encoding="utf-8",
    )
    snap = command_snapper(f"{shlex.quote(sys.executable)} {shlex.quote(str(script))}", "space.json")
    snapped = snap({"0000000000000001": ("Yeah",), "0000000000000002": ("3",)})
    assert snapped == {"0000000000000001": ("yes",), "0000000000000002": ("space.json",)}

    report = evaluate(gold, {"0000000000000001": ("Yeah",)}, snap=snap)
    assert report.overall.acc_at_1 == 0.25

    with pytest.raises(ExternalServiceError):
        command_snapper(str(tmp_path / "missing-binary"))({"a": ("x",)})


def test_file_sha256(tmp_path):
    """Validate the digest of a known input."""
    path = tmp_path / "abc.txt"
    path.write_bytes(b"abc")
    assert file_sha256(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
