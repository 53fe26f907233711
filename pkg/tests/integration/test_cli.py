"""End-to-end tests of the command-line tool: files in, files out, exit codes."""

import io
import json
import os

import pytest
import requests

from city3dqa.main import EXIT_DATA, EXIT_DEGRADED, EXIT_OK, EXIT_USAGE, dispatch
from city3dqa.services.logger import RunLog
from city3dqa.services.points import write_xyzci

pytestmark = pytest.mark.integration


class DummyLedger:
    """Captures run ledger writes."""

    def __init__(self):
        self.calls = []

    def add_run(self, *args, **kwargs):
        """Record one ledger call."""
        self.calls.append({"args": args, "kwargs": kwargs})


@pytest.fixture(autouse=True)
def isolated(monkeypatch, tmp_path):
    """Run every command from an empty directory without CITY3DQA_ variables."""
    monkeypatch.chdir(tmp_path)
    for name in list(os.environ):
        if name.startswith("CITY3DQA_"):
            monkeypatch.delenv(name)


@pytest.fixture
def run(capsys):
    """Call the CLI and return (exit code, stdout, stderr)."""

    def _run(*argv) -> tuple[int, str, str]:
        status = dispatch([str(a) for a in argv])
        captured = capsys.readouterr()
        return status, captured.out, captured.err

    return _run


@pytest.fixture
def inputs(tmp_path, scene_points, class_map, lexicon_data, regions_data):
    """Point file, class map, lexicon, overrides and regions of the test scene."""
    positions, classes, ids = scene_points(per_instance=8, seed=2)
    points = tmp_path / "s1.xyzci"
    with open(points, "w", encoding="utf-8") as f:
        write_xyzci(f, positions, classes, ids)

    def dump(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return {
        "points": points,
        "class_map": dump("classes.json", {str(k): v for k, v in class_map.items()}),
        "lexicon": dump("lexicon.json", lexicon_data),
        "overrides": dump("overrides.json", {"1": "bank", "2": "restaurant", "3": "school"}),
        "regions": dump("regions.json", regions_data),
    }


@pytest.fixture
def graphs(tmp_path, run, inputs):
    """Ingest the points and build the scene graph directory."""
    manifest = tmp_path / "s1.manifest.json"
    status, _, err = run(
        "ingest", inputs["points"], "--class-map", inputs["class_map"], "--city", "Testville",
        "--lexicon", inputs["lexicon"], "--overrides", inputs["overrides"],
        "--chunk-records", 5, "--jobs", 2, "-o", manifest,
    )
    assert status == EXIT_OK, err
    out_dir = tmp_path / "graphs"
    status, _, err = run("graph", manifest, "--lexicon", inputs["lexicon"], "--regions", inputs["regions"],
                         "-o", out_dir)
    assert status == EXIT_OK, err
    return out_dir


@pytest.fixture
def dataset(tmp_path, run, graphs):
    """A generated dataset file."""
    path = tmp_path / "data.jsonl"
    status, _, err = run("generate", graphs, "--seed", 3, "--per-template-limit", 5, "-o", path)
    assert status == EXIT_OK, err
    return path


def test_ingest_and_graph_write_expected_files(tmp_path, graphs):
    """Validate the manifest and the graph file named after city and scene."""
    manifest = json.loads((tmp_path / "s1.manifest.json").read_text(encoding="utf-8"))
    assert (manifest["city"], manifest["scene_id"]) == ("Testville", "s1")
    assert [i["category_label"] for i in manifest["instances"]] == [
        "bank", "restaurant", "school", "tree", "tree", "car",
    ]
    graph = json.loads((graphs / "Testville__s1.graph.json").read_text(encoding="utf-8"))
    assert len(graph["spatial_edges"]) == 30


def test_generate_is_reproducible(tmp_path, run, graphs, dataset):
    """Validate the same seed gives byte-identical output for any worker count."""
    again = tmp_path / "again.jsonl"
    status, _, _ = run("generate", "--jobs", 4, graphs, "--seed", 3, "--per-template-limit", 5, "-o", again)
    assert status == EXIT_OK
    assert again.read_bytes() == dataset.read_bytes()

    other = tmp_path / "other.jsonl"
    run("generate", graphs, "--seed", 4, "--per-template-limit", 5, "-o", other)
    assert other.read_bytes() != dataset.read_bytes()


def test_split_baseline_and_eval(tmp_path, run, graphs, dataset):
    """Validate the oracle baseline scores 1.0 on the test part and the report carries file digests."""
    split = tmp_path / "split.json"
    assert run("split", dataset, "-o", split)[0] == EXIT_OK
    parts = json.loads(split.read_text(encoding="utf-8"))
    assert parts["mode"] == "sentence_wise"
    assert parts["test"]

    preds = tmp_path / "oracle.jsonl"
    assert run("baseline", dataset, "--graphs", graphs, "--split", split, "-o", preds)[0] == EXIT_OK
    assert len(preds.read_text(encoding="utf-8").splitlines()) == len(parts["test"])

    status, out, err = run("eval", dataset, preds, "--split", split)
    assert status == EXIT_OK, err
    report = json.loads(out)
    assert report["overall"]["count"] == len(parts["test"])
    assert report["overall"]["acc_at_1"] == 1.0
    assert report["metadata"]["split"]["part"] == "test"
    assert len(report["metadata"]["dataset"]["sha256"]) == 64

    majority = tmp_path / "majority.jsonl"
    status, _, _ = run("baseline", dataset, "--kind", "majority", "--train", dataset, "--split", split, "-o", majority)
    assert status == EXIT_OK
    status, out, _ = run("eval", dataset, majority, "--split", split)
    assert json.loads(out)["overall"]["acc_at_1"] < 1.0


def test_answer_space_and_stats(tmp_path, run, dataset):
    """Validate the answer space and statistics outputs."""
    status, out, _ = run("answer-space", dataset)
    assert status == EXIT_OK
    counts = [e["count"] for e in json.loads(out)["entries"]]
    assert counts == sorted(counts, reverse=True)

    plot = tmp_path / "stats.html"
    status, out, _ = run("stats", dataset, "--plot", plot)
    assert status == EXIT_OK
    assert json.loads(out)["total"] == len(dataset.read_text(encoding="utf-8").splitlines())
    assert plot.exists()


def test_query_one_question(run, graphs):
    """Validate a direct question with slot bindings."""
    status, out, err = run(
        "query", graphs / "Testville__s1.graph.json", "--template", "SC-05",
        "--bind", "instance label 1=the school", "--bind", "instance_label_2=the bank",
    )
    assert status == EXIT_OK, err
    assert out == "In which direction is the school relative to the bank?\nfront\n"

    status, _, err = run("query", graphs / "Testville__s1.graph.json", "--template", "SC-05",
                         "--bind", "instance label 1=the castle", "--bind", "instance label 2=the bank")
    assert status == EXIT_DATA
    assert "castle" in err


def test_graph_front_bearing_drives_later_commands(tmp_path, monkeypatch, run, graphs):
    """Validate generate and query answer with the front the graph was built with, whatever the settings say."""
    rotated = tmp_path / "rotated"
    status, _, err = run(
        "graph", tmp_path / "s1.manifest.json", "--lexicon", tmp_path / "lexicon.json",
        "--regions", tmp_path / "regions.json", "--edge-policy", "k_nearest", "--edge-k", 1,
        "--front-bearing", 0, "-o", rotated,
    )
    assert status == EXIT_OK, err
    graph_file = rotated / "Testville__s1.graph.json"
    graph = json.loads(graph_file.read_text(encoding="utf-8"))
    assert graph["front_bearing"] == 0.0
    assert not any((e["head"], e["tail"]) == (1, 3) for e in graph["spatial_edges"])

    monkeypatch.setenv("CITY3DQA_FRONT_BEARING", "90")
    status, out, err = run(
        "query", graph_file, "--template", "SC-05",
        "--bind", "instance label 1=the school", "--bind", "instance label 2=the bank",
    )
    assert status == EXIT_OK, err
    assert out.endswith("\nleft\n")

    data = tmp_path / "rotated.jsonl"
    status, _, err = run("generate", rotated, "--seed", 3, "--per-template-limit", 5, "-o", data)
    assert status == EXIT_OK, err
    records = [json.loads(line) for line in data.read_text(encoding="utf-8").splitlines()]
    assert records
    assert {r["provenance"]["oracle_params"]["front_bearing"] for r in records} == {0.0}


def test_query_repl(monkeypatch, run, graphs):
    """Validate the interactive loop answers, reports errors and stops on an empty id."""
    monkeypatch.setattr("sys.stdin", io.StringIO("RQ-02\nthe school\nXX-99\n\nignored\n"))
    status, out, _ = run("query", graphs / "Testville__s1.graph.json", "--repl")
    assert status == EXIT_OK
    assert out.startswith("scene Testville/s1: 6 instances\n")
    assert "Where is the location of the school?\nnortheast area\n" in out
    assert "error: unknown template id 'XX-99'" in out


def test_list_templates(run):
    """Validate the registry listing needs no scene."""
    status, out, _ = run("query", "--list-templates")
    assert status == EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 31
    assert lines[0].split("\t") == ["II-01", "instance_identification", "single", "Is there any [instance label]?"]


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["generate"],
        ["split", "data.jsonl", "--mode", "random"],
        ["generate", "graphs", "--jobs", "0"],
        ["split", "data.jsonl", "--ratios", "0.5", "0.5", "-0.1"],
    ],
)
def test_usage_errors_exit_1(run, argv):
    """Validate missing, unknown and out-of-range arguments."""
    status, _, err = run(*argv)
    assert status == EXIT_USAGE
    assert err


@pytest.mark.parametrize("flag", ["--help", "--version"])
def test_help_and_version_exit_0(run, flag):
    """Validate informational flags succeed."""
    status, out, _ = run(flag)
    assert status == EXIT_OK
    assert "city3dqa" in out


def test_data_errors_exit_2(tmp_path, run, inputs, graphs, dataset):
    """Validate malformed inputs and incomplete configuration."""
    bad = tmp_path / "bad.xyzci"
    bad.write_text("0 0 0 0 1\n0 0 zero 0 1\n", encoding="utf-8")
    status, _, err = run("ingest", bad, "--class-map", inputs["class_map"], "--city", "X")
    assert status == EXIT_DATA
    assert "line 2" in err

    status, _, err = run("split", dataset, "--mode", "city")
    assert status == EXIT_DATA
    assert "Testville" in err

    assert run("eval", dataset, tmp_path / "missing.jsonl")[0] == EXIT_DATA
    assert run("generate", graphs, "--paraphrase")[0] == EXIT_DATA
    assert run("generate", tmp_path / "empty-dir-that-does-not-exist")[0] == EXIT_DATA


def test_paraphrase_failures_exit_3(tmp_path, monkeypatch, run, graphs, dataset):
    """Validate unreachable endpoints keep the template questions and exit 3."""

    def refuse(*_args, **_kwargs):
        raise requests.ConnectionError("refused")

    monkeypatch.setattr(requests, "post", refuse)
    out = tmp_path / "para.jsonl"
    status, _, _ = run(
        "generate", graphs, "--seed", 3, "--per-template-limit", 5, "--paraphrase",
        "--llm-endpoint", "http://127.0.0.1:9/v1/chat/completions", "--llm-max-in-flight", 2, "-o", out,
    )
    assert status == EXIT_DEGRADED
    assert out.read_bytes() == dataset.read_bytes()


def test_runs_are_recorded_in_the_ledger(monkeypatch, run, dataset):
    """Validate each invocation is written to the ledger when a URL is configured."""
    ledger = DummyLedger()
    monkeypatch.setattr(RunLog, "add_run", ledger.add_run)
    monkeypatch.setenv("CITY3DQA_RUN_LOG_URL", "sqlite://")

    run("stats", dataset)
    run("split", dataset, "--mode", "city")

    assert [c["args"][1] for c in ledger.calls] == ["stats", "split"]
    assert [c["args"][3] for c in ledger.calls] == [EXIT_OK, EXIT_DATA]
    assert ledger.calls[0]["args"][2]["dataset"] == str(dataset)
    assert "Testville" in ledger.calls[1]["kwargs"]["error"]
