"""Unit tests for point ingestion.

Covers XYZCI and C3PC parsing, format detection, chunked statistics and the
order- and worker-independence of the streamed result.
"""

import io
import math

import numpy as np
import pytest

from city3dqa.exceptions import InstanceClassConflictError, PointParseError
from city3dqa.services.points import (
    MAGIC,
    BinaryPointSource,
    PointChunk,
    PointRecord,
    RunningStats,
    TextPointSource,
    accumulate_chunk,
    detect_format,
    merge_stats,
    open_point_source,
    parse_point_record,
    stream_scene_stats,
    write_c3pc,
    write_xyzci,
)
from city3dqa.services.scene import Vec3


def _text_records(text: str, chunk_records: int = 4) -> list[PointRecord]:
    return list(TextPointSource(io.StringIO(text), chunk_records))


def test_parse_point_record_reads_five_fields():
    """Validate a well-formed line."""
    record = parse_point_record("1.5 -2 3e2 7 42")
    assert record == PointRecord(Vec3(1.5, -2.0, 300.0), 7, 42)


@pytest.mark.parametrize(
    ("line", "field"),
    [
        ("1 2 3 4", None),
        ("1 2 3 4 5 6", None),
        ("1 x 3 4 5", 2),
        ("1 2 nan 4 5", 3),
        ("1 2 3 -1 5", 4),
        ("1 2 3 4 5.5", 5),
    ],
)
def test_parse_point_record_reports_line_and_field(line, field):
    """Validate errors carry the line number and the failing field."""
    with pytest.raises(PointParseError) as err:
        parse_point_record(line, line_number=12)
    assert err.value.line_number == 12
    assert err.value.field == field
    assert "line 12" in str(err.value)


def test_text_source_skips_comments_and_blank_lines():
    """Validate '#' comments and blank lines are ignored and chunks stay in file order."""
    text = "# header\n0 0 0 1 10\n\n1 1 1 1 10\n  # indented comment\n2 2 2 2 20\n3 3 3 2 20\n4 4 4 2 20\n"
    records = _text_records(text, chunk_records=2)
    assert [r.instance_id for r in records] == [10, 10, 20, 20, 20]
    assert records[-1].position == Vec3(4.0, 4.0, 4.0)


def test_text_source_error_carries_file_line_number():
    """Validate the slow path names the offending line of the file, comments included."""
    text = "# header\n0 0 0 1 10\n1 1 one 1 10\n"
    with pytest.raises(PointParseError) as err:
        _text_records(text)
    assert err.value.line_number == 3
    assert err.value.field == 3


def test_text_source_rejects_extra_column_in_every_line():
    """Validate six-field lines are not silently shifted into five columns."""
    with pytest.raises(PointParseError) as err:
        _text_records("9 0 0 0 1 10\n9 1 1 1 1 10\n")
    assert err.value.line_number == 1


def test_binary_source_round_trips_columns(scene_points):
    """Validate the C3PC writer and reader agree bit for bit."""
    positions, classes, ids = scene_points()
    buf = io.BytesIO()
    write_c3pc(buf, positions, classes, ids)
    assert len(buf.getvalue()) == len(MAGIC) + 32 * len(positions)

    buf.seek(0)
    chunks = list(BinaryPointSource(buf, chunk_records=5).iter_chunks())
    got = np.vstack([c.positions for c in chunks])
    assert np.array_equal(got, positions)
    assert np.array_equal(np.concatenate([c.instance_ids for c in chunks]), ids)
    assert all(len(c) <= 5 for c in chunks)


def test_binary_source_rejects_bad_magic():
    """Validate files without the C3PC magic are refused."""
    with pytest.raises(PointParseError):
        list(BinaryPointSource(io.BytesIO(b"NOTC3PC!" + bytes(32))).iter_chunks())


def test_binary_source_reports_truncated_record():
    """Validate a partial trailing record names its 1-based index."""
    buf = io.BytesIO()
    write_c3pc(buf, np.zeros((2, 3)), np.array([1, 1]), np.array([5, 5]))
    data = buf.getvalue()[:-7]
    with pytest.raises(PointParseError) as err:
        list(BinaryPointSource(io.BytesIO(data)).iter_chunks())
    assert err.value.line_number == 2


def test_binary_source_rejects_non_finite_coordinate():
    """Validate NaN coordinates are refused with their record index."""
    positions = np.array([[0.0, 0.0, 0.0], [1.0, math.nan, 0.0]])
    buf = io.BytesIO()
    write_c3pc(buf, positions, np.array([1, 1]), np.array([5, 5]))
    buf.seek(0)
    with pytest.raises(PointParseError) as err:
        list(BinaryPointSource(buf).iter_chunks())
    assert err.value.line_number == 2


def test_detect_format_and_open_point_source(tmp_path, scene_points):
    """Validate auto-detection picks the reader from the magic bytes."""
    positions, classes, ids = scene_points(per_instance=3)
    binary = tmp_path / "cloud.c3pc"
    with open(binary, "wb") as f:
        write_c3pc(f, positions, classes, ids)
    text = tmp_path / "cloud.txt"
    with open(text, "w", encoding="utf-8") as f:
        write_xyzci(f, positions, classes, ids)

    assert detect_format(binary) == "c3pc"
    assert detect_format(text) == "xyzci"

    for path in (binary, text):
        source = open_point_source(path)
        try:
            records = list(source)
        finally:
            source.stream.close()
        assert len(records) == len(positions)
        assert np.array_equal(np.array([r.position for r in records]), positions)


def test_accumulate_chunk_groups_by_instance():
    """Validate counts, sums and extremes per instance."""
    chunk = PointChunk(
        np.array([[0.0, 0.0, 0.0], [2.0, 4.0, 6.0], [1.0, 1.0, 1.0]]),
        np.array([3, 3, 1]),
        np.array([7, 7, 2]),
    )
    stats = accumulate_chunk(chunk)
    assert set(stats) == {2, 7}
    class_id, s = stats[7]
    assert class_id == 3
    assert s.count == 2
    assert s.sum == Vec3(2.0, 4.0, 6.0)
    assert s.min == Vec3(0.0, 0.0, 0.0)
    assert s.max == Vec3(2.0, 4.0, 6.0)


def test_accumulate_chunk_detects_class_conflict():
    """Validate one instance with two class ids is an error."""
    chunk = PointChunk(np.zeros((2, 3)), np.array([1, 2]), np.array([9, 9]))
    with pytest.raises(InstanceClassConflictError):
        accumulate_chunk(chunk)


def test_merge_stats_detects_conflict_across_chunks():
    """Validate conflicts between chunks are caught at merge time."""
    into = {9: (1, RunningStats.of_point(Vec3(0.0, 0.0, 0.0)))}
    with pytest.raises(InstanceClassConflictError):
        merge_stats(into, {9: (2, RunningStats.of_point(Vec3(1.0, 1.0, 1.0)))})


def test_running_stats_merge_is_associative():
    """Validate merge order does not change exact results."""
    a, b, c = (RunningStats.of_point(Vec3(float(i), float(-i), 0.5 * i)) for i in (1, 2, 3))
    assert a.merge(b).merge(c) == a.merge(b.merge(c))
    assert a.merge(b) == b.merge(a)


def test_stream_scene_stats_is_independent_of_chunking_and_jobs(scene_points):
    """Validate chunk size, worker count and record order leave the result unchanged."""
    positions, classes, ids = scene_points(per_instance=50, seed=3)

    def run(chunk_records, jobs, permutation=None):
        order = np.arange(len(ids)) if permutation is None else permutation
        buf = io.BytesIO()
        write_c3pc(buf, positions[order], classes[order], ids[order])
        buf.seek(0)
        return stream_scene_stats(BinaryPointSource(buf, chunk_records), jobs=jobs)

    reference = run(10_000, 1)
    assert run(7, 1) == reference
    assert run(7, 4) == reference
    shuffled = np.random.default_rng(11).permutation(len(ids))
    assert run(13, 3, shuffled) == reference
    assert list(reference) == sorted(reference)


def test_stream_scene_stats_accepts_plain_records():
    """Validate any iterable of records can be streamed."""
    records = [PointRecord(Vec3(float(i), 0.0, 0.0), 1, i % 2) for i in range(5)]
    stats = stream_scene_stats(records, chunk_records=2)
    assert stats[0][1].count == 3
    assert stats[1][1].count == 2
    assert stats[0][1].sum == Vec3(6.0, 0.0, 0.0)
