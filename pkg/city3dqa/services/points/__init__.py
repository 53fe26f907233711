"""Labeled point readers and streaming statistics."""

from pathlib import Path
from typing import Literal

from .BinaryPointSource import MAGIC, BinaryPointSource, write_c3pc
from .PointSource import DEFAULT_CHUNK_RECORDS, PointChunk, PointRecord, PointSource
from .stats import RunningStats, accumulate_chunk, merge_stats, stream_scene_stats
from .TextPointSource import TextPointSource, parse_point_record, write_xyzci

__all__ = [
    "BinaryPointSource",
    "DEFAULT_CHUNK_RECORDS",
    "PointChunk",
    "PointRecord",
    "PointSource",
    "RunningStats",
    "TextPointSource",
    "accumulate_chunk",
    "detect_format",
    "merge_stats",
    "open_point_source",
    "parse_point_record",
    "stream_scene_stats",
    "write_c3pc",
    "write_xyzci",
]

PointFormat = Literal["auto", "xyzci", "c3pc"]


def detect_format(path: str | Path) -> Literal["xyzci", "c3pc"]:
    """Pick C3PC when the file starts with its magic, XYZCI otherwise."""
    with open(path, "rb") as f:
        head = f.read(len(MAGIC))
    return "c3pc" if head == MAGIC else "xyzci"


def open_point_source(path: str | Path, fmt: PointFormat = "auto", chunk_records: int = DEFAULT_CHUNK_RECORDS):
    """Open `path` and wrap it in the matching reader.

    The caller owns the returned reader's stream and should close it
    (`reader.stream.close()`), or use the reader inside a `with` on the stream.

    Args:
        path (str | Path): Point file.
        fmt (PointFormat, optional): "xyzci", "c3pc" or "auto". Defaults to "auto".
        chunk_records (int, optional): Records per chunk.

    Returns:
        PointSource: The reader.
    """
    if fmt == "auto":
        fmt = detect_format(path)
    if fmt == "c3pc":
        return BinaryPointSource(open(path, "rb"), chunk_records)
    return TextPointSource(open(path, encoding="utf-8"), chunk_records)
