"""XYZCI text reader: one `x y z class_id instance_id` record per line, '#' comments."""

import io
import math
from collections.abc import Iterator

import numpy as np
import pandas as pd

from ...exceptions import PointParseError
from ..scene import Vec3
from .PointSource import PointChunk, PointRecord, PointSource

FIELD_COUNT = 5


def is_data_line(line: str) -> bool:
    """Return False for blank lines and '#' comments."""
    stripped = line.strip()
    return bool(stripped) and not stripped.startswith("#")


def parse_point_record(line: str, line_number: int | None = None) -> PointRecord:
    """Parse one XYZCI line.

    Args:
        line (str): A data line (not blank, not a comment).
        line_number (int | None): 1-based line number used in error messages.

    Returns:
        PointRecord: The parsed record.

    Raises:
        PointParseError: On a wrong field count, an unparsable number or a negative id.
    """
    fields = line.split()
    if len(fields) != FIELD_COUNT:
        raise PointParseError(f"expected {FIELD_COUNT} fields, got {len(fields)}", line_number)

    coords = []
    for index, token in enumerate(fields[:3], start=1):
        try:
            value = float(token)
        except ValueError:
            raise PointParseError(f"cannot parse coordinate {token!r}", line_number, index) from None
        if not math.isfinite(value):
            raise PointParseError(f"non-finite coordinate {token!r}", line_number, index)
        coords.append(value)

    ids = []
    for index, token in enumerate(fields[3:], start=4):
        try:
            value = int(token)
        except ValueError:
            raise PointParseError(f"cannot parse id {token!r}", line_number, index) from None
        if value < 0:
            raise PointParseError(f"negative id {value}", line_number, index)
        ids.append(value)

    return PointRecord(Vec3(*coords), ids[0], ids[1])


def write_xyzci(stream, positions: np.ndarray, class_ids: np.ndarray, instance_ids: np.ndarray) -> None:
    """Write column arrays as XYZCI lines (coordinates round-trip exactly)."""
    table = np.column_stack([positions, class_ids, instance_ids])
    np.savetxt(stream, table, fmt=["%.17g", "%.17g", "%.17g", "%d", "%d"])


class TextPointSource(PointSource):
    """Point source reading the XYZCI text format."""

    name = "XYZCI"

    def iter_chunks(self) -> Iterator[PointChunk]:
        """Yield chunks of parsed lines, keeping line numbers for error messages."""
        batch: list[str] = []
        numbers: list[int] = []
        for line_number, line in enumerate(self.stream, start=1):
            if not is_data_line(line):
                continue
            batch.append(line)
            numbers.append(line_number)
            if len(batch) >= self.chunk_records:
                yield self._parse_batch(batch, numbers)
                batch, numbers = [], []
        if batch:
            yield self._parse_batch(batch, numbers)

    @staticmethod
    def _parse_batch(batch: list[str], numbers: list[int]) -> PointChunk:
        """Parse a batch with the pandas C parser, falling back to per-line parsing for diagnostics."""
        try:
            frame = pd.read_csv(
                io.StringIO("".join(line if line.endswith("\n") else line + "\n" for line in batch)),
                sep=r"\s+",
                header=None,
                index_col=False,
                dtype={0: np.float64, 1: np.float64, 2: np.float64, 3: np.int64, 4: np.int64},
                engine="c",
            )
        except (ValueError, OverflowError, pd.errors.ParserError):
            frame = None

        if frame is not None and frame.shape == (len(batch), FIELD_COUNT):
            positions = frame[[0, 1, 2]].to_numpy(dtype=np.float64)
            class_ids = frame[3].to_numpy(dtype=np.int64)
            instance_ids = frame[4].to_numpy(dtype=np.int64)
            if np.isfinite(positions).all() and (class_ids >= 0).all() and (instance_ids >= 0).all():
                return PointChunk(np.ascontiguousarray(positions), class_ids, instance_ids)

        # Slow path: find the offending line and raise with its number.
        records = [parse_point_record(line, number) for line, number in zip(batch, numbers)]
        return PointChunk.from_records(records)
