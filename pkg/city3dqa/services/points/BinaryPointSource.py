"""C3PC binary reader: 8-byte magic, then little-endian `3 x float64 + 2 x uint32` records."""

from collections.abc import Iterator

import numpy as np

from ...exceptions import PointParseError
from .PointSource import PointChunk, PointSource

MAGIC = b"C3PC\x00\x00\x00\x01"
RECORD_DTYPE = np.dtype(
    [("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("class_id", "<u4"), ("instance_id", "<u4")]
)
RECORD_SIZE = RECORD_DTYPE.itemsize  # 32 bytes, no padding


def write_c3pc(stream, positions: np.ndarray, class_ids: np.ndarray, instance_ids: np.ndarray) -> None:
    """Write column arrays as a C3PC file to a binary stream.

    Args:
        stream: Binary file object opened for writing.
        positions (np.ndarray): (n, 3) float coordinates.
        class_ids (np.ndarray): (n,) non-negative class ids below 2**32.
        instance_ids (np.ndarray): (n,) non-negative instance ids below 2**32.
    """
    records = np.empty(len(positions), dtype=RECORD_DTYPE)
    if len(records):
        positions = np.asarray(positions, dtype=np.float64)
        records["x"], records["y"], records["z"] = positions[:, 0], positions[:, 1], positions[:, 2]
        records["class_id"] = class_ids
        records["instance_id"] = instance_ids
    stream.write(MAGIC)
    stream.write(records.tobytes())


class BinaryPointSource(PointSource):
    """Point source reading the C3PC binary format."""

    name = "C3PC"

    def iter_chunks(self) -> Iterator[PointChunk]:
        """Validate the magic, then yield fixed-size record blocks.

        Raises:
            PointParseError: On a wrong magic, a truncated trailing record or a non-finite coordinate.
                The line number of the error is the 1-based record index.
        """
        magic = self.stream.read(len(MAGIC))
        if magic != MAGIC:
            raise PointParseError(f"bad C3PC magic {magic!r}")

        first_record = 1
        block_bytes = self.chunk_records * RECORD_SIZE
        while True:
            data = self.stream.read(block_bytes)
            if not data:
                return
            whole = len(data) - len(data) % RECORD_SIZE
            if whole != len(data):
                raise PointParseError(
                    f"truncated record ({len(data) - whole} of {RECORD_SIZE} bytes)",
                    first_record + whole // RECORD_SIZE,
                )
            records = np.frombuffer(data, dtype=RECORD_DTYPE)
            positions = np.column_stack([records["x"], records["y"], records["z"]])

            finite = np.isfinite(positions).all(axis=1)
            if not finite.all():
                bad = int(np.argmin(finite))
                raise PointParseError(f"non-finite coordinate {positions[bad].tolist()}", first_record + bad)

            yield PointChunk(
                positions,
                records["class_id"].astype(np.int64),
                records["instance_id"].astype(np.int64),
            )
            first_record += len(records)
