"""Abstract interface and shared record types for labeled point readers."""

from abc import ABC, abstractmethod
from collections.abc import Iterator
from typing import NamedTuple

import numpy as np

from ..scene import Vec3

DEFAULT_CHUNK_RECORDS = 1 << 18


class PointRecord(NamedTuple):
    """One labeled point."""

    position: Vec3
    class_id: int
    instance_id: int


class PointChunk(NamedTuple):
    """A batch of labeled points held as columns."""

    positions: np.ndarray  # (n, 3) float64
    class_ids: np.ndarray  # (n,) int64
    instance_ids: np.ndarray  # (n,) int64

    def __len__(self) -> int:
        """Number of points in the chunk."""
        return int(self.positions.shape[0])

    @staticmethod
    def from_records(records: list[PointRecord]) -> "PointChunk":
        """Pack a list of records into column arrays."""
        if not records:
            return PointChunk(np.empty((0, 3)), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
        return PointChunk(
            np.array([r.position for r in records], dtype=np.float64),
            np.array([r.class_id for r in records], dtype=np.int64),
            np.array([r.instance_id for r in records], dtype=np.int64),
        )


class PointSource(ABC):
    """Abstract base class for sequential point-record sources."""

    name: str  # The wire format handled by the implementation.

    def __init__(self, stream, chunk_records: int = DEFAULT_CHUNK_RECORDS):
        """Wrap an open stream.

        Args:
            stream: Open file object (text or binary depending on the format).
            chunk_records (int, optional): Maximum records per chunk.
        """
        if chunk_records < 1:
            raise ValueError("chunk_records must be positive")
        self.stream = stream
        self.chunk_records = chunk_records

    @abstractmethod
    def iter_chunks(self) -> Iterator[PointChunk]:
        """Yield the source as consecutive column chunks in file order.

        Returns:
            Iterator[PointChunk]: Chunks of at most `chunk_records` points.
        """
        pass

    def __iter__(self) -> Iterator[PointRecord]:
        """Yield single records; convenient for small sources and tests."""
        for chunk in self.iter_chunks():
            for pos, cls, inst in zip(chunk.positions.tolist(), chunk.class_ids.tolist(), chunk.instance_ids.tolist()):
                yield PointRecord(Vec3(*pos), cls, inst)
