"""Single-pass per-instance statistics over point chunks.

Each chunk is reduced with numpy (sort by instance id, then `reduceat`), and
chunk results are merged in file order. Memory grows with the number of
instances, never with the number of points. Sums are order-dependent in
floating point; they match a sequential pass bit-for-bit whenever partial
sums are exactly representable (e.g. dyadic coordinates).
"""

import logging
from collections import deque
from collections.abc import Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import islice

import numpy as np
from tqdm import tqdm

from ...exceptions import InstanceClassConflictError
from ..scene import Vec3
from .PointSource import DEFAULT_CHUNK_RECORDS, PointChunk, PointRecord, PointSource

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunningStats:
    """Count, componentwise sum and extremes of one instance's points."""

    count: int
    sum: Vec3
    min: Vec3
    max: Vec3

    @staticmethod
    def of_point(p: Vec3) -> "RunningStats":
        """Stats of a single point."""
        p = Vec3(*map(float, p))
        return RunningStats(1, p, p, p)

    def merge(self, other: "RunningStats") -> "RunningStats":
        """Combine two disjoint accumulations (associative and commutative)."""
        return RunningStats(
            self.count + other.count,
            Vec3(*(a + b for a, b in zip(self.sum, other.sum))),
            Vec3(*(min(a, b) for a, b in zip(self.min, other.min))),
            Vec3(*(max(a, b) for a, b in zip(self.max, other.max))),
        )


InstanceStats = dict[int, tuple[int, RunningStats]]


def accumulate_chunk(chunk: PointChunk) -> InstanceStats:
    """Reduce one chunk to per-instance (class_id, RunningStats).

    Args:
        chunk (PointChunk): Column arrays of one chunk.

    Returns:
        InstanceStats: Mapping instance_id -> (class_id, stats).

    Raises:
        InstanceClassConflictError: If an instance carries two class ids within the chunk.
    """
    n = len(chunk)
    if n == 0:
        return {}

    order = np.argsort(chunk.instance_ids, kind="stable")
    ids = chunk.instance_ids[order]
    classes = chunk.class_ids[order]
    positions = chunk.positions[order]

    starts = np.concatenate(([0], np.flatnonzero(np.diff(ids)) + 1))
    counts = np.diff(np.append(starts, n))
    sums = np.add.reduceat(positions, starts, axis=0)
    mins = np.minimum.reduceat(positions, starts, axis=0)
    maxs = np.maximum.reduceat(positions, starts, axis=0)
    class_lo = np.minimum.reduceat(classes, starts)
    class_hi = np.maximum.reduceat(classes, starts)

    conflicts = np.flatnonzero(class_lo != class_hi)
    if conflicts.size:
        k = int(conflicts[0])
        raise InstanceClassConflictError(
            f"instance {int(ids[starts[k]])} observed with class ids {int(class_lo[k])} and {int(class_hi[k])}"
        )

    result: InstanceStats = {}
    for k, start in enumerate(starts.tolist()):
        result[int(ids[start])] = (
            int(class_lo[k]),
            RunningStats(int(counts[k]), Vec3(*sums[k].tolist()), Vec3(*mins[k].tolist()), Vec3(*maxs[k].tolist())),
        )
    return result


def merge_stats(into: InstanceStats, part: InstanceStats) -> InstanceStats:
    """Merge `part` into `into` in place and return it.

    Raises:
        InstanceClassConflictError: If an instance has different class ids in the two maps.
    """
    for instance_id, (class_id, stats) in part.items():
        seen = into.get(instance_id)
        if seen is None:
            into[instance_id] = (class_id, stats)
            continue
        if seen[0] != class_id:
            raise InstanceClassConflictError(
                f"instance {instance_id} observed with class ids {seen[0]} and {class_id}"
            )
        into[instance_id] = (class_id, seen[1].merge(stats))
    return into


def _record_chunks(records: Iterable[PointRecord], chunk_records: int) -> Iterator[PointChunk]:
    it = iter(records)
    while batch := list(islice(it, chunk_records)):
        yield PointChunk.from_records(batch)


def stream_scene_stats(
    source: PointSource | Iterable[PointRecord],
    jobs: int = 1,
    progress: bool = False,
    chunk_records: int = DEFAULT_CHUNK_RECORDS,
) -> InstanceStats:
    """Accumulate per-instance statistics in one pass over a point source.

    Args:
        source (PointSource | Iterable[PointRecord]): A reader or any iterable of records.
        jobs (int, optional): Worker threads reducing chunks. Defaults to 1.
        progress (bool, optional): Show a tqdm progress bar counting points. Defaults to False.
        chunk_records (int, optional): Chunk size used for plain record iterables.

    Returns:
        InstanceStats: Mapping instance_id -> (class_id, stats), in ascending id order.

    Raises:
        InstanceClassConflictError: If one instance id is seen with two class ids.
        PointParseError: Propagated from the reader.
    """
    if isinstance(source, PointSource):
        chunks = source.iter_chunks()
    else:
        chunks = _record_chunks(source, chunk_records)

    result: InstanceStats = {}
    bar = tqdm(unit="pt", unit_scale=True, disable=not progress, desc="points")
    try:
        if jobs <= 1:
            for chunk in chunks:
                merge_stats(result, accumulate_chunk(chunk))
                bar.update(len(chunk))
        else:
            # At most 2 * jobs chunks are held in memory; results merge in submission order.
            window: deque = deque()
            with ThreadPoolExecutor(max_workers=jobs) as executor:
                for chunk in chunks:
                    window.append((len(chunk), executor.submit(accumulate_chunk, chunk)))
                    if len(window) >= 2 * jobs:
                        size, future = window.popleft()
                        merge_stats(result, future.result())
                        bar.update(size)
                while window:
                    size, future = window.popleft()
                    merge_stats(result, future.result())
                    bar.update(size)
    finally:
        bar.close()

    logger.info("accumulated %d instances", len(result))
    return dict(sorted(result.items()))
