"""Streaming ingest on large binary point files: bounded memory and exact centroids."""

import time
import tracemalloc

import numpy as np
import pytest

from city3dqa.services.points import MAGIC, BinaryPointSource, stream_scene_stats
from city3dqa.services.points.BinaryPointSource import RECORD_DTYPE

pytestmark = [pytest.mark.analysis, pytest.mark.benchmark, pytest.mark.slow]

INSTANCES = 500
POINTS = 10_000_000
WRITE_BLOCK = 1_000_000
CHUNK_RECORDS = 200_000
MAX_PEAK_BYTES = 100 * 1024 * 1024
MAX_SECONDS = 60.0


def write_cloud(path, points: int, seed: int = 0):
    """Write a C3PC file of Gaussian blobs and return per-instance (count, sum) computed while writing."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(1000.0, 2000.0, size=(INSTANCES, 3))
    class_of = np.arange(INSTANCES) % 4
    counts = np.zeros(INSTANCES, dtype=np.int64)
    sums = np.zeros((INSTANCES, 3))

    with open(path, "wb") as f:
        f.write(MAGIC)
        for start in range(0, points, WRITE_BLOCK):
            n = min(WRITE_BLOCK, points - start)
            ids = rng.integers(0, INSTANCES, size=n)
            positions = centers[ids] + rng.normal(0.0, 5.0, size=(n, 3))
            records = np.empty(n, dtype=RECORD_DTYPE)
            records["x"], records["y"], records["z"] = positions[:, 0], positions[:, 1], positions[:, 2]
            records["class_id"] = class_of[ids]
            records["instance_id"] = ids
            f.write(records.tobytes())

            counts += np.bincount(ids, minlength=INSTANCES)
            for axis in range(3):
                sums[:, axis] += np.bincount(ids, weights=positions[:, axis], minlength=INSTANCES)
    return counts, sums


def measure(path, jobs: int):
    """Run the streaming pass under tracemalloc; return (stats, peak bytes, seconds)."""
    tracemalloc.start()
    start = time.perf_counter()
    try:
        with open(path, "rb") as f:
            stats = stream_scene_stats(BinaryPointSource(f, CHUNK_RECORDS), jobs=jobs)
        elapsed = time.perf_counter() - start
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return stats, peak, elapsed


def test_large_cloud_centroids_and_memory(tmp_path):
    """Validate exact centroids and a peak memory bounded by the chunk window."""
    path = tmp_path / "city.c3pc"
    counts, sums = write_cloud(path, POINTS)

    stats, peak, elapsed = measure(path, jobs=2)
    print(f"{POINTS} points in {elapsed:.1f}s, peak {peak / 2**20:.1f} MiB")

    assert sorted(stats) == list(range(INSTANCES))
    for iid, (class_id, s) in stats.items():
        assert class_id == iid % 4
        assert s.count == counts[iid]
        centroid = np.array(s.sum) / s.count
        np.testing.assert_allclose(centroid, sums[iid] / counts[iid], rtol=1e-9)
    assert peak < MAX_PEAK_BYTES
    assert elapsed < MAX_SECONDS


def test_memory_does_not_grow_with_points(tmp_path):
    """Validate ten times the points costs about the same peak memory."""
    small, large = tmp_path / "small.c3pc", tmp_path / "large.c3pc"
    write_cloud(small, POINTS // 10, seed=1)
    write_cloud(large, POINTS, seed=1)

    _, peak_small, _ = measure(small, jobs=2)
    _, peak_large, _ = measure(large, jobs=2)
    print(f"peak {peak_small / 2**20:.1f} MiB vs {peak_large / 2**20:.1f} MiB")
    assert peak_large < 1.5 * peak_small
