"""Shared fixtures: a small hand-placed scene, its lexicon and region map, and file helpers.

Scene "Testville/s1" (centroids in meters, z = 5 everywhere):

    id  class     category     xy          location
    1   building  bank         (0, 0)      downtown
    2   building  restaurant   (50, 0)     downtown
    3   building  school       (0, 80)     northeast area (quadrant fallback)
    4   tree      tree         (10, 10)    park
    5   tree      tree         (60, 40)    northeast area (quadrant fallback)
    6   car       car          (-100, -100) southwest area (quadrant fallback)
"""

import json
import logging
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from city3dqa.services.manifest import SceneManifest  # noqa: E402
from city3dqa.services.scene import Aabb, Instance, Vec3  # noqa: E402
from city3dqa.services.semantics import (  # noqa: E402
    EdgePolicy,
    RegionMap,
    build_scene_graph,
    lexicon_from_mapping,
)

CLASS_MAP = {0: "building", 1: "tree", 2: "car"}

LEXICON = {
    "bank": {"category": "bank", "synonyms": ["financial institution"], "usages": ["deposit money", "withdraw cash"]},
    "restaurant": {"category": "restaurant", "synonyms": ["eatery"], "usages": ["have dinner", "withdraw cash"]},
    "school": {"category": "school", "usages": ["study"]},
    "building": {"category": "building"},
    "tree": {"category": "tree"},
    "car": {"category": "car"},
}

REGIONS = [
    {"name": "downtown", "x": [-5, 55], "y": [-5, 5]},
    {"name": "park", "x": [5, 65], "y": [5, 15]},
]

LAYOUT = [
    (1, "building", "bank", 0.0, 0.0),
    (2, "building", "restaurant", 50.0, 0.0),
    (3, "building", "school", 0.0, 80.0),
    (4, "tree", "tree", 10.0, 10.0),
    (5, "tree", "tree", 60.0, 40.0),
    (6, "car", "car", -100.0, -100.0),
]


def make_instance(iid: int, class_label: str, category: str, x: float, y: float, half: float = 1.0) -> Instance:
    """Instance centred at (x, y, 5) with a box of half-width `half` and height 10."""
    return Instance(
        id=iid,
        class_label=class_label,
        category_label=category,
        centroid=Vec3(x, y, 5.0),
        aabb=Aabb(min=Vec3(x - half, y - half, 0.0), max=Vec3(x + half, y + half, 10.0)),
        point_count=10,
    )


@pytest.fixture
def instances():
    """The six instances of the test scene."""
    return [make_instance(*row) for row in LAYOUT]


@pytest.fixture
def manifest(instances):
    """Manifest of the test scene."""
    return SceneManifest(city="Testville", scene_id="s1", class_map=CLASS_MAP, instances=tuple(instances))


@pytest.fixture
def lexicon():
    """Lexicon of the test scene."""
    return lexicon_from_mapping(LEXICON)


@pytest.fixture
def region_map():
    """Two named regions; everything else falls back to quadrants."""
    return RegionMap(regions=REGIONS)


@pytest.fixture
def scene_graph(manifest, lexicon, region_map):
    """Scene graph of the test scene with all-pairs edges."""
    return build_scene_graph(manifest, lexicon, region_map, EdgePolicy())


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document under tmp_path and return its path."""

    def _write(name: str, data) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write


def _scene_points(layout=LAYOUT, per_instance: int = 8, seed: int = 0):
    """Column arrays of a synthetic point cloud following `layout`.

    Points are dyadic offsets around each centroid so that sums are exact.
    """
    rng = np.random.default_rng(seed)
    class_of = {label: cid for cid, label in CLASS_MAP.items()}
    positions, classes, ids = [], [], []
    for iid, class_label, _category, x, y in layout:
        offsets = rng.integers(-4, 5, size=(per_instance, 3)) / 4.0
        positions.append(np.array([x, y, 5.0]) + offsets)
        classes.append(np.full(per_instance, class_of[class_label]))
        ids.append(np.full(per_instance, iid))
    return np.vstack(positions), np.concatenate(classes), np.concatenate(ids)


@pytest.fixture
def scene_points():
    """Factory for synthetic point columns: `scene_points(layout=..., per_instance=..., seed=...)`."""
    return _scene_points


@pytest.fixture
def class_map():
    """class_id -> class label of the test scene."""
    return dict(CLASS_MAP)


@pytest.fixture
def layout():
    """(id, class, category, x, y) rows of the test scene."""
    return list(LAYOUT)


@pytest.fixture
def instance_factory():
    """`make_instance(id, class_label, category, x, y, half=1.0)`."""
    return make_instance


@pytest.fixture
def lexicon_data():
    """The lexicon as a plain JSON-ready mapping."""
    return json.loads(json.dumps(LEXICON))


@pytest.fixture
def regions_data():
    """The region map as a plain JSON-ready list."""
    return json.loads(json.dumps(REGIONS))


@pytest.fixture(autouse=True)
def restore_root_logger():
    """Undo root logger changes made by `configure_logging` inside a test."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
