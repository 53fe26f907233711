"""Unit tests for scene manifests: finalisation, ingestion from files and manifest I/O."""

import io
import json

import pytest

from city3dqa.exceptions import ConfigurationError, ManifestFormatError
from city3dqa.services.manifest import (
    SceneManifest,
    finalize_instances,
    ingest_scene,
    load_category_overrides,
    load_class_map,
    read_manifest,
    write_manifest,
)
from city3dqa.services.points import RunningStats, write_c3pc, write_xyzci
from city3dqa.services.scene import Vec3


def _stats(*points, class_id=0):
    s = RunningStats.of_point(Vec3(*points[0]))
    for p in points[1:]:
        s = s.merge(RunningStats.of_point(Vec3(*p)))
    return class_id, s


def test_finalize_instances_computes_centroid_and_box():
    """Validate centroid = mean and aabb = extremes."""
    stats = {4: _stats((0, 0, 0), (2, 4, 6), (1, 2, 0))}
    (inst,) = finalize_instances(stats, {0: "building"})
    assert inst.id == 4
    assert inst.centroid == Vec3(1.0, 2.0, 2.0)
    assert inst.aabb.min == Vec3(0.0, 0.0, 0.0)
    assert inst.aabb.max == Vec3(2.0, 4.0, 6.0)
    assert inst.point_count == 3
    assert inst.category_label == "building"


def test_finalize_instances_applies_categories_then_overrides(caplog):
    """Validate lexicon defaults, per-instance overrides and the warning for unused overrides."""
    stats = {1: _stats((0, 0, 0)), 2: _stats((1, 1, 1))}
    instances = finalize_instances(stats, {0: "building"}, {"building": "office"}, {2: "bank", 99: "ghost"})
    assert [i.category_label for i in instances] == ["office", "bank"]
    assert "99" in caplog.text


def test_finalize_instances_requires_every_class_id():
    """Validate a class id missing from the map is a configuration error."""
    with pytest.raises(ConfigurationError, match="7"):
        finalize_instances({1: _stats((0, 0, 0), class_id=7)}, {0: "building"})


def test_finalize_single_point_instance_is_degenerate_box():
    """Validate a one-point instance has centroid = min = max."""
    (inst,) = finalize_instances({3: _stats((5, 6, 7))}, {0: "building"})
    assert inst.aabb.min == inst.aabb.max == inst.centroid


@pytest.mark.parametrize("fmt", ["xyzci", "c3pc"])
def test_ingest_scene_from_both_formats(tmp_path, scene_points, class_map, layout, fmt):
    """Validate text and binary files of the same cloud produce the same manifest."""
    positions, classes, ids = scene_points()
    path = tmp_path / f"cloud.{fmt}"
    if fmt == "c3pc":
        with open(path, "wb") as f:
            write_c3pc(f, positions, classes, ids)
    else:
        with open(path, "w", encoding="utf-8") as f:
            write_xyzci(f, positions, classes, ids)

    m = ingest_scene(path, "Testville", "s1", class_map, chunk_records=5, jobs=2)

    assert [i.id for i in m.instances] == [row[0] for row in layout]
    assert [i.class_label for i in m.instances] == [row[1] for row in layout]
    assert sum(i.point_count for i in m.instances) == len(positions)
    for inst in m.instances:
        assert inst.aabb.contains(inst.centroid)


def test_manifest_write_read_is_byte_stable(manifest):
    """Validate writing, reading and writing again yields identical text."""
    first = io.StringIO()
    write_manifest(manifest, first)
    again = read_manifest(io.StringIO(first.getvalue()))
    second = io.StringIO()
    write_manifest(again, second)
    assert again == manifest
    assert first.getvalue() == second.getvalue()


def test_read_manifest_names_the_bad_field(manifest):
    """Validate malformed manifests name the offending field."""
    doc = json.loads(manifest.model_dump_json())
    doc["instances"][0]["point_count"] = 0
    with pytest.raises(ManifestFormatError, match="point_count"):
        read_manifest(io.StringIO(json.dumps(doc)))


def test_manifest_rejects_unknown_class_label(instances):
    """Validate instances must use labels from the class map."""
    with pytest.raises(ValueError):
        SceneManifest(city="c", scene_id="s", class_map={0: "building"}, instances=tuple(instances))


def test_load_class_map_and_overrides(write_json):
    """Validate JSON maps are read with integer keys, and bad ones are refused."""
    assert load_class_map(write_json("classes.json", {"0": "building", "2": "car"})) == {0: "building", 2: "car"}
    assert load_category_overrides(write_json("over.json", {"5": "bank"})) == {5: "bank"}
    with pytest.raises(ManifestFormatError):
        load_class_map(write_json("bad.json", ["building"]))
    with pytest.raises(ManifestFormatError):
        load_class_map(write_json("bad2.json", {"zero": "building"}))
