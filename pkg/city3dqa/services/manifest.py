"""Scene manifests: the instance set of one scene, built from streamed point statistics."""

import json
import logging
from collections.abc import Mapping
from pathlib import Path

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from ..exceptions import ConfigurationError, ManifestFormatError, describe_validation_error
from .points import DEFAULT_CHUNK_RECORDS, open_point_source, stream_scene_stats
from .points.stats import InstanceStats
from .scene import Aabb, Instance, Vec3

logger = logging.getLogger(__name__)


class SceneManifest(BaseModel):
    """Instances of one scene with the class map they were labelled with."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    city: str
    scene_id: str
    class_map: dict[int, str]
    instances: tuple[Instance, ...] = ()

    @field_validator("class_map")
    @classmethod
    def _sorted_class_map(cls, value: dict[int, str]) -> dict[int, str]:
        return dict(sorted(value.items()))

    @model_validator(mode="after")
    def _classes_known(self):
        labels = set(self.class_map.values())
        for inst in self.instances:
            if inst.class_label not in labels:
                raise ValueError(f"instance {inst.id}: class label {inst.class_label!r} not in class_map")
        return self


def finalize_instances(
    stats: InstanceStats,
    class_map: Mapping[int, str],
    categories: Mapping[str, str] | None = None,
    overrides: Mapping[int, str] | None = None,
) -> list[Instance]:
    """Turn accumulated statistics into Instance records ordered by id.

    Args:
        stats (InstanceStats): instance_id -> (class_id, RunningStats).
        class_map (Mapping[int, str]): class_id -> class label.
        categories (Mapping[str, str] | None): class label -> default category label.
            The class label itself is used when absent.
        overrides (Mapping[int, str] | None): instance_id -> category label.

    Returns:
        list[Instance]: Instances with centroid = sum / count and aabb = (min, max).

    Raises:
        ConfigurationError: If any class id has no entry in `class_map`.
    """
    missing = sorted({class_id for class_id, _ in stats.values()} - set(class_map))
    if missing:
        raise ConfigurationError(f"class ids missing from class map: {missing}")

    categories = categories or {}
    overrides = overrides or {}
    instances = []
    for instance_id in sorted(stats):
        class_id, s = stats[instance_id]
        label = class_map[class_id]
        # The mean can land one ulp outside [min, max]; clamp it back.
        centroid = Vec3(*(min(max(total / s.count, lo), hi) for total, lo, hi in zip(s.sum, s.min, s.max)))
        instances.append(
            Instance(
                id=instance_id,
                class_label=label,
                category_label=overrides.get(instance_id, categories.get(label, label)),
                centroid=centroid,
                aabb=Aabb(min=s.min, max=s.max),
                point_count=s.count,
            )
        )

    unused = sorted(set(overrides) - set(stats))
    if unused:
        logger.warning("category overrides for unknown instances ignored: %s", unused)
    return instances


def ingest_scene(
    path: str | Path,
    city: str,
    scene_id: str,
    class_map: Mapping[int, str],
    categories: Mapping[str, str] | None = None,
    overrides: Mapping[int, str] | None = None,
    fmt: str = "auto",
    jobs: int = 1,
    chunk_records: int = DEFAULT_CHUNK_RECORDS,
    progress: bool = False,
) -> SceneManifest:
    """Stream one point file and build its manifest."""
    source = open_point_source(path, fmt, chunk_records)
    try:
        logger.info("ingesting %s as %s", path, source.name)
        stats = stream_scene_stats(source, jobs=jobs, progress=progress)
    finally:
        source.stream.close()
    instances = finalize_instances(stats, class_map, categories, overrides)
    return SceneManifest(city=city, scene_id=scene_id, class_map=dict(class_map), instances=tuple(instances))


def write_manifest(m: SceneManifest, sink) -> None:
    """Write a manifest as indented JSON to a text stream (byte-stable for equal manifests)."""
    sink.write(m.model_dump_json(indent=2))
    sink.write("\n")


def read_manifest(source) -> SceneManifest:
    """Read a manifest from a text stream.

    Raises:
        ManifestFormatError: Naming the offending field when the document is malformed.
    """
    try:
        return SceneManifest.model_validate_json(source.read())
    except ValidationError as exc:
        raise ManifestFormatError(f"invalid manifest: {describe_validation_error(exc)}") from None


def load_class_map(path: str | Path) -> dict[int, str]:
    """Load a `{class_id: class_label}` JSON object.

    Raises:
        ManifestFormatError: If the file is not such an object.
    """
    data = load_json_document(path)
    try:
        return {int(k): str(v) for k, v in data.items()}
    except (AttributeError, ValueError):
        raise ManifestFormatError(f"{path}: class map must map integer ids to labels") from None


def load_category_overrides(path: str | Path) -> dict[int, str]:
    """Load a `{instance_id: category_label}` JSON object."""
    data = load_json_document(path)
    try:
        return {int(k): str(v) for k, v in data.items()}
    except (AttributeError, ValueError):
        raise ManifestFormatError(f"{path}: overrides must map integer instance ids to labels") from None


def load_json_document(path: str | Path):
    """Parse a JSON file, reporting syntax errors with their line."""
    with open(path, encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise ManifestFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from None
