"""Core scene types shared by ingestion, semantics, templates and the oracle.

Coordinates are meters in a scene-local right-handed frame with z up. Every
type here is immutable after construction.
"""

import math
from collections import Counter
from enum import StrEnum
from typing import NamedTuple

from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, NonNegativeInt, PositiveInt, model_validator

from ..exceptions import DataValidationError

DEFAULT_FRONT_BEARING = 90.0  # degrees counterclockwise from +x


class Vec3(NamedTuple):
    """A point in scene coordinates."""

    x: FiniteFloat
    y: FiniteFloat
    z: FiniteFloat


def require_finite(v: Vec3) -> None:
    """Raise `DataValidationError` when any component is NaN or infinite."""
    if not all(math.isfinite(c) for c in v):
        raise DataValidationError(f"non-finite coordinate {tuple(v)}")


def euclidean_distance(a: Vec3, b: Vec3) -> float:
    """Return the straight-line distance between two points in meters.

    Args:
        a (Vec3): First point.
        b (Vec3): Second point.

    Returns:
        float: Non-negative distance.

    Raises:
        DataValidationError: If a component is not finite.
    """
    require_finite(a)
    require_finite(b)
    return math.dist(a, b)


class Aabb(BaseModel):
    """Axis-aligned bounding box."""

    model_config = ConfigDict(frozen=True)

    min: Vec3
    max: Vec3

    @model_validator(mode="after")
    def _ordered(self):
        if any(lo > hi for lo, hi in zip(self.min, self.max)):
            raise ValueError(f"aabb min {tuple(self.min)} exceeds max {tuple(self.max)}")
        return self

    def contains(self, p: Vec3) -> bool:
        """Return True when `p` lies inside the box, bounds included."""
        return all(lo <= c <= hi for lo, c, hi in zip(self.min, p, self.max))

    @property
    def center(self) -> Vec3:
        """Midpoint of the box."""
        return Vec3(*((lo + hi) / 2.0 for lo, hi in zip(self.min, self.max)))


class Instance(BaseModel):
    """One segmented city object with aggregate geometry."""

    model_config = ConfigDict(frozen=True)

    id: NonNegativeInt
    class_label: str = Field(min_length=1)
    category_label: str = Field(min_length=1)
    centroid: Vec3
    aabb: Aabb
    point_count: PositiveInt

    @model_validator(mode="after")
    def _centroid_inside(self):
        if not self.aabb.contains(self.centroid):
            raise ValueError(f"instance {self.id}: centroid outside its aabb")
        return self


class DirectionRelation(StrEnum):
    """The eight scene-anchored direction relations."""

    FRONT = "front"
    FRONT_RIGHT = "front-right"
    RIGHT = "right"
    BACK_RIGHT = "back-right"
    FRONT_LEFT = "front-left"
    LEFT = "left"
    BACK_LEFT = "back-left"
    BACK = "back"

    @property
    def opposite(self) -> "DirectionRelation":
        """The relation rotated by 180 degrees."""
        i = COUNTERCLOCKWISE.index(self)
        return COUNTERCLOCKWISE[(i + 4) % 8]

    @property
    def counterclockwise_neighbor(self) -> "DirectionRelation":
        """The relation rotated by +45 degrees."""
        i = COUNTERCLOCKWISE.index(self)
        return COUNTERCLOCKWISE[(i + 1) % 8]


# Sector order starting at bearing 0 (right) and turning counterclockwise.
COUNTERCLOCKWISE = (
    DirectionRelation.RIGHT,
    DirectionRelation.FRONT_RIGHT,
    DirectionRelation.FRONT,
    DirectionRelation.FRONT_LEFT,
    DirectionRelation.LEFT,
    DirectionRelation.BACK_LEFT,
    DirectionRelation.BACK,
    DirectionRelation.BACK_RIGHT,
)


class SemanticAttribute(StrEnum):
    """Attributes of semantic triples."""

    INSTANCE_LABEL = "instance_label"
    BUILDING_CATEGORY_LABEL = "building_category_label"
    SYNONYM_LABEL = "synonym_label"
    LOCATION = "location"
    USAGE_LABEL = "usage_label"


class SpatialEdge(BaseModel):
    """Directed spatial triple: seen from `head`, `tail` lies toward `relation`."""

    model_config = ConfigDict(frozen=True)

    head: NonNegativeInt
    relation: DirectionRelation
    tail: NonNegativeInt

    @model_validator(mode="after")
    def _distinct(self):
        if self.head == self.tail:
            raise ValueError(f"spatial edge from instance {self.head} to itself")
        return self


class SemanticTriple(BaseModel):
    """Attribute fact (subject, attribute, value)."""

    model_config = ConfigDict(frozen=True)

    subject: NonNegativeInt
    attribute: SemanticAttribute
    value: str = Field(min_length=1)


class SceneGraph(BaseModel):
    """Per-scene instance nodes, spatial edges and semantic triples.

    `front_bearing` is the bearing the spatial edges were binned with; direction
    answers computed without a stored edge use the same value.
    """

    model_config = ConfigDict(frozen=True)

    city: str
    scene_id: str
    instances: tuple[Instance, ...] = ()
    spatial_edges: tuple[SpatialEdge, ...] = ()
    semantic_triples: tuple[SemanticTriple, ...] = ()
    front_bearing: float = Field(DEFAULT_FRONT_BEARING, ge=0, lt=360)

    @property
    def key(self) -> tuple[str, str]:
        """(city, scene_id) identifying the scene."""
        return self.city, self.scene_id


class Violation(BaseModel):
    """One violated invariant."""

    model_config = ConfigDict(frozen=True)

    code: str
    message: str
    ids: tuple[int, ...] = ()


class ValidationReport(BaseModel):
    """Result of `validate_scene_graph`."""

    model_config = ConfigDict(frozen=True)

    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        """True when no invariant is violated."""
        return not self.violations


def validate_scene_graph(g: SceneGraph) -> ValidationReport:
    """Check every scene graph invariant and report all violations.

    Args:
        g (SceneGraph): Graph to check.

    Returns:
        ValidationReport: Empty when the graph is valid.
    """
    violations: list[Violation] = []

    id_counts = Counter(inst.id for inst in g.instances)
    for iid, n in sorted(id_counts.items()):
        if n > 1:
            violations.append(Violation(code="duplicate_instance_id", message="duplicate instance id", ids=(iid,)))

    for inst in g.instances:
        if any(lo > hi for lo, hi in zip(inst.aabb.min, inst.aabb.max)):
            violations.append(Violation(code="aabb_order", message="aabb min exceeds max", ids=(inst.id,)))
        elif not inst.aabb.contains(inst.centroid):
            violations.append(Violation(code="centroid_outside_aabb", message="centroid outside aabb", ids=(inst.id,)))
        if inst.point_count < 1:
            violations.append(Violation(code="point_count", message="point count below 1", ids=(inst.id,)))

    known = set(id_counts)
    seen_pairs: set[tuple[int, int]] = set()
    for edge in g.spatial_edges:
        for iid in (edge.head, edge.tail):
            if iid not in known:
                violations.append(Violation(code="unknown_instance", message="unknown instance id", ids=(iid,)))
        if edge.head == edge.tail:
            violations.append(Violation(code="self_edge", message="spatial edge to itself", ids=(edge.head,)))
        pair = (edge.head, edge.tail)
        if pair in seen_pairs:
            violations.append(Violation(code="duplicate_edge", message="more than one edge for pair", ids=pair))
        seen_pairs.add(pair)

    labelled: set[int] = set()
    for triple in g.semantic_triples:
        if triple.subject not in known:
            violations.append(Violation(code="unknown_instance", message="unknown instance id", ids=(triple.subject,)))
        if not triple.value:
            violations.append(Violation(code="empty_value", message="empty triple value", ids=(triple.subject,)))
        if triple.attribute is SemanticAttribute.INSTANCE_LABEL:
            labelled.add(triple.subject)

    for iid in sorted(known - labelled):
        violations.append(Violation(code="missing_instance_label", message="no instance_label triple", ids=(iid,)))

    return ValidationReport(violations=tuple(violations))
