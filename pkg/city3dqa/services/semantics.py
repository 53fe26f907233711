"""Scene semantic extraction: direction edges from centroid geometry and attribute triples from a lexicon.

Bearings are measured counterclockwise from the scene +x axis in the xy-plane.
Relations are read off eight 45-degree sectors, half-open with the lower bound
inclusive, with "front" centred on `front_bearing` (90 degrees, scene +y, by
default).
"""

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Literal

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..exceptions import (
    ConfigurationError,
    DataValidationError,
    DegenerateGeometryError,
    ManifestFormatError,
    describe_validation_error,
)
from .manifest import SceneManifest, load_json_document
from .scene import (
    COUNTERCLOCKWISE,
    DEFAULT_FRONT_BEARING,
    Aabb,
    DirectionRelation,
    Instance,
    SceneGraph,
    SemanticAttribute,
    SemanticTriple,
    SpatialEdge,
    Vec3,
    euclidean_distance,
    validate_scene_graph,
)

logger = logging.getLogger(__name__)

SECTOR_WIDTH = 45.0


# ----------------------------
# Lexicon and region map
# ----------------------------


class LexiconEntry(BaseModel):
    """Category, synonyms and usages known for one class or category label."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    category_label: str | None = Field(None, validation_alias=AliasChoices("category", "category_label"))
    synonyms: tuple[str, ...] = ()
    usages: tuple[str, ...] = ()

    @field_validator("synonyms", "usages")
    @classmethod
    def _no_empty(cls, values: tuple[str, ...]) -> tuple[str, ...]:
        if any(not v.strip() for v in values):
            raise ValueError("empty string in list")
        return tuple(dict.fromkeys(v.strip() for v in values))


Lexicon = dict[str, LexiconEntry]


class Region(BaseModel):
    """Named axis-aligned rectangle in scene xy coordinates."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(min_length=1)
    x: tuple[float, float]
    y: tuple[float, float]

    @model_validator(mode="after")
    def _non_degenerate(self):
        if not (self.x[0] < self.x[1] and self.y[0] < self.y[1]):
            raise ValueError(f"region {self.name!r}: ranges must satisfy lo < hi")
        return self

    def contains(self, x: float, y: float) -> bool:
        """True when (x, y) lies in the rectangle, bounds included."""
        return self.x[0] <= x <= self.x[1] and self.y[0] <= y <= self.y[1]


class RegionMap(BaseModel):
    """Ordered list of regions; the first containing region wins."""

    model_config = ConfigDict(frozen=True)

    regions: tuple[Region, ...] = ()

    @model_validator(mode="after")
    def _unique_names(self):
        names = [r.name for r in self.regions]
        if len(names) != len(set(names)):
            raise ValueError("region names must be unique")
        return self


class EdgePolicy(BaseModel):
    """Which ordered instance pairs receive a spatial edge."""

    model_config = ConfigDict(frozen=True)

    mode: Literal["all_pairs", "k_nearest"] = "all_pairs"
    k: int = Field(8, ge=1)


class EdgeBuildResult(BaseModel):
    """Edges in (head, tail) order plus ordered pairs skipped for coincident xy centroids."""

    model_config = ConfigDict(frozen=True)

    edges: tuple[SpatialEdge, ...] = ()
    skipped_pairs: tuple[tuple[int, int], ...] = ()


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a lexicon file `{label: {category, synonyms[], usages[]}}`.

    Raises:
        ManifestFormatError: Naming the offending label and field.
    """
    data = load_json_document(path)
    if not isinstance(data, dict):
        raise ManifestFormatError(f"{path}: lexicon must be an object keyed by label")
    lexicon: Lexicon = {}
    for label, entry in data.items():
        try:
            lexicon[label] = LexiconEntry.model_validate(entry)
        except ValidationError as exc:
            raise ManifestFormatError(f"{path}: {label}.{describe_validation_error(exc)}") from None
    return lexicon


def load_region_map(path: str | Path) -> RegionMap:
    """Load a region map file `[{name, x: [lo, hi], y: [lo, hi]}, ...]`."""
    data = load_json_document(path)
    try:
        return RegionMap(regions=data)
    except ValidationError as exc:
        raise ManifestFormatError(f"{path}: {describe_validation_error(exc)}") from None


def category_defaults(lexicon: Lexicon | None) -> dict[str, str]:
    """Map each lexicon label with a category to that category (used at ingest time)."""
    if not lexicon:
        return {}
    return {label: e.category_label for label, e in lexicon.items() if e.category_label}


def lexicon_entry(instance: Instance, lexicon: Lexicon) -> LexiconEntry | None:
    """Entry of the instance's category label, falling back to its class label."""
    return lexicon.get(instance.category_label) or lexicon.get(instance.class_label)


# ----------------------------
# Directions
# ----------------------------


def _xy(obj: Instance | Vec3) -> tuple[float, float]:
    p = obj.centroid if isinstance(obj, Instance) else obj
    return p[0], p[1]


def bearing_deg(from_: Instance | Vec3, to: Instance | Vec3) -> float:
    """Counterclockwise angle of `to - from_` from the +x axis, in [0, 360).

    Raises:
        DegenerateGeometryError: If both centroids coincide in the xy-plane.
    """
    (x0, y0), (x1, y1) = _xy(from_), _xy(to)
    dx, dy = x1 - x0, y1 - y0
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometryError(f"coincident centroids at ({x0}, {y0})")
    bearing = math.degrees(math.atan2(dy, dx)) % 360.0
    # Tiny negative angles wrap to exactly 360.0.
    return 0.0 if bearing >= 360.0 else bearing


def bin_direction(bearing: float, front_bearing: float = DEFAULT_FRONT_BEARING) -> DirectionRelation:
    """Map a bearing to one of the eight direction relations.

    Args:
        bearing (float): Degrees in [0, 360).
        front_bearing (float, optional): Bearing at the centre of the "front" sector. Defaults to 90.

    Returns:
        DirectionRelation: The sector containing `bearing`.

    Raises:
        DataValidationError: If `bearing` is outside [0, 360).
    """
    if not (math.isfinite(bearing) and 0.0 <= bearing < 360.0):
        raise DataValidationError(f"bearing {bearing} outside [0, 360)")
    relative = bearing
    if front_bearing != DEFAULT_FRONT_BEARING:
        relative = (bearing - front_bearing + DEFAULT_FRONT_BEARING) % 360.0
    index = int(((relative + SECTOR_WIDTH / 2) % 360.0) // SECTOR_WIDTH)
    return COUNTERCLOCKWISE[index]


def spatial_relation(i: Instance, j: Instance, front_bearing: float = DEFAULT_FRONT_BEARING) -> SpatialEdge:
    """Edge (i, r, j): seen from i, j lies toward r."""
    return SpatialEdge(head=i.id, relation=bin_direction(bearing_deg(i, j), front_bearing), tail=j.id)


def inverse_relation(r: DirectionRelation) -> DirectionRelation:
    """The relation rotated by 180 degrees."""
    return r.opposite


def build_spatial_edges(
    instances: Sequence[Instance],
    policy: EdgePolicy | None = None,
    front_bearing: float = DEFAULT_FRONT_BEARING,
) -> EdgeBuildResult:
    """Compute spatial edges between instances.

    Under `all_pairs` every ordered pair (i, j), i != j, gets an edge. Under
    `k_nearest` each head gets edges to its k nearest others by centroid
    distance, ties broken by id. Pairs with coincident xy centroids get no
    edge and are reported instead.

    Args:
        instances (Sequence[Instance]): Scene instances.
        policy (EdgePolicy | None): Edge policy, all pairs by default.
        front_bearing (float, optional): Bearing of "front".

    Returns:
        EdgeBuildResult: Edges sorted by (head, tail) and the skipped pairs.
    """
    policy = policy or EdgePolicy()
    ordered = sorted(instances, key=lambda inst: inst.id)
    edges: list[SpatialEdge] = []
    skipped: list[tuple[int, int]] = []

    for head in ordered:
        others = [tail for tail in ordered if tail.id != head.id]
        if policy.mode == "k_nearest":
            others.sort(key=lambda tail: (euclidean_distance(head.centroid, tail.centroid), tail.id))
        chosen = 0
        for tail in others:
            if policy.mode == "k_nearest" and chosen >= policy.k:
                break
            try:
                edges.append(spatial_relation(head, tail, front_bearing))
                chosen += 1
            except DegenerateGeometryError:
                skipped.append((head.id, tail.id))

    if skipped:
        logger.warning("skipped %d ordered pairs with coincident xy centroids: %s", len(skipped), skipped[:10])
    edges.sort(key=lambda e: (e.head, e.tail))
    return EdgeBuildResult(edges=tuple(edges), skipped_pairs=tuple(skipped))


# ----------------------------
# Semantic triples
# ----------------------------


def scene_bounds(instances: Iterable[Instance]) -> Aabb | None:
    """Union of the instance boxes, or None for an empty scene."""
    boxes = [inst.aabb for inst in instances]
    if not boxes:
        return None
    return Aabb(
        min=Vec3(*(min(b.min[c] for b in boxes) for c in range(3))),
        max=Vec3(*(max(b.max[c] for b in boxes) for c in range(3))),
    )


def assign_location(i: Instance, rm: RegionMap | None, bounds: Aabb) -> str:
    """Name the region containing the centroid, or a quadrant of the scene box.

    Args:
        i (Instance): Instance to place.
        rm (RegionMap | None): Regions in file order.
        bounds (Aabb): Scene box for the quadrant fallback, normally `scene_bounds` of all instances.

    Returns:
        str: Region name, or "northwest area" / "northeast area" / "southwest area" / "southeast area".
    """
    x, y = _xy(i)
    for region in rm.regions if rm else ():
        if region.contains(x, y):
            return region.name
    cx, cy, _ = bounds.center
    ns = "north" if y >= cy else "south"
    ew = "west" if x < cx else "east"
    return f"{ns}{ew} area"


def attach_semantics(
    instances: Sequence[Instance],
    lexicon: Lexicon | None,
    region_map: RegionMap | None = None,
) -> list[SemanticTriple]:
    """Attach label, category, synonym, location and usage triples.

    Args:
        instances (Sequence[Instance]): Scene instances.
        lexicon (Lexicon | None): Lexicon; None attaches no synonyms or usages.
        region_map (RegionMap | None): Regions for the location attribute.

    Returns:
        list[SemanticTriple]: Triples grouped by instance id.

    Raises:
        ConfigurationError: Listing every instance label missing from a given lexicon.
    """
    ordered = sorted(instances, key=lambda inst: inst.id)
    if lexicon is not None:
        unknown = sorted({inst.class_label for inst in ordered if lexicon_entry(inst, lexicon) is None})
        if unknown:
            raise ConfigurationError(f"labels missing from lexicon: {', '.join(unknown)}")

    bounds = scene_bounds(ordered)
    triples: list[SemanticTriple] = []
    for inst in ordered:
        entry = lexicon_entry(inst, lexicon) if lexicon is not None else None
        synonyms = entry.synonyms if entry else ()
        usages = entry.usages if entry else ()

        pairs = [
            (SemanticAttribute.INSTANCE_LABEL, inst.class_label),
            (SemanticAttribute.BUILDING_CATEGORY_LABEL, inst.category_label),
            *((SemanticAttribute.SYNONYM_LABEL, s) for s in synonyms),
            (SemanticAttribute.LOCATION, assign_location(inst, region_map, bounds)),
            *((SemanticAttribute.USAGE_LABEL, u) for u in usages),
        ]
        triples.extend(SemanticTriple(subject=inst.id, attribute=a, value=v) for a, v in pairs)
    return triples


def build_scene_graph(
    manifest: SceneManifest,
    lexicon: Lexicon | None,
    region_map: RegionMap | None = None,
    policy: EdgePolicy | None = None,
    front_bearing: float = DEFAULT_FRONT_BEARING,
) -> SceneGraph:
    """Compose spatial edges and semantic triples for one scene.

    Raises:
        ConfigurationError: Propagated from `attach_semantics`.
        DataValidationError: If the resulting graph violates an invariant.
    """
    edges = build_spatial_edges(manifest.instances, policy, front_bearing)
    triples = attach_semantics(manifest.instances, lexicon, region_map)
    graph = SceneGraph(
        city=manifest.city,
        scene_id=manifest.scene_id,
        instances=tuple(sorted(manifest.instances, key=lambda inst: inst.id)),
        spatial_edges=edges.edges,
        semantic_triples=tuple(triples),
        front_bearing=front_bearing,
    )
    report = validate_scene_graph(graph)
    if not report.ok:
        raise DataValidationError(f"scene graph {manifest.scene_id}: {report.violations[0].message}")
    return graph


# ----------------------------
# Scene graph files
# ----------------------------


def write_scene_graph(g: SceneGraph, sink) -> None:
    """Write a scene graph as indented JSON to a text stream."""
    sink.write(g.model_dump_json(indent=2))
    sink.write("\n")


def read_scene_graph(source) -> SceneGraph:
    """Read a scene graph from a text stream.

    Raises:
        ManifestFormatError: Naming the offending field.
    """
    try:
        return SceneGraph.model_validate_json(source.read())
    except ValidationError as exc:
        raise ManifestFormatError(f"invalid scene graph: {describe_validation_error(exc)}") from None


def load_scene_graphs(paths: Iterable[str | Path]) -> dict[tuple[str, str], SceneGraph]:
    """Read scene graph files keyed by (city, scene_id)."""
    graphs = {}
    for path in paths:
        with open(path, encoding="utf-8") as f:
            g = read_scene_graph(f)
        graphs[g.key] = g
    return graphs


def lexicon_from_mapping(data: Mapping[str, Mapping]) -> Lexicon:
    """Build a lexicon from an in-memory mapping (same schema as the file)."""
    return {label: LexiconEntry.model_validate(entry) for label, entry in data.items()}
