"""Symbolic answerer: gold answers computed from a scene graph and a template binding.

Every operation is a pure function of an immutable graph. Instance references
are resolved with `resolve_reference`; instance-choice answers repeat the
surface form used in the question, or one of "both", "neither", "equal".
"""

import logging
from collections.abc import Sequence
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import ConfigurationError, DegenerateGeometryError, InstantiationError
from .lookup import SceneIndex, index_of
from .scene import DirectionRelation, SceneGraph, euclidean_distance
from .semantics import spatial_relation
from .templates import (
    AnswerKind,
    Binding,
    Operation,
    QuestionTemplate,
    SlotKind,
    get_template,
)

logger = logging.getLogger(__name__)

YES, NO = "yes", "no"
BOTH, NEITHER, EQUAL = "both", "neither", "equal"
NONE = "none"
LIST_SEPARATOR = ", "


class OracleParams(BaseModel):
    """Numeric parameters of the oracle, recorded with every generated pair.

    `front_bearing` must match the graph's when set; None defers to the graph.
    """

    model_config = ConfigDict(frozen=True)

    near_radius: float = Field(100.0, gt=0)
    tie_tolerance: float = Field(1e-9, ge=0)
    front_bearing: float | None = Field(None, ge=0, lt=360)


class Filter(BaseModel):
    """Conjunction of label, usage and location criteria."""

    model_config = ConfigDict(frozen=True)

    label: str | None = None
    usage: str | None = None
    location: str | None = None

    @model_validator(mode="after")
    def _not_empty(self):
        if self.label is None and self.usage is None and self.location is None:
            raise ValueError("filter needs at least one criterion")
        return self


class Answer(BaseModel):
    """A gold answer with its kind."""

    model_config = ConfigDict(frozen=True)

    kind: AnswerKind
    value: str = Field(min_length=1)


def resolve_reference(g: SceneGraph | SceneIndex, surface: str) -> int:
    """Resolve "the <label>" or "the <label> in the <location>" to one instance id.

    Raises:
        InstanceReferenceError: If the reference is unknown or ambiguous.
    """
    return index_of(g).resolve(surface)


def _yes_no(flag: bool) -> str:
    return YES if flag else NO


def answer_existence(g: SceneGraph | SceneIndex, f: Filter) -> str:
    """"yes" iff at least one instance matches the filter."""
    return _yes_no(bool(index_of(g).matching(f.label, f.usage, f.location)))


def answer_count(g: SceneGraph | SceneIndex, f: Filter) -> str:
    """Number of instances matching the filter, as a numeral."""
    return str(len(index_of(g).matching(f.label, f.usage, f.location)))


def answer_attribute(g: SceneGraph | SceneIndex, instance_ref: str, attr: Literal["usage_label", "location"]) -> str:
    """Usage values (lexicon order, comma separated) or the location of one instance.

    Raises:
        InstanceReferenceError: If the reference does not resolve to exactly one instance.
    """
    idx = index_of(g)
    iid = idx.resolve(instance_ref)
    if attr == "location":
        return idx.location.get(iid, NONE)
    return LIST_SEPARATOR.join(idx.usages[iid]) or NONE


def answer_usage_location(g: SceneGraph | SceneIndex, usage: str) -> str:
    """Distinct locations of instances carrying `usage`, in instance-id order."""
    idx = index_of(g)
    locations = [idx.location[iid] for iid in idx.matching(usage=usage) if iid in idx.location]
    return LIST_SEPARATOR.join(dict.fromkeys(locations)) or NONE


def answer_has_usage(g: SceneGraph | SceneIndex, usage: str, instance_ref: str) -> str:
    """"yes" iff the referenced instance carries `usage`."""
    idx = index_of(g)
    return _yes_no(idx.has_usage(idx.resolve(instance_ref), usage))


def answer_direction(g: SceneGraph | SceneIndex, a_ref: str, b_ref: str) -> str:
    """Relation r of the edge (b, r, a): the sector in which a lies as seen from b.

    A stored edge is used when the graph has one; otherwise the relation is computed
    with the graph's own front bearing.

    Raises:
        DegenerateGeometryError: If a and b coincide in the xy-plane.
    """
    idx = index_of(g)
    a, b = idx.resolve(a_ref), idx.resolve(b_ref)
    if a == b:
        raise DegenerateGeometryError(f"{a_ref!r} and {b_ref!r} are the same instance")
    edge = idx.edges.get((b, a))
    if edge is None:
        edge = spatial_relation(idx.instances[b], idx.instances[a], idx.graph.front_bearing)
    return DirectionRelation(edge.relation).value


def _distances(idx: SceneIndex, ref: str, a: str, b: str) -> tuple[float, float]:
    r, ia, ib = idx.resolve(ref), idx.resolve(a), idx.resolve(b)
    center = idx.instances[r].centroid
    return (
        euclidean_distance(center, idx.instances[ia].centroid),
        euclidean_distance(center, idx.instances[ib].centroid),
    )


def answer_distance_comparison(
    g: SceneGraph | SceneIndex,
    ref: str,
    a: str,
    b: str,
    mode: Literal["nearest", "farther_bool"] = "nearest",
    tie_tolerance: float = 1e-9,
) -> str:
    """Compare centroid distances from `ref` to `a` and `b`.

    Returns:
        str: For "nearest", the surface of the strictly nearer side or "equal" within the tolerance.
            For "farther_bool", "yes" iff a is farther than b by more than the tolerance.
    """
    d_a, d_b = _distances(index_of(g), ref, a, b)
    if mode == "farther_bool":
        return _yes_no(d_a > d_b + tie_tolerance)
    if abs(d_a - d_b) <= tie_tolerance:
        return EQUAL
    return a if d_a < d_b else b


def answer_density_comparison(
    g: SceneGraph | SceneIndex, class_label: str, a: str, b: str, radius: float = 100.0
) -> str:
    """Which of a and b has more instances of `class_label` within `radius` (a and b excluded)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    idx = index_of(g)
    ia, ib = idx.resolve(a), idx.resolve(b)
    members = [iid for iid in idx.matching(label=class_label) if iid not in (ia, ib)]

    def near(anchor: int) -> int:
        center = idx.instances[anchor].centroid
        return sum(1 for iid in members if euclidean_distance(center, idx.instances[iid].centroid) <= radius)

    n_a, n_b = near(ia), near(ib)
    if n_a == n_b:
        return EQUAL
    return a if n_a > n_b else b


def answer_usage_selection(g: SceneGraph | SceneIndex, usage: str, a: str, b: str) -> str:
    """The side carrying `usage`, or "both" / "neither"."""
    idx = index_of(g)
    has_a, has_b = idx.has_usage(idx.resolve(a), usage), idx.has_usage(idx.resolve(b), usage)
    if has_a and has_b:
        return BOTH
    if has_a:
        return a
    if has_b:
        return b
    return NEITHER


def answer_usage_efficiency(
    g: SceneGraph | SceneIndex, usage: str, a: str, b: str, ref: str | None = None, tie_tolerance: float = 1e-9
) -> str:
    """Usage selection; when both sides qualify, the one nearer to `ref` wins if a reference is given."""
    idx = index_of(g)
    choice = answer_usage_selection(idx, usage, a, b)
    if choice != BOTH or ref is None:
        return choice
    d_a, d_b = _distances(idx, ref, a, b)
    if abs(d_a - d_b) <= tie_tolerance:
        return BOTH
    return a if d_a < d_b else b


def answer_location_choice(g: SceneGraph | SceneIndex, location: str, a: str, b: str) -> str:
    """The side located in `location`, or "both" / "neither"."""
    idx = index_of(g)
    in_a, in_b = idx.in_location(idx.resolve(a), location), idx.in_location(idx.resolve(b), location)
    if in_a and in_b:
        return BOTH
    if in_a:
        return a
    if in_b:
        return b
    return NEITHER


def answer_usage_difference(g: SceneGraph | SceneIndex, a: str, b: str) -> str:
    """"<a>: <usages only a has>; <b>: <usages only b has>", lists in lexicon order or "none"."""
    idx = index_of(g)
    ua, ub = idx.usages[idx.resolve(a)], idx.usages[idx.resolve(b)]
    only_a = [u for u in ua if not idx.has_usage(idx.resolve(b), u)]
    only_b = [u for u in ub if not idx.has_usage(idx.resolve(a), u)]
    return f"{a}: {LIST_SEPARATOR.join(only_a) or NONE}; {b}: {LIST_SEPARATOR.join(only_b) or NONE}"


def _slot(binding: Binding, slot: SlotKind) -> str:
    try:
        return binding.values[slot]
    except KeyError:
        raise InstantiationError(f"unbound slot: {slot.value}") from None


def _filter_from(binding: Binding) -> Filter:
    return Filter(
        label=binding.values.get(SlotKind.INSTANCE_LABEL),
        usage=binding.values.get(SlotKind.USAGE),
        location=binding.values.get(SlotKind.LOCATION),
    )


def answer(
    g: SceneGraph | SceneIndex,
    template_id: str,
    binding: Binding,
    templates: Sequence[QuestionTemplate] | None = None,
    params: OracleParams | None = None,
) -> Answer:
    """Answer a template instance.

    Args:
        g (SceneGraph | SceneIndex): Scene to answer over.
        template_id (str): Registered template id.
        binding (Binding): Slot values.
        templates (Sequence[QuestionTemplate] | None): Registry; the built-ins when omitted.
        params (OracleParams | None): Numeric parameters; defaults when omitted.

    Returns:
        Answer: The gold answer, with the template's answer kind.

    Raises:
        RegistryError: If `template_id` is not registered.
        InstanceReferenceError: If a reference is unknown or ambiguous.
        InstantiationError: If a needed slot is unbound.
        DegenerateGeometryError: For direction questions over coincident instances.
        ConfigurationError: If `params.front_bearing` differs from the graph's.
    """
    t = get_template(template_id, templates)
    params = params or OracleParams()
    idx = index_of(g)
    if params.front_bearing is not None and params.front_bearing != idx.graph.front_bearing:
        raise ConfigurationError(
            f"front bearing {params.front_bearing} does not match the graph's {idx.graph.front_bearing}"
        )
    S = SlotKind

    for slot in t.slots:
        _slot(binding, slot)

    match t.operation:
        case Operation.EXISTENCE:
            value = answer_existence(idx, _filter_from(binding))
        case Operation.COUNT:
            value = answer_count(idx, _filter_from(binding))
        case Operation.USAGE_OF:
            value = answer_attribute(idx, _slot(binding, S.INSTANCE_LABEL), "usage_label")
        case Operation.LOCATION_OF:
            value = answer_attribute(idx, _slot(binding, S.INSTANCE_LABEL), "location")
        case Operation.USAGE_LOCATION:
            value = answer_usage_location(idx, _slot(binding, S.USAGE))
        case Operation.HAS_USAGE:
            value = answer_has_usage(idx, _slot(binding, S.USAGE), _slot(binding, S.INSTANCE_LABEL))
        case Operation.NEAREST | Operation.FARTHER:
            value = answer_distance_comparison(
                idx,
                _slot(binding, S.INSTANCE_LABEL),
                _slot(binding, S.INSTANCE_LABEL_1),
                _slot(binding, S.INSTANCE_LABEL_2),
                "nearest" if t.operation is Operation.NEAREST else "farther_bool",
                params.tie_tolerance,
            )
        case Operation.LOCATION_CHOICE:
            value = answer_location_choice(
                idx, _slot(binding, S.LOCATION), _slot(binding, S.INSTANCE_LABEL_1), _slot(binding, S.INSTANCE_LABEL_2)
            )
        case Operation.DIRECTION:
            value = answer_direction(idx, _slot(binding, S.INSTANCE_LABEL_1), _slot(binding, S.INSTANCE_LABEL_2))
        case Operation.DENSITY:
            value = answer_density_comparison(
                idx,
                _slot(binding, S.TYPE_OF_INSTANCE),
                _slot(binding, S.INSTANCE_LABEL_1),
                _slot(binding, S.INSTANCE_LABEL_2),
                params.near_radius,
            )
        case Operation.USAGE_SELECTION:
            value = answer_usage_selection(
                idx, _slot(binding, S.USAGE), _slot(binding, S.INSTANCE_LABEL_1), _slot(binding, S.INSTANCE_LABEL_2)
            )
        case Operation.USAGE_EFFICIENCY:
            value = answer_usage_efficiency(
                idx,
                _slot(binding, S.USAGE),
                _slot(binding, S.INSTANCE_LABEL_1),
                _slot(binding, S.INSTANCE_LABEL_2),
                binding.values.get(S.INSTANCE_LABEL),
                params.tie_tolerance,
            )
        case Operation.USAGE_DIFFERENCE:
            value = answer_usage_difference(idx, _slot(binding, S.INSTANCE_LABEL_1), _slot(binding, S.INSTANCE_LABEL_2))

    return Answer(kind=t.answer_kind, value=value)
