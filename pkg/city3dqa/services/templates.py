"""Question template registry, slot binding and instantiation.

The built-in registry holds the distinct rows of the city question grammar in
five categories. Bindings are drawn from a scene graph with a per-template
seeded generator so that generation is reproducible and independent of the
order or thread in which templates are processed.
"""

import hashlib
import itertools
import logging
import math
import random
import re
from collections.abc import Sequence
from enum import StrEnum
from functools import lru_cache
from pathlib import Path

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from ..exceptions import InstantiationError, ManifestFormatError, RegistryError, describe_validation_error
from .lookup import SceneIndex, distinct, index_of
from .manifest import load_json_document
from .scene import SceneGraph

logger = logging.getLogger(__name__)

ANNOUNCED_TEMPLATE_COUNT = 33
PRINTED_TEMPLATE_ROWS = 32

# Above this many slot combinations, bindings are sampled by index instead of listed.
ENUMERATION_THRESHOLD = 20_000
SAMPLING_ATTEMPTS_PER_BINDING = 50


class Category(StrEnum):
    """Question categories."""

    INSTANCE_IDENTIFICATION = "instance_identification"
    USAGE_INQUIRY = "usage_inquiry"
    RELATIONSHIP = "relationship"
    SPATIAL_COMPARISON = "spatial_comparison"
    USAGE_COMPARISON = "usage_comparison"


MULTI_HOP_CATEGORIES = frozenset({Category.SPATIAL_COMPARISON, Category.USAGE_COMPARISON})


class Hops(StrEnum):
    """Hop class of a question."""

    SINGLE = "single"
    MULTI = "multi"


class AnswerKind(StrEnum):
    """Shape of the gold answer."""

    YES_NO = "yes_no"
    COUNT = "count"
    USAGE_VALUE = "usage_value"
    LOCATION_VALUE = "location_value"
    DIRECTION_VALUE = "direction_value"
    INSTANCE_CHOICE = "instance_choice"
    USAGE_DIFF = "usage_diff"


class Operation(StrEnum):
    """Oracle operation answering a template."""

    EXISTENCE = "existence"
    COUNT = "count"
    USAGE_OF = "usage_of"
    LOCATION_OF = "location_of"
    USAGE_LOCATION = "usage_location"
    HAS_USAGE = "has_usage"
    NEAREST = "nearest"
    FARTHER = "farther"
    LOCATION_CHOICE = "location_choice"
    DIRECTION = "direction"
    DENSITY = "density"
    USAGE_SELECTION = "usage_selection"
    USAGE_EFFICIENCY = "usage_efficiency"
    USAGE_DIFFERENCE = "usage_difference"


ANSWER_KINDS = {
    Operation.EXISTENCE: AnswerKind.YES_NO,
    Operation.COUNT: AnswerKind.COUNT,
    Operation.USAGE_OF: AnswerKind.USAGE_VALUE,
    Operation.LOCATION_OF: AnswerKind.LOCATION_VALUE,
    Operation.USAGE_LOCATION: AnswerKind.LOCATION_VALUE,
    Operation.HAS_USAGE: AnswerKind.YES_NO,
    Operation.NEAREST: AnswerKind.INSTANCE_CHOICE,
    Operation.FARTHER: AnswerKind.YES_NO,
    Operation.LOCATION_CHOICE: AnswerKind.INSTANCE_CHOICE,
    Operation.DIRECTION: AnswerKind.DIRECTION_VALUE,
    Operation.DENSITY: AnswerKind.INSTANCE_CHOICE,
    Operation.USAGE_SELECTION: AnswerKind.INSTANCE_CHOICE,
    Operation.USAGE_EFFICIENCY: AnswerKind.INSTANCE_CHOICE,
    Operation.USAGE_DIFFERENCE: AnswerKind.USAGE_DIFF,
}

# Operations where [instance label] names a kind of object rather than one instance.
FILTER_OPERATIONS = frozenset({Operation.EXISTENCE, Operation.COUNT})

# Answered with a straight-line distance standing in for travel time.
PROXY_SEMANTICS = {"SC-07": "travel time approximated by straight-line centroid distance"}


class SlotKind(StrEnum):
    """Bracketed slot types of the grammar."""

    INSTANCE_LABEL = "instance_label"
    INSTANCE_LABEL_1 = "instance_label_1"
    INSTANCE_LABEL_2 = "instance_label_2"
    USAGE = "usage"
    LOCATION = "location"
    TYPE_OF_INSTANCE = "type_of_instance"

    @property
    def placeholder(self) -> str:
        """The slot as written in a pattern, e.g. "[instance label 1]"."""
        return f"[{self.value.replace('_', ' ')}]"


INSTANCE_SLOTS = (SlotKind.INSTANCE_LABEL, SlotKind.INSTANCE_LABEL_1, SlotKind.INSTANCE_LABEL_2)
_PLACEHOLDER = re.compile(r"\[([^\[\]]+)\]")


def parse_slots(pattern: str) -> tuple[SlotKind, ...]:
    """Slots of a pattern in order of appearance.

    Raises:
        ValueError: On an unknown slot name.
    """
    return tuple(SlotKind("_".join(name.split())) for name in _PLACEHOLDER.findall(pattern))


class QuestionTemplate(BaseModel):
    """One question pattern with its category, hop class and answer shape."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    category: Category
    hops: Hops
    pattern: str
    slots: tuple[SlotKind, ...] = ()
    answer_kind: AnswerKind | None = None
    operation: Operation

    @model_validator(mode="before")
    @classmethod
    def _derive(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            if not data.get("slots") and "pattern" in data:
                data["slots"] = parse_slots(data["pattern"])
            if not data.get("answer_kind") and "operation" in data:
                data["answer_kind"] = ANSWER_KINDS[Operation(data["operation"])]
        return data

    @model_validator(mode="after")
    def _consistent(self):
        if parse_slots(self.pattern) != self.slots:
            raise ValueError(f"template {self.id}: slots {self.slots} do not match pattern")
        if len(set(self.slots)) != len(self.slots):
            raise ValueError(f"template {self.id}: repeated slot")
        expected = Hops.MULTI if self.category in MULTI_HOP_CATEGORIES else Hops.SINGLE
        if self.hops is not expected:
            raise ValueError(f"template {self.id}: {self.category} questions are {expected}-hop")
        if self.answer_kind is not ANSWER_KINDS[self.operation]:
            raise ValueError(f"template {self.id}: {self.operation} answers are {ANSWER_KINDS[self.operation]}")
        return self


def _t(template_id: str, category: Category, operation: Operation, pattern: str) -> QuestionTemplate:
    hops = Hops.MULTI if category in MULTI_HOP_CATEGORIES else Hops.SINGLE
    return QuestionTemplate(id=template_id, category=category, hops=hops, pattern=pattern, operation=operation)


_II, _UI, _RQ = Category.INSTANCE_IDENTIFICATION, Category.USAGE_INQUIRY, Category.RELATIONSHIP
_SC, _UC = Category.SPATIAL_COMPARISON, Category.USAGE_COMPARISON
_O = Operation

BUILTIN_TEMPLATES = (
    _t("II-01", _II, _O.EXISTENCE, "Is there any [instance label]?"),
    _t("II-02", _II, _O.COUNT, "How many [instance label] are in this scene?"),
    _t("II-03", _II, _O.COUNT, "What is the number of [instance label]?"),
    _t("II-04", _II, _O.EXISTENCE, "Do [instance label] exist in this area?"),
    _t("UI-01", _UI, _O.USAGE_OF, "What is usage of [instance label]?"),
    _t("UI-02", _UI, _O.EXISTENCE, "Is there any [instance label] which can [usage]?"),
    _t("UI-03", _UI, _O.COUNT, "How many [instance label] which can [usage] are in this area?"),
    _t("UI-04", _UI, _O.COUNT, "What is the number of [usage]?"),
    _t("UI-05", _UI, _O.EXISTENCE, "Do [usage] exist in this area?"),
    _t("UI-06", _UI, _O.HAS_USAGE, "I need [usage], should I choose to go [instance label] ?"),
    _t("RQ-01", _RQ, _O.EXISTENCE, "Is there any [instance label] in the [location]?"),
    _t("RQ-02", _RQ, _O.LOCATION_OF, "Where is the location of [instance label]?"),
    _t("RQ-03", _RQ, _O.USAGE_LOCATION, "What is the location of [usage]?"),
    _t("RQ-04", _RQ, _O.EXISTENCE, "Is there any [usage] in the [location]?"),
    _t("RQ-05", _RQ, _O.EXISTENCE, "Do [usage] exist in the [location]?"),
    _t("RQ-06", _RQ, _O.EXISTENCE, "Do [instance label] exist in the [location]?"),
    _t("RQ-07", _RQ, _O.COUNT, "How many [usage] in the [location]?"),
    _t("RQ-08", _RQ, _O.COUNT, "What's the number of [usage] in the [location]?"),
    _t("RQ-09", _RQ, _O.COUNT, "What's the number of [instance label] in the [location]?"),
    _t("SC-01", _SC, _O.NEAREST, "Which is closer to [instance label], [instance label 1] or [instance label 2]?"),
    _t("SC-02", _SC, _O.LOCATION_CHOICE, "Which is in the [location], [instance label 1] or [instance label 2]?"),
    _t("SC-03", _SC, _O.FARTHER, "Is [instance label 1] farther than [instance label 2] from [instance label]?"),
    _t(
        "SC-04",
        _SC,
        _O.NEAREST,
        "Between [instance label 1] and [instance label 2], which is nearest to [instance label]?",
    ),
    _t("SC-05", _SC, _O.DIRECTION, "In which direction is [instance label 1] relative to [instance label 2]?"),
    _t("SC-06", _SC, _O.DENSITY, "Are there more [type of instance] near [instance label 1] or [instance label 2]?"),
    _t(
        "SC-07",
        _SC,
        _O.NEAREST,
        "I am at [instance label], is it quicker to reach [instance label 1] or [instance label 2]?",
    ),
    _t(
        "UC-01",
        _UC,
        _O.USAGE_DIFFERENCE,
        "How is [instance label 1] different from [instance label 2] in terms of usage?",
    ),
    _t(
        "UC-02",
        _UC,
        _O.USAGE_EFFICIENCY,
        "Which is more efficient for [usage], [instance label 1] or [instance label 2] ?",
    ),
    _t(
        "UC-03",
        _UC,
        _O.USAGE_SELECTION,
        "I want [usage], which I should go, [instance label 1] or [instance label 2] ?",
    ),
    _t(
        "UC-04",
        _UC,
        _O.USAGE_SELECTION,
        "I need [usage], which I should choose to go, [instance label 1] or [instance label 2] ?",
    ),
    _t(
        "UC-05",
        _UC,
        _O.USAGE_SELECTION,
        "I need [usage], should I choose to go [instance label 1] or [instance label 2] ?",
    ),
)


@lru_cache(maxsize=1)
def load_registry() -> tuple[QuestionTemplate, ...]:
    """Return the built-in templates in table order.

    One relationship row is printed twice in the source table, so 31 distinct
    templates are registered although 33 are announced.
    """
    logger.info(
        "registered %d distinct templates; %d announced, %d rows printed (one relationship row duplicated)",
        len(BUILTIN_TEMPLATES),
        ANNOUNCED_TEMPLATE_COUNT,
        PRINTED_TEMPLATE_ROWS,
    )
    return BUILTIN_TEMPLATES


def load_templates(path: str | Path) -> list[QuestionTemplate]:
    """Load a user template file: a JSON list with the registry schema.

    Raises:
        ManifestFormatError: Naming the entry and field at fault.
    """
    data = load_json_document(path)
    if not isinstance(data, list):
        raise ManifestFormatError(f"{path}: template file must be a list")
    templates = []
    for n, entry in enumerate(data):
        try:
            templates.append(QuestionTemplate.model_validate(entry))
        except ValidationError as exc:
            raise ManifestFormatError(f"{path}: entry {n}: {describe_validation_error(exc)}") from None
    return templates


def merge_registry(
    builtins: Sequence[QuestionTemplate], extra: Sequence[QuestionTemplate]
) -> tuple[QuestionTemplate, ...]:
    """Append user templates behind the built-ins; built-in ids always win."""
    known = {t.id for t in builtins}
    merged = list(builtins)
    for t in extra:
        if t.id in known:
            logger.warning("user template %s ignored: id is already registered", t.id)
            continue
        known.add(t.id)
        merged.append(t)
    return tuple(merged)


def get_template(template_id: str, templates: Sequence[QuestionTemplate] | None = None) -> QuestionTemplate:
    """Look up a template by id.

    Raises:
        RegistryError: If the id is not registered.
    """
    for t in templates if templates is not None else load_registry():
        if t.id == template_id:
            return t
    raise RegistryError(f"unknown template id {template_id!r}")


def hops_of(t: QuestionTemplate) -> Hops:
    """Hop class of a template."""
    return t.hops


# ----------------------------
# Bindings
# ----------------------------


class Binding(BaseModel):
    """Surface values for every slot plus the instances they were drawn for."""

    model_config = ConfigDict(frozen=True)

    values: dict[SlotKind, str]
    instance_ids: dict[SlotKind, int] = {}

    def canonical(self) -> list[list[str]]:
        """Slot/value pairs sorted by slot name, the form hashed into qids."""
        return [[slot.value, value] for slot, value in sorted(self.values.items(), key=lambda kv: kv[0].value)]


def sub_seed(*parts) -> int:
    """Derive a 64-bit seed from named parts (master seed, city, scene, template id...)."""
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _slot_roles(t: QuestionTemplate) -> tuple[set[SlotKind], set[SlotKind]]:
    """Split slots into instance references and kind/value slots."""
    if t.operation in FILTER_OPERATIONS:
        return set(), set(t.slots)
    refs = {s for s in t.slots if s in INSTANCE_SLOTS}
    return refs, set(t.slots) - refs


def _candidates(t: QuestionTemplate, idx: SceneIndex) -> dict[SlotKind, list[tuple[str, int | None]]]:
    """Canonical candidate (surface, instance id) lists per slot."""
    refs, _ = _slot_roles(t)
    insts = idx.instances.values()
    pools: dict[SlotKind, list[tuple[str, int | None]]] = {}
    referable = idx.referable()
    if t.operation in (Operation.LOCATION_OF, Operation.LOCATION_CHOICE):
        # A location suffix in the reference would give the answer away.
        referable = [(s, iid) for s, iid in referable if not s.endswith(f" in the {idx.location.get(iid)}")]
    labels = distinct([i.category_label for i in insts] + [i.class_label for i in insts])

    for slot in t.slots:
        if slot in refs:
            pool = referable
            if t.operation is Operation.USAGE_OF:
                pool = [(s, iid) for s, iid in referable if idx.usages[iid]]
            pools[slot] = pool
        elif slot in INSTANCE_SLOTS:
            pools[slot] = [(label, None) for label in labels]
        elif slot is SlotKind.TYPE_OF_INSTANCE:
            pools[slot] = [(label, None) for label in distinct(i.class_label for i in insts)]
        elif slot is SlotKind.USAGE:
            pools[slot] = [(u, None) for u in distinct(u for us in idx.usages.values() for u in us)]
        elif slot is SlotKind.LOCATION:
            pools[slot] = [(loc, None) for loc in idx.locations()]
    return pools


def _valid(t: QuestionTemplate, idx: SceneIndex, combo: dict[SlotKind, tuple[str, int | None]]) -> bool:
    ids = [iid for _, iid in combo.values() if iid is not None]
    if len(ids) != len(set(ids)):
        return False
    if t.operation is Operation.DIRECTION:
        a = idx.instances[combo[SlotKind.INSTANCE_LABEL_1][1]].centroid
        b = idx.instances[combo[SlotKind.INSTANCE_LABEL_2][1]].centroid
        return (a.x, a.y) != (b.x, b.y)
    return True


def _decode(index: int, sizes: list[int]) -> list[int]:
    digits = []
    for size in reversed(sizes):
        index, d = divmod(index, size)
        digits.append(d)
    return digits[::-1]


def _maybe_synonym(
    idx: SceneIndex, slot: SlotKind, surface: str, iid: int | None, rng: random.Random, probability: float
) -> str:
    """Swap a label for a lexicon synonym on a seeded coin, keeping references unambiguous."""
    if slot not in INSTANCE_SLOTS or rng.random() >= probability:
        return surface
    if iid is not None:
        options = idx.synonyms[iid]
        if not options:
            return surface
        swapped = idx.reference_surface(iid, rng.choice(options))
        return swapped if swapped is not None else surface
    options = distinct(s for i in idx.matching(label=surface) for s in idx.synonyms[i])
    return rng.choice(options) if options else surface


def enumerate_bindings(
    t: QuestionTemplate,
    g: SceneGraph | SceneIndex,
    seed: int = 0,
    limit: int = 20,
    synonym_probability: float = 0.0,
) -> list[Binding]:
    """Draw up to `limit` distinct answerable bindings for a template.

    Small slot spaces are listed and sampled without replacement; large ones
    are sampled by combination index. The result is in canonical order (the
    lexicographic order of candidate positions).

    Args:
        t (QuestionTemplate): Template to bind.
        g (SceneGraph | SceneIndex): Scene to draw values from.
        seed (int, optional): Master seed. Defaults to 0.
        limit (int, optional): Maximum number of bindings. Defaults to 20.
        synonym_probability (float, optional): Chance of replacing a label with a synonym.

    Returns:
        list[Binding]: Bindings, empty when the scene cannot fill the slots.
    """
    if limit < 0:
        raise ValueError("limit must be non-negative")
    idx = index_of(g)
    if limit == 0 or not idx.instances:
        return []

    pools = _candidates(t, idx)
    sizes = [len(pools[slot]) for slot in t.slots]
    if any(size == 0 for size in sizes):
        return []

    rng = random.Random(sub_seed(seed, idx.graph.city, idx.graph.scene_id, t.id))

    def combo_at(positions: Sequence[int]) -> dict[SlotKind, tuple[str, int | None]]:
        return {slot: pools[slot][p] for slot, p in zip(t.slots, positions)}

    total = math.prod(sizes)
    if total <= ENUMERATION_THRESHOLD:
        valid = [
            positions
            for positions in itertools.product(*(range(size) for size in sizes))
            if _valid(t, idx, combo_at(positions))
        ]
        chosen = rng.sample(valid, min(limit, len(valid)))
    else:
        seen: set[int] = set()
        chosen = []
        attempts = limit * SAMPLING_ATTEMPTS_PER_BINDING
        while len(chosen) < limit and attempts > 0:
            attempts -= 1
            k = rng.randrange(total)
            if k in seen:
                continue
            seen.add(k)
            positions = tuple(_decode(k, sizes))
            if _valid(t, idx, combo_at(positions)):
                chosen.append(positions)

    bindings = []
    for positions in sorted(chosen):
        combo = combo_at(positions)
        values = {
            slot: _maybe_synonym(idx, slot, surface, iid, rng, synonym_probability)
            for slot, (surface, iid) in combo.items()
        }
        ids = {slot: iid for slot, (_, iid) in combo.items() if iid is not None}
        bindings.append(Binding(values=values, instance_ids=ids))
    return bindings


def instantiate(t: QuestionTemplate, b: Binding) -> str:
    """Fill every slot of the pattern with its bound surface form.

    Raises:
        InstantiationError: "unbound slot: <slot>" for the first slot without a value.
    """
    text = t.pattern
    for slot in t.slots:
        value = b.values.get(slot)
        if value is None or not value.strip():
            raise InstantiationError(f"unbound slot: {slot.value}")
        text = text.replace(slot.placeholder, " ".join(value.split()), 1)
    return " ".join(text.split())
