"""Read-only index over a scene graph: label matching, filters and reference resolution.

Label matching is case-insensitive against an instance's class label,
category label and synonym triples. References take the form "the <label>"
or "the <label> in the <location>".
"""

from collections.abc import Iterable

from ..exceptions import InstanceReferenceError
from .scene import Instance, SceneGraph, SemanticAttribute, SpatialEdge

ARTICLE = "the "


def _key(text: str) -> str:
    return " ".join(text.split()).casefold()


class SceneIndex:
    """Per-instance attribute lookups over an immutable scene graph."""

    def __init__(self, graph: SceneGraph):
        """Index the graph's instances, triples and edges.

        Args:
            graph (SceneGraph): Graph to index.
        """
        self.graph = graph
        self.instances: dict[int, Instance] = {inst.id: inst for inst in sorted(graph.instances, key=lambda i: i.id)}
        self.synonyms: dict[int, list[str]] = {iid: [] for iid in self.instances}
        self.usages: dict[int, list[str]] = {iid: [] for iid in self.instances}
        self.location: dict[int, str] = {}
        for t in graph.semantic_triples:
            if t.subject not in self.instances:
                continue
            if t.attribute is SemanticAttribute.SYNONYM_LABEL:
                self.synonyms[t.subject].append(t.value)
            elif t.attribute is SemanticAttribute.USAGE_LABEL:
                self.usages[t.subject].append(t.value)
            elif t.attribute is SemanticAttribute.LOCATION:
                self.location.setdefault(t.subject, t.value)
        self.edges: dict[tuple[int, int], SpatialEdge] = {(e.head, e.tail): e for e in graph.spatial_edges}

        self._labels: dict[int, set[str]] = {
            iid: {_key(inst.class_label), _key(inst.category_label), *map(_key, self.synonyms[iid])}
            for iid, inst in self.instances.items()
        }
        self._usage_keys = {iid: {_key(u) for u in us} for iid, us in self.usages.items()}
        self._referable: list[tuple[str, int]] | None = None

    @property
    def ids(self) -> list[int]:
        """Instance ids in ascending order."""
        return list(self.instances)

    def labels_of(self, iid: int) -> list[str]:
        """Class label, category label and synonyms of an instance, without duplicates."""
        inst = self.instances[iid]
        return list(dict.fromkeys([inst.class_label, inst.category_label, *self.synonyms[iid]]))

    def has_label(self, iid: int, label: str) -> bool:
        """True when `label` names the instance's class, category or a synonym."""
        return _key(label) in self._labels[iid]

    def has_usage(self, iid: int, usage: str) -> bool:
        """True when the instance carries `usage`."""
        return _key(usage) in self._usage_keys[iid]

    def in_location(self, iid: int, location: str) -> bool:
        """True when the instance's location triple equals `location`."""
        return _key(self.location.get(iid, "")) == _key(location)

    def matching(self, label: str | None = None, usage: str | None = None, location: str | None = None) -> list[int]:
        """Ids of instances satisfying every given criterion."""
        return [
            iid
            for iid in self.instances
            if (label is None or self.has_label(iid, label))
            and (usage is None or self.has_usage(iid, usage))
            and (location is None or self.in_location(iid, location))
        ]

    def locations(self) -> list[str]:
        """Distinct location values present, sorted."""
        return sorted(set(self.location.values()))

    def resolve(self, surface: str) -> int:
        """Resolve an instance reference to exactly one instance id.

        Args:
            surface (str): "the <label>" or "the <label> in the <location>".

        Returns:
            int: The referenced instance id.

        Raises:
            InstanceReferenceError: If no instance or more than one instance matches.
        """
        text = " ".join(surface.split())
        if text.casefold().startswith(ARTICLE):
            text = text[len(ARTICLE):]

        candidates: list[int] = []
        # Longest location first so "north area" never shadows "far north area".
        for loc in sorted(self.locations(), key=len, reverse=True):
            suffix = f" in the {loc}"
            if text.casefold().endswith(suffix.casefold()) and len(text) > len(suffix):
                candidates = self.matching(label=text[: -len(suffix)], location=loc)
                if candidates:
                    break
        if not candidates:
            candidates = self.matching(label=text)

        if not candidates:
            raise InstanceReferenceError(f"no instance matches {surface!r}")
        if len(candidates) > 1:
            raise InstanceReferenceError(f"{surface!r} is ambiguous between instances {candidates}")
        return candidates[0]

    def reference_surface(self, iid: int, label: str | None = None) -> str | None:
        """Shortest reference that resolves to `iid`, or None when none does.

        Args:
            iid (int): Instance to refer to.
            label (str | None): Label to use; the category label by default.
        """
        label = label or self.instances[iid].category_label
        forms = [f"{ARTICLE}{label}"]
        if iid in self.location:
            forms.append(f"{ARTICLE}{label} in the {self.location[iid]}")
        for form in forms:
            try:
                if self.resolve(form) == iid:
                    return form
            except InstanceReferenceError:
                continue
        return None

    def referable(self) -> list[tuple[str, int]]:
        """(canonical reference, id) for every instance that can be referenced unambiguously."""
        if self._referable is None:
            pairs = ((self.reference_surface(iid), iid) for iid in self.instances)
            self._referable = [(surface, iid) for surface, iid in pairs if surface is not None]
        return list(self._referable)


def index_of(g: SceneGraph | SceneIndex) -> SceneIndex:
    """Return `g` when already indexed, else index it."""
    return g if isinstance(g, SceneIndex) else SceneIndex(g)


def distinct(values: Iterable[str]) -> list[str]:
    """Sorted distinct values."""
    return sorted(set(values))
