"""QA pair assembly, paraphrasing, answer space and train/val/test splits."""

import json
import logging
import math
import random
import re
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError
from tqdm import tqdm

from ..exceptions import City3DQAError, ConfigurationError, DatasetFormatError, describe_validation_error
from .llm import ChatCompletionClient
from .lookup import SceneIndex
from .oracle import Answer, OracleParams, answer
from .scene import SceneGraph
from .templates import (
    INSTANCE_SLOTS,
    PROXY_SEMANTICS,
    Binding,
    Category,
    Hops,
    QuestionTemplate,
    enumerate_bindings,
    instantiate,
    load_registry,
    sub_seed,
)
from .text import normalize_answer

logger = logging.getLogger(__name__)

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

DEFAULT_SPLIT_RATIOS = (0.69, 0.17, 0.14)
DEFAULT_CITY_SPLIT = {
    "train": ("Longhua", "Wuhu", "Qingdao", "Yingrenshi"),
    "val": ("Lihu",),
    "test": ("Yuehai",),
}

DEFAULT_PARAPHRASE_PROMPT = (
    "If you were the multimodal researcher, please generate the question based on the following template: "
    "[template]. \n The answer is: [answer].\n Here, the slots in template are [graph]. \n "
    "In this process, your generated question-answer pairs are in accordance with daily language habits."
)


class Provenance(BaseModel):
    """How a pair was produced: enough to re-answer it."""

    model_config = ConfigDict(frozen=True)

    template_id: str
    binding: Binding
    oracle_params: OracleParams
    semantics: str | None = None
    original_question: str | None = None


class QaPair(BaseModel):
    """One question with its gold answer and provenance."""

    model_config = ConfigDict(frozen=True)

    qid: str = Field(pattern=r"^[0-9a-f]{16}$")
    city: str
    scene_id: str
    category: Category
    hops: Hops
    question: str = Field(min_length=1)
    answer: Answer
    provenance: Provenance
    paraphrased: bool = False


class GenerationConfig(BaseModel):
    """Seed, caps and oracle parameters of one generation run."""

    model_config = ConfigDict(frozen=True)

    seed: int = 0
    per_template_limit: int = Field(20, ge=0)
    synonym_probability: float = Field(0.3, ge=0, le=1)
    oracle: OracleParams = OracleParams()


# ----------------------------
# Identity
# ----------------------------


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def compute_qid(city: str, scene_id: str, template_id: str, binding: Binding) -> str:
    """16 hex digits of FNV-1a over the compact JSON of (city, scene, template, canonical binding)."""
    payload = json.dumps([city, scene_id, template_id, binding.canonical()], ensure_ascii=False, separators=(",", ":"))
    return f"{fnv1a_64(payload.encode('utf-8')):016x}"


# ----------------------------
# Generation
# ----------------------------


def generate_pairs(
    g: SceneGraph,
    registry: Sequence[QuestionTemplate] | None = None,
    config: GenerationConfig | None = None,
) -> list[QaPair]:
    """Generate QA pairs for one scene graph.

    Templates run in id order and bindings in canonical order. Bindings the
    oracle rejects are logged and skipped.

    Args:
        g (SceneGraph): Scene to ask about.
        registry (Sequence[QuestionTemplate] | None): Templates; the built-ins when omitted.
        config (GenerationConfig | None): Seed, caps and oracle parameters.

    Returns:
        list[QaPair]: Pairs in deterministic order.

    Raises:
        ConfigurationError: If the oracle's front bearing differs from the graph's.
    """
    registry = tuple(registry) if registry is not None else load_registry()
    config = config or GenerationConfig()
    bearing = config.oracle.front_bearing
    if bearing is not None and bearing != g.front_bearing:
        raise ConfigurationError(f"front bearing {bearing} does not match {g.city}/{g.scene_id}'s {g.front_bearing}")
    params = config.oracle.model_copy(update={"front_bearing": g.front_bearing})
    idx = SceneIndex(g)
    pairs = []
    for t in sorted(registry, key=lambda t: t.id):
        bindings = enumerate_bindings(t, idx, config.seed, config.per_template_limit, config.synonym_probability)
        for b in bindings:
            try:
                question = instantiate(t, b)
                gold = answer(idx, t.id, b, registry, params)
            except City3DQAError as exc:
                logger.warning("%s/%s %s: binding skipped: %s", g.city, g.scene_id, t.id, exc)
                continue
            pairs.append(
                QaPair(
                    qid=compute_qid(g.city, g.scene_id, t.id, b),
                    city=g.city,
                    scene_id=g.scene_id,
                    category=t.category,
                    hops=t.hops,
                    question=question,
                    answer=gold,
                    provenance=Provenance(
                        template_id=t.id,
                        binding=b,
                        oracle_params=params,
                        semantics=PROXY_SEMANTICS.get(t.id),
                    ),
                )
            )
    return pairs


def generate_dataset(
    graphs: Iterable[SceneGraph],
    registry: Sequence[QuestionTemplate] | None = None,
    config: GenerationConfig | None = None,
    jobs: int = 1,
    progress: bool = False,
) -> list[QaPair]:
    """Generate pairs for many scenes, in (city, scene_id) order whatever the worker count."""
    ordered = sorted(graphs, key=lambda g: g.key)
    registry = tuple(registry) if registry is not None else load_registry()

    def run(g: SceneGraph) -> list[QaPair]:
        return generate_pairs(g, registry, config)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        results = tqdm(executor.map(run, ordered), total=len(ordered), unit="scene", disable=not progress)
        return [pair for scene_pairs in results for pair in scene_pairs]


def dedup_pairs(pairs: Iterable[QaPair]) -> list[QaPair]:
    """Drop repeated (question, answer, scene) pairs, keeping the first."""
    seen: set[tuple[str, str, str, str]] = set()
    kept = []
    for p in pairs:
        key = (p.question, p.answer.value, p.city, p.scene_id)
        if key in seen:
            continue
        seen.add(key)
        kept.append(p)
    return kept


def reanswer(p: QaPair, g: SceneGraph | SceneIndex, registry: Sequence[QuestionTemplate] | None = None) -> Answer:
    """Answer a pair again from its provenance."""
    return answer(g, p.provenance.template_id, p.provenance.binding, registry, p.provenance.oracle_params)


# ----------------------------
# Answer space
# ----------------------------


class AnswerCount(BaseModel):
    """One normalized answer and how often it occurs."""

    model_config = ConfigDict(frozen=True)

    answer: str
    count: int = Field(ge=1)


class AnswerSpace(BaseModel):
    """Closed answer vocabulary ordered by descending frequency, then text."""

    model_config = ConfigDict(frozen=True)

    entries: tuple[AnswerCount, ...] = ()

    @property
    def answers(self) -> list[str]:
        """The answers in rank order."""
        return [e.answer for e in self.entries]

    def __contains__(self, item: str) -> bool:
        """Membership by normalized answer."""
        return normalize_answer(item) in {e.answer for e in self.entries}


def rank_answers(answers: Iterable[str]) -> AnswerSpace:
    """Count normalized answers and order them by (-count, answer)."""
    counts = Counter(normalize_answer(a) for a in answers)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return AnswerSpace(entries=tuple(AnswerCount(answer=a, count=n) for a, n in ranked))


def build_answer_space(pairs: Iterable[QaPair]) -> AnswerSpace:
    """Answer space of a dataset."""
    return rank_answers(p.answer.value for p in pairs)


def write_answer_space(space: AnswerSpace, sink) -> None:
    """Write an answer space as JSON."""
    sink.write(space.model_dump_json(indent=2))
    sink.write("\n")


def read_answer_space(source) -> AnswerSpace:
    """Read an answer space written by `write_answer_space`."""
    try:
        return AnswerSpace.model_validate_json(source.read())
    except ValidationError as exc:
        raise DatasetFormatError(f"invalid answer space: {describe_validation_error(exc)}") from None


# ----------------------------
# Paraphrase
# ----------------------------


ParaphraseStatus = Literal["accepted", "rejected", "failed"]


class ParaphraseResult(BaseModel):
    """Pairs after paraphrasing and what happened to them."""

    model_config = ConfigDict(frozen=True)

    pairs: tuple[QaPair, ...]
    accepted: int = 0
    rejected: int = 0
    failed: int = 0


def fill_prompt(prompt_template: str, template_text: str, answer_text: str, graph_text: str) -> str:
    """Fill the [template], [answer] and [graph] placeholders in one pass."""
    values = {"template": template_text, "answer": answer_text, "graph": graph_text}
    return re.sub(r"\[(template|answer|graph)\]", lambda m: values[m.group(1)], prompt_template)


def describe_binding(binding: Binding) -> str:
    """Slot assignments as "[slot] = value" joined by "; "."""
    return "; ".join(f"{slot.placeholder} = {value}" for slot, value in binding.values.items())


def parse_reply(reply: str) -> tuple[str, str | None]:
    """Split a model reply into (question, answer or None).

    Recognizes "Question:" and "Answer:" prefixes; otherwise the first
    non-empty line is the question.
    """
    question, answer_text = None, None
    lines = [line.strip() for line in reply.splitlines() if line.strip()]
    for line in lines:
        lower = line.casefold()
        if lower.startswith("question:") and question is None:
            question = line.split(":", 1)[1].strip()
        elif lower.startswith("answer:") and answer_text is None:
            answer_text = line.split(":", 1)[1].strip()
    if question is None:
        question = lines[0] if lines else ""
    return question.strip().strip('"').strip(), answer_text


def _mentions(question: str, p: QaPair, idx: SceneIndex | None) -> bool:
    """True when every bound value, or an accepted alternative, appears in the question."""
    text = question.casefold()
    binding = p.provenance.binding
    for slot, value in binding.values.items():
        iid = binding.instance_ids.get(slot)
        if idx is not None and slot in INSTANCE_SLOTS and iid is not None and iid in idx.instances:
            labels = idx.labels_of(iid)
            loc = idx.location.get(iid)
            if not any(label.casefold() in text for label in labels):
                return False
            if loc and value.casefold().endswith(f" in the {loc}".casefold()) and loc.casefold() not in text:
                return False
            continue
        alternatives = [value]
        if idx is not None and slot in INSTANCE_SLOTS:
            alternatives += [s for i in idx.matching(label=value) for s in idx.labels_of(i)]
        if not any(a.casefold() in text for a in alternatives):
            return False
    return True


def _paraphrase(
    p: QaPair,
    client: ChatCompletionClient,
    prompt_template: str,
    idx: SceneIndex | None,
    template_text: str | None,
) -> tuple[QaPair, ParaphraseStatus]:
    prompt = fill_prompt(
        prompt_template, template_text or p.question, p.answer.value, describe_binding(p.provenance.binding)
    )
    try:
        reply = client.complete(prompt)
    except City3DQAError as exc:
        logger.warning("paraphrase of %s fell back to the template question: %s", p.qid, exc)
        return p, "failed"

    question, stated_answer = parse_reply(reply)
    if not question:
        logger.info("paraphrase of %s rejected: empty question", p.qid)
        return p, "rejected"
    if stated_answer is not None and normalize_answer(stated_answer) != normalize_answer(p.answer.value):
        logger.info("paraphrase of %s rejected: answer changed to %r", p.qid, stated_answer)
        return p, "rejected"
    if not _mentions(question, p, idx):
        logger.info("paraphrase of %s rejected: a bound entity is missing", p.qid)
        return p, "rejected"

    provenance = p.provenance.model_copy(update={"original_question": p.question})
    return p.model_copy(update={"question": question, "paraphrased": True, "provenance": provenance}), "accepted"


def paraphrase_pair(
    p: QaPair,
    client: ChatCompletionClient,
    prompt_template: str = DEFAULT_PARAPHRASE_PROMPT,
    graph: SceneGraph | SceneIndex | None = None,
    registry: Sequence[QuestionTemplate] | None = None,
) -> QaPair:
    """Reword a pair's question through the endpoint, keeping the gold answer.

    The reply is accepted only when it names every bound entity (or a synonym)
    and does not state a different answer. Any failure returns `p` unchanged.

    Args:
        p (QaPair): Pair to paraphrase.
        client (ChatCompletionClient): Endpoint client.
        prompt_template (str): Prompt with [template], [answer] and [graph] placeholders.
        graph (SceneGraph | SceneIndex | None): Scene of the pair, used to accept synonyms.
        registry (Sequence[QuestionTemplate] | None): Templates, for the pattern text.

    Returns:
        QaPair: The paraphrased pair, or `p` when the paraphrase was rejected or failed.
    """
    idx = SceneIndex(graph) if isinstance(graph, SceneGraph) else graph
    return _paraphrase(p, client, prompt_template, idx, _pattern_of(p, registry))[0]


def _pattern_of(p: QaPair, registry: Sequence[QuestionTemplate] | None) -> str | None:
    for t in registry if registry is not None else load_registry():
        if t.id == p.provenance.template_id:
            return t.pattern
    return None


def paraphrase_pairs(
    pairs: Sequence[QaPair],
    client: ChatCompletionClient,
    graphs: Mapping[tuple[str, str], SceneGraph] | None = None,
    prompt_template: str = DEFAULT_PARAPHRASE_PROMPT,
    max_in_flight: int = 4,
    registry: Sequence[QuestionTemplate] | None = None,
    progress: bool = False,
) -> ParaphraseResult:
    """Paraphrase many pairs with at most `max_in_flight` concurrent requests, preserving order."""
    indexes = {key: SceneIndex(g) for key, g in (graphs or {}).items()}

    def run(p: QaPair) -> tuple[QaPair, ParaphraseStatus]:
        return _paraphrase(p, client, prompt_template, indexes.get((p.city, p.scene_id)), _pattern_of(p, registry))

    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as executor:
        results = list(tqdm(executor.map(run, pairs), total=len(pairs), unit="pair", disable=not progress))

    statuses = Counter(status for _, status in results)
    if statuses["failed"]:
        logger.warning("%d of %d paraphrase requests failed; template questions kept", statuses["failed"], len(pairs))
    return ParaphraseResult(
        pairs=tuple(p for p, _ in results),
        accepted=statuses["accepted"],
        rejected=statuses["rejected"],
        failed=statuses["failed"],
    )


# ----------------------------
# Splits
# ----------------------------


class SplitAssignment(BaseModel):
    """Disjoint train/val/test qid lists and the parameters that produced them."""

    model_config = ConfigDict(frozen=True)

    mode: Literal["sentence_wise", "city_wise"]
    params: dict
    train: tuple[str, ...] = ()
    val: tuple[str, ...] = ()
    test: tuple[str, ...] = ()


def _qids_by_city(pairs: Iterable[QaPair]) -> dict[str, list[str]]:
    by_city: dict[str, set[str]] = {}
    for p in pairs:
        by_city.setdefault(p.city, set()).add(p.qid)
    return {city: sorted(qids) for city, qids in sorted(by_city.items())}


def _apportion(sizes: Mapping[str, int], total: int, caps: Mapping[str, int]) -> dict[str, int]:
    """Largest-remainder allocation of `total` proportional to `sizes`, capped per city."""
    n = sum(sizes.values())
    alloc = {c: 0 for c in sizes}
    if n == 0 or total <= 0:
        return alloc
    quotas = {c: sizes[c] * total / n for c in sizes}
    for c in sizes:
        alloc[c] = min(int(quotas[c]), caps[c])
    order = sorted(sizes, key=lambda c: (-(quotas[c] - int(quotas[c])), c))
    remaining = total - sum(alloc.values())
    while remaining > 0:
        progressed = False
        for c in order:
            if remaining == 0:
                break
            if alloc[c] < caps[c]:
                alloc[c] += 1
                remaining -= 1
                progressed = True
        if not progressed:
            break
    return alloc


def _cover(alloc: dict[str, int], sizes: Mapping[str, int]) -> None:
    """Give every city with at least 3 pairs a share of the split, taking from the largest share."""
    for c in sorted(alloc):
        if sizes[c] >= 3 and alloc[c] == 0:
            donors = [d for d in alloc if alloc[d] >= 2]
            if not donors:
                return
            donor = max(donors, key=lambda d: (alloc[d], d))
            alloc[donor] -= 1
            alloc[c] += 1


def _check_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    if len(ratios) != 3 or any(not math.isfinite(r) or r <= 0 for r in ratios):
        raise ConfigurationError(f"split ratios must be three positive numbers, got {list(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigurationError(f"split ratios must sum to 1, got {sum(ratios)}")
    return ratios[0], ratios[1], ratios[2]


def split_sentence_wise(
    pairs: Iterable[QaPair], ratios: Sequence[float] = DEFAULT_SPLIT_RATIOS, seed: int = 0
) -> SplitAssignment:
    """Seeded random split with the same ratios in every city.

    This is a stratified split, not one global shuffle: each city's pairs are
    shuffled with their own sub-seed and cut into test, val and train.

    Val and test sizes are floor(n * ratio); train takes the remainder. Each
    city's share of val and test is proportional to its size (largest
    remainder), and every city with at least three pairs appears in all three
    splits.

    Raises:
        ConfigurationError: If the ratios are not positive or do not sum to 1.
    """
    r_train, r_val, r_test = _check_ratios(ratios)
    by_city = _qids_by_city(pairs)
    sizes = {c: len(q) for c, q in by_city.items()}
    n = sum(sizes.values())
    n_val = math.floor(n * r_val + 1e-9)
    n_test = math.floor(n * r_test + 1e-9)

    reserve = {c: 1 if s >= 3 else 0 for c, s in sizes.items()}
    test = _apportion(sizes, n_test, {c: sizes[c] - reserve[c] for c in sizes})
    val = _apportion(sizes, n_val, {c: sizes[c] - test[c] - reserve[c] for c in sizes})
    if sum(val.values()) < n_val:
        val = _apportion(sizes, n_val, {c: sizes[c] - test[c] for c in sizes})
    _cover(test, sizes)
    _cover(val, sizes)

    train_ids, val_ids, test_ids = [], [], []
    for city, qids in by_city.items():
        shuffled = list(qids)
        random.Random(sub_seed(seed, "sentence_wise", city)).shuffle(shuffled)
        test_ids += shuffled[: test[city]]
        val_ids += shuffled[test[city] : test[city] + val[city]]
        train_ids += shuffled[test[city] + val[city] :]

    return SplitAssignment(
        mode="sentence_wise",
        params={"ratios": [r_train, r_val, r_test], "seed": seed},
        train=tuple(sorted(train_ids)),
        val=tuple(sorted(val_ids)),
        test=tuple(sorted(test_ids)),
    )


def split_city_wise(
    pairs: Iterable[QaPair],
    train_cities: Sequence[str] = DEFAULT_CITY_SPLIT["train"],
    val_cities: Sequence[str] = DEFAULT_CITY_SPLIT["val"],
    test_cities: Sequence[str] = DEFAULT_CITY_SPLIT["test"],
) -> SplitAssignment:
    """Assign pairs to splits by the city they come from.

    Raises:
        ConfigurationError: If a city is listed twice or a pair's city is in no list.
    """
    lists = {"train": list(train_cities), "val": list(val_cities), "test": list(test_cities)}
    owner: dict[str, str] = {}
    for split, cities in lists.items():
        for city in cities:
            if city in owner and owner[city] != split:
                raise ConfigurationError(f"city {city!r} assigned to both {owner[city]} and {split}")
            owner[city] = split

    by_city = _qids_by_city(pairs)
    unassigned = [c for c in by_city if c not in owner]
    if unassigned:
        raise ConfigurationError(f"cities not assigned to any split: {', '.join(unassigned)}")
    absent = [c for c in owner if c not in by_city]
    if absent:
        logger.info("listed cities without pairs: %s", ", ".join(absent))

    out: dict[str, list[str]] = {"train": [], "val": [], "test": []}
    for city, qids in by_city.items():
        out[owner[city]] += qids
    return SplitAssignment(
        mode="city_wise",
        params={split: sorted(cities) for split, cities in lists.items()},
        train=tuple(sorted(out["train"])),
        val=tuple(sorted(out["val"])),
        test=tuple(sorted(out["test"])),
    )


def write_split(s: SplitAssignment, sink) -> None:
    """Write a split manifest {mode, params, train, val, test} as JSON."""
    sink.write(s.model_dump_json(indent=2))
    sink.write("\n")


def read_split(source) -> SplitAssignment:
    """Read a split manifest."""
    try:
        return SplitAssignment.model_validate_json(source.read())
    except ValidationError as exc:
        raise DatasetFormatError(f"invalid split manifest: {describe_validation_error(exc)}") from None


# ----------------------------
# Line-record files
# ----------------------------


def write_dataset(pairs: Iterable[QaPair], sink) -> None:
    """Write one JSON object per line."""
    for p in pairs:
        sink.write(p.model_dump_json())
        sink.write("\n")


def read_dataset(source) -> list[QaPair]:
    """Read a dataset written by `write_dataset`; blank lines are ignored.

    Raises:
        DatasetFormatError: With the 1-based line number of the first malformed record.
    """
    pairs = []
    for line_number, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            pairs.append(QaPair.model_validate_json(line))
        except ValidationError as exc:
            raise DatasetFormatError(f"line {line_number}: {describe_validation_error(exc)}") from None
    return pairs
