"""Document/mention data model, JSONL io, pair enumeration, and synthetic corpora."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

NONE_CLASS = "None"
NA_RELATION = "NA"
DEFAULT_MAX_LEN = 128
DEFAULT_MENTION_CAP = 40


class CorpusError(ValueError):
    """Malformed corpus file, inconsistent labels, or bad generator settings."""


@dataclass(frozen=True)
class LabelSpaces:
    """Ordered event-class and relation inventories.

    ``event_classes`` always contains the distinguished "None" class and
    ``relations`` the distinguished "NA" relation, each exactly once.  Token
    labels extend the event classes with two extra ids: ``non_trigger_label``
    and ``padding_label``.
    """

    event_classes: tuple[str, ...]
    relations: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.event_classes.count(NONE_CLASS) != 1:
            raise CorpusError(f"event classes must contain {NONE_CLASS!r} exactly once: {self.event_classes}")
        if self.relations.count(NA_RELATION) != 1:
            raise CorpusError(f"relations must contain {NA_RELATION!r} exactly once: {self.relations}")
        if len(set(self.event_classes)) != len(self.event_classes):
            raise CorpusError("duplicate event class names")
        if len(set(self.relations)) != len(self.relations):
            raise CorpusError("duplicate relation names")

    @property
    def n_event_classes(self) -> int:
        return len(self.event_classes)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    @property
    def token_label_count(self) -> int:
        return self.n_event_classes + 2

    @property
    def non_trigger_label(self) -> int:
        return self.n_event_classes

    @property
    def padding_label(self) -> int:
        return self.n_event_classes + 1

    @property
    def none_index(self) -> int:
        return self.event_classes.index(NONE_CLASS)

    @property
    def na_index(self) -> int:
        return self.relations.index(NA_RELATION)

    def event_index(self, name: str) -> int:
        try:
            return self.event_classes.index(name)
        except ValueError:
            raise CorpusError(f"unknown event class {name!r}") from None

    def relation_index(self, name: str) -> int:
        try:
            return self.relations.index(name)
        except ValueError:
            raise CorpusError(f"unknown relation {name!r}") from None


@dataclass(frozen=True)
class EventMention:
    """One event mention: a token sequence with a 1-based trigger position."""

    tokens: tuple[str, ...]
    trigger_index: int
    event_class: int
    mention_id: str

    def __post_init__(self) -> None:
        if not self.tokens:
            raise CorpusError(f"mention {self.mention_id!r} has no tokens")
        if not 1 <= self.trigger_index <= len(self.tokens):
            raise CorpusError(
                f"mention {self.mention_id!r}: trigger index {self.trigger_index} "
                f"outside [1, {len(self.tokens)}]"
            )
        if self.event_class < 0:
            raise CorpusError(f"mention {self.mention_id!r}: negative event class")


@dataclass(frozen=True)
class Document:
    """Ordered mentions plus sparse pair annotations (absent pair = NA)."""

    doc_id: str
    mentions: tuple[EventMention, ...]
    relations: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        m = len(self.mentions)
        for (i, j), rel in self.relations.items():
            if i == j:
                raise CorpusError(f"document {self.doc_id!r}: self-pair ({i}, {j})")
            if not (0 <= i < j < m):
                raise CorpusError(f"document {self.doc_id!r}: pair ({i}, {j}) out of range for {m} mentions")
            if rel < 0:
                raise CorpusError(f"document {self.doc_id!r}: negative relation index")


@dataclass
class CorpusStats:
    document_count: int = 0
    mention_count: int = 0
    per_relation: dict[str, int] = field(default_factory=dict)


def _build_spaces(class_names: Iterable[str], relation_names: Iterable[str]) -> LabelSpaces:
    classes = sorted(set(class_names) - {NONE_CLASS})
    relations = sorted(set(relation_names) - {NA_RELATION})
    return LabelSpaces(
        event_classes=(NONE_CLASS, *classes),
        relations=(NA_RELATION, *relations),
    )


def load_corpus(
    path: str | Path,
    spaces: LabelSpaces | None = None,
    *,
    max_len: int = DEFAULT_MAX_LEN,
    mention_cap: int | None = None,
) -> tuple[list[Document], LabelSpaces, CorpusStats]:
    """Read a JSONL corpus (one document object per line).

    Mentions are truncated to ``max_len`` tokens and, when ``mention_cap`` is
    given, documents keep only their first ``mention_cap`` mentions (pair
    annotations touching dropped mentions are dropped too).  When ``spaces``
    is None the label spaces are built from the data; otherwise any label not
    present in ``spaces`` raises :class:`CorpusError`.
    """
    path = Path(path)
    raw: list[tuple[int, dict]] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}:{lineno}: expected a JSON object")
            raw.append((lineno, obj))

    if spaces is None:
        class_names = [m.get("event_class") for _, obj in raw for m in obj.get("mentions", [])]
        relation_names = [r.get("label") for _, obj in raw for r in obj.get("relations", [])]
        if any(not isinstance(n, str) for n in class_names + relation_names):
            bad = next(lineno for lineno, obj in raw
                       if any(not isinstance(m.get("event_class"), str) for m in obj.get("mentions", []))
                       or any(not isinstance(r.get("label"), str) for r in obj.get("relations", [])))
            raise CorpusError(f"{path}:{bad}: labels must be strings")
        spaces = _build_spaces(class_names, relation_names)

    documents: list[Document] = []
    stats = CorpusStats(per_relation={})
    for lineno, obj in raw:
        try:
            documents.append(_parse_document(obj, spaces, max_len=max_len, mention_cap=mention_cap))
        except CorpusError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from None
        doc = documents[-1]
        stats.document_count += 1
        stats.mention_count += len(doc.mentions)
        for rel in doc.relations.values():
            name = spaces.relations[rel]
            stats.per_relation[name] = stats.per_relation.get(name, 0) + 1
    return documents, spaces, stats


def _parse_document(obj: dict, spaces: LabelSpaces, *, max_len: int, mention_cap: int | None) -> Document:
    doc_id = obj.get("doc_id")
    if not isinstance(doc_id, str) or not doc_id:
        raise CorpusError("missing or empty doc_id")
    mention_objs = obj.get("mentions", [])
    if mention_cap is not None:
        mention_objs = mention_objs[:mention_cap]
    mentions = []
    for k, m in enumerate(mention_objs):
        tokens = m.get("tokens")
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise CorpusError(f"mention {k}: tokens must be a list of strings")
        trigger = m.get("trigger_index")
        if not isinstance(trigger, int):
            raise CorpusError(f"mention {k}: trigger_index must be an integer")
        if trigger > max_len:
            raise CorpusError(f"mention {k}: trigger index {trigger} beyond max length {max_len}")
        mentions.append(EventMention(
            tokens=tuple(tokens[:max_len]),
            trigger_index=trigger,
            event_class=spaces.event_index(m.get("event_class")),
            mention_id=f"{doc_id}:{k}",
        ))
    relations: dict[tuple[int, int], int] = {}
    for r in obj.get("relations", []):
        i, j = r.get("i"), r.get("j")
        if not isinstance(i, int) or not isinstance(j, int):
            raise CorpusError("relation entry: i and j must be integers")
        if i == j:
            raise CorpusError(f"relation entry: self-pair ({i}, {j})")
        key = (min(i, j), max(i, j))
        if key in relations:
            raise CorpusError(f"relation entry: duplicate pair {key}")
        if mention_cap is not None and key[1] >= len(mentions):
            continue  # annotation touches a capped-off mention
        relations[key] = spaces.relation_index(r.get("label"))
    return Document(doc_id=doc_id, mentions=tuple(mentions), relations=relations)


def write_corpus(documents: Iterable[Document], spaces: LabelSpaces, path: str | Path) -> None:
    """Write documents as JSONL in the same schema :func:`load_corpus` reads."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in documents:
            obj = {
                "doc_id": doc.doc_id,
                "mentions": [
                    {
                        "tokens": list(m.tokens),
                        "trigger_index": m.trigger_index,
                        "event_class": spaces.event_classes[m.event_class],
                    }
                    for m in doc.mentions
                ],
                "relations": [
                    {"i": i, "j": j, "label": spaces.relations[rel]}
                    for (i, j), rel in sorted(doc.relations.items())
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def enumerate_pairs(doc: Document, cap: int, na_index: int) -> list[tuple[int, int, int]]:
    """All unordered mention pairs (i < j) among the first min(len, cap) mentions.

    Unannotated pairs get ``na_index``.  Output length is m*(m-1)/2 for
    m = min(len(doc.mentions), cap).
    """
    if cap < 2:
        raise ValueError(f"pair cap must be >= 2, got {cap}")
    m = min(len(doc.mentions), cap)
    return [
        (i, j, doc.relations.get((i, j), na_index))
        for i in range(m)
        for j in range(i + 1, m)
    ]


def synthesize_corpus(
    n_docs: int,
    n_classes: int,
    n_relations: int,
    vocab_size: int,
    mentions_per_doc: int,
    seed: int,
    *,
    length_range: tuple[int, int] = (6, 12),
    na_rate: float = 0.15,
) -> tuple[list[Document], LabelSpaces]:
    """Generate a deterministic, learnable synthetic corpus.

    Classes are drawn uniformly (the None class included).  Each class owns a
    disjoint set of signature trigger tokens that never appear as background
    tokens, so trigger and event classification are solvable from the data.
    For a pair of non-None mention classes (a, b) the gold relation is
    ``1 + (a + b) mod (n_relations - 1)``, flipped to NA with probability
    ``na_rate``; pairs touching a None-class mention are NA.  The pair rule
    depends on both classes jointly, so relation extraction genuinely needs
    the pair interaction features.
    """
    if min(n_docs, n_classes, n_relations, vocab_size, mentions_per_doc) < 1:
        raise CorpusError("all synthesize_corpus counts must be >= 1")
    if vocab_size < n_classes:
        raise CorpusError(f"vocab_size {vocab_size} < n_classes {n_classes}: no room for signature tokens")
    if length_range[0] < 1 or length_range[0] > length_range[1]:
        raise CorpusError(f"length_range must be an ordered pair of positive ints, got {length_range}")
    if not 0.0 <= na_rate < 1.0:
        raise CorpusError(f"na_rate must be in [0, 1), got {na_rate}")

    spaces = LabelSpaces(
        event_classes=(NONE_CLASS, *(f"EVT{i}" for i in range(1, n_classes))),
        relations=(NA_RELATION, *(f"REL{i}" for i in range(1, n_relations))),
    )
    vocab = [f"w{i:03d}" for i in range(vocab_size)]
    n_sig = max(1, min(3, vocab_size // (2 * n_classes)))
    signatures = [vocab[c * n_sig: (c + 1) * n_sig] for c in range(n_classes)]
    background = vocab[n_classes * n_sig:]
    if not background:
        background = vocab  # degenerate tiny vocab; triggers become ambiguous

    rng = random.Random(seed)
    documents = []
    for d in range(n_docs):
        doc_id = f"synth-{d:04d}"
        mentions = []
        classes = []
        for k in range(mentions_per_doc):
            c = rng.randrange(n_classes)
            length = rng.randint(*length_range)
            tokens = [rng.choice(background) for _ in range(length)]
            trigger = rng.randint(1, length)
            tokens[trigger - 1] = rng.choice(signatures[c])
            classes.append(c)
            mentions.append(EventMention(
                tokens=tuple(tokens),
                trigger_index=trigger,
                event_class=c,
                mention_id=f"{doc_id}:{k}",
            ))
        relations: dict[tuple[int, int], int] = {}
        for i in range(mentions_per_doc):
            for j in range(i + 1, mentions_per_doc):
                if classes[i] == 0 or classes[j] == 0 or n_relations == 1:
                    continue
                rel = 1 + (classes[i] + classes[j]) % (n_relations - 1)
                if rng.random() < na_rate:
                    continue
                relations[(i, j)] = rel
        documents.append(Document(doc_id=doc_id, mentions=tuple(mentions), relations=relations))
    return documents, spaces


def corpus_stats(documents: Iterable[Document], spaces: LabelSpaces) -> CorpusStats:
    """Tally stats for an in-memory corpus (mirrors what load_corpus reports)."""
    stats = CorpusStats(per_relation={})
    for doc in documents:
        stats.document_count += 1
        stats.mention_count += len(doc.mentions)
        for rel in doc.relations.values():
            name = spaces.relations[rel]
            stats.per_relation[name] = stats.per_relation.get(name, 0) + 1
    return stats


def train_test_split_documents(
    documents: list[Document], test_fraction: float, seed: int,
) -> tuple[list[Document], list[Document]]:
    """Deterministic shuffled split at document granularity."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    order = list(range(len(documents)))
    random.Random(seed).shuffle(order)
    n_test = max(1, int(round(test_fraction * len(documents))))
    test_ids = set(order[:n_test])
    train = [documents[k] for k in range(len(documents)) if k not in test_ids]
    test = [documents[k] for k in range(len(documents)) if k in test_ids]
    return train, test
