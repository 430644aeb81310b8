"""Corpus ingestion: hyper-documents, vocabularies, and citation relations.

Corpus file format (UTF-8, LF line endings): one document per non-empty
line, ``<doc-id><TAB><text>``.  Inside the text, a standalone token of the
form ``[[<doc-id>]]`` is a citation marker; every other whitespace-separated
token is a word and is lowercased on ingest.  Doc ids referenced only as
citation targets become placeholder documents with empty token streams, so
they can still receive embedding vectors and be recommended.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CitevecError, ConfigError, CorpusFormatError

WORD = "word"
CITE = "cite"


@dataclass(frozen=True, slots=True)
class Token:
    """One token of a hyper-document: a word or a citation marker."""

    kind: str  # WORD or CITE
    value: str  # lowercased word surface form, or the cited doc id

    @staticmethod
    def word(text: str) -> "Token":
        if not text or any(c.isspace() for c in text):
            raise ValueError(f"invalid word token: {text!r}")
        return Token(WORD, text.lower())

    @staticmethod
    def cite(target: str) -> "Token":
        if not target or any(c.isspace() for c in target):
            raise ValueError(f"invalid citation target: {target!r}")
        return Token(CITE, target)

    @property
    def is_cite(self) -> bool:
        return self.kind == CITE


@dataclass(slots=True)
class HyperDocument:
    """A document id plus its ordered stream of word and citation tokens."""

    id: str
    tokens: list[Token]
    # True for docs that only exist because something cited them.
    placeholder: bool = False

    def cite_targets(self) -> list[str]:
        return [t.value for t in self.tokens if t.is_cite]


@dataclass
class Vocabulary:
    """Bidirectional word and doc-id index maps with occurrence counts."""

    word_ids: dict[str, int] = field(default_factory=dict)
    doc_ids: dict[str, int] = field(default_factory=dict)
    word_list: list[str] = field(default_factory=list)
    doc_list: list[str] = field(default_factory=list)
    # word_counts[i]: occurrences of word i; doc_cited_counts[j]: times doc j is cited.
    word_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    doc_cited_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_words(self) -> int:
        return len(self.word_list)

    @property
    def n_docs(self) -> int:
        return len(self.doc_list)

    def same_bindings(self, other: "Vocabulary") -> bool:
        return self.word_list == other.word_list and self.doc_list == other.doc_list


@dataclass(frozen=True, slots=True)
class CitationRelation:
    """One training example per citation occurrence.

    ``source`` is the citing doc, ``target`` the cited doc, ``structural``
    the other distinct citation targets of the same document (excluding both
    source and target), and ``context`` the word indices within the window
    around the citation position.
    """

    source: int
    target: int
    structural: frozenset[int]
    context: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class HeldOutCitation:
    """A test citation resolved against a training vocabulary.

    ``source`` is None when the held-out citing document is unknown to the
    training vocabulary (the usual case for fresh manuscripts).
    """

    target: int
    context: tuple[int, ...]
    structural: frozenset[int]
    source: int | None = None


@dataclass(slots=True)
class CorpusStats:
    n_docs: int = 0
    n_words: int = 0  # total word-token count
    n_citations: int = 0
    n_relations: int = 0
    n_empty_docs: int = 0
    mean_citations_per_doc: float = 0.0


@dataclass
class Corpus:
    """Result of parsing one corpus stream."""

    docs: list[HyperDocument]
    vocab: Vocabulary
    stats: CorpusStats


@dataclass
class SplitResult:
    """Train/test partition of a corpus.

    ``ground_truth`` holds the held-out citations resolved against
    ``train_vocab``; relations whose target is unknown there are dropped and
    counted in ``dropped_relations``.
    """

    train_docs: list[HyperDocument]
    train_vocab: Vocabulary
    test_docs: list[HyperDocument]
    ground_truth: list[HeldOutCitation]
    dropped_relations: int
    test_doc_ids: list[str]


def tokenize_text(text: str, line_number: int | None = None) -> list[Token]:
    """Split raw text into word and citation tokens using corpus rules."""
    tokens = []
    for raw in text.split():
        if raw.startswith("[[") and raw.endswith("]]") and len(raw) >= 4:
            target = raw[2:-2]
            if not target:
                raise CorpusFormatError("empty doc id in citation marker", line_number)
            tokens.append(Token(CITE, target))
        else:
            tokens.append(Token(WORD, raw.lower()))
    return tokens


def build_vocabulary(docs: list[HyperDocument]) -> Vocabulary:
    """Index words and doc ids in first-appearance order, with counts."""
    vocab = Vocabulary()
    word_counts: list[int] = []
    cited_counts: list[int] = []

    def doc_slot(doc_id: str) -> int:
        idx = vocab.doc_ids.get(doc_id)
        if idx is None:
            idx = len(vocab.doc_list)
            vocab.doc_ids[doc_id] = idx
            vocab.doc_list.append(doc_id)
            cited_counts.append(0)
        return idx

    for doc in docs:
        doc_slot(doc.id)
        for token in doc.tokens:
            if token.is_cite:
                cited_counts[doc_slot(token.value)] += 1
            else:
                idx = vocab.word_ids.get(token.value)
                if idx is None:
                    idx = len(vocab.word_list)
                    vocab.word_ids[token.value] = idx
                    vocab.word_list.append(token.value)
                    word_counts.append(0)
                word_counts[idx] += 1

    vocab.word_counts = np.array(word_counts, dtype=np.int64)
    vocab.doc_cited_counts = np.array(cited_counts, dtype=np.int64)
    return vocab


def complete_corpus(line_docs: list[HyperDocument]) -> tuple[list[HyperDocument], Vocabulary]:
    """Build the vocabulary and append placeholder docs for cited-only ids."""
    vocab = build_vocabulary(line_docs)
    present = {doc.id for doc in line_docs}
    docs = list(line_docs)
    for doc_id in vocab.doc_list:
        if doc_id not in present:
            docs.append(HyperDocument(id=doc_id, tokens=[], placeholder=True))
    return docs, vocab


def _compute_stats(docs: list[HyperDocument]) -> CorpusStats:
    stats = CorpusStats(n_docs=len(docs))
    for doc in docs:
        if not doc.tokens:
            stats.n_empty_docs += 1
        for token in doc.tokens:
            if token.is_cite:
                stats.n_citations += 1
            else:
                stats.n_words += 1
    stats.n_relations = stats.n_citations
    if stats.n_docs:
        stats.mean_citations_per_doc = stats.n_citations / stats.n_docs
    return stats


def parse_corpus(source) -> Corpus:
    """Parse a corpus stream into documents, a vocabulary, and statistics.

    ``source`` may be bytes, a binary file object, or a filesystem path.
    Raises CorpusFormatError on malformed lines (carrying the line number)
    and on duplicate doc ids.
    """
    data = _read_bytes(source)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusFormatError(f"corpus is not valid UTF-8: {exc}") from None

    line_docs: list[HyperDocument] = []
    seen_line_ids: set[str] = set()
    for line_number, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line:
            continue
        if "\t" not in line:
            raise CorpusFormatError("missing TAB between doc id and text", line_number)
        doc_id, body = line.split("\t", 1)
        if not doc_id or any(c.isspace() for c in doc_id):
            raise CorpusFormatError(f"invalid doc id: {doc_id!r}", line_number)
        if doc_id in seen_line_ids:
            raise CorpusFormatError(f"duplicate doc id: {doc_id!r}", line_number)
        seen_line_ids.add(doc_id)
        line_docs.append(HyperDocument(id=doc_id, tokens=tokenize_text(body, line_number)))

    docs, vocab = complete_corpus(line_docs)
    return Corpus(docs=docs, vocab=vocab, stats=_compute_stats(docs))


def _read_bytes(source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as handle:
            return handle.read()
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            return data.encode("utf-8")
        return data
    raise TypeError(f"unsupported corpus source: {type(source)!r}")


def _window_context(tokens: list[Token], position: int, window: int) -> list[str]:
    """Words within `window` positions each side; citation markers are
    skipped and do not consume window slots."""
    before: list[str] = []
    i = position - 1
    while i >= 0 and len(before) < window:
        if not tokens[i].is_cite:
            before.append(tokens[i].value)
        i -= 1
    before.reverse()
    after: list[str] = []
    i = position + 1
    while i < len(tokens) and len(after) < window:
        if not tokens[i].is_cite:
            after.append(tokens[i].value)
        i += 1
    return before + after


def extract_relations(
    docs: list[HyperDocument], vocab: Vocabulary, window: int
) -> list[CitationRelation]:
    """One citation relation per citation marker occurrence, in corpus order."""
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    relations: list[CitationRelation] = []
    for doc in docs:
        cite_positions = [i for i, t in enumerate(doc.tokens) if t.is_cite]
        if not cite_positions:
            continue
        source = vocab.doc_ids[doc.id]
        try:
            all_targets = {vocab.doc_ids[doc.tokens[i].value] for i in cite_positions}
        except KeyError as exc:
            raise CitevecError(f"citation target {exc} not in vocabulary") from None
        for position in cite_positions:
            target = vocab.doc_ids[doc.tokens[position].value]
            structural = frozenset(all_targets - {target, source})
            context = tuple(
                vocab.word_ids[w] for w in _window_context(doc.tokens, position, window)
            )
            relations.append(
                CitationRelation(
                    source=source, target=target, structural=structural, context=context
                )
            )
    return relations


def augment_contexts(
    docs: list[HyperDocument], relations: list[CitationRelation], vocab: Vocabulary
) -> list[HyperDocument]:
    """Copy each relation's context words onto the end of the cited document.

    Pure transform: the input documents are left untouched.  Contexts are
    appended in relation order.
    """
    extra: dict[str, list[Token]] = {}
    for relation in relations:
        target_id = vocab.doc_list[relation.target]
        words = extra.setdefault(target_id, [])
        words.extend(Token(WORD, vocab.word_list[w]) for w in relation.context)
    augmented = []
    for doc in docs:
        tail = extra.get(doc.id)
        if tail:
            augmented.append(
                HyperDocument(id=doc.id, tokens=doc.tokens + tail, placeholder=doc.placeholder)
            )
        else:
            augmented.append(HyperDocument(id=doc.id, tokens=list(doc.tokens), placeholder=doc.placeholder))
    return augmented


def resolve_ground_truth(
    test_docs: list[HyperDocument], vocab: Vocabulary, window: int
) -> tuple[list[HeldOutCitation], int]:
    """Express held-out citations against an existing (training) vocabulary.

    Relations whose target id is unknown to ``vocab`` are dropped and
    counted.  Unknown context words are skipped after windowing; unknown
    structural ids are dropped from the structural set.
    """
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    entries: list[HeldOutCitation] = []
    dropped = 0
    for doc in test_docs:
        cite_positions = [i for i, t in enumerate(doc.tokens) if t.is_cite]
        if not cite_positions:
            continue
        source = vocab.doc_ids.get(doc.id)
        target_ids = {doc.tokens[i].value for i in cite_positions}
        for position in cite_positions:
            target_id = doc.tokens[position].value
            target = vocab.doc_ids.get(target_id)
            if target is None:
                dropped += 1
                continue
            structural = frozenset(
                vocab.doc_ids[t]
                for t in target_ids
                if t != target_id and t != doc.id and t in vocab.doc_ids
            )
            context = tuple(
                vocab.word_ids[w]
                for w in _window_context(doc.tokens, position, window)
                if w in vocab.word_ids
            )
            entries.append(
                HeldOutCitation(
                    target=target, context=context, structural=structural, source=source
                )
            )
    return entries, dropped


def split_train_test(
    docs: list[HyperDocument],
    window: int,
    fraction: float | None = None,
    test_ids: list[str] | None = None,
    seed: int = 0,
    min_citations: int = 2,
) -> SplitResult:
    """Hold out documents for testing and rebuild the training vocabulary.

    Exactly one of ``fraction`` and ``test_ids`` must be given.  With
    ``fraction``, held-out docs are drawn (seeded) from the documents that
    carry at least ``min_citations`` citations; an explicit ``test_ids`` list
    is taken as-is.  Held-out citations are resolved against the rebuilt
    training vocabulary; those citing unknown targets are dropped and counted.
    """
    if (fraction is None) == (test_ids is None):
        raise ConfigError("exactly one of fraction and test_ids must be given")

    line_docs = [d for d in docs if not d.placeholder]
    if test_ids is not None:
        wanted = set(test_ids)
        missing = wanted - {d.id for d in line_docs}
        if missing:
            raise ConfigError(f"test ids not in corpus: {sorted(missing)}")
        held = [d for d in line_docs if d.id in wanted]
    else:
        if not 0.0 < fraction < 1.0:
            raise ConfigError(f"test fraction must be in (0, 1), got {fraction}")
        eligible = [d for d in line_docs if len(d.cite_targets()) >= min_citations]
        n_test = int(round(fraction * len(eligible)))
        if n_test < 1 or n_test >= len(line_docs):
            raise CitevecError(
                f"test split selects {n_test} of {len(eligible)} eligible docs; "
                "nothing to hold out or nothing left to train on"
            )
        rng = np.random.default_rng(seed)
        picks = rng.permutation(len(eligible))[:n_test]
        held = [eligible[i] for i in sorted(picks)]

    held_ids = {d.id for d in held}
    train_line_docs = [d for d in line_docs if d.id not in held_ids]
    if not train_line_docs:
        raise CitevecError("no training documents left after the split")
    train_docs, train_vocab = complete_corpus(train_line_docs)
    ground_truth, dropped = resolve_ground_truth(held, train_vocab, window)
    if not ground_truth:
        raise CitevecError("empty test set: no held-out citation could be resolved")
    return SplitResult(
        train_docs=train_docs,
        train_vocab=train_vocab,
        test_docs=held,
        ground_truth=ground_truth,
        dropped_relations=dropped,
        test_doc_ids=sorted(held_ids),
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the synthetic co-citation corpus generator.

    Each topic gets a clique of ``clique_size`` cited papers plus
    ``docs_per_topic`` citing documents; every citing document cites all
    clique members of its own topic, so clique members are always cited
    together.  Words come from a per-topic vocabulary, except a
    ``noise_rate`` fraction drawn from a global shared vocabulary.
    """

    n_topics: int = 2
    docs_per_topic: int = 16
    clique_size: int = 4
    vocab_per_topic: int = 30
    noise_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("n_topics", "docs_per_topic", "clique_size", "vocab_per_topic"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ConfigError(f"noise_rate must be in [0, 1), got {self.noise_rate}")


def generate_synthetic_corpus(spec: SyntheticSpec) -> bytes:
    """Emit a corpus with planted per-topic co-citation cliques.

    Deterministic: the output is a pure function of ``spec`` including its
    seed.
    """
    rng = np.random.default_rng(spec.seed)
    global_vocab = [f"g{m}" for m in range(spec.vocab_per_topic)]
    lines: list[str] = []

    def draw_words(topic_vocab: list[str], count: int) -> list[str]:
        words = []
        for _ in range(count):
            if spec.noise_rate > 0.0 and rng.random() < spec.noise_rate:
                words.append(global_vocab[rng.integers(len(global_vocab))])
            else:
                words.append(topic_vocab[rng.integers(len(topic_vocab))])
        return words

    for topic in range(spec.n_topics):
        topic_vocab = [f"w{topic}t{m}" for m in range(spec.vocab_per_topic)]
        clique = [f"t{topic}c{j}" for j in range(spec.clique_size)]
        for doc_id in clique:
            lines.append(doc_id + "\t" + " ".join(draw_words(topic_vocab, 10)))
        for i in range(spec.docs_per_topic):
            parts: list[str] = []
            for j in rng.permutation(spec.clique_size):
                parts.extend(draw_words(topic_vocab, int(rng.integers(3, 7))))
                parts.append(f"[[{clique[j]}]]")
            parts.extend(draw_words(topic_vocab, int(rng.integers(3, 7))))
            lines.append(f"t{topic}d{i}\t" + " ".join(parts))

    return ("\n".join(lines) + "\n").encode("utf-8")
