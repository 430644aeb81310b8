"""Query building and candidate ranking.

Three query regimes: Case 1 pools the context words with every co-cited
document, Case 2 keeps each co-cited document with a fixed probability,
Case 3 uses the words alone.  Queries are pooled with the arithmetic mean
for both model variants: a fresh manuscript never had an attention slot
trained for it, so learned weights do not apply at query time.

Two ranking conventions: rank_i4o scores output-side document vectors by
dot product with the query; rank_i4i fits a vector for the text and scores
input-side document vectors by cosine.  Ties break by ascending doc id and
excluded ids are never returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import tokenize_text
from .errors import ConfigError, QueryError
from .model import Model, infer_doc_vector

CASES = (1, 2, 3)


@dataclass(frozen=True)
class Query:
    """One recommendation query, already resolved to vocabulary indices."""

    case: int
    context_words: tuple[int, ...]
    structural_docs: frozenset[int] = frozenset()
    keep_prob: float = 0.5  # Case 2 only
    seed: int = 0  # Case 2 only

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"case must be one of {CASES}, got {self.case}")
        if not 0.0 <= self.keep_prob <= 1.0:
            raise ConfigError(f"keep_prob must be in [0, 1], got {self.keep_prob}")


@dataclass
class RecommendationList:
    """Ranked (doc-id, score) pairs, at most k of them."""

    ranked: list[tuple[str, float]]
    k: int

    def ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.ranked]

    def __len__(self) -> int:
        return len(self.ranked)


def build_query_vector(model: Model, query: Query) -> np.ndarray:
    """Mean of the participating input vectors for the query's case.

    Case 1 keeps all structural docs, Case 2 keeps each independently with
    probability keep_prob under the query seed, Case 3 keeps none.
    """
    words = np.asarray(query.context_words, dtype=np.intp)
    if query.case == 3:
        kept_docs = np.asarray((), dtype=np.intp)
        if words.size == 0:
            raise QueryError("Case 3 query needs at least one known context word")
    else:
        docs = np.asarray(sorted(query.structural_docs), dtype=np.intp)
        if query.case == 2:
            rng = np.random.default_rng(query.seed)
            kept_docs = docs[rng.random(docs.size) < query.keep_prob]
        else:
            kept_docs = docs
    participants = np.concatenate(
        (model.matrices.word_in[words], model.matrices.doc_in[kept_docs]), axis=0
    )
    if participants.shape[0] == 0:
        raise QueryError("query has no participants")
    return participants.mean(axis=0)


def _resolve_exclusions(model: Model, exclude) -> np.ndarray:
    indices = {model.vocab.doc_ids[d] for d in exclude if d in model.vocab.doc_ids}
    return np.asarray(sorted(indices), dtype=np.intp)


def _top_k(model: Model, scores: np.ndarray, exclude, k: int) -> RecommendationList:
    """Best k candidates by score, ties by ascending doc id, exclusions out."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    mask = np.ones(scores.size, dtype=bool)
    mask[_resolve_exclusions(model, exclude)] = False
    candidates = np.flatnonzero(mask)
    ids = np.asarray(model.vocab.doc_list)
    order = np.lexsort((ids[candidates], -scores[candidates]))
    top = candidates[order[:k]]
    return RecommendationList(
        ranked=[(model.vocab.doc_list[i], float(scores[i])) for i in top], k=k
    )


def rank_i4o(model: Model, query_vector: np.ndarray, exclude=(), k: int = 10) -> RecommendationList:
    """Rank documents by dot product of the query with their output vectors."""
    scores = model.matrices.doc_out @ np.asarray(query_vector, dtype=np.float64)
    return _top_k(model, scores, exclude, k)


def rank_i4i(
    model: Model,
    context_words,
    exclude=(),
    k: int = 10,
    steps: int = 5,
    lr: float | None = None,
) -> RecommendationList:
    """Infer a vector for the words, rank documents by cosine to their
    input vectors.  Zero-norm rows score 0."""
    inferred = infer_doc_vector(model, context_words, steps=steps, lr=lr)
    query_norm = float(np.linalg.norm(inferred))
    if query_norm == 0.0:
        raise QueryError("inferred query vector has zero norm")
    doc_in = model.matrices.doc_in
    norms = np.linalg.norm(doc_in, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = (doc_in @ inferred) / (norms * query_norm)
    scores = np.where(norms > 0.0, scores, 0.0)
    return _top_k(model, scores, exclude, k)


@dataclass
class ResolvedText:
    """Raw text mapped onto a model vocabulary."""

    word_indices: tuple[int, ...]
    marker_ids: list[str]  # citation markers, known or not, in order
    structural_docs: frozenset[int]
    unknown_words: int


def resolve_text(model: Model, raw_text: str) -> ResolvedText:
    """Tokenize with corpus rules and map tokens onto the vocabulary.

    Unknown words are dropped and counted; citation markers become the
    structural set (unknown markers cannot participate but are still
    reported for exclusion purposes).
    """
    word_indices: list[int] = []
    marker_ids: list[str] = []
    structural: set[int] = set()
    unknown_words = 0
    for token in tokenize_text(raw_text):
        if token.is_cite:
            marker_ids.append(token.value)
            doc_idx = model.vocab.doc_ids.get(token.value)
            if doc_idx is not None:
                structural.add(doc_idx)
        else:
            word_idx = model.vocab.word_ids.get(token.value)
            if word_idx is None:
                unknown_words += 1
            else:
                word_indices.append(word_idx)
    return ResolvedText(
        word_indices=tuple(word_indices),
        marker_ids=marker_ids,
        structural_docs=frozenset(structural),
        unknown_words=unknown_words,
    )


def recommend(
    model: Model,
    raw_text: str,
    case: int = 1,
    k: int = 10,
    keep_prob: float = 0.5,
    seed: int = 0,
    exclude_markers: bool = True,
) -> RecommendationList:
    """End-to-end recommendation for a piece of manuscript text.

    Citation markers `[[id]]` in the text form the structural context and
    are excluded from the results (already-known citations are never
    recommended); pass exclude_markers=False to disable that for
    diagnostics.  Raises QueryError, carrying the unknown-word count, when
    nothing in the text is usable.
    """
    resolved = resolve_text(model, raw_text)
    query = Query(
        case=case,
        context_words=resolved.word_indices,
        structural_docs=resolved.structural_docs,
        keep_prob=keep_prob,
        seed=seed,
    )
    try:
        query_vector = build_query_vector(model, query)
    except QueryError as exc:
        raise QueryError(
            f"no usable query participants in the text "
            f"({resolved.unknown_words} unknown words): {exc}",
            unknown_words=resolved.unknown_words,
        ) from None
    exclude = set(resolved.marker_ids) if exclude_markers else set()
    return rank_i4o(model, query_vector, exclude=exclude, k=k)
