"""Two-step training: content pre-training, then citation training.

Step one fits plain content embeddings: every word is predicted from the
mean of its document's vector and the neighbouring words' input vectors.
Step two trains on citation relations: the hidden layer pools the citing
document, its co-cited documents, and the local context words, and the
cited document's output vector is pushed up against sampled noise
documents.  The "avg" variant pools with a uniform mean, the "att" variant
with softmax-normalized learned scores, one per document and word slot.

All gradients are the exact derivatives of the sampled loss, including the
1/m factor the mean contributes, so they can be checked against finite
differences.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .corpus import CitationRelation, HyperDocument, Vocabulary, _window_context
from .errors import CitevecError, ConfigError
from .model import Model, ModelMatrices, init_matrices

# independent RNG streams, keyed off config.seed
_RNG_RETROFIT = 11
_RNG_CITATION = 21
_RNG_SHUFFLE = 22

_MAX_RESAMPLE = 100


class NegativeSampler:
    """Draws noise indices with probability proportional to count^power.

    Zero-count items get zero mass.  Draws that collide with an excluded
    index are redrawn a bounded number of times and then dropped, so the
    returned batch may be shorter than requested.
    """

    def __init__(self, counts, seed, power: float = 0.75):
        counts = np.asarray(counts, dtype=np.float64)
        if counts.ndim != 1 or counts.size == 0:
            raise ConfigError("sampler needs a non-empty 1-D count array")
        if (counts < 0).any():
            raise ConfigError("sampler counts must be nonnegative")
        weights = counts**power
        total = weights.sum()
        if not total > 0:
            raise CitevecError("cannot build a noise distribution: all counts are zero")
        self.probabilities = weights / total
        self.cumulative = np.cumsum(self.probabilities)
        self.cumulative[-1] = 1.0  # guard against cumulative rounding
        self.rng = np.random.default_rng(seed)

    def _draw(self, n: int) -> np.ndarray:
        return self.cumulative.searchsorted(self.rng.random(n), side="right").astype(np.intp)

    def sample(self, n: int, exclude: int | None = None) -> np.ndarray:
        if n < 1:
            raise ConfigError(f"sample size must be >= 1, got {n}")
        draws = self._draw(n)
        if exclude is None:
            return draws
        colliding = draws == exclude
        tries = 0
        while colliding.any() and tries < _MAX_RESAMPLE:
            draws[colliding] = self._draw(int(colliding.sum()))
            colliding = draws == exclude
            tries += 1
        return draws[draws != exclude]


def _stack_participants(source_vec, structural_vecs, context_vecs) -> np.ndarray:
    """Participant rows in the canonical order: source, structural, words."""
    blocks = []
    if source_vec is not None:
        blocks.append(np.asarray(source_vec, dtype=np.float64)[None, :])
    for group in (structural_vecs, context_vecs):
        if group is None:
            continue
        arr = np.asarray(group, dtype=np.float64)
        if arr.size == 0:
            continue
        if arr.ndim == 1:
            arr = arr[None, :]
        blocks.append(arr)
    if not blocks:
        raise ConfigError("hidden layer needs at least one participant")
    return np.concatenate(blocks, axis=0)


def hidden_avg(source_vec, structural_vecs=None, context_vecs=None) -> np.ndarray:
    """Uniform mean of the participant vectors."""
    parts = _stack_participants(source_vec, structural_vecs, context_vecs)
    weights = np.full(parts.shape[0], 1.0 / parts.shape[0])
    return weights @ parts


def attention_ratios(attention_scores, slots) -> np.ndarray:
    """Softmax over the participants' attention scores, max-subtracted."""
    slots = np.asarray(slots, dtype=np.intp)
    if slots.size == 0:
        raise ConfigError("attention needs at least one participant slot")
    scores = np.asarray(attention_scores, dtype=np.float64)[slots]
    shifted = np.exp(scores - scores.max())
    return shifted / shifted.sum()


def hidden_att(attention_scores, slots, source_vec, structural_vecs=None, context_vecs=None) -> np.ndarray:
    """Attention-weighted sum of the participant vectors.

    ``slots`` indexes the score vector in the same order the participants
    are stacked: source doc, structural docs, context words.
    """
    parts = _stack_participants(source_vec, structural_vecs, context_vecs)
    ratios = attention_ratios(attention_scores, slots)
    if ratios.shape[0] != parts.shape[0]:
        raise ConfigError(
            f"{parts.shape[0]} participants but {ratios.shape[0]} attention slots"
        )
    return ratios @ parts


def participant_slots(source: int, structural, context, n_docs: int) -> np.ndarray:
    """Attention-slot ids for one relation, in canonical participant order.

    Documents occupy slots [0, n_docs); word w sits at n_docs + w.
    """
    doc_part = np.asarray([source] + sorted(structural), dtype=np.intp)
    word_part = n_docs + np.asarray(tuple(context), dtype=np.intp)
    return np.concatenate((doc_part, word_part))


def ns_loss_and_grads(hidden, target_out, negatives_out):
    """Negative-sampling loss and its exact gradients.

    loss = -log sigmoid(hidden . target) - sum_i log sigmoid(-hidden . negative_i)
    Returns (loss, grad wrt hidden, grad wrt target row, grads wrt negative rows).
    """
    hidden = np.asarray(hidden, dtype=np.float64)
    target_out = np.asarray(target_out, dtype=np.float64)
    negatives_out = np.asarray(negatives_out, dtype=np.float64)
    if negatives_out.ndim == 1:
        negatives_out = negatives_out[None, :]

    pos_dot = hidden @ target_out
    neg_dots = negatives_out @ hidden
    # -log sigmoid(z) == logaddexp(0, -z), stable for large |z|
    loss = np.logaddexp(0.0, -pos_dot) + np.logaddexp(0.0, neg_dots).sum()

    pos_coeff = expit(pos_dot) - 1.0
    neg_coeffs = expit(neg_dots)
    grad_hidden = pos_coeff * target_out + neg_coeffs @ negatives_out
    grad_target = pos_coeff * hidden
    grad_negatives = neg_coeffs[:, None] * hidden[None, :]
    return float(loss), grad_hidden, grad_target, grad_negatives


def _citation_step(
    relation: CitationRelation,
    matrices: ModelMatrices,
    sampler: NegativeSampler,
    lr: float,
    *,
    negative: int,
    variant: str,
    structural_context: bool,
) -> float:
    """One in-place gradient-descent update for one citation relation.

    Returns the sampled loss before the update.  If every negative draw
    collides with the target the update is skipped and the loss is 0.
    """
    structural = sorted(relation.structural) if structural_context else []
    doc_rows = np.asarray([relation.source] + structural, dtype=np.intp)
    ctx = np.asarray(relation.context, dtype=np.intp)

    parts = np.concatenate((matrices.doc_in[doc_rows], matrices.word_in[ctx]), axis=0)
    m = parts.shape[0]
    if variant == "att":
        slots = np.concatenate((doc_rows, matrices.n_docs + ctx))
        weights = attention_ratios(matrices.attention, slots)
    else:
        weights = np.full(m, 1.0 / m)
    hidden = weights @ parts

    negatives = sampler.sample(negative, exclude=relation.target)
    if negatives.size == 0:
        return 0.0
    loss, grad_hidden, grad_target, grad_negatives = ns_loss_and_grads(
        hidden, matrices.doc_out[relation.target], matrices.doc_out[negatives]
    )

    out_rows = np.concatenate((np.asarray([relation.target], dtype=np.intp), negatives))
    out_steps = np.concatenate((grad_target[None, :], grad_negatives), axis=0)
    out_steps *= -lr
    np.add.at(matrices.doc_out, out_rows, out_steps)  # negative draws may repeat

    # each participant receives its share of the hidden-layer gradient
    in_steps = (lr * weights)[:, None] * grad_hidden[None, :]
    matrices.doc_in[doc_rows] -= in_steps[: doc_rows.size]  # doc rows are distinct
    np.subtract.at(matrices.word_in, ctx, in_steps[doc_rows.size :])

    if variant == "att":
        projections = parts @ grad_hidden
        mean_projection = weights @ projections
        score_grads = weights * (projections - mean_projection)
        np.subtract.at(matrices.attention, slots, lr * score_grads)
    return loss


def backprop_avg(
    relation: CitationRelation,
    matrices: ModelMatrices,
    sampler: NegativeSampler,
    lr: float,
    *,
    negative: int,
    structural_context: bool = True,
) -> float:
    """Mean-pooled update; returns the sampled loss before the step."""
    return _citation_step(
        relation,
        matrices,
        sampler,
        lr,
        negative=negative,
        variant="avg",
        structural_context=structural_context,
    )


def backprop_att(
    relation: CitationRelation,
    matrices: ModelMatrices,
    sampler: NegativeSampler,
    lr: float,
    *,
    negative: int,
    structural_context: bool = True,
) -> float:
    """Attention-pooled update; also trains the attention scores."""
    return _citation_step(
        relation,
        matrices,
        sampler,
        lr,
        negative=negative,
        variant="att",
        structural_context=structural_context,
    )


def _lr_at(update: int, total: int, learning_rate: float, min_lr: float) -> float:
    """Linear decay from learning_rate towards min_lr across all updates."""
    if total <= 0:
        return learning_rate
    fraction = update / total
    return max(min_lr, learning_rate + (min_lr - learning_rate) * fraction)


def _content_positions(docs, vocab, window):
    """(doc index, target word, context word indices) per word occurrence."""
    positions = []
    for doc in docs:
        doc_idx = vocab.doc_ids[doc.id]
        for i, token in enumerate(doc.tokens):
            if token.is_cite:
                continue
            ctx_words = _window_context(doc.tokens, i, window)
            positions.append(
                (
                    doc_idx,
                    vocab.word_ids[token.value],
                    np.asarray([vocab.word_ids[w] for w in ctx_words], dtype=np.intp),
                )
            )
    return positions


def retrofit_pvdm(
    docs: list[HyperDocument],
    vocab: Vocabulary,
    config,
    loss_log: list[float] | None = None,
) -> ModelMatrices:
    """Step one: initialize fresh matrices and pre-train them on content.

    Runs ``config.retrofit_epochs`` passes over every word occurrence,
    predicting the word's output vector from the mean of the document
    vector and the window words, with negative word samples.  Populates
    word_in, word_out, and doc_in; doc_out stays zero for step two.
    With retrofit_epochs=0 the fresh initialization is returned unchanged.
    """
    matrices = init_matrices(vocab, config)
    if config.retrofit_epochs == 0:
        return matrices
    positions = _content_positions(docs, vocab, config.window)
    if not positions:
        return matrices
    sampler = NegativeSampler(vocab.word_counts, seed=[config.seed, _RNG_RETROFIT])
    total = config.retrofit_epochs * len(positions)
    update = 0
    for _ in range(config.retrofit_epochs):
        epoch_loss = 0.0
        for doc_idx, target_word, ctx in positions:
            lr = _lr_at(update, total, config.learning_rate, config.min_lr)
            update += 1
            m = 1 + ctx.size
            weights = np.full(m, 1.0 / m)
            parts = np.concatenate(
                (matrices.doc_in[doc_idx][None, :], matrices.word_in[ctx]), axis=0
            )
            hidden = weights @ parts
            negatives = sampler.sample(config.negative, exclude=target_word)
            if negatives.size == 0:
                continue
            loss, grad_hidden, grad_target, grad_negatives = ns_loss_and_grads(
                hidden, matrices.word_out[target_word], matrices.word_out[negatives]
            )
            out_rows = np.concatenate(
                (np.asarray([target_word], dtype=np.intp), negatives)
            )
            out_steps = np.concatenate((grad_target[None, :], grad_negatives), axis=0)
            out_steps *= -lr
            np.add.at(matrices.word_out, out_rows, out_steps)
            in_steps = (lr * weights)[:, None] * grad_hidden[None, :]
            matrices.doc_in[doc_idx] -= in_steps[0]
            np.subtract.at(matrices.word_in, ctx, in_steps[1:])
            epoch_loss += loss
        if loss_log is not None:
            loss_log.append(epoch_loss / len(positions))
    return matrices


@dataclass(frozen=True)
class TrainProgress:
    """One per-epoch progress record of the citation-training phase."""

    epoch: int
    relations_seen: int
    current_lr: float
    running_loss: float

    def record(self) -> str:
        return (
            f"epoch={self.epoch} seen={self.relations_seen} "
            f"lr={self.current_lr:.8g} loss={self.running_loss:.8g}"
        )


def _run_span(relations, order, start, stop, matrices, sampler, config, epoch_base, total):
    """Apply the updates for order[start:stop]; returns the summed loss.

    The learning rate of each update depends only on its position in the
    epoch's permutation, so multi-worker runs use the same rate schedule as
    a single worker.
    """
    loss_sum = 0.0
    for pos in range(start, stop):
        relation = relations[order[pos]]
        lr = _lr_at(epoch_base + pos, total, config.learning_rate, config.min_lr)
        loss_sum += _citation_step(
            relation,
            matrices,
            sampler,
            lr,
            negative=config.negative,
            variant=config.variant,
            structural_context=config.structural_context,
        )
    return loss_sum


def train(
    model: Model,
    relations: list[CitationRelation],
    docs: list[HyperDocument],
    on_progress=None,
) -> tuple[Model, list[TrainProgress]]:
    """Run both learning steps in place; returns the model and progress.

    Step two makes ``iterations`` shuffled passes over the relations with a
    linearly decaying learning rate.  workers=1 is bit-reproducible per
    seed.  With more workers the epoch is split across threads that update
    the shared matrices without locks; lost updates are accepted and
    reproducibility is not guaranteed, matrices just have to stay finite.
    """
    if not relations:
        raise ConfigError("cannot train on an empty relation list")
    config = model.config
    model.matrices = retrofit_pvdm(docs, model.vocab, config)
    matrices = model.matrices

    samplers = [
        NegativeSampler(model.vocab.doc_cited_counts, seed=[config.seed, _RNG_CITATION, w])
        for w in range(config.workers)
    ]
    shuffle_rng = np.random.default_rng([config.seed, _RNG_SHUFFLE])
    n = len(relations)
    total = config.iterations * n
    progress: list[TrainProgress] = []
    seen = 0

    for epoch in range(1, config.iterations + 1):
        order = shuffle_rng.permutation(n)
        epoch_base = (epoch - 1) * n
        if config.workers == 1:
            loss_sum = _run_span(
                relations, order, 0, n, matrices, samplers[0], config, epoch_base, total
            )
        else:
            bounds = [round(w * n / config.workers) for w in range(config.workers + 1)]
            results = [0.0] * config.workers
            failures: list[BaseException] = []

            def body(w):
                try:
                    results[w] = _run_span(
                        relations,
                        order,
                        bounds[w],
                        bounds[w + 1],
                        matrices,
                        samplers[w],
                        config,
                        epoch_base,
                        total,
                    )
                except BaseException as exc:  # surface worker errors
                    failures.append(exc)

            threads = [
                threading.Thread(target=body, args=(w,)) for w in range(config.workers)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            if failures:
                raise failures[0]
            loss_sum = sum(results)

        if not matrices.all_finite():
            raise CitevecError(f"non-finite model parameters after epoch {epoch}")
        seen += n
        entry = TrainProgress(
            epoch=epoch,
            relations_seen=seen,
            current_lr=_lr_at(epoch * n - 1, total, config.learning_rate, config.min_lr),
            running_loss=loss_sum / n,
        )
        progress.append(entry)
        if on_progress is not None:
            on_progress(entry)

    model.trained_epochs = config.iterations
    return model, progress
