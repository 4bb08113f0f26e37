"""Incremental skip-gram: each slice is trained from the previous
slice's matrices, keeping all slices in one comparable vector space.

Per-epoch document order and negative draws are derived from
(seed, slice, epoch), so a run is reproducible bit for bit. Words that
never occur in a slice are never selected as centers there, so their
word vectors pass through the slice untouched (the lazy optimizer skips
them entirely).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import corpus as corpus_mod
from .adam import AdamState, adam_step_rows
from .errors import NumericalError
from .sgns import EmbeddingMatrix, TrainConfig, batch_grad_rows

FORWARD = "forward"
BACKWARD = "backward"


@dataclass
class IsgModel:
    U: list          # per calendar slice, EmbeddingMatrix (word)
    V: list          # per calendar slice, EmbeddingMatrix (context)

    @property
    def T(self):
        return len(self.U)


def epoch_positives(slice_docs, window: int, seed_key) -> tuple:
    """Shuffle documents with a derived seed and extract positive pairs."""
    rng = np.random.default_rng(seed_key)
    order = rng.permutation(len(slice_docs)) if slice_docs else []
    shuffled = [slice_docs[i] for i in order]
    return corpus_mod.extract_pairs(shuffled, window)


def iter_minibatches(batch, positives_per_batch: int, ratio: int):
    """Chunk an interleaved epoch batch into mini-batches.

    Positives stay adjacent to their negatives because chunk boundaries
    land on group multiples.
    """
    group = 1 + ratio
    step = positives_per_batch * group
    for start in range(0, len(batch), step):
        sl = slice(start, start + step)
        yield batch.center_ids[sl], batch.context_ids[sl], batch.labels[sl]


def _holdout_lpos(eval_pairs, U, V):
    centers, contexts = eval_pairs
    if len(centers) == 0:
        return 0.0
    scores = np.einsum("ij,ij->i", U[centers], V[contexts])
    return float(np.mean(-np.logaddexp(0.0, -scores)))


def train_slice(slice_docs, vocab, initU: np.ndarray, initV: np.ndarray,
                config: TrainConfig, slice_index: int = 0, eval_pairs=None):
    """Run ``config.epochs`` Adam-ascent passes over one slice.

    ``slice_docs`` is the slice's document list (id arrays); negatives
    are redrawn each epoch. Returns ``(U, V, trace)`` where ``trace`` is
    a dict with per-epoch mean-per-pair training ``lpos`` (and
    ``holdout_lpos`` when ``eval_pairs`` is given).
    """
    L, d = initU.shape
    if initV.shape != (L, d):
        raise ValueError("init matrices must share (L, d)")
    U = initU.copy()
    V = initV.copy()
    stateU = AdamState.for_shape((L, d))
    stateV = AdamState.for_shape((L, d))
    trace = {"lpos": [], "holdout_lpos": []} if eval_pairs is not None else {"lpos": []}

    for epoch in range(config.epochs):
        positives = epoch_positives(slice_docs, config.window,
                                    [config.seed, slice_index, epoch, 1])
        batch = corpus_mod.sample_negatives(
            vocab, positives, config.negative_ratio,
            [config.seed, slice_index, epoch, 2], slice_index)
        lpos_sum = 0.0
        n_pos = 0
        for b_idx, (centers, contexts, labels) in enumerate(
                iter_minibatches(batch, config.batch_size, config.negative_ratio)):
            u_rows, gU, v_rows, gV, loglik, lpos = batch_grad_rows(
                centers, contexts, labels, U, V)
            if not math.isfinite(loglik):
                raise NumericalError(
                    f"non-finite loss at slice {slice_index}, epoch {epoch}, batch {b_idx}")
            adam_step_rows(U, u_rows, gU, stateU, config.learning_rate, "U")
            adam_step_rows(V, v_rows, gV, stateV, config.learning_rate, "V")
            lpos_sum += lpos
            n_pos += int(labels.sum())
        trace["lpos"].append(lpos_sum / n_pos if n_pos else 0.0)
        if eval_pairs is not None:
            trace["holdout_lpos"].append(_holdout_lpos(eval_pairs, U, V))
    return U, V, trace


def train_incremental(corpus, vocab, initU: np.ndarray, initV: np.ndarray,
                      config: TrainConfig, direction: str = FORWARD,
                      eval_corpus=None):
    """Chain :func:`train_slice` across all slices.

    ``forward`` trains slice 0 from the initializer and each later slice
    from its predecessor; ``backward`` starts at the last slice and
    updates towards older ones. Outputs are always indexed by calendar
    slice. Returns ``(IsgModel, traces, trained_order)``.
    """
    if direction not in (FORWARD, BACKWARD):
        raise ValueError(f"unknown direction {direction!r}")
    T = corpus.T
    order = list(range(T)) if direction == FORWARD else list(range(T - 1, -1, -1))
    U_out = [None] * T
    V_out = [None] * T
    traces = {}
    curU, curV = initU, initV
    for t in order:
        eval_pairs = None
        if eval_corpus is not None:
            eval_pairs = corpus_mod.extract_pairs(eval_corpus.slices[t], config.window)
        curU, curV, trace = train_slice(
            corpus.slices[t], vocab, curU, curV, config,
            slice_index=t, eval_pairs=eval_pairs)
        U_out[t] = EmbeddingMatrix(curU, role="word", slice_index=t)
        V_out[t] = EmbeddingMatrix(curV, role="context", slice_index=t)
        traces[t] = trace
    return IsgModel(U=U_out, V=V_out), traces, order
