"""Dynamic Bernoulli embeddings.

Per-slice word vectors share a single context matrix and are trained
jointly over all slices. A Gaussian random-walk prior couples
consecutive slices (precision ``drift_precision``) while base parameters
(the context matrix and slice-0 word matrix) carry a zero-mean prior
with precision ``base_precision``. The data terms use the same positive
and negative pair log-likelihoods as the skip-gram objective, scored
against the shared context matrix.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import corpus as corpus_mod
from .adam import AdamState, adam_step
from .errors import NumericalError
from .isg import epoch_positives, iter_minibatches
from .sgns import EmbeddingMatrix, TrainConfig, batch_grad_rows, sgns_log_likelihood, sigmoid
from . import shrinkreg


@dataclass
class DbeParams:
    drift_precision: float = 1.0    # pulls u_{i,t} toward u_{i,t-1}
    base_precision: float = 0.01    # zero-mean pull on V and U_0

    def __post_init__(self):
        if self.drift_precision <= 0 or self.base_precision <= 0:
            raise ValueError("precisions must be > 0")


@dataclass
class DbeModel:
    U: list                  # per calendar slice, EmbeddingMatrix (word)
    V: EmbeddingMatrix       # shared context matrix

    @property
    def T(self):
        return len(self.U)


def dbe_positional_logit(center: int, context_ids, U_t: np.ndarray,
                         V: np.ndarray) -> float:
    """Logit of the Bernoulli that predicts ``center`` from its context.

    The context representation is the sum of the context vectors; with a
    single context word this reduces to the skip-gram dot product.
    """
    if len(context_ids) == 0:
        raise ValueError("context must be nonempty")
    return float(U_t[center] @ V[np.asarray(context_ids, dtype=np.int64)].sum(axis=0))


def dbe_positional_probability(center, context_ids, U_t, V) -> float:
    return float(sigmoid(dbe_positional_logit(center, context_ids, U_t, V)))


def dbe_prior(U_all, V: np.ndarray, params: DbeParams) -> float:
    """Log of the random-walk prior (up to its normalizing constant).

    Always <= 0, and 0 exactly when every parameter is 0. Consecutive
    identical word matrices contribute no drift penalty.
    """
    lam0 = params.base_precision
    lam = params.drift_precision
    total = -0.5 * lam0 * float((V ** 2).sum())
    total += -0.5 * lam0 * float((U_all[0] ** 2).sum())
    for t in range(1, len(U_all)):
        diff = U_all[t] - U_all[t - 1]
        total += -0.5 * lam * float((diff ** 2).sum())
    return total


def dbe_prior_grads(U_all, V: np.ndarray, params: DbeParams):
    """Gradients of :func:`dbe_prior` w.r.t. every word matrix and V."""
    lam0 = params.base_precision
    lam = params.drift_precision
    T = len(U_all)
    gradU = [np.zeros_like(U) for U in U_all]
    gradU[0] -= lam0 * U_all[0]
    for t in range(1, T):
        diff = U_all[t] - U_all[t - 1]
        gradU[t] -= lam * diff
        gradU[t - 1] += lam * diff
    gradV = -lam0 * V
    return gradU, gradV


def dbe_loss(batches, U_all, V: np.ndarray, params: DbeParams):
    """Joint objective over per-slice batches.

    Returns ``(total, likelihood, lpos, prior)`` where ``total`` is the
    maximized quantity (likelihood plus prior).
    """
    likelihood = 0.0
    lpos = 0.0
    for batch in batches:
        ll, lp = sgns_log_likelihood(batch, U_all[batch.slice_index], V)
        likelihood += ll
        lpos += lp
    prior = dbe_prior(U_all, V, params)
    return likelihood + prior, likelihood, lpos, prior


def _round_robin(per_slice_batches):
    """Interleave mini-batches across slices: t=0,1,...,T-1,0,1,..."""
    pending = [list(b) for b in per_slice_batches]
    cursors = [0] * len(pending)
    while True:
        emitted = False
        for t, batches in enumerate(pending):
            if cursors[t] < len(batches):
                yield t, batches[cursors[t]]
                cursors[t] += 1
                emitted = True
        if not emitted:
            return


def train_dbe(corpus, vocab, init, params: DbeParams, config: TrainConfig,
              reg: shrinkreg.RegConfig | None = None, eval_corpus=None):
    """Joint Adam ascent on the Bernoulli objective.

    ``init`` is ``(U0, V0)``; every slice's word matrix starts as a copy
    of ``U0`` so the random walk begins with zero drift. Each epoch
    visits mini-batches from all slices round robin, and the prior
    gradient rides along with every batch scaled by the batch's share of
    the epoch's positive pairs, so one epoch applies the full prior
    exactly once.

    The drift penalty, when enabled, measures each slice against a
    snapshot of slice 0 taken at the start of the epoch; its thresholds
    (one per slice) are frozen for the epoch alongside the snapshot.

    Returns ``(DbeModel, traces)``.
    """
    U0, V0 = init
    T = corpus.T
    L, d = U0.shape
    U_all = [U0.copy() for _ in range(T)]
    V = V0.copy()
    statesU = [AdamState.for_shape((L, d)) for _ in range(T)]
    stateV = AdamState.for_shape((L, d))

    reg_active = reg is not None and reg.enabled and reg.alpha > 0
    traces = {t: {"lpos": []} for t in range(T)}
    prior_trace = []
    beta_trace = []
    eval_pairs = None
    if eval_corpus is not None:
        eval_pairs = [corpus_mod.extract_pairs(eval_corpus.slices[t], config.window)
                      for t in range(T)]
        for t in range(T):
            traces[t]["holdout_lpos"] = []

    for epoch in range(config.epochs):
        per_slice = []
        total_pos = 0
        for t in range(T):
            positives = epoch_positives(corpus.slices[t], config.window,
                                        [config.seed, t, epoch, 1])
            batch = corpus_mod.sample_negatives(
                vocab, positives, config.negative_ratio,
                [config.seed, t, epoch, 2], t)
            total_pos += len(positives[0])
            per_slice.append(iter_minibatches(batch, config.batch_size,
                                              config.negative_ratio))

        ref = U_all[0].copy() if reg_active else None
        betas = None
        if reg_active:
            betas = [0.0] * T
            for t in range(1, T):
                betas[t] = shrinkreg.resolve_beta(
                    reg, shrinkreg.word_drifts(U_all[t], ref))
            beta_trace.append(list(betas))

        lpos_sums = [0.0] * T
        pos_counts = [0] * T
        for t, (centers, contexts, labels) in _round_robin(per_slice):
            if len(centers) == 0:
                continue
            n_pos = int(labels.sum())
            frac = n_pos / total_pos if total_pos else 1.0
            u_rows, gU_rows, v_rows, gV_rows, loglik, lp = batch_grad_rows(
                centers, contexts, labels, U_all[t], V)
            if not math.isfinite(loglik):
                raise NumericalError(
                    f"non-finite loss at slice {t}, epoch {epoch}")
            lpos_sums[t] += lp
            pos_counts[t] += n_pos

            gradU_prior, gradV_prior = dbe_prior_grads(U_all, V, params)
            for s in range(T):
                g = frac * gradU_prior[s]
                if s == t:
                    g[u_rows] += gU_rows
                if reg_active and s > 0:
                    g -= frac * shrinkreg.drift_regularizer_grad(
                        U_all[s], ref, reg.alpha, betas[s])
                adam_step(U_all[s], g, statesU[s], config.learning_rate,
                          f"U[{s}]")
            gV = frac * gradV_prior
            gV[v_rows] += gV_rows
            adam_step(V, gV, stateV, config.learning_rate, "V")

        for t in range(T):
            traces[t]["lpos"].append(
                lpos_sums[t] / pos_counts[t] if pos_counts[t] else 0.0)
            if eval_pairs is not None:
                traces[t]["holdout_lpos"].append(
                    _holdout_lpos(eval_pairs[t], U_all[t], V))
        prior_trace.append(dbe_prior(U_all, V, params))

    model = DbeModel(
        U=[EmbeddingMatrix(U_all[t], role="word", slice_index=t) for t in range(T)],
        V=EmbeddingMatrix(V, role="context", slice_index="static"),
    )
    info = {"per_slice": traces, "prior": prior_trace,
            "adam": {"U": statesU, "V": stateV}}
    if reg_active:
        info["reg_beta"] = beta_trace
    return model, info


def _holdout_lpos(pairs, U_t, V):
    centers, contexts = pairs
    if len(centers) == 0:
        return 0.0
    scores = np.einsum("ij,ij->i", U_t[centers], V[contexts])
    return float(np.mean(-np.logaddexp(0.0, -scores)))
