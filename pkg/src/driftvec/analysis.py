"""Drift computation, histogram export, directedness and stability
diagnostics, and held-out positive log-likelihood evaluation.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .corpus import TimeSlicedCorpus, extract_pairs
from .errors import DataError


def compute_drift(U_t: np.ndarray, U_t0: np.ndarray) -> np.ndarray:
    """Per-word L2 norm of the embedding difference between two slices.

    For the Bayesian model this is applied to posterior means.
    """
    if U_t.shape != U_t0.shape:
        raise ValueError("matrices must share a shape")
    return np.linalg.norm(U_t - U_t0, axis=1)


def drift_total(U_t: np.ndarray, U_t0: np.ndarray) -> float:
    """Matrix-level drift scalar: root of the summed squared differences
    over all words and coordinates (the aggregate counterpart of the
    per-word norms)."""
    return float(np.sqrt(((U_t - U_t0) ** 2).sum()))


@dataclass(frozen=True)
class DriftSeries:
    """Per-word drift magnitudes against a reference slice.

    ``values[i, t]`` is word i's drift from the reference to slice t;
    the reference column is identically zero.
    """

    reference_slice: int
    values: np.ndarray          # (L, T), nonnegative
    model_tag: str = ""

    @property
    def T(self):
        return self.values.shape[1]

    @property
    def target_slices(self):
        return [t for t in range((self.values.shape[1])) if t != self.reference_slice]

    def __post_init__(self):
        self.values.setflags(write=False)


def drift_series(matrices, reference_slice: int, model_tag: str = "") -> DriftSeries:
    """Assemble a series from per-slice word matrices (means for DSG)."""
    T = len(matrices)
    if not 0 <= reference_slice < T:
        raise ValueError("reference slice out of range")
    ref = matrices[reference_slice]
    values = np.zeros((ref.shape[0], T))
    for t in range(T):
        if t != reference_slice:
            values[:, t] = compute_drift(matrices[t], ref)
    return DriftSeries(reference_slice=reference_slice, values=values,
                       model_tag=model_tag)


@dataclass(frozen=True)
class HistogramExport:
    bin_edges: np.ndarray       # (bins + 1,)
    counts: dict                # target slice -> (bins,) int array
    log_scale: bool = True


def drift_histogram(series: DriftSeries, bins: int) -> HistogramExport:
    """Superimposed histograms of drifts toward each target slice.

    All target slices share bin edges spanning the global value range,
    so per-slice counts each sum to the vocabulary size. Counts are
    meant to be plotted on a log scale.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    targets = series.target_slices
    pool = series.values[:, targets]
    lo = float(pool.min()) if pool.size else 0.0
    hi = float(pool.max()) if pool.size else 0.0
    if hi <= lo:
        hi = lo + 1.0   # degenerate range: everything lands in the first bin
    edges = np.linspace(lo, hi, bins + 1)
    counts = {}
    for t in targets:
        c, _ = np.histogram(series.values[:, t], bins=edges)
        counts[t] = c
    return HistogramExport(bin_edges=edges, counts=counts)


def directedness(series: DriftSeries, word_ids=None) -> float:
    """Kendall-style rank correlation between target-slice order and
    mean drift: +1 when drifts grow with every step away from the
    reference, 0 when there is no ordering preference.

    ``word_ids`` restricts the mean to a subset (e.g. one word).
    """
    targets = series.target_slices
    if len(targets) < 2:
        raise DataError("directedness needs at least two target slices")
    values = series.values if word_ids is None else series.values[word_ids]
    if values.ndim == 1:
        values = values[None, :]
    means = [values[:, t].mean() for t in targets]
    concordant = 0
    discordant = 0
    n = len(means)
    for i in range(n):
        for j in range(i + 1, n):
            if means[j] > means[i]:
                concordant += 1
            elif means[j] < means[i]:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) / 2)


def stability_fraction(series: DriftSeries, target_t: int,
                       threshold_fraction: float) -> float:
    """Fraction of words whose drift to ``target_t`` is below
    ``threshold_fraction`` times the mean drift there."""
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    col = series.values[:, target_t]
    return float((col < threshold_fraction * col.mean()).mean())


# ---------------------------------------------------------------------------
# Held-out evaluation
# ---------------------------------------------------------------------------

def evaluate_lpos(corpus: TimeSlicedCorpus, word_matrices, context_matrices,
                  window: int):
    """Mean per-pair log-probability of held-out positive pairs.

    ``word_matrices``/``context_matrices`` hold one (L, d) array per
    slice (pass the shared context matrix T times for the Bernoulli
    model; pass posterior means for the Bayesian one). Returns
    ``(per_slice, mean)``; values are never positive.
    """
    if len(word_matrices) != corpus.T or len(context_matrices) != corpus.T:
        raise ValueError("need one matrix pair per slice")
    per_slice = []
    for t in range(corpus.T):
        centers, contexts = extract_pairs(corpus.slices[t], window)
        if len(centers) == 0:
            warnings.warn(f"slice {t} has no held-out pairs", stacklevel=2)
            per_slice.append(0.0)
            continue
        scores = np.einsum("ij,ij->i", word_matrices[t][centers],
                           context_matrices[t][contexts])
        per_slice.append(float(np.mean(-np.logaddexp(0.0, -scores))))
    return per_slice, float(np.mean(per_slice))


def lpos_breakdown(corpus: TimeSlicedCorpus, word_matrices, context_matrices,
                   window: int):
    """Per-slice positive log-likelihood under every normalization.

    Returns one dict per slice with the raw ``sum`` plus ``per_pair`` and
    ``per_token`` means (the CLI report prints the per-pair numbers).
    """
    out = []
    for t in range(corpus.T):
        centers, contexts = extract_pairs(corpus.slices[t], window)
        tokens = int(sum(len(d) for d in corpus.slices[t]))
        if len(centers) == 0:
            out.append({"sum": 0.0, "pairs": 0, "tokens": tokens,
                        "per_pair": 0.0, "per_token": 0.0})
            continue
        scores = np.einsum("ij,ij->i", word_matrices[t][centers],
                           context_matrices[t][contexts])
        total = float((-np.logaddexp(0.0, -scores)).sum())
        out.append({
            "sum": total,
            "pairs": int(len(centers)),
            "tokens": tokens,
            "per_pair": total / len(centers),
            "per_token": total / tokens if tokens else 0.0,
        })
    return out


def format_lpos_report(per_slice, mean) -> str:
    """Plain-text table: one row per slice plus a mean row, 4 decimals.

    Values are mean log-probabilities per held-out positive pair.
    """
    lines = ["slice\tlpos"]
    for t, v in enumerate(per_slice):
        lines.append(f"{t}\t{v:.4f}")
    lines.append(f"mean\t{mean:.4f}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def write_drift_csv(series: DriftSeries, words, path) -> None:
    """One row per (word, target slice): ``word,t,drift``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("word,t,drift\n")
        for t in range(series.T):
            col = series.values[:, t]
            for i, word in enumerate(words):
                fh.write(f"{word},{t},{col[i]:.10g}\n")


def write_histogram_csv(hist: HistogramExport, path) -> None:
    """One row per (bin, target slice): ``bin_lo,bin_hi,t,count``."""
    edges = hist.bin_edges
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bin_lo,bin_hi,t,count\n")
        for t in sorted(hist.counts):
            for b, count in enumerate(hist.counts[t]):
                fh.write(f"{edges[b]:.10g},{edges[b + 1]:.10g},{t},{int(count)}\n")
