"""Corpus ingestion: tokenization, vocabulary, time slicing, holdout
splits, subsampling, skip-gram pair extraction and negative sampling.

All values produced here are frozen after construction and safe to share
between threads. Every seeded operation derives its generator from
``numpy.random.default_rng([seed, ...])`` so results are reproducible
byte for byte.
"""

import gzip
import json
import string
import warnings
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .errors import DataError, EmptyCorpusError

NOISE_POWER = 0.75  # exponent of the unigram noise distribution

_PUNC_TABLE = str.maketrans("", "", string.punctuation)


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation characters, split on whitespace."""
    stripped = text.lower().translate(_PUNC_TABLE)
    return [tok for tok in stripped.split() if tok]


def read_stopwords(path) -> set[str]:
    """One word per line, UTF-8; blank lines ignored."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word:
                words.add(word.lower())
    return words


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 timestamp; a bare year is taken as January 1st."""
    text = text.strip()
    if text.isdigit() and len(text) == 4:
        return datetime(int(text), 1, 1)
    try:
        return datetime.fromisoformat(text)
    except ValueError as exc:
        raise DataError(f"unparseable timestamp {text!r}") from exc


def read_manifest(path) -> list[tuple[datetime, Path]]:
    """Manifest format: one ``<ISO-8601 timestamp>\\t<document path>`` per line.

    Relative document paths are resolved against the manifest's directory.
    """
    base = Path(path).parent
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(
                    f"{path}:{lineno}: expected '<timestamp>\\t<path>', got {line!r}"
                )
            ts = parse_timestamp(parts[0])
            doc_path = Path(parts[1])
            if not doc_path.is_absolute():
                doc_path = base / doc_path
            records.append((ts, doc_path))
    return records


def load_documents(manifest_path) -> list[tuple[datetime, list[str]]]:
    """Read and tokenize every document named in a manifest."""
    docs = []
    for ts, doc_path in read_manifest(manifest_path):
        if not doc_path.exists():
            raise DataError(f"document not found: {doc_path}")
        text = doc_path.read_text(encoding="utf-8")
        docs.append((ts, tokenize(text)))
    return docs


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Vocabulary:
    """Dense word<->id map with per-slice occurrence counts.

    Words are ordered by descending total count, ties broken
    lexicographically, so ids are stable across runs on the same corpus.
    """

    words: tuple
    id_of: dict
    total_count: np.ndarray       # shape (L,), int64
    slice_count: np.ndarray       # shape (L, T), int64

    @property
    def size(self) -> int:
        return len(self.words)

    def __post_init__(self):
        self.total_count.setflags(write=False)
        self.slice_count.setflags(write=False)


def assign_slices(documents, boundaries):
    """Bucket timestamped documents into half-open intervals.

    ``boundaries`` must be a strictly increasing sequence of at least two
    timestamps; slice ``t`` covers ``[boundaries[t], boundaries[t+1])``.
    Documents outside every interval are dropped.

    Returns ``(sliced_docs, dropped)`` where ``sliced_docs[t]`` is a list
    of token lists.
    """
    if len(boundaries) < 2:
        raise DataError("need at least two slice boundaries")
    for a, b in zip(boundaries, boundaries[1:]):
        if not a < b:
            raise DataError("slice boundaries must be strictly increasing")
    T = len(boundaries) - 1
    sliced = [[] for _ in range(T)]
    dropped = 0
    for ts, tokens in documents:
        if ts < boundaries[0] or ts >= boundaries[-1]:
            dropped += 1
            continue
        # rightmost boundary <= ts
        lo, hi = 0, T
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if ts >= boundaries[mid]:
                lo = mid
            else:
                hi = mid
        sliced[lo].append(tokens)
    if all(len(s) == 0 for s in sliced):
        raise EmptyCorpusError("empty corpus: every document fell outside the slice boundaries")
    return sliced, dropped


def build_vocabulary(sliced_docs, stopwords, max_size: int) -> Vocabulary:
    """Count words per slice and keep the ``max_size`` most frequent.

    ``sliced_docs`` is a per-slice list of token-list documents, as
    produced by :func:`assign_slices`. Stopwords are excluded before
    ranking. Raises :class:`EmptyCorpusError` if nothing survives.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    T = len(sliced_docs)
    per_slice: list[dict] = []
    totals: dict = {}
    for docs in sliced_docs:
        counts: dict = {}
        for tokens in docs:
            for tok in tokens:
                if tok in stopwords:
                    continue
                counts[tok] = counts.get(tok, 0) + 1
        per_slice.append(counts)
        for tok, n in counts.items():
            totals[tok] = totals.get(tok, 0) + n
    if not totals:
        raise EmptyCorpusError("empty corpus: no tokens left after stopword filtering")

    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    words = tuple(w for w, _ in ranked)
    id_of = {w: i for i, w in enumerate(words)}
    total_count = np.array([n for _, n in ranked], dtype=np.int64)
    slice_count = np.zeros((len(words), T), dtype=np.int64)
    for t, counts in enumerate(per_slice):
        for tok, n in counts.items():
            i = id_of.get(tok)
            if i is not None:
                slice_count[i, t] = n
    return Vocabulary(words=words, id_of=id_of, total_count=total_count,
                      slice_count=slice_count)


def save_vocabulary(vocab: Vocabulary, path) -> None:
    """Export as ``<word>\\t<id>\\t<total_count>`` per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, word in enumerate(vocab.words):
            fh.write(f"{word}\t{i}\t{int(vocab.total_count[i])}\n")


def load_vocabulary(path) -> Vocabulary:
    """Load an exported vocabulary.

    The export format carries no per-slice detail, so the loaded
    ``slice_count`` is a single column equal to ``total_count``.
    """
    words = []
    totals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: malformed vocabulary line")
            word, idx, total = parts
            if int(idx) != len(words):
                raise DataError(f"{path}:{lineno}: ids must be dense and ordered")
            words.append(word)
            totals.append(int(total))
    if not words:
        raise EmptyCorpusError(f"empty vocabulary file: {path}")
    total_count = np.array(totals, dtype=np.int64)
    return Vocabulary(
        words=tuple(words),
        id_of={w: i for i, w in enumerate(words)},
        total_count=total_count,
        slice_count=total_count[:, None].copy(),
    )


# ---------------------------------------------------------------------------
# Time-sliced corpus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SliceReport:
    kept: int
    dropped: int
    oov_tokens: int
    empty_slices: tuple = ()


@dataclass(frozen=True)
class TimeSlicedCorpus:
    """Documents bucketed into T chronologically ordered slices.

    Each document is an int64 array of token ids below the owning
    vocabulary's size. Arrays are read-only.
    """

    slices: tuple          # per slice: tuple of np.ndarray documents
    split_tag: str = "full"

    @property
    def T(self) -> int:
        return len(self.slices)

    def __post_init__(self):
        for docs in self.slices:
            for doc in docs:
                doc.setflags(write=False)

    def doc_counts(self) -> list[int]:
        return [len(docs) for docs in self.slices]

    def token_counts(self) -> list[int]:
        return [int(sum(len(d) for d in docs)) for docs in self.slices]


def _encode(tokens, id_of):
    ids = [id_of[t] for t in tokens if t in id_of]
    return np.asarray(ids, dtype=np.int64)


def slice_corpus(documents, boundaries, vocab: Vocabulary,
                 split_tag: str = "full"):
    """Assign timestamped token documents to slices and encode them.

    Tokens outside the vocabulary are dropped. Returns
    ``(TimeSlicedCorpus, SliceReport)``; raises
    :class:`EmptyCorpusError` when every document is dropped.
    """
    sliced, dropped = assign_slices(documents, boundaries)
    out = []
    kept = 0
    oov = 0
    for docs in sliced:
        encoded = []
        for tokens in docs:
            ids = _encode(tokens, vocab.id_of)
            oov += len(tokens) - len(ids)
            encoded.append(ids)
            kept += 1
        out.append(tuple(encoded))
    empty = tuple(t for t, docs in enumerate(out) if not docs)
    report = SliceReport(kept=kept, dropped=dropped, oov_tokens=oov,
                         empty_slices=empty)
    return TimeSlicedCorpus(slices=tuple(out), split_tag=split_tag), report


def encode_sliced_docs(sliced_docs, vocab: Vocabulary,
                       split_tag: str = "full") -> TimeSlicedCorpus:
    """Encode already-sliced token documents (helper for in-memory pipelines)."""
    out = tuple(
        tuple(_encode(tokens, vocab.id_of) for tokens in docs)
        for docs in sliced_docs
    )
    return TimeSlicedCorpus(slices=out, split_tag=split_tag)


def split_holdout(corpus: TimeSlicedCorpus, fraction: float, seed: int):
    """Hold out ``fraction`` of each slice's documents, half for
    validation and half for testing (validation gets the smaller half
    when the holdout count is odd).

    The three returned corpora partition the input exactly and the split
    is deterministic given ``seed``.
    """
    if not 0 < fraction < 1:
        raise ValueError("holdout fraction must lie in (0, 1)")
    train, valid, test = [], [], []
    for t, docs in enumerate(corpus.slices):
        n = len(docs)
        if n < 3:
            raise DataError(f"slice {t} has only {n} documents; need at least 3 to hold out")
        n_hold = round(n * fraction)
        if n_hold < 2:
            raise DataError(
                f"slice {t}: holdout fraction {fraction} selects {n_hold} of {n} "
                "documents; need at least 2 (one validation, one test)"
            )
        rng = np.random.default_rng([seed, t, 0x5eed])
        order = rng.permutation(n)
        held = order[:n_hold]
        v_idx = sorted(held[: n_hold // 2].tolist())
        s_idx = sorted(held[n_hold // 2:].tolist())
        t_idx = sorted(order[n_hold:].tolist())
        train.append(tuple(docs[i] for i in t_idx))
        valid.append(tuple(docs[i] for i in v_idx))
        test.append(tuple(docs[i] for i in s_idx))
    return (
        TimeSlicedCorpus(slices=tuple(train), split_tag="train"),
        TimeSlicedCorpus(slices=tuple(valid), split_tag="valid"),
        TimeSlicedCorpus(slices=tuple(test), split_tag="test"),
    )


def subsample_corpus(corpus: TimeSlicedCorpus, fraction: float,
                     seed: int) -> TimeSlicedCorpus:
    """Keep roughly ``fraction`` of each slice's documents.

    ``fraction=1`` returns the corpus unchanged. A slice that ends up
    empty triggers a warning, not an error: extreme scarcity is a valid
    operating point.
    """
    if not 0 < fraction <= 1:
        raise ValueError("subsample fraction must lie in (0, 1]")
    if fraction == 1:
        return corpus
    out = []
    for t, docs in enumerate(corpus.slices):
        n = len(docs)
        keep = round(n * fraction)
        rng = np.random.default_rng([seed, t, 0x50b5])
        idx = sorted(rng.permutation(n)[:keep].tolist())
        if n and not idx:
            warnings.warn(f"subsample left slice {t} empty", stacklevel=2)
        out.append(tuple(docs[i] for i in idx))
    return TimeSlicedCorpus(slices=tuple(out), split_tag=corpus.split_tag)


# ---------------------------------------------------------------------------
# Training pairs and negatives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SkipGramBatch:
    """Parallel center/context/label arrays for one time slice.

    Positives appear in extraction order, each immediately followed by
    its negative draws (label 1 = observed pair, 0 = noise pair).
    """

    center_ids: np.ndarray
    context_ids: np.ndarray
    labels: np.ndarray
    slice_index: int

    def __post_init__(self):
        if not (len(self.center_ids) == len(self.context_ids) == len(self.labels)):
            raise ValueError("batch arrays must have equal length")
        self.center_ids.setflags(write=False)
        self.context_ids.setflags(write=False)
        self.labels.setflags(write=False)

    def __len__(self):
        return len(self.center_ids)


def extract_pairs(docs, window: int):
    """Emit every (center, context) pair within ``window`` positions.

    Pairs never cross document boundaries. The canonical order is
    offset-major: for each offset k = 1..window, all left-neighbour pairs
    by position, then all right-neighbour pairs.

    Returns ``(centers, contexts)`` int64 arrays.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    docs = [np.asarray(d, dtype=np.int64) for d in docs if len(d)]
    if not docs:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    flat = np.concatenate(docs)
    doc_id = np.concatenate([np.full(len(d), i, dtype=np.int64)
                             for i, d in enumerate(docs)])
    centers, contexts = [], []
    for k in range(1, window + 1):
        if k >= len(flat):
            break
        same_doc = doc_id[:-k] == doc_id[k:]
        left = flat[:-k][same_doc]
        right = flat[k:][same_doc]
        centers.append(left)
        contexts.append(right)
        centers.append(right)
        contexts.append(left)
    if not centers:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    return np.concatenate(centers), np.concatenate(contexts)


def noise_distribution(vocab: Vocabulary) -> np.ndarray:
    """Unigram distribution raised to the 0.75 power, renormalized."""
    weights = vocab.total_count.astype(np.float64) ** NOISE_POWER
    return weights / weights.sum()


def sample_negatives(vocab: Vocabulary, positives, ratio: int, seed,
                     slice_index: int = 0) -> SkipGramBatch:
    """Interleave each positive pair with ``ratio`` noise pairs.

    Noise pairs keep the positive's center and draw the context from the
    power-0.75 unigram distribution. ``seed`` may be an int or a sequence
    of ints (used to derive per-slice/per-epoch streams).
    """
    if ratio < 1:
        raise ValueError("negative ratio must be >= 1")
    centers, contexts = positives
    centers = np.asarray(centers, dtype=np.int64)
    contexts = np.asarray(contexts, dtype=np.int64)
    n = len(centers)
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return SkipGramBatch(empty, empty.copy(),
                             np.empty(0, dtype=np.int64), slice_index)
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(noise_distribution(vocab))
    cdf[-1] = 1.0
    draws = np.searchsorted(cdf, rng.random(n * ratio), side="right")
    draws = np.minimum(draws, vocab.size - 1).reshape(n, ratio)

    group = 1 + ratio
    out_centers = np.repeat(centers, group)
    out_contexts = np.empty((n, group), dtype=np.int64)
    out_contexts[:, 0] = contexts
    out_contexts[:, 1:] = draws
    labels = np.zeros((n, group), dtype=np.int64)
    labels[:, 0] = 1
    return SkipGramBatch(out_centers, out_contexts.reshape(-1),
                         labels.reshape(-1), slice_index)


# ---------------------------------------------------------------------------
# Corpus files
# ---------------------------------------------------------------------------

def save_corpus(corpus: TimeSlicedCorpus, path) -> None:
    """Write a corpus as JSON (gzipped when the path ends in .gz)."""
    payload = {
        "split": corpus.split_tag,
        "T": corpus.T,
        "slices": [[doc.tolist() for doc in docs] for docs in corpus.slices],
    }
    raw = json.dumps(payload).encode("utf-8")
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "wb") as fh:
            fh.write(raw)
    else:
        path.write_bytes(raw)


def load_corpus(path) -> TimeSlicedCorpus:
    path = Path(path)
    try:
        if path.suffix == ".gz":
            with gzip.open(path, "rb") as fh:
                payload = json.loads(fh.read().decode("utf-8"))
        else:
            payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"unreadable corpus file {path}: {exc}") from exc
    slices = tuple(
        tuple(np.asarray(doc, dtype=np.int64) for doc in docs)
        for docs in payload["slices"]
    )
    return TimeSlicedCorpus(slices=slices, split_tag=payload.get("split", "full"))
