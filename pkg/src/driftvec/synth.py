"""Deterministic synthetic corpus with planted semantic change.

Vocabulary is split into a shared function-word pool plus disjoint topic
word sets. Every stable word keeps one topic for the whole corpus;
planted words live in dedicated documents whose remaining tokens are
drawn from the word's current topic, so a planted word's context
distribution moves from its old to its new topic on the schedule below:

* ``abrupt``  - old topic before ``change_slice``, new topic from it on
* ``gradual`` - linear old->new mixture ramp across the whole horizon
  (``change_slice`` records the nominal midpoint)

Token draws inside each group follow a rank-power distribution so
frequencies are skewed like natural text.
"""

from dataclasses import dataclass, field

import numpy as np

from .corpus import TimeSlicedCorpus, Vocabulary, build_vocabulary, encode_sliced_docs

ABRUPT = "abrupt"
GRADUAL = "gradual"


@dataclass(frozen=True)
class TopicProfile:
    name: str
    skew: float = 1.0     # token probability ~ 1 / rank^skew within the topic

    def __post_init__(self):
        if self.skew < 0:
            raise ValueError("skew must be >= 0")


@dataclass(frozen=True)
class PlantedChange:
    word: str
    change_slice: int
    old_topic: int
    new_topic: int
    mode: str = GRADUAL

    def __post_init__(self):
        if self.mode not in (ABRUPT, GRADUAL):
            raise ValueError(f"unknown change mode {self.mode!r}")


@dataclass
class SynthSpec:
    vocab_size: int = 500
    T: int = 5
    tokens_per_slice: int = 100_000
    seed: int = 0
    topics: list = field(default_factory=lambda: [TopicProfile("a"), TopicProfile("b")])
    planted_changes: list = field(default_factory=list)
    doc_length: int = 12
    pool_fraction: float = 0.3          # share of tokens drawn from the shared pool
    pool_vocab_fraction: float = 0.3    # share of the vocabulary reserved for the pool
    pool_skew: float = 1.0              # rank-power exponent of the pool distribution
    planted_doc_fraction: float = 0.04  # share of documents dedicated to each planted word
    planted_period: int = 3             # planted word occupies every k-th position

    def validate(self):
        if self.vocab_size < 4:
            raise ValueError("vocab_size too small")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.tokens_per_slice < self.doc_length:
            raise ValueError("tokens_per_slice must cover at least one document")
        if len(self.topics) < 1:
            raise ValueError("need at least one topic")
        words = [c.word for c in self.planted_changes]
        if len(set(words)) != len(words):
            raise ValueError("planted words must be distinct")
        for c in self.planted_changes:
            if not 1 <= c.change_slice < max(self.T, 2):
                raise ValueError(
                    f"change_slice {c.change_slice} outside [1, T) for word {c.word!r}")
            for k in (c.old_topic, c.new_topic):
                if not 0 <= k < len(self.topics):
                    raise ValueError(f"topic index {k} out of range for word {c.word!r}")


@dataclass(frozen=True)
class SynthResult:
    corpus: TimeSlicedCorpus
    vocab: Vocabulary
    changes: tuple          # PlantedChange entries, the changed partition
    raw_slices: list        # per slice, list of token-string documents


def word_names(vocab_size: int):
    width = max(4, len(str(vocab_size - 1)))
    return [f"w{i:0{width}d}" for i in range(vocab_size)]


def _rank_power_cdf(n: int, skew: float) -> np.ndarray:
    weights = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** skew
    cdf = np.cumsum(weights / weights.sum())
    cdf[-1] = 1.0
    return cdf


def _draw(rng, cdf, count):
    return np.searchsorted(cdf, rng.random(count), side="right")


def _new_topic_weight(change: PlantedChange, t: int, T: int) -> float:
    if change.mode == ABRUPT:
        return 1.0 if t >= change.change_slice else 0.0
    if T <= 1:
        return 0.0
    return t / (T - 1)


def generate(spec: SynthSpec) -> SynthResult:
    """Build the corpus, its vocabulary, and the change/stable partition.

    Deterministic given ``spec.seed``; each slice draws from its own
    derived stream so slices could be generated independently.
    """
    spec.validate()
    names = word_names(spec.vocab_size)
    planted = {c.word for c in spec.planted_changes}
    for c in spec.planted_changes:
        if c.word not in names:
            raise ValueError(f"planted word {c.word!r} is not a generated vocabulary word")

    pool_size = max(2, round(spec.vocab_size * spec.pool_vocab_fraction))
    pool = [w for w in names[:pool_size] if w not in planted]
    rest = [w for w in names[pool_size:] if w not in planted]
    K = len(spec.topics)
    if len(rest) < K:
        raise ValueError("vocabulary too small for the requested topics")
    topic_words = [rest[k::K] for k in range(K)]

    pool_cdf = _rank_power_cdf(len(pool), spec.pool_skew)
    topic_cdfs = [_rank_power_cdf(len(topic_words[k]), spec.topics[k].skew)
                  for k in range(K)]
    pool_arr = np.array(pool)
    topic_arrs = [np.array(ws) for ws in topic_words]

    raw_slices = []
    for t in range(spec.T):
        rng = np.random.default_rng([spec.seed, t, 0x517])
        docs = []
        n_docs = -(-spec.tokens_per_slice // spec.doc_length)
        n_planted_each = round(n_docs * spec.planted_doc_fraction)
        planted_budget = {c.word: n_planted_each for c in spec.planted_changes}

        for c in spec.planted_changes:
            w_new = _new_topic_weight(c, t, spec.T)
            for _ in range(planted_budget[c.word]):
                docs.append(_planted_doc(rng, c, w_new, spec, pool_arr, pool_cdf,
                                         topic_arrs, topic_cdfs))
        n_normal = n_docs - sum(planted_budget.values())
        if n_normal > 0:
            docs.extend(_normal_docs(rng, n_normal, spec, pool_arr, pool_cdf,
                                     topic_arrs, topic_cdfs))
        order = rng.permutation(len(docs))
        raw_slices.append([docs[i] for i in order])

    vocab = build_vocabulary(raw_slices, set(), spec.vocab_size)
    corpus = encode_sliced_docs(raw_slices, vocab, split_tag="full")
    return SynthResult(corpus=corpus, vocab=vocab,
                       changes=tuple(spec.planted_changes), raw_slices=raw_slices)


def _normal_docs(rng, n_docs, spec, pool_arr, pool_cdf, topic_arrs, topic_cdfs):
    K = len(topic_arrs)
    dl = spec.doc_length
    total = n_docs * dl
    doc_topic = rng.integers(0, K, size=n_docs)
    token_topic = np.repeat(doc_topic, dl)
    from_pool = rng.random(total) < spec.pool_fraction
    out = np.empty(total, dtype=object)
    out[from_pool] = pool_arr[_draw(rng, pool_cdf, int(from_pool.sum()))]
    for k in range(K):
        mask = (~from_pool) & (token_topic == k)
        out[mask] = topic_arrs[k][_draw(rng, topic_cdfs[k], int(mask.sum()))]
    return [list(out[i * dl:(i + 1) * dl]) for i in range(n_docs)]


def _planted_doc(rng, change, new_weight, spec, pool_arr, pool_cdf,
                 topic_arrs, topic_cdfs):
    dl = spec.doc_length
    tokens = np.empty(dl, dtype=object)
    slots = np.arange(dl) % spec.planted_period == 0
    n_ctx = int((~slots).sum())
    from_pool = rng.random(n_ctx) < spec.pool_fraction
    use_new = rng.random(n_ctx) < new_weight
    ctx = np.empty(n_ctx, dtype=object)
    n_pool = int(from_pool.sum())
    ctx[from_pool] = pool_arr[_draw(rng, pool_cdf, n_pool)]
    for topic, mask in ((change.new_topic, (~from_pool) & use_new),
                        (change.old_topic, (~from_pool) & ~use_new)):
        ctx[mask] = topic_arrs[topic][_draw(rng, topic_cdfs[topic], int(mask.sum()))]
    tokens[slots] = change.word
    tokens[~slots] = ctx
    return list(tokens)


# ---------------------------------------------------------------------------
# File output (standard manifest + plaintext documents + ground truth)
# ---------------------------------------------------------------------------

def write_synth_corpus(result: SynthResult, outdir) -> None:
    """Write documents, a manifest (one yearly slice per generated
    slice starting at 2000), and the ground-truth change CSV."""
    from pathlib import Path

    outdir = Path(outdir)
    docs_dir = outdir / "docs"
    docs_dir.mkdir(parents=True, exist_ok=True)
    manifest_lines = []
    for t, docs in enumerate(result.raw_slices):
        slice_dir = docs_dir / f"t{t}"
        slice_dir.mkdir(exist_ok=True)
        for j, tokens in enumerate(docs):
            rel = Path("docs") / f"t{t}" / f"d{j}.txt"
            (outdir / rel).write_text(" ".join(tokens) + "\n", encoding="utf-8")
            manifest_lines.append(f"{2000 + t}-01-01\t{rel}")
    (outdir / "manifest.tsv").write_text("\n".join(manifest_lines) + "\n",
                                         encoding="utf-8")
    with open(outdir / "truth.csv", "w", encoding="utf-8") as fh:
        fh.write("word,change_slice\n")
        for c in result.changes:
            fh.write(f"{c.word},{c.change_slice}\n")


def synth_boundaries(T: int):
    """Slice boundaries matching :func:`write_synth_corpus` timestamps."""
    from datetime import datetime

    return [datetime(2000 + t, 1, 1) for t in range(T + 1)]
