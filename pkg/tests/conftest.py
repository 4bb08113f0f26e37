import numpy as np
import pytest

from driftvec.corpus import (SkipGramBatch, build_vocabulary,
                             encode_sliced_docs, tokenize)


def sliced_from_strings(slices):
    """Per-slice lists of document strings -> per-slice token lists."""
    return [[tokenize(doc) for doc in docs] for docs in slices]


def toy_corpus(slices, stopwords=(), max_size=10_000):
    """Build (vocab, corpus) from per-slice document strings."""
    sliced = sliced_from_strings(slices)
    vocab = build_vocabulary(sliced, set(stopwords), max_size)
    corpus = encode_sliced_docs(sliced, vocab)
    return vocab, corpus


def make_batch(centers, contexts, labels, slice_index=0):
    return SkipGramBatch(
        np.asarray(centers, dtype=np.int64),
        np.asarray(contexts, dtype=np.int64),
        np.asarray(labels, dtype=np.int64),
        slice_index,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
