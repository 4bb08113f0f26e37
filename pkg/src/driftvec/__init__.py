"""driftvec: diachronic word embeddings for scarce time-sliced corpora.

Three trainers share one corpus pipeline: incremental skip-gram (per
slice, warm-started from the previous slice), a dynamically filtered
Bayesian skip-gram (Gaussian posteriors evolving under a diffusion
prior), and dynamic Bernoulli embeddings (per-slice word vectors with a
shared context matrix, trained jointly under a random-walk prior).
Analysis tools cover per-word drift, superimposed drift histograms,
directedness/stability diagnostics, held-out likelihood evaluation, and
a HardShrink drift penalty.
"""

from .adam import AdamState, adam_step, adam_step_rows
from .analysis import (DriftSeries, compute_drift, directedness, drift_histogram,
                       drift_series, evaluate_lpos, stability_fraction)
from .corpus import (SkipGramBatch, TimeSlicedCorpus, Vocabulary, build_vocabulary,
                     extract_pairs, sample_negatives, slice_corpus, split_holdout,
                     subsample_corpus)
from .dbe import DbeModel, DbeParams, dbe_loss, dbe_prior, train_dbe
from .dsg import (DsgParams, GaussianEmbeddingMatrix, combine_priors, dsg_elbo,
                  dsg_filter_step, train_dsg)
from .inits import InitScheme, apply_scheme, init_internal, init_random, load_pretrained
from .isg import IsgModel, train_incremental, train_slice
from .sgns import (EmbeddingMatrix, TrainConfig, sgns_gradients, sgns_log_likelihood,
                   sigmoid)
from .shrinkreg import RegConfig, drift_regularizer, hardshrink
from .synth import PlantedChange, SynthSpec, TopicProfile, generate

__version__ = "0.1.0"
