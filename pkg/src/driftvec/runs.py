"""Run directories: checkpoint layout, run manifests, reload for analysis.

Layout under the run directory:

* ``run.json``    resolved configuration, input content hashes, traces
* ``isg/t<k>.vec`` + ``isg/t<k>.ctx.vec``       per-slice word/context matrices
* ``dsg/t<k>.mean.vec`` / ``t<k>.var.vec``       posterior over word vectors
  and ``t<k>.ctx.mean.vec`` / ``t<k>.ctx.var.vec`` for context vectors
* ``dbe/t<k>.vec`` + ``dbe/context.vec``         per-slice words, shared contexts
* ``<model>/adam_*.txt``                         final optimizer state
"""

import hashlib
import json
from pathlib import Path

from .errors import DataError
from .sgns import load_embedding_text, save_embedding_text


def content_hash(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(rundir, payload: dict) -> None:
    rundir = Path(rundir)
    rundir.mkdir(parents=True, exist_ok=True)
    with open(rundir / "run.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(rundir) -> dict:
    path = Path(rundir) / "run.json"
    if not path.exists():
        raise DataError(f"no run manifest at {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def _model_dir(rundir, kind) -> Path:
    d = Path(rundir) / kind
    d.mkdir(parents=True, exist_ok=True)
    return d


def save_isg_checkpoints(rundir, words, model) -> None:
    d = _model_dir(rundir, "isg")
    for t in range(model.T):
        save_embedding_text(d / f"t{t}.vec", words, model.U[t].values)
        save_embedding_text(d / f"t{t}.ctx.vec", words, model.V[t].values)


def save_dsg_checkpoints(rundir, words, posteriors) -> None:
    d = _model_dir(rundir, "dsg")
    for t, (qU, qV) in enumerate(posteriors):
        save_embedding_text(d / f"t{t}.mean.vec", words, qU.mean)
        save_embedding_text(d / f"t{t}.var.vec", words, qU.variance)
        save_embedding_text(d / f"t{t}.ctx.mean.vec", words, qV.mean)
        save_embedding_text(d / f"t{t}.ctx.var.vec", words, qV.variance)


def save_dbe_checkpoints(rundir, words, model) -> None:
    d = _model_dir(rundir, "dbe")
    for t in range(model.T):
        save_embedding_text(d / f"t{t}.vec", words, model.U[t].values)
    save_embedding_text(d / "context.vec", words, model.V.values)


def _load(path):
    if not Path(path).exists():
        raise DataError(f"missing checkpoint {path}")
    _, matrix = load_embedding_text(path)
    return matrix


def load_slice_matrices(rundir, kind: str, T: int):
    """Word and context matrices per slice, ready for scoring.

    For the Bayesian model these are posterior means; for the Bernoulli
    model the shared context matrix is repeated per slice.
    """
    d = Path(rundir) / kind
    words_mats, ctx_mats = [], []
    if kind == "isg":
        for t in range(T):
            words_mats.append(_load(d / f"t{t}.vec"))
            ctx_mats.append(_load(d / f"t{t}.ctx.vec"))
    elif kind == "dsg":
        for t in range(T):
            words_mats.append(_load(d / f"t{t}.mean.vec"))
            ctx_mats.append(_load(d / f"t{t}.ctx.mean.vec"))
    elif kind == "dbe":
        shared = _load(d / "context.vec")
        for t in range(T):
            words_mats.append(_load(d / f"t{t}.vec"))
            ctx_mats.append(shared)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return words_mats, ctx_mats


def load_variance_matrices(rundir, T: int):
    """Posterior variance matrices of a Bayesian run's word vectors."""
    d = Path(rundir) / "dsg"
    return [_load(d / f"t{t}.var.vec") for t in range(T)]


def checkpoint_words(rundir, kind: str):
    d = Path(rundir) / kind
    first = {"isg": "t0.vec", "dsg": "t0.mean.vec", "dbe": "t0.vec"}[kind]
    if not (d / first).exists():
        raise DataError(f"missing checkpoint {d / first}")
    words, _ = load_embedding_text(d / first)
    return words
