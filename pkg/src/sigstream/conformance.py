"""Variance-norm conformance scoring of streams against a corpus.

Streams are mapped to their truncated signatures (levels 1..N). The variance
norm of the corpus's centred empirical measure is a Mahalanobis norm that is
infinite off the span of the centred features; the conformance of a query is
its smallest variance-norm distance to a corpus member.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .signature import signature
from .streams import Stream, as_stream

FORMAT_VERSION = 1
MAGIC = "sigstream-conformance"


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class ConformanceModel:
    corpus_features: np.ndarray
    mean: np.ndarray
    singular_values: np.ndarray
    directions: np.ndarray
    depth: int | None = None
    rcond: float = 1e-10

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.retained))

    @property
    def retained(self) -> np.ndarray:
        s = self.singular_values
        if s.size == 0 or s[0] == 0.0:
            return np.zeros(s.size, dtype=bool)
        return s > self.rcond * s[0]


@dataclass(frozen=True)
class ConformanceScore:
    value: float
    nearest_index: int


def signature_features(stream, depth: int) -> np.ndarray:
    """Signature coordinates of levels 1..depth (the constant 1 dropped)."""
    return signature(as_stream(stream), depth).coefficients[1:].copy()


def fit_features(features, rcond: float = 1e-10, depth: int | None = None) -> ConformanceModel:
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if F.shape[0] < 2:
        raise CorpusError("a corpus needs at least two members")
    mean = F.mean(axis=0)
    centred = (F - mean) / math.sqrt(F.shape[0])
    _, s, Vt = np.linalg.svd(centred, full_matrices=False)
    return ConformanceModel(F, mean, s, Vt, depth, rcond)


def fit(corpus: Sequence, depth: int, rcond: float = 1e-10) -> ConformanceModel:
    if len(corpus) < 2:
        raise CorpusError("a corpus needs at least two members")
    F = np.stack([signature_features(s, depth) for s in corpus])
    return fit_features(F, rcond, depth)


def variance_norms(model: ConformanceModel, vectors) -> np.ndarray:
    """Row-wise variance norm; +inf for rows with a component off the retained span."""
    W = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if W.shape[1] != model.dim:
        raise ValueError(f"vector dimension {W.shape[1]} does not match model dimension {model.dim}")
    keep = model.retained
    V = model.directions[keep]
    coeffs = W @ V.T
    norms = np.sqrt(((coeffs / model.singular_values[keep]) ** 2).sum(axis=1))
    residual = np.linalg.norm(W - coeffs @ V, axis=1)
    outside = residual > model.rcond * np.linalg.norm(W, axis=1)
    norms[outside] = np.inf
    return norms


def variance_norm(model: ConformanceModel, w) -> float:
    return float(variance_norms(model, np.asarray(w, dtype=np.float64).reshape(1, -1))[0])


def conformance_of_features(model: ConformanceModel, feature) -> ConformanceScore:
    f = np.asarray(feature, dtype=np.float64).reshape(-1)
    dists = variance_norms(model, f[None, :] - model.corpus_features)
    idx = int(np.argmin(dists))  # first minimum, i.e. the lowest index on ties
    return ConformanceScore(float(dists[idx]), idx)


def conformance(model: ConformanceModel, x, depth: int | None = None) -> ConformanceScore:
    depth = model.depth if depth is None else depth
    if depth is None:
        raise ValueError("model was fitted on raw features; pass depth explicitly")
    if model.depth is not None and depth != model.depth:
        raise ValueError(f"model fitted at depth {model.depth}, scored at {depth}")
    return conformance_of_features(model, signature_features(x, depth))


def calibrate_features(features, seed: int = 0, rcond: float = 1e-10) -> float:
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    n = F.shape[0]
    if n < 4:
        raise CorpusError("threshold calibration needs at least four corpus members")
    perm = np.random.default_rng(seed).permutation(n)
    first, second = np.sort(perm[: n // 2]), np.sort(perm[n // 2 :])
    model = fit_features(F[first], rcond)
    dists = [conformance_of_features(model, F[i]).value for i in second]
    return float(np.median(dists))


def calibrate_threshold(corpus: Sequence, depth: int, seed: int = 0, rcond: float = 1e-10) -> float:
    """Median nearest-neighbour variance-norm distance of a random half to the other half."""
    if len(corpus) < 4:
        raise CorpusError("threshold calibration needs at least four corpus members")
    F = np.stack([signature_features(s, depth) for s in corpus])
    return calibrate_features(F, seed, rcond)


# serialization


def save_model(model: ConformanceModel, path: str | Path) -> None:
    """Write a versioned JSON document holding every array of the model."""
    doc = {
        "format": MAGIC,
        "version": FORMAT_VERSION,
        "depth": model.depth,
        "rcond": model.rcond,
        "n_corpus": int(model.corpus_features.shape[0]),
        "dim": model.dim,
        "mean": model.mean.tolist(),
        "singular_values": model.singular_values.tolist(),
        "directions": model.directions.tolist(),
        "corpus_features": model.corpus_features.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_model(path: str | Path) -> ConformanceModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MAGIC:
        raise ValueError(f"{path} is not a conformance model file")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    dim = int(doc["dim"])
    feats = np.asarray(doc["corpus_features"], dtype=np.float64).reshape(-1, dim)
    return ConformanceModel(
        corpus_features=feats,
        mean=np.asarray(doc["mean"], dtype=np.float64),
        singular_values=np.asarray(doc["singular_values"], dtype=np.float64),
        directions=np.asarray(doc["directions"], dtype=np.float64).reshape(-1, dim),
        depth=doc["depth"],
        rcond=float(doc["rcond"]),
    )
