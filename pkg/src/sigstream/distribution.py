"""Expected signatures of empirical measures, SES/KES features and ridge fitting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .sig_kernel import kernel_pde_value
from .signature import signature, signature_path
from .streams import Stream, StreamError, as_stream
from .tensor_algebra import DimensionError, TruncatedTensor, tensor_size


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted collection of streams sharing a dimension; weights sum to one."""

    streams: tuple[Stream, ...]
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        streams = tuple(as_stream(s) for s in self.streams)
        if not streams:
            raise StreamError("an empirical measure needs at least one stream")
        d = streams[0].dim
        if any(s.dim != d for s in streams):
            raise DimensionError("member streams must share their dimension")
        if self.weights is None:
            w = np.full(len(streams), 1.0 / len(streams))
        else:
            w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
            if w.size != len(streams) or np.any(w <= 0):
                raise ValueError("need one positive weight per stream")
            w = w / w.sum()
        w.flags.writeable = False
        object.__setattr__(self, "streams", streams)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.streams[0].dim

    def __len__(self) -> int:
        return len(self.streams)

    def mixture(self, other: "EmpiricalMeasure", alpha: float) -> "EmpiricalMeasure":
        """alpha * self + (1 - alpha) * other."""
        w = np.concatenate([alpha * self.weights, (1 - alpha) * other.weights])
        keep = w > 0
        streams = [s for s, k in zip(self.streams + other.streams, keep) if k]
        return EmpiricalMeasure(tuple(streams), w[keep])


def _member_signatures(mu: EmpiricalMeasure, depth: int) -> np.ndarray:
    return np.stack([signature(s, depth).coefficients for s in mu.streams])


def expected_signature(mu: EmpiricalMeasure, depth: int) -> TruncatedTensor:
    return TruncatedTensor(mu.dim, depth, mu.weights @ _member_signatures(mu, depth))


def common_span(mu: EmpiricalMeasure) -> tuple[float, float]:
    spans = {s.span for s in mu.streams}
    if len(spans) != 1:
        raise StreamError(f"member streams do not share a time span: {sorted(spans)}")
    return spans.pop()


def default_grid(mu: EmpiricalMeasure) -> np.ndarray:
    """Union of member knot times."""
    common_span(mu)
    return np.unique(np.concatenate([s.time_axis() for s in mu.streams]))


def _running_signature_at(s: Stream, depth: int, grid: np.ndarray) -> np.ndarray:
    """S_{start, t} for every t in grid, interpolating inside a knot interval via Chen."""
    t = s.time_axis()
    running = signature_path(s, depth)
    out = np.empty((len(grid), running.shape[1]))
    for g, at in enumerate(grid):
        j = int(np.searchsorted(t, at, side="right")) - 1
        if j >= len(t) - 1 or at == t[j]:
            out[g] = running[min(j, len(t) - 1)]
            continue
        frac = (at - t[j]) / (t[j + 1] - t[j])
        piece = np.vstack([s.points[j], s.points[j] + frac * (s.points[j + 1] - s.points[j])])
        head = TruncatedTensor(s.dim, depth, running[j])
        out[g] = (head @ signature(piece, depth).tensor).coefficients
    return out


def pathwise_expected_signature(mu: EmpiricalMeasure, depth: int,
                                grid: Sequence[float] | None = None) -> Stream:
    """The path t -> E_mu[S_{start,t}(X)] sampled on ``grid``.

    Output points live in the flattened tensor space of dimension
    sum_{k<=depth} d^k; the output's timestamps are the grid.
    """
    lo, hi = common_span(mu)
    g = default_grid(mu) if grid is None else np.asarray(grid, dtype=np.float64).reshape(-1)
    if g.size == 0 or g.min() < lo or g.max() > hi:
        raise StreamError(f"grid outside the common span [{lo}, {hi}]")
    acc = np.zeros((g.size, tensor_size(mu.dim, depth)))
    for w, s in zip(mu.weights, mu.streams):
        acc += w * _running_signature_at(s, depth, g)
    return Stream(acc, g)


def ses_features(mu: EmpiricalMeasure, inner_depth: int, outer_depth: int,
                 grid: Sequence[float] | None = None) -> np.ndarray:
    """Depth-``outer_depth`` signature of the pathwise expected signature path."""
    path = pathwise_expected_signature(mu, inner_depth, grid)
    return signature(path, outer_depth).coefficients.copy()


def e_term(mu: EmpiricalMeasure, nu: EmpiricalMeasure, depth: int = 4, mode: str = "truncated",
           refinement: int = 3) -> float:
    """Weighted mean of pairwise signature kernels between members of mu and nu."""
    if mode == "truncated":
        return float(mu.weights @ _member_signatures(mu, depth) @ _member_signatures(nu, depth).T @ nu.weights)
    if mode == "pde":
        K = np.array([[kernel_pde_value(x, y, refinement) for y in nu.streams] for x in mu.streams])
        return float(mu.weights @ K @ nu.weights)
    raise ValueError(f"unknown kernel mode {mode!r}")


def expected_signature_distance2(mu: EmpiricalMeasure, nu: EmpiricalMeasure, depth: int = 4,
                                 mode: str = "truncated", refinement: int = 3) -> float:
    """||E_mu S - E_nu S||^2 via E_mm + E_nn - 2 E_mn."""
    return (e_term(mu, mu, depth, mode, refinement) + e_term(nu, nu, depth, mode, refinement)
            - 2.0 * e_term(mu, nu, depth, mode, refinement))


def kes_kernel(mu: EmpiricalMeasure, nu: EmpiricalMeasure, sigma: float, depth: int = 4,
               mode: str = "truncated", refinement: int = 3) -> float:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    dist2 = max(expected_signature_distance2(mu, nu, depth, mode, refinement), 0.0)
    return float(np.exp(-(sigma**2) * dist2))


def kes_gram(measures: Sequence[EmpiricalMeasure], sigma: float, depth: int = 4,
             others: Sequence[EmpiricalMeasure] | None = None) -> np.ndarray:
    """Matrix of KES kernel values (truncated signature kernel inside)."""
    es_a = np.stack([expected_signature(m, depth).coefficients for m in measures])
    es_b = es_a if others is None else np.stack([expected_signature(m, depth).coefficients for m in others])
    sq = (es_a**2).sum(1)[:, None] + (es_b**2).sum(1)[None, :] - 2.0 * es_a @ es_b.T
    G = np.exp(-(sigma**2) * np.maximum(sq, 0.0))
    if others is None:
        G = 0.5 * (G + G.T)
        np.fill_diagonal(G, 1.0)
    return G


# fitting


@dataclass(frozen=True)
class RegressionModel:
    """Fitted linear model.

    ``mode == "linear"``: primal weights on feature vectors (plus intercept).
    ``mode == "kernel"``: dual coefficients against the training Gram rows.
    """

    mode: str
    weights: np.ndarray
    regularization: float
    intercept: float = 0.0
    feature_mean: np.ndarray | None = None
    sigma: float | None = None
    depth: int | None = None
    train_measures: tuple[EmpiricalMeasure, ...] | None = None


def _ridge_svd(X: np.ndarray, y: np.ndarray, reg: float, rcond: float = 1e-12) -> np.ndarray:
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    keep = s > rcond * (s[0] if s.size else 0.0)
    s, U, Vt = s[keep], U[:, keep], Vt[keep]
    return Vt.T @ ((s / (s**2 + reg)) * (U.T @ y))


def fit_linear(features, targets, reg: float = 0.0, center: bool = False) -> RegressionModel:
    """Ridge least squares through an SVD; ``reg = 0`` gives the minimum-norm solution."""
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    if X.size == 0 or y.size == 0:
        raise ValueError("cannot fit on empty data")
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} feature rows for {y.size} targets")
    if reg < 0:
        raise ValueError("regularization must be >= 0")
    mean, intercept = None, 0.0
    if center:
        mean = X.mean(axis=0)
        intercept = float(y.mean())
        X, y = X - mean, y - intercept
    w = _ridge_svd(X, y, reg)
    return RegressionModel("linear", w, reg, intercept, mean)


def fit_kernel(gram_matrix, targets, reg: float = 0.0) -> RegressionModel:
    """Kernel ridge regression dual coefficients (G + reg I)^+ y."""
    G = np.asarray(gram_matrix, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    if G.size == 0 or y.size == 0:
        raise ValueError("cannot fit on empty data")
    if G.shape != (y.size, y.size):
        raise ValueError(f"Gram matrix shape {G.shape} does not match {y.size} targets")
    if reg < 0:
        raise ValueError("regularization must be >= 0")
    vals, vecs = np.linalg.eigh(0.5 * (G + G.T))
    shifted = vals + reg
    tol = 1e-12 * max(np.abs(shifted).max(), 1e-300)
    inv = np.where(np.abs(shifted) > tol, 1.0 / np.where(shifted == 0, 1.0, shifted), 0.0)
    alpha = vecs @ (inv * (vecs.T @ y))
    return RegressionModel("kernel", alpha, reg)


def predict(model: RegressionModel, inputs) -> np.ndarray:
    """Predictions from feature rows (linear) or Gram rows against training data (kernel)."""
    X = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if model.mode == "linear":
        if model.feature_mean is not None:
            X = X - model.feature_mean
        return X @ model.weights + model.intercept
    if model.mode == "kernel":
        return X @ model.weights
    raise ValueError(f"unknown model mode {model.mode!r}")


def fit_ses(measures: Sequence[EmpiricalMeasure], targets, inner_depth: int, outer_depth: int,
            reg: float = 0.0, center: bool = False, grid=None) -> RegressionModel:
    feats = np.stack([ses_features(m, inner_depth, outer_depth, grid) for m in measures])
    return fit_linear(feats, targets, reg, center)


def predict_ses(model: RegressionModel, measures: Sequence[EmpiricalMeasure], inner_depth: int,
                outer_depth: int, grid=None) -> np.ndarray:
    feats = np.stack([ses_features(m, inner_depth, outer_depth, grid) for m in measures])
    return predict(model, feats)


def fit_kes(measures: Sequence[EmpiricalMeasure], targets, sigma: float, depth: int = 4,
            reg: float = 1e-6) -> RegressionModel:
    G = kes_gram(measures, sigma, depth)
    base = fit_kernel(G, targets, reg)
    return RegressionModel("kernel", base.weights, reg, sigma=sigma, depth=depth,
                           train_measures=tuple(measures))


def predict_kes(model: RegressionModel, measures: Sequence[EmpiricalMeasure]) -> np.ndarray:
    if model.train_measures is None:
        raise ValueError("model has no stored training measures")
    rows = kes_gram(measures, model.sigma, model.depth, others=model.train_measures)
    return rows @ model.weights
