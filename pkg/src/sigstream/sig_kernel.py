"""Signature kernels: truncated inner products and the Goursat PDE solver."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signature import signature
from .streams import Stream, as_stream
from .tensor_algebra import DimensionError, inner_product


@dataclass(frozen=True)
class KernelGrid:
    """Solver state: K(s_i, t_j) on the dyadically refined knot grid."""

    s_coords: np.ndarray
    t_coords: np.ndarray
    values: np.ndarray

    @property
    def corner(self) -> float:
        return float(self.values[-1, -1])


def _check_dims(x: Stream, y: Stream) -> None:
    if x.dim != y.dim:
        raise DimensionError(f"streams of dimension {x.dim} and {y.dim}")


def kernel_truncated(x, y, depth: int) -> float:
    x, y = as_stream(x), as_stream(y)
    _check_dims(x, y)
    return inner_product(signature(x, depth).tensor, signature(y, depth).tensor)


def kernel_phi(x, y, depth: int, phi: Sequence[float]) -> float:
    """Level-weighted kernel sum_n phi(n) <S^n(x), S^n(y)>."""
    x, y = as_stream(x), as_stream(y)
    _check_dims(x, y)
    phi = np.asarray(phi, dtype=np.float64)
    if phi.size != depth + 1:
        raise ValueError(f"need {depth + 1} level weights, got {phi.size}")
    sx, sy = signature(x, depth).tensor, signature(y, depth).tensor
    return float(sum(w * np.dot(a, b) for w, a, b in zip(phi, sx.levels(), sy.levels())))


def _refine(knots: np.ndarray, factor: int) -> np.ndarray:
    if len(knots) == 1:
        return knots.copy()
    frac = np.arange(factor) / factor
    inner = (knots[:-1, None] + frac[None, :] * np.diff(knots)[:, None]).reshape(-1)
    return np.append(inner, knots[-1])


def _increment_products(x: Stream, y: Stream, factor: int, scale: float) -> np.ndarray:
    dx = x.increments() * (scale / factor)
    dy = y.increments() * (scale / factor)
    inc = dx @ dy.T
    return np.repeat(np.repeat(inc, factor, axis=0), factor, axis=1)


def kernel_pde(x, y, refinement: int = 0, scale: float = 1.0) -> KernelGrid:
    """Explicit finite-difference solution of the signature-kernel Goursat problem.

    Each knot interval of either stream is split into ``2**refinement`` equal
    pieces. ``scale`` multiplies both paths before solving. Cells are filled
    one anti-diagonal at a time; cells on a diagonal are independent.
    """
    x, y = as_stream(x), as_stream(y)
    _check_dims(x, y)
    if refinement < 0:
        raise ValueError("refinement level must be >= 0")
    factor = 2**refinement
    s_coords = _refine(x.time_axis(), factor)
    t_coords = _refine(y.time_axis(), factor)
    rows, cols = len(s_coords), len(t_coords)
    K = np.ones((rows, cols))
    if rows == 1 or cols == 1:
        return KernelGrid(s_coords, t_coords, K)
    half = 0.5 * _increment_products(x, y, factor, scale)
    # cell (i, j) of ``half`` updates K[i+1, j+1]
    m, n = half.shape
    for diag in range(m + n - 1):
        i = np.arange(max(0, diag - n + 1), min(m, diag + 1))
        j = diag - i
        left = K[i + 1, j]
        up = K[i, j + 1]
        K[i + 1, j + 1] = left + up - K[i, j] + half[i, j] * (left + up)
    return KernelGrid(s_coords, t_coords, K)


def kernel_pde_value(x, y, refinement: int = 0, scale: float = 1.0) -> float:
    return kernel_pde(x, y, refinement, scale).corner


def gram(streams: Sequence, mode: str = "truncated", depth: int = 4, refinement: int = 2,
         scale: float = 1.0, workers: int | None = None) -> np.ndarray:
    """Symmetric matrix of pairwise kernel values.

    ``mode`` is ``"truncated"`` (inner products of depth-``depth`` signatures)
    or ``"pde"`` (Goursat solver at ``refinement``).
    """
    streams = [as_stream(s) for s in streams]
    if not streams:
        return np.zeros((0, 0))
    d = streams[0].dim
    for s in streams:
        if s.dim != d:
            raise DimensionError("all streams in a Gram matrix must share dimension")
    n = len(streams)
    if mode == "truncated":
        feats = np.stack([signature(s, depth).coefficients for s in streams])
        G = feats @ feats.T
        return 0.5 * (G + G.T)
    if mode != "pde":
        raise ValueError(f"unknown kernel mode {mode!r}")
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    G = np.empty((n, n))

    def entry(ij):
        i, j = ij
        return kernel_pde_value(streams[i], streams[j], refinement, scale)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(entry, pairs))
    else:
        values = [entry(p) for p in pairs]
    for (i, j), v in zip(pairs, values):
        G[i, j] = G[j, i] = v
    return G
