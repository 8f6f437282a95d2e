"""Log-ODE method for linear controlled differential equations.

For a linear field ``f(z) dX = sum_i B_i z dX^i`` the iterated vector fields
contract a word ``(i_1, ..., i_k)`` to the matrix product ``B_{i_k} ... B_{i_1}``,
so both the log-ODE field and the Picard series reduce to sums of matrix
products weighted by tensor coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .signature import SignatureResult, log_signature, signature
from .streams import Stream, as_stream, restrict
from .tensor_algebra import DimensionError, TruncatedTensor, enumerate_words, tensor_size


class StateOverflowError(ArithmeticError):
    """ODE state became non-finite."""


@dataclass(frozen=True)
class LinearField:
    """Matrices ``B_1..B_d`` (each e x e) of the field ``f(z)dX = sum_i B_i z dX^i``."""

    matrices: np.ndarray

    def __post_init__(self):
        B = np.array(self.matrices, dtype=np.float64)
        if B.ndim != 3 or B.shape[1] != B.shape[2]:
            raise ValueError(f"expected shape (d, e, e), got {B.shape}")
        B.flags.writeable = False
        object.__setattr__(self, "matrices", B)

    @property
    def d(self) -> int:
        return self.matrices.shape[0]

    @property
    def e(self) -> int:
        return self.matrices.shape[1]


@dataclass(frozen=True)
class CdeSolution:
    times: np.ndarray
    states: np.ndarray

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


def _word_matrices(B: LinearField, depth: int) -> list[np.ndarray]:
    """Per level k, the stacked matrices B_{i_k}...B_{i_1} in sigkeys order."""
    e = B.e
    out = [np.eye(e)[None]]
    for _ in range(depth):
        prev = out[-1]
        # word w + (i,) maps to B_i @ M_w; letters vary fastest in the last position
        nxt = np.einsum("iab,wbc->wiac", B.matrices, prev).reshape(-1, e, e)
        out.append(nxt)
    return out


def contract(B: LinearField, tensor: TruncatedTensor, start_level: int = 0) -> np.ndarray:
    """sum_k B^{⊗k}(pi_k tensor) as an e x e matrix."""
    if tensor.d != B.d:
        raise DimensionError(f"tensor alphabet {tensor.d} vs field with {B.d} matrices")
    mats = _word_matrices(B, tensor.depth)
    A = np.zeros((B.e, B.e))
    for k in range(start_level, tensor.depth + 1):
        A += np.tensordot(tensor.level(k), mats[k], axes=1)
    return A


def log_ode_field(B: LinearField, logsig: TruncatedTensor, depth: int | None = None) -> np.ndarray:
    """Matrix A with log-ODE field f~(u) = A u."""
    if depth is not None and depth != logsig.depth:
        raise DimensionError(f"log signature has depth {logsig.depth}, expected {depth}")
    if logsig.coefficients[0] != 0.0:
        raise ValueError("log signature must have zero scalar part")
    return contract(B, logsig, start_level=1)


def rk4(field: Callable[[np.ndarray], np.ndarray], z0: np.ndarray, steps: int) -> np.ndarray:
    """Classical fixed-step RK4 for dx/dr = field(x) over r in [0, 1]."""
    if steps < 1:
        raise ValueError("need at least one substep")
    h = 1.0 / steps
    x = np.array(z0, dtype=np.float64)
    for _ in range(steps):
        k1 = field(x)
        k2 = field(x + 0.5 * h * k1)
        k3 = field(x + 0.5 * h * k2)
        k4 = field(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise StateOverflowError("log-ODE state became non-finite")
    return x


def log_ode_step(z, B: LinearField, logsig: TruncatedTensor, depth: int | None = None,
                 ode_substeps: int = 16) -> np.ndarray:
    A = log_ode_field(B, logsig, depth)
    return rk4(lambda u: A @ u, np.asarray(z, dtype=np.float64), ode_substeps)


def _partition_points(X: Stream, partition) -> np.ndarray:
    lo, hi = X.span
    if isinstance(partition, (int, np.integer)):
        if partition < 1:
            raise ValueError("need at least one coarse interval")
        return np.linspace(lo, hi, int(partition) + 1)
    pts = np.asarray(partition, dtype=np.float64)
    if pts.ndim != 1 or len(pts) < 2 or np.any(np.diff(pts) <= 0):
        raise ValueError("partition must be a strictly increasing sequence of >= 2 times")
    if not (np.isclose(pts[0], lo) and np.isclose(pts[-1], hi)):
        raise ValueError(f"partition [{pts[0]}, {pts[-1]}] does not cover span [{lo}, {hi}]")
    return pts


def solve_cde(z0, B: LinearField, X, partition, depth: int, ode_substeps: int = 16) -> CdeSolution:
    """Step the CDE dz = f(z) dX over each coarse interval with the log-ODE method.

    ``partition`` is either a number of equal coarse intervals or the list of
    partition times covering ``X``'s time span.
    """
    X = as_stream(X)
    if X.dim != B.d:
        raise DimensionError(f"driver has dimension {X.dim}, field expects {B.d}")
    times = _partition_points(X, partition)
    states = [np.asarray(z0, dtype=np.float64)]
    for a, b in zip(times[:-1], times[1:]):
        piece = restrict(X, (a, b))
        L = log_signature(piece, depth)
        states.append(log_ode_step(states[-1], B, L, depth, ode_substeps))
    return CdeSolution(times, np.stack(states))


def linear_cde_series(z0, B: LinearField, sig: SignatureResult | TruncatedTensor) -> np.ndarray:
    """Truncated Picard series (sum_n B^{⊗n}(S^n)) z0."""
    t = sig.tensor if isinstance(sig, SignatureResult) else sig
    return contract(B, t) @ np.asarray(z0, dtype=np.float64)


def exact_linear_solution(z0, B: LinearField, X) -> np.ndarray:
    """Exact terminal state for a piecewise-linear driver (product of matrix exponentials)."""
    from scipy.linalg import expm

    X = as_stream(X)
    z = np.asarray(z0, dtype=np.float64)
    for v in X.increments():
        z = expm(np.tensordot(v, B.matrices, axes=1)) @ z
    return z


def universal_field(d: int, depth: int) -> LinearField:
    """Right multiplication z -> z ⊗ e_i on T^(N)(R^d), one matrix per letter.

    Solving dz = z ⊗ dX from the unit tensor yields the signature of X.
    """
    size = tensor_size(d, depth)
    words = enumerate_words(d, depth)
    index = {w: n for n, w in enumerate(words)}
    mats = np.zeros((d, size, size))
    for col, w in enumerate(words):
        if len(w) == depth:
            continue
        for i in range(d):
            mats[i, index[w + (i + 1,)], col] = 1.0
    return LinearField(mats)
