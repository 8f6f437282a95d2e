"""Signatures and log-signatures of piecewise-linear streams."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .streams import Interval, Stream, StreamError, as_stream, dyadic_hierarchy, restrict
from .tensor_algebra import (
    DimensionError,
    TruncatedTensor,
    tensor_log,
    tensor_mul,
    tensor_size,
    word_index,
)


@dataclass(frozen=True)
class SignatureResult:
    """Depth-N signature of a stream together with where it came from."""

    tensor: TruncatedTensor
    length: int
    d: int
    depth: int

    @property
    def coefficients(self) -> np.ndarray:
        return self.tensor.coefficients

    def __getitem__(self, word: Sequence[int]) -> float:
        return coordinate(self, word)


def _chen_levels(increments: np.ndarray, depth: int, running: bool = False,
                 block: int = 1024) -> tuple[list[np.ndarray], np.ndarray | None]:
    """Chen's identity applied segment by segment, vectorized across segments.

    Levels are built in increasing order: level n after segment j is level n
    before it plus sum_{k=1..n} S_{n-k}(before j) ⊗ v_j^{⊗k}/k!, so each level is
    a cumulative sum over segments and the top level a single matrix product.
    Returns the final levels and, when ``running``, the flattened signature
    after every segment (without the leading scalar).
    """
    m_all, d = increments.shape
    carry = [np.ones(1)] + [np.zeros(d**k) for k in range(1, depth + 1)]
    rows = []
    for start in range(0, m_all, block):
        v = increments[start : start + block]
        m = v.shape[0]
        powers = [np.ones((m, 1))]
        for k in range(1, depth + 1):
            powers.append((powers[-1][:, :, None] * v[:, None, :]).reshape(m, -1) * (1.0 / k))
        before = [np.ones((m, 1))]
        after_levels = []
        for n in range(1, depth + 1):
            if n == depth and not running:
                acc = powers[n].sum(axis=0)
                for k in range(1, n):
                    acc += (before[n - k].T @ powers[k]).reshape(-1)
                carry[n] = carry[n] + acc
                break
            delta = powers[n].copy()
            for k in range(1, n):
                delta += (before[n - k][:, :, None] * powers[k][:, None, :]).reshape(m, -1)
            after = np.cumsum(delta, axis=0)
            after += carry[n]
            prev = np.empty_like(after)
            prev[0] = carry[n]
            prev[1:] = after[:-1]
            before.append(prev)
            after_levels.append(after)
            carry[n] = after[-1].copy()
        if running and depth > 0:
            rows.append(np.concatenate(after_levels, axis=1))
    path = None
    if running:
        size = tensor_size(d, depth) - 1
        path = np.concatenate(rows, axis=0) if rows else np.zeros((0, size))
    return carry, path


def signature(s: Stream | np.ndarray, depth: int) -> SignatureResult:
    """Truncated signature of the piecewise-linear interpolation of ``s``."""
    s = as_stream(s)
    if depth < 0:
        raise ValueError("depth must be >= 0")
    levels, _ = _chen_levels(s.increments(), depth)
    tensor = TruncatedTensor(s.dim, depth, np.concatenate(levels))
    return SignatureResult(tensor, s.length, s.dim, depth)


def signature_path(s: Stream | np.ndarray, depth: int) -> np.ndarray:
    """Running signatures S_{t_0, t_j} for every knot ``j``; shape ``(k, size)``."""
    s = as_stream(s)
    _, running = _chen_levels(s.increments(), depth, running=True)
    out = np.zeros((s.length, tensor_size(s.dim, depth)))
    out[:, 0] = 1.0
    if depth > 0:
        out[1:, 1:] = running
    return out


def log_signature(s: Stream | np.ndarray, depth: int) -> TruncatedTensor:
    """Tensor-coordinate logarithm of the signature."""
    return tensor_log(signature(s, depth).tensor)


def coordinate(sig: SignatureResult | TruncatedTensor, word: Sequence[int]) -> float:
    t = sig.tensor if isinstance(sig, SignatureResult) else sig
    if len(word) > t.depth:
        raise IndexError(f"word {tuple(word)} longer than depth {t.depth}")
    return float(t.coefficients[word_index(word, t.d)])


def chen_concat(a: SignatureResult, b: SignatureResult) -> SignatureResult:
    if (a.d, a.depth) != (b.d, b.depth):
        raise DimensionError(f"cannot concatenate signatures of (d={a.d}, N={a.depth}) and (d={b.d}, N={b.depth})")
    return SignatureResult(tensor_mul(a.tensor, b.tensor), a.length + b.length - 1, a.d, a.depth)


def concatenate(x: Stream, y: Stream) -> Stream:
    """Path x followed by y translated to start where x ends."""
    x, y = as_stream(x), as_stream(y)
    shifted = y.points[1:] - y.points[0] + x.points[-1]
    return Stream(np.vstack([x.points, shifted]))


def one_variation(s: Stream | np.ndarray) -> float:
    """Length of the piecewise-linear path (sum of Euclidean increment norms)."""
    s = as_stream(s)
    return float(np.linalg.norm(s.increments(), axis=1).sum())


def level_norms(sig: SignatureResult | TruncatedTensor) -> np.ndarray:
    t = sig.tensor if isinstance(sig, SignatureResult) else sig
    return np.array([np.linalg.norm(lev) for lev in t.levels()])


# dyadic path-signature features


@dataclass(frozen=True)
class PsfFeatureVector:
    """Flat PSF features plus the dimensions of their (subset, interval, word) layout."""

    values: np.ndarray
    subsets: tuple[tuple[int, ...], ...]
    intervals: tuple[Interval, ...]
    words_per_signature: int

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.subsets), len(self.intervals), self.words_per_signature

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.shape)


def psf_features(landmarks: Sequence[Stream], m: int, level: int, depth: int,
                 include_overlap: bool = True) -> PsfFeatureVector:
    """Signatures of every m-landmark sub-path over a dyadic hierarchy of intervals.

    Each landmark is a stream; all share a time axis. For every m-subset
    (lexicographic index order) the chosen landmarks are stacked channel-wise
    and the depth-N signature (levels 0..N) is taken over each interval of
    levels ``0..level``. Output order is subset-major, interval-major,
    word-minor.
    """
    marks = [as_stream(x) for x in landmarks]
    if not 1 <= m <= len(marks):
        raise StreamError(f"subset size {m} invalid for {len(marks)} landmarks")
    t = marks[0].time_axis()
    for x in marks[1:]:
        if x.length != marks[0].length or not np.array_equal(x.time_axis(), t):
            raise StreamError("landmark streams must share their timestamps")
    lo, hi = float(t[0]), float(t[-1])
    if not hi > lo:
        raise StreamError("landmark streams need a non-degenerate time span")
    intervals = dyadic_hierarchy(level, hi - lo, include_overlap, start=lo)
    subsets = list(itertools.combinations(range(len(marks)), m))
    chunks = []
    for sub in subsets:
        joined = Stream(np.hstack([marks[i].points for i in sub]), t)
        for iv in intervals:
            chunks.append(signature(restrict(joined, iv), depth).coefficients)
    width = tensor_size(sum(marks[i].dim for i in subsets[0]), depth)
    return PsfFeatureVector(np.concatenate(chunks), tuple(subsets), tuple(intervals), width)
