"""Streams, stream augmentations and dyadic time decompositions."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class StreamError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Stream:
    """An ordered sequence of points in R^d with optional timestamps.

    ``points`` has shape ``(k, d)``. When ``times`` is ``None`` the index
    ``0, 1, ..., k-1`` is used wherever a time is needed.
    """

    points: np.ndarray
    times: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise StreamError("a stream needs at least one point and shape (k, d)")
        if pts.shape[1] == 0:
            raise StreamError("stream points must have dimension >= 1")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.times is not None:
            t = np.array(self.times, dtype=np.float64).reshape(-1)
            if t.size != pts.shape[0]:
                raise StreamError(f"{t.size} timestamps for {pts.shape[0]} points")
            if np.any(np.diff(t) <= 0):
                raise StreamError("timestamps must be strictly increasing")
            t.flags.writeable = False
            object.__setattr__(self, "times", t)

    @property
    def length(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.length

    def time_axis(self) -> np.ndarray:
        if self.times is not None:
            return self.times
        return np.arange(self.length, dtype=np.float64)

    @property
    def span(self) -> tuple[float, float]:
        t = self.time_axis()
        return float(t[0]), float(t[-1])

    def increments(self) -> np.ndarray:
        return np.diff(self.points, axis=0)

    def reversed(self) -> "Stream":
        times = None
        if self.times is not None:
            times = self.times[-1] + self.times[0] - self.times[::-1]
        return Stream(self.points[::-1], times)

    def translated(self, offset: Sequence[float]) -> "Stream":
        return Stream(self.points + np.asarray(offset, dtype=np.float64), self.times)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Stream):
            return NotImplemented
        if not np.array_equal(self.points, other.points):
            return False
        if self.times is None or other.times is None:
            return self.times is None and other.times is None
        return np.array_equal(self.times, other.times)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Stream(points={self.points.tolist()!r}, times={None if self.times is None else self.times.tolist()!r})"


def as_stream(data) -> Stream:
    return data if isinstance(data, Stream) else Stream(np.asarray(data, dtype=np.float64))


# augmentations


def lead_lag(s: Stream, delay: int = 1, num_pasts: int = 1, pause_future: bool = True) -> Stream:
    """Lead-lag augmentation with one future channel and ``num_pasts`` past channels.

    Output points are ``(future, past_1, ..., past_p)`` concatenated, so the
    output dimension is ``d * (num_pasts + 1)``.

    With ``pause_future`` the future holds while the pasts catch up one
    channel at a time, so each step moves a single channel; past ``i`` trails
    the future by ``i * (delay - 1)`` samples. Without it every channel moves
    together, past ``i`` lagging by ``i * delay`` samples and zero-padded at
    both ends.
    """
    s = as_stream(s)
    if delay < 1 or num_pasts < 1:
        raise StreamError("delay and num_pasts must be >= 1")
    v = s.points
    k, d = v.shape
    p = num_pasts

    if not pause_future:
        out = np.zeros((k + delay * p, d * (p + 1)))
        for ch in range(p + 1):
            lag = ch * delay
            out[lag : lag + k, ch * d : (ch + 1) * d] = v
        return Stream(out)

    lags = [i * (delay - 1) for i in range(1, p + 1)]
    state = [0] * (p + 1)  # sample index held by each channel
    seq = [tuple(state)]

    def emit():
        if tuple(state) != seq[-1]:
            seq.append(tuple(state))

    last = k - 1
    for j in range(1, k + max(lags) + 1):
        state[0] = min(j, last)
        emit()
        for i, lag in enumerate(lags, start=1):
            state[i] = min(max(j - lag, 0), last)
            emit()
    out = np.concatenate([v[list(col)] for col in zip(*seq)], axis=1)
    return Stream(out)


def time_augment(s: Stream, times: Sequence[float] | None = None, mode: str = "absolute") -> Stream:
    """Append a time channel (``absolute``) or time-step channel (``difference``)."""
    s = as_stream(s)
    if times is None:
        times = s.time_axis()
    t = np.asarray(times, dtype=np.float64).reshape(-1)
    if t.size != s.length:
        raise StreamError(f"{t.size} times for a stream of length {s.length}")
    if np.any(np.diff(t) <= 0):
        raise StreamError("times must be strictly increasing")
    if mode in ("absolute", "abs"):
        channel = t
    elif mode in ("difference", "diff"):
        channel = np.concatenate([t[:1], np.diff(t)])
    else:
        raise StreamError(f"unknown time augmentation mode {mode!r}")
    return Stream(np.column_stack([s.points, channel]), s.times)


def invisibility_reset(s: Stream) -> Stream:
    s = as_stream(s)
    k, d = s.points.shape
    out = np.zeros((k + 2, d + 1))
    out[:k, :d] = s.points
    out[:k, d] = 1.0
    out[k, :d] = s.points[-1]
    return Stream(out)


def cumulative_sum(s: Stream) -> Stream:
    s = as_stream(s)
    return Stream(np.cumsum(s.points, axis=0), s.times)


# dyadic decomposition and restriction


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise StreamError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)


def dyadic_intervals(level: int, horizon: float = 1.0, include_overlap: bool = True,
                     start: float = 0.0) -> list[Interval]:
    """Level-``level`` dyadic pieces of ``[start, start + horizon]``, then the overlap pieces."""
    if level < 0:
        raise StreamError("dyadic level must be >= 0")
    if not horizon > 0:
        raise StreamError("horizon must be positive")
    n = 2**level
    out = [Interval(start + i / n * horizon, start + (i + 1) / n * horizon) for i in range(n)]
    if include_overlap:
        out += [
            Interval(start + (2 * k + 1) / (2 * n) * horizon, start + (2 * k + 3) / (2 * n) * horizon)
            for k in range(n - 1)
        ]
    return out


def dyadic_hierarchy(max_level: int, horizon: float = 1.0, include_overlap: bool = True,
                     start: float = 0.0) -> list[Interval]:
    """Concatenation of levels ``0..max_level``."""
    return list(
        itertools.chain.from_iterable(
            dyadic_intervals(j, horizon, include_overlap, start) for j in range(max_level + 1)
        )
    )


def _interp(t: np.ndarray, pts: np.ndarray, at: float) -> np.ndarray:
    i = int(np.searchsorted(t, at, side="right")) - 1
    i = min(max(i, 0), len(t) - 2)
    w = (at - t[i]) / (t[i + 1] - t[i])
    return (1.0 - w) * pts[i] + w * pts[i + 1]


def restrict(s: Stream, iv: Interval | tuple[float, float]) -> Stream:
    """Piece of the piecewise-linear interpolant of ``s`` over ``iv``.

    Knots strictly inside the interval are kept; the endpoints (clipped to the
    stream's time span) are obtained by linear interpolation.
    """
    s = as_stream(s)
    lo, hi = (iv.lo, iv.hi) if isinstance(iv, Interval) else iv
    t = s.time_axis()
    a, b = max(lo, t[0]), min(hi, t[-1])
    if s.length == 1:
        if lo <= t[0] <= hi:
            return s
        raise StreamError("interval does not meet the stream's time span")
    if not a < b:
        if a == b:
            p = _interp(t, s.points, a)
            return Stream(p[None, :], [a])
        raise StreamError(f"interval [{lo}, {hi}] does not meet span [{t[0]}, {t[-1]}]")
    inside = (t > a) & (t < b)
    times = np.concatenate([[a], t[inside], [b]])
    pts = np.vstack([_interp(t, s.points, a), s.points[inside], _interp(t, s.points, b)])
    return Stream(pts, times)


# CSV


def read_csv(source: str | Path | io.TextIOBase) -> Stream:
    """Read a stream: one row per point, optional header, optional leading ``t`` column.

    A header whose first field is ``t`` marks the first column as timestamps.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(source))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise StreamError("empty CSV stream")
    has_time = False
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header = [c.strip().lower() for c in rows[0]]
        has_time = bool(header) and header[0] == "t"
        rows = rows[1:]
    if not rows:
        raise StreamError("CSV stream has a header but no data")
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise StreamError(f"non-numeric CSV field: {exc}") from exc
    if has_time:
        if data.shape[1] < 2:
            raise StreamError("a timestamped CSV needs at least one channel")
        return Stream(data[:, 1:], data[:, 0])
    return Stream(data)


def format_float(x: float) -> str:
    """Shortest round-trippable rendering (at most 17 significant digits)."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_csv(s: Stream, dest: str | Path | io.TextIOBase | None = None) -> str:
    s = as_stream(s)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    with_time = s.times is not None
    header = (["t"] if with_time else []) + [f"x{i + 1}" for i in range(s.dim)]
    writer.writerow(header)
    for j in range(s.length):
        row = ([format_float(s.times[j])] if with_time else []) + [format_float(v) for v in s.points[j]]
        writer.writerow(row)
    text = buf.getvalue()
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    elif dest is not None:
        dest.write(text)
    return text
