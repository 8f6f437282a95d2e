"""Dense arithmetic in the truncated free tensor algebra T^(N)(R^d).

Coefficients are stored in one flat float64 array, ordered by word length and
then lexicographically (the ``sigkeys`` order). Level ``k`` is a contiguous
block of ``d**k`` entries whose C-order reshape is the k-fold tensor.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from typing import Iterable, Sequence

import numpy as np

Word = tuple[int, ...]


class DimensionError(ValueError):
    """Operands live in different truncated tensor algebras."""


class DomainError(ValueError):
    """Operand is outside the domain of exp/log."""


def tensor_size(d: int, depth: int) -> int:
    if d < 1:
        raise ValueError(f"alphabet size must be >= 1, got {d}")
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    return sum(d**k for k in range(depth + 1))


def level_offsets(d: int, depth: int) -> list[int]:
    """Start index of every level, plus the total size as a final entry."""
    offsets = [0]
    for k in range(depth + 1):
        offsets.append(offsets[-1] + d**k)
    return offsets


def enumerate_words(d: int, depth: int) -> list[Word]:
    if d < 1:
        raise ValueError(f"alphabet size must be >= 1, got {d}")
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    letters = range(1, d + 1)
    return [w for k in range(depth + 1) for w in itertools.product(letters, repeat=k)]


def format_word(word: Sequence[int]) -> str:
    return "(" + ",".join(str(int(i)) for i in word) + ")"


def parse_word(text: str) -> Word:
    body = text.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise ValueError(f"not a word: {text!r}")
    body = body[1:-1].strip()
    if not body:
        return ()
    return tuple(int(part) for part in body.split(","))


def sigkeys(d: int, depth: int) -> str:
    """Space-separated rendering of :func:`enumerate_words`."""
    return " ".join(format_word(w) for w in enumerate_words(d, depth))


def word_index(word: Sequence[int], d: int) -> int:
    """Flat position of ``word`` in sigkeys order."""
    k = len(word)
    idx = sum(d**j for j in range(k))
    pos = 0
    for letter in word:
        if not 1 <= letter <= d:
            raise ValueError(f"letter {letter} outside alphabet 1..{d}")
        pos = pos * d + (letter - 1)
    return idx + pos


class TruncatedTensor:
    """An element of T^(N)(R^d) with dense coefficients in sigkeys order.

    Instances are immutable: the coefficient buffer is marked read-only.
    """

    __slots__ = ("d", "depth", "_coeffs", "_offsets")

    def __init__(self, d: int, depth: int, coefficients: Iterable[float] | np.ndarray):
        size = tensor_size(d, depth)
        arr = np.array(coefficients, dtype=np.float64).reshape(-1)
        if arr.size != size:
            raise DimensionError(
                f"expected {size} coefficients for d={d}, depth={depth}, got {arr.size}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor coefficients must be finite")
        arr.flags.writeable = False
        self.d = int(d)
        self.depth = int(depth)
        self._coeffs = arr
        self._offsets = level_offsets(d, depth)

    # construction helpers

    @classmethod
    def zero(cls, d: int, depth: int) -> "TruncatedTensor":
        return cls(d, depth, np.zeros(tensor_size(d, depth)))

    @classmethod
    def unit(cls, d: int, depth: int) -> "TruncatedTensor":
        c = np.zeros(tensor_size(d, depth))
        c[0] = 1.0
        return cls(d, depth, c)

    @classmethod
    def from_levels(cls, d: int, depth: int, levels: Sequence[np.ndarray]) -> "TruncatedTensor":
        """Build from per-level arrays; missing trailing levels are zero."""
        c = np.zeros(tensor_size(d, depth))
        offsets = level_offsets(d, depth)
        for k, lev in enumerate(levels[: depth + 1]):
            c[offsets[k] : offsets[k + 1]] = np.asarray(lev, dtype=np.float64).reshape(-1)
        return cls(d, depth, c)

    @classmethod
    def from_vector(cls, v: Sequence[float], depth: int, scalar: float = 0.0) -> "TruncatedTensor":
        """``scalar + v`` with ``v`` placed at level one."""
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        return cls.from_levels(v.size, depth, [np.array([scalar]), v])

    # access

    @property
    def coefficients(self) -> np.ndarray:
        return self._coeffs

    def level(self, k: int) -> np.ndarray:
        """Flat view of level ``k`` (the projection onto (R^d)^{⊗k})."""
        if not 0 <= k <= self.depth:
            raise IndexError(f"level {k} outside 0..{self.depth}")
        return self._coeffs[self._offsets[k] : self._offsets[k + 1]]

    def levels(self) -> list[np.ndarray]:
        return [self.level(k) for k in range(self.depth + 1)]

    def __getitem__(self, word: Sequence[int]) -> float:
        if len(word) > self.depth:
            raise IndexError(f"word of length {len(word)} exceeds depth {self.depth}")
        return float(self._coeffs[word_index(word, self.d)])

    def keys(self) -> list[Word]:
        return enumerate_words(self.d, self.depth)

    def __len__(self) -> int:
        return self._coeffs.size

    def __repr__(self) -> str:
        return f"TruncatedTensor(d={self.d}, depth={self.depth}, coefficients={self._coeffs!r})"

    # vector-space structure

    def _check(self, other: "TruncatedTensor") -> None:
        if not isinstance(other, TruncatedTensor):
            raise TypeError(f"expected TruncatedTensor, got {type(other).__name__}")
        if (self.d, self.depth) != (other.d, other.depth):
            raise DimensionError(
                f"mismatched algebras: (d={self.d}, N={self.depth}) vs (d={other.d}, N={other.depth})"
            )

    def __add__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        self._check(other)
        return TruncatedTensor(self.d, self.depth, self._coeffs + other._coeffs)

    def __sub__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        self._check(other)
        return TruncatedTensor(self.d, self.depth, self._coeffs - other._coeffs)

    def __neg__(self) -> "TruncatedTensor":
        return TruncatedTensor(self.d, self.depth, -self._coeffs)

    def __mul__(self, scalar: float) -> "TruncatedTensor":
        return TruncatedTensor(self.d, self.depth, self._coeffs * float(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        return tensor_mul(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedTensor):
            return NotImplemented
        return (self.d, self.depth) == (other.d, other.depth) and np.array_equal(
            self._coeffs, other._coeffs
        )

    def __hash__(self) -> int:
        return hash((self.d, self.depth, self._coeffs.tobytes()))

    def allclose(self, other: "TruncatedTensor", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self._coeffs, other._coeffs, rtol=rtol, atol=atol))


def _mul_levels(a: Sequence[np.ndarray], b: Sequence[np.ndarray], depth: int) -> list[np.ndarray]:
    out = []
    for n in range(depth + 1):
        acc = np.outer(a[0], b[n]).reshape(-1)
        for k in range(1, n + 1):
            acc = acc + np.outer(a[k], b[n - k]).reshape(-1)
        out.append(acc)
    return out


def tensor_mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Truncated tensor product; level n is sum_k a_k ⊗ b_{n-k}."""
    a._check(b)
    levels = _mul_levels(a.levels(), b.levels(), a.depth)
    return TruncatedTensor(a.d, a.depth, np.concatenate(levels))


def tensor_exp(a: TruncatedTensor) -> TruncatedTensor:
    """Exponential of a tensor with zero scalar part (finite series)."""
    if a.coefficients[0] != 0.0:
        raise DomainError("tensor_exp requires zero scalar part")
    # Horner: 1 + a(1 + a/2(1 + a/3(...)))
    d, depth = a.d, a.depth
    one = TruncatedTensor.unit(d, depth)
    acc = one
    for k in range(depth, 0, -1):
        acc = one + tensor_mul(a, acc) * (1.0 / k)
    return acc


def tensor_log(a: TruncatedTensor) -> TruncatedTensor:
    """Logarithm of a tensor with unit scalar part, in tensor coordinates."""
    if a.coefficients[0] != 1.0:
        raise DomainError("tensor_log requires scalar part equal to 1")
    d, depth = a.d, a.depth
    x = a - TruncatedTensor.unit(d, depth)
    if depth == 0:
        return TruncatedTensor.zero(d, depth)
    # Horner: x(1 - x(1/2 - x(1/3 - ...)))
    acc = TruncatedTensor.unit(d, depth) * (1.0 / depth)
    for k in range(depth - 1, 0, -1):
        acc = TruncatedTensor.unit(d, depth) * (1.0 / k) - tensor_mul(x, acc)
    return tensor_mul(x, acc)


def inner_product(a: TruncatedTensor, b: TruncatedTensor) -> float:
    a._check(b)
    return float(np.dot(a.coefficients, b.coefficients))


def shuffle(left: Sequence[int], right: Sequence[int]) -> Counter:
    """All order-preserving interleavings of two words, with multiplicity."""
    left, right = tuple(left), tuple(right)
    n = len(left) + len(right)
    terms: Counter = Counter()
    for positions in itertools.combinations(range(n), len(left)):
        word = [0] * n
        chosen = set(positions)
        li = iter(left)
        ri = iter(right)
        for i in range(n):
            word[i] = next(li) if i in chosen else next(ri)
        terms[tuple(word)] += 1
    return terms


def shuffle_count(left: Sequence[int], right: Sequence[int]) -> int:
    return math.comb(len(left) + len(right), len(left))
