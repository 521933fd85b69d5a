"""Base-b digit arithmetic, point sets and elementary-interval geometry.

Every point is stored as a fixed number ``K`` of base-``b`` digits per
coordinate, most significant digit first.  A :class:`PointSet` keeps an
``(n, d, K)`` array of digits so that interval membership can be decided
exactly by comparing digit prefixes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DomainError(ValueError):
    """A real value outside [0, 1) was handed to the digit encoder."""


class PrecisionError(ValueError):
    """A resolution exceeds the number of stored digits."""


class ContractError(ValueError):
    """Inputs disagree on base, precision or dimension."""


def default_precision(b: int) -> int:
    """Digits needed to hold a double in base ``b``: ceil(53 / log2 b)."""
    if b < 2:
        raise ValueError(f"base must be >= 2, got {b}")
    return math.ceil(53 / math.log2(b))


def is_prime(b: int) -> bool:
    if b < 2:
        return False
    return all(b % p for p in range(2, math.isqrt(b) + 1))


@dataclass(frozen=True)
class DigitExpansion:
    base: int
    digits: tuple[int, ...]

    def __post_init__(self):
        if self.base < 2:
            raise ValueError(f"base must be >= 2, got {self.base}")
        if any(not 0 <= a < self.base for a in self.digits):
            raise ValueError(f"digits must lie in 0..{self.base - 1}: {self.digits}")

    @property
    def precision(self) -> int:
        return len(self.digits)

    @property
    def value(self) -> float:
        return from_digits(self)


def to_digits(x: float, b: int, K: int) -> DigitExpansion:
    """First ``K`` base-``b`` digits of ``x`` in [0, 1).

    If ``x`` is the double nearest some K-digit base-b rational, that
    rational's digits are returned, so ``1/3`` in base 3 reads ``0.1000``.
    Otherwise the exact value of the double is truncated.  Either way the
    representation ending in zeros is the one returned.
    """
    if b < 2 or K < 1:
        raise ValueError(f"need b >= 2 and K >= 1, got b={b}, K={K}")
    if not 0.0 <= x < 1.0:
        raise DomainError(f"x must lie in [0, 1), got {x!r}")
    scale = b**K
    exact = Fraction(x) * scale
    near = round(exact)
    scaled = near if near < scale and _to_float(near, scale) == x else math.floor(exact)
    digits = []
    for _ in range(K):
        scaled, r = divmod(scaled, b)
        digits.append(r)
    return DigitExpansion(b, tuple(reversed(digits)))


def _to_float(t: int, scale: int) -> float:
    # correctly rounded, kept below one
    return min(t / scale, _BELOW_ONE)


_BELOW_ONE = math.nextafter(1.0, 0.0)


def from_digits(e: DigitExpansion) -> float:
    t = 0
    for a in e.digits:
        t = t * e.base + a
    return _to_float(t, e.base ** len(e.digits))


def digits_to_reals(digits: np.ndarray, b: int) -> np.ndarray:
    """Vectorized :func:`from_digits` over the last axis of ``digits``.

    Digits are packed into blocks whose integer value is exact in a double,
    then combined by Horner's rule from the least significant block.  Values
    that round up to 1.0 (possible for odd ``b`` at full precision) are
    clamped to the largest double below one.
    """
    digits = np.asarray(digits)
    K = digits.shape[-1]
    g = max(1, int(53 // math.log2(b)))
    while b**g > 2**53:
        g -= 1
    v = np.zeros(digits.shape[:-1], dtype=np.float64)
    for start in reversed(range(0, K, g)):
        block = digits[..., start:start + g]
        width = block.shape[-1]
        powers = float(b) ** np.arange(width - 1, -1, -1)
        v = (v + block.astype(np.float64) @ powers) / float(b) ** width
    return np.minimum(v, np.nextafter(1.0, 0.0))


def reals_to_digits(x: np.ndarray, b: int, K: int) -> np.ndarray:
    """Digits of every entry of ``x``; output shape is ``x.shape + (K,)``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any((x < 0.0) | (x >= 1.0)):
        raise DomainError("all values must lie in [0, 1)")
    flat = [to_digits(float(v), b, K).digits for v in x.ravel()]
    return np.array(flat, dtype=np.uint8).reshape(x.shape + (K,))


def prefix_index(digits: np.ndarray, k: int, b: int) -> np.ndarray:
    """Integer formed by the first ``k`` digits along the last axis."""
    if k > digits.shape[-1]:
        raise PrecisionError(f"resolution {k} exceeds precision {digits.shape[-1]}")
    out = np.zeros(digits.shape[:-1], dtype=np.int64)
    for i in range(k):
        out *= b
        out += digits[..., i]
    return out


@dataclass(frozen=True, eq=False)
class DigitPoint:
    base: int
    digits: np.ndarray  # (d, K)

    def __post_init__(self):
        arr = np.array(self.digits, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError("DigitPoint digits must have shape (d, K)")
        if np.any(arr >= self.base):
            raise ValueError(f"digits must lie in 0..{self.base - 1}")
        arr.setflags(write=False)
        object.__setattr__(self, "digits", arr)

    @classmethod
    def from_reals(cls, x: Sequence[float], b: int, K: int) -> "DigitPoint":
        return cls(b, np.array([to_digits(float(v), b, K).digits for v in x]))

    @property
    def dim(self) -> int:
        return self.digits.shape[0]

    @property
    def precision(self) -> int:
        return self.digits.shape[1]

    @property
    def value(self) -> np.ndarray:
        return digits_to_reals(self.digits, self.base)

    def coordinate(self, j: int) -> DigitExpansion:
        return DigitExpansion(self.base, tuple(int(a) for a in self.digits[j]))

    def __eq__(self, other):
        if not isinstance(other, DigitPoint):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.digits, other.digits)

    def __hash__(self):
        return hash((self.base, self.digits.tobytes()))


@dataclass(frozen=True)
class ElementaryInterval:
    """The box prod_j [t_j b^-k_j, (t_j + 1) b^-k_j).

    Coordinates outside ``active`` (when given) span all of [0, 1).
    """

    base: int
    kappa: tuple[int, ...]
    tau: tuple[int, ...]
    active: frozenset[int] | None = None

    def __post_init__(self):
        if len(self.kappa) != len(self.tau):
            raise ValueError("kappa and tau must have equal length")
        for k, t in zip(self.kappa, self.tau):
            if k < 0 or not 0 <= t < self.base**k:
                raise ValueError(f"invalid (k, t) = ({k}, {t})")

    def _is_active(self, j: int) -> bool:
        return self.active is None or j in self.active

    @property
    def volume_exponent(self) -> int:
        return sum(k for j, k in enumerate(self.kappa) if self._is_active(j))

    @property
    def volume(self) -> Fraction:
        return Fraction(1, self.base**self.volume_exponent)

    def contains(self, x: DigitPoint) -> bool:
        for j, (k, t) in enumerate(zip(self.kappa, self.tau)):
            if self._is_active(j) and int(prefix_index(x.digits[j], k, self.base)) != t:
                return False
        return True

    def center(self, K: int) -> DigitPoint:
        kappa = [k if self._is_active(j) else 0 for j, k in enumerate(self.kappa)]
        tau = [t if self._is_active(j) else 0 for j, t in enumerate(self.tau)]
        return interval_center(kappa, tau, self.base, K)


def interval_index(x: DigitPoint, kappa: Sequence[int]) -> tuple[int, ...]:
    """Translation vector tau = floor(b^kappa x) of the interval holding ``x``."""
    if len(kappa) != x.dim:
        raise ContractError(f"kappa has length {len(kappa)}, point has dim {x.dim}")
    return tuple(int(prefix_index(x.digits[j], k, x.base)) for j, k in enumerate(kappa))


def _center_digits(k: int, t: int, b: int, K: int) -> list[int]:
    if k > K:
        raise PrecisionError(f"resolution {k} exceeds precision {K}")
    # (t + 1/2) b^-k: the digits of t, then the expansion of 1/2.
    head = []
    for _ in range(k):
        t, r = divmod(t, b)
        head.append(r)
    head.reverse()
    if b % 2 == 0:
        tail = [b // 2] + [0] * (K - k - 1)
    else:
        tail = [(b - 1) // 2] * (K - k)
    return (head + tail)[:K]


def interval_center(kappa: Sequence[int], tau: Sequence[int], b: int, K: int | None = None) -> DigitPoint:
    """Center of the elementary interval (kappa, tau), truncated to ``K`` digits."""
    K = default_precision(b) if K is None else K
    rows = [_center_digits(k, t, b, K) for k, t in zip(kappa, tau)]
    return DigitPoint(b, np.array(rows, dtype=np.uint8))


@dataclass(frozen=True, eq=False)
class PointSet:
    """An ordered collection of ``n`` points with exact base-``b`` digits.

    ``claim`` optionally carries the net property the generator asserts;
    :func:`rqmcfold.analysis.check_net` verifies it.
    """

    base: int
    digits: np.ndarray  # (n, d, K) uint8
    claim: object | None = field(default=None)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.digits, dtype=np.uint8)
        if arr.ndim != 3:
            raise ValueError(f"digits must have shape (n, d, K), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "digits", arr)

    @property
    def n(self) -> int:
        return self.digits.shape[0]

    @property
    def dim(self) -> int:
        return self.digits.shape[1]

    @property
    def precision(self) -> int:
        return self.digits.shape[2]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> DigitPoint:
        return DigitPoint(self.base, self.digits[i])

    def __iter__(self):
        return (self[i] for i in range(self.n))

    def values(self) -> np.ndarray:
        """Real coordinates, shape (n, d)."""
        return digits_to_reals(self.digits, self.base)

    def with_claim(self, claim) -> "PointSet":
        return PointSet(self.base, self.digits, claim)

    def same_points(self, other: "PointSet") -> bool:
        """Multiset equality, ignoring order."""
        if (self.base, self.dim, self.precision, self.n) != (other.base, other.dim, other.precision, other.n):
            return False
        a = np.sort(self.digits.reshape(self.n, -1).view(np.dtype((np.void, self.dim * self.precision))).ravel())
        c = np.sort(other.digits.reshape(other.n, -1).view(np.dtype((np.void, other.dim * other.precision))).ravel())
        return bool(np.array_equal(a, c))

    @classmethod
    def from_points(cls, points: Iterable[DigitPoint]) -> "PointSet":
        points = list(points)
        if not points:
            raise ValueError("cannot build an empty PointSet from points")
        b = points[0].base
        if any(p.base != b for p in points):
            raise ContractError("points disagree on base")
        return cls(b, np.stack([p.digits for p in points]))

    @classmethod
    def from_reals(cls, x: np.ndarray, b: int, K: int | None = None) -> "PointSet":
        K = default_precision(b) if K is None else K
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return cls(b, reals_to_digits(x, b, K))

    @classmethod
    def concat(cls, sets: Sequence["PointSet"]) -> "PointSet":
        first = sets[0]
        for s in sets[1:]:
            if (s.base, s.dim, s.precision) != (first.base, first.dim, first.precision):
                raise ContractError("point sets disagree on base, dimension or precision")
        return cls(first.base, np.concatenate([s.digits for s in sets], axis=0))


def check_compatible(a: PointSet, b: int, K: int, d: int) -> None:
    if (a.base, a.precision, a.dim) != (b, K, d):
        raise ContractError(
            f"point set has (base, precision, dim) = {(a.base, a.precision, a.dim)}, expected {(b, K, d)}"
        )


# -- point-set text format -------------------------------------------------

_DIGIT_CHARS = "0123456789abcdefghijklmnopqrstuvwxyz"


class PointSetFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def format_point_set(points: PointSet) -> str:
    b, n, d, K = points.base, points.n, points.dim, points.precision
    if b > len(_DIGIT_CHARS):
        raise ValueError(f"text format supports bases up to {len(_DIGIT_CHARS)}")
    lines = [f"base={b} dim={d} prec={K} n={n}"]
    table = np.array(list(_DIGIT_CHARS[:b]))
    chars = table[points.digits]
    for i in range(n):
        lines.append(" ".join("".join(chars[i, j]) for j in range(d)))
    return "\n".join(lines) + "\n"


def parse_point_set(text: str) -> PointSet:
    lines = text.splitlines()
    if not lines:
        raise PointSetFormatError("empty file", 1)
    header = {}
    for tok in lines[0].split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise PointSetFormatError(f"malformed header token {tok!r}", 1)
        try:
            header[key] = int(val)
        except ValueError:
            raise PointSetFormatError(f"non-integer header value {tok!r}", 1) from None
    missing = {"base", "dim", "prec", "n"} - header.keys()
    if missing:
        raise PointSetFormatError(f"header missing {sorted(missing)}", 1)
    b, d, K, n = header["base"], header["dim"], header["prec"], header["n"]
    if b < 2 or b > len(_DIGIT_CHARS) or d < 1 or K < 1 or n < 0:
        raise PointSetFormatError("header values out of range", 1)
    body = [(i + 2, ln) for i, ln in enumerate(lines[1:]) if ln.strip()]
    if len(body) != n:
        raise PointSetFormatError(f"header declares n={n} points, found {len(body)}", len(lines))
    lookup = {c: v for v, c in enumerate(_DIGIT_CHARS[:b])}
    digits = np.zeros((n, d, K), dtype=np.uint8)
    for i, (lineno, ln) in enumerate(body):
        coords = ln.split()
        if len(coords) != d:
            raise PointSetFormatError(f"expected {d} coordinates, found {len(coords)}", lineno)
        for j, word in enumerate(coords):
            if len(word) != K:
                raise PointSetFormatError(f"coordinate {j + 1} has {len(word)} digits, expected {K}", lineno)
            try:
                digits[i, j] = [lookup[c] for c in word]
            except KeyError as exc:
                raise PointSetFormatError(f"invalid base-{b} digit {exc.args[0]!r}", lineno) from None
    return PointSet(b, digits)


def write_point_set(points: PointSet, path: str | Path) -> None:
    Path(path).write_text(format_point_set(points))


def read_point_set(path: str | Path) -> PointSet:
    return parse_point_set(Path(path).read_text())
