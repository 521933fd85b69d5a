"""Digit scrambles for digital nets in prime base b.

Four randomizations are provided.  The three matrix kinds compute

    x_(k) = C_k + sum_{j <= k} M_kj a_(j)   (mod b)

for a lower-triangular invertible ``M`` whose structure depends on the kind;
nested uniform scrambling permutes digit ``k`` with a permutation chosen by
the first ``k - 1`` digits.  Coordinates are randomized independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from rqmcfold.digitspace import ContractError, DigitPoint, PointSet, default_precision, is_prime
from rqmcfold.keyed import keyed_hash, keyed_integers
from rqmcfold.netgen import UnsupportedError


class ScrambleKind(str, Enum):
    NESTED_UNIFORM = "nested_uniform"
    RANDOM_LINEAR = "random_linear"
    IBINOMIAL = "ibinomial"
    ASM = "asm"

    @classmethod
    def parse(cls, name: str) -> "ScrambleKind":
        key = name.lower().replace("-", "").replace("_", "")
        for kind in cls:
            if kind.value.replace("_", "") == key:
                return kind
        aliases = {"nested": cls.NESTED_UNIFORM, "linear": cls.RANDOM_LINEAR,
                   "randomlinear": cls.RANDOM_LINEAR, "matousek": cls.RANDOM_LINEAR}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown scramble kind {name!r}")


# key roles
_H, _G, _C, _PERM = 1, 2, 3, 4


@dataclass(frozen=True, eq=False)
class ScrambleInstance:
    """A reusable randomization; a pure function of (kind, base, precision, dim, seed).

    For matrix kinds ``matrices`` has shape (d, K, K) and ``shifts`` shape
    (d, K).  Nested uniform scrambles keep no state.
    """

    kind: ScrambleKind
    base: int
    precision: int
    dim: int
    seed: int
    matrices: np.ndarray | None = None
    shifts: np.ndarray | None = None

    def __post_init__(self):
        for name in ("matrices", "shifts"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=np.int64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.kind is not ScrambleKind.NESTED_UNIFORM:
            M = self.matrices
            if M is None or M.shape != (self.dim, self.precision, self.precision):
                raise ValueError("matrix scrambles need matrices of shape (d, K, K)")
            if np.any(np.triu(M, 1)) or np.any(np.diagonal(M, axis1=1, axis2=2) % self.base == 0):
                raise ValueError("scramble matrices must be lower triangular with nonzero diagonal")
            if self.shifts is None or self.shifts.shape != (self.dim, self.precision):
                raise ValueError("matrix scrambles need shifts of shape (d, K)")

    def __call__(self, points):
        return apply_scramble(self, points)


def _random_linear(b, K, key):
    h = 1 + keyed_integers(b - 1, _H, np.arange(K), start=key)
    rows, cols = np.tril_indices(K, -1)
    M = np.diag(h)
    M[rows, cols] = keyed_integers(b, _G, rows * K + cols, start=key)
    return M


def _ibinomial(b, K, key):
    h = 1 + int(keyed_integers(b - 1, _H, 0, start=key))
    g = keyed_integers(b, _G, np.arange(K), start=key)  # g[l] fills subdiagonal offset l
    k, l = np.indices((K, K))
    M = np.where(k > l, g[np.clip(k - l, 0, K - 1)], 0)
    M[np.diag_indices(K)] = h
    return M


def _asm(b, K, key):
    h = 1 + keyed_integers(b - 1, _H, np.arange(K), start=key)
    k, l = np.indices((K, K))
    return np.where(k >= l, h[l], 0)


_BUILDERS = {
    ScrambleKind.RANDOM_LINEAR: _random_linear,
    ScrambleKind.IBINOMIAL: _ibinomial,
    ScrambleKind.ASM: _asm,
}


def make_scramble(kind, b: int, K: int | None, d: int, seed: int) -> ScrambleInstance:
    """Draw a scramble of the given kind, deterministically from ``seed``."""
    kind = ScrambleKind.parse(kind) if isinstance(kind, str) else ScrambleKind(kind)
    if not is_prime(b):
        raise UnsupportedError(f"scrambles need a prime base, got {b}")
    K = default_precision(b) if K is None else K
    if kind is ScrambleKind.NESTED_UNIFORM:
        return ScrambleInstance(kind, b, K, d, seed)
    mats, shifts = [], []
    for j in range(d):
        key = keyed_hash(seed, j)
        mats.append(_BUILDERS[kind](b, K, key))
        shifts.append(keyed_integers(b, _C, np.arange(K), start=key))
    return ScrambleInstance(kind, b, K, d, seed, np.stack(mats), np.stack(shifts))


def _nested_uniform(digits: np.ndarray, b: int, seed: int, j: int) -> np.ndarray:
    n, K = digits.shape
    out = np.empty_like(digits)
    rows = np.arange(n)
    prefix = np.zeros(n, dtype=np.uint64)
    key = keyed_hash(seed, j, _PERM)
    for k in range(K):
        # Fisher-Yates shuffle of 0..b-1 keyed by (level, prefix, step)
        node = keyed_hash(k, prefix, start=key)
        perm = np.tile(np.arange(b, dtype=np.uint8), (n, 1))
        for i in range(b - 1, 0, -1):
            r = keyed_integers(i + 1, i, start=node)
            vi = perm[rows, i].copy()
            perm[rows, i] = perm[rows, r]
            perm[rows, r] = vi
        a = digits[:, k]
        out[:, k] = perm[rows, a]
        with np.errstate(over="ignore"):
            prefix = prefix * np.uint64(b) + a.astype(np.uint64)
    return out


def _scramble_digits(s: ScrambleInstance, digits: np.ndarray) -> np.ndarray:
    n, d, K = digits.shape
    b = s.base
    if s.kind is ScrambleKind.NESTED_UNIFORM:
        return np.stack([_nested_uniform(digits[:, j, :], b, s.seed, j) for j in range(d)], axis=1)
    out = np.empty_like(digits)
    for j in range(d):
        # float matmul is exact here: entries stay below K*(b-1)**2 + b < 2**53
        y = digits[:, j, :].astype(np.float64) @ s.matrices[j].T.astype(np.float64)
        y += s.shifts[j]
        out[:, j, :] = y - b * np.floor(y / b)
    return out


def apply_scramble(s: ScrambleInstance, points):
    """Scramble a :class:`PointSet` or a single :class:`DigitPoint`."""
    if isinstance(points, DigitPoint):
        return DigitPoint(s.base, apply_scramble(s, PointSet(points.base, points.digits[None])).digits[0])
    if (points.base, points.precision, points.dim) != (s.base, s.precision, s.dim):
        raise ContractError(
            f"scramble expects (base, precision, dim) = {(s.base, s.precision, s.dim)}, "
            f"got {(points.base, points.precision, points.dim)}"
        )
    return PointSet(s.base, _scramble_digits(s, points.digits), claim=points.claim)
