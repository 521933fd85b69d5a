"""Faure digital nets and sequences in prime base b."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from rqmcfold.digitspace import DigitPoint, PointSet, default_precision, is_prime


class UnsupportedError(ValueError):
    """Parameters outside what the construction supports."""


class IndexOverflowError(ValueError):
    pass


@dataclass(frozen=True)
class NetSpec:
    """Claimed (lambda, q, m, d)-net property in base ``base``.

    With ``relaxed`` false, Definition-style restrictions apply: 1 <= lam < base
    and boxes one level finer may hold at most base**q points.
    """

    base: int
    dim: int
    m: int
    q: int = 0
    lam: int = 1
    relaxed: bool = False

    def __post_init__(self):
        if self.base < 2:
            raise ValueError(f"base must be >= 2, got {self.base}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not self.m >= self.q >= 0:
            raise ValueError(f"need m >= q >= 0, got m={self.m}, q={self.q}")
        if self.lam < 1:
            raise ValueError(f"lam must be >= 1, got {self.lam}")
        if not self.relaxed and self.lam >= self.base:
            raise ValueError(f"lam={self.lam} >= base={self.base} requires relaxed=True")

    @property
    def n(self) -> int:
        return self.lam * self.base**self.m


@dataclass(frozen=True, eq=False)
class GeneratorMatrixSet:
    base: int
    matrices: np.ndarray  # (d, K, K)

    def __post_init__(self):
        arr = np.array(self.matrices, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "matrices", arr)

    @property
    def dim(self) -> int:
        return self.matrices.shape[0]

    @property
    def precision(self) -> int:
        return self.matrices.shape[1]


def pascal_matrix(b: int, K: int) -> np.ndarray:
    """Upper-triangular P[r, c] = binom(c, r) mod b."""
    P = np.zeros((K, K), dtype=np.int64)
    for c in range(K):
        for r in range(c + 1):
            P[r, c] = comb(c, r) % b
    return P


def faure_matrices(b: int, d: int, K: int | None = None) -> GeneratorMatrixSet:
    """Generator matrices C^(j) = P^(j-1) mod b for j = 1..d."""
    if not is_prime(b):
        raise UnsupportedError(f"Faure nets need a prime base, got {b}")
    if not 1 <= d <= b:
        raise UnsupportedError(f"Faure nets need 1 <= d <= b, got d={d}, b={b}")
    K = default_precision(b) if K is None else K
    P = pascal_matrix(b, K)
    mats = [np.eye(K, dtype=np.int64)]
    for _ in range(1, d):
        mats.append(mats[-1] @ P % b)
    return GeneratorMatrixSet(b, np.stack(mats))


def _index_digits(idx: np.ndarray, b: int, K: int) -> np.ndarray:
    # least significant digit first
    out = np.zeros((idx.size, K), dtype=np.int64)
    rem = idx.astype(np.int64).copy()
    for k in range(K):
        out[:, k] = rem % b
        rem //= b
    return out


def sequence_points(indices: np.ndarray, G: GeneratorMatrixSet) -> np.ndarray:
    """Digit array (len(indices), d, K) of the digital sequence at ``indices``."""
    b, K = G.base, G.precision
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or int(indices.max()) >= b**K):
        raise IndexOverflowError(f"indices must lie in [0, {b}**{K})")
    a = _index_digits(indices, b, K).astype(np.float64)
    # entries stay below K*(b-1)**2, well inside exact float range
    y = np.einsum("dkc,nc->ndk", G.matrices.astype(np.float64), a)
    return np.mod(y, b).astype(np.uint8)


def sequence_point(i: int, G: GeneratorMatrixSet) -> DigitPoint:
    if i < 0 or i >= G.base**G.precision:
        raise IndexOverflowError(f"index {i} outside [0, {G.base}**{G.precision})")
    return DigitPoint(G.base, sequence_points(np.array([i]), G)[0])


def generate_net(spec: NetSpec, G: GeneratorMatrixSet | None = None, K: int | None = None) -> PointSet:
    """First ``spec.n`` points of the Faure sequence, tagged with ``spec`` as a claim."""
    if G is None:
        G = faure_matrices(spec.base, spec.dim, K)
    if G.base != spec.base or G.dim != spec.dim:
        raise ValueError("generator matrices do not match the net spec")
    if spec.n > G.base**G.precision:
        raise IndexOverflowError(f"n={spec.n} exceeds {G.base}**{G.precision}")
    return PointSet(spec.base, sequence_points(np.arange(spec.n), G), claim=spec)
