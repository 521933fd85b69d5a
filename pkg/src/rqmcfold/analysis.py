"""Verification of net properties and the scrambled-net variance theory.

Balance checks count points per elementary interval from digit prefixes, so
they are exact.  The variance of a scrambled-net estimate decomposes over
base-b Haar scales (u, kappa) as

    V = (1/n) * sum_{|u|>0} sum_kappa Gamma[u, kappa] * sigma2[u, kappa]

where the gain coefficients ``Gamma`` depend only on the unscrambled points
and ``sigma2`` only on the integrand.  Both factors are computed here for
integrands that are constant on a regular b-adic grid, where the sum is
finite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from rqmcfold.digitspace import ContractError, PointSet, PrecisionError, prefix_index
from rqmcfold.netgen import NetSpec, UnsupportedError


def compositions(total: int, d: int) -> Iterator[tuple[int, ...]]:
    """All d-tuples of nonnegative integers summing to ``total``."""
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, d - 1):
            yield (first,) + rest


def subsets(d: int, include_empty: bool = False) -> list[tuple[int, ...]]:
    start = 0 if include_empty else 1
    return [u for r in range(start, d + 1) for u in itertools.combinations(range(d), r)]


def subset_label(u: Sequence[int]) -> str:
    return "{" + ",".join(str(j + 1) for j in u) + "}"


# -- net balance ------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kappa: tuple[int, ...]
    tau: tuple[int, ...]
    observed: int
    expected: int
    cap: bool = False  # True for the finer-box "at most" check


@dataclass
class BalanceReport:
    spec: NetSpec
    violations: list[Violation] = field(default_factory=list)
    cap_violations: list[Violation] = field(default_factory=list)
    intervals_checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations and not self.cap_violations

    def rows(self) -> list[dict]:
        return [
            {
                "kappa": " ".join(map(str, v.kappa)),
                "tau": " ".join(map(str, v.tau)),
                "observed": v.observed,
                "expected": v.expected,
                "check": "cap" if v.cap else "exact",
            }
            for v in self.violations + self.cap_violations
        ]


def _cell_counts(P: PointSet, kappa: Sequence[int]) -> np.ndarray:
    b = P.base
    idx = np.zeros(P.n, dtype=np.int64)
    for j, k in enumerate(kappa):
        idx = idx * b**k + prefix_index(P.digits[:, j, :], k, b)
    return np.bincount(idx, minlength=b ** sum(kappa))


def _unravel(cell: int, kappa: Sequence[int], b: int) -> tuple[int, ...]:
    tau = []
    for k in reversed(kappa):
        cell, t = divmod(cell, b**k)
        tau.append(t)
    return tuple(reversed(tau))


def check_net(P: PointSet, spec: NetSpec) -> BalanceReport:
    """Exact check of the (lam, q, m, d)-net property claimed by ``spec``."""
    if P.n != spec.n:
        raise ContractError(f"point set has n={P.n}, spec needs n={spec.n}")
    if P.base != spec.base or P.dim != spec.dim:
        raise ContractError("point set base or dimension differs from the claimed net")
    depth = spec.m - spec.q
    finest = depth + (0 if spec.relaxed else 1)
    if finest > P.precision:
        raise PrecisionError(f"resolution {finest} exceeds precision {P.precision}")
    b = spec.base
    report = BalanceReport(spec)
    expected = spec.lam * b**spec.q
    for kappa in compositions(depth, spec.dim):
        counts = _cell_counts(P, kappa)
        report.intervals_checked += counts.size
        for cell in np.flatnonzero(counts != expected):
            report.violations.append(Violation(kappa, _unravel(int(cell), kappa, b), int(counts[cell]), expected))
    if not spec.relaxed:
        cap = b**spec.q
        for kappa in compositions(depth + 1, spec.dim):
            counts = _cell_counts(P, kappa)
            report.intervals_checked += counts.size
            for cell in np.flatnonzero(counts > cap):
                report.cap_violations.append(
                    Violation(kappa, _unravel(int(cell), kappa, b), int(counts[cell]), cap, cap=True)
                )
    return report


# -- star discrepancy -------------------------------------------------------


def star_discrepancy(P) -> float:
    """Exact star discrepancy for d <= 2.

    Accepts a :class:`PointSet` or an (n, d) array of reals in [0, 1].
    Every corner of the grid spanned by point coordinates (and 1) is scored
    with both closed and open counts.
    """
    x = P.values() if isinstance(P, PointSet) else np.atleast_2d(np.asarray(P, dtype=np.float64))
    n, d = x.shape
    if d > 2:
        raise UnsupportedError("star discrepancy is only implemented for d <= 2")
    if d == 1:
        s = np.sort(x[:, 0])
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - s), np.max(s - (i - 1) / n)))
    ux = np.unique(np.append(x[:, 0], 1.0))
    uy = np.unique(np.append(x[:, 1], 1.0))
    ix = np.searchsorted(ux, x[:, 0])
    iy = np.searchsorted(uy, x[:, 1])
    H = np.zeros((ux.size, uy.size), dtype=np.int64)
    np.add.at(H, (ix, iy), 1)
    closed = H.cumsum(0).cumsum(1)
    opened = np.zeros_like(closed)
    opened[1:, 1:] = closed[:-1, :-1]
    vol = np.outer(ux, uy)
    return float(max(np.max(closed / n - vol), np.max(vol - opened / n)))


# -- gain coefficients ------------------------------------------------------


def _pair_count(keys: list[np.ndarray]) -> int:
    """Number of ordered pairs (i, i') agreeing on every key column."""
    _, counts = np.unique(np.stack(keys, axis=1), axis=0, return_counts=True)
    return int(np.sum(counts.astype(np.int64) ** 2))


def gain_coefficient_exact(A: PointSet, u: Sequence[int], kappa: Sequence[int]) -> Fraction:
    """Gain coefficient Gamma[u, kappa] of the (unscrambled) points ``A``.

    The pairwise product over j in u of (b*[finer prefixes agree] - [prefixes
    agree]) is expanded over subsets v of u; each term is a count of ordered
    pairs sharing a key, which is a sum of squared group sizes.
    """
    u = tuple(u)
    kappa = tuple(int(k) for k in kappa)
    if len(u) != len(kappa) or not u:
        raise ValueError("u must be nonempty and kappa must have one entry per coordinate in u")
    b, n = A.base, A.n
    if max(kappa) + 1 > A.precision:
        raise PrecisionError(f"resolution {max(kappa) + 1} exceeds precision {A.precision}")
    coarse = [prefix_index(A.digits[:, j, :], k, b) for j, k in zip(u, kappa)]
    fine = [prefix_index(A.digits[:, j, :], k + 1, b) for j, k in zip(u, kappa)]
    total = 0
    for mask in itertools.product((0, 1), repeat=len(u)):
        keys = [fine[i] if bit else coarse[i] for i, bit in enumerate(mask)]
        nv = sum(mask)
        total += (-1) ** (len(u) - nv) * b**nv * _pair_count(keys)
    return Fraction(total, n * (b - 1) ** len(u))


def gain_coefficients(A: PointSet, u: Sequence[int], kappa: Sequence[int]) -> float:
    return float(gain_coefficient_exact(A, u, kappa))


def kappa_vectors(size: int, max_order: int, max_each: int | None = None) -> Iterator[tuple[int, ...]]:
    """Nonnegative ``size``-tuples with sum <= max_order (and entries <= max_each)."""
    for total in range(max_order + 1):
        for kappa in compositions(total, size):
            if max_each is None or max(kappa) <= max_each:
                yield kappa


@dataclass
class GainTable:
    base: int
    n: int
    entries: dict[tuple[tuple[int, ...], tuple[int, ...]], float] = field(default_factory=dict)
    label: str = ""

    def rows(self) -> list[dict]:
        return [
            {"u": subset_label(u), "kappa": " ".join(map(str, k)), "gamma": g}
            for (u, k), g in self.entries.items()
        ]


def gain_table(A: PointSet, max_order: int, label: str = "") -> GainTable:
    """Gamma[u, kappa] for every nonempty u and |kappa| <= max_order."""
    table = GainTable(A.base, A.n, label=label)
    for u in subsets(A.dim):
        for kappa in kappa_vectors(len(u), max_order, A.precision - 1):
            table.entries[(u, kappa)] = gain_coefficients(A, u, kappa)
    return table


# -- grid functions and the Haar multiresolution ----------------------------


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A function constant on every cell of the b**-resolution grid in [0,1)^d."""

    base: int
    resolution: int
    values: np.ndarray  # shape (b**resolution,) * d

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64)
        side = self.base**self.resolution
        if any(s != side for s in arr.shape):
            raise ValueError(f"grid values must have shape ({side},) * d, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @classmethod
    def random(cls, base: int, dim: int, resolution: int, seed: int) -> "GridFunction":
        rng = np.random.default_rng(seed)
        side = base**resolution
        return cls(base, resolution, rng.standard_normal((side,) * dim))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        cells = np.floor(np.asarray(x) * self.base**self.resolution).astype(np.int64)
        cells = np.clip(cells, 0, self.base**self.resolution - 1)
        return self.values[tuple(cells[:, j] for j in range(self.dim))]

    def on_points(self, P: PointSet) -> np.ndarray:
        """Exact cell lookup from digit prefixes."""
        cells = [prefix_index(P.digits[:, j, :], self.resolution, self.base) for j in range(self.dim)]
        return self.values[tuple(cells)]

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    @property
    def variance(self) -> float:
        return float(np.mean((self.values - self.values.mean()) ** 2))


def _wavelet_operator(k: int, b: int, R: int) -> np.ndarray:
    """Integrals of psi_{k,t,c} over each grid cell; shape (b**k, b, b**R)."""
    s = np.arange(b**R)
    narrow = s // b ** (R - k - 1)  # index at level k+1
    wide = s // b ** (R - k)  # index at level k
    t = np.arange(b**k)[:, None, None]
    c = np.arange(b)[None, :, None]
    psi = b ** ((k + 1) / 2) * (narrow[None, None, :] == b * t + c) - b ** ((k - 1) / 2) * (wide[None, None, :] == t)
    return psi / b**R


def wavelet_coefficients(f: GridFunction, u: Sequence[int], kappa: Sequence[int]) -> np.ndarray:
    """<f, psi_{u,kappa,tau,gamma}> with axes (t_j, c_j for j in u)."""
    b, R = f.base, f.resolution
    levels = dict(zip(u, kappa))
    C = f.values
    for j in range(f.dim):
        if j in levels:
            op = _wavelet_operator(levels[j], b, R)
        else:
            op = np.full(b**R, 1.0 / b**R)
        C = np.tensordot(C, op, axes=([0], [op.ndim - 1]))
    return C


def wavelet_sigma(f: GridFunction, u: Sequence[int], kappa: Sequence[int]) -> float:
    """sigma2[u, kappa]: squared norm of the scale-(u, kappa) Haar component."""
    u = tuple(u)
    kappa = tuple(int(k) for k in kappa)
    if not u:
        return 0.0
    if max(kappa) + 1 > f.resolution:
        return 0.0
    b = f.base
    C = wavelet_coefficients(f, u, kappa)
    # Gram matrix of the b mother wavelets: 1[c = c'] - 1/b
    G = np.eye(b) - 1.0 / b
    D = C
    for i in range(len(u)):
        axis = 2 * i + 1
        D = np.moveaxis(np.tensordot(D, G, axes=([axis], [0])), -1, axis)
    return float(np.sum(C * D))


@dataclass
class MultiresTable:
    base: int
    resolution: int
    entries: dict[tuple[tuple[int, ...], tuple[int, ...]], float]
    variance: float

    @property
    def total(self) -> float:
        return float(sum(self.entries.values()))


def multires_table(f: GridFunction) -> MultiresTable:
    entries = {}
    for u in subsets(f.dim):
        for kappa in itertools.product(range(f.resolution), repeat=len(u)):
            entries[(u, kappa)] = wavelet_sigma(f, u, kappa)
    return MultiresTable(f.base, f.resolution, entries, f.variance)


def predicted_variance(f: GridFunction, A: PointSet) -> float:
    """Variance of the scrambled-net estimate of the mean of ``f`` over ``A``.

    Exact for nested uniform, random linear and I-binomial scrambles of the
    unscrambled points ``A``.
    """
    if A.base != f.base or A.dim != f.dim:
        raise ContractError("grid function and point set disagree on base or dimension")
    total = 0.0
    for (u, kappa), s2 in multires_table(f).entries.items():
        if s2 != 0.0:
            total += gain_coefficients(A, u, kappa) * s2
    return total / A.n


# -- numeric ANOVA ----------------------------------------------------------


@dataclass
class AnovaTable:
    mean: float
    variance: float
    sigma2: dict[tuple[int, ...], float]

    def index(self, u: Sequence[int]) -> float:
        return self.sigma2[tuple(u)] / self.variance

    def rows(self) -> list[dict]:
        return [
            {"u": subset_label(u), "sigma2": s, "index": s / self.variance}
            for u, s in self.sigma2.items()
        ]


def _midpoint_anova(f: Callable, d: int, R: int) -> tuple[float, float, dict]:
    x = (np.arange(R) + 0.5) / R
    grids = np.meshgrid(*([x] * d), indexing="ij")
    vals = np.asarray(f(np.stack([g.ravel() for g in grids], axis=1)), dtype=np.float64).reshape((R,) * d)
    mean = float(vals.mean())
    effects: dict[tuple[int, ...], np.ndarray] = {}
    sigma2 = {}
    for u in subsets(d):
        other = tuple(j for j in range(d) if j not in u)
        eff = vals.mean(axis=other, keepdims=True) - mean
        for v, fv in effects.items():
            if set(v) < set(u):
                eff = eff - fv
        effects[u] = eff
        sigma2[u] = float(np.mean(eff**2))
    variance = float(np.mean(vals**2)) - mean**2
    return mean, variance, sigma2


def anova_sigmas(f: Callable, d: int, resolution: int | None = None, extrapolate: bool = True) -> AnovaTable:
    """ANOVA mean and variance components by tensor midpoint quadrature.

    With ``extrapolate`` the midpoint results at ``resolution`` and half of it
    are combined by Richardson extrapolation, cancelling the h**2 error term.
    """
    if d > 3:
        raise UnsupportedError("numeric ANOVA supports d <= 3")
    if resolution is None:
        resolution = {1: 2**16, 2: 2048, 3: 128}[d]
    mean, var, s2 = _midpoint_anova(f, d, resolution)
    if extrapolate:
        if resolution % 2:
            raise ValueError("extrapolation needs an even resolution")
        m2, v2, t2 = _midpoint_anova(f, d, resolution // 2)
        mean = (4 * mean - m2) / 3
        var = (4 * var - v2) / 3
        s2 = {u: (4 * s2[u] - t2[u]) / 3 for u in s2}
    return AnovaTable(mean, var, s2)


def gain_bound(b: int, d: int, m: int, q: int = 0, lam: int = 1) -> float:
    """Upper bound on every gain coefficient of a (lam, q, m, d)-net.

    Needs lam < b.  A relaxed net with lam = b**r is a (q + r, m + r)-net;
    call again with those parameters.
    """
    if not 1 <= lam < b:
        raise ValueError(f"no gain bound for lam={lam} in base {b}; need 1 <= lam < b")
    if q == 0 and lam == 1:
        return (b / (b - 1)) ** min(d - 1, m)
    if q == 0:
        return math.e + 1
    return b**q * (b / (b - 1)) ** (d - 1)
