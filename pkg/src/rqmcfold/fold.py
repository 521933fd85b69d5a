"""b-ary reflections and folded point sets.

A reflection of order ``k`` keeps the first ``k`` digits of a coordinate and
replaces every later digit ``a`` by ``b - 1 - a``, which reflects the point
about the center of its width-``b**-k`` interval.  Order ``-1`` is the
identity.  Folding a point set appends the reflections of all its points.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from rqmcfold.digitspace import (
    ContractError,
    DigitExpansion,
    DigitPoint,
    PointSet,
    PrecisionError,
)
from rqmcfold.netgen import NetSpec, UnsupportedError

IDENTITY = -1


class FoldScheme(str, Enum):
    NONE = "none"
    REFLECT = "reflect"
    BOX = "box"
    MONOMIAL = "monomial"
    ANTITHETIC = "antithetic"


@dataclass(frozen=True)
class ReflectionVector:
    kappa: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "kappa", tuple(int(k) for k in self.kappa))
        if any(k < IDENTITY for k in self.kappa):
            raise ValueError(f"reflection orders must be >= -1, got {self.kappa}")

    @property
    def positive(self) -> tuple[int, ...]:
        return tuple(max(k, 0) for k in self.kappa)

    @property
    def order(self) -> int:
        """|kappa+|, the log-volume of the interval reflected within."""
        return sum(self.positive)

    def __str__(self):
        return ",".join("-" if k == IDENTITY else str(k) for k in self.kappa)

    @classmethod
    def parse(cls, text: str) -> "ReflectionVector":
        return cls(tuple(IDENTITY if t.strip() in ("-", "") else int(t) for t in text.split(",")))


@dataclass(frozen=True)
class FoldPlan:
    """Ordered reflections applied as successive folds."""

    scheme: FoldScheme
    reflections: tuple[ReflectionVector, ...] = ()

    @property
    def multiplier(self) -> int:
        return 2 ** len(self.reflections)

    def apply(self, points: PointSet) -> PointSet:
        for r in self.reflections:
            points = fold_sequence(points, r)
        return points


def _flip_tail(digits: np.ndarray, kappa: Sequence[int], b: int) -> np.ndarray:
    """Reflect the coordinates of a (..., d, K) digit array."""
    K = digits.shape[-1]
    out = digits.copy()
    for j, k in enumerate(kappa):
        if k == IDENTITY:
            continue
        if k > K:
            raise PrecisionError(f"reflection order {k} exceeds precision {K}")
        out[..., j, k:] = (b - 1) - out[..., j, k:]
    return out


def reflect_coordinate(e: DigitExpansion, k: int) -> DigitExpansion:
    if k < IDENTITY:
        raise ValueError(f"reflection order must be >= -1, got {k}")
    if k == IDENTITY:
        return e
    if k > e.precision:
        raise PrecisionError(f"reflection order {k} exceeds precision {e.precision}")
    b = e.base
    return DigitExpansion(b, e.digits[:k] + tuple(b - 1 - a for a in e.digits[k:]))


def reflect_unit(k: int, b: int, K: int) -> DigitExpansion:
    """Image of x = 1 under the order-``k`` reflection, i.e. 1 - b**-k.

    Digit points never equal 1; this is the limiting convention for callers
    that start from real coordinates.
    """
    if k == IDENTITY:
        raise ValueError("1 is not representable; the identity has no digit image of 1")
    if k > K:
        raise PrecisionError(f"reflection order {k} exceeds precision {K}")
    return DigitExpansion(b, (b - 1,) * k + (0,) * (K - k))


def reflect(x: DigitPoint, kappa) -> DigitPoint:
    kappa = kappa.kappa if isinstance(kappa, ReflectionVector) else tuple(kappa)
    if len(kappa) != x.dim:
        raise ContractError(f"reflection vector has length {len(kappa)}, point has dim {x.dim}")
    return DigitPoint(x.base, _flip_tail(x.digits, kappa, x.base))


def reflect_points(P: PointSet, kappa) -> PointSet:
    kappa = kappa.kappa if isinstance(kappa, ReflectionVector) else tuple(kappa)
    if len(kappa) != P.dim:
        raise ContractError(f"reflection vector has length {len(kappa)}, points have dim {P.dim}")
    return PointSet(P.base, _flip_tail(P.digits, kappa, P.base))


def fold_sequence(P: PointSet, kappa) -> PointSet:
    """P followed by its reflections, in order."""
    if P.n == 0:
        raise ValueError("cannot fold an empty point set")
    return PointSet(P.base, np.concatenate([P.digits, reflect_points(P, kappa).digits]))


def split_evenly(total: int, d: int) -> tuple[int, ...]:
    """``total`` spread over ``d`` parts as evenly as possible, larger parts first."""
    if total < 0:
        raise ValueError(f"cannot split a negative total {total}")
    base, extra = divmod(total, d)
    return tuple(base + 1 if j < extra else base for j in range(d))


def balanced_rho(m: int, q: int, d: int) -> tuple[int, ...]:
    """Box-fold orders r_j with sum m - q; the first (m-q) mod d get one extra."""
    if m < q:
        raise ValueError(f"need m >= q, got m={m}, q={q}")
    return split_evenly(m - q, d)


def reflection_net(P: PointSet, m: int, q: int = 0) -> PointSet:
    """One fold within intervals of volume b**(q - m)."""
    if m - q < 0:
        raise ContractError(f"need m >= q, got m={m}, q={q}")
    kappa = split_evenly(m - q, P.dim)
    out = fold_sequence(P, kappa)
    spec = P.claim
    if isinstance(spec, NetSpec):
        out = out.with_claim(NetSpec(spec.base, spec.dim, spec.m, spec.q, 2 * spec.lam, relaxed=True))
    return out


def box_fold(P: PointSet, rho: Sequence[int]) -> PointSet:
    """All 2**d coordinate-subset reflections of every point.

    Folds are applied innermost on the last coordinate, so for d = 2 the
    output is F_(r1,-)(F_(-,r2)(P)).
    """
    rho = tuple(int(r) for r in rho)
    if len(rho) != P.dim:
        raise ContractError(f"rho has length {len(rho)}, points have dim {P.dim}")
    if any(r < 0 for r in rho):
        raise ValueError(f"box fold orders must be >= 0, got {rho}")
    out = P
    for j in reversed(range(P.dim)):
        kappa = [IDENTITY] * P.dim
        kappa[j] = rho[j]
        out = fold_sequence(out, kappa)
    return out


def monomial_net(P: PointSet, m: int) -> PointSet:
    """Cumulative folds by (0, m), (1, m-1), ..., (m, 0); size grows by 2**(m+1)."""
    if P.dim != 2:
        raise UnsupportedError(f"monomial nets are defined for d = 2, got d = {P.dim}")
    out = P
    for k in range(m + 1):
        out = fold_sequence(out, (k, m - k))
    return out


def make_fold_plan(scheme, d: int, m: int, q: int = 0, rho=None) -> FoldPlan:
    """Resolve a scheme name into explicit reflections.

    ``rho`` overrides the box-fold orders (``None`` or ``"auto"`` means the
    balanced split of m - q).
    """
    scheme = FoldScheme(scheme)
    if scheme is FoldScheme.NONE:
        return FoldPlan(scheme)
    if scheme is FoldScheme.ANTITHETIC:
        return FoldPlan(scheme, (ReflectionVector((0,) * d),))
    if scheme is FoldScheme.REFLECT:
        return FoldPlan(scheme, (ReflectionVector(split_evenly(m - q, d)),))
    if scheme is FoldScheme.BOX:
        r = balanced_rho(m, q, d) if rho in (None, "auto") else tuple(rho)
        if len(r) != d:
            raise ValueError(f"rho has length {len(r)}, expected {d}")
        refl = []
        for j in reversed(range(d)):
            kappa = [IDENTITY] * d
            kappa[j] = r[j]
            refl.append(ReflectionVector(kappa))
        return FoldPlan(scheme, tuple(refl))
    if d != 2:
        raise UnsupportedError("monomial folding needs d = 2")
    return FoldPlan(scheme, tuple(ReflectionVector((k, m - k)) for k in range(m + 1)))
