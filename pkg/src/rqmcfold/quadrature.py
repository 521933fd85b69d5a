"""Estimators, integrands and replicated RMSE experiments."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from rqmcfold.digitspace import ContractError, PointSet, default_precision
from rqmcfold.fold import FoldScheme, make_fold_plan
from rqmcfold.keyed import derive_seed, keyed_integers
from rqmcfold.netgen import NetSpec, faure_matrices, generate_net
from rqmcfold.scramble import ScrambleKind, apply_scramble, make_scramble

E = math.e


@dataclass(frozen=True)
class Integrand:
    """A vectorized function on [0,1)^d: ``func`` maps (n, d) arrays to (n,)."""

    name: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    mean: float | None = None
    variance: float | None = None
    note: str = ""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.func(x)


def _sloan_joe(x):
    return x[:, 1] * np.exp(x[:, 0] * x[:, 1])


def sloan_joe_g() -> Integrand:
    return Integrand(
        "sloan_joe_g", 2, _sloan_joe, mean=E - 2, variance=(3 - E) * (7 * E - 11) / 8,
        note="closed-form mean and variance of x2*exp(x1*x2)",
    )


def sloan_joe_f() -> Integrand:
    g = sloan_joe_g()
    return Integrand(
        "sloan_joe_f", 2, lambda x: _sloan_joe(x) / (E - 2), mean=1.0,
        variance=g.variance / (E - 2) ** 2, note="g scaled to unit mean",
    )


def linear_d(a: Sequence[float], c: float = 0.0) -> Integrand:
    a = np.asarray(a, dtype=np.float64)
    return Integrand(
        "linear_d", a.size, lambda x: c + x @ a, mean=c + float(a.sum()) / 2,
        variance=float(np.sum(a**2)) / 12, note="c + sum_j a_j x_j",
    )


def smooth_1d() -> Integrand:
    return Integrand(
        "smooth_1d", 1, lambda x: np.exp(x[:, 0]), mean=E - 1,
        variance=(E**2 - 1) / 2 - (E - 1) ** 2, note="exp(x)",
    )


def antisymmetric(d: int = 1) -> Integrand:
    return Integrand("antisymmetric", d, lambda x: x[:, 0] - 0.5, mean=0.0, variance=1 / 12, note="x1 - 1/2")


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Sum over kappa = (k, m-k), k = 0..m, of functions linear on each cell.

    Each term has an independent value at every cell center and an independent
    gradient per cell.  Its mean is the average of the center values.
    """

    base: int
    m: int
    intercepts: tuple[np.ndarray, ...]
    slopes: tuple[np.ndarray, ...]

    @classmethod
    def random(cls, m: int, b: int = 2, seed: int = 0) -> "PiecewiseLinear":
        rng = np.random.default_rng(seed)
        ints, slopes = [], []
        for k in range(m + 1):
            shape = (b**k, b ** (m - k))
            ints.append(rng.standard_normal(shape))
            slopes.append(rng.standard_normal(shape + (2,)))
        return cls(b, m, tuple(ints), tuple(slopes))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        b, m = self.base, self.m
        out = np.zeros(x.shape[0])
        for k in range(m + 1):
            scale = np.array([b**k, b ** (m - k)], dtype=np.float64)
            cell = np.minimum(np.floor(x * scale).astype(np.int64), scale.astype(np.int64) - 1)
            center = (cell + 0.5) / scale
            i, j = cell[:, 0], cell[:, 1]
            out += self.intercepts[k][i, j] + np.sum(self.slopes[k][i, j] * (x - center), axis=1)
        return out

    @property
    def mean(self) -> float:
        # a linear function integrates to its center value over a box
        return float(sum(a.mean() for a in self.intercepts))


def piecewise_linear(m: int, b: int = 2, seed: int = 0) -> Integrand:
    pl = PiecewiseLinear.random(m, b, seed)
    return Integrand(f"piecewise_linear", 2, pl, mean=pl.mean, note=f"m={m} b={b} seed={seed}")


def integrand_catalog() -> dict[str, Integrand]:
    items = [
        sloan_joe_f(),
        sloan_joe_g(),
        linear_d([1.0, 1.0]),
        piecewise_linear(4, 2, 0),
        smooth_1d(),
        antisymmetric(),
    ]
    return {f.name: f for f in items}


def estimate(f: Callable, P: PointSet) -> float:
    """Average of ``f`` over the real values of ``P``."""
    dim = getattr(f, "dim", P.dim)
    if dim != P.dim:
        raise ContractError(f"integrand has dim {dim}, points have dim {P.dim}")
    if P.n == 0:
        raise ValueError("cannot estimate from an empty point set")
    return float(np.mean(f(P.values())))


# -- experiments ------------------------------------------------------------

IID = "iid"
NONE = "none"


@dataclass
class ExperimentConfig:
    integrand: str = "sloan_joe_f"
    base: int = 2
    m_min: int = 6
    m_max: int = 14
    lam: int = 1
    scramble: str = "random_linear"  # a ScrambleKind value, "none" or "iid"
    seed: int = 20080101
    fold: str = "none"
    rho: str = "auto"
    reps: int = 300
    precision: int | None = None
    window: int = 6
    timing: bool = False  # wall time in the CSV breaks byte-for-byte reproducibility
    out: str | None = None

    def __post_init__(self):
        if self.scramble not in (NONE, IID):
            self.scramble = ScrambleKind.parse(self.scramble).value
        self.fold = FoldScheme(self.fold).value
        if self.precision is None:
            self.precision = default_precision(self.base)
        if self.m_min > self.m_max:
            raise ValueError("m_min exceeds m_max")
        if self.randomized and self.reps < 2:
            raise ValueError("randomized experiments need reps >= 2")

    @property
    def randomized(self) -> bool:
        return self.scramble != NONE

    def seeds(self) -> list[int]:
        return [derive_seed(self.seed, r) for r in range(self.reps)]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ResultRow:
    n: int
    estimator: str
    scramble: str
    fold: str
    mean: float
    rmse: float
    se: float
    seconds: float
    m: int = 0


CSV_HEADER = ["n", "estimator", "scramble", "fold", "rmse", "se", "seconds"]


def _fmt(x: float) -> str:
    return format(x, ".17g")


def rows_to_csv(rows: Sequence[ResultRow], fit: "RateFit | None" = None, timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        secs = r.seconds if timing else 0.0
        w.writerow([r.n, r.estimator, r.scramble, r.fold, _fmt(r.rmse), _fmt(r.se), _fmt(secs)])
    if fit is not None:
        buf.write(f"# slope={_fmt(fit.slope)} intercept={_fmt(fit.intercept)} points={fit.used}\n")
    return buf.getvalue()


def resolve_integrand(name: str) -> Integrand:
    catalog = integrand_catalog()
    if name not in catalog:
        raise KeyError(f"unknown integrand {name!r}; choose from {sorted(catalog)}")
    return catalog[name]


def _iid_points(b: int, n: int, d: int, K: int, seed: int) -> PointSet:
    # independent uniform digits are uniform on the b**-K grid
    idx = np.arange(n * d * K, dtype=np.int64)
    return PointSet(b, keyed_integers(b, seed, idx).reshape(n, d, K).astype(np.uint8))


def rmse_experiment(cfg: ExperimentConfig, integrand: Integrand | None = None) -> list[ResultRow]:
    """Error of the chosen estimator for every m in [m_min, m_max].

    Points are generated, scrambled with one seed per replication and then
    folded.  Without scrambling the absolute error of the single deterministic
    estimate is reported.
    """
    f = integrand if integrand is not None else resolve_integrand(cfg.integrand)
    if f.mean is None:
        raise ContractError(f"integrand {f.name!r} has no known mean")
    b, d, K = cfg.base, f.dim, cfg.precision
    G = faure_matrices(b, d, K) if cfg.scramble != IID else None
    seeds = cfg.seeds() if cfg.randomized else [0]
    estimator = {NONE: "qmc", IID: "mc"}.get(cfg.scramble, "rqmc")
    rows = []
    for m in range(cfg.m_min, cfg.m_max + 1):
        t0 = time.perf_counter()
        spec = NetSpec(b, d, m, lam=cfg.lam, relaxed=cfg.lam >= b)
        plan = make_fold_plan(cfg.fold, d, m, rho=cfg.rho)
        base = generate_net(spec, G) if G is not None else None
        ests = np.empty(len(seeds))
        for r, seed in enumerate(seeds):
            if cfg.scramble == IID:
                pts = _iid_points(b, spec.n, d, K, seed)
            elif cfg.scramble == NONE:
                pts = base
            else:
                pts = apply_scramble(make_scramble(cfg.scramble, b, K, d, seed), base)
            ests[r] = estimate(f, plan.apply(pts))
        err2 = (ests - f.mean) ** 2
        rmse = math.sqrt(err2.mean())
        if len(seeds) > 1 and rmse > 0:
            se = float(err2.std(ddof=1) / math.sqrt(len(seeds)) / (2 * rmse))
        else:
            se = 0.0
        rows.append(ResultRow(
            n=spec.n * plan.multiplier, estimator=estimator, scramble=cfg.scramble, fold=cfg.fold,
            mean=float(ests.mean()), rmse=rmse, se=se, seconds=time.perf_counter() - t0, m=m,
        ))
    return rows


@dataclass
class RateFit:
    slope: float
    intercept: float
    residuals: np.ndarray
    used: int
    excluded: list[int] = field(default_factory=list)  # n values with zero error


def fit_rate(rows: Sequence[ResultRow], window: int | None = None) -> RateFit:
    """Least-squares slope of log(rmse) against log(n).

    Rows with zero error (exact integration) are excluded and reported.
    ``window`` keeps only the rows with the largest n.
    """
    rows = sorted(rows, key=lambda r: r.n)
    if window is not None:
        rows = rows[-window:]
    excluded = [r.n for r in rows if r.rmse == 0]
    rows = [r for r in rows if r.rmse > 0]
    if len(rows) < 4:
        raise ValueError(f"need at least 4 rows with positive error, got {len(rows)}")
    x = np.log([r.n for r in rows])
    y = np.log([r.rmse for r in rows])
    slope, intercept = np.polyfit(x, y, 1)
    return RateFit(float(slope), float(intercept), y - (slope * x + intercept), len(rows), excluded)
