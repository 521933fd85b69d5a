"""Acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py``; a summary section lists one
PASS/FAIL line per criterion.
"""

import math
import time

import numpy as np
import pytest

from rqmcfold.analysis import (
    GridFunction,
    anova_sigmas,
    check_net,
    gain_bound,
    gain_coefficient_exact,
    kappa_vectors,
    predicted_variance,
    subsets,
)
from rqmcfold.digitspace import PointSet
from rqmcfold.fold import FoldScheme, make_fold_plan, monomial_net
from rqmcfold.netgen import NetSpec, faure_matrices, generate_net
from rqmcfold.quadrature import (
    ExperimentConfig,
    estimate,
    fit_rate,
    linear_d,
    piecewise_linear,
    rmse_experiment,
    sloan_joe_f,
    sloan_joe_g,
)
from rqmcfold.scramble import ScrambleKind, apply_scramble, make_scramble


@pytest.mark.criterion(1, "Faure nets balance every elementary interval")
def test_net_balance(record_property):
    cases = [(b, d, m) for b in (2, 3, 5) for d in (1, 2) for m in range(1, 9)]
    cases += [(b, 3, m) for b in (3, 5) for m in range(1, 6)]
    t0 = time.perf_counter()
    bad = []
    for b, d, m in cases:
        spec = NetSpec(b, d, m)
        report = check_net(generate_net(spec), spec)
        if not report.passed:
            bad.append((b, d, m, len(report.violations)))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{len(cases)} nets, {len(bad)} failing, {elapsed:.1f}s")
    assert bad == []
    assert elapsed < 60


@pytest.mark.criterion(2, "scrambled (0,6,2)-nets stay nets, 4 kinds x 50 seeds")
def test_scramble_preservation(record_property):
    spec = NetSpec(2, 2, 6)
    P = generate_net(spec)
    failures = 0
    for kind in ScrambleKind:
        for seed in range(50):
            Q = apply_scramble(make_scramble(kind, 2, P.precision, 2, seed), P)
            failures += not check_net(Q, spec).passed
    record_property("detail", f"{failures} of 200 failed")
    assert failures == 0


def _bootstrap_se_of_variance(x, rng, reps=2000):
    idx = rng.integers(0, x.size, size=(reps, x.size))
    return float(x[idx].var(axis=1, ddof=1).std(ddof=1))


@pytest.mark.slow
@pytest.mark.criterion(3, "variance formula matches nested-uniform scrambling within 3 bootstrap SE")
def test_variance_oracle(record_property):
    b, d, Kg, seeds = 2, 2, 3, 2000
    # only the first Kg digits reach a grid function, so a short precision is exact
    K = 6
    funcs = [GridFunction.random(b, d, Kg, seed=100 + i) for i in range(5)]
    rng = np.random.default_rng(7)
    worst = 0.0
    for m in (2, 3, 4):
        A = generate_net(NetSpec(b, d, m), K=K)
        ests = np.empty((seeds, len(funcs)))
        for s in range(seeds):
            X = apply_scramble(make_scramble("nested_uniform", b, K, d, s), A)
            ests[s] = [f.on_points(X).mean() for f in funcs]
        for i, f in enumerate(funcs):
            pred = predicted_variance(f, A)
            emp = float(ests[:, i].var(ddof=1))
            se = _bootstrap_se_of_variance(ests[:, i], rng)
            z = abs(pred - emp) / se
            worst = max(worst, z)
            assert z <= 3, (m, i, pred, emp, se)
    record_property("detail", f"15 comparisons, worst |z| = {worst:.2f}")


@pytest.mark.criterion(4, "gain coefficients bounded by e and zero on balanced scales")
def test_gain_bounds(record_property):
    checked = 0
    top = 0.0
    for b in (2, 3):
        for m in range(0, 7):
            A = generate_net(NetSpec(b, 2, m))
            bound = gain_bound(b, 2, m)
            assert bound <= math.e
            for u in subsets(2):
                for kappa in kappa_vectors(len(u), m + 2):
                    g = gain_coefficient_exact(A, u, kappa)
                    checked += 1
                    top = max(top, float(g))
                    assert 0 <= g <= math.e + 1e-9
                    if len(u) + sum(kappa) <= m:
                        assert g == 0
    record_property("detail", f"{checked} coefficients, max {top:.4f}")


RATE_CASES = [
    ("unscrambled", "none", "none", lambda s: abs(s + 1) <= 0.25),
    ("random linear", "random_linear", "none", lambda s: s <= -1.35),
    ("random linear + box", "random_linear", "box", lambda s: s <= -1.7),
    ("asm + box", "asm", "box", lambda s: s <= -1.7),
]


@pytest.mark.slow
@pytest.mark.criterion(5, "RMSE slopes for the exponential integrand, n = 2^6..2^14")
def test_rates(record_property):
    t0 = time.perf_counter()
    slopes = {}
    for label, scramble, fold, ok in RATE_CASES:
        cfg = ExperimentConfig(integrand="sloan_joe_f", scramble=scramble, fold=fold, m_min=6, m_max=14, reps=300)
        slopes[label] = fit_rate(rmse_experiment(cfg), cfg.window).slope
    elapsed = time.perf_counter() - t0
    record_property("detail", ", ".join(f"{k} {v:.3f}" for k, v in slopes.items()) + f", {elapsed:.0f}s")
    for label, _, _, ok in RATE_CASES:
        assert ok(slopes[label]), (label, slopes[label])
    assert elapsed <= 15 * 60


@pytest.mark.slow
@pytest.mark.criterion(6, "ASM in one dimension: slope <= -1.75 for exp(x)")
def test_asm_one_dimension(record_property):
    cfg = ExperimentConfig(integrand="smooth_1d", scramble="asm", m_min=6, m_max=16, reps=300)
    slope = fit_rate(rmse_experiment(cfg), cfg.window).slope
    record_property("detail", f"slope {slope:.3f}")
    assert slope <= -1.75


@pytest.mark.criterion(7, "folds integrate linear and piecewise-linear functions exactly")
def test_exactness(record_property):
    rng = np.random.default_rng(11)
    worst_lin = 0.0
    for d in (1, 2, 3):
        f = linear_d(rng.standard_normal(d), c=float(rng.standard_normal()))
        plan = make_fold_plan(FoldScheme.ANTITHETIC, d, 0)
        sets = [PointSet(2, rng.integers(0, 2, size=(n, d, 53))) for n in (1, 7, 100)]
        sets.append(generate_net(NetSpec(3, d, 3)))
        for P in sets:
            worst_lin = max(worst_lin, abs(estimate(f, plan.apply(P)) - f.mean))
    worst_pl = 0.0
    for m in range(0, 6):
        for seed in range(3):
            f = piecewise_linear(m, 2, seed=seed)
            P = generate_net(NetSpec(2, 2, m))
            worst_pl = max(worst_pl, abs(estimate(f, monomial_net(P, m)) - f.mean))
    record_property("detail", f"linear {worst_lin:.1e}, piecewise {worst_pl:.1e}")
    assert worst_lin < 1e-12
    assert worst_pl < 1e-10


@pytest.mark.criterion(8, "ANOVA of the exponential integrand")
def test_anova_values(record_property):
    g = sloan_joe_g()
    t = anova_sigmas(g, 2)
    idx = [t.index((0,)), t.index((1,)), t.index((0, 1))]
    record_property("detail", f"I err {abs(t.mean - (math.e - 2)):.1e}, indices " + " / ".join(f"{v:.5f}" for v in idx))
    assert abs(t.mean - (math.e - 2)) < 1e-8
    assert abs(t.variance - g.variance) <= 1e-6 * g.variance
    for got, want in zip(idx, (0.0729, 0.8561, 0.0710)):
        assert abs(got - want) <= 1e-3


@pytest.mark.criterion(9, "sequence blocks are nets and prefixes nest")
def test_sequence_blocks(record_property):
    blocks = 0
    for b, d in [(2, 1), (2, 2), (3, 2), (3, 3), (5, 2), (5, 3)]:
        G = faure_matrices(b, d)
        for m in range(0, 6):
            count = 9 * b**m
            big = generate_net(NetSpec(b, d, m + math.ceil(math.log(9, b))), G)
            assert big.n >= count
            for r in range(9):
                block = PointSet(b, big.digits[r * b**m:(r + 1) * b**m])
                assert check_net(block, NetSpec(b, d, m)).passed, (b, d, m, r)
                blocks += 1
            small = generate_net(NetSpec(b, d, m), G)
            larger = generate_net(NetSpec(b, d, m + 1), G)
            assert np.array_equal(larger.digits[: small.n], small.digits)
    record_property("detail", f"{blocks} blocks")


@pytest.mark.slow
@pytest.mark.criterion(10, "every scramble and fold is unbiased within 4 SE")
def test_unbiasedness(record_property):
    f = sloan_joe_f()
    m, seeds = 4, 2000
    A = generate_net(NetSpec(2, 2, m))
    plans = {s.value: make_fold_plan(s, 2, m) for s in FoldScheme}
    worst = 0.0
    combos = 0
    for kind in ScrambleKind:
        ests = {name: np.empty(seeds) for name in plans}
        for s in range(seeds):
            X = apply_scramble(make_scramble(kind, 2, A.precision, 2, s), A)
            for name, plan in plans.items():
                ests[name][s] = estimate(f, plan.apply(X))
        for name, e in ests.items():
            z = abs(e.mean() - f.mean) / (e.std(ddof=1) / math.sqrt(seeds))
            worst = max(worst, z)
            combos += 1
            assert z <= 4, (kind.value, name, z)
    record_property("detail", f"{combos} combinations, worst |z| = {worst:.2f}")
