from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rqmcfold.digitspace import (
    DigitExpansion,
    DigitPoint,
    DomainError,
    ElementaryInterval,
    PointSet,
    PointSetFormatError,
    PrecisionError,
    default_precision,
    digits_to_reals,
    format_point_set,
    from_digits,
    interval_center,
    interval_index,
    parse_point_set,
    prefix_index,
    reals_to_digits,
    to_digits,
)


def test_default_precision_covers_a_double():
    assert default_precision(2) == 53
    assert default_precision(3) == 34
    for b in (2, 3, 5, 7, 11):
        assert b ** default_precision(b) >= 2**53


@pytest.mark.parametrize(
    "x, b, K, digits",
    [
        (0.0, 2, 8, (0,) * 8),
        (0.625, 2, 4, (1, 0, 1, 0)),
        (0.5, 3, 3, (1, 1, 1)),
    ],
)
def test_to_digits_examples(x, b, K, digits):
    assert to_digits(x, b, K).digits == digits


def test_one_third_in_base_three():
    # the double nearest 1/3 sits just below it; the one-digit rational wins
    assert to_digits(1 / 3, 3, 5).digits == (1, 0, 0, 0, 0)
    assert from_digits(DigitExpansion(3, (1, 0, 0, 0, 0))) == 1 / 3


def test_non_rational_double_is_truncated():
    x = 0.1
    e = to_digits(x, 3, 6)
    assert 0 <= x - from_digits(e) <= 3**-6


def test_zero_terminating_representation():
    # 0.5 in base 2 is 0.1000... not 0.0111...
    assert to_digits(0.5, 2, 6).digits == (1, 0, 0, 0, 0, 0)


@pytest.mark.parametrize("x", [-0.1, 1.0, 1.5])
def test_to_digits_domain(x):
    with pytest.raises(DomainError):
        to_digits(x, 2, 8)


def test_from_digits_examples():
    assert from_digits(DigitExpansion(2, (0,) * 10)) == 0.0
    assert from_digits(DigitExpansion(2, (1, 1))) == 0.75


def test_round_trip_of_k_digit_rationals():
    rng = np.random.default_rng(1)
    for b, K in [(2, 20), (3, 12), (5, 9)]:
        for _ in range(200):
            t = int(rng.integers(0, b**K))
            x = t / b**K
            assert to_digits(x, b, K).digits == tuple(int(c) for c in np.base_repr(t, b).zfill(K))
            assert from_digits(to_digits(x, b, K)) == x


@pytest.mark.parametrize("b", [2, 3, 5, 7])
def test_round_trip_error_bound(b):
    K = default_precision(b)
    x = np.random.default_rng(b).random(10_000)
    back = digits_to_reals(reals_to_digits(x, b, K), b)
    assert np.max(np.abs(back - x)) <= max(b**-K, np.spacing(1.0))
    assert np.all(back < 1.0)


def test_vectorized_and_scalar_paths_agree():
    rng = np.random.default_rng(3)
    for b in (2, 3, 5):
        K = default_precision(b)
        D = rng.integers(0, b, size=(50, K)).astype(np.uint8)
        vec = digits_to_reals(D, b)
        scalar = [from_digits(DigitExpansion(b, tuple(int(a) for a in row))) for row in D]
        assert np.allclose(vec, scalar, rtol=0, atol=2 * np.spacing(1.0))


def test_interval_index_examples():
    x = DigitPoint.from_reals([0.625, 0.25], 2, 10)
    assert interval_index(x, (2, 1)) == (2, 0)
    assert interval_index(x, (0, 0)) == (0, 0)
    p = DigitPoint(2, np.array([[1, 0, 1, 0]]))
    assert interval_index(p, (3,)) == (5,)


def test_interval_index_precision():
    x = DigitPoint.from_reals([0.5], 2, 4)
    with pytest.raises(PrecisionError):
        interval_index(x, (5,))


def test_interval_center_examples():
    K = 40
    assert interval_center((0,), (0,), 2, K).value[0] == 0.5
    assert list(interval_center((1, 2), (1, 3), 2, K).value) == [0.75, 0.875]
    assert interval_center((2,), (0,), 3, 30).value[0] == pytest.approx(1 / 18, abs=3**-30)


def test_inactive_coordinate_center_is_half():
    box = ElementaryInterval(2, (3, 2), (5, 1), active=frozenset({1}))
    c = box.center(20).value
    assert c[0] == 0.5
    assert c[1] == pytest.approx(0.375)
    assert box.volume == Fraction(1, 4)


def test_center_lies_in_its_interval():
    rng = np.random.default_rng(5)
    for b in (2, 3, 5):
        for _ in range(30):
            kappa = tuple(int(k) for k in rng.integers(0, 5, size=2))
            tau = tuple(int(rng.integers(0, b**k)) for k in kappa)
            c = interval_center(kappa, tau, b, 12)
            assert interval_index(c, kappa) == tau


@given(
    st.lists(st.integers(0, 1), min_size=12, max_size=12),
    st.lists(st.integers(0, 1), min_size=12, max_size=12),
    st.integers(0, 12),
    st.integers(0, 12),
)
def test_each_point_in_exactly_one_tile(d1, d2, k1, k2):
    x = DigitPoint(2, np.array([d1, d2]))
    tau = interval_index(x, (k1, k2))
    box = ElementaryInterval(2, (k1, k2), tau)
    assert box.contains(x)
    # any other translation misses the point
    other = ((tau[0] + 1) % 2**k1 if k1 else 0, tau[1])
    if other != tau:
        assert not ElementaryInterval(2, (k1, k2), other).contains(x)


def test_tiles_partition_a_point_set():
    rng = np.random.default_rng(0)
    P = PointSet(3, rng.integers(0, 3, size=(500, 2, 6)))
    kappa = (2, 1)
    counts = {}
    for x in P:
        counts[interval_index(x, kappa)] = counts.get(interval_index(x, kappa), 0) + 1
    assert sum(counts.values()) == 500
    assert all(0 <= t1 < 9 and 0 <= t2 < 3 for t1, t2 in counts)


@pytest.mark.parametrize("b", [2, 3, 5])
def test_volume_identity(b):
    for kappa in [(0, 0), (1, 2), (3, 0, 1), (2, 2, 2)]:
        box = ElementaryInterval(b, kappa, (0,) * len(kappa))
        prod = Fraction(1)
        for k in kappa:
            prod *= Fraction(1, b**k)
        assert box.volume == prod == Fraction(1, b ** sum(kappa))


def test_prefix_index_vectorized():
    D = np.array([[[1, 0, 1], [0, 1, 1]]], dtype=np.uint8)
    assert prefix_index(D, 3, 2).tolist() == [[5, 3]]


def test_text_format_round_trip():
    rng = np.random.default_rng(2)
    for b in (2, 3, 7, 13):
        P = PointSet(b, rng.integers(0, b, size=(9, 3, 5)))
        text = format_point_set(P)
        assert text.splitlines()[0] == f"base={b} dim=3 prec=5 n=9"
        Q = parse_point_set(text)
        assert np.array_equal(P.digits, Q.digits) and Q.base == b


def test_text_format_example_line():
    P = PointSet.from_reals([[0.625, 0.25]], 2, 4)
    assert format_point_set(P) == "base=2 dim=2 prec=4 n=1\n1010 0100\n"


@pytest.mark.parametrize(
    "text, line",
    [
        ("base=2 dim=1 prec=3\n101\n", 1),
        ("base=2 dim=1 prec=3 n=2\n101\n1021\n", 3),
        ("base=2 dim=1 prec=3 n=2\n101\n102\n", 3),
        ("base=2 dim=2 prec=3 n=1\n101\n", 2),
        ("base=2 dim=1 prec=3 n=3\n101\n", 2),
    ],
)
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(PointSetFormatError) as info:
        parse_point_set(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_point_set_is_immutable():
    P = PointSet(2, np.zeros((2, 1, 3)))
    with pytest.raises(ValueError):
        P.digits[0, 0, 0] = 1
