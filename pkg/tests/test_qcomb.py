import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from probwork.qcomb import (QParams, log_expm1_ratio, log_q_factorial, log_q_factorial_ratio,
                            q_integer, q_stirling_remainder, stirling_coefficients)


def test_q_integer_values():
    assert q_integer(5, 1.0) == 5
    assert q_integer(3, 0.5) == pytest.approx(1.75, rel=1e-15)
    for q in (0.1, 0.5, 0.999):
        assert q_integer(1, q) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("q", [0.0, -0.1, 1.0000001, float("nan")])
def test_q_integer_domain(q):
    with pytest.raises(ValueError):
        q_integer(3, q)


@pytest.mark.parametrize("n", [2, 10, 1000])
def test_q_integer_continuity_near_one(n):
    for eps in (1e-8, 1e-10, 1e-12):
        assert abs(q_integer(n, 1 - eps) - n) <= n * n * eps


def test_q_integer_matches_mpmath_near_one():
    mpmath.mp.dps = 40
    for n, eps in [(7, 1e-7), (500, 3e-7), (10 ** 5, 1e-9)]:
        q = 1 - eps
        exact = (1 - mpmath.mpf(q) ** n) / (1 - mpmath.mpf(q))
        assert q_integer(n, q) == pytest.approx(float(exact), rel=1e-13)


def test_log_q_factorial_values():
    assert log_q_factorial(3, 0.5) == pytest.approx(math.log(2.625), rel=1e-14)
    assert log_q_factorial(1, 0.3) == 0.0
    assert log_q_factorial(20, 1.0) == pytest.approx(math.lgamma(21), rel=1e-14)


@given(n=st.integers(2, 300), q=st.floats(0.01, 1.0))
@settings(max_examples=60, deadline=None)
def test_factorial_ratio_is_q_integer(n, q):
    diff = log_q_factorial(n, q) - log_q_factorial(n - 1, q)
    assert diff == pytest.approx(math.log(q_integer(n, q)), rel=1e-11, abs=1e-11)


def test_log_q_factorial_large_n_finite():
    v = log_q_factorial(10 ** 6, math.exp(-1e-6))
    assert math.isfinite(v)


def test_log_expm1_ratio_series_branch_continuity():
    y = np.array([0.0, 1e-6, 9.99e-5, 1.001e-4, 0.5, 30.0])
    got = log_expm1_ratio(y)
    mpmath.mp.dps = 30
    want = [0.0] + [float(mpmath.log((1 - mpmath.e ** (-mpmath.mpf(v))) / mpmath.mpf(v))) for v in y[1:]]
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-16)


def test_stirling_coefficients_against_high_precision():
    mpmath.mp.dps = 35
    a_ref = mpmath.quad(lambda y: mpmath.log((1 - mpmath.e ** (-y)) / y), [0, 1])
    a, b = stirling_coefficients(1.0)
    assert abs(a - float(a_ref)) < 1e-12
    assert a == pytest.approx(-0.23617977949933, abs=1e-12)
    assert b == pytest.approx(0.5 + 0.5 * math.log(1 - math.exp(-1)), abs=1e-15)
    assert stirling_coefficients(0.0) == (0.0, 0.0)


@pytest.mark.parametrize("beta", [0.3, 2.0, 7.5])
def test_stirling_coefficients_other_beta(beta):
    mpmath.mp.dps = 30
    b = mpmath.mpf(beta)
    a_ref = mpmath.quad(lambda y: mpmath.log((1 - mpmath.e ** (-b * y)) / (b * y)), [0, 1])
    assert abs(stirling_coefficients(beta)[0] - float(a_ref)) < 1e-10


def test_remainder_decays_and_vanishes_at_zero_beta():
    r = [abs(q_stirling_remainder(n, 1.0)) for n in (100, 1000, 10 ** 4)]
    assert r[0] > r[1] > r[2]
    assert r[2] < 1e-3
    assert q_stirling_remainder(50, 0.0) == 0.0


def test_decomposition_identity():
    n, beta = 2000, 1.7
    a, b = stirling_coefficients(beta)
    lhs = log_q_factorial_ratio(n, log_q=-beta / n)
    assert lhs == pytest.approx(n * a + b + q_stirling_remainder(n, beta), abs=1e-12)


def test_qparams_from_beta():
    p = QParams.from_beta(100, 2.0)
    assert p.log_q == -0.02
    assert p.q == math.exp(-0.02)
    with pytest.raises(ValueError):
        QParams(0, 0.5)
    with pytest.raises(ValueError):
        QParams.from_beta(10, -1.0)
