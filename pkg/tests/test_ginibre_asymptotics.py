import math

import numpy as np
import pytest
from scipy import integrate

from probwork.ginibre import (TARGET_CONSTANT, adiabatic_main_term, bulk_o2_integral,
                              bulk_profile, cm_bulk_o2, cm_bulk_o2_scaling, constraint_check,
                              o2_density_exact, perturbation_series, perturbation_terms)


def test_bulk_profile():
    assert bulk_profile(0.0) == 0.5
    val, _ = integrate.quad(bulk_profile, 0, np.inf)
    assert val == pytest.approx(1.0, abs=1e-9)
    t = np.array([9e-4, 1.1e-3])
    direct = (1 - (1 + t) * np.exp(-t)) / t ** 2
    np.testing.assert_allclose(bulk_profile(t), direct, rtol=1e-8)


def test_bulk_formula():
    z1, z2 = 0.1 + 0.2j, -0.3j
    expect = -(1 - z1 * np.conj(z2)) / (math.pi ** 2 * abs(z1 - z2) ** 4)
    assert cm_bulk_o2(z1, z2) == pytest.approx(expect)
    with pytest.raises(ValueError):
        cm_bulk_o2(0.2, 0.2)
    with pytest.raises(ValueError):
        cm_bulk_o2_scaling(1.0, 0.1)
    # the scaling form reduces to the bulk formula at large separation
    N, om = 10 ** 6, 30.0
    z = 0.3
    lhs = N ** 2 * cm_bulk_o2_scaling(z, om)
    rhs = cm_bulk_o2(z + om / (2 * math.sqrt(N)), z - om / (2 * math.sqrt(N))).real
    assert lhs == pytest.approx(rhs, rel=0.01)


@pytest.mark.parametrize("z,om", [(0.0, 0.5), (0.2, 0.7), (0.4j, 1.0), (0.3 + 0.1j, 0.2)])
def test_scaling_form_against_exact(z, om):
    N = 30
    h = om / (2 * math.sqrt(N))
    exact = o2_density_exact(N, z + h, z - h) / N ** 2
    # the imaginary part is a finite-N correction of relative size O(N^-1/2)
    assert abs(exact.imag) < 0.15 * abs(exact.real)
    assert exact.real == pytest.approx(cm_bulk_o2_scaling(z, om), rel=0.2)


@pytest.mark.parametrize("p", [0, 1, 2])
def test_constraint_exact_small_n(p):
    rep = constraint_check(3, p, "exact", order=10)
    expect = 1.0 + (1.0 / 9 if p == 2 else 0.0)
    assert rep.total == pytest.approx(expect, abs=1e-8)
    assert rep.o1_integral == pytest.approx(rep.o1_exact, rel=1e-12)


def test_constraint_bulk_mode():
    rep = constraint_check(1000, 1, "bulk")
    assert rep.o1_correction == pytest.approx(0.5, abs=1e-3)
    assert abs(rep.log_coefficient) < 0.01
    assert rep.total == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValueError):
        constraint_check(13, 1, "exact")
    with pytest.raises(ValueError):
        constraint_check(10, 1, "bogus")


def test_bulk_integral_tends_to_minus_leading_plus_half():
    for N in (10 ** 4, 10 ** 5):
        assert bulk_o2_integral(N, 1) + N / 6 == pytest.approx(0.5, abs=0.02)


@pytest.mark.parametrize("r", [0.3, 0.5, 0.7])
def test_adiabatic_main_term(r):
    res = adiabatic_main_term(10 ** 4, r)
    assert res.ratio == pytest.approx(1.0, abs=5e-3)
    assert res.implied_P == pytest.approx(TARGET_CONSTANT, abs=5e-3)
    assert res.inner_product_ratio == pytest.approx(1.0, abs=5e-3)


def test_adiabatic_validation():
    with pytest.raises(ValueError):
        adiabatic_main_term(100, 1.0)
    with pytest.raises(ValueError):
        adiabatic_main_term(2, 0.5)


def test_perturbation_series():
    assert perturbation_series(0) == 1.0
    terms = perturbation_terms(3)
    assert np.all(np.diff(np.abs(terms)) < 0)
    assert perturbation_series(3) == pytest.approx(TARGET_CONSTANT, abs=1e-5)
    assert perturbation_series(2) == pytest.approx(TARGET_CONSTANT, abs=1e-4)
    assert abs(perturbation_series(2, "literal") - TARGET_CONSTANT) > 0.2
    with pytest.raises(ValueError):
        perturbation_terms(-1)
    with pytest.raises(ValueError):
        perturbation_terms(1, form="other")
