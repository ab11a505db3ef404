import math

import numpy as np
import pytest

from probwork.exclusion import (AsepParams, ParticleConfig, asep_run, asep_spectral_gap, asep_step,
                                balanced_start, blocking_product_sample,
                                detailed_balance_diagnostic, fluctuation_experiment,
                                midpoint_height, midpoint_regime_constant, small_gap_approximation)
from probwork.harness.streams import derive_stream
from probwork.lis import binary_walk_lis


def test_default_rates():
    p = AsepParams(10, 1.0)
    assert p.swap_up == p.swap_down == 0.5
    p = AsepParams(10, 0.4)
    assert p.swap_up == pytest.approx(0.8) and p.swap_down == pytest.approx(0.2)
    with pytest.raises(ValueError):
        AsepParams(10, 0.5, swap_up=1.5)


def test_equal_neighbours_unchanged():
    from probwork.exclusion import _asep_kernel
    occ = np.array([1, 1, 0, 0, 1, 1], dtype=np.uint8)
    x = occ.copy()
    # site 0 holds (1, 1): nothing moves even with acceptance certain
    _asep_kernel(x, np.array([[0.0, 0.0]]), 1.0, 1.0)
    np.testing.assert_array_equal(x, occ)
    # site 1 holds (1, 0), which swaps
    _asep_kernel(x, np.array([[0.3, 0.0]]), 1.0, 1.0)
    np.testing.assert_array_equal(x, [1, 0, 1, 0, 1, 1])
    cfg = ParticleConfig(occ)
    new = asep_step(cfg, AsepParams(6, 0.5), derive_stream(0, 0))
    assert new.particle_count == cfg.particle_count


def test_conservation_long_run():
    rng = derive_stream(3, 0)
    cfg = balanced_start(100, rng)
    asep_run(cfg, AsepParams(100, 0.7), 10 ** 6, rng)
    assert cfg.occupancy.sum() == 50 == cfg.particle_count


def test_spectral_gap_values():
    assert asep_spectral_gap(2, 0.5) == pytest.approx(1.0, abs=1e-15)
    n = 50
    assert asep_spectral_gap(n, 1.0) == pytest.approx(1 - math.cos(math.pi / n))
    n, c, alpha = 10 ** 4, 1.0, 0.5
    q = math.exp(-c / n ** alpha)
    gap = asep_spectral_gap(n, q)
    assert gap == pytest.approx(small_gap_approximation(n, c, alpha), rel=0.01)


def test_midpoint_height():
    x = np.array([1, 0, 1, 0, 1, 1, 1, 1], dtype=np.uint8)
    assert midpoint_height(x) == 0
    assert midpoint_height(np.ones(8, dtype=np.uint8)) == 4
    assert midpoint_height(np.zeros(8, dtype=np.uint8), up_value=0) == 4
    with pytest.raises(ValueError):
        midpoint_height(np.ones(7, dtype=np.uint8))


def test_one_step_changes_observables_by_at_most_one():
    rng = derive_stream(9, 0)
    n = 40
    cfg = balanced_start(n, rng)
    params = AsepParams(n, 0.6)
    for _ in range(20000):
        new = asep_step(cfg, params, rng)
        assert abs(midpoint_height(new) - midpoint_height(cfg)) <= 2
        assert abs(binary_walk_lis(new) - binary_walk_lis(cfg)) <= 1
        cfg = new


def test_midpoint_changes_by_at_most_one_swap_at_centre():
    # a swap straddling the midpoint moves one step across; the height
    # changes by 2 in +-1 units, i.e. one "up" moves out of the first half
    x = np.array([1, 1, 1, 0, 0, 0], dtype=np.uint8)
    y = x.copy()
    y[2], y[3] = y[3], y[2]
    assert abs(midpoint_height(x) - midpoint_height(y)) == 2
    assert abs(np.count_nonzero(x[:3]) - np.count_nonzero(y[:3])) <= 1


def test_blocking_measure_marginals_and_interface():
    n, q = 40, 0.9
    a = q ** (-9 * n / 20)
    rng = derive_stream(5, 0)
    m = 20000
    samples = np.array([blocking_product_sample(n, a, q, rng).occupancy for _ in range(m)])
    k = np.arange(1, n + 1)
    p = a * q ** k / (a * q ** k + 1)
    assert p[9 * n // 20 - 1] == pytest.approx(0.5)
    se = np.sqrt(p * (1 - p) / m)
    assert np.all(np.abs(samples.mean(axis=0) - p) < 4.5 * se)
    assert samples.sum(axis=1).var() <= n


def test_fair_coins_when_q_is_one():
    s = blocking_product_sample(10000, 1.0, 1.0, derive_stream(1, 1))
    assert abs(s.occupancy.mean() - 0.5) < 4 * 0.005


def test_fluctuation_experiment_thread_invariance():
    a = fluctuation_experiment(40, 0.5, 1.0, "walk_lis", burn_in=2000, trials=12, seed=2, threads=1)
    b = fluctuation_experiment(40, 0.5, 1.0, "walk_lis", burn_in=2000, trials=12, seed=2, threads=3)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.within_envelope()
    with pytest.raises(ValueError):
        fluctuation_experiment(41, 0.5, 1.0)
    with pytest.raises(ValueError):
        fluctuation_experiment(40, 0.5, 1.0, trials=0)


def test_detailed_balance_readings():
    recs = detailed_balance_diagnostic(6, 0.5)
    literal, alt, half = recs
    assert literal["q^I10"] > 0.1 and literal["q^I01"] > 0.1
    assert alt["q^I10"] > 0.1 and alt["q^I01"] > 0.1
    assert half["q^I10"] < 1e-9


def test_regime_constant():
    assert midpoint_regime_constant() == pytest.approx(10.2165, abs=1e-4)
