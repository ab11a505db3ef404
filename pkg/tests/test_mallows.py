import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from probwork.harness.streams import derive_stream
from probwork.mallows import (check_permutation, exact_distribution, format_permutation,
                              inversions, mallows_from_draws, mallows_log_pmf,
                              sample_mallows_batch, sample_mallows_fy, sample_uniform_fy,
                              uniform_from_draws)
from probwork.qcomb import log_q_factorial


def _inv_bruteforce(p):
    return sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])


def test_inversions_examples():
    assert inversions([1, 2, 3, 4, 5]) == 0
    assert inversions(list(range(9, 0, -1))) == 36
    assert inversions([1, 3, 4, 2]) == 2


@given(st.permutations(list(range(1, 40))))
@settings(max_examples=100, deadline=None)
def test_inversions_match_bruteforce(p):
    assert inversions(p) == _inv_bruteforce(p)


def test_check_permutation_rejects():
    for bad in ([1, 1, 2], [0, 1, 2], [1, 2, 4], []):
        with pytest.raises(ValueError):
            check_permutation(bad)


def test_log_pmf_two_point_law():
    q = 0.5
    assert math.exp(mallows_log_pmf([1, 2], q)) == pytest.approx((1 - q) / (1 - q * q), rel=1e-14)
    assert math.exp(mallows_log_pmf([2, 1], q)) == pytest.approx(q * (1 - q) / (1 - q * q), rel=1e-14)
    assert mallows_log_pmf([3, 1, 2, 4], 1.0) == pytest.approx(-math.log(24), rel=1e-14)
    with pytest.raises(ValueError):
        mallows_log_pmf([1, 2], 1.5)


@pytest.mark.parametrize("n,q", [(3, 0.5), (5, 0.25), (7, 0.9), (8, 0.6)])
def test_partition_function_is_q_factorial(n, q):
    z = math.fsum(q ** _inv_bruteforce(p) for p in itertools.permutations(range(n)))
    assert math.log(z) == pytest.approx(log_q_factorial(n, q), rel=1e-13)


def test_exact_distribution_examples():
    d = exact_distribution(2, 0.5)
    assert d[(1, 2)] == pytest.approx(2 / 3, rel=1e-15)
    assert d[(2, 1)] == pytest.approx(1 / 3, rel=1e-15)
    assert all(v == pytest.approx(1 / 6) for v in exact_distribution(3, 1.0).values())
    assert math.fsum(exact_distribution(4, 0.3).values()) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        exact_distribution(9, 0.5)


def test_worked_insertion_example():
    assert list(uniform_from_draws([2, 2, 3])) == [1, 3, 4, 2]


def test_mallows_draws_map_append_and_front():
    # j = 1 + ((k - 1) mod m): j = 1 appends, j = m inserts at the front
    assert list(mallows_from_draws([1])) == [1, 2]
    assert list(mallows_from_draws([2])) == [2, 1]
    assert list(mallows_from_draws([3])) == [1, 2]


def test_uniform_small_n():
    rng = derive_stream(1, 0)
    assert list(sample_uniform_fy(1, rng)) == [1]
    counts = Counter(tuple(sample_uniform_fy(3, rng)) for _ in range(60000))
    assert len(counts) == 6
    sigma = math.sqrt(60000 * (1 / 6) * (5 / 6))
    for c in counts.values():
        assert abs(c - 10000) < 4 * sigma


def test_mallows_n2_probabilities():
    q, m = 0.7, 200000
    perms = sample_mallows_batch(2, q, m, derive_stream(2, 0))
    frac = np.mean(perms[:, 0] == 1)
    p = (1 - q) / (1 - q * q)
    assert abs(frac - p) < 4 * math.sqrt(p * (1 - p) / m)


def test_batch_matches_single_sampler():
    n, q = 9, 0.4
    a = sample_mallows_batch(n, q, 50, derive_stream(5, 0))
    rng = derive_stream(5, 0)
    b = np.array([sample_mallows_fy(n, q, rng) for _ in range(50)])
    np.testing.assert_array_equal(a, b)


def test_mallows_tv_distance_n4():
    n, q, m = 4, 0.6, 200000
    perms = sample_mallows_batch(n, q, m, derive_stream(3, 0))
    emp = Counter(map(tuple, perms.tolist()))
    exact = exact_distribution(n, q)
    tv = 0.5 * sum(abs(emp.get(k, 0) / m - v) for k, v in exact.items())
    assert tv < 0.01


def test_inversion_law_matches_exact():
    n, q, m = 5, 0.8, 100000
    perms = sample_mallows_batch(n, q, m, derive_stream(4, 0))
    inv = Counter(_inv_bruteforce(p) for p in perms.tolist())
    exact = Counter()
    for p, v in exact_distribution(n, q).items():
        exact[_inv_bruteforce(p)] += v
    for k, v in exact.items():
        assert abs(inv.get(k, 0) / m - v) < 4 * math.sqrt(v * (1 - v) / m) + 1e-9


def test_mallows_near_one_resembles_uniform():
    m = 60000
    perms = sample_mallows_batch(3, 1 - 1e-9, m, derive_stream(6, 0))
    counts = Counter(map(tuple, perms.tolist()))
    # chi-square with 5 degrees of freedom, 0.1% critical value 20.5
    chi2 = sum((c - m / 6) ** 2 / (m / 6) for c in counts.values())
    assert len(counts) == 6 and chi2 < 20.5


def test_sampler_domain_errors():
    with pytest.raises(ValueError):
        sample_mallows_fy(3, 1.0, derive_stream(0, 0))
    with pytest.raises(ValueError):
        sample_mallows_fy(3, 0.0, derive_stream(0, 0))


def test_format_permutation():
    assert format_permutation([3, 1, 2]) == "3 1 2"
