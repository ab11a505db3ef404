import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from probwork.exclusion import ParticleConfig
from probwork.lis import binary_walk_lis, height_profile_lis, lis_length, lis_witness, patience_sort


def _dp_lis(seq, strict=True):
    best = []
    for i, v in enumerate(seq):
        cands = [best[j] for j in range(i) if (seq[j] < v if strict else seq[j] <= v)]
        best.append(1 + max(cands, default=0))
    return max(best, default=0)


def test_worked_example_piles():
    count, state = patience_sort([4, 1, 3, 2, 6, 5])
    assert count == 3
    assert state.piles == [[4, 1], [3, 2], [6, 5]]
    assert state.tops == [1, 2, 5]


def test_lis_of_ten_card_example():
    assert lis_length([7, 2, 8, 1, 3, 4, 10, 6, 9, 5]) == 5


def test_identity_and_reversal():
    n = 12
    c, st_ = patience_sort(list(range(1, n + 1)))
    assert c == n and lis_witness(st_) == list(range(n))
    c, st_ = patience_sort(list(range(n, 0, -1)))
    assert c == 1 and len(lis_witness(st_)) == 1


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        patience_sort([])


@pytest.mark.parametrize("n", range(1, 8))
def test_exhaustive_against_dp(n):
    for p in itertools.permutations(range(n)):
        assert lis_length(p) == _dp_lis(p)


@given(st.lists(st.integers(0, 5), min_size=1, max_size=12))
@settings(max_examples=300, deadline=None)
def test_witness_valid_with_ties(seq):
    for mode, strict in (("strict", True), ("lax", False)):
        c, state = patience_sort(seq, mode)
        assert c == _dp_lis(seq, strict)
        w = lis_witness(state)
        assert len(w) == c
        assert all(a < b for a, b in zip(w, w[1:]))
        vals = [seq[i] for i in w]
        ok = (lambda a, b: a < b) if strict else (lambda a, b: a <= b)
        assert all(ok(a, b) for a, b in zip(vals, vals[1:]))


def test_witness_of_worked_example():
    seq = [4, 1, 3, 2, 6, 5]
    w = lis_witness(patience_sort(seq)[1])
    assert len(w) == 3
    assert [seq[i] for i in w] in ([1, 3, 6], [1, 2, 5], [1, 3, 5], [1, 2, 6])


def _random_legal_piles(seq, rng):
    tops = []
    for v in seq:
        legal = [k for k, t in enumerate(tops) if v <= t]
        choice = rng.randrange(len(legal) + 1) if legal else 0
        if choice == len(legal):
            tops.append(v)
        else:
            tops[legal[choice]] = v
    return len(tops)


def test_any_legal_strategy_uses_at_least_greedy_piles():
    rng = random.Random(7)
    for _ in range(300):
        seq = rng.sample(range(30), 12)
        assert _random_legal_piles(seq, rng) >= lis_length(seq)


def test_binary_walk_examples():
    assert binary_walk_lis(ParticleConfig(np.ones(8, dtype=np.uint8))) == 8
    # exhaustive subsequence oracle on (1, 0, 1, 0): the longest non-decreasing
    # subsequence has length 2
    x = [1, 0, 1, 0]
    best = max(len(s) for r in range(1, 5) for s in itertools.combinations(x, r)
               if all(a <= b for a, b in zip(s, s[1:])))
    assert binary_walk_lis(ParticleConfig(np.array(x, dtype=np.uint8))) == best == 2


def test_binary_walk_equals_lax_patience():
    rng = np.random.default_rng(11)
    for _ in range(10000):
        x = rng.integers(0, 2, size=rng.integers(1, 40)).astype(np.uint8)
        assert binary_walk_lis(ParticleConfig(x)) == patience_sort(x, "lax")[0]


def test_height_profile_diagnostic_runs():
    x = np.array([1, 1, 0, 1, 0, 0], dtype=np.uint8)
    assert height_profile_lis(ParticleConfig(x)) >= 1
