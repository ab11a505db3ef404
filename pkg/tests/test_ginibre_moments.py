import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from probwork.ginibre import (MomentSignature, catalan, enumerate_matchings,
                              limit_moment_matchings, mixed_moment_mc, pinch_decomposition,
                              pinch_recurrence_check, sample_ginibre, signature_sequence,
                              trace_word)
from probwork.harness.streams import derive_stream


def test_small_signatures():
    assert limit_moment_matchings((2, 2), (2, 2)) == 3
    assert limit_moment_matchings((1,), (1,)) == 1
    assert limit_moment_matchings((2,), (1,)) == 0
    assert limit_moment_matchings((1, 1), (0, 1)) == 0
    # the alternating word (A A*)^p has C_p matchings, A^p (A*)^p only one
    for p in range(1, 8):
        assert limit_moment_matchings((1,) * p, (1,) * p) == catalan(p)
        assert limit_moment_matchings((p,), (p,)) == 1


def test_signature_validation():
    with pytest.raises(ValueError):
        MomentSignature((1, 2), (1,))
    with pytest.raises(ValueError):
        MomentSignature((0,), (0,))
    with pytest.raises(ValueError):
        limit_moment_matchings((13,), (13,))
    assert signature_sequence(((2, 1), (1, 2))) == (1, 1, -1, 1, -1, -1)


_words = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=4).filter(
    lambda w: sum(a + b for a, b in w) > 0 and sum(a + b for a, b in w) <= 12)


@given(_words)
@settings(max_examples=150, deadline=None)
def test_count_matches_bruteforce_enumeration(word):
    p = tuple(a for a, _ in word)
    q = tuple(b for _, b in word)
    seq = signature_sequence((p, q))
    brute = len(enumerate_matchings(seq))
    assert limit_moment_matchings(p, q) == brute
    assert pinch_recurrence_check(p, q)
    R = len(seq)
    if R % 2 == 0:
        assert brute <= catalan(R // 2)


def test_pinch_terms_sum():
    terms = pinch_decomposition((2, 2), (2, 2))
    assert sum(t[3] for t in terms) == 3
    assert all(len(t[1]) % 2 == 0 for t in terms)


def test_enumeration_counts_all_matchings_when_crossing_allowed():
    seq = (1, 1, 1, -1, -1, -1)
    assert len(enumerate_matchings(seq, noncrossing=False)) == 6
    assert len(enumerate_matchings(seq)) == 1
    assert len(enumerate_matchings((1, -1) * 3)) == catalan(3)


def test_trace_word_against_explicit_product():
    A = sample_ginibre(6, derive_stream(0, 0))
    Ah = A.conj().T
    sig = MomentSignature((2, 1), (1, 3))
    M = A @ A @ Ah @ A @ Ah @ Ah @ Ah
    assert trace_word(A, sig) == pytest.approx(np.trace(M) / 6, rel=1e-12)


def test_ginibre_entry_variance():
    A = sample_ginibre(400, derive_stream(1, 0))
    assert np.mean(np.abs(A) ** 2) * 400 == pytest.approx(1.0, rel=0.01)
    assert abs(np.mean(A * A)) * 400 < 0.02


@pytest.mark.parametrize("p,q", [((1,), (1,)), ((2,), (2,)), ((2, 1), (1, 2))])
def test_monte_carlo_near_limit(p, q):
    est = mixed_moment_mc(150, (p, q), 300, seed=3)
    m = limit_moment_matchings(p, q)
    # finite-N corrections are O(1/N); allow them on top of sampling error
    assert abs(est.mean.real - m) < 4 * est.stderr + 3.0 * m / 150


def test_monte_carlo_thread_invariance():
    a = mixed_moment_mc(20, ((1,), (1,)), 40, seed=5, threads=1)
    b = mixed_moment_mc(20, ((1,), (1,)), 40, seed=5, threads=3)
    assert a.mean == b.mean
