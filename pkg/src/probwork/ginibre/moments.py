"""Ginibre sampling, mixed trace moments and non-crossing matchings."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
import math

import numpy as np

from ..harness.streams import derive_stream

__all__ = [
    "MomentSignature",
    "MomentEstimate",
    "sample_ginibre",
    "trace_word",
    "mixed_moment_mc",
    "signature_sequence",
    "limit_moment_matchings",
    "pinch_decomposition",
    "pinch_recurrence_check",
    "enumerate_matchings",
    "catalan",
]

_MAX_R = 24


def sample_ginibre(n: int, rng) -> np.ndarray:
    """Complex Ginibre matrix with entries ``(X + iY) / sqrt(2n)``."""
    if n < 1:
        raise ValueError("n must be positive")
    z = rng.standard_normal((2, n, n))
    return (z[0] + 1j * z[1]) / math.sqrt(2.0 * n)


@dataclass(frozen=True)
class MomentSignature:
    """Exponents of the word ``A^p1 (A*)^q1 ... A^pk (A*)^qk``."""

    p: tuple
    q: tuple

    def __post_init__(self):
        p = tuple(int(v) for v in self.p)
        q = tuple(int(v) for v in self.q)
        if len(p) != len(q) or not p:
            raise ValueError("p and q must be non-empty and of equal length")
        if min(p + q) < 0:
            raise ValueError("exponents must be nonnegative")
        if sum(p) + sum(q) == 0:
            raise ValueError("signature must not be all zeros")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def R(self) -> int:
        return sum(self.p) + sum(self.q)


def _sig(sig, q=None) -> MomentSignature:
    if isinstance(sig, MomentSignature):
        return sig
    if q is not None:
        return MomentSignature(tuple(sig), tuple(q))
    return MomentSignature(tuple(sig[0]), tuple(sig[1]))


def trace_word(A: np.ndarray, sig: MomentSignature) -> complex:
    """``(1/n) tr[A^p1 (A*)^q1 ...]`` for one matrix."""
    n = A.shape[0]
    Ah = A.conj().T
    M = np.eye(n, dtype=complex)
    for p, q in zip(sig.p, sig.q):
        if p:
            M = M @ np.linalg.matrix_power(A, p)
        if q:
            M = M @ np.linalg.matrix_power(Ah, q)
    return complex(np.trace(M)) / n


@dataclass
class MomentEstimate:
    """Monte Carlo mean of a trace functional with real and imaginary errors."""

    mean: complex
    stderr_real: float
    stderr_imag: float
    trials: int

    @property
    def real(self) -> float:
        return self.mean.real

    @property
    def stderr(self) -> float:
        return self.stderr_real


def mixed_moment_mc(n: int, sig, trials: int, seed: int = 0, threads: int = 1,
                    trial_offset: int = 0) -> MomentEstimate:
    """Estimate ``M_n(p; q) = E (1/n) tr[A^p1 (A*)^q1 ...]``.

    Trial ``t`` samples its matrix from ``derive_stream(seed, trial_offset + t)``.
    """
    sig = _sig(sig)
    if trials < 2:
        raise ValueError("need at least two trials")

    def one(t):
        return trace_word(sample_ginibre(n, derive_stream(seed, t)), sig)

    idx = range(trial_offset, trial_offset + trials)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = np.array(list(ex.map(one, idx)))
    else:
        vals = np.array([one(t) for t in idx])
    m = complex(vals.mean())
    se_r = float(vals.real.std(ddof=1) / math.sqrt(trials))
    se_i = float(vals.imag.std(ddof=1) / math.sqrt(trials))
    return MomentEstimate(m, se_r, se_i, trials)


def signature_sequence(sig) -> tuple:
    """Circle labels ``(+1)^p1 (-1)^q1 (+1)^p2 ...``."""
    sig = _sig(sig)
    out = []
    for p, q in zip(sig.p, sig.q):
        out += [1] * p + [-1] * q
    return tuple(out)


@lru_cache(maxsize=None)
def _count(seq: tuple) -> int:
    # non-crossing perfect matchings of a linear word, every edge joining +1 to -1;
    # the first letter is matched to some k, splitting the word into inside/outside
    n = len(seq)
    if n == 0:
        return 1
    if n % 2:
        return 0
    total = 0
    for k in range(1, n, 2):
        if seq[k] != seq[0]:
            inner = _count(seq[1:k])
            if inner:
                total += inner * _count(seq[k + 1:])
    return total


@lru_cache(maxsize=None)
def _count_last(seq: tuple) -> int:
    # same count, decomposing on the last letter instead of the first
    n = len(seq)
    if n == 0:
        return 1
    if n % 2:
        return 0
    total = 0
    for k in range(n - 2, -1, -2):
        if seq[k] != seq[-1]:
            inner = _count_last(seq[k + 1:n - 1])
            if inner:
                total += inner * _count_last(seq[:k])
    return total


def _guard(sig, limit):
    R = sig.R
    if R > limit:
        raise ValueError(f"R = {R} exceeds the limit {limit}")
    return R


def limit_moment_matchings(sig, q=None) -> int:
    """Number of non-crossing ``+/-`` matchings of the signature's circle.

    Accepts a :class:`MomentSignature`, a pair ``(p, q)`` or two sequences.
    Returns 0 when ``R`` is odd or the numbers of ``+`` and ``-`` differ.

    >>> limit_moment_matchings((2, 2), (2, 2))
    3
    """
    sig = _sig(sig, q)
    R = _guard(sig, _MAX_R)
    if R % 2 or sum(sig.p) != sum(sig.q):
        return 0
    return _count(signature_sequence(sig))


def pinch_decomposition(sig, q=None) -> list:
    """Terms of the first-vertex pinch recurrence.

    Each term is ``(k, inside, outside, m_inside * m_outside)`` where vertex 0
    is matched to vertex ``k`` of opposite sign and the circle is pinched
    into the arcs strictly inside and outside that chord.
    """
    sig = _sig(sig, q)
    _guard(sig, 20)
    seq = signature_sequence(sig)
    terms = []
    for k in range(1, len(seq), 2):
        if seq[k] != seq[0]:
            a, b = seq[1:k], seq[k + 1:]
            terms.append((k, a, b, _count_last(a) * _count_last(b)))
    return terms


def pinch_recurrence_check(sig, q=None) -> bool:
    """Whether ``m(sig)`` equals the sum of the pinch decomposition.

    The left side is computed with the last-vertex decomposition so that
    the two sides do not share a code path.
    """
    sig = _sig(sig, q)
    _guard(sig, 20)
    seq = signature_sequence(sig)
    lhs = _count_last(seq) if len(seq) % 2 == 0 else 0
    rhs = sum(t[3] for t in pinch_decomposition(sig))
    return lhs == rhs


def _crosses(a, b, c, d):
    a, b = min(a, b), max(a, b)
    c, d = min(c, d), max(c, d)
    return (a < c < b < d) or (c < a < d < b)


def enumerate_matchings(seq, noncrossing: bool = True) -> list:
    """Brute-force list of ``+/-`` perfect matchings of a short word.

    Every bijection between ``+`` and ``-`` positions is generated and, when
    ``noncrossing`` is set, those with crossing chords are dropped.  Meant
    as an oracle for words of length at most 16.
    """
    seq = tuple(seq)
    if len(seq) > 16:
        raise ValueError("enumeration oracle limited to length 16")
    plus = [i for i, s in enumerate(seq) if s > 0]
    minus = [i for i, s in enumerate(seq) if s < 0]
    if len(plus) != len(minus):
        return []
    out = []
    for perm in permutations(minus):
        edges = list(zip(plus, perm))
        if noncrossing and any(_crosses(*e, *f) for i, e in enumerate(edges)
                               for f in edges[i + 1:]):
            continue
        out.append(edges)
    return out


def catalan(m: int) -> int:
    """Catalan number ``C_m``."""
    return math.comb(2 * m, m) // (m + 1)
