"""Mallows measure on permutations and the two insertion samplers.

Permutations are one-line arrays of the values ``1..n``.  The Mallows
measure is ``mu(pi) = q**Inv(pi) / [n]_q!``.
"""

from __future__ import annotations

from itertools import permutations as _all_permutations
import math

import numpy as np

from .qcomb import log_q_factorial, _check_q

__all__ = [
    "Permutation",
    "check_permutation",
    "inversions",
    "mallows_log_pmf",
    "uniform_from_draws",
    "mallows_from_draws",
    "sample_uniform_fy",
    "sample_mallows_fy",
    "sample_mallows_batch",
    "exact_distribution",
    "format_permutation",
]

Permutation = np.ndarray


def check_permutation(perm) -> np.ndarray:
    """Validate a one-line permutation of ``1..n`` and return it as int64."""
    a = np.asarray(perm, dtype=np.int64).ravel()
    n = a.size
    if n == 0:
        raise ValueError("empty permutation")
    seen = np.zeros(n + 1, dtype=bool)
    if a.min() < 1 or a.max() > n:
        raise ValueError("values must lie in 1..n")
    seen[a] = True
    if not seen[1:].all():
        raise ValueError("values are not a bijection of 1..n")
    return a


def _merge_count(a: list) -> tuple[list, int]:
    # bottom-up merge sort counting pairs i<j with a[i] > a[j]
    n = len(a)
    src = list(a)
    dst = [0] * n
    width = 1
    total = 0
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if src[i] <= src[j]:
                    dst[k] = src[i]
                    i += 1
                else:
                    dst[k] = src[j]
                    total += mid - i
                    j += 1
                k += 1
            dst[k:k + mid - i] = src[i:mid]
            k += mid - i
            dst[k:k + hi - j] = src[j:hi]
        src, dst = dst, src
        width *= 2
    return src, total


def inversions(perm) -> int:
    """Number of pairs ``i < j`` with ``perm[i] > perm[j]`` (merge count)."""
    a = check_permutation(perm)
    return _merge_count(a.tolist())[1]


def mallows_log_pmf(perm, q: float) -> float:
    """Log-probability of ``perm`` under the Mallows measure ``mu_{n,q}``.

    Examples
    --------
    >>> round(math.exp(mallows_log_pmf([2, 1], 0.5)), 12)
    0.333333333333
    """
    q = _check_q(q)
    a = check_permutation(perm)
    inv = _merge_count(a.tolist())[1]
    lq = 0.0 if q == 1.0 else inv * math.log(q)
    return lq - log_q_factorial(a.size, q)


def _insert(ks, positions):
    out = [1]
    for m, pos in zip(range(2, len(ks) + 2), positions):
        if pos == m:
            out.append(m)
        else:
            out.insert(pos - 1, m)
    return np.asarray(out, dtype=np.int64)


def uniform_from_draws(ks) -> np.ndarray:
    """Run the uniform insertion algorithm on explicit draws.

    ``ks[m-2]`` is the draw for ``m = 2..n`` and must lie in ``1..m``.  The
    value ``m`` is appended when ``k = m`` and inserted at 1-based position
    ``k`` otherwise.

    >>> uniform_from_draws([2, 2, 3]).tolist()
    [1, 3, 4, 2]
    """
    ks = [int(k) for k in ks]
    for m, k in zip(range(2, len(ks) + 2), ks):
        if not 1 <= k <= m:
            raise ValueError(f"draw {k} out of range for m={m}")
    return _insert(ks, ks)


def mallows_from_draws(ks) -> np.ndarray:
    """Run the Mallows insertion algorithm on explicit geometric draws.

    For ``m = 2..n`` the draw ``k >= 1`` is reduced to
    ``j = 1 + (k - 1) mod m``; ``j = 1`` appends ``m`` and any other ``j``
    inserts ``m`` at 1-based position ``m + 1 - j``, which creates exactly
    ``j - 1`` new inversions.
    """
    ks = [int(k) for k in ks]
    if any(k < 1 for k in ks):
        raise ValueError("geometric draws start at 1")
    pos = []
    for m, k in zip(range(2, len(ks) + 2), ks):
        j = 1 + (k - 1) % m
        pos.append(m if j == 1 else m + 1 - j)
    return _insert(ks, pos)


def _geometric(u, q):
    # k = 1 + floor(ln U / ln q) with U in (0, 1], P(k = t) = (1-q) q^(t-1)
    return 1 + np.floor(np.log(u) / math.log(q)).astype(np.int64)


def sample_uniform_fy(n: int, rng) -> np.ndarray:
    """Uniform permutation of ``1..n`` by the insertion variant of Fisher-Yates.

    Consumes ``n - 1`` uniforms from ``rng``; the draw for step ``m`` is
    ``k = 1 + floor(U m)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    u = rng.random(n - 1)
    m = np.arange(2, n + 1)
    ks = 1 + np.floor(u * m).astype(np.int64)
    return _insert(ks.tolist(), ks.tolist())


def sample_mallows_fy(n: int, q: float, rng) -> np.ndarray:
    """Mallows-distributed permutation by geometric insertion.

    Parameters
    ----------
    n : int
        Length of the permutation.
    q : float
        Parameter in the open interval ``(0, 1)``; use
        :func:`sample_uniform_fy` for ``q = 1``.
    rng : numpy.random.Generator
        Stream; ``n - 1`` uniforms are consumed.

    Returns
    -------
    numpy.ndarray
        One-line permutation with law ``mu_{n,q}``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1); q = 1 is the uniform sampler")
    u = 1.0 - rng.random(n - 1)
    ks = _geometric(u, q)
    return mallows_from_draws(ks.tolist()) if n > 1 else np.array([1])


def sample_mallows_batch(n: int, q: float, size: int, rng) -> np.ndarray:
    """Draw ``size`` permutations at once, vectorized over samples.

    Row ``i`` equals what the ``i``-th consecutive call of
    :func:`sample_mallows_fy` (or :func:`sample_uniform_fy` when ``q = 1``)
    on the same stream would return.  Work is ``O(size * n**2)``, so this is
    meant for small ``n``.
    """
    q = _check_q(q)
    if n < 1:
        raise ValueError("n must be positive")
    out = np.ones((size, 1), dtype=np.int64)
    if n == 1:
        return out
    if q == 1.0:
        u = rng.random((size, n - 1))
    else:
        u = 1.0 - rng.random((size, n - 1))
    rows = np.arange(size)[:, None]
    for m in range(2, n + 1):
        if q == 1.0:
            pos = 1 + np.floor(u[:, m - 2] * m).astype(np.int64)
        else:
            j = 1 + (_geometric(u[:, m - 2], q) - 1) % m
            pos = np.where(j == 1, m, m + 1 - j)
        col = np.arange(m)[None, :]
        p0 = (pos - 1)[:, None]
        src = np.where(col < p0, col, col - 1)
        new = out[rows, np.clip(src, 0, m - 2)]
        out = np.where(col == p0, m, new)
    return out


def exact_distribution(n: int, q: float) -> dict:
    """Exact Mallows law on ``S_n`` by enumeration (``n <= 8``).

    Returns a dict mapping permutation tuples to probabilities.
    """
    q = _check_q(q)
    if n < 1 or n > 8:
        raise ValueError("exact enumeration is limited to 1 <= n <= 8")
    perms = list(_all_permutations(range(1, n + 1)))
    inv = np.array([_merge_count(list(p))[1] for p in perms], dtype=float)
    w = q ** inv
    w /= math.fsum(w)
    return dict(zip(perms, w.tolist()))


def format_permutation(perm) -> str:
    """One-line space-separated serialization."""
    return " ".join(str(int(v)) for v in perm)
