"""Quadrant counts of the Mallows point process.

Points ``(X_k, Y_k)`` of the Mallows point process are cut by a vertical
line at ``s`` and a horizontal line at ``t`` into four quadrants.  Cell
labels follow the convention

====  ============  ============
cell  x side        y side
====  ============  ============
11    ``x < s``     ``y < t``
12    ``x > s``     ``y < t``
21    ``x < s``     ``y > t``
22    ``x > s``     ``y > t``
====  ============  ============

with areas ``p11 = s t``, ``p12 = (1 - s) t``, ``p21 = s (1 - t)`` and
``p22 = (1 - s)(1 - t)``.  The law of the count vector is the multinomial
law times the correction

    W_q = {n11+n12}! {n11+n21}! {n12+n22}! {n21+n22}!
          / ({n11}! {n12}! {n21}! {n22}! {n}!)  *  q^(n12 n21)

where ``{m}! = [m]_q! / m!``.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import gammaln

from .mallows import exact_distribution
from .qcomb import _check_q, log_q_factorial_ratio, stirling_coefficients

__all__ = [
    "QuadrantCounts",
    "log_prob_exact",
    "log_conditional_prob",
    "w_q",
    "asymptotic_rate",
    "a_tilde",
    "a_tilde_residual",
    "canonical_margins",
    "brute_force_quadrant_law",
    "brute_force_marginal_law",
    "all_count_vectors",
]


@dataclass(frozen=True)
class QuadrantCounts:
    """Counts ``n_ij`` and areas ``p_ij`` of the four quadrants."""

    n11: int
    n12: int
    n21: int
    n22: int
    p11: float = 0.25
    p12: float = 0.25
    p21: float = 0.25
    p22: float = 0.25

    def __post_init__(self):
        for v in self.counts:
            if int(v) != v or v < 0:
                raise ValueError("counts must be nonnegative integers")
        ps = self.areas
        if any(not 0.0 < p < 1.0 for p in ps):
            raise ValueError("areas must lie in (0, 1)")
        if abs(math.fsum(ps) - 1.0) > 1e-12:
            raise ValueError("areas must sum to 1")

    @classmethod
    def from_split(cls, counts, s: float, t: float) -> "QuadrantCounts":
        """Counts with the areas of the split ``(s, t)`` of the unit square."""
        if not (0 < s < 1 and 0 < t < 1):
            raise ValueError("split must lie in the open unit square")
        n11, n12, n21, n22 = counts
        return cls(n11, n12, n21, n22, s * t, (1 - s) * t, s * (1 - t), (1 - s) * (1 - t))

    @property
    def counts(self) -> tuple:
        return (self.n11, self.n12, self.n21, self.n22)

    @property
    def areas(self) -> tuple:
        return (self.p11, self.p12, self.p21, self.p22)

    @property
    def n(self) -> int:
        return int(sum(self.counts))

    @property
    def nu(self) -> np.ndarray:
        """Fractions ``n_ij / n`` as a 2x2 array."""
        return np.array(self.counts, dtype=float).reshape(2, 2) / self.n

    def pair_sums(self) -> tuple:
        """``(n11+n12, n11+n21, n12+n22, n21+n22)``."""
        a, b, c, d = self.counts
        return (a + b, a + c, b + d, c + d)


def _log_qbrace(m, q, log_q):
    return log_q_factorial_ratio(int(m), q, log_q=log_q) if m > 1 else 0.0


def w_q(counts: QuadrantCounts, q: float | None = None, *, log_q: float | None = None) -> float:
    """``ln W_q`` with the convention ``{0}! = 1``.

    Pass ``log_q`` instead of ``q`` when ``q = exp(-beta/n)`` is close to 1.
    """
    if log_q is None:
        q = _check_q(q)
        log_q = math.log(q)
    elif log_q > 0:
        raise ValueError("log_q must be nonpositive")
    if log_q == 0.0:
        return 0.0
    f = lambda m: _log_qbrace(m, None, log_q)
    num = math.fsum(f(m) for m in counts.pair_sums())
    den = math.fsum(f(m) for m in counts.counts) + f(counts.n)
    return num - den + counts.n12 * counts.n21 * log_q


def _log_multinomial(counts: QuadrantCounts) -> float:
    c = counts.counts
    base = gammaln(counts.n + 1) - sum(gammaln(m + 1) for m in c)
    return float(base + math.fsum(m * math.log(p) for m, p in zip(c, counts.areas) if m))


def log_prob_exact(counts: QuadrantCounts, q: float | None = None, *,
                   log_q: float | None = None) -> float:
    """Log probability of the count vector: log-multinomial plus ``ln W_q``.

    At ``q = 1`` this is the log-multinomial exactly.
    """
    if log_q is None:
        _check_q(q)
    return _log_multinomial(counts) + w_q(counts, q, log_q=log_q)


def _log_binom_pmf(n, k, p):
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
                 + k * math.log(p) + (n - k) * math.log1p(-p))


def log_conditional_prob(counts: QuadrantCounts, q: float | None = None, *,
                         log_q: float | None = None) -> float:
    """Law of ``n11`` given the margins ``a = n11 + n12`` and ``b = n11 + n21``.

    :func:`log_prob_exact` factors as ``Bin(n, t)(a) Bin(n, s)(b)`` times a
    hypergeometric law deformed by ``W_q``; this returns the last factor,
    which is the law seen when the margins are fixed.
    """
    n = counts.n
    a = counts.n11 + counts.n12
    b = counts.n11 + counts.n21
    t = counts.p11 + counts.p12
    s = counts.p11 + counts.p21
    return (log_prob_exact(counts, q, log_q=log_q)
            - _log_binom_pmf(n, a, t) - _log_binom_pmf(n, b, s))


def _check_nu(nu) -> np.ndarray:
    nu = np.asarray(nu, dtype=float).reshape(2, 2)
    if np.any(nu <= 0):
        raise ValueError("all fractions must be positive")
    if abs(nu.sum() - 1.0) > 1e-12:
        raise ValueError("fractions must sum to 1")
    return nu


def _pair_sums(nu):
    return (nu[0, 0] + nu[0, 1], nu[0, 0] + nu[1, 0], nu[0, 1] + nu[1, 1], nu[1, 0] + nu[1, 1])


def _A(x):
    return stirling_coefficients(float(x))[0]


def _B(x):
    return stirling_coefficients(float(x))[1]


def asymptotic_rate(nu, beta: float) -> float:
    """Limit of ``(1/n) ln W_q`` for ``q = exp(-beta/n)`` and ``n_ij / n -> nu_ij``.

    ``-beta nu12 nu21 + sum_sums sigma A(beta sigma) - sum nu A(beta nu) - A(beta)``.

    Raises
    ------
    ValueError
        If some ``nu_ij <= 0``.
    """
    nu = _check_nu(nu)
    sums = math.fsum(sg * _A(beta * sg) for sg in _pair_sums(nu))
    cells = math.fsum(v * _A(beta * v) for v in nu.ravel())
    return -beta * nu[0, 1] * nu[1, 0] + sums - cells - _A(beta)


def a_tilde(nu, beta: float, p, n: int, form: str = "corrected") -> float:
    """Exponent of the Gaussian-prefactor approximation of the count law.

    The probability is approximated by
    ``sqrt(2 pi n) / prod sqrt(2 pi n_ij) * exp(A~)`` with ``n_ij = n nu_ij``.

    ``form="corrected"`` includes every term of order ``n`` and ``1``:

        A~ = n (ln n - sum nu ln n_ij) + sum n_ij ln p_ij + n * rate
             + sum_sums B(beta sigma) - sum B(beta nu) - B(beta)

    where ``rate`` is :func:`asymptotic_rate`.  ``form="literal"`` is the
    shorter expression ``n (ln n - sum nu ln n_ij + rate + A(beta))``
    that leaves out the area powers, the ``-A(beta)`` term and the
    constants; it is kept for comparison.
    """
    nu = _check_nu(nu)
    p = np.asarray(p, dtype=float).reshape(2, 2)
    if n < 1:
        raise ValueError("n must be positive")
    nij = n * nu
    entropy = n * (math.log(n) - math.fsum((nu * np.log(nij)).ravel()))
    rate = asymptotic_rate(nu, beta)
    if form == "literal":
        return entropy + n * (rate + _A(beta))
    if form != "corrected":
        raise ValueError("form must be 'corrected' or 'literal'")
    powers = math.fsum((nij * np.log(p)).ravel())
    consts = (math.fsum(_B(beta * sg) for sg in _pair_sums(nu))
              - math.fsum(_B(beta * v) for v in nu.ravel()) - _B(beta))
    return entropy + powers + n * rate + consts


def a_tilde_residual(counts: QuadrantCounts, beta: float, form: str = "corrected") -> float:
    """``log_prob_exact - [ln prefactor + A~]`` at ``q = exp(-beta/n)``."""
    n = counts.n
    if min(counts.counts) < 1:
        raise ValueError("residual needs all counts positive")
    pref = 0.5 * math.log(2 * math.pi * n) - 0.5 * math.fsum(math.log(2 * math.pi * m) for m in counts.counts)
    exact = log_prob_exact(counts, log_q=-beta / n)
    return exact - pref - a_tilde(counts.nu, beta, np.reshape(counts.areas, (2, 2)), n, form)


def canonical_margins(n: int, s: float, t: float) -> tuple[int, int]:
    """``(a, b)`` = numbers of lattice points ``(i - 1/2)/n`` below ``t`` and ``s``.

    The split must avoid the lattice.
    """
    grid = (np.arange(1, n + 1) - 0.5) / n
    if np.any(np.isclose(grid, s)) or np.any(np.isclose(grid, t)):
        raise ValueError("split lines must lie strictly between lattice points")
    return int(np.sum(grid < t)), int(np.sum(grid < s))


def _perm_table(n, q):
    d = exact_distribution(n, q)
    perms = np.array(list(d.keys()), dtype=np.int64)
    probs = np.array(list(d.values()))
    return perms, probs


def _law_for_margins(perms, probs, n, a, b):
    # points (x_i, y_i) = ((pi(i) - 1/2)/n, (i - 1/2)/n); y < t <=> i <= a,
    # x < s <=> pi(i) <= b
    n11 = np.sum(perms[:, :a] <= b, axis=1)
    law = {}
    for k in np.unique(n11):
        v = (k, a - k, b - k, n - a - b + k)
        law[tuple(int(x) for x in v)] = float(math.fsum(probs[n11 == k]))
    return law


def brute_force_quadrant_law(n: int, q: float, s: float, t: float) -> dict:
    """Exact count law for the canonical embedding, by enumeration of ``S_n``.

    The embedding is ``y_i = (i - 1/2)/n`` and ``x_i = (pi(i) - 1/2)/n``,
    so the margins ``a`` and ``b`` are fixed by ``(s, t)``.  Returns a dict
    mapping ``(n11, n12, n21, n22)`` to its probability (``n <= 8``).
    """
    a, b = canonical_margins(n, s, t)
    perms, probs = _perm_table(n, q)
    return _law_for_margins(perms, probs, n, a, b)


def brute_force_marginal_law(n: int, q: float, s: float, t: float) -> dict:
    """Count law when the margins are random.

    The ``y`` coordinates are iid uniform and the rank rule assigns the
    Mallows permutation, so ``a ~ Bin(n, t)`` and ``b ~ Bin(n, s)``
    independently; each conditional law is enumerated as in
    :func:`brute_force_quadrant_law`.
    """
    perms, probs = _perm_table(n, q)
    law = {}
    for a in range(n + 1):
        for b in range(n + 1):
            w = math.exp(_log_binom_pmf(n, a, t) + _log_binom_pmf(n, b, s))
            for key, v in _law_for_margins(perms, probs, n, a, b).items():
                law[key] = law.get(key, 0.0) + w * v
    return law


def all_count_vectors(n: int):
    """Every ``(n11, n12, n21, n22)`` of nonnegative integers summing to ``n``."""
    for a in range(n + 1):
        for b in range(n + 1 - a):
            for c in range(n + 1 - a - b):
                yield (a, b, c, n - a - b - c)
