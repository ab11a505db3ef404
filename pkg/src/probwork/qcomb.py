"""q-deformed integers and factorials, and the q-Stirling decomposition.

For ``0 < q <= 1`` the q-integer is ``[n]_q = (1 - q**n) / (1 - q)`` and the
q-factorial is ``[n]_q! = [1]_q [2]_q ... [n]_q``.  With ``q = exp(-beta/n)``
the ratio ``{n}! = [n]_q! / n!`` satisfies

    ln {n}! = n A(beta) + B(beta) + R_n(beta),

where ``A(beta) = int_0^1 ln((1 - exp(-beta y)) / (beta y)) dy``,
``B(beta) = beta/2 + ln((1 - exp(-beta)) / beta) / 2`` and ``R_n -> 0``.

Every factorial-type quantity is returned in log domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import integrate
from scipy.special import gammaln

__all__ = [
    "QParams",
    "q_integer",
    "log_q_factorial",
    "log_q_factorial_ratio",
    "log_expm1_ratio",
    "stirling_coefficients",
    "q_stirling_remainder",
]

_SERIES_EPS = 1e-6
_QUAD_SPLIT = 1e-3


def _check_q(q: float) -> float:
    q = float(q)
    if not (0.0 < q <= 1.0) or math.isnan(q):
        raise ValueError(f"q must lie in (0, 1], got {q!r}")
    return q


@dataclass(frozen=True)
class QParams:
    """Size and deformation parameter of a q-deformed computation.

    Use :meth:`from_beta` when the natural parameter is ``beta``; the
    logarithm of ``q`` is then stored exactly as ``-beta/n``.
    """

    n: int
    q: float
    beta: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        _check_q(self.q)

    @classmethod
    def from_beta(cls, n: int, beta: float) -> "QParams":
        if beta < 0:
            raise ValueError("beta must be nonnegative so that q <= 1")
        return cls(int(n), math.exp(-beta / n), float(beta))

    @property
    def log_q(self) -> float:
        if self.beta is not None:
            return -self.beta / self.n
        return math.log(self.q)


def q_integer(n: int, q: float) -> float:
    """The q-integer ``[n]_q = (1 - q**n)/(1 - q)``.

    Parameters
    ----------
    n : int
        Positive integer.
    q : float
        Deformation parameter in ``(0, 1]``.  ``q = 1`` returns ``n``.

    Returns
    -------
    float

    Notes
    -----
    Close to ``q = 1`` (``1 - q < 1e-6`` with ``n(1 - q)`` small) the value
    is taken from the three-term expansion
    ``n - n(n-1)e/2 + n(n-1)(n-2)e**2/6`` with ``e = 1 - q``; elsewhere it
    is evaluated as ``-expm1(n ln q) / (1 - q)``, which avoids cancellation.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    q = _check_q(q)
    n = int(n)
    eps = 1.0 - q
    if eps == 0.0:
        return float(n)
    if eps < _SERIES_EPS and n * eps < 1e-5:
        return n - n * (n - 1) * eps / 2 + n * (n - 1) * (n - 2) * eps * eps / 6
    return -math.expm1(n * math.log(q)) / eps


def log_expm1_ratio(y):
    """Stable ``ln((1 - exp(-y)) / y)`` for ``y >= 0`` (0 at ``y = 0``)."""
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 1e-4
    ys = np.where(small, 1.0, y)
    big = np.log(-np.expm1(-ys) / ys)
    ser = -y / 2 + y * y / 24 - y ** 4 / 2880
    out = np.where(small, ser, big)
    return out if out.ndim else float(out)


def _log_q_from(q, log_q):
    if log_q is None:
        q = _check_q(q)
        return 0.0 if q == 1.0 else math.log(q)
    if log_q > 0:
        raise ValueError("log_q must be <= 0")
    return float(log_q)


def log_q_factorial_ratio(n: int, q: float | None = None, *, log_q: float | None = None) -> float:
    """``ln({n}!) = ln([n]_q! / n!)`` by exact summation of ``ln([k]_q / k)``.

    Either ``q`` or ``log_q`` must be given; passing ``log_q = -beta/n``
    keeps the parameter exact.  ``n = 0`` returns 0 (empty product).
    """
    if int(n) != n or n < 0:
        raise ValueError("n must be a nonnegative integer")
    lq = _log_q_from(q, log_q)
    n = int(n)
    if n <= 1 or lq == 0.0:
        return 0.0
    y = -lq
    k = np.arange(1, n + 1, dtype=float)
    # [k]_q / k = (1 - e^{-k y}) / (k (1 - e^{-y}))
    terms = log_expm1_ratio(k * y) - log_expm1_ratio(y)
    return float(math.fsum(terms))


def log_q_factorial(n: int, q: float) -> float:
    """Natural log of the q-factorial ``[n]_q!``.

    Parameters
    ----------
    n : int
        Nonnegative integer; ``[0]_q! = 1``.
    q : float
        Deformation parameter in ``(0, 1]``.

    Returns
    -------
    float
        ``sum_{k<=n} ln [k]_q``.  At ``q = 1`` this is ``ln n!``.
    """
    q = _check_q(q)
    if int(n) != n or n < 0:
        raise ValueError("n must be a nonnegative integer")
    return float(gammaln(int(n) + 1)) + log_q_factorial_ratio(n, q)


@lru_cache(maxsize=4096)
def _coefficients(beta: float):
    if beta == 0.0:
        return 0.0, 0.0
    # integrand h(beta*y) with h(x) = ln((1 - e^{-x})/x); series on [0, d]
    d = _QUAD_SPLIT
    b = beta
    head = -b * d ** 2 / 4 + b ** 2 * d ** 3 / 72 - b ** 4 * d ** 5 / 14400
    tail, _ = integrate.quad(lambda y: log_expm1_ratio(b * y), d, 1.0,
                             epsabs=1e-13, epsrel=1e-13, limit=200)
    a = head + tail
    bb = beta / 2 + 0.5 * log_expm1_ratio(beta)
    return float(a), float(bb)


def stirling_coefficients(beta: float) -> tuple[float, float]:
    """Coefficients ``(A(beta), B(beta))`` of the q-Stirling formula.

    ``A`` is computed by adaptive quadrature on ``[1e-3, 1]`` plus the
    integrated Taylor series of the integrand on ``[0, 1e-3]``; ``B`` is the
    closed form.  Both vanish at ``beta = 0``.
    """
    beta = float(beta)
    if not math.isfinite(beta):
        raise ValueError("beta must be finite")
    return _coefficients(beta)


def q_stirling_remainder(n: int, beta: float) -> float:
    """Remainder ``R_n(beta) = ln({n}!) - n A(beta) - B(beta)``.

    ``q = exp(-beta/n)``; the factorial ratio is summed exactly.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    if beta == 0:
        return 0.0
    a, b = stirling_coefficients(beta)
    return log_q_factorial_ratio(n, log_q=-beta / n) - n * a - b
