"""Kac's walk on SO(n), the Gaussian thermostat chain and their mixture.

Kac's walk multiplies on the left by a Givens rotation ``R_ij(theta)`` in a
uniformly chosen coordinate plane ``i < j`` with ``theta`` uniform on
``(-pi, pi]``.  Its invariant law is Haar measure on SO(n).

The thermostat chain acts on an ``n x n`` real matrix whose columns are
particle velocity vectors: a uniformly chosen column ``j`` is replaced by
``g_j cos(theta) + omega sin(theta)`` with ``omega ~ N(0, I/beta)``.  The
invariant law is iid ``N(0, 1/beta)`` entries.

In the coupled chain the particles also collide among themselves: with
probability ``lambda/(lambda + mu)`` two columns are rotated by a Kac
rotation (right multiplication by ``R_ij(theta)^T``), otherwise a
thermostat step is taken.  Column collisions keep the Gaussian product law
invariant and keep orthogonal matrices orthogonal.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numba
import numpy as np

__all__ = [
    "ThermoParams",
    "apply_rotation",
    "kac_step",
    "kac_run",
    "kac_spectral_gap",
    "thermostat_step",
    "thermostat_gap",
    "coupled_step",
    "sample_gaussian_matrix",
    "sample_haar_orthogonal",
    "orthogonality_error",
    "reorthonormalize",
]


@dataclass(frozen=True)
class ThermoParams:
    """Inverse variance ``beta``, thermostat rate ``mu`` and Kac rate ``lam``."""

    beta: float = 1.0
    mu: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.mu < 0 or self.lam < 0 or self.mu + self.lam <= 0:
            raise ValueError("rates must be nonnegative with mu + lam > 0")


def _angle(u):
    # uniform on (-pi, pi] from u uniform on [0, 1)
    return math.pi - 2.0 * math.pi * u


def apply_rotation(G: np.ndarray, i: int, j: int, theta: float, inplace: bool = False) -> np.ndarray:
    """Left-multiply by the rotation ``R_ij(theta)`` (0-based ``i != j``).

    Rows ``i`` and ``j`` become ``cos*row_i + sin*row_j`` and
    ``-sin*row_i + cos*row_j``.  ``O(n)`` work.
    """
    if i == j:
        raise IndexError("rotation plane needs two distinct indices")
    n = G.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError("rotation index out of range")
    out = G if inplace else G.copy()
    c, s = math.cos(theta), math.sin(theta)
    ri = out[i].copy()
    out[i] = c * ri + s * out[j]
    out[j] = -s * ri + c * out[j]
    return out


def _draw_pair(rng, n):
    i, j = rng.choice(n, size=2, replace=False)
    return (int(i), int(j)) if i < j else (int(j), int(i))


def kac_step(G: np.ndarray, rng, inplace: bool = False) -> np.ndarray:
    """One step of Kac's walk: uniform plane ``i < j``, uniform angle."""
    n = G.shape[0]
    if n < 2:
        raise ValueError("Kac's walk needs n >= 2")
    i, j = _draw_pair(rng, n)
    theta = _angle(rng.random())
    return apply_rotation(G, i, j, theta, inplace=inplace)


@numba.njit(cache=True, nogil=True)
def _kac_kernel(G, ii, jj, th):
    n = G.shape[1]
    for s in range(ii.size):
        i = ii[s]
        j = jj[s]
        c = math.cos(th[s])
        sn = math.sin(th[s])
        for k in range(n):
            a = G[i, k]
            b = G[j, k]
            G[i, k] = c * a + sn * b
            G[j, k] = -sn * a + c * b


def kac_run(G: np.ndarray, steps: int, rng, chunk: int = 1 << 16) -> np.ndarray:
    """Apply ``steps`` Kac steps to ``G`` in place (compiled kernel).

    Per chunk the stream supplies ``i`` and an offset ``d`` in ``1..n-1``
    (``j = (i + d) mod n``, a uniform unordered pair) and one angle uniform.
    """
    n = G.shape[0]
    left = int(steps)
    while left > 0:
        c = min(left, chunk)
        i = rng.integers(0, n, size=c)
        j = (i + rng.integers(1, n, size=c)) % n
        th = math.pi - 2.0 * math.pi * rng.random(c)
        _kac_kernel(G, i, j, th)
        left -= c
    return G


def kac_spectral_gap(n: int) -> float:
    """Spectral gap ``(n + 2) / (2 (n - 1) n)`` of Kac's walk on SO(n)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return (n + 2) / (2.0 * (n - 1) * n)


def thermostat_gap(n: int, mu: float) -> float:
    """Spectral gap ``mu / (2n)`` of the pure thermostat chain."""
    return mu / (2.0 * n)


def thermostat_step(G: np.ndarray, params: ThermoParams, rng, inplace: bool = False,
                    theta: float | None = None) -> np.ndarray:
    """Mix one uniformly chosen column with fresh Gaussian noise.

    Parameters
    ----------
    G : numpy.ndarray
        ``n x n`` real matrix.
    params : ThermoParams
        Only ``beta`` is used.
    rng : numpy.random.Generator
    theta : float, optional
        Fixed angle, for testing; drawn uniformly when omitted.
    """
    n = G.shape[1]
    out = G if inplace else G.copy()
    j = int(rng.integers(0, n))
    th = _angle(rng.random()) if theta is None else theta
    omega = rng.standard_normal(G.shape[0]) / math.sqrt(params.beta)
    out[:, j] = out[:, j] * math.cos(th) + omega * math.sin(th)
    return out


def coupled_step(G: np.ndarray, params: ThermoParams, rng, inplace: bool = False) -> np.ndarray:
    """Collision with probability ``lam/(lam + mu)``, thermostat otherwise.

    A collision rotates two columns of ``G``; together with a thermostat
    step at most two columns change, so ``rank(G - G') <= 2``.
    """
    p_kac = params.lam / (params.lam + params.mu)
    if rng.random() < p_kac:
        out = G if inplace else G.copy()
        n = G.shape[1]
        i, j = _draw_pair(rng, n)
        th = _angle(rng.random())
        c, s = math.cos(th), math.sin(th)
        ci = out[:, i].copy()
        out[:, i] = c * ci + s * out[:, j]
        out[:, j] = -s * ci + c * out[:, j]
        return out
    return thermostat_step(G, params, rng, inplace=inplace)


def sample_gaussian_matrix(n: int, beta: float, rng, cols: int | None = None) -> np.ndarray:
    """Matrix with iid ``N(0, 1/beta)`` entries (``n x cols``, default square)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return rng.standard_normal((n, n if cols is None else cols)) / math.sqrt(beta)


def sample_haar_orthogonal(n: int, rng) -> np.ndarray:
    """Haar-distributed element of SO(n).

    QR of a Gaussian matrix with the signs of ``R``'s diagonal moved into
    ``Q``; one column is flipped when needed so that ``det = +1``.
    """
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def orthogonality_error(G: np.ndarray) -> float:
    """``max |G^T G - I|``."""
    return float(np.max(np.abs(G.T @ G - np.eye(G.shape[1]))))


def reorthonormalize(G: np.ndarray) -> np.ndarray:
    """Nearest orthogonal matrix via the polar factor of ``G``."""
    u, _, vt = np.linalg.svd(G)
    return u @ vt
