"""One- and two-point eigenvalue densities and the diagonal overlap density.

Conventions: ``A`` is ``N x N`` complex Ginibre with ``E|a_jk|^2 = 1/N``,
``x = N |z|^2`` and every density is normalized per eigenvalue, so that
``R1`` integrates to 1 and ``O1`` integrates to ``(N + 1)/2``.

Closed forms used throughout::

    R1(z) = Q(N, x) / pi
    O1(z) = (1/pi) e^{-x} sum_{n<N} (N - n) x^n / n!
    R2(z1, z2) = pi^-2 e^{-N|z1|^2 - N|z2|^2} det[K_N(z_j conj(z_k))]

with ``Q`` the regularized upper incomplete gamma function and
``K_N(w) = sum_{n<N} (N w)^n / n!``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc, gammaincc, gammaln, logsumexp, ndtr

__all__ = [
    "log_exp_partial_sum",
    "r1_density",
    "o1_density",
    "o1_recursion",
    "edge_scaling",
    "r2_density",
    "edge_c2",
    "complex_normal_cdf",
    "radial_integral",
    "o1_moment_exact",
]

_CHUNK = 1 << 22


def _weighted_log_sum(N, x, logw=None):
    # ln sum_{n<N} w_n x^n / n!, vectorized over x, chunked over the grid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = np.arange(N, dtype=float)
    base = -gammaln(n + 1) + (0.0 if logw is None else logw)
    out = np.empty_like(x)
    step = max(1, _CHUNK // max(N, 1))
    for s in range(0, x.size, step):
        xs = x[s:s + step]
        with np.errstate(divide="ignore"):
            lx = np.log(xs)[:, None]
        t = n[None, :] * lx + base[None, :]
        t[:, 0] = base[0]
        out[s:s + step] = logsumexp(t, axis=1)
    return out


def log_exp_partial_sum(N: int, x):
    """``ln sum_{n<N} x^n / n!`` for ``x >= 0`` (vectorized).

    Uses ``x + ln Q(N, x)``; where ``Q`` underflows the sum is taken in log
    domain term by term.
    """
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).astype(float)
    Q = gammaincc(N, flat)
    with np.errstate(divide="ignore"):
        out = flat + np.log(Q)
    bad = ~(Q > 1e-280)
    if bad.any():
        out[bad] = _weighted_log_sum(N, flat[bad])
    return out.reshape(x.shape) if x.ndim else float(out[0])


def _abs2(z):
    z = np.asarray(z)
    return (z.real ** 2 + z.imag ** 2).astype(float)


def _r1_recursion(N, x):
    # D_{n+1} = (x + n + 1) D_n - n x D_{n-1}, D_0 = 1, D_1 = 1 + x, carried
    # with a running log scale; returns ln D_{N-1}
    x = np.asarray(x, dtype=float)
    d_prev = np.ones_like(x)
    d_cur = 1.0 + x
    log_scale = np.zeros_like(x)
    if N == 1:
        return np.zeros_like(x)
    for n in range(1, N - 1):
        d_next = (x + n + 1) * d_cur - n * x * d_prev
        s = np.abs(d_next)
        d_prev = d_cur / s
        d_cur = d_next / s
        log_scale += np.log(s)
    return log_scale + np.log(d_cur)


def r1_density(N: int, z, method: str = "closed_form"):
    """One-point density ``R_N^(1)(z)``.

    Parameters
    ----------
    N : int
        Matrix size.
    z : complex or array_like
        Evaluation points.
    method : {"closed_form", "recursion"}
        ``closed_form`` evaluates ``Q(N, N|z|^2)/pi``; ``recursion`` runs the
        three-term recursion for ``D_{N-1}`` in log domain and multiplies by
        ``N e^{-N|z|^2} / (pi N!)``.
    """
    if N < 1:
        raise ValueError("N must be positive")
    x = N * _abs2(z)
    if method == "closed_form":
        out = gammaincc(N, x) / math.pi
    elif method == "recursion":
        lD = _r1_recursion(N, x)
        out = np.exp(math.log(N) - math.log(math.pi) - gammaln(N + 1) - x + lD)
    else:
        raise ValueError("method must be 'closed_form' or 'recursion'")
    return out if np.ndim(out) else float(out)


def o1_recursion(N: int, x, coefficient: str = "corrected"):
    """``ln G_{N-1}`` from the three-term recursion for the overlap sum.

    ``G_{n+1} = (c_n) G_n - n x G_{n-1}`` with ``G_0 = 1``, ``G_1 = 2 + x``.
    ``coefficient="corrected"`` uses ``c_n = x + n + 2``, which reproduces
    the closed form ``G_m = m! sum_{n<=m} (m + 1 - n) x^n / n!``;
    ``coefficient="literal"`` uses ``c_n = N + n + 2`` (no factor ``|z|^2``),
    kept for comparison.
    """
    x = np.asarray(x, dtype=float)
    if N == 1:
        return np.zeros_like(x)
    g_prev = np.ones_like(x)
    g_cur = 2.0 + x
    log_scale = np.zeros_like(x)
    for n in range(1, N - 1):
        c = (x + n + 2) if coefficient == "corrected" else (N + n + 2.0)
        g_next = c * g_cur - n * x * g_prev
        s = np.abs(g_next)
        g_prev = g_cur / s
        g_cur = g_next / s
        log_scale += np.log(s)
    with np.errstate(invalid="ignore", divide="ignore"):
        return log_scale + np.log(g_cur)


def o1_density(N: int, z, method: str = "closed_form"):
    """Diagonal overlap density ``O_N^(1)(z)``.

    ``closed_form`` evaluates ``(1/pi) e^{-x} sum_{n<N} (N - n) x^n / n!``
    with ``x = N|z|^2``: for ``x <= N`` as ``((N - x) Q(N-1, x) +
    N p(N-1; x)) / pi`` with ``p`` the Poisson mass, which has no
    cancellation there, and for ``x > N`` by a log-domain sum.  The
    ``recursion`` method evaluates ``e^{-x} G_{N-1} / (pi (N-1)!)`` from
    :func:`o1_recursion`.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    x = N * _abs2(z)
    xs = np.atleast_1d(x).astype(float)
    if method == "closed_form":
        out = np.empty_like(xs)
        inner = xs <= N
        xi = xs[inner]
        with np.errstate(divide="ignore"):
            lp = (N - 1) * np.log(np.where(xi > 0, xi, 1.0)) - xi - gammaln(N)
        lp = np.where(xi > 0, lp, -np.inf)
        out[inner] = ((N - xi) * gammaincc(N - 1, xi) + N * np.exp(lp)) / math.pi
        xo = xs[~inner]
        if xo.size:
            logw = np.log(N - np.arange(N, dtype=float))
            out[~inner] = np.exp(_weighted_log_sum(N, xo, logw) - xo) / math.pi
    elif method in ("recursion", "literal"):
        coef = "corrected" if method == "recursion" else "literal"
        lG = o1_recursion(N, xs, coef)
        out = np.exp(lG - xs - gammaln(N)) / math.pi
    else:
        raise ValueError("method must be 'closed_form', 'recursion' or 'literal'")
    out = out.reshape(np.shape(x))
    return out if out.ndim else float(out)


def edge_scaling(N: int, u, which: str = "R1", form: str = "corrected"):
    """Finite-``N`` density at ``z = 1 - u/sqrt(N)`` and its edge limit.

    Returns
    -------
    finite_N, limit : float or ndarray
        For ``R1`` the limit is ``Phi(2u)/pi``.  For ``O1`` the corrected
        limit is ``(sqrt(N)/pi)[exp(-2u^2)/sqrt(2 pi) + 2u Phi(2u)]``;
        ``form="literal"`` returns the variant with ``-2u Phi(-2u)`` in place
        of the last term, which differs from it by ``2u sqrt(N)/pi``.
    """
    u = np.asarray(u, dtype=float)
    z = 1.0 - u / math.sqrt(N)
    if which == "R1":
        return r1_density(N, z), ndtr(2 * u) / math.pi
    if which == "O1":
        gauss = np.exp(-2 * u * u) / math.sqrt(2 * math.pi)
        if form == "corrected":
            lim = math.sqrt(N) / math.pi * (gauss + 2 * u * ndtr(2 * u))
        elif form == "literal":
            lim = math.sqrt(N) / math.pi * (gauss - 2 * u * ndtr(-2 * u))
        else:
            raise ValueError("form must be 'corrected' or 'literal'")
        return o1_density(N, z), lim
    raise ValueError("which must be 'R1' or 'O1'")


def _scaled_kernel(N, z1, z2):
    # e^{-N(|z1|^2 + |z2|^2)/2} K_N(z1 conj z2), summed in scaled form
    w = N * z1 * np.conj(z2)
    shift = N * (abs(z1) ** 2 + abs(z2) ** 2) / 2
    if w == 0:
        return complex(math.exp(-shift))
    n = np.arange(N, dtype=float)
    logmag = n * math.log(abs(w)) - gammaln(n + 1) - shift
    phase = n * np.angle(w)
    return complex(np.sum(np.exp(logmag + 1j * phase)))


def r2_density(N: int, z1: complex, z2: complex):
    """Two-point density ``R2`` and connected part ``C2 = R2 - R1 R1``.

    Both carry the per-eigenvalue normalization of ``R1``, so ``R2``
    integrates to ``(N - 1)/N`` over both variables and
    ``C2 = -pi^-2 e^{-N|z1|^2 - N|z2|^2} |K_N(z1 conj(z2))|^2``.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    a1 = gammaincc(N, N * abs(z1) ** 2)
    a2 = gammaincc(N, N * abs(z2) ** 2)
    k12 = _scaled_kernel(N, z1, z2)
    c2 = -abs(k12) ** 2 / math.pi ** 2
    r2 = (a1 * a2) / math.pi ** 2 + c2
    return float(r2), float(c2)


def complex_normal_cdf(v):
    """Standard normal CDF extended to complex arguments, ``erfc(-v/sqrt 2)/2``."""
    return 0.5 * erfc(-np.asarray(v, dtype=complex) / math.sqrt(2.0))


def edge_c2(u1, u2, form: str = "corrected"):
    """Edge limit of ``C2`` at ``z_j = 1 - u_j/sqrt(N)``.

    ``corrected``: ``-pi^-2 exp(-|u1 - u2|^2) |Phi(u1 + conj(u2))|^2``;
    ``literal``: ``pi^-2 exp(-|u1 - u2|^2) |Phi(-u1 - conj(u2))|``.
    """
    e = np.exp(-np.abs(np.asarray(u1) - np.asarray(u2)) ** 2) / math.pi ** 2
    s = np.asarray(u1) + np.conj(u2)
    if form == "corrected":
        return -e * np.abs(complex_normal_cdf(s)) ** 2
    if form == "literal":
        return e * np.abs(complex_normal_cdf(-s))
    raise ValueError("form must be 'corrected' or 'literal'")


def _gl_panels(edges, order):
    xg, wg = np.polynomial.legendre.leggauss(order)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        xs.append((b - a) / 2 * xg + (a + b) / 2)
        ws.append((b - a) / 2 * wg)
    return np.concatenate(xs), np.concatenate(ws)


def radial_integral(f, N: int, p: int = 0, order: int = 40, width: float = 12.0) -> float:
    """``int_C |z|^{2p} f(|z|) d^2z`` for a radial density near the disk.

    Gauss-Legendre panels in ``r`` are refined around the edge ``r = 1``
    (panel width ``1/(2 sqrt(N))``) and extend to ``r = 1 + width/sqrt(N)``.
    """
    h = 1.0 / math.sqrt(N)
    inner_end = max(0.0, 1.0 - width * h)
    outer = 1.0 + width * h
    coarse = np.linspace(0.0, inner_end, 9) if inner_end > 0 else np.array([0.0])
    fine = np.linspace(inner_end, outer, int(round(2 * width)) + 1)
    edges = np.unique(np.concatenate([coarse, fine]))
    r, w = _gl_panels(edges, order)
    vals = f(r)
    return float(2 * math.pi * np.sum(w * r ** (2 * p + 1) * vals))


def o1_moment_exact(N: int, p: int) -> float:
    """Exact ``int |z|^{2p} O1 d^2z = sum_{n<N} (N - n) (n + p)! / (n! N^{p+1})``."""
    n = np.arange(N, dtype=float)
    t = np.log(N - n) + gammaln(n + p + 1) - gammaln(n + 1) - (p + 1) * math.log(N)
    return float(np.exp(logsumexp(t)))
