"""Bulk overlap formulas, the constraint decomposition, the adiabatic main
term and the perturbation series for its correction factor."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import gammaincc, gammaln

from .densities import o1_density, o1_moment_exact, radial_integral

__all__ = [
    "cm_bulk_o2",
    "cm_bulk_o2_scaling",
    "bulk_profile",
    "ConstraintReport",
    "constraint_check",
    "bulk_o2_integral",
    "bulk_log_coefficient",
    "AdiabaticResult",
    "adiabatic_main_term",
    "perturbation_terms",
    "perturbation_series",
    "TARGET_CONSTANT",
]

TARGET_CONSTANT = math.sqrt(2 * math.pi) / math.e


def cm_bulk_o2(z1, z2):
    """Bulk off-diagonal overlap ``-(1 - z1 conj(z2)) / (pi^2 |z1 - z2|^4)``."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    d = np.abs(z1 - z2)
    if np.any(d == 0):
        raise ValueError("bulk formula is singular at z1 == z2")
    out = -(1 - z1 * np.conj(z2)) / (math.pi ** 2 * d ** 4)
    return out if out.ndim else complex(out)


def bulk_profile(t):
    """``g(t) = (1 - (1 + t) e^{-t}) / t^2`` with its series near ``t = 0``.

    ``g(0) = 1/2`` and ``int_0^inf g = 1``.
    """
    t = np.asarray(t, dtype=float)
    small = t < 1e-3
    ts = np.where(small, 1.0, t)
    big = (-np.expm1(-ts) - ts * np.exp(-ts)) / ts ** 2
    ser = 0.5 - t / 3 + t * t / 8 - t ** 3 / 30
    out = np.where(small, ser, big)
    return out if out.ndim else float(out)


def cm_bulk_o2_scaling(z, omega):
    """Scaling form ``-pi^-2 (1 - |z|^2) g(|omega|^2)`` of ``N^-2 O2``.

    ``omega = sqrt(N)(z1 - z2)`` and ``g`` is :func:`bulk_profile`; at
    ``omega = 0`` the value is ``-(1 - |z|^2) / (2 pi^2)``.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise ValueError("scaling form needs |z| < 1")
    t = np.abs(np.asarray(omega, dtype=complex)) ** 2
    out = -(1 - np.abs(z) ** 2) * bulk_profile(t) / math.pi ** 2
    return out if np.ndim(out) else float(out)


@dataclass
class ConstraintReport:
    """Decomposition of ``int |z|^{2p} O1 + int int z1^p conj(z2)^p O2``."""

    N: int
    p: int
    o1_integral: float
    o1_exact: float
    leading: float
    o1_correction: float
    o2_integral: float | None
    o2_mode: str
    total: float | None
    log_coefficient: float | None = None


def _o2_exact_integral(N, p, order=24):
    # int int z1^p conj(z2)^p O2 over C^2 using rotation invariance:
    # (2 pi) int r1 dr1 int r2 dr2 int dphi (r1 r2)^p e^{i p phi} O2(r1 e^{i phi}, r2)
    from .overlaps import o2_density_exact
    R = 1.0 + 10.0 / math.sqrt(N)
    edges = np.linspace(0.0, R, 7)
    xg, wg = np.polynomial.legendre.leggauss(order)
    r = np.concatenate([(b - a) / 2 * xg + (a + b) / 2 for a, b in zip(edges[:-1], edges[1:])])
    wr = np.concatenate([(b - a) / 2 * wg for a, b in zip(edges[:-1], edges[1:])])
    nphi = 4 * order
    phi = 2 * math.pi * (np.arange(nphi) + 0.5) / nphi
    R1, R2, PH = np.meshgrid(r, r, phi, indexing="ij")
    W = wr[:, None, None] * wr[None, :, None] * (2 * math.pi / nphi)
    vals = o2_density_exact(N, (R1 * np.exp(1j * PH)).ravel(), R2.ravel().astype(complex))
    vals = vals.reshape(R1.shape)
    integrand = W * R1 * R2 * (R1 * R2) ** p * np.exp(1j * p * PH) * vals
    return complex(2 * math.pi * integrand.sum())


def bulk_o2_integral(N: int, p: int, order: int = 48) -> float:
    """Integral of ``z1^p conj(z2)^p`` against the bulk model of ``O2``.

    The model is ``-pi^-2 (1 - z1 conj(z2)) N^2 g(N |z1 - z2|^2)`` on the
    unit disk squared: it equals the bulk formula away from the diagonal
    and the scaling form near it.  With ``z1 = r`` real and
    ``z2 = r + rho e^{-i phi}`` the angular integral over the part of the
    circle inside the disk is done in closed form and the ``(r, rho)``
    integral by composite Gauss-Legendre panels refined on the ``1/sqrt N``
    scale.
    """
    xg, wg = np.polynomial.legendre.leggauss(order)
    s = 1.0 / math.sqrt(N)
    # r panels, refined near the rim
    r_edges = np.unique(np.concatenate([np.linspace(0, 0.9, 10), 1 - np.geomspace(0.1, 1e-7, 25), [1.0]]))
    total = 0.0
    coef_cache = {}
    binom = [math.comb(p, m) for m in range(p + 1)]
    for a, b in zip(r_edges[:-1], r_edges[1:]):
        r = (b - a) / 2 * xg + (a + b) / 2
        wr = (b - a) / 2 * wg
        for ri, wri in zip(r, wr):
            rho_edges = np.concatenate([[0.0], s * np.array([0.25, 0.5, 1, 2, 4, 8, 16, 32])])
            rho_edges = rho_edges[rho_edges < 1 - ri]
            tail = np.geomspace(max(rho_edges[-1], 1e-12), 1 - ri, 12)[1:] if rho_edges[-1] < 1 - ri else []
            rho_edges = np.concatenate([rho_edges, tail, np.linspace(1 - ri, 1 + ri, 13)[1:]])
            rho_edges = np.unique(rho_edges)
            rho = np.concatenate([(d - c) / 2 * xg + (c + d) / 2 for c, d in zip(rho_edges[:-1], rho_edges[1:])])
            wrho = np.concatenate([(d - c) / 2 * wg for c, d in zip(rho_edges[:-1], rho_edges[1:])])
            # arc where |r + rho e^{i phi}| < 1: cos(phi) < c
            with np.errstate(divide="ignore", invalid="ignore"):
                c = (1 - ri * ri - rho * rho) / (2 * ri * rho)
            c = np.where(rho == 0, 2.0, c) if ri > 0 else np.where(rho < 1, 2.0, -2.0)
            alpha = np.arccos(np.clip(c, -1, 1))
            alpha = np.where(c >= 1, 0.0, np.where(c <= -1, math.pi, alpha))

            def arc(k):
                # int over the arc of e^{-i k phi} (real by symmetry)
                if k == 0:
                    return 2 * math.pi - 2 * alpha
                return -2 * np.sin(k * alpha) / k

            # polynomial in e^{-i phi}: r^p (r + rho e^{-i phi})^p (1 - r^2 - r rho e^{-i phi})
            poly = np.zeros((p + 2, rho.size))
            for m in range(p + 1):
                cm = ri ** p * binom[m] * ri ** (p - m) * rho ** m
                poly[m] += cm * (1 - ri * ri)
                poly[m + 1] -= cm * ri * rho
            ang = sum(poly[k] * arc(k) for k in range(p + 2))
            kern = N * N * bulk_profile(N * rho * rho)
            total += wri * ri * np.sum(wrho * rho * kern * ang)
    return float(-2 * math.pi * total / math.pi ** 2)


def bulk_log_coefficient(p: int, Ns=(1e3, 1e4, 1e5, 1e6)) -> float:
    """Coefficient of ``ln N`` in :func:`bulk_o2_integral` after removing the
    leading ``-N/((p+1)(p+2))`` term, by least squares on
    ``a + b ln N + c / sqrt(N)``."""
    Ns = np.asarray(Ns, dtype=float)
    y = np.array([bulk_o2_integral(int(n), p) + n / ((p + 1) * (p + 2)) for n in Ns])
    X = np.column_stack([np.ones_like(Ns), np.log(Ns), 1 / np.sqrt(Ns)])
    sol, *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(sol[1])


def constraint_check(N: int, p: int, o2_mode: str = "none", order: int = 24) -> ConstraintReport:
    """Terms of the constraint ``int |z|^{2p} O1 + int int z1^p conj(z2)^p O2``.

    ``o1_integral`` is a radial Gauss-Legendre quadrature of the exact
    density and ``o1_correction = o1_integral - N/((p+1)(p+2))``.

    ``o2_mode``:

    * ``"none"``: only the ``O1`` part.
    * ``"exact"``: quadrature of :func:`o2_density_exact` (``N <= 12``)
      with ``order`` Gauss-Legendre nodes per radial panel.
    * ``"bulk"``: the bulk model integral and its ``ln N`` coefficient.
    """
    if N < 2 or p < 0:
        raise ValueError("need N >= 2 and p >= 0")
    o1 = radial_integral(lambda r: o1_density(N, r), N, p)
    exact = o1_moment_exact(N, p)
    lead = N / ((p + 1) * (p + 2))
    o2 = None
    logc = None
    if o2_mode == "exact":
        if N > 12:
            raise ValueError("exact O2 quadrature limited to N <= 12")
        o2 = _o2_exact_integral(N, p, order).real
    elif o2_mode == "bulk":
        o2 = bulk_o2_integral(N, p)
        logc = bulk_log_coefficient(p)
    elif o2_mode != "none":
        raise ValueError("o2_mode must be 'none', 'exact' or 'bulk'")
    total = None if o2 is None else o1 + o2
    return ConstraintReport(N, p, o1, exact, lead, o1 - lead, o2, o2_mode, total, logc)


@dataclass
class AdiabaticResult:
    """Log-domain pieces of the adiabatic main term ``M_N(r)``."""

    N: int
    r: float
    log_main: float
    log_asymptotic: float
    log_eigen_product: float
    w0_e2: float
    e2_v_last: float
    log_inner_product: float
    log_D: float

    @property
    def ratio(self) -> float:
        """``M_N / (e sqrt(N) exp((N-1) ln N - N (1 - r^2)))``."""
        return math.exp(self.log_main - self.log_asymptotic)

    @property
    def implied_P(self) -> float:
        """``D_{N-1}(r) / M_N(r)``: the factor left after the main term."""
        return math.exp(self.log_D - self.log_main)

    @property
    def inner_product_ratio(self) -> float:
        """Inner-product product divided by ``r/(1 - r^2) / sqrt(N)``."""
        r = self.r
        return math.exp(self.log_inner_product) / (r / (1 - r * r) / math.sqrt(self.N))


def adiabatic_main_term(N: int, r: float) -> AdiabaticResult:
    """Main term of the adiabatic solution of the ``D``-recursion at ``|z| = r``.

    The two-step transfer matrices have eigenvalues
    ``l_n^{+/-} = (N/2)(r^2 + t +/- sqrt((t - r^2)^2 + 4 r^2 / N))`` with
    ``t = (n + 1)/N``, right eigenvectors ``V^{+/-} = (1, l^{+/-})`` and
    left eigenvectors ``W^+ = (-l^-, 1)/(l^+ - l^-)``,
    ``W^- = (l^+, -1)/(l^+ - l^-)``.  The main term is

        M_N = prod_{n<=N-2} l_n^+  *  W_0^+ . e_2  *  e_2 . V_{N-2}^+
              * prod_{n<=N-3} W_{n+1}^+ . V_n^+ .
    """
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if N < 3:
        raise ValueError("N must be at least 3")
    n = np.arange(N - 1, dtype=float)
    t = (n + 1) / N
    root = np.sqrt((t - r * r) ** 2 + 4 * r * r / N)
    lp = N / 2 * (r * r + t + root)
    lm = N / 2 * (r * r + t - root)
    gap = lp - lm
    log_prod = float(np.sum(np.log(lp)))
    w0 = 1.0 / gap[0]
    v_last = lp[-1]
    # W_{k+1}^+ . V_k^+ = (l_k^+ - l_{k+1}^-)/(l_{k+1}^+ - l_{k+1}^-)
    ip = (lp[:-1] - lm[1:]) / gap[1:]
    log_ip = float(np.sum(np.log(ip)))
    log_main = log_prod + math.log(w0) + math.log(v_last) + log_ip
    log_asym = 1 + 0.5 * math.log(N) + (N - 1) * math.log(N) - N * (1 - r * r)
    x = N * r * r
    log_D = float(gammaln(N) + x + math.log(gammaincc(N, x)))
    return AdiabaticResult(N, r, log_main, log_asym, log_prod, w0, v_last, log_ip, log_D)


def _exp_cumulative(x, S, g):
    # P(x_i) = int_{x_0}^{x_i} g(a) e^{S(a) - S(x_i)} da, exact for g and S
    # linear on each cell
    h = np.diff(x)
    dS = np.diff(S)
    e = np.exp(-dS)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = dS / h
        I0 = np.where(np.abs(dS) < 1e-8, h * (1 - dS / 2), -np.expm1(-dS) / s)
        I1 = np.where(np.abs(dS) < 1e-8, h * h / 2, (h - I0) / s)
    loc = g[:-1] * I0 + (g[1:] - g[:-1]) / h * I1
    P = np.zeros_like(x)
    for i in range(len(h)):
        P[i + 1] = e[i] * P[i] + loc[i]
    return P


def perturbation_terms(K_max: int, form: str = "corrected", L: float = 6.0,
                       points: int = 200001) -> np.ndarray:
    """Nested simplex integrals ``I_0 = 1, I_1, ..., I_{K_max}``.

    ``I_K`` integrates ``prod_k u(x_{2k-1}) v(x_{2k})
    exp(sinh 2x_{2k-1} - sinh 2x_{2k})`` over ``-L < x_1 < ... < x_{2K} < L``.

    ``form="literal"`` uses ``u = v = sech``.  ``form="corrected"`` uses
    ``u = e^{2x} sech(x)/2`` and ``v = e^{-2x} sech(x)/2``, the weights that
    follow from the Fermi-factor representation of the jump terms.

    The inner integral of each pair is done with an exponential integrator
    (exact for piecewise-linear amplitudes against the exponential weight)
    and the outer one by the trapezoid rule on a uniform grid.
    """
    if K_max < 0:
        raise ValueError("K_max must be nonnegative")
    x = np.linspace(-L, L, points)
    S = np.sinh(2 * x)
    sech = 1 / np.cosh(x)
    if form == "literal":
        u, v = sech, sech
    elif form == "corrected":
        u, v = np.exp(2 * x) * sech / 2, np.exp(-2 * x) * sech / 2
    else:
        raise ValueError("form must be 'corrected' or 'literal'")
    phi = np.ones_like(x)
    terms = [1.0]
    for _ in range(K_max):
        P = _exp_cumulative(x, S, u * phi)
        phi = cumulative_trapezoid(v * P, x, initial=0.0)
        terms.append(float(phi[-1]))
    return np.array(terms)


def perturbation_series(K_max: int, form: str = "corrected", **kw) -> float:
    """Partial sum ``sum_{K<=K_max} (-1)^K I_K`` of the alternating series."""
    t = perturbation_terms(K_max, form, **kw)
    return float(np.sum(t * (-1.0) ** np.arange(t.size)))
