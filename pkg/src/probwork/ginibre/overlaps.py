"""Off-diagonal overlap density: exact banded determinant and Monte Carlo.

For ``3 <= N <= 40`` the off-diagonal overlap density is

    O2(z1, z2) = -(N^2 / (pi^2 N!)) e^{-N|z1|^2 - N|z2|^2} det H,

where ``H`` is ``(N-2) x (N-2)`` with entries (after the balanced scaling
``sqrt(N^{j+k+6} / (pi^2 (j+1)! (k+1)!))``)

    H_jk ~ int conj(l)^j l^k [|z1 - l|^2 |z2 - l|^2
                              + (conj(z1) - conj(l))(z2 - l)/N] e^{-N|l|^2} d^2l.

Only monomials with equal total degree survive the angular integral, so
``H`` is 5-banded.  For ordered pairs ``O2`` is complex with
``O2(z2, z1) = conj(O2(z1, z2))``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numba
import numpy as np
from scipy.special import gammaln

from ..harness.streams import derive_stream
from .densities import r1_density

__all__ = [
    "o2_matrix",
    "banded_slogdet",
    "o2_density_exact",
    "OverlapTables",
    "estimate_overlaps_mc",
    "eigen_overlaps",
    "o2_window_average",
]

_BLOCK = 1000


def _bracket(z1, z2, N):
    # coefficients c[a, b] of conj(l)^a l^b, arrays over a batch of points
    z1 = np.atleast_1d(np.asarray(z1, dtype=complex))
    z2 = np.atleast_1d(np.asarray(z2, dtype=complex))
    c = np.zeros((3, 3) + z1.shape, dtype=complex)
    l1 = {(0, 0): np.abs(z1) ** 2, (1, 0): -z1, (0, 1): -np.conj(z1), (1, 1): 1.0}
    l2 = {(0, 0): np.abs(z2) ** 2, (1, 0): -z2, (0, 1): -np.conj(z2), (1, 1): 1.0}
    for (a, b), u in l1.items():
        for (d, e), v in l2.items():
            c[a + d, b + e] += u * v
    extra = {(0, 0): np.conj(z1) * z2, (0, 1): -np.conj(z1), (1, 0): -z2, (1, 1): 1.0}
    for (a, b), v in extra.items():
        c[a, b] += v / N
    return c


def o2_matrix(N: int, z1, z2) -> np.ndarray:
    """Scaled ``H`` matrix, shape ``(N-2, N-2)`` or ``(P, N-2, N-2)`` for batches."""
    if not 3 <= N <= 40:
        raise ValueError("exact overlap density supports 3 <= N <= 40")
    scalar = np.ndim(z1) == 0 and np.ndim(z2) == 0
    c = _bracket(z1, z2, N)
    P = c.shape[2]
    M = N - 2
    H = np.zeros((P, M, M), dtype=complex)
    j = np.arange(M)
    lf = gammaln(np.arange(M + 3) + 1.0)
    for a in range(3):
        for b in range(3):
            # entry (j, k) picks up c[a, b] when j + a == k + b
            k = j + a - b
            ok = (k >= 0) & (k < M)
            jj, kk = j[ok], k[ok]
            m = jj + a
            logv = (math.log(math.pi) + lf[m] - (m + 1) * math.log(N)
                    + 0.5 * ((jj + kk + 6) * math.log(N) - 2 * math.log(math.pi)
                             - lf[jj + 1] - lf[kk + 1]))
            H[:, jj, kk] += c[a, b][:, None] * np.exp(logv)[None, :]
    return H[0] if scalar else H


@numba.njit(cache=True)
def _band_lu(H, lower, upper):
    # Gaussian elimination with partial pivoting confined to the band; returns
    # (phase, log|det|).  Row swaps widen the upper band by ``lower``.
    A = H.copy()
    n = A.shape[0]
    phase = 1.0 + 0.0j
    logabs = 0.0
    for k in range(n):
        last = min(n, k + lower + 1)
        p = k
        best = abs(A[k, k])
        for i in range(k + 1, last):
            if abs(A[i, k]) > best:
                best = abs(A[i, k])
                p = i
        if best == 0.0:
            return 0.0 + 0.0j, -np.inf
        if p != k:
            for c in range(k, min(n, k + upper + lower + 1)):
                t = A[k, c]
                A[k, c] = A[p, c]
                A[p, c] = t
            phase = -phase
        piv = A[k, k]
        phase *= piv / abs(piv)
        logabs += math.log(abs(piv))
        cend = min(n, k + upper + lower + 1)
        for i in range(k + 1, last):
            f = A[i, k] / piv
            if f != 0:
                for c in range(k, cend):
                    A[i, c] -= f * A[k, c]
    return phase, logabs


def banded_slogdet(H: np.ndarray, lower: int = 2, upper: int = 2):
    """``(phase, log|det|)`` of a banded matrix by banded LU with pivoting."""
    H = np.ascontiguousarray(H, dtype=complex)
    return _band_lu(H, lower, upper)


def o2_density_exact(N: int, z1, z2):
    """Exact off-diagonal overlap density ``O_N^(2)(z1, z2)`` (complex).

    Accepts scalars or equal-shape arrays of points.
    """
    H = o2_matrix(N, z1, z2)
    scalar = H.ndim == 2
    Hs = H[None] if scalar else H
    z1a = np.atleast_1d(np.asarray(z1, dtype=complex))
    z2a = np.atleast_1d(np.asarray(z2, dtype=complex))
    out = np.empty(Hs.shape[0], dtype=complex)
    for i in range(Hs.shape[0]):
        ph, la = _band_lu(np.ascontiguousarray(Hs[i]), 2, 2)
        logpref = (2 * math.log(N) - 2 * math.log(math.pi) - gammaln(N + 1)
                   - N * abs(z1a[i]) ** 2 - N * abs(z2a[i]) ** 2)
        out[i] = -ph * math.exp(logpref + la) if np.isfinite(la) else 0.0
    return complex(out[0]) if scalar else out.reshape(np.shape(z1))


def eigen_overlaps(A: np.ndarray, cond_limit: float = 1e12):
    """Eigenvalues and overlap matrix ``O_jk = (phi_j* phi_k)(psi_k* psi_j)``.

    Right eigenvectors ``psi`` have unit norm and left eigenvectors ``phi``
    satisfy ``phi_j* psi_k = delta_jk``.  Works on stacks ``(..., N, N)``;
    returns ``(lam, O, ok)`` where ``ok`` flags numerically non-defective
    samples (condition number of the eigenvector matrix below ``cond_limit``).
    """
    lam, R = np.linalg.eig(A)
    R = R / np.linalg.norm(R, axis=-2, keepdims=True)
    cond = np.linalg.cond(R)
    ok = np.isfinite(cond) & (cond < cond_limit)
    R_safe = np.where(ok[..., None, None], R, np.eye(A.shape[-1]))
    L = np.linalg.inv(R_safe)
    S1 = np.conj(np.swapaxes(R_safe, -1, -2)) @ R_safe
    S2 = L @ np.conj(np.swapaxes(L, -1, -2))
    O = S2 * np.swapaxes(S1, -1, -2)
    return lam, O, ok


@dataclass
class OverlapTables:
    """Binned Monte Carlo estimates of the overlap densities.

    Radial tables are indexed by the bins ``r_edges``; each estimate is a
    density in ``z`` normalized per eigenvalue (division by ``N``).
    """

    N: int
    trials: int
    skipped: int
    r_edges: np.ndarray
    r1: np.ndarray
    r1_se: np.ndarray
    o1: np.ndarray
    o1_se: np.ndarray
    o2_marginal: np.ndarray
    o2_marginal_se: np.ndarray
    pairs: list = field(default_factory=list)
    o2_pairs: np.ndarray = None
    o2_pairs_se_real: np.ndarray = None
    o2_pairs_se_imag: np.ndarray = None
    moments: dict = field(default_factory=dict)
    min_diag_sum_excess: float = 0.0

    @property
    def r_centers(self):
        return 0.5 * (self.r_edges[1:] + self.r_edges[:-1])

    def r1_exact(self):
        """Exact annulus averages of ``R1`` for comparison."""
        return _annulus_average(lambda r: r1_density(self.N, r), self.r_edges)


def _annulus_average(f, edges, order=32):
    x, w = np.polynomial.legendre.leggauss(order)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        r = (b - a) / 2 * x + (a + b) / 2
        out.append(np.sum((b - a) / 2 * w * 2 * math.pi * r * f(r)) / (math.pi * (b * b - a * a)))
    return np.array(out)


def _block(N, seed, b, size, r_edges, pairs, h, d, moment_orders):
    rng = derive_stream(seed, b)
    z = rng.standard_normal((2, size, N, N))
    A = (z[0] + 1j * z[1]) / math.sqrt(2.0 * N)
    lam, O, ok = eigen_overlaps(A)
    nb = len(r_edges) - 1
    r = np.abs(lam)
    bins = np.digitize(r, r_edges) - 1
    inside = (bins >= 0) & (bins < nb)
    diag = np.real(np.einsum("...jj->...j", O))
    off = np.real(O.sum(axis=-1)) - diag
    cnt = np.zeros((size, nb))
    o1 = np.zeros((size, nb))
    o2m = np.zeros((size, nb))
    for s in range(size):
        if not ok[s]:
            continue
        sel = inside[s]
        np.add.at(cnt[s], bins[s][sel], 1.0)
        np.add.at(o1[s], bins[s][sel], diag[s][sel])
        np.add.at(o2m[s], bins[s][sel], off[s][sel])
    pv = np.zeros((size, len(pairs)), dtype=complex)
    rel = np.angle(lam[:, :, None] * np.conj(lam[:, None, :]))
    for t, (z1, z2) in enumerate(pairs):
        r1c, r2c = abs(z1), abs(z2)
        phc = np.angle(z1 * np.conj(z2))
        in1 = np.abs(r - r1c) <= h
        in2 = np.abs(r - r2c) <= h
        dang = np.abs(np.angle(np.exp(1j * (rel - phc))))
        mask = in1[:, :, None] & in2[:, None, :] & (dang <= d)
        mask &= ~np.eye(N, dtype=bool)[None]
        pv[:, t] = np.sum(np.where(mask, O, 0.0), axis=(1, 2))
    mom = {}
    for p in moment_orders:
        lp = lam ** p
        mom[p] = np.einsum("sj,sjk,sk->s", lp, O, np.conj(lp)) / N
    excess = np.min(np.where(ok, diag.sum(axis=1) - N, np.inf))
    return ok, cnt, o1, o2m, pv, mom, excess


def estimate_overlaps_mc(N: int, trials: int, seed: int = 0, r_edges=None, pairs=(),
                         radial_halfwidth: float = 0.05, angle_halfwidth: float = 0.15,
                         moment_orders=(), threads: int = 1) -> OverlapTables:
    """Monte Carlo estimates of ``R1``, ``O1`` and ``O2`` from eigen-decompositions.

    Parameters
    ----------
    N : int
        Matrix size (at most 200).
    trials : int
        Number of Ginibre samples, at least 100.  Samples are drawn in
        blocks of 1000; block ``b`` uses ``derive_stream(seed, b)``.
    r_edges : array_like, optional
        Radial bin edges for the ``R1``, ``O1`` and ``O2``-marginal tables.
    pairs : sequence of (complex, complex)
        Points ``(z1, z2)`` at which ``O2`` is estimated.  By rotation
        invariance the window is ``||l_j| - |z1|| <= h``,
        ``||l_k| - |z2|| <= h`` and relative angle within ``angle_halfwidth``
        of ``arg(z1 conj(z2))``.
    moment_orders : sequence of int
        Orders ``p`` for which ``(1/N) sum_jk l_j^p conj(l_k)^p O_jk`` is
        averaged; this equals ``(1/N) tr A^p (A*)^p`` sample by sample.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    if N > 200 or N < 2:
        raise ValueError("need 2 <= N <= 200")
    if r_edges is None:
        r_edges = np.linspace(0.0, 1.2, 13)
    r_edges = np.asarray(r_edges, dtype=float)
    pairs = [(complex(a), complex(b)) for a, b in pairs]
    sizes = [min(_BLOCK, trials - s) for s in range(0, trials, _BLOCK)]
    args = [(N, seed, b, sz, r_edges, pairs, radial_halfwidth, angle_halfwidth,
             tuple(moment_orders)) for b, sz in enumerate(sizes)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda a: _block(*a), args))
    else:
        parts = [_block(*a) for a in args]
    ok = np.concatenate([p[0] for p in parts])
    T = int(ok.sum())
    area = math.pi * (r_edges[1:] ** 2 - r_edges[:-1] ** 2)

    def stat(arr, scale):
        arr = arr[ok]
        return arr.mean(axis=0) / scale, arr.std(axis=0, ddof=1) / math.sqrt(T) / scale

    cnt = np.concatenate([p[1] for p in parts])
    o1 = np.concatenate([p[2] for p in parts])
    o2m = np.concatenate([p[3] for p in parts])
    r1v, r1s = stat(cnt, N * area)
    o1v, o1s = stat(o1, N * area)
    omv, oms = stat(o2m, N * area)
    tables = OverlapTables(N, T, trials - T, r_edges, r1v, r1s, o1v, o1s, omv, oms)
    if pairs:
        pv = np.concatenate([p[4] for p in parts])[ok]
        vols = []
        for z1, z2 in pairs:
            a1 = math.pi * ((abs(z1) + radial_halfwidth) ** 2 - max(abs(z1) - radial_halfwidth, 0) ** 2)
            a2 = math.pi * ((abs(z2) + radial_halfwidth) ** 2 - max(abs(z2) - radial_halfwidth, 0) ** 2)
            vols.append(a1 * a2 * 2 * angle_halfwidth / (2 * math.pi))
        vols = np.array(vols)
        tables.pairs = pairs
        tables.o2_pairs = pv.mean(axis=0) / (N * vols)
        tables.o2_pairs_se_real = pv.real.std(axis=0, ddof=1) / math.sqrt(T) / (N * vols)
        tables.o2_pairs_se_imag = pv.imag.std(axis=0, ddof=1) / math.sqrt(T) / (N * vols)
    for p in moment_orders:
        v = np.concatenate([part[5][p] for part in parts])[ok]
        tables.moments[p] = (complex(v.mean()), float(v.real.std(ddof=1) / math.sqrt(T)))
    tables.min_diag_sum_excess = float(min(p[6] for p in parts))
    return tables


def o2_window_average(N: int, z1: complex, z2: complex, radial_halfwidth: float = 0.05,
                      angle_halfwidth: float = 0.15, order: int = 8) -> complex:
    """Average of the exact ``O2`` over the Monte Carlo window of a point pair.

    The window is the one used by :func:`estimate_overlaps_mc`; the average
    is taken with respect to Lebesgue measure ``r1 r2 dr1 dr2 dphi`` by a
    tensor Gauss-Legendre rule.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    h, d = radial_halfwidth, angle_halfwidth

    def nodes(c, half):
        lo = max(c - half, 0.0)
        return (c + half - lo) / 2 * x + (c + half + lo) / 2, (c + half - lo) / 2 * w

    r1, w1 = nodes(abs(z1), h)
    r2, w2 = nodes(abs(z2), h)
    phc = np.angle(z1 * np.conj(z2))
    ph, wp = phc + d * x, d * w
    R1, R2, PH = np.meshgrid(r1, r2, ph, indexing="ij")
    W = (w1[:, None, None] * w2[None, :, None] * wp[None, None, :]) * R1 * R2
    vals = o2_density_exact(N, (R1 * np.exp(1j * PH)).ravel(), R2.ravel().astype(complex))
    return complex(np.sum(W.ravel() * vals) / np.sum(W))
