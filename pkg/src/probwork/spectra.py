"""Empirical spectral distributions and compression concentration experiments."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from .harness.streams import derive_stream
from .kacwalk import (ThermoParams, coupled_step, kac_run, sample_gaussian_matrix,
                      sample_haar_orthogonal, _draw_pair, _angle)

__all__ = [
    "ESD",
    "hermitian_eigenvalues",
    "kolmogorov_distance",
    "diagonal_grid",
    "goe_matrix",
    "two_atom_matrix",
    "kac_envelope",
    "thermostat_envelope",
    "CompressionSummary",
    "kac_compression_experiment",
    "thermostat_compression_experiment",
]


class ESD:
    """Empirical spectral distribution ``F(x) = #{lambda_i <= x} / k``.

    Parameters
    ----------
    eigenvalues : array_like
        Real eigenvalues (sorted on construction).
    """

    def __init__(self, eigenvalues):
        ev = np.sort(np.asarray(eigenvalues, dtype=float).ravel())
        if ev.size == 0:
            raise ValueError("an ESD needs at least one eigenvalue")
        self.eigenvalues = ev

    @property
    def k(self) -> int:
        return self.eigenvalues.size

    def cdf(self, x):
        """Right-continuous value ``F(x)``."""
        return np.searchsorted(self.eigenvalues, x, side="right") / self.k

    def cdf_left(self, x):
        """Left limit ``F(x-)``."""
        return np.searchsorted(self.eigenvalues, x, side="left") / self.k

    @classmethod
    def pooled(cls, esds) -> "ESD":
        """Pointwise mean of ESDs of equal size (pooling of eigenvalues)."""
        esds = list(esds)
        if len({e.k for e in esds}) != 1:
            raise ValueError("pooled mean needs ESDs of equal size")
        return cls(np.concatenate([e.eigenvalues for e in esds]))


def hermitian_eigenvalues(A) -> np.ndarray:
    """Sorted eigenvalues of a Hermitian matrix.

    Raises
    ------
    ValueError
        If ``max |A - A^*|`` exceeds ``1e-12`` times ``max(1, max|A|)``.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.conj().T)) > 1e-12 * scale:
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigvalsh(A)


def kolmogorov_distance(F: ESD, G) -> float:
    """Exact ``sup_x |F(x) - G(x)|``.

    ``G`` may be another :class:`ESD` or a continuous CDF given as a
    callable.  The supremum is attained at a jump point, where both
    one-sided limits are compared.
    """
    x = F.eigenvalues
    if isinstance(G, ESD):
        pts = np.union1d(x, G.eigenvalues)
        d1 = np.abs(F.cdf(pts) - G.cdf(pts))
        d2 = np.abs(F.cdf_left(pts) - G.cdf_left(pts))
        return float(max(d1.max(), d2.max()))
    g = np.asarray(G(x), dtype=float)
    return float(max(np.max(np.abs(F.cdf(x) - g)), np.max(np.abs(F.cdf_left(x) - g))))


def diagonal_grid(n: int) -> np.ndarray:
    """Diagonal matrix with equally spaced eigenvalues on ``[-1, 1]``."""
    return np.diag(np.linspace(-1.0, 1.0, n))


def goe_matrix(n: int, rng) -> np.ndarray:
    """Real symmetric Gaussian matrix scaled to spectrum near ``[-2, 2]``."""
    z = rng.standard_normal((n, n))
    return (z + z.T) / math.sqrt(2.0 * n)


def two_atom_matrix(n: int, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    """Diagonal matrix with half its eigenvalues at ``low`` and half at ``high``."""
    d = np.full(n, high)
    d[: n // 2] = low
    return np.diag(d)


def kac_envelope(r, k: int):
    """``12 sqrt(k) exp(-r sqrt(k/32))``."""
    return 12.0 * math.sqrt(k) * np.exp(-np.asarray(r) * math.sqrt(k / 32.0))


def thermostat_envelope(r, k: int, mu: float):
    """``12 sqrt(k) exp(-r sqrt(k mu / 108))``."""
    return 12.0 * math.sqrt(k) * np.exp(-np.asarray(r) * math.sqrt(k * mu / 108.0))


@dataclass
class CompressionSummary:
    """Per-trial Kolmogorov distances and the exceedance table."""

    k: int
    distances: np.ndarray
    r_grid: np.ndarray
    exceedance: np.ndarray
    envelope: np.ndarray
    step_sensitivity: np.ndarray
    sensitivity_bound: float
    bai_violations: int
    mean_esd: ESD

    @property
    def trials(self) -> int:
        return self.distances.size

    def binomial_sigma(self) -> np.ndarray:
        p = np.clip(self.envelope, 0.0, 1.0)
        return np.sqrt(p * (1 - p) / self.trials)

    def within_envelope(self, sigmas: float = 3.0) -> bool:
        return bool(np.all(self.exceedance <= self.envelope + sigmas * self.binomial_sigma()))

    def table(self):
        """Rows ``(r, empirical, envelope, trials)``."""
        return [(float(r), float(e), float(v), self.trials)
                for r, e, v in zip(self.r_grid, self.exceedance, self.envelope)]


def _exceedance(dist, k, r_grid):
    thr = 1.0 / math.sqrt(k) + r_grid[:, None]
    return (dist[None, :] >= thr).mean(axis=1)


def _map(fn, idx, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, idx))
    return [fn(i) for i in idx]


def _merge_close(ev, ev2, scale):
    # Eigenvalues of either spectrum that lie within the rank tolerance of
    # each other are mapped to one representative, so that roundoff
    # splitting a degenerate eigenvalue does not register as an ESD jump.
    tol = 1e-9 * max(1.0, scale)
    u = np.sort(np.concatenate([ev, ev2]))
    start = np.concatenate([[True], np.diff(u) > tol])
    rep = u[start][np.cumsum(start) - 1]
    def snap(v):
        return rep[np.searchsorted(u, v)]
    return snap(ev), snap(ev2)


def _step_distance(A, A2, ev, ev2):
    scale = float(np.max(np.abs(ev))) if ev.size else 1.0
    e1, e2 = _merge_close(ev, ev2, scale)
    d = kolmogorov_distance(ESD(e1), ESD(e2))
    return d, d > _rank_tol(A - A2) / A.shape[0] + 1e-12


def _rank_tol(M):
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > 1e-9 * max(1.0, s[0] if s.size else 0.0)))


def kac_compression_experiment(G, k: int, burn_in: int | None = None, trials: int = 100,
                               seed: int = 0, mode: str = "chain", r_grid=None,
                               threads: int = 1) -> CompressionSummary:
    """Spectra of ``k x k`` compressions of ``U G U^T`` for random rotations ``U``.

    Parameters
    ----------
    G : array_like
        ``n x n`` Hermitian matrix.
    k : int
        Compression size, ``1 <= k <= n``.
    burn_in : int, optional
        Kac steps started from the identity (``mode="chain"``), default
        ``n**2 * ceil(log n)``.  Ignored in ``"haar"`` mode.
    mode : {"chain", "haar", "single"}
        ``"haar"`` uses an exact Haar sample; ``"single"`` applies one Kac
        rotation to ``G``.
    r_grid : array_like, optional
        Offsets ``r`` in ``P(||F_A - Fbar|| >= 1/sqrt(k) + r)``.

    Returns
    -------
    CompressionSummary
        Also records, per trial, the distance between the compressions
        before and after one further Kac step and checks Bai's rank
        inequality on that pair.  Eigenvalues of the two compressions that
        agree to ``1e-9`` relative (the tolerance of the numerical rank) are
        identified before the distance is taken.
    """
    G = np.asarray(G)
    n = G.shape[0]
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    hermitian_eigenvalues(G)
    if burn_in is None:
        burn_in = n * n * max(1, math.ceil(math.log(n)))
    if mode not in ("chain", "haar", "single"):
        raise ValueError("mode must be 'chain', 'haar' or 'single'")

    def one(t):
        rng = derive_stream(seed, t)
        if mode == "haar":
            U = sample_haar_orthogonal(n, rng)
        else:
            U = np.eye(n)
            kac_run(U, burn_in if mode == "chain" else 1, rng)
        M = U @ G @ U.conj().T
        A = M[:k, :k]
        ev = hermitian_eigenvalues((A + A.conj().T) / 2)
        i, j = _draw_pair(rng, n)
        th = _angle(rng.random())
        U2 = U.copy()
        c, s = math.cos(th), math.sin(th)
        U2[i], U2[j] = c * U[i] + s * U[j], -s * U[i] + c * U[j]
        M2 = U2 @ G @ U2.conj().T
        A2 = M2[:k, :k]
        ev2 = hermitian_eigenvalues((A2 + A2.conj().T) / 2)
        d_step, bad = _step_distance(A, A2, ev, ev2)
        return ev, d_step, bad

    res = _map(one, range(trials), threads)
    return _summarize(res, k, r_grid, kac_envelope, 2.0 / k)


def thermostat_compression_experiment(G, k: int, params: ThermoParams = ThermoParams(),
                                      trials: int = 100, seed: int = 0, burn_in: int = 0,
                                      r_grid=None, threads: int = 1) -> CompressionSummary:
    """Spectra of ``A = S^T G S`` with ``S`` the first ``k`` columns of a
    Gaussian ``N(0, 1/beta)`` matrix.

    ``S`` is an exact sample of the thermostat's invariant law; with
    ``burn_in > 0`` the coupled chain is additionally run for that many
    steps from the sample.  One further coupled step per trial measures the
    per-step sensitivity, whose bound is ``3/k``.
    """
    G = np.asarray(G)
    n = G.shape[0]
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    hermitian_eigenvalues(G)

    def compress(M):
        S = M[:, :k]
        A = S.conj().T @ G @ S
        return A, hermitian_eigenvalues((A + A.conj().T) / 2)

    def one(t):
        rng = derive_stream(seed, t)
        M = sample_gaussian_matrix(n, params.beta, rng)
        for _ in range(burn_in):
            coupled_step(M, params, rng, inplace=True)
        A, ev = compress(M)
        M2 = coupled_step(M, params, rng)
        A2, ev2 = compress(M2)
        d_step, bad = _step_distance(A, A2, ev, ev2)
        return ev, d_step, bad

    res = _map(one, range(trials), threads)
    env = lambda r, kk: thermostat_envelope(r, kk, params.mu)
    return _summarize(res, k, r_grid, env, 3.0 / k)


def _summarize(res, k, r_grid, envelope, bound):
    esds = [ESD(ev) for ev, _, _ in res]
    mean = ESD.pooled(esds)
    dist = np.array([kolmogorov_distance(e, mean) for e in esds])
    if r_grid is None:
        r_grid = np.linspace(0.0, 1.0, 11)
    r_grid = np.asarray(r_grid, dtype=float)
    return CompressionSummary(
        k=k,
        distances=dist,
        r_grid=r_grid,
        exceedance=_exceedance(dist, k, r_grid),
        envelope=envelope(r_grid, k),
        step_sensitivity=np.array([d for _, d, _ in res]),
        sensitivity_bound=bound,
        bai_violations=int(sum(b for _, _, b in res)),
        mean_esd=mean,
    )
