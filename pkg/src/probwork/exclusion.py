"""Discrete-time asymmetric exclusion on a segment.

A configuration is a 0/1 vector ``X``.  One step picks ``i`` uniformly in
``0..n-2`` and looks at the pair ``(X_i, X_{i+1})``.  Equal neighbours are
left alone; the pattern ``(1, 0)`` becomes ``(0, 1)`` with probability
``swap_up`` and ``(0, 1)`` becomes ``(1, 0)`` with probability
``swap_down``.  The defaults are ``swap_up = 1 - q/2`` and
``swap_down = q/2``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
import math

import numba
import numpy as np
from scipy.special import expit

from .harness.streams import derive_stream
from .lis import binary_walk_lis

__all__ = [
    "ParticleConfig",
    "AsepParams",
    "asep_step",
    "asep_run",
    "asep_spectral_gap",
    "small_gap_approximation",
    "midpoint_height",
    "blocking_product_sample",
    "balanced_start",
    "fluctuation_experiment",
    "FluctuationSummary",
    "midpoint_regime_constant",
    "detailed_balance_diagnostic",
]

_CHUNK = 1 << 18


@dataclass
class ParticleConfig:
    """Binary occupation vector with its cached particle count."""

    occupancy: np.ndarray
    particle_count: int = field(init=False)

    def __post_init__(self):
        occ = np.asarray(self.occupancy)
        if occ.ndim != 1 or not np.isin(occ, (0, 1)).all():
            raise ValueError("occupancy must be a 1-d 0/1 vector")
        self.occupancy = occ.astype(np.uint8)
        self.particle_count = int(self.occupancy.sum())

    @property
    def n(self) -> int:
        return self.occupancy.size

    def copy(self) -> "ParticleConfig":
        return ParticleConfig(self.occupancy.copy())


@dataclass(frozen=True)
class AsepParams:
    """Size, bias and swap probabilities of the exclusion chain."""

    n: int
    q: float
    swap_up: float | None = None
    swap_down: float | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 < self.q <= 1.0:
            raise ValueError("q must lie in (0, 1]")
        if self.swap_up is None:
            object.__setattr__(self, "swap_up", 1.0 - self.q / 2)
        if self.swap_down is None:
            object.__setattr__(self, "swap_down", self.q / 2)
        for p in (self.swap_up, self.swap_down):
            if not 0.0 <= p <= 1.0:
                raise ValueError("swap probabilities must lie in [0, 1]")


@numba.njit(cache=True, nogil=True)
def _asep_kernel(x, u, up, down):
    m = x.size - 1
    for s in range(u.shape[0]):
        i = int(u[s, 0] * m)
        a = x[i]
        b = x[i + 1]
        if a == b:
            continue
        p = up if a == 1 else down
        if u[s, 1] < p:
            x[i] = b
            x[i + 1] = a


def asep_run(config: ParticleConfig, params: AsepParams, steps: int, rng) -> ParticleConfig:
    """Advance ``config`` in place by ``steps`` chain steps.

    Each step consumes two uniforms from ``rng`` (site, acceptance); draws
    are generated in fixed-size chunks so the trajectory depends only on the
    stream.  Returns ``config``.
    """
    if config.n != params.n:
        raise ValueError("configuration length does not match params.n")
    x = config.occupancy
    left = int(steps)
    while left > 0:
        c = min(left, _CHUNK)
        _asep_kernel(x, rng.random((c, 2)), params.swap_up, params.swap_down)
        left -= c
    return config


def asep_step(config: ParticleConfig, params: AsepParams, rng) -> ParticleConfig:
    """One chain step; returns a new configuration."""
    out = config.copy()
    _asep_kernel(out.occupancy, rng.random((1, 2)), params.swap_up, params.swap_down)
    return out


def asep_spectral_gap(n: int, q: float) -> float:
    """Gap ``1 - cos(pi/n) / Delta`` with ``Delta = (q + 1/q)/2``."""
    if n < 2 or not 0.0 < q <= 1.0:
        raise ValueError("need n >= 2 and q in (0, 1]")
    delta = 0.5 * (q + 1.0 / q)
    return 1.0 - math.cos(math.pi / n) / delta


def small_gap_approximation(n: int, c: float, alpha: float) -> float:
    """Companion value ``c**2 / (2 n**(2 alpha))`` for ``q = exp(-c/n**alpha)``."""
    return c * c / (2.0 * n ** (2.0 * alpha))


def midpoint_height(config, up_value: int = 1) -> int:
    """Height of the walk at ``n/2``: steps +1 where ``X_i == up_value``."""
    x = np.asarray(getattr(config, "occupancy", config)).ravel()
    n = x.size
    if n % 2:
        raise ValueError("midpoint height needs an even length")
    half = x[: n // 2]
    ups = int(np.count_nonzero(half == up_value))
    return 2 * ups - n // 2


def blocking_product_sample(n: int, a: float, q: float, rng) -> ParticleConfig:
    """Independent sites with ``P(X_k = 1) = a q**k / (a q**k + 1)``, ``k = 1..n``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    k = np.arange(1, n + 1)
    p = expit(math.log(a) + k * math.log(q))
    return ParticleConfig((rng.random(n) < p).astype(np.uint8))


def balanced_start(n: int, rng) -> ParticleConfig:
    """Uniformly shuffled configuration with ``n/2`` particles."""
    x = np.zeros(n, dtype=np.uint8)
    x[: n // 2] = 1
    return ParticleConfig(rng.permutation(x))


def midpoint_regime_constant() -> float:
    """The constant ``c = -20 ln(3/5)`` of the linear-midpoint regime."""
    return -20.0 * math.log(3.0 / 5.0)


@dataclass
class FluctuationSummary:
    """Outcome of :func:`fluctuation_experiment`."""

    n: int
    q: float
    observable: str
    values: np.ndarray
    mean: float
    sd: float
    r_grid: np.ndarray
    exceedance: np.ndarray
    envelope: np.ndarray
    trials: int

    def binomial_sigma(self) -> np.ndarray:
        p = np.clip(self.envelope, 0.0, 1.0)
        return np.sqrt(p * (1 - p) / self.trials)

    def within_envelope(self, sigmas: float = 3.0) -> bool:
        return bool(np.all(self.exceedance <= self.envelope + sigmas * self.binomial_sigma()))


def _envelope(observable, r, n, alpha, c):
    if observable == "midpoint":
        rate = math.sqrt(c * c * (n - 1) / n ** (2 * alpha))
    else:
        rate = math.sqrt(c * c / n ** (2 * alpha))
    return 6.0 * np.exp(-(r / 2.0) * rate)


def _one_chain(n, params, burn_in, observable, seed, index):
    rng = derive_stream(seed, index)
    cfg = balanced_start(n, rng)
    asep_run(cfg, params, burn_in, rng)
    if observable == "midpoint":
        return midpoint_height(cfg)
    return binary_walk_lis(cfg)


def fluctuation_experiment(n: int, alpha: float, c: float, observable: str = "midpoint",
                           burn_in: int | None = None, trials: int = 100, seed: int = 0,
                           r_grid=None, threads: int = 1, q: float | None = None,
                           trial_offset: int = 0) -> FluctuationSummary:
    """Independent exclusion chains observed after a burn-in.

    Parameters
    ----------
    n : int
        Even system size.
    alpha, c : float
        Bias scaling, ``q = 1 - c / n**alpha`` unless ``q`` is given.
    observable : {"midpoint", "walk_lis"}
        Midpoint height or the longest non-decreasing subsequence.
    burn_in : int, optional
        Steps per chain, default ``10 n**2``.
    trials : int
        Number of chains; chain ``t`` uses ``derive_stream(seed, trial_offset + t)``.
    r_grid : array_like, optional
        Deviations at which ``P(|O - mean| >= r)`` is reported.
    threads : int
        Worker threads; results do not depend on this value.

    Returns
    -------
    FluctuationSummary
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if n % 2:
        raise ValueError("n must be even")
    if observable not in ("midpoint", "walk_lis"):
        raise ValueError("observable must be 'midpoint' or 'walk_lis'")
    if q is None:
        q = 1.0 - c / n ** alpha
    params = AsepParams(n, q)
    if burn_in is None:
        burn_in = 10 * n * n
    idx = range(trial_offset, trial_offset + trials)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = list(ex.map(lambda i: _one_chain(n, params, burn_in, observable, seed, i), idx))
    else:
        vals = [_one_chain(n, params, burn_in, observable, seed, i) for i in idx]
    vals = np.asarray(vals, dtype=float)
    mean = float(vals.mean())
    sd = float(vals.std(ddof=1)) if trials > 1 else 0.0
    if r_grid is None:
        r_grid = np.linspace(0.0, max(4 * sd, 1.0), 9)
    r_grid = np.asarray(r_grid, dtype=float)
    dev = np.abs(vals - mean)
    exc = np.array([(dev >= r).mean() for r in r_grid])
    env = _envelope(observable, r_grid, n, alpha, c)
    return FluctuationSummary(n, q, observable, vals, mean, sd, r_grid, exc, env, trials)


def _inv10(x):
    # pairs i < j with x_i = 1 and x_j = 0
    ones_before = np.cumsum(x) - x
    return int(np.sum(ones_before[x == 0]))


def detailed_balance_diagnostic(n: int, q: float, rate_pairs=None) -> list:
    """Check which swap probabilities make ``q**Inv`` weights reversible.

    For each ``(swap_up, swap_down)`` pair the exact stationary law of the
    chain with ``n/2`` particles is computed and compared with the two
    Mallows-type weights ``q**I10`` and ``q**I01``, where ``I10`` counts
    pairs ``i < j`` with ``(X_i, X_j) = (1, 0)`` and ``I01`` the reverse.

    Returns
    -------
    list of dict
        One record per rate pair with the maximal relative deviation from
        each weight and the stationary ratio ``swap_up / swap_down``.
    """
    if n > 14 or n % 2:
        raise ValueError("diagnostic needs an even n <= 14")
    if rate_pairs is None:
        rate_pairs = [(1 - q / 2, q / 2), ((1 - q) / 2, q / 2), (0.5, q / 2)]
    configs = []
    for ones in combinations(range(n), n // 2):
        x = np.zeros(n, dtype=np.int64)
        x[list(ones)] = 1
        configs.append(x)
    index = {tuple(c): k for k, c in enumerate(configs)}
    m = len(configs)
    inv10 = np.array([_inv10(c) for c in configs], dtype=float)
    total_pairs = (n // 2) ** 2
    out = []
    for up, down in rate_pairs:
        P = np.zeros((m, m))
        for k, c in enumerate(configs):
            for i in range(n - 1):
                a, b = c[i], c[i + 1]
                if a == b:
                    continue
                d = c.copy()
                d[i], d[i + 1] = b, a
                p = (up if a == 1 else down) / (n - 1)
                P[k, index[tuple(d)]] += p
            P[k, k] = 1.0 - P[k].sum()
        w, v = np.linalg.eig(P.T)
        pi = np.real(v[:, np.argmin(np.abs(w - 1))])
        pi /= pi.sum()
        rec = {"swap_up": up, "swap_down": down}
        for name, expo in (("q^I10", inv10), ("q^I01", total_pairs - inv10)):
            ref = q ** expo
            ref /= ref.sum()
            rec[name] = float(np.max(np.abs(pi / ref - 1)))
        out.append(rec)
    return out
