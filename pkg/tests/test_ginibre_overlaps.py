import math

import numpy as np
import pytest
from scipy.special import gammaln

from probwork.ginibre import (banded_slogdet, eigen_overlaps, estimate_overlaps_mc,
                              mixed_moment_mc, o1_density, o2_density_exact, o2_matrix,
                              o2_window_average, r1_density, sample_ginibre)
from probwork.ginibre.overlaps import _annulus_average
from probwork.harness.streams import derive_stream


def _h_entry_quadrature(N, z1, z2, j, k, order=60, phis=64):
    # direct polar quadrature of the defining integral with the balanced scaling
    x, w = np.polynomial.legendre.leggauss(order)
    R = 8.0 / math.sqrt(N)
    r = (x + 1) * R / 2
    wr = w * R / 2
    phi = 2 * math.pi * np.arange(phis) / phis
    L = r[:, None] * np.exp(1j * phi)[None, :]
    br = (abs(z1 - L) ** 2 * abs(z2 - L) ** 2 + (np.conj(z1) - np.conj(L)) * (z2 - L) / N)
    f = np.conj(L) ** j * L ** k * br * np.exp(-N * abs(L) ** 2)
    val = np.sum(f * (wr * r)[:, None]) * 2 * math.pi / phis
    scale = 0.5 * ((j + k + 6) * math.log(N) - 2 * math.log(math.pi) - gammaln(j + 2) - gammaln(k + 2))
    return val * math.exp(scale)


def test_h_entries_against_direct_quadrature():
    N, z1, z2 = 7, 0.3 + 0.2j, -0.1 + 0.4j
    H = o2_matrix(N, z1, z2)
    for j in range(N - 2):
        for k in range(N - 2):
            assert H[j, k] == pytest.approx(_h_entry_quadrature(N, z1, z2, j, k), rel=1e-9, abs=1e-12)


def test_h_is_five_banded():
    H = o2_matrix(12, 0.31 - 0.2j, 0.17 + 0.44j)
    j, k = np.indices(H.shape)
    assert np.all(H[np.abs(j - k) > 2] == 0)
    assert np.all(H[np.abs(j - k) <= 2] != 0)
    with pytest.raises(ValueError):
        o2_matrix(41, 0.1, 0.2)


def test_banded_slogdet_matches_dense():
    rng = derive_stream(0, 0)
    for n in (1, 2, 5, 30):
        H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        j, k = np.indices(H.shape)
        H[np.abs(j - k) > 2] = 0
        ph, la = banded_slogdet(H)
        ph2, la2 = np.linalg.slogdet(H)
        assert la == pytest.approx(la2, rel=1e-12)
        assert ph == pytest.approx(ph2, rel=1e-10)
    ph, la = banded_slogdet(o2_matrix(10, 0.3, 0.3))
    ph2, la2 = np.linalg.slogdet(o2_matrix(10, 0.3, 0.3))
    assert la == pytest.approx(la2, rel=1e-12, abs=1e-12)


def test_o2_symmetries():
    N, z1, z2 = 9, 0.2 + 0.3j, -0.4 + 0.1j
    a = o2_density_exact(N, z1, z2)
    assert o2_density_exact(N, z2, z1) == pytest.approx(np.conj(a), rel=1e-12)
    w = np.exp(1.1j)
    assert o2_density_exact(N, z1 * w, z2 * w) == pytest.approx(a, rel=1e-10)
    batch = o2_density_exact(N, np.array([z1, z2]), np.array([z2, z1]))
    assert batch[0] == pytest.approx(a, rel=1e-12)


def test_o2_is_negative_in_the_bulk_at_short_distance():
    # near the diagonal the bulk model -(1 - |z|^2) N^2 g / pi^2 applies
    val = o2_density_exact(30, 0.1, 0.1 + 0.05)
    assert val.real < 0


def test_eigen_overlaps_identities():
    A = sample_ginibre(8, derive_stream(1, 0))
    lam, O, ok = eigen_overlaps(A)
    assert ok
    np.testing.assert_allclose(np.diag(O).imag, 0, atol=1e-10)
    assert np.all(np.diag(O).real >= 1 - 1e-10)
    # rows of the overlap matrix sum to one
    np.testing.assert_allclose(O.sum(axis=1), 1.0, atol=1e-10)
    # and the word A^2 (A*)^2 is recovered from eigen-data
    M = np.einsum("j,k,jk->", lam ** 2, np.conj(lam) ** 2, O) / 8
    tr = np.trace(A @ A @ A.conj().T @ A.conj().T) / 8
    assert M == pytest.approx(tr, rel=1e-9)


def test_monte_carlo_tables_against_exact():
    N = 100
    edges = np.linspace(0.0, 1.1, 12)
    t = estimate_overlaps_mc(N, 300, seed=1, r_edges=edges, moment_orders=(1, 2))
    assert t.skipped == 0
    assert t.min_diag_sum_excess >= -1e-8
    assert np.all(np.abs(t.r1 - t.r1_exact()) < 3.5 * t.r1_se + 1e-12)
    o1_exact = _annulus_average(lambda r: o1_density(N, r), edges)
    assert np.all(np.abs(t.o1 - o1_exact) < 3.5 * t.o1_se)
    # overlaps sum to one over each row, so O1 + O2-marginal reproduces R1
    np.testing.assert_allclose(t.o1 + t.o2_marginal, t.r1, atol=1e-10)
    for p in (1, 2):
        ref = mixed_moment_mc(N, ((p,), (p,)), 300, seed=2)
        m, se = t.moments[p]
        assert abs(m.real - ref.mean.real) < 4 * math.hypot(se, ref.stderr)


def test_monte_carlo_pairs_against_window_average():
    N = 4
    pairs = [(0.3, 0.5j), (0.5, 0.5 * np.exp(1j * math.pi / 3))]
    t = estimate_overlaps_mc(N, 20000, seed=11, pairs=pairs)
    for i, (z1, z2) in enumerate(pairs):
        ref = o2_window_average(N, z1, z2)
        assert abs(t.o2_pairs[i].real - ref.real) < 4 * t.o2_pairs_se_real[i]
        assert abs(t.o2_pairs[i].imag - ref.imag) < 4 * t.o2_pairs_se_imag[i]


def test_mc_validation():
    with pytest.raises(ValueError):
        estimate_overlaps_mc(10, 50)
    with pytest.raises(ValueError):
        estimate_overlaps_mc(300, 100)
