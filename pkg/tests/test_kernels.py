import numpy as np
import pytest

from carpetlab.geometry import build_graph
from carpetlab.kernels import (SpectralKernelConfig, dirichlet_kernel,
                               heat_apply, heat_kernel, heat_kernel_field,
                               heat_trace, level_set_bands, loglog_fit,
                               scaled_heat_trace, trace_slope)
from carpetlab.operators import BoundarySpec
from carpetlab.spectra import eigensolve


@pytest.fixture(scope="module")
def g2():
    return build_graph(2)


@pytest.fixture(scope="module")
def neumann_full(g2):
    return eigensolve(g2, BoundarySpec("neumann"), g2.n_cells)


@pytest.fixture(scope="module")
def config(neumann_full):
    return SpectralKernelConfig(neumann_full)


def test_heat_kernel_positive_and_symmetric(g2, config):
    rng = np.random.default_rng(2)
    pairs = rng.integers(0, g2.n_cells, size=(12, 2))
    for t in (0.01, 0.1, 1.0):
        for x, y in pairs:
            hxy = heat_kernel(config, t, int(x), int(y))
            hyx = heat_kernel(config, t, int(y), int(x))
            assert hxy == pytest.approx(hyx, rel=1e-10, abs=1e-12)
        field = heat_kernel_field(config, t, 0)
        assert field.min() > -1e-10  # semigroup of the graph generator


def test_heat_semigroup(g2, config):
    t, s = 0.07, 0.13
    for y in (0, 17):
        hs = heat_kernel_field(config, s, y)
        lhs = np.array([
            np.sum(heat_kernel_field(config, t, x) * hs) / g2.n_cells
            for x in range(0, g2.n_cells, 9)
        ])
        rhs = np.array([heat_kernel(config, t + s, x, y)
                        for x in range(0, g2.n_cells, 9)])
        assert np.abs(lhs - rhs).max() < 1e-8


def test_heat_apply_modes_and_mass(g2, config, neumann_full):
    phi3 = neumann_full.fields[:, 3]
    lam3 = neumann_full.lambda_sc[3]
    out = heat_apply(config, 0.05, phi3)
    assert np.abs(out - np.exp(-lam3 * 0.05) * phi3).max() < 1e-9
    rng = np.random.default_rng(0)
    f = rng.standard_normal(g2.n_cells)
    assert np.abs(heat_apply(config, 0.0, f) - f).max() < 1e-8
    for t in (0.1, 1.0, 5.0):
        assert heat_apply(config, t, f).mean() == pytest.approx(f.mean(), rel=1e-9)
    late = heat_apply(config, 1e6, f)
    assert np.abs(late - f.mean()).max() < 1e-7


def test_heat_apply_composes(g2, config):
    rng = np.random.default_rng(1)
    f = rng.standard_normal(g2.n_cells)
    one = heat_apply(config, 0.3, heat_apply(config, 0.2, f))
    two = heat_apply(config, 0.5, f)
    assert np.abs(one - two).max() < 1e-8


def test_heat_trace_shapes(neumann_full):
    lam = neumann_full.lambda_sc
    t = np.geomspace(1e-4, 10, 50)
    Z = heat_trace(lam, t)
    assert np.all(np.diff(Z) < 0)
    t_lin = np.linspace(0.01, 5.0, 60)
    Z_lin = heat_trace(lam, t_lin)
    assert np.all(np.diff(Z_lin, 2) > -1e-9 * Z_lin[0])  # convex up to roundoff
    assert Z[-1] == pytest.approx(1.0, abs=1e-6)  # one zero mode survives
    single = heat_trace(np.array([2.0]), t)
    assert np.abs(single - np.exp(-2.0 * t)).max() < 1e-14
    scaled = scaled_heat_trace(lam, t, 0.9)
    assert np.allclose(scaled, t**0.9 * Z)


def test_trace_slope_synthetic_power_law():
    alpha = 0.9026
    lam = (np.arange(1, 4097) / 2.0) ** (1 / alpha)
    slope, window = trace_slope(lam, n_total=4096)
    assert slope == pytest.approx(-alpha, abs=0.02)
    assert window[0] < window[1]
    # truncated version: the dropped tail stays below 1% of Z at the window
    slope_tr, window_tr = trace_slope(lam[:1200], n_total=4096)
    missing = 4096 - 1200
    Z_lo = heat_trace(lam[:1200], np.array([window_tr[0]]))[0]
    assert missing * np.exp(-lam[1199] * window_tr[0]) <= 0.01 * Z_lo * 1.001
    assert slope_tr == pytest.approx(-alpha, abs=0.02)


def test_truncation_flag(neumann_full):
    cfg_full = SpectralKernelConfig(neumann_full)
    assert not cfg_full.truncation_flag(1e-9)
    cfg_cut = SpectralKernelConfig(neumann_full, truncate=10)
    assert cfg_cut.truncation_flag(1e-9)
    assert not cfg_cut.truncation_flag(1e3)
    with pytest.raises(ValueError):
        SpectralKernelConfig(neumann_full, truncate=0)


def test_dirichlet_kernel_completeness(g2, neumann_full):
    y = 11
    full = dirichlet_kernel(neumann_full, neumann_full.k, y)
    expected = np.zeros(g2.n_cells)
    expected[y] = g2.n_cells
    assert np.abs(full - expected).max() < 1e-8
    # reproducing property of partial sums
    N = 20
    DN = dirichlet_kernel(neumann_full, N, y)
    for i in (0, 5, 19):
        phi = neumann_full.fields[:, i]
        got = np.sum(DN * phi) / g2.n_cells
        assert got == pytest.approx(phi[y], abs=1e-9)


def test_level_set_bands(g2):
    const = np.ones(g2.n_cells)
    assert np.all(level_set_bands(const, 5) == 0)
    x = g2.cols.astype(float)
    bands = level_set_bands(x, 3)
    assert set(bands) == {0, 1, 2}
    # vertical stripes: band index depends on the column only
    for c in np.unique(g2.cols):
        sel = g2.cols == c
        assert len(set(bands[sel])) == 1
    with pytest.raises(ValueError):
        level_set_bands(x, 1)


def test_resistance_and_heat_bands_correlate():
    # level sets of the heat kernel roughly follow the resistance metric
    from carpetlab.harmonic import resistance_field

    g3 = build_graph(3)
    es = eigensolve(g3, BoundarySpec("neumann"), g3.n_cells)
    y = int(g3.boundary_cells["top"][g3.side_length // 2])
    rfield = resistance_field(g3, g3.address(y))
    hfield = heat_kernel_field(SpectralKernelConfig(es), 0.05, y)
    rb = level_set_bands(rfield, 8).astype(float)
    hb = level_set_bands(-hfield, 8).astype(float)  # kernel decays where R grows
    rank_corr = np.corrcoef(rb, hb)[0, 1]
    assert rank_corr >= 0.8


def test_loglog_fit_guard():
    with pytest.raises(ValueError):
        loglog_fit(np.array([1.0, 2.0]), np.array([1.0, -2.0]))
