import numpy as np
import pytest

from carpetlab.boundary import (corner_decay_across_levels, corner_stack,
                                decay_profile, edge_stacks, fit_corner_decay,
                                fit_decay, boundary_functional,
                                gauss_green_residual)
from carpetlab.geometry import build_graph
from carpetlab.harmonic import sin_boundary_data, solve_bvp


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_gauss_green_identity(m):
    g = build_graph(m)
    sol = solve_bvp(g, sin_boundary_data(g, 1 + (m % 3)))
    rng = np.random.default_rng(m)
    v = rng.standard_normal(g.n_cells)
    terms = gauss_green_residual(sol.field, sol.virtual_values, v, g)
    assert terms.residual <= 1e-12 * max(1.0, abs(terms.energy))


def test_gauss_green_neumann_extension_kills_boundary_term():
    g = build_graph(3)
    rng = np.random.default_rng(0)
    u = rng.standard_normal(g.n_cells)
    u_virtual = u[g.virtual_owners()]  # even extension
    v = rng.standard_normal(g.n_cells)
    terms = gauss_green_residual(u, u_virtual, v, g)
    assert terms.boundary == 0.0
    assert terms.residual < 1e-12 * max(1.0, abs(terms.energy))


def test_gauss_green_constants():
    g = build_graph(2)
    u = np.full(g.n_cells, 2.0)
    terms = gauss_green_residual(u, np.full(g.n_virtual, 2.0), u, g)
    assert terms.energy == terms.interior == terms.boundary == 0.0


def test_boundary_functional_harmonic_v_one():
    g = build_graph(3)
    sol = solve_bvp(g, sin_boundary_data(g, 2))
    value, densities = boundary_functional(sol.field, sol.virtual_values,
                                           np.ones(g.n_cells), g)
    # for harmonic u the interior term vanishes row by row
    assert abs(value) < 1e-9
    assert densities.shape == (g.n_virtual,)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_eligible_stack_count(m):
    g = build_graph(m)
    for side in ("top", "bottom", "left", "right"):
        assert len(edge_stacks(g, side)) == (2 * 3**m) // 3


def test_fit_decay_exact_linear():
    g = build_graph(3)
    stack = edge_stacks(g, "bottom")[0]
    u = np.zeros(g.n_cells)
    c = 1.7
    for cell, d in zip(stack.cells, stack.distances):
        u[cell] = c * d
    fit = fit_decay(u, stack)
    assert fit.alpha == pytest.approx(1.0, abs=1e-12)
    assert fit.amplitude == pytest.approx(c, rel=1e-12)
    # scale equivariance, including the sign
    fit2 = fit_decay(-3.0 * u, stack)
    assert fit2.alpha == pytest.approx(fit.alpha, abs=1e-12)
    assert fit2.amplitude == pytest.approx(-3.0 * c, rel=1e-12)


def test_fit_decay_degenerate():
    g = build_graph(2)
    stack = edge_stacks(g, "bottom")[0]
    with pytest.raises(ValueError):
        fit_decay(np.zeros(g.n_cells), stack)


def test_decay_profile_empty_for_zero_field():
    g = build_graph(2)
    prof = decay_profile(np.zeros(g.n_cells), g, "bottom")
    assert len(prof.positions) == 0
    assert len(prof.skipped) == 6


def test_decay_profile_odd_even_pattern():
    # profiles of same-parity boundary data nearly coincide
    g = build_graph(4)
    profs = {}
    for k in (1, 3, 5):
        sol = solve_bvp(g, sin_boundary_data(g, k))
        profs[k] = decay_profile(sol.field, g, "bottom")
    assert profs[1].positions == profs[3].positions
    for a, b in ((1, 3), (3, 5)):
        sup = np.abs(profs[a].alphas - profs[b].alphas).max()
        assert sup <= 1e-3, (a, b, sup)


def test_corner_stacks_exist_everywhere():
    g = build_graph(2)
    for corner in ("top_left", "top_right", "bottom_left", "bottom_right"):
        st = corner_stack(g, corner)
        assert len(set(st.cells)) == 5
    with pytest.raises(ValueError):
        corner_stack(g, "middle")


def test_corner_alpha_k_independent():
    # bottom corners: all boundary data vanishes there and the fit exponent
    # does not depend on which sin datum drives the field
    g = build_graph(4)
    alphas = []
    for k in range(1, 7):
        sol = solve_bvp(g, sin_boundary_data(g, k))
        fit = fit_corner_decay(sol.field, corner_stack(g, "bottom_left"))
        alphas.append(fit.alpha)
    assert np.ptp(alphas) < 1e-3
    # forced local structure: the first pair average is exactly three times
    # the corner value, tying the three-point fit near 1.41
    sol = solve_bvp(g, sin_boundary_data(g, 1))
    st = corner_stack(g, "bottom_left")
    v1 = sol.field[st.cells[0]]
    v2 = 0.5 * (sol.field[st.cells[1]] + sol.field[st.cells[2]])
    assert v2 == pytest.approx(3.0 * v1, rel=1e-10)


def test_corner_decay_across_levels():
    levels = []
    for m in (1, 2, 3, 4):
        g = build_graph(m)
        levels.append((g, solve_bvp(g, sin_boundary_data(g, 1)).field))
    _, alpha = corner_decay_across_levels(levels, "bottom_left")
    assert 2.6 <= alpha <= 2.75
    with pytest.raises(ValueError):
        corner_decay_across_levels(levels[:1], "bottom_left")
