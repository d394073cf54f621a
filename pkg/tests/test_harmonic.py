import numpy as np
import pytest

from carpetlab.geometry import apply_symmetry_indices, build_graph, D4_BY_NAME
from carpetlab.harmonic import (BoundaryData, ResistanceSolver, blowup_fit,
                                boundary_delta, effective_resistance,
                                poisson_integral, poisson_kernel,
                                poisson_kernel_basis, resistance_field,
                                sin_boundary_data, solve_bvp)

# renormalized energies of the sin-data harmonic functions (reference table,
# r_inv there is ~1.2513 vs our default 1.25, hence the loose tolerance)
REFERENCE_ENERGIES = {
    (1, 1): 0.4012, (1, 2): 0.2487, (1, 3): 0.4688,
    (1, 4): 0.0622, (1, 5): 0.0160, (1, 6): 0.0,
    (2, 1): 1.2709, (2, 2): 2.2158, (2, 3): 2.5081,
    (2, 4): 2.4536, (2, 5): 2.1673, (2, 6): 1.7703,
    (3, 1): 1.5559, (3, 2): 3.3898, (3, 3): 5.2038,
    (3, 4): 6.8267, (3, 5): 8.2068, (3, 6): 9.2851,
}


def test_constant_data_gives_constant_field():
    g = build_graph(2)
    sol = solve_bvp(g, BoundaryData.constant(g, 3.5))
    assert np.abs(sol.field - 3.5).max() < 1e-12
    assert np.abs(sol.virtual_values - 3.5).max() < 1e-12
    assert sol.residual < 1e-12


def test_sin_segment_averages_closed_form():
    g = build_graph(1)
    data = sin_boundary_data(g, 1)
    top = data.values[data.segment_slice("top")]
    assert top[0] == pytest.approx(3 / (2 * np.pi))
    assert top[0] == pytest.approx(top[2])  # mirror symmetry about the midpoint
    assert np.all(data.values[data.segment_slice("bottom")] == 0.0)
    # full periods integrate to zero on each third
    assert np.abs(sin_boundary_data(g, 6).values).max() == 0.0
    with pytest.raises(ValueError):
        sin_boundary_data(g, 0)


def test_sin_k6_m1_energy_exactly_zero():
    g = build_graph(1)
    sol = solve_bvp(g, sin_boundary_data(g, 6))
    assert np.abs(sol.field).max() == 0.0
    assert sol.energy(g, 1.25) == 0.0


@pytest.mark.parametrize("m", [1, 2, 3])
def test_energies_match_reference(m):
    g = build_graph(m)
    for k in range(1, 7):
        e = solve_bvp(g, sin_boundary_data(g, k)).energy(g, 1.25)
        ref = REFERENCE_ENERGIES[(m, k)]
        if ref == 0.0:
            assert e == 0.0
        else:
            assert e == pytest.approx(ref, rel=5e-3)


def test_energy_monotone_in_level():
    for k in (1, 2, 3):
        energies = []
        for m in (1, 2, 3, 4):
            g = build_graph(m)
            energies.append(solve_bvp(g, sin_boundary_data(g, k)).energy(g, 1.25))
        assert all(b >= a for a, b in zip(energies, energies[1:]))


@pytest.mark.parametrize("m", [2, 3, 4])
def test_residual_small(m):
    g = build_graph(m)
    sol = solve_bvp(g, sin_boundary_data(g, 2))
    assert sol.residual < 1e-10


def test_maximum_principle():
    for m in (2, 3, 4):
        g = build_graph(m)
        for k in (1, 2, 3):
            data = sin_boundary_data(g, k)
            sol = solve_bvp(g, data)
            assert sol.field.max() <= data.values.max() + 1e-12
            assert sol.field.min() >= data.values.min() - 1e-12


def test_all_neumann_data_rejected():
    g = build_graph(1)
    data = BoundaryData.zero(g)
    data.neumann[:] = True
    with pytest.raises(ValueError):
        solve_bvp(g, data)


def test_mixed_neumann_segments():
    # prescribe the top edge, even-extend everywhere else
    g = build_graph(2)
    data = sin_boundary_data(g, 1)
    data.neumann[9:] = True
    sol = solve_bvp(g, data)
    assert sol.residual < 1e-11
    owners = g.virtual_owners()
    assert np.allclose(sol.virtual_values[9:], sol.field[owners[9:]])


def test_boundary_delta_placement():
    g = build_graph(2)
    data = boundary_delta(g, "top", 0.5)  # interior of the middle segment
    sl = data.segment_slice("top")
    assert data.values[sl][4] == 9.0
    assert data.values.sum() == pytest.approx(9.0)
    junction = boundary_delta(g, "top", 1 / 3)  # between segments 2 and 3
    assert junction.values[sl][2] == pytest.approx(4.5)
    assert junction.values[sl][3] == pytest.approx(4.5)
    corner = boundary_delta(g, "top", 0.0)
    assert corner.values[data.segment_slice("top")][0] == pytest.approx(4.5)
    assert corner.values[data.segment_slice("left")][0] == pytest.approx(4.5)
    with pytest.raises(ValueError):
        boundary_delta(g, "top", 1.5)


def test_poisson_superposition_is_one():
    # sum over all segment-midpoint kernels of 3^-m P(x, t_b) = 1
    g = build_graph(2)
    basis = poisson_kernel_basis(g)
    total = basis.sum(axis=1) / g.side_length
    assert np.abs(total - 1.0).max() < 1e-10


def test_poisson_integral_equals_direct_solve():
    g = build_graph(3)
    basis = poisson_kernel_basis(g)
    data = sin_boundary_data(g, 2)
    direct = solve_bvp(g, data)
    viaP = poisson_integral(g, data, basis=basis)
    assert np.abs(direct.field - viaP.field).max() < 1e-10
    # delta data returns the kernel column itself
    delta = BoundaryData.zero(g)
    delta.values[5] = g.side_length
    assert np.abs(poisson_integral(g, delta, basis=basis).field - basis[:, 5]).max() < 1e-12
    # constant data returns the constant field
    ones = BoundaryData.constant(g, 1.0)
    assert np.abs(poisson_integral(g, ones, basis=basis).field - 1.0).max() < 1e-10


def test_poisson_midpoint_kernel_mirror_symmetric():
    g = build_graph(1)
    sol = poisson_kernel(g, "top", 0.5)
    perm = apply_symmetry_indices(D4_BY_NAME["mirror_h"], g)
    assert np.abs(sol.field[perm] - sol.field).max() < 1e-12


def test_poisson_blowup_powerlaw():
    g = build_graph(4)
    sol = poisson_kernel(g, "top", 1 / 3)  # junction stimulus
    fit = blowup_fit(g, sol.field, "top", 1 / 3)
    assert fit["alpha"] < 0
    assert fit["r2"] >= 0.98


def test_effective_resistance_basics():
    g = build_graph(1)
    assert effective_resistance(g, "3", "3") == 0.0
    # ring of 8 unit resistors between neighbors: 7/8, renormalized by r = 0.8
    assert effective_resistance(g, "0", "1", 1.25) == pytest.approx(7 / 8 * 0.8, rel=1e-12)


def test_resistance_symmetry_and_triangle():
    g = build_graph(3)
    solver = ResistanceSolver(g, 1.25)
    rng = np.random.default_rng(5)
    cells = rng.integers(0, g.n_cells, size=(20, 2))
    for x, y in cells:
        rxy = solver.resistance(int(x), int(y))
        ryx = solver.resistance(int(y), int(x))
        assert abs(rxy - ryx) < 1e-10
        assert rxy >= -1e-14
    triples = rng.integers(0, g.n_cells, size=(12, 3))
    for x, y, z in triples:
        rxz = solver.resistance(int(x), int(z))
        rxy = solver.resistance(int(x), int(y))
        ryz = solver.resistance(int(y), int(z))
        assert rxz <= rxy + ryz + 1e-12


def test_resistance_field_matches_pairwise():
    g = build_graph(2)
    y = "11"
    field = resistance_field(g, y, 1.25)
    solver = ResistanceSolver(g, 1.25)
    iy = g.index(y)
    for i in range(0, g.n_cells, 7):
        assert field[i] == pytest.approx(solver.resistance(i, iy), abs=1e-11)
    assert field[iy] == 0.0
    # the far bottom corners beat every cell near y
    far = max(field[g.index("44")], field[g.index("66")])
    near = field[[g.index(a) for a in ("10", "12", "01")]]
    assert far > near.max()


def test_resistance_field_guard():
    g = build_graph(3)
    with pytest.raises(ValueError):
        resistance_field(g, "000", max_level=2)
