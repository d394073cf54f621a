import numpy as np
import pytest

from carpetlab.geometry import apply_symmetry_indices, build_graph, D4_BY_NAME
from carpetlab.operators import BoundarySpec, assemble
from carpetlab.spectra import (CoincidenceReport, coincidence_check,
                               classify_symmetry, counting_difference,
                               counting_function, counting_slope,
                               detect_clusters, difference_exponent,
                               eigensolve, eigenvalue_scan, miniaturize,
                               sign_changes, sup_norm_stats, weyl_ratio)


@pytest.fixture(scope="module")
def g2():
    return build_graph(2)


@pytest.fixture(scope="module")
def g3():
    return build_graph(3)


@pytest.fixture(scope="module")
def m3_full(g3):
    out = {}
    for kind in ("dirichlet", "neumann", "torus", "klein", "projective"):
        out[kind] = eigensolve(g3, BoundarySpec(kind), g3.n_cells)
    return out


def test_sparse_matches_dense_oracle(g3, m3_full):
    for kind in ("dirichlet", "neumann"):
        sparse = eigensolve(g3, BoundarySpec(kind), 30, dense_limit=0)
        dense = m3_full[kind]
        assert np.abs(sparse.eigenvalues - dense.eigenvalues[:30]).max() < 1e-9


def test_eigenvalue_scan_matches_dense(g3, m3_full):
    scanned = eigenvalue_scan(g3, BoundarySpec("dirichlet"), 480, block=60)
    dense = m3_full["dirichlet"].eigenvalues
    n = len(scanned)
    assert n >= 480
    assert np.abs(scanned - dense[:n]).max() < 1e-8


def test_neumann_zero_mode(g2):
    es = eigensolve(g2, BoundarySpec("neumann"), 4)
    assert 0.0 <= es.eigenvalues[0] < 1e-12
    assert np.std(es.fields[:, 0]) < 1e-10
    # normalized against the cell measure: constant field has value 1
    assert abs(abs(es.fields[0, 0]) - 1.0) < 1e-10


def test_orthonormal_under_cell_measure(g2):
    es = eigensolve(g2, BoundarySpec("dirichlet"), 12)
    gram = es.fields.T @ es.fields / g2.n_cells
    assert np.abs(gram - np.eye(12)).max() < 1e-8
    assert np.all(es.residuals < 1e-8)


def test_degenerate_pair_rotation_invariant(g2):
    es = classify_symmetry(eigensolve(g2, BoundarySpec("dirichlet"), 4), g2)
    assert es.labels[1] == es.labels[2] == "2"
    assert abs(es.eigenvalues[1] - es.eigenvalues[2]) < 10 * max(es.residuals)
    U = es.fields[:, 1:3]
    perm = apply_symmetry_indices(D4_BY_NAME["rot90"], g2)
    rotated = U[perm, :]
    # rotated pair stays inside its own span
    proj = U @ (U.T @ rotated) / g2.n_cells
    assert np.linalg.norm(rotated - proj) / np.linalg.norm(rotated) < 1e-6


def test_level1_labels_split_accidental_pair():
    g1 = build_graph(1)
    es = classify_symmetry(eigensolve(g1, BoundarySpec("neumann"), 8), g1)
    assert es.labels == ["constant", "2", "2", "1-+", "1+-", "2", "2", "1++"]


def test_classify_rejects_wrong_families(g2):
    es = eigensolve(g2, BoundarySpec("klein"), 4)
    with pytest.raises(ValueError):
        classify_symmetry(es, g2)


def test_dirichlet_dominates_neumann(m3_full):
    d = m3_full["dirichlet"].eigenvalues
    n = m3_full["neumann"].eigenvalues
    assert np.all(d - n > -1e-12)
    # so the counting functions are ordered the other way around
    grid = np.union1d(d, n)
    assert np.all(counting_function(n, grid) >= counting_function(d, grid))


def test_quartet_structure_m4():
    g4 = build_graph(4)
    es = classify_symmetry(eigensolve(g4, BoundarySpec("dirichlet"), 40,
                                      dense_limit=0), g4)
    for q in range(10):
        labels = es.labels[4 * q : 4 * q + 4]
        assert labels.count("2") == 2, (q, labels)
        ones = [l for l in labels if l.startswith("1")]
        assert len(ones) == 2


def test_counting_basics(m3_full):
    d = m3_full["dirichlet"].lambda_sc
    assert counting_function(d, d[0] * 1.0001) == 1
    assert counting_function(d, 0.0) == 0
    t, W = weyl_ratio(d, 0.9)
    assert len(t) == len(W)


def test_counting_slope_on_synthetic_power_law():
    alpha = 0.9026
    lam = (np.arange(1, 3001) / 3.0) ** (1 / alpha)
    slope, _ = counting_slope(lam, (50, 2000))
    assert slope == pytest.approx(alpha, abs=1e-3)
    # N(t) = 3 t^alpha exactly, so the ratio sits at 3 where steps are dense
    t, W = weyl_ratio(lam, alpha, t_grid=np.geomspace(lam[99], lam[2500], 200))
    assert np.abs(W / 3.0 - 1.0).max() < 0.02


def test_counting_difference_and_signs():
    a = np.array([1.0, 2.0, 3.0])
    grid, diff = counting_difference(a, a)
    assert np.all(diff == 0)
    assert sign_changes(diff) == 0
    b = np.array([0.5, 2.5, 3.5])
    _, diff2 = counting_difference(a, b)
    assert sign_changes(diff2) >= 1


def test_difference_exponent_synthetic():
    alpha, beta = 0.9, 0.477
    j = np.arange(1, 4001)
    base = (j / 2.0) ** (1 / alpha)
    # second spectrum shifted so the counting difference grows like t^beta
    n_extra = (j / 1.0) ** (1 / beta)
    merged = np.sort(np.concatenate([base, n_extra]))[:4000]
    slope, _ = difference_exponent(merged, base, (50, 2000))
    assert slope == pytest.approx(beta, abs=0.05)


def test_coincidences_m3(m3_full):
    n = classify_symmetry(m3_full["neumann"], build_graph(3))
    report = coincidence_check(n, m3_full["torus"], m3_full["klein"],
                               m3_full["projective"], tol=1e-9)
    assert report.ok, report.violations[:5]
    assert len(report.entries) > 50
    # and the checks really exercised all three target spectra
    assert any(e[3] for e in report.entries)
    assert any(e[5] for e in report.entries)


def test_coincidence_empty():
    g1 = build_graph(1)
    empty = eigensolve(g1, BoundarySpec("neumann"), 1)
    empty = classify_symmetry(empty, g1)
    report = coincidence_check(empty, empty, empty, empty)
    assert isinstance(report, CoincidenceReport)
    assert report.ok


def test_miniaturize_constant_and_ring():
    g1, g2_ = build_graph(1), build_graph(2)
    es = classify_symmetry(eigensolve(g1, BoundarySpec("neumann"), 8), g1)
    const = es.fields[:, 0]
    fine, resid = miniaturize(const, 0.0, "constant", g2_)
    assert resid < 1e-12
    assert np.ptp(fine) < 1e-12
    for j, label in enumerate(es.labels):
        if label in ("1++", "1-+", "1+-", "1--"):
            fine, resid = miniaturize(es.fields[:, j], es.eigenvalues[j],
                                      label, g2_)
            assert resid < 1e-8, (label, resid)
            # the miniature really is an eigenfield of the finer operator
            A2 = assemble(g2_, BoundarySpec("neumann"))
            lam = (fine @ (A2 @ fine)) / (fine @ fine)
            assert lam == pytest.approx(es.eigenvalues[j], abs=1e-10)
    with pytest.raises(ValueError):
        miniaturize(es.fields[:, 1], es.eigenvalues[1], "2", g2_)


def test_miniaturized_eigenvalue_scales_by_rho():
    g1, g2_ = build_graph(1), build_graph(2)
    es = classify_symmetry(eigensolve(g1, BoundarySpec("neumann"), 8), g1)
    j = es.labels.index("1++")
    fine, _ = miniaturize(es.fields[:, j], es.eigenvalues[j], "1++", g2_)
    # unrenormalized value unchanged, so the renormalized one gains a factor rho
    assert es.rho**2 * es.eigenvalues[j] == pytest.approx(
        es.rho * (es.rho**1 * es.eigenvalues[j]))


def test_sup_norm_stats(g2):
    es = eigensolve(g2, BoundarySpec("neumann"), 6)
    lam, sup, running = sup_norm_stats(es)
    assert sup[0] == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.diff(running) >= 0)
    assert len(lam) == len(sup) == 6


def test_detect_clusters_synthetic(g2):
    es = eigensolve(g2, BoundarySpec("neumann"), 8)
    # spread-out spectrum: no clusters at a tiny tolerance
    assert detect_clusters(es, gap_tol=1e-9) == []
    clusters = detect_clusters(es, gap_tol=np.ptp(es.lambda_sc) + 1.0)
    assert len(clusters) == 1
    positions, values = clusters[0]
    assert positions[0] == 1 and len(values) >= 2


def test_detect_clusters_reference_pattern():
    # the trio of near-coincident distinct values around position 53-55 and
    # the quartet near 118-121; at level 4 the trio's spread is 2.01, a bit
    # wider than in the finer-level reference data
    g4 = build_graph(4)
    es = eigensolve(g4, BoundarySpec("dirichlet"), 130, dense_limit=0,
                    return_fields=False)
    flagged = detect_clusters(es, gap_tol=2.5)
    covered = [pos for positions, _ in flagged for pos in positions]
    assert any(53 <= p <= 55 for p in covered)
    flagged10 = detect_clusters(es, gap_tol=10.0)
    covered10 = {pos for positions, _ in flagged10 for pos in positions}
    assert any(118 <= p <= 121 for p in covered10)
