import itertools

import numpy as np
import pytest

from carpetlab.geometry import (D4, D4_BY_NAME, apply_symmetry,
                                apply_symmetry_indices, build_graph, compose,
                                graph_from_json, graph_to_json,
                                line_restriction)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_cell_and_virtual_counts(m):
    g = build_graph(m)
    assert g.n_cells == 8**m
    assert g.n_virtual == 4 * 3**m
    assert len(g.virtual_owners()) == 4 * 3**m


def test_corner_cells_own_two_virtuals():
    g = build_graph(2)
    counts = g.virtual_count_per_cell()
    assert counts[g.index("00")] == 2
    for corner in ("00", "22", "44", "66"):
        assert counts[g.index(corner)] == 2
    # every other boundary cell owns exactly one
    boundary = set()
    for side in g.boundary_cells.values():
        boundary.update(int(i) for i in side)
    corners = {g.index(c) for c in ("00", "22", "44", "66")}
    for i in boundary - corners:
        assert counts[i] == 1
    assert counts.sum() == g.n_virtual


def test_level1_is_a_ring():
    g = build_graph(1)
    assert np.all(g.degrees() == 2)
    assert g.neighbors("1") == ["0", "2"]
    assert g.neighbors("0") == ["1", "7"]


def test_degree_histogram_m2():
    g = build_graph(2)
    assert set(np.unique(g.degrees())) == {2, 3, 4}


def test_neighbor_examples():
    g = build_graph(2)
    assert g.neighbors("00") == ["01", "07"]
    # the cell below '15' across the 1-cell interface is the central hole
    assert g.neighbors("15") == ["14", "16"]


def test_unknown_cell_raises():
    g = build_graph(2)
    with pytest.raises(ValueError):
        g.neighbors("0")  # wrong length
    with pytest.raises(ValueError):
        g.neighbors("08")


def test_level_guard():
    with pytest.raises(ValueError):
        build_graph(0)
    with pytest.raises(ValueError):
        build_graph(9)


def test_cell_rect_geometry():
    g = build_graph(2)
    x0, y0, x1, y1 = g.cell_rect("00")
    assert (x0, y1) == (0.0, 1.0)  # top-left corner cell
    assert x1 - x0 == pytest.approx(1 / 9)
    # figure-caption anchors that pin the digit convention
    g5 = build_graph(5)
    cx, cy = g5.cell_center("11111")
    assert cx == pytest.approx(0.5, abs=1e-2)          # top-center cell
    assert cy > 1 - 3**-5
    cx, cy = g5.cell_center("10000")
    assert cx == pytest.approx(1 / 3, abs=3**-5)       # junction on the top edge
    assert cy > 1 - 3**-5
    cx, cy = g5.cell_center("15555")                   # just above the big hole
    assert cx == pytest.approx(0.5, abs=1e-2)
    assert cy == pytest.approx(2 / 3, abs=3**-5)
    assert cy > 2 / 3


def test_symmetry_examples():
    ident = D4_BY_NAME["identity"]
    assert apply_symmetry(ident, "230") == "230"
    assert apply_symmetry(D4_BY_NAME["mirror_h"], "00") == "22"
    assert apply_symmetry(D4_BY_NAME["mirror_v"], "11") == "55"


def test_group_axioms_and_composition():
    # closure and the composition identity on all pairs, all cells at m=2
    g = build_graph(2)
    addresses = [g.address(i) for i in range(g.n_cells)]
    for a, b in itertools.product(D4, repeat=2):
        ab = compose(a, b)
        for addr in addresses[:: 7]:
            assert apply_symmetry(ab, addr) == apply_symmetry(a, apply_symmetry(b, addr))
    # each element is a bijection with an inverse in the group
    for a in D4:
        assert sorted(a.perm) == list(range(8))
        assert any(compose(a, b).name == "identity" for b in D4)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_symmetries_are_graph_automorphisms(m):
    g = build_graph(m)
    edge_set = {(int(a), int(b)) for a, b in g.edges}
    for el in D4:
        p = apply_symmetry_indices(el, g)
        for a, b in g.edges:
            ia, ib = int(p[a]), int(p[b])
            assert (min(ia, ib), max(ia, ib)) in edge_set


def test_line_restriction_top_row():
    g = build_graph(2)
    runs = line_restriction(g, "00", "horizontal")
    assert len(runs) == 1
    assert len(runs[0]) == 9
    coords = [c for _, c in runs[0]]
    assert coords == sorted(coords)


def test_line_restriction_half_diagonal_m1():
    g = build_graph(1)
    runs = line_restriction(g, "0", "half_diagonal")
    # the run through the anchor stops at the removed center
    assert [a for a, _ in runs[0]] == ["0"]


def test_line_restriction_splits_at_central_hole():
    for m in (2, 3):
        g = build_graph(m)
        anchor = g.address(int(g.grid[0, 3 ** (m - 1)]))  # middle band, left edge
        runs = line_restriction(g, anchor, "horizontal")
        assert len(runs) == 2
        assert all(len(r) == 3 ** (m - 1) for r in runs)


def test_line_restriction_errors():
    g = build_graph(2)
    off_diagonal = g.address(int(g.grid[1, 0]))
    with pytest.raises(ValueError):
        line_restriction(g, off_diagonal, "half_diagonal")
    with pytest.raises(ValueError):
        line_restriction(g, "00", "sideways")


def test_build_is_deterministic_and_serializable():
    a, b = build_graph(3), build_graph(3)
    ja, jb = graph_to_json(a), graph_to_json(b)
    assert ja == jb
    assert a.content_hash() == b.content_hash()
    c = graph_from_json(ja)
    assert c.content_hash() == a.content_hash()
    with pytest.raises(ValueError):
        graph_from_json(ja.replace('"format_version":1', '"format_version":99'))


def test_virtual_index_layout():
    g = build_graph(2)
    # virtual cells indexed after real cells: side order top, right, bottom, left
    assert g.virtual_index("top", 0) == g.n_cells
    assert g.virtual_index("right", 0) == g.n_cells + 9
    assert g.virtual_index("left", 8) == g.n_cells + 4 * 9 - 1
    lo, hi = g.segment_interval(3)
    assert (lo, hi) == pytest.approx((3 / 9, 4 / 9))
