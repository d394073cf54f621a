"""Harmonic boundary value problems on the carpet.

A boundary datum prescribes, per virtual cell, either the average value of
the target function on the shared boundary segment or a Neumann (even
extension) marker.  The solver eliminates the virtual unknowns: a Dirichlet
segment with prescribed average v contributes 2 to its owner's diagonal and
2v to the right-hand side, a Neumann segment contributes nothing, and the
resulting 8^m x 8^m system is symmetric positive definite whenever at least
one segment is prescribed.  Virtual values are recovered afterwards from

    (h(x) + h(x*)) / 2 = v      (prescribed segment)
    h(x*) = h(x)                (neumann segment)

Sparse direct factorization is used through level 4, an algebraic-multigrid
preconditioned conjugate gradient beyond that, both polished by iterative
refinement so that the worst row residual stays near machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import SIDES, CarpetGraph
from .operators import DEFAULT_R_INV, BoundarySpec, assemble, energy

__all__ = [
    "BoundaryData",
    "HarmonicSolution",
    "solve_bvp",
    "sin_boundary_data",
    "boundary_delta",
    "poisson_kernel",
    "poisson_kernel_basis",
    "poisson_integral",
    "blowup_fit",
    "effective_resistance",
    "resistance_field",
    "ResistanceSolver",
]

DIRECT_MAX_LEVEL = 4
RESISTANCE_FIELD_MAX_LEVEL = 5


@dataclass
class BoundaryData:
    """Per-segment boundary averages with optional Neumann markers.

    values[b] is the prescribed average on virtual segment b (canonical
    order: top, right, bottom, left; position ascending).  Where neumann[b]
    is True the value is ignored and the even extension is imposed instead.
    """

    level: int
    values: np.ndarray
    neumann: np.ndarray

    @classmethod
    def zero(cls, graph: CarpetGraph) -> "BoundaryData":
        nb = graph.n_virtual
        return cls(graph.level, np.zeros(nb), np.zeros(nb, dtype=bool))

    @classmethod
    def constant(cls, graph: CarpetGraph, c: float) -> "BoundaryData":
        data = cls.zero(graph)
        data.values[:] = c
        return data

    def segment_slice(self, side: str) -> slice:
        k = SIDES.index(side)
        n = 3**self.level
        return slice(k * n, (k + 1) * n)

    def check(self, graph: CarpetGraph) -> None:
        if self.level != graph.level:
            raise ValueError("boundary data level does not match the graph")
        if self.values.shape != (graph.n_virtual,) or self.neumann.shape != (graph.n_virtual,):
            raise ValueError("boundary data arrays have the wrong length")


@dataclass
class HarmonicSolution:
    """Discrete harmonic field with recovered virtual values."""

    level: int
    field: np.ndarray
    virtual_values: np.ndarray
    residual: float
    data: BoundaryData

    def energy(self, graph: CarpetGraph, r_inv: float = DEFAULT_R_INV) -> float:
        return energy(self.field, self.field, graph, r_inv)


def sin_boundary_data(graph: CarpetGraph, k: int, edge: str = "top") -> BoundaryData:
    """Exact segment averages of sin(pi k t) along one edge, zero elsewhere.

    The average over segment [j h, (j+1) h] with h = 3^-m is
    (1/(pi k h)) * (cos(pi k j h) - cos(pi k (j+1) h)), evaluated in closed
    form rather than by quadrature.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    data = BoundaryData.zero(graph)
    n = graph.side_length
    j = np.arange(n)
    data.values[data.segment_slice(edge)] = (
        n / (np.pi * k) * (np.cos(np.pi * k * j / n) - np.cos(np.pi * k * (j + 1) / n))
    )
    return data


def _corner_segments(graph: CarpetGraph, side: str, t: float):
    last = graph.side_length - 1
    corners = {
        ("top", 0.0): (("top", 0), ("left", 0)),
        ("top", 1.0): (("top", last), ("right", 0)),
        ("bottom", 0.0): (("bottom", 0), ("left", last)),
        ("bottom", 1.0): (("bottom", last), ("right", last)),
        ("left", 0.0): (("top", 0), ("left", 0)),
        ("left", 1.0): (("bottom", 0), ("left", last)),
        ("right", 0.0): (("top", last), ("right", 0)),
        ("right", 1.0): (("bottom", last), ("right", last)),
    }
    return corners[(side, t)]


def boundary_delta(graph: CarpetGraph, side: str, t: float,
                   snap_tol: float = 1e-9) -> BoundaryData:
    """Discrete delta datum at boundary point t in [0, 1] along `side`.

    The segment containing t carries 3^m.  If t falls on the junction of two
    segments each carries 3^m / 2; a corner point splits between the two
    segments meeting there (one on each incident side).
    """
    if side not in SIDES:
        raise ValueError(f"unknown side {side!r}")
    if not (0.0 <= t <= 1.0):
        raise ValueError("stimulus parameter must lie in [0, 1]")
    data = BoundaryData.zero(graph)
    n = graph.side_length
    weight = float(n)
    if t in (0.0, 1.0):
        for s, pos in _corner_segments(graph, side, t):
            data.values[data.segment_slice(s)][pos] += weight / 2.0
        return data
    x = t * n
    nearest = round(x)
    if abs(x - nearest) <= snap_tol * n and 0 < nearest < n:
        sl = data.segment_slice(side)
        data.values[sl][nearest - 1] += weight / 2.0
        data.values[sl][nearest] += weight / 2.0
    else:
        data.values[data.segment_slice(side)][min(int(x), n - 1)] += weight
    return data


# -- linear solver ----------------------------------------------------------


def _refine(A: sp.spmatrix, b: np.ndarray, x: np.ndarray, solve, passes: int = 2):
    for _ in range(passes):
        r = b - A @ x
        if np.max(np.abs(r)) == 0.0:
            break
        x = x + solve(r)
    return x


def _solve_spd(A: sp.csr_matrix, b: np.ndarray, level: int,
               rtol: float = 1e-13) -> np.ndarray:
    """Solve an SPD system; supports a matrix of right-hand sides."""
    if level <= DIRECT_MAX_LEVEL:
        lu = spla.splu(A.tocsc())
        x = lu.solve(b)
        return _refine(A, b, x, lu.solve)
    import pyamg

    ml = pyamg.smoothed_aggregation_solver(A.tocsr(), max_coarse=500)

    def solve_one(rhs):
        x = ml.solve(rhs, tol=rtol, accel="cg", maxiter=400)
        return _refine(A, rhs, x,
                       lambda r: ml.solve(r, tol=rtol, accel="cg", maxiter=400))

    if b.ndim == 1:
        return solve_one(b)
    return np.column_stack([solve_one(b[:, j]) for j in range(b.shape[1])])


def _bvp_system(graph: CarpetGraph, data: BoundaryData):
    data.check(graph)
    if np.all(data.neumann):
        raise ValueError("all segments are Neumann; the system is singular")
    owners = graph.virtual_owners()
    n = graph.n_cells
    diag_add = np.zeros(n)
    rhs_add = np.zeros(n)
    dir_mask = ~data.neumann
    np.add.at(diag_add, owners[dir_mask], 2.0)
    np.add.at(rhs_add, owners[dir_mask], 2.0 * data.values[dir_mask])
    A = (assemble(graph, BoundarySpec("neumann")) + sp.diags(diag_add)).tocsr()
    return A, rhs_add


def _recover_virtuals(graph: CarpetGraph, data: BoundaryData, h: np.ndarray) -> np.ndarray:
    owners = graph.virtual_owners()
    virt = np.where(data.neumann, h[owners], 2.0 * data.values - h[owners])
    return virt


def _bvp_residual(graph: CarpetGraph, data: BoundaryData, h: np.ndarray,
                  virt: np.ndarray) -> float:
    owners = graph.virtual_owners()
    L = assemble(graph, BoundarySpec("neumann"))
    res_harm = -(L @ h)
    np.add.at(res_harm, owners, virt - h[owners])
    res_bd = np.where(data.neumann, virt - h[owners],
                      0.5 * (h[owners] + virt) - data.values)
    return float(max(np.max(np.abs(res_harm)), np.max(np.abs(res_bd))))


def solve_bvp(graph: CarpetGraph, data: BoundaryData) -> HarmonicSolution:
    """Solve the harmonic condition at every cell with the given boundary data.

    The full square system (8^m + 4*3^m unknowns: the harmonic condition at
    every cell including virtual neighbors, plus one boundary equation per
    virtual cell) has a unique solution; it is obtained here by eliminating
    the virtual unknowns first.  The reported residual is the worst absolute
    row error of the original square system.
    """
    A, rhs = _bvp_system(graph, data)
    h = _solve_spd(A, rhs, graph.level)
    virt = _recover_virtuals(graph, data, h)
    residual = _bvp_residual(graph, data, h, virt)
    return HarmonicSolution(graph.level, h, virt, residual, data)


# -- Poisson kernel ----------------------------------------------------------


def poisson_kernel(graph: CarpetGraph, side: str, t: float) -> HarmonicSolution:
    """Harmonic field approximating the kernel for a boundary delta at t."""
    return solve_bvp(graph, boundary_delta(graph, side, t))


def poisson_kernel_basis(graph: CarpetGraph, max_level: int = 4) -> np.ndarray:
    """Kernels for all 4*3^m segment-midpoint stimuli, one column per segment.

    Shares a single factorization across right-hand sides; the columns are
    ordered like the virtual cells.
    """
    if graph.level > max_level:
        raise ValueError(f"kernel basis guarded to level <= {max_level}")
    A, _ = _bvp_system(graph, BoundaryData.constant(graph, 1.0))
    owners = graph.virtual_owners()
    n, nb = graph.n_cells, graph.n_virtual
    rhs = np.zeros((n, nb))
    rhs[owners, np.arange(nb)] += 2.0 * graph.side_length
    return _solve_spd(A, rhs, graph.level)


def poisson_integral(graph: CarpetGraph, data: BoundaryData,
                     basis: np.ndarray | None = None) -> HarmonicSolution:
    """Harmonic extension through the kernel superposition
    h(x) = sum_b 3^-m P(x, t_b) fbar(b); equals solve_bvp by linearity."""
    data.check(graph)
    if np.any(data.neumann):
        raise ValueError("the kernel superposition requires prescribed data on "
                         "every segment")
    if basis is None:
        basis = poisson_kernel_basis(graph)
    h = basis @ (data.values / graph.side_length)
    virt = _recover_virtuals(graph, data, h)
    return HarmonicSolution(graph.level, h, virt,
                            _bvp_residual(graph, data, h, virt), data)


def _stimulus_point(side: str, t: float) -> tuple[float, float]:
    return {
        "top": (t, 1.0),
        "bottom": (t, 0.0),
        "left": (0.0, 1.0 - t),
        "right": (1.0, 1.0 - t),
    }[side]


def blowup_fit(graph: CarpetGraph, field: np.ndarray, side: str, t: float,
               d_min: float | None = None, d_max: float = 1.0 / 3.0) -> dict:
    """Power-law fit of a field approaching a boundary point.

    The fit runs along the approach line inside the carpet: the cells of
    the perpendicular through the stimulus (the diagonal from the corner
    when the stimulus is a corner), against the Euclidean distance of each
    cell center from the stimulus point.  Cells closer than d_min (two
    cell widths by default, where the discrete kernel is unreliable) and
    farther than d_max are excluded.  Returns A, alpha, the window, r2.
    """
    from .geometry import line_restriction

    h = 3.0 ** (-graph.level)
    x0, y0 = _stimulus_point(side, t)
    if t in (0.0, 1.0):
        corner_cells = {
            (0.0, 1.0): "0", (1.0, 1.0): "2", (1.0, 0.0): "4", (0.0, 0.0): "6",
        }
        anchor = corner_cells[(x0, y0)] * graph.level
        runs = line_restriction(graph, anchor, "half_diagonal")
        cells = [graph.index(a) for a, _ in runs[0]]
    else:
        n = graph.side_length
        pos = min(int(t * n), n - 1)
        if side in ("top", "bottom"):
            anchor_idx = int(graph.boundary_cells[side][pos])
            direction = "vertical"
        else:
            row = min(int((1.0 - y0) * n), n - 1)
            anchor_idx = int(graph.boundary_cells[side][row])
            direction = "horizontal"
        anchor = graph.address(anchor_idx)
        runs = line_restriction(graph, anchor, direction)
        run = next(r for r in runs if any(a == anchor for a, _ in r))
        cells = [graph.index(a) for a, _ in run]

    centers = np.array([graph.cell_center(graph.address(i)) for i in cells])
    dist = np.hypot(centers[:, 0] - x0, centers[:, 1] - y0)
    vals = np.asarray([field[i] for i in cells], dtype=float)
    if d_min is None:
        d_min = 2.0 * h
    sel = (dist >= d_min) & (dist <= d_max) & (vals > 0)
    if np.count_nonzero(sel) < 4:
        raise ValueError("not enough cells in the fit window")
    lx, ly = np.log(dist[sel]), np.log(vals[sel])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    r2 = 1.0 - float(resid @ resid) / float(((ly - ly.mean()) ** 2).sum())
    return {
        "alpha": float(slope),
        "A": float(np.exp(intercept)),
        "window": [float(dist[sel].min()), float(dist[sel].max())],
        "r2": r2,
        "points": int(np.count_nonzero(sel)),
    }


# -- effective resistance ----------------------------------------------------


class ResistanceSolver:
    """Effective resistance between cells through the Neumann energy form.

    One sparse factorization of the grounded Neumann Laplacian serves all
    pair queries.  R(x, y) = r^m (v(x) - v(y)) where L v = e_x - e_y; the
    solution is fixed up to a constant, which the difference removes.
    """

    def __init__(self, graph: CarpetGraph, r_inv: float = DEFAULT_R_INV,
                 ground: int = 0):
        self.graph = graph
        self.r_inv = r_inv
        self.ground = ground
        L = assemble(graph, BoundarySpec("neumann")).tocsc()
        keep = np.arange(graph.n_cells) != ground
        self._keep_index = np.cumsum(keep) - 1
        self._lu = spla.splu(L[keep][:, keep])
        self._scale = (1.0 / r_inv) ** graph.level

    def _solve_reduced(self, rhs_full: np.ndarray) -> np.ndarray:
        mask = np.arange(self.graph.n_cells) != self.ground
        v = np.zeros(self.graph.n_cells)
        v[mask] = self._lu.solve(rhs_full[mask])
        return v

    def potential(self, x: int, y: int) -> np.ndarray:
        """Mean-zero potential of a unit current injected at x, removed at y."""
        rhs = np.zeros(self.graph.n_cells)
        rhs[x] += 1.0
        rhs[y] -= 1.0
        v = self._solve_reduced(rhs)
        return v - v.mean()

    def resistance(self, x: int, y: int) -> float:
        if x == y:
            return 0.0
        v = self.potential(x, y)
        return self._scale * float(v[x] - v[y])


def effective_resistance(graph: CarpetGraph, x: str, y: str,
                         r_inv: float = DEFAULT_R_INV) -> float:
    """Renormalized effective resistance between two cells (0 when equal)."""
    return ResistanceSolver(graph, r_inv).resistance(graph.index(x), graph.index(y))


def resistance_field(graph: CarpetGraph, y: str, r_inv: float = DEFAULT_R_INV,
                     chunk: int = 256,
                     max_level: int = RESISTANCE_FIELD_MAX_LEVEL) -> np.ndarray:
    """R(x, y) for every cell x, reusing one factorization grounded at y.

    With the ground at y, R(x, y) is the x-th diagonal entry of the inverse
    of the reduced Laplacian, extracted in chunks of unit right-hand sides.
    """
    if graph.level > max_level:
        raise ValueError(f"resistance field guarded to level <= {max_level}")
    iy = graph.index(y)
    n = graph.n_cells
    L = assemble(graph, BoundarySpec("neumann")).tocsc()
    keep = np.arange(n) != iy
    lu = spla.splu(L[keep][:, keep])
    out = np.zeros(n)
    reduced_positions = np.flatnonzero(keep)
    scale = (1.0 / r_inv) ** graph.level
    for start in range(0, n - 1, chunk):
        stop = min(start + chunk, n - 1)
        B = np.zeros((n - 1, stop - start))
        B[np.arange(start, stop), np.arange(stop - start)] = 1.0
        V = lu.solve(B)
        out[reduced_positions[start:stop]] = scale * V[np.arange(start, stop),
                                                       np.arange(stop - start)]
    return out
