"""Boundary behavior: the discrete summation-by-parts identity and decay
rate fits near the outer boundary.

With u given on cells *and* virtual cells and v on cells (even-extended to
virtual cells), the renormalized energy over real edges splits exactly into
an interior term against the full Laplacian (virtual neighbors included)
and a boundary correction:

    E_m(u, v) = - sum_x 8^-m v(x) [rho^m D_m u(x)]
                + r^-m sum_{(x, x*)} v(x) (u(x*) - u(x))

an algebraic identity (with rho = 8/r) that holds to machine precision and
anchors the exploratory boundary functional.

Decay fits measure u(x_j) ~ A d_j^alpha on stacks of three cells running
perpendicular to a boundary edge, d_j = (j - 1/2) 3^-m.  Stacks blocked by
a hole at depth two are excluded, leaving exactly (2/3) 3^m usable stacks
per edge.  Corner stacks average the two cells j-1 steps along each of the
corner's incident edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SIDES, CarpetGraph
from .operators import DEFAULT_R_INV, BoundarySpec, assemble

__all__ = [
    "GaussGreenTerms",
    "gauss_green_residual",
    "boundary_functional",
    "DecayStack",
    "CornerStack",
    "edge_stacks",
    "corner_stack",
    "DecayFit",
    "fit_decay",
    "fit_corner_decay",
    "corner_decay_across_levels",
    "decay_profile",
]


@dataclass
class GaussGreenTerms:
    energy: float
    interior: float
    boundary: float

    @property
    def residual(self) -> float:
        return abs(self.energy - self.interior - self.boundary)


def _full_laplacian_rows(graph: CarpetGraph, u: np.ndarray,
                         u_virtual: np.ndarray) -> np.ndarray:
    """D_m u including virtual neighbors: sum over neighbors of u(y)-u(x)."""
    L = assemble(graph, BoundarySpec("neumann"))
    rows = -(L @ u)
    np.add.at(rows, graph.virtual_owners(), u_virtual - u[graph.virtual_owners()])
    return rows


def gauss_green_residual(u: np.ndarray, u_virtual: np.ndarray, v: np.ndarray,
                         graph: CarpetGraph,
                         r_inv: float = DEFAULT_R_INV) -> GaussGreenTerms:
    """Split the renormalized energy into interior and boundary terms.

    u must supply values on the 4*3^m virtual cells; v is even-extended.
    The three returned terms satisfy energy = interior + boundary exactly
    up to roundoff.
    """
    if u_virtual.shape != (graph.n_virtual,):
        raise ValueError("virtual values missing or of wrong length")
    m = graph.level
    r_pow = r_inv**m
    du = u[graph.edges[:, 0]] - u[graph.edges[:, 1]]
    dv = v[graph.edges[:, 0]] - v[graph.edges[:, 1]]
    energy = r_pow * float(np.dot(du, dv))

    rho_m = (8.0 * r_inv) ** m
    rows = _full_laplacian_rows(graph, u, u_virtual)
    interior = -float(np.dot(v, rows)) * rho_m / 8.0**m

    owners = graph.virtual_owners()
    boundary = r_pow * float(np.dot(v[owners], u_virtual - u[owners]))
    return GaussGreenTerms(energy=energy, interior=interior, boundary=boundary)


def boundary_functional(u: np.ndarray, u_virtual: np.ndarray, v: np.ndarray,
                        graph: CarpetGraph, r_inv: float = DEFAULT_R_INV):
    """Boundary term of the summation-by-parts identity plus its per-segment
    densities r^-m (u(x*) - u(x)) 3^m, for exploration across levels.

    What this converges to (and against which boundary measure) is left
    open; the values are emitted, not asserted.
    """
    terms = gauss_green_residual(u, u_virtual, v, graph, r_inv)
    owners = graph.virtual_owners()
    densities = (r_inv**graph.level) * (u_virtual - u[owners]) * graph.side_length
    return terms.boundary, densities


# -- decay stacks -------------------------------------------------------------


@dataclass(frozen=True)
class DecayStack:
    """Three cells perpendicular to a boundary edge at one boundary point."""

    side: str
    position: int
    cells: tuple[int, int, int]
    distances: tuple[float, float, float]


@dataclass(frozen=True)
class CornerStack:
    """Corner cell plus averaged cell pairs one and two steps along the two
    incident edges."""

    corner: str
    cells: tuple[int, ...]  # (x1, a2, b2, a3, b3)
    distances: tuple[float, float, float]


_INWARD = {"top": (0, 1), "bottom": (0, -1), "left": (1, 0), "right": (-1, 0)}


def edge_stacks(graph: CarpetGraph, side: str) -> list[DecayStack]:
    """All depth-3 stacks on one edge; exactly (2/3) 3^m positions qualify."""
    if side not in SIDES:
        raise ValueError(f"unknown side {side!r}")
    dc, dr = _INWARD[side]
    h = 3.0 ** (-graph.level)
    out = []
    for pos, start in enumerate(graph.boundary_cells[side]):
        c, r = int(graph.cols[start]), int(graph.rows[start])
        cells = [int(start)]
        for j in (1, 2):
            idx = graph.grid[c + j * dc, r + j * dr]
            if idx < 0:
                break
            cells.append(int(idx))
        if len(cells) == 3:
            out.append(DecayStack(side, pos, tuple(cells),
                                  tuple((j - 0.5) * h for j in (1, 2, 3))))
    return out


_CORNERS = {
    "top_left": ("top", "left", 0, 0),
    "top_right": ("top", "right", -1, 0),
    "bottom_left": ("bottom", "left", 0, -1),
    "bottom_right": ("bottom", "right", -1, -1),
}


def corner_stack(graph: CarpetGraph, corner: str) -> CornerStack:
    """Stack at one of the four corners, using averaged pairs at depths 2, 3.

    The pair members sit j-1 cells away from the corner along each of the
    two incident edges; both always exist for m >= 2.
    """
    if corner not in _CORNERS:
        raise ValueError(f"unknown corner {corner!r}; use one of {sorted(_CORNERS)}")
    side_a, side_b, pa, pb = _CORNERS[corner]
    ca = graph.boundary_cells[side_a]
    cb = graph.boundary_cells[side_b]
    x1 = int(ca[pa])
    if x1 != int(cb[pb]):
        raise AssertionError("corner registry mismatch")
    h = 3.0 ** (-graph.level)
    step_a = 1 if pa == 0 else -1
    step_b = 1 if pb == 0 else -1
    cells = [x1]
    for j in (2, 3):
        cells.append(int(ca[pa + step_a * (j - 1)]))
        cells.append(int(cb[pb + step_b * (j - 1)]))
    return CornerStack(corner, tuple(cells), tuple((j - 0.5) * h for j in (1, 2, 3)))


@dataclass
class DecayFit:
    amplitude: float
    alpha: float
    values: tuple[float, float, float]
    distances: tuple[float, float, float]


def _power_fit(values: np.ndarray, distances: np.ndarray) -> tuple[float, float]:
    if np.any(values == 0.0):
        raise ValueError("zero stack value; decay fit is degenerate")
    coef = np.polyfit(np.log(distances), np.log(np.abs(values)), 1)
    alpha = float(coef[0])
    amplitude = float(np.sign(values[0]) * np.exp(coef[1]))
    return amplitude, alpha


def fit_decay(u: np.ndarray, stack: DecayStack) -> DecayFit:
    """Least-squares power law through the three stack values.

    The sign of the nearest cell decides the sign of the amplitude; the fit
    itself uses |u|.  Scale-equivariant: fitting c*u returns (c*A, alpha).
    """
    vals = np.array([u[c] for c in stack.cells], dtype=float)
    amp, alpha = _power_fit(vals, np.asarray(stack.distances))
    return DecayFit(amp, alpha, tuple(vals), stack.distances)


def fit_corner_decay(u: np.ndarray, stack: CornerStack) -> DecayFit:
    """Same power-law fit with the depth-2, 3 values averaged over the two
    directions meeting at the corner."""
    x1, a2, b2, a3, b3 = stack.cells
    vals = np.array([u[x1], 0.5 * (u[a2] + u[b2]), 0.5 * (u[a3] + u[b3])])
    amp, alpha = _power_fit(vals, np.asarray(stack.distances))
    return DecayFit(amp, alpha, tuple(vals), stack.distances)


def corner_decay_across_levels(levels: list, corner: str) -> tuple[float, float]:
    """Scaling exponent of the corner-cell value across refinement levels.

    Takes [(graph, field), ...] for the same boundary data at increasing
    levels and fits value(corner cell at level m) against its distance
    0.5 * 3^-m.  The within-level three-point fit cannot see this exponent:
    the corner cell's own equation ties it rigidly to its neighbors
    (u(pair at depth 2) = 3 u(corner) for zero corner data), so the level
    scaling is the meaningful corner decay rate.  Returns (A, alpha).
    """
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    dists, vals = [], []
    for graph, field in levels:
        stack = corner_stack(graph, corner)
        dists.append(0.5 * 3.0 ** (-graph.level))
        vals.append(field[stack.cells[0]])
    amp, alpha = _power_fit(np.asarray(vals), np.asarray(dists))
    return amp, alpha


@dataclass
class DecayProfile:
    side: str
    positions: list[int]
    amplitudes: np.ndarray
    alphas: np.ndarray
    skipped: list[int]

    @property
    def mean_alpha(self) -> float:
        return float(self.alphas.mean())

    def summary(self) -> dict:
        return {
            "side": self.side,
            "stacks": len(self.positions),
            "skipped": len(self.skipped),
            "alpha_mean": self.mean_alpha,
            "alpha_min": float(self.alphas.min()),
            "alpha_max": float(self.alphas.max()),
        }


def decay_profile(u: np.ndarray, graph: CarpetGraph, side: str) -> DecayProfile:
    """Decay fits over every eligible stack of one edge, in position order.

    Stacks with an exactly-zero value are skipped and reported; a field
    vanishing identically on the edge region yields an empty profile.
    """
    positions, amps, alphas, skipped = [], [], [], []
    for stack in edge_stacks(graph, side):
        try:
            fit = fit_decay(u, stack)
        except ValueError:
            skipped.append(stack.position)
            continue
        positions.append(stack.position)
        amps.append(fit.amplitude)
        alphas.append(fit.alpha)
    return DecayProfile(side, positions, np.asarray(amps), np.asarray(alphas),
                        skipped)
