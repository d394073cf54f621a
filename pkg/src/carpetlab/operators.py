"""Graph energies and Laplacians on carpet cell graphs.

Matrices store the *negated* cell-average graph Laplacian, so the operator
row at cell x reads

    sum over neighbors y of x, virtual ones included:  u(x) - u(y)

and all eigenvalues are reported as lambda >= 0.  Boundary conditions enter
through the virtual cells:

    dirichlet    u(x*) = -u(x)   -> +2 on the owner's diagonal
    neumann      u(x*) = +u(x)   -> no contribution
    torus        u(x*) = value at the same position on the opposite side
    klein        left/right gluing carries a vertical flip, top/bottom direct
    projective   both gluings flipped; each corner pairs with its opposite
                 corner twice (weight-2 coupling)
    strip        left/right partners as for the torus but weighted by
                 exp(-+ 2 pi i theta); top/bottom neumann
    staircase    neumann outer boundary; every edge between first-digit-7
                 and first-digit-0 cells carries phase exp(+- 2 pi i theta)
                 (the 7 -> 0 direction gets exp(+2 pi i theta))

Energies renormalize by r^-m per level; the Laplacian renormalizes by
rho^m = (8/r)^m.  r is not known in closed form; the default is
1/r = 1.25, and `calibrate_rho` re-estimates rho from eigenvalue branches
computed at two consecutive levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import SIDES, CarpetGraph

__all__ = [
    "BoundarySpec",
    "RenormConstants",
    "DEFAULT_R_INV",
    "assemble",
    "energy",
    "renormalized_laplacian_apply",
    "estimate_rho",
    "calibrate_rho",
    "write_matrix_coordinate",
]

DEFAULT_R_INV = 1.25

UNTWISTED = ("dirichlet", "neumann", "torus", "klein", "projective")
TWISTED = ("strip", "staircase")


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary-condition family, with twist angle for the covers."""

    kind: str
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in UNTWISTED + TWISTED:
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind in TWISTED:
            if self.theta is None:
                raise ValueError(f"{self.kind} requires theta")
            if not (0.0 <= self.theta <= 1.0):
                raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        elif self.theta is not None:
            raise ValueError(f"{self.kind} takes no theta")

    @property
    def is_twisted(self) -> bool:
        return self.kind in TWISTED

    def describe(self) -> str:
        if self.is_twisted:
            return f"{self.kind}(theta={self.theta:.12g})"
        return self.kind


@dataclass(frozen=True)
class RenormConstants:
    """Scaling constants tied to one choice of the energy renormalizer r."""

    r_inv: float = DEFAULT_R_INV

    @property
    def r(self) -> float:
        return 1.0 / self.r_inv

    @property
    def rho(self) -> float:
        return 8.0 * self.r_inv

    @property
    def alpha(self) -> float:
        return math.log(8.0) / math.log(self.rho)

    @property
    def beta(self) -> float:
        return math.log(3.0) / math.log(self.rho)

    @classmethod
    def from_rho(cls, rho: float) -> "RenormConstants":
        return cls(r_inv=rho / 8.0)


def _opposite_partners(graph: CarpetGraph, spec: BoundarySpec) -> dict[str, np.ndarray]:
    """Partner cell for each virtual cell of a glued boundary, by side.

    Returned arrays are indexed by position along the side.  Flips reverse
    the position index within the edge.
    """
    side = graph.side_length
    pos = np.arange(side)
    flip = side - 1 - pos
    bc = graph.boundary_cells
    if spec.kind in ("torus", "strip"):
        return {
            "top": bc["bottom"][pos],
            "bottom": bc["top"][pos],
            "left": bc["right"][pos],
            "right": bc["left"][pos],
        }
    if spec.kind == "klein":
        return {
            "top": bc["bottom"][pos],
            "bottom": bc["top"][pos],
            "left": bc["right"][flip],
            "right": bc["left"][flip],
        }
    if spec.kind == "projective":
        return {
            "top": bc["bottom"][flip],
            "bottom": bc["top"][flip],
            "left": bc["right"][flip],
            "right": bc["left"][flip],
        }
    raise ValueError(f"{spec.kind} has no glued boundary")


def assemble(graph: CarpetGraph, spec: BoundarySpec) -> sp.csr_matrix:
    """Matrix of the negated level-m graph Laplacian, unrenormalized.

    Real symmetric for the untwisted families, Hermitian complex for the
    twisted covers.  The matrix carries no renormalization; combine with
    RenormConstants for level-independent quantities.
    """
    n = graph.n_cells
    a = graph.edges[:, 0]
    b = graph.edges[:, 1]
    dtype = complex if spec.is_twisted else float

    rows = [a, b]
    cols = [b, a]
    ones = np.ones(len(a))
    if spec.kind == "staircase":
        first = np.arange(n, dtype=np.int64) >> (3 * (graph.level - 1))
        cut = ((first[a] == 0) & (first[b] == 7)) | ((first[a] == 7) & (first[b] == 0))
        phase = np.exp(2j * np.pi * spec.theta)
        w_ab = np.where(cut, np.where(first[a] == 7, phase, np.conj(phase)), 1.0 + 0j)
        vals = [-w_ab, -np.conj(w_ab)]
    else:
        vals = [-ones.astype(dtype), -ones.astype(dtype)]

    diag = graph.degrees().astype(float)

    if spec.kind == "dirichlet":
        diag = diag + 2.0 * graph.virtual_count_per_cell()
    elif spec.kind in ("torus", "klein", "projective"):
        partners = _opposite_partners(graph, spec)
        for s in SIDES:
            owners = graph.boundary_cells[s]
            diag[owners] += 1.0
            rows.append(owners)
            cols.append(partners[s])
            vals.append(-np.ones(len(owners), dtype=dtype))
    elif spec.kind == "strip":
        partners = _opposite_partners(graph, spec)
        # u(x+1, y) = e^{2 pi i theta} u(x, y): the virtual cell left of the
        # left edge evaluates to e^{-2 pi i theta} times the right-edge cell.
        for s, phase in (("left", np.exp(-2j * np.pi * spec.theta)),
                         ("right", np.exp(+2j * np.pi * spec.theta))):
            owners = graph.boundary_cells[s]
            diag[owners] += 1.0
            rows.append(owners)
            cols.append(partners[s])
            vals.append(np.full(len(owners), -phase, dtype=complex))
    # neumann and staircase leave the outer boundary alone

    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag.astype(dtype))

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
        dtype=dtype,
    ).tocsr()
    mat.sum_duplicates()
    return mat


def energy(u: np.ndarray, v: np.ndarray, graph: CarpetGraph,
           r_inv: float = DEFAULT_R_INV, level: int | None = None) -> float:
    """Renormalized bilinear energy r^-m * sum over edges of du * dv."""
    m = graph.level if level is None else level
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != (graph.n_cells,) or v.shape != (graph.n_cells,):
        raise ValueError("field length does not match the graph")
    du = u[graph.edges[:, 0]] - u[graph.edges[:, 1]]
    dv = v[graph.edges[:, 0]] - v[graph.edges[:, 1]]
    return float(r_inv**m) * float(np.dot(du, dv))


def renormalized_laplacian_apply(matrix: sp.spmatrix, u: np.ndarray, rho: float,
                                 level: int) -> np.ndarray:
    """Apply the renormalized Laplacian: -rho^m * (matrix @ u).

    The matrix stores the negated graph Laplacian, so the result approximates
    the Laplacian itself.
    """
    u = np.asarray(u)
    if u.shape[0] != matrix.shape[0]:
        raise ValueError("field length does not match the matrix")
    return -(rho**level) * (matrix @ u)


def estimate_rho(eig_coarse: float, eig_fine: float) -> float:
    """Ratio of matched unrenormalized eigenvalues at consecutive levels."""
    if eig_fine == 0.0:
        raise ZeroDivisionError("fine-level eigenvalue is zero")
    return eig_coarse / eig_fine


def calibrate_rho(eigs_coarse: np.ndarray, eigs_fine: np.ndarray,
                  n_branches: int = 10, zero_tol: float = 1e-12) -> float:
    """Median ratio over the first `n_branches` matched eigenvalue branches.

    Branches are matched by sorted index; zero modes are skipped.  Both
    inputs are unrenormalized spectra of the same boundary condition at
    levels m and m+1.
    """
    lc = np.sort(np.asarray(eigs_coarse, dtype=float))
    lf = np.sort(np.asarray(eigs_fine, dtype=float))
    keep = min(len(lc), len(lf))
    lc, lf = lc[:keep], lf[:keep]
    ok = (lc > zero_tol) & (lf > zero_tol)
    ratios = lc[ok] / lf[ok]
    if len(ratios) == 0:
        raise ValueError("no nonzero matched branches to calibrate from")
    return float(np.median(ratios[:n_branches]))


def write_matrix_coordinate(path, matrix: sp.spmatrix, graph: CarpetGraph,
                            spec: BoundarySpec) -> None:
    """Write a matrix in coordinate (row, col, value) text format.

    Header comment lines name the level, boundary spec, theta and scalar
    type; complex entries are written as a real/imaginary pair.  Entries are
    sorted by (row, col) and indices are zero-based.
    """
    coo = matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    complex_entries = np.iscomplexobj(coo.data)
    with open(path, "w") as fh:
        fh.write("%% carpet operator coordinate format\n")
        fh.write(f"%% level={graph.level} spec={spec.kind} "
                 f"theta={'' if spec.theta is None else format(spec.theta, '.12g')} "
                 f"scalar={'complex' if complex_entries else 'real'}\n")
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]} {coo.nnz}\n")
        for k in order:
            i, j = int(coo.row[k]), int(coo.col[k])
            v = coo.data[k]
            if complex_entries:
                fh.write(f"{i} {j} {v.real:.17g} {v.imag:.17g}\n")
            else:
                fh.write(f"{i} {j} {v:.17g}\n")
