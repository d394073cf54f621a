"""Twist-angle spectra of the strip and staircase covers.

Both covers act on the carpet's cell set through a fundamental-domain
operator with a phase twist exp(2 pi i theta): across the vertical edges
for the strip (ring of carpets side by side, Neumann top and bottom), and
across the cut between first-digit-7 and first-digit-0 cells for the
staircase (the eight 1-cells spiral upward).  Conjugating an eigenfield
swaps theta and 1 - theta, so sweeps run over [0, 1/2] by default.

Band curves are reported sorted per theta; sorted eigenvalue curves of a
continuous Hermitian family are themselves continuous, and the projection
of all curves onto the eigenvalue axis is the cover's spectrum, a union of
closed intervals.

The staircase also carries a quarter-turn symmetry that crosses the cut:
composing the rotation with the deck phase splits each theta-eigenspace
into four classes k = 0..3 with u(Rx) = exp(2 pi i (theta + k)/4) u(x).
The strip's extra symmetry is the vertical mirror, a parity +-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import D4_BY_NAME, CarpetGraph, apply_symmetry_indices
from .operators import BoundarySpec, RenormConstants
from .spectra import EigenSet, _clusters, eigensolve

__all__ = [
    "BandSweep",
    "SpectrumProjection",
    "sweep_bands",
    "project_spectrum",
    "classify_rotation_symmetry",
    "group_structure_report",
]

DEFAULT_THETA_GRID = 65


@dataclass
class BandSweep:
    """Lowest-k eigenvalue curves of a cover over a twist grid.

    bands[i, j] is the j-th smallest (unrenormalized) eigenvalue at
    thetas[i]; multiply by rho**level for level-independent values.
    """

    kind: str
    level: int
    thetas: np.ndarray
    bands: np.ndarray
    rho: float
    flags: list[str]

    @property
    def k(self) -> int:
        return self.bands.shape[1]

    @property
    def bands_sc(self) -> np.ndarray:
        return self.rho**self.level * self.bands


@dataclass
class SpectrumProjection:
    """Disjoint closed intervals covered by the band curves, with gaps.

    band_ranges keeps the per-band extent before merging (sorted by lower
    edge); intervals are the merged union.
    """

    band_ranges: list[tuple[float, float]]
    intervals: list[tuple[float, float]]
    gaps: list[tuple[float, float]]


def sweep_bands(graph: CarpetGraph, kind: str, theta_grid=DEFAULT_THETA_GRID,
                k: int = 20, tol: float = 0.0,
                rho: float | None = None) -> BandSweep:
    """Hermitian eigensolves of one cover across a twist grid.

    theta_grid may be an integer (that many uniform points on [0, 1/2]) or
    an explicit array of twist angles.  Failed solves flag their row and
    leave NaNs rather than aborting the sweep.
    """
    if kind not in ("strip", "staircase"):
        raise ValueError(f"unknown cover kind {kind!r}")
    if np.isscalar(theta_grid):
        thetas = np.linspace(0.0, 0.5, int(theta_grid))
    else:
        thetas = np.asarray(theta_grid, dtype=float)
    if np.any(thetas < 0.0) or np.any(thetas > 1.0):
        raise ValueError("twist angles must lie in [0, 1]")
    rho = RenormConstants().rho if rho is None else rho

    bands = np.full((len(thetas), k), np.nan)
    flags: list[str] = []
    for i, th in enumerate(thetas):
        spec = BoundarySpec(kind, float(th))
        try:
            es = eigensolve(graph, spec, k, tol=tol, return_fields=False, rho=rho)
        except Exception as exc:  # noqa: BLE001 - flag and continue the sweep
            flags.append(f"theta={th:.6g}: {exc}")
            continue
        bands[i, :] = es.eigenvalues
    return BandSweep(kind=kind, level=graph.level, thetas=thetas, bands=bands,
                     rho=rho, flags=flags)


def project_spectrum(sweep: BandSweep, merge_tol: float = 1e-9) -> SpectrumProjection:
    """Union of per-band eigenvalue ranges, merged where they overlap.

    Band ranges that touch within merge_tol (relative to the spectral
    scale) count as one interval, so roundoff cannot split a continuum.
    """
    if np.all(np.isnan(sweep.bands)):
        return SpectrumProjection([], [], [])
    ranges = sorted(
        (float(np.nanmin(sweep.bands[:, j])), float(np.nanmax(sweep.bands[:, j])))
        for j in range(sweep.k)
    )
    tol = merge_tol * max(abs(ranges[-1][1]), 1.0)
    merged = [list(ranges[0])]
    for lo, hi in ranges[1:]:
        if lo <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    intervals = [tuple(iv) for iv in merged]
    gaps = [(intervals[i][1], intervals[i + 1][0]) for i in range(len(intervals) - 1)]
    return SpectrumProjection(ranges, intervals, gaps)


def _twisted_rotation(graph: CarpetGraph, theta: float):
    """Quarter turn composed with the staircase deck phase.

    The rotation advances the ring of 1-cells by two positions; cells in
    1-cells 6 and 7 cross the cut and pick up the deck factor
    exp(2 pi i theta).
    """
    perm = apply_symmetry_indices(D4_BY_NAME["rot90"], graph)
    first = np.arange(graph.n_cells, dtype=np.int64) >> (3 * (graph.level - 1))
    phase = np.where(first >= 6, np.exp(2j * np.pi * theta), 1.0 + 0j)
    return perm, phase


def classify_rotation_symmetry(field: np.ndarray, theta: float,
                               graph: CarpetGraph, kind: str = "staircase",
                               ambiguity_margin: float = 0.1):
    """Symmetry class of a twist eigenfield.

    Staircase: the class k in {0, 1, 2, 3} with u(Rx) ~ exp(2 pi i
    (theta + k)/4) u(x), chosen by projecting the rotated field onto the
    four candidate phases.  Strip: the vertical-mirror parity +-1.
    Returns (value, score, ambiguous_flag).
    """
    n = graph.n_cells
    if kind == "strip":
        perm = apply_symmetry_indices(D4_BY_NAME["mirror_v"], graph)
        overlap = complex(field[perm] @ np.conj(field)) / n
        parity = 1 if overlap.real >= 0 else -1
        return parity, abs(overlap.real), abs(abs(overlap.real) - 1.0) > ambiguity_margin
    if kind != "staircase":
        raise ValueError(f"unknown cover kind {kind!r}")
    perm, phase = _twisted_rotation(graph, theta)
    rotated = phase * field[perm]
    c = complex(rotated @ np.conj(field)) / n
    scores = [
        (np.exp(-2j * np.pi * (theta + k) / 4.0) * c).real for k in range(4)
    ]
    order = np.argsort(scores)[::-1]
    best, second = scores[order[0]], scores[order[1]]
    ambiguous = (best - second) < ambiguity_margin or best < 0.5
    return int(order[0]), float(best), bool(ambiguous)


@dataclass
class BandGroup:
    band_indices: list[int]
    theta0_multiplicities: list[int]
    theta_half_multiplicities: list[int]

    @property
    def size(self) -> int:
        return len(self.band_indices)

    @property
    def pairs_consistent(self) -> bool:
        """Half-twist eigenspaces must pair up (even multiplicities)."""
        return all(m % 2 == 0 for m in self.theta_half_multiplicities)


def group_structure_report(sweep: BandSweep, rtol: float = 1e-6) -> list[BandGroup]:
    """Partition band curves into groups joined by endpoint degeneracies.

    Bands that share an eigenvalue cluster at theta = 0 or theta = 1/2
    belong to one group (a union-find over both endpoint clusterings); for
    the staircase the generic group has four curves: two half-twist pairs
    that reconnect at zero twist as a singlet, a doublet, and a singlet.
    Requires the sweep grid to contain both endpoints.
    """
    if len(sweep.thetas) == 0 or sweep.bands.size == 0:
        return []
    i0 = int(np.argmin(np.abs(sweep.thetas - 0.0)))
    ih = int(np.argmin(np.abs(sweep.thetas - 0.5)))
    if not (np.isclose(sweep.thetas[i0], 0.0) and np.isclose(sweep.thetas[ih], 0.5)):
        raise ValueError("group report needs theta = 0 and theta = 1/2 in the grid")

    k = sweep.k
    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    endpoint_clusters = {}
    for key, row in (("zero", sweep.bands[i0]), ("half", sweep.bands[ih])):
        slices = _clusters(np.asarray(row), rtol)
        endpoint_clusters[key] = slices
        for sl in slices:
            for j in range(sl.start + 1, sl.stop):
                union(sl.start, j)

    groups: dict[int, list[int]] = {}
    for j in range(k):
        groups.setdefault(find(j), []).append(j)

    out = []
    for root in sorted(groups):
        members = sorted(groups[root])
        mult0 = [sl.stop - sl.start for sl in endpoint_clusters["zero"]
                 if sl.start in members]
        multh = [sl.stop - sl.start for sl in endpoint_clusters["half"]
                 if sl.start in members]
        out.append(BandGroup(members, mult0, multh))
    return out
