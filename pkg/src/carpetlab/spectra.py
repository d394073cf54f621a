"""Eigenpairs of carpet operators and spectral statistics.

Eigenfields are normalized against the self-similar measure, which puts
weight 8^-m on every m-cell, so <u, v> = 8^-m sum_x u(x) conj(v(x)) and the
completeness relation reads sum_j phi_j(x) phi_j(y) = 8^m delta_xy.
Unrenormalized eigenvalues lambda^(m) of the level-m operator turn into
level-independent values through lambda_sc = rho^m lambda^(m).

The symmetry classifier groups numerically degenerate eigenvalues and
assigns each eigenspace an irreducible-representation label of the square's
symmetry group: '1' followed by the sign under the diagonal reflections and
the sign under the axis reflections, or '2' for the two-dimensional
representation.  Accidentally coincident one-dimensional pairs (the level-1
ring has some) are split apart instead of being mislabeled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import D4_BY_NAME, CarpetGraph, apply_symmetry_indices
from .operators import BoundarySpec, RenormConstants, assemble

__all__ = [
    "EigenSet",
    "ConvergenceError",
    "eigensolve",
    "eigenvalue_scan",
    "classify_symmetry",
    "counting_function",
    "counting_slope",
    "weyl_ratio",
    "counting_difference",
    "difference_exponent",
    "sign_changes",
    "coincidence_check",
    "CoincidenceReport",
    "miniaturize",
    "sup_norm_stats",
    "detect_clusters",
]

DENSE_LIMIT = 4096
DEFAULT_SEED = 7
DEGENERACY_RTOL = 1e-6


class ConvergenceError(RuntimeError):
    """Iterative eigensolver failed to reach the requested accuracy."""


@dataclass
class EigenSet:
    """Sorted eigenpairs of one (level, boundary spec) operator.

    eigenvalues are unrenormalized and ascending; fields, when kept, are
    orthonormal under the cell-measure inner product and live in columns.
    rho records the renormalizer used by `lambda_sc`.
    """

    level: int
    spec: BoundarySpec
    eigenvalues: np.ndarray
    fields: np.ndarray | None
    tol: float
    rho: float
    residuals: np.ndarray | None = None
    labels: list[str | None] | None = None

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    @property
    def n_cells(self) -> int:
        return 8**self.level

    @property
    def is_full(self) -> bool:
        return self.k == self.n_cells

    @property
    def lambda_sc(self) -> np.ndarray:
        return self.rho**self.level * self.eigenvalues

    def with_rho(self, rho: float) -> "EigenSet":
        return replace(self, rho=rho)

    def mu_inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        return (u @ np.conj(v)) / self.n_cells


def _mu_normalize(level: int, vecs: np.ndarray) -> np.ndarray:
    return vecs * np.sqrt(8.0**level)


def _fix_gauge(vecs: np.ndarray, rel: float = 1e-8) -> np.ndarray:
    """Make the first significant component of each column real positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > rel * np.abs(col).max())
        lead = col[nz[0]]
        if np.iscomplexobj(col):
            out[:, j] = col * (np.conj(lead) / abs(lead))
        elif lead < 0:
            out[:, j] = -col
    return out


def _clamp_zero_modes(vals: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    """Zero modes come back as roundoff-sized negatives; clamp those to 0."""
    if np.any(vals < -floor):
        raise ConvergenceError(f"negative eigenvalue {vals.min():.3e} beyond tolerance")
    return np.maximum(vals, 0.0)


def eigensolve(graph: CarpetGraph, spec: BoundarySpec, k: int,
               tol: float = 0.0, return_fields: bool = True,
               seed: int = DEFAULT_SEED, dense_limit: int = DENSE_LIMIT,
               rho: float | None = None,
               matrix: sp.spmatrix | None = None) -> EigenSet:
    """k smallest eigenpairs of the assembled operator.

    Dense decomposition when the dimension is small or most of the spectrum
    is wanted, shift-invert Lanczos with a seeded start vector otherwise.
    Residual norms ||A v - lambda v|| are recorded per pair.
    """
    A = assemble(graph, spec) if matrix is None else matrix
    n = A.shape[0]
    if not (1 <= k <= n):
        raise ValueError(f"k must be in 1..{n}, got {k}")
    rho = RenormConstants().rho if rho is None else rho

    use_dense = n <= dense_limit and (k > n // 4 or k > n - 2 or n <= 64)
    if use_dense:
        dense = A.toarray()
        if return_fields:
            vals, vecs = np.linalg.eigh(dense)
            vals, vecs = vals[:k], vecs[:, :k]
        else:
            vals, vecs = np.linalg.eigvalsh(dense)[:k], None
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        if np.iscomplexobj(A):
            v0 = v0 + 0j
        ncv = min(n, max(2 * k + 1, 40))
        out = spla.eigsh(A, k=k, sigma=-1e-3, which="LM", v0=v0, tol=tol,
                         ncv=ncv, return_eigenvectors=return_fields)
        if return_fields:
            vals, vecs = out
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
        else:
            vals, vecs = np.sort(out), None

    vals = _clamp_zero_modes(np.real(vals))
    residuals = None
    if vecs is not None:
        residuals = np.linalg.norm(A @ vecs - vecs * vals[None, :], axis=0)
        vecs = _fix_gauge(_mu_normalize(graph.level, vecs))
        if not np.iscomplexobj(vecs):
            vecs = np.real(vecs)
    return EigenSet(level=graph.level, spec=spec, eigenvalues=vals,
                    fields=vecs, tol=tol, rho=rho, residuals=residuals)


def eigenvalue_scan(graph: CarpetGraph, spec: BoundarySpec, count: int,
                    block: int = 400, tol: float = 0.0, seed: int = DEFAULT_SEED,
                    overlap_rtol: float = 1e-7,
                    matrix: sp.spmatrix | None = None) -> np.ndarray:
    """At least `count` smallest eigenvalues via windowed shift-invert.

    Each window runs Lanczos around a shift and the next shift is placed in
    a spectral gap near the top of the window, so windows tile the axis
    without dropping or double-counting degenerate values.  Overlapping
    values across windows are cross-checked.  Eigenvalues only.
    """
    A = assemble(graph, spec) if matrix is None else matrix
    n = A.shape[0]
    if count > n:
        raise ValueError("count exceeds the matrix dimension")
    if count <= block:
        return eigensolve(graph, spec, count, tol=tol, return_fields=False,
                          seed=seed, matrix=A).eigenvalues

    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    if np.iscomplexobj(A):
        v0 = v0 + 0j
    ncv = min(n, 2 * block)

    collected: list[np.ndarray] = []
    total = 0
    cut = None
    sigma = -1e-3
    max_windows = 4 * (count // block + 2)
    for _ in range(max_windows):
        w = np.sort(spla.eigsh(A, k=min(block, n - 2), sigma=sigma, which="LM",
                               v0=v0, tol=tol, ncv=ncv,
                               return_eigenvectors=False))
        if cut is None:
            new = w
        else:
            old_part = w[w <= cut]
            if len(old_part) and collected:
                prev_tail = collected[-1][-len(old_part):]
                scale = max(abs(prev_tail[-1]), 1e-30)
                if len(prev_tail) == len(old_part):
                    mism = np.max(np.abs(prev_tail - old_part)) / scale
                    if mism > overlap_rtol:
                        raise ConvergenceError(
                            f"window overlap mismatch {mism:.2e} at sigma={sigma:.6g}")
            new = w[w > cut]
        if len(new) == 0:
            raise ConvergenceError(f"window at sigma={sigma:.6g} produced no "
                                   "new eigenvalues")
        if total + len(new) >= count:
            collected.append(new)
            result = _clamp_zero_modes(np.concatenate(collected))
            return result
        # next cut: widest gap in the upper part of this window
        lo = max(int(0.55 * len(w)), len(w) - len(new) + 1)
        gaps = np.diff(w[lo:-1])
        j = lo + int(np.argmax(gaps))
        cut_new = 0.5 * (w[j] + w[j + 1])
        keep = new[new <= cut_new]
        if len(keep) == 0:
            raise ConvergenceError("failed to advance the scan window")
        collected.append(keep)
        total += len(keep)
        cut = cut_new
        sigma = cut_new
    raise ConvergenceError("eigenvalue scan did not reach the requested count")


# -- symmetry classification -------------------------------------------------

_ONE_DIM_LABELS = {(1, 1): "1++", (1, -1): "1+-", (-1, 1): "1-+", (-1, -1): "1--"}


def _clusters(vals: np.ndarray, rtol: float = DEGENERACY_RTOL) -> list[slice]:
    atol = rtol * max(np.max(np.abs(vals)), 1.0) * 1e-3
    slices = []
    start = 0
    for j in range(1, len(vals) + 1):
        if j == len(vals) or (vals[j] - vals[j - 1]) > max(atol, rtol * abs(vals[j])):
            slices.append(slice(start, j))
            start = j
    return slices


def _reflection_sign(overlap: float, min_mod: float = 0.95) -> int | None:
    if abs(abs(overlap) - 1.0) > 1.0 - min_mod:
        return None
    return 1 if overlap > 0 else -1


def classify_symmetry(eigenset: EigenSet, graph: CarpetGraph,
                      cluster_rtol: float = DEGENERACY_RTOL) -> EigenSet:
    """Attach irreducible-representation labels to each eigenspace.

    Requires fields and an untwisted operator commuting with the full
    symmetry group of the square (everything but klein and the covers).
    Degenerate clusters of dimension two are tested against the character
    of the half turn: the genuine two-dimensional representation has trace
    -2 there, while an accidental pair of one-dimensional spaces has trace
    +2 and is split by diagonalizing an axis reflection.  Two-dimensional
    clusters are re-gauged so their first basis vector is symmetric under
    the horizontal reflection.  Ambiguous clusters get label None.
    """
    if eigenset.spec.kind not in ("dirichlet", "neumann", "torus", "projective"):
        raise ValueError(f"symmetry classification needs the full square group; "
                         f"got {eigenset.spec.kind}")
    if eigenset.fields is None:
        raise ValueError("eigenset has no fields to classify")

    perms = {name: apply_symmetry_indices(D4_BY_NAME[name], graph)
             for name in ("rot180", "mirror_h", "mirror_v", "diag_main", "diag_anti")}
    n = eigenset.n_cells
    fields = eigenset.fields.copy()
    vals = eigenset.eigenvalues
    labels: list[str | None] = [None] * len(vals)

    def inner(u, v):
        return float(u @ v) / n

    def label_single(u, lam, j):
        if lam < 1e-8 * max(vals[-1], 1.0) and np.std(u) < 1e-6 * np.abs(u).mean():
            return "constant"
        s_d = _reflection_sign(inner(u[perms["diag_main"]], u))
        s_d2 = _reflection_sign(inner(u[perms["diag_anti"]], u))
        s_a = _reflection_sign(inner(u[perms["mirror_h"]], u))
        s_v = _reflection_sign(inner(u[perms["mirror_v"]], u))
        if None in (s_d, s_d2, s_a, s_v) or s_d != s_d2 or s_a != s_v:
            return None
        return _ONE_DIM_LABELS[(s_d, s_a)]

    for sl in _clusters(vals, cluster_rtol):
        dim = sl.stop - sl.start
        if dim == 1:
            labels[sl.start] = label_single(fields[:, sl.start], vals[sl.start], sl.start)
        elif dim == 2:
            U = fields[:, sl]
            rep_half_turn = U.T @ U[perms["rot180"], :] / n
            trace = float(np.trace(rep_half_turn))
            if abs(trace + 2.0) < 0.2:
                # genuine 2-dim representation; gauge on the horizontal mirror
                rep_mirror = U.T @ U[perms["mirror_h"], :] / n
                rep_mirror = 0.5 * (rep_mirror + rep_mirror.T)
                _, rot = np.linalg.eigh(rep_mirror)
                U = U @ rot[:, ::-1]  # symmetric combination first
                fields[:, sl] = _fix_gauge(U)
                labels[sl.start] = labels[sl.start + 1] = "2"
            elif abs(trace - 2.0) < 0.2:
                # accidental pair of 1-dim spaces: split on an axis mirror
                rep_mirror = U.T @ U[perms["mirror_h"], :] / n
                rep_mirror = 0.5 * (rep_mirror + rep_mirror.T)
                _, rot = np.linalg.eigh(rep_mirror)
                U = _fix_gauge(U @ rot[:, ::-1])
                fields[:, sl] = U
                for off in range(2):
                    labels[sl.start + off] = label_single(U[:, off],
                                                          vals[sl.start + off],
                                                          sl.start + off)
            # else: leave None (ambiguous cluster)
        # dim > 2: ambiguous, leave None

    return replace(eigenset, fields=fields, labels=labels)


# -- counting functions and ratios --------------------------------------------


def counting_function(values: np.ndarray, t: np.ndarray | float) -> np.ndarray:
    """N(t) = number of eigenvalues <= t (values must be sorted)."""
    return np.searchsorted(values, t, side="right")


def counting_slope(values: np.ndarray, index_range: tuple[int, int] = (50, 2000)):
    """Log-log slope of j against lambda_j over a 1-based index window.

    Returns (slope, intercept); scale-invariant, so renormalization of the
    eigenvalues only shifts the intercept.
    """
    lo, hi = index_range
    hi = min(hi, len(values))
    j = np.arange(lo, hi + 1)
    lam = values[lo - 1 : hi]
    if np.any(lam <= 0):
        raise ValueError("window contains nonpositive eigenvalues")
    coef = np.polyfit(np.log(lam), np.log(j), 1)
    return float(coef[0]), float(coef[1])


def weyl_ratio(values: np.ndarray, exponent: float,
               t_grid: np.ndarray | None = None, num: int = 400):
    """W(t) = N(t) / t^exponent on a log-spaced grid inside the spectrum."""
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    pos = values[values > 0]
    if t_grid is None:
        t_grid = np.geomspace(pos[0], values[-1], num)
    W = counting_function(values, t_grid) / t_grid**exponent
    return t_grid, W


def counting_difference(values_a: np.ndarray, values_b: np.ndarray):
    """Step data of N_a(t) - N_b(t) on the merged eigenvalue grid."""
    grid = np.union1d(values_a, values_b)
    diff = counting_function(values_a, grid) - counting_function(values_b, grid)
    return grid, diff.astype(np.int64)


def sign_changes(diff: np.ndarray) -> int:
    s = np.sign(diff[diff != 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def difference_exponent(values_a: np.ndarray, values_b: np.ndarray,
                        index_range: tuple[int, int] = (50, 2000),
                        num: int = 300):
    """Growth exponent of N_a - N_b, fit where the difference is positive.

    The fit window is the eigenvalue range of `values_a` spanned by the
    given 1-based index window; the difference is sampled on a log-uniform
    grid there (as a straight-line fit on log-log axes would weight it),
    not at the eigenvalue positions, whose density grows with t.
    """
    lo, hi = index_range
    hi = min(hi, len(values_a))
    t_lo, t_hi = values_a[lo - 1], values_a[hi - 1]
    grid = np.geomspace(t_lo, t_hi, num)
    diff = counting_function(values_a, grid) - counting_function(values_b, grid)
    sel = diff >= 1
    if np.count_nonzero(sel) < 8:
        raise ValueError("too few positive difference samples in the window")
    coef = np.polyfit(np.log(grid[sel]), np.log(diff[sel]), 1)
    return float(coef[0]), float(coef[1])


# -- coincidences --------------------------------------------------------------


@dataclass
class CoincidenceReport:
    """Cross-spectrum eigenvalue matches at one level.

    Each entry is (index, eigenvalue, label, matched-in-torus,
    matched-in-klein, matched-in-projective) for the one-dimensional
    neumann eigenspaces; None marks values beyond another spectrum's reach.
    """

    tol: float
    entries: list[tuple[int, float, str, bool | None, bool | None, bool | None]]
    torus_pairs_in_klein: list[tuple[float, bool | None]]
    projective_pairs_in_klein: list[tuple[float, bool | None]]
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def _matches(value: float, values: np.ndarray, tol: float) -> bool | None:
    if len(values) == 0 or value > values[-1] + tol:
        return None  # beyond the computed range; cannot be checked
    j = np.searchsorted(values, value)
    best = np.inf
    for jj in (j - 1, j):
        if 0 <= jj < len(values):
            best = min(best, abs(values[jj] - value))
    return bool(best <= tol)


def coincidence_check(neumann: EigenSet, torus: EigenSet, klein: EigenSet,
                      projective: EigenSet, tol: float = 1e-6) -> CoincidenceReport:
    """Verify the eigenvalue coincidences between the boundary families.

    All one-dimensional neumann eigenvalues must appear in the projective
    spectrum; those symmetric under the axis reflections (labels 1++ and
    1-+, plus the constant) must appear in the torus and klein spectra; and
    every two-dimensional torus or projective eigenvalue must appear in the
    klein spectrum.  Comparisons use unrenormalized values.
    """
    if neumann.labels is None:
        raise ValueError("neumann eigenset must be classified first")
    levels = {neumann.level, torus.level, klein.level, projective.level}
    if len(levels) != 1:
        raise ValueError("all eigensets must share one level")

    entries = []
    violations = []
    for j, (lam, label) in enumerate(zip(neumann.eigenvalues, neumann.labels)):
        if label in (None, "2"):
            continue
        in_ps = _matches(lam, projective.eigenvalues, tol)
        if in_ps is False:
            violations.append(f"neumann #{j + 1} ({label}) {lam:.9g} missing from projective")
        in_t = in_kb = None
        if label in ("constant", "1++", "1-+"):
            in_t = _matches(lam, torus.eigenvalues, tol)
            in_kb = _matches(lam, klein.eigenvalues, tol)
            if in_t is False:
                violations.append(f"neumann #{j + 1} ({label}) {lam:.9g} missing from torus")
            if in_kb is False:
                violations.append(f"neumann #{j + 1} ({label}) {lam:.9g} missing from klein")
        entries.append((j + 1, float(lam), label, in_t, in_kb, in_ps))

    def pair_values(es: EigenSet) -> list[float]:
        out = []
        for sl in _clusters(es.eigenvalues):
            if sl.stop - sl.start == 2:
                out.append(float(np.mean(es.eigenvalues[sl])))
        return out

    torus_pairs = []
    for v in pair_values(torus):
        hit = _matches(v, klein.eigenvalues, tol)
        if hit is False:
            violations.append(f"torus pair {v:.9g} missing from klein")
        torus_pairs.append((v, hit))
    ps_pairs = []
    for v in pair_values(projective):
        hit = _matches(v, klein.eigenvalues, tol)
        if hit is False:
            violations.append(f"projective pair {v:.9g} missing from klein")
        ps_pairs.append((v, hit))

    return CoincidenceReport(tol=tol, entries=entries,
                             torus_pairs_in_klein=torus_pairs,
                             projective_pairs_in_klein=ps_pairs,
                             violations=violations)


# -- miniaturization ------------------------------------------------------------


def miniaturize(field: np.ndarray, eigenvalue: float, label: str,
                graph_fine: CarpetGraph):
    """Assemble a level-(m+1) eigenfield from eight signed copies of a
    level-m neumann eigenfield.

    Copies are placed in the eight 1-cells; for representations that are
    antisymmetric under the axis reflections the signs alternate around the
    ring.  The unrenormalized eigenvalue is unchanged (so the renormalized
    one grows by a factor rho).  Returns (field', relative residual of the
    eigen-equation at the fine level).  Two-dimensional representations are
    not supported.
    """
    if label in ("constant", "1++", "1-+"):
        signs = np.ones(8)
    elif label in ("1+-", "1--"):
        signs = np.array([1.0 if d % 2 == 0 else -1.0 for d in range(8)])
    else:
        raise ValueError(f"unsupported symmetry type for miniaturization: {label!r}")
    fine = np.concatenate([s * field for s in signs])
    A = assemble(graph_fine, BoundarySpec("neumann"))
    resid = np.linalg.norm(A @ fine - eigenvalue * fine) / np.linalg.norm(fine)
    return fine, float(resid)


# -- misc statistics -------------------------------------------------------------


def sup_norm_stats(eigenset: EigenSet):
    """Pairs (lambda_sc, max |phi|) plus the running maximum."""
    if eigenset.fields is None:
        raise ValueError("eigenset has no fields")
    sup = np.max(np.abs(eigenset.fields), axis=0)
    return eigenset.lambda_sc, sup, np.maximum.accumulate(sup)


def detect_clusters(eigenset: EigenSet, gap_tol: float,
                    degeneracy_rtol: float = DEGENERACY_RTOL):
    """Groups of at least two distinct renormalized eigenvalues whose spread
    stays within gap_tol.

    Numerically degenerate multiplets collapse to one distinct value first;
    a group extends while the renormalized distance to its first member is
    at most gap_tol.  Returns a list of (positions, values) with 1-based
    positions into the full (multiplicity-counted) spectrum.
    """
    vals = eigenset.lambda_sc
    slices = _clusters(eigenset.eigenvalues, degeneracy_rtol)
    distinct = np.array([float(np.mean(vals[sl])) for sl in slices])
    first_pos = np.array([sl.start + 1 for sl in slices])

    out = []
    i = 0
    while i < len(distinct):
        j = i + 1
        while j < len(distinct) and distinct[j] - distinct[i] <= gap_tol:
            j += 1
        if j - i >= 2:
            out.append((first_pos[i:j].tolist(), distinct[i:j].tolist()))
        i = max(j, i + 1)
    return out
