"""Command-line interface.

Subcommands cover the whole library surface: graph serialization, harmonic
solves, Poisson kernels, effective resistance, eigenpairs, counting
functions and Weyl ratios, heat traces, Dirichlet kernels, boundary decay
fits, the summation-by-parts check, cover band sweeps, and `reproduce`,
which regenerates the published reference tables by id (3.1, 4.1-4.5,
6.1-6.3).

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 resource guard tripped.  Outputs are deterministic and embed the
producing configuration plus the graph content hash; eigen results go
through the disk cache (CARPETLAB_CACHE or --cache-dir) keyed by level,
boundary spec, twist, count, tolerance and code version.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, boundary, covers, harmonic, io, kernels, spectra
from .cache import EigenCache
from .geometry import build_graph, graph_to_json, line_restriction
from .operators import (DEFAULT_R_INV, BoundarySpec, RenormConstants,
                        calibrate_rho, energy)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_GUARD = 4

HARMONIC_MAX_LEVEL = 6
EIGS_MAX_LEVEL = 5


class GuardError(RuntimeError):
    """A resource guard (level or dimension limit) was exceeded."""


@dataclass
class RunConfig:
    operation: str
    level: int
    bc: str | None = None
    theta: float | None = None
    k: int | None = None
    tol: float = 0.0
    r_inv: float = DEFAULT_R_INV
    out: str = "."
    cache_dir: str | None = None
    force: bool = False

    def as_json(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _meta(cfg: RunConfig, graph, extra: dict | None = None) -> dict:
    rc = RenormConstants(cfg.r_inv)
    meta = {
        "version": __version__,
        "level": cfg.level,
        "spec": cfg.bc or "",
        "theta": "" if cfg.theta is None else cfg.theta,
        "r_inv": cfg.r_inv,
        "rho": rc.rho,
        "tol": cfg.tol,
        "graph_sha256": graph.content_hash(),
        "config": cfg.as_json(),
    }
    if extra:
        meta.update(extra)
    return meta


def _guard(condition: bool, message: str, force: bool = False) -> None:
    if condition and not force:
        raise GuardError(message + " (use --force to override)")


def _boundary_spec(cfg: RunConfig) -> BoundarySpec:
    if cfg.bc is None:
        raise ValueError("this operation needs --bc")
    theta = cfg.theta if cfg.bc in ("strip", "staircase") else None
    return BoundarySpec(cfg.bc, theta)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cached_eigensolve(cfg: RunConfig, graph, spec: BoundarySpec, k: int,
                       classify: bool = False,
                       return_fields: bool = True) -> spectra.EigenSet:
    cache = EigenCache(cfg.cache_dir)
    es = cache.load(graph.level, spec, k, cfg.tol)
    if es is None or (return_fields and es.fields is None):
        es = spectra.eigensolve(graph, spec, k, tol=cfg.tol,
                                return_fields=return_fields,
                                rho=RenormConstants(cfg.r_inv).rho)
        if classify and spec.kind in ("dirichlet", "neumann", "torus", "projective"):
            es = spectra.classify_symmetry(es, graph)
        cache.save(es, k_requested=k)
    else:
        es = es.with_rho(RenormConstants(cfg.r_inv).rho)
        if classify and es.labels is None and es.fields is not None:
            es = spectra.classify_symmetry(es, graph)
    return es


# -- subcommand bodies ---------------------------------------------------------


def cmd_graph(cfg: RunConfig, args) -> None:
    graph = build_graph(cfg.level)
    out = _outdir(cfg) / f"graph_m{cfg.level}.json"
    out.write_text(graph_to_json(graph))
    print(f"{out} cells={graph.n_cells} virtual={graph.n_virtual} "
          f"sha256={graph.content_hash()}")


def _harmonic_data(cfg: RunConfig, graph, args) -> harmonic.BoundaryData:
    if args.data == "sin":
        return harmonic.sin_boundary_data(graph, args.sin_k, args.edge)
    if args.data == "constant":
        return harmonic.BoundaryData.constant(graph, args.value)
    values = np.asarray(json.loads(Path(args.values).read_text()), dtype=float)
    data = harmonic.BoundaryData.zero(graph)
    data.values[:] = values
    return data


def cmd_harmonic(cfg: RunConfig, args) -> None:
    _guard(cfg.level > HARMONIC_MAX_LEVEL,
           f"harmonic solves guarded to level <= {HARMONIC_MAX_LEVEL}", cfg.force)
    graph = build_graph(cfg.level)
    data = _harmonic_data(cfg, graph, args)
    sol = harmonic.solve_bvp(graph, data)
    e = energy(sol.field, sol.field, graph, cfg.r_inv)
    meta = _meta(cfg, graph, {"residual": sol.residual, "energy": e})
    out = _outdir(cfg)
    io.emit_field_csv(out / "harmonic.csv", graph, sol.field, meta)
    io.emit_field_pgm(out / "harmonic.pgm", graph, sol.field, meta)
    io.emit_json(out / "harmonic.json",
                 {"energy": e, "residual": sol.residual, "level": cfg.level,
                  "r_inv": cfg.r_inv})
    print(f"energy={io.format_float(e)} residual={sol.residual:.3e}")


def cmd_poisson(cfg: RunConfig, args) -> None:
    _guard(cfg.level > HARMONIC_MAX_LEVEL,
           f"harmonic solves guarded to level <= {HARMONIC_MAX_LEVEL}", cfg.force)
    graph = build_graph(cfg.level)
    sol = harmonic.poisson_kernel(graph, args.side, args.t)
    meta = _meta(cfg, graph, {"side": args.side, "t": args.t})
    out = _outdir(cfg)
    io.emit_field_csv(out / "poisson.csv", graph, sol.field, meta)
    io.emit_field_pgm(out / "poisson.pgm", graph, sol.field, meta)
    if args.fit:
        fit = harmonic.blowup_fit(graph, sol.field, args.side, args.t)
        io.emit_json(out / "poisson_fit.json", fit)
        print(f"blow-up alpha={fit['alpha']:.4f} r2={fit['r2']:.4f}")


def cmd_resistance(cfg: RunConfig, args) -> None:
    graph = build_graph(cfg.level)
    out = _outdir(cfg)
    if args.x is not None:
        r = harmonic.effective_resistance(graph, args.x, args.y, cfg.r_inv)
        io.emit_json(out / "resistance.json",
                     {"x": args.x, "y": args.y, "r_inv": cfg.r_inv, "R": r})
        print(f"R({args.x},{args.y}) = {io.format_float(r)}")
    else:
        _guard(cfg.level > harmonic.RESISTANCE_FIELD_MAX_LEVEL,
               "resistance field guarded to level <= "
               f"{harmonic.RESISTANCE_FIELD_MAX_LEVEL}", cfg.force)
        field = harmonic.resistance_field(graph, args.y, cfg.r_inv)
        meta = _meta(cfg, graph, {"y": args.y})
        io.emit_field_csv(out / "resistance.csv", graph, field, meta)
        io.emit_field_pgm(out / "resistance.pgm", graph, field, meta)


def cmd_eigs(cfg: RunConfig, args) -> None:
    _guard(cfg.level > EIGS_MAX_LEVEL,
           f"eigensolves guarded to level <= {EIGS_MAX_LEVEL}", cfg.force)
    graph = build_graph(cfg.level)
    spec = _boundary_spec(cfg)
    classify = spec.kind in ("dirichlet", "neumann", "torus", "projective")
    es = _cached_eigensolve(cfg, graph, spec, cfg.k, classify=classify)
    rows = []
    for j in range(es.k):
        rows.append([j + 1, float(es.eigenvalues[j]), float(es.lambda_sc[j]),
                     (es.labels[j] if es.labels else "") or "",
                     float(es.residuals[j]) if es.residuals is not None else ""])
    meta = _meta(cfg, graph, {"rho_hat": es.rho})
    io.emit_table_csv(_outdir(cfg) / "eigs.csv", rows,
                      ["index", "lambda", "lambda_sc", "symmetry", "residual"], meta)
    print(f"wrote {es.k} eigenvalues (lambda_1={es.eigenvalues[0]:.6g})")


def cmd_counting(cfg: RunConfig, args) -> None:
    _guard(cfg.level > EIGS_MAX_LEVEL,
           f"eigensolves guarded to level <= {EIGS_MAX_LEVEL}", cfg.force)
    graph = build_graph(cfg.level)
    spec = _boundary_spec(cfg)
    es = _cached_eigensolve(cfg, graph, spec, cfg.k, return_fields=False)
    lam = es.lambda_sc
    meta = _meta(cfg, graph, {"rho_hat": es.rho})
    io.emit_curve_csv(_outdir(cfg) / "counting.csv",
                      {"lambda_sc": lam, "N": np.arange(1, len(lam) + 1)}, meta)
    lo, hi = args.fit_range
    if hi > len(lam):
        hi = len(lam)
    slope, intercept = spectra.counting_slope(lam, (lo, hi))
    io.emit_json(_outdir(cfg) / "counting_fit.json",
                 {"slope": slope, "intercept": intercept, "window": [lo, hi]})
    print(f"counting slope over [{lo},{hi}]: {slope:.4f}")


def cmd_weyl(cfg: RunConfig, args) -> None:
    _guard(cfg.level > EIGS_MAX_LEVEL,
           f"eigensolves guarded to level <= {EIGS_MAX_LEVEL}", cfg.force)
    graph = build_graph(cfg.level)
    spec = _boundary_spec(cfg)
    es = _cached_eigensolve(cfg, graph, spec, cfg.k, return_fields=False)
    exponent = args.exponent if args.exponent else RenormConstants(cfg.r_inv).alpha
    t, W = spectra.weyl_ratio(es.lambda_sc, exponent)
    meta = _meta(cfg, graph, {"exponent": exponent, "rho_hat": es.rho})
    io.emit_curve_csv(_outdir(cfg) / "weyl.csv", {"t": t, "W": W}, meta)
    print(f"weyl ratio over {len(t)} grid points, exponent={exponent:.4f}")


def cmd_heat(cfg: RunConfig, args) -> None:
    _guard(cfg.level > EIGS_MAX_LEVEL,
           f"eigensolves guarded to level <= {EIGS_MAX_LEVEL}", cfg.force)
    graph = build_graph(cfg.level)
    spec = _boundary_spec(cfg)
    es = _cached_eigensolve(cfg, graph, spec, cfg.k, return_fields=False)
    lam = es.lambda_sc
    rc = RenormConstants(cfg.r_inv)
    pos = lam[lam > 1e-12]
    t = np.geomspace(args.t_min or 1.0 / lam.max(), args.t_max or 10.0 / pos[0], 200)
    Z = kernels.heat_trace(lam, t)
    meta = _meta(cfg, graph, {"rho_hat": es.rho})
    io.emit_curve_csv(_outdir(cfg) / "heat_trace.csv",
                      {"t": t, "Z": Z, "scaled": t**rc.alpha * Z}, meta)
    slope, window = kernels.trace_slope(lam, graph.n_cells)
    io.emit_json(_outdir(cfg) / "heat_fit.json",
                 {"slope": slope, "window": list(window)})
    print(f"heat-trace small-t slope: {slope:.4f} over t in "
          f"[{window[0]:.3e}, {window[1]:.3e}]")


def cmd_dirichlet_kernel(cfg: RunConfig, args) -> None:
    _guard(cfg.level > EIGS_MAX_LEVEL,
           f"eigensolves guarded to level <= {EIGS_MAX_LEVEL}", cfg.force)
    graph = build_graph(cfg.level)
    spec = _boundary_spec(cfg)
    es = _cached_eigensolve(cfg, graph, spec, cfg.k)
    y = graph.index(args.y)
    field = kernels.dirichlet_kernel(es, args.terms or es.k, y)
    meta = _meta(cfg, graph, {"y": args.y, "terms": args.terms or es.k})
    out = _outdir(cfg)
    io.emit_field_csv(out / "dirichlet_kernel.csv", graph, field, meta)
    io.emit_field_pgm(out / "dirichlet_kernel.pgm", graph, field, meta)


def cmd_decay(cfg: RunConfig, args) -> None:
    _guard(cfg.level > HARMONIC_MAX_LEVEL,
           f"harmonic solves guarded to level <= {HARMONIC_MAX_LEVEL}", cfg.force)
    graph = build_graph(cfg.level)
    sol = harmonic.solve_bvp(graph, harmonic.sin_boundary_data(graph, args.sin_k,
                                                               args.data_edge))
    prof = boundary.decay_profile(sol.field, graph, args.edge)
    rows = [[p, float(a), float(al)]
            for p, a, al in zip(prof.positions, prof.amplitudes, prof.alphas)]
    meta = _meta(cfg, graph, {"edge": args.edge, "sin_k": args.sin_k})
    io.emit_table_csv(_outdir(cfg) / "decay.csv", rows,
                      ["position", "A", "alpha"], meta)
    io.emit_json(_outdir(cfg) / "decay_summary.json", prof.summary())
    print(f"mean alpha over {len(prof.positions)} stacks: {prof.mean_alpha:.4f}")


def cmd_corner_decay(cfg: RunConfig, args) -> None:
    _guard(cfg.level > HARMONIC_MAX_LEVEL,
           f"harmonic solves guarded to level <= {HARMONIC_MAX_LEVEL}", cfg.force)
    graph = build_graph(cfg.level)
    sol = harmonic.solve_bvp(graph, harmonic.sin_boundary_data(graph, args.sin_k,
                                                               args.data_edge))
    stack = boundary.corner_stack(graph, args.corner)
    fit = boundary.fit_corner_decay(sol.field, stack)
    io.emit_json(_outdir(cfg) / "corner_decay.json",
                 {"corner": args.corner, "sin_k": args.sin_k,
                  "alpha": fit.alpha, "A": fit.amplitude,
                  "values": list(fit.values), "distances": list(fit.distances)})
    print(f"corner {args.corner}: alpha={fit.alpha:.4f} A={fit.amplitude:.6g}")


def cmd_gauss_green(cfg: RunConfig, args) -> None:
    _guard(cfg.level > HARMONIC_MAX_LEVEL,
           f"harmonic solves guarded to level <= {HARMONIC_MAX_LEVEL}", cfg.force)
    graph = build_graph(cfg.level)
    sol = harmonic.solve_bvp(graph, harmonic.sin_boundary_data(graph, args.sin_k))
    rng = np.random.default_rng(args.seed)
    v = rng.standard_normal(graph.n_cells)
    terms = boundary.gauss_green_residual(sol.field, sol.virtual_values, v,
                                          graph, cfg.r_inv)
    io.emit_json(_outdir(cfg) / "gauss_green.json",
                 {"energy": terms.energy, "interior": terms.interior,
                  "boundary": terms.boundary, "residual": terms.residual,
                  "seed": args.seed, "sin_k": args.sin_k})
    print(f"identity residual: {terms.residual:.3e}")


def cmd_bands(cfg: RunConfig, args) -> None:
    _guard(cfg.level > 4, "band sweeps guarded to level <= 4", cfg.force)
    graph = build_graph(cfg.level)
    sweep = covers.sweep_bands(graph, args.cover, theta_grid=args.grid, k=cfg.k,
                               rho=RenormConstants(cfg.r_inv).rho)
    rows = []
    for i, th in enumerate(sweep.thetas):
        for j in range(sweep.k):
            rows.append([float(th), j + 1, float(sweep.bands[i, j]),
                         float(sweep.bands_sc[i, j])])
    meta = _meta(cfg, graph, {"cover": args.cover})
    io.emit_table_csv(_outdir(cfg) / "bands.csv", rows,
                      ["theta", "band", "lambda", "lambda_sc"], meta)
    proj = covers.project_spectrum(sweep)
    io.emit_json(_outdir(cfg) / "bands_intervals.json",
                 {"intervals": [list(iv) for iv in proj.intervals],
                  "gaps": [list(g) for g in proj.gaps],
                  "flags": sweep.flags})
    print(f"{args.cover}: {len(proj.intervals)} spectral intervals, "
          f"{len(proj.gaps)} gaps")


# -- reproduce ----------------------------------------------------------------


def _reproduce_31(cfg: RunConfig, args) -> None:
    max_level = min(cfg.level or 6, HARMONIC_MAX_LEVEL)
    rows = []
    for m in range(1, max_level + 1):
        graph = build_graph(m)
        row = [m]
        for k in range(1, 7):
            sol = harmonic.solve_bvp(graph, harmonic.sin_boundary_data(graph, k))
            row.append(energy(sol.field, sol.field, graph, cfg.r_inv))
        rows.append(row)
    graph1 = build_graph(1)
    meta = _meta(cfg, graph1, {"table": "3.1"})
    io.emit_table_csv(_outdir(cfg) / "table_3.1.csv", rows,
                      ["m"] + [f"k={k}" for k in range(1, 7)], meta)


def _merged_index_rows(es: spectra.EigenSet):
    """Rows with degenerate pairs merged, as in the reference tables."""
    rows = []
    taken = np.zeros(es.k, dtype=bool)
    for sl in spectra._clusters(es.eigenvalues):
        idx = list(range(sl.start + 1, sl.stop + 1))
        if taken[sl.start]:
            continue
        taken[sl.start:sl.stop] = True
        rows.append((",".join(map(str, idx)), sl))
    return rows


def _reproduce_eig_table(cfg: RunConfig, args, kind: str, levels: list[int],
                         k: int, table_id: str) -> None:
    _guard(max(levels) > EIGS_MAX_LEVEL,
           f"eigensolves guarded to level <= {EIGS_MAX_LEVEL}", cfg.force)
    spec = BoundarySpec(kind)
    sets = {}
    for m in levels:
        graph = build_graph(m)
        classify = kind in ("dirichlet", "neumann")
        sets[m] = _cached_eigensolve(cfg, graph, spec, k, classify=classify)
    fine = max(levels)
    if len(levels) >= 2:
        coarse = sorted(levels)[-2]
        rho_hat = calibrate_rho(sets[coarse].eigenvalues, sets[fine].eigenvalues)
    else:
        rho_hat = RenormConstants(cfg.r_inv).rho
    es_fine = sets[fine]
    rows = []
    for idx_text, sl in _merged_index_rows(es_fine):
        row = [idx_text, rho_hat**fine * float(np.mean(es_fine.eigenvalues[sl]))]
        for m in sorted(levels):
            row.append(float(np.mean(sets[m].eigenvalues[sl.start:sl.stop])))
        label = (es_fine.labels[sl.start] if es_fine.labels else "") or ""
        row.append(label)
        rows.append(row)
    graph = build_graph(fine)
    meta = _meta(cfg, graph, {"table": table_id, "rho_hat": rho_hat})
    header = (["index", "lambda_sc"] + [f"level_{m}" for m in sorted(levels)]
              + ["symmetry"])
    io.emit_table_csv(_outdir(cfg) / f"table_{table_id}.csv", rows, header, meta)


def _reproduce_corner(cfg: RunConfig, args, which: str) -> None:
    level = min(cfg.level or HARMONIC_MAX_LEVEL, HARMONIC_MAX_LEVEL)
    graph = build_graph(level)
    corner = "top_left" if which == "6.1" else "bottom_left"
    rows = []
    for k in range(1, 7):
        sol = harmonic.solve_bvp(graph, harmonic.sin_boundary_data(graph, k))
        fit = boundary.fit_corner_decay(sol.field, boundary.corner_stack(graph, corner))
        rows.append([k, float(fit.alpha), float(fit.amplitude)])
    meta = _meta(cfg, graph, {"table": which, "corner": corner})
    io.emit_table_csv(_outdir(cfg) / f"table_{which}.csv", rows,
                      ["k", "alpha", "A"], meta)


def _reproduce_63(cfg: RunConfig, args) -> None:
    level = min(cfg.level or 5, EIGS_MAX_LEVEL)
    graph = build_graph(level)
    cfg_local = cfg
    es = _cached_eigensolve(cfg_local, graph, BoundarySpec("dirichlet"), 8,
                            classify=True)
    stack = boundary.corner_stack(graph, "top_left")
    rows = []
    for j in range(6):
        try:
            fit = boundary.fit_corner_decay(es.fields[:, j], stack)
            rows.append([j + 1, es.labels[j] or "", float(fit.alpha),
                         float(fit.amplitude)])
        except ValueError:
            rows.append([j + 1, es.labels[j] or "", "degenerate", "degenerate"])
    meta = _meta(cfg, graph, {"table": "6.3"})
    io.emit_table_csv(_outdir(cfg) / "table_6.3.csv", rows,
                      ["k", "symmetry", "alpha", "A"], meta)


def cmd_reproduce(cfg: RunConfig, args) -> None:
    table = args.table
    if table == "3.1":
        cfg.level = cfg.level or 6
        _reproduce_31(cfg, args)
    elif table in ("4.1", "4.2"):
        kind = "dirichlet" if table == "4.1" else "neumann"
        levels = [cfg.level] if cfg.level else [5]
        _reproduce_eig_table(cfg, args, kind, levels, cfg.k or 60, table)
    elif table in ("4.3", "4.4", "4.5"):
        kind = {"4.3": "torus", "4.4": "klein", "4.5": "projective"}[table]
        levels = [4, 5] if cfg.level is None else [cfg.level - 1, cfg.level]
        _reproduce_eig_table(cfg, args, kind, levels, cfg.k or 15, table)
    elif table in ("6.1", "6.2"):
        _reproduce_corner(cfg, args, table)
    elif table == "6.3":
        _reproduce_63(cfg, args)
    else:
        raise ValueError(f"unknown table id {table!r}; expected 3.1, 4.1-4.5, "
                         "or 6.1-6.3")
    print(f"table {table} written to {cfg.out}")


# -- parser --------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, level_default=None) -> None:
    p.add_argument("--level", type=int, default=level_default, help="subdivision depth m")
    p.add_argument("--tol", type=float, default=0.0, help="eigensolver tolerance")
    p.add_argument("--r-inv", type=float, default=DEFAULT_R_INV, dest="r_inv",
                   help="energy renormalizer 1/r")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--cache-dir", default=None, help="eigen cache directory")
    p.add_argument("--force", action="store_true", help="override resource guards")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="carpetlab",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("graph", help="build and serialize a cell graph")
    _add_common(p, level_default=1)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("harmonic", help="solve a harmonic boundary value problem")
    _add_common(p, level_default=3)
    p.add_argument("--data", choices=("sin", "constant", "file"), default="sin")
    p.add_argument("--sin-k", type=int, default=1, dest="sin_k")
    p.add_argument("--edge", default="top")
    p.add_argument("--value", type=float, default=1.0)
    p.add_argument("--values", help="JSON file with 4*3^m segment averages")
    p.set_defaults(func=cmd_harmonic)

    p = sub.add_parser("poisson", help="boundary-delta harmonic kernel")
    _add_common(p, level_default=4)
    p.add_argument("--side", default="top")
    p.add_argument("--t", type=float, default=1.0 / 3.0)
    p.add_argument("--fit", action="store_true",
                   help="fit the blow-up rate along the approach line")
    p.set_defaults(func=cmd_poisson)

    p = sub.add_parser("resistance", help="effective resistance")
    _add_common(p, level_default=3)
    p.add_argument("--x", default=None, help="cell address")
    p.add_argument("--y", required=True, help="cell address")
    p.set_defaults(func=cmd_resistance)

    p = sub.add_parser("eigs", help="smallest eigenpairs")
    _add_common(p, level_default=3)
    p.add_argument("--bc", required=True)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("-k", type=int, default=20)
    p.set_defaults(func=cmd_eigs)

    p = sub.add_parser("counting", help="eigenvalue counting function")
    _add_common(p, level_default=3)
    p.add_argument("--bc", required=True)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("-k", type=int, default=200)
    p.add_argument("--fit-range", type=int, nargs=2, default=(50, 2000))
    p.set_defaults(func=cmd_counting)

    p = sub.add_parser("weyl", help="Weyl ratio N(t)/t^alpha")
    _add_common(p, level_default=3)
    p.add_argument("--bc", required=True)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("-k", type=int, default=200)
    p.add_argument("--exponent", type=float, default=None)
    p.set_defaults(func=cmd_weyl)

    p = sub.add_parser("heat", help="heat trace and slope diagnostics")
    _add_common(p, level_default=3)
    p.add_argument("--bc", required=True)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("-k", type=int, default=200)
    p.add_argument("--t-min", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.set_defaults(func=cmd_heat)

    p = sub.add_parser("dirichlet-kernel", help="partial reproducing kernel")
    _add_common(p, level_default=3)
    p.add_argument("--bc", default="neumann")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("-k", type=int, default=60)
    p.add_argument("--terms", type=int, default=None)
    p.add_argument("--y", required=True, help="cell address of the kernel center")
    p.set_defaults(func=cmd_dirichlet_kernel)

    p = sub.add_parser("decay", help="boundary decay profile of a harmonic field")
    _add_common(p, level_default=4)
    p.add_argument("--sin-k", type=int, default=1, dest="sin_k")
    p.add_argument("--data-edge", default="top", dest="data_edge")
    p.add_argument("--edge", default="bottom")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("corner-decay", help="corner decay fit of a harmonic field")
    _add_common(p, level_default=4)
    p.add_argument("--sin-k", type=int, default=1, dest="sin_k")
    p.add_argument("--data-edge", default="top", dest="data_edge")
    p.add_argument("--corner", default="bottom_left")
    p.set_defaults(func=cmd_corner_decay)

    p = sub.add_parser("gauss-green", help="summation-by-parts identity check")
    _add_common(p, level_default=3)
    p.add_argument("--sin-k", type=int, default=1, dest="sin_k")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gauss_green)

    p = sub.add_parser("bands", help="twist-angle band sweep of a cover")
    _add_common(p, level_default=2)
    p.add_argument("--cover", choices=("strip", "staircase"), default="staircase")
    p.add_argument("--grid", type=int, default=covers.DEFAULT_THETA_GRID)
    p.add_argument("-k", type=int, default=20)
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("reproduce", help="regenerate a reference table by id")
    _add_common(p)
    p.add_argument("table", help="table id: 3.1, 4.1-4.5, 6.1-6.3")
    p.add_argument("-k", type=int, default=None)
    p.set_defaults(func=cmd_reproduce)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    cfg = RunConfig(
        operation=args.command,
        level=getattr(args, "level", None),
        bc=getattr(args, "bc", None) or getattr(args, "cover", None),
        theta=getattr(args, "theta", None),
        k=getattr(args, "k", None),
        tol=getattr(args, "tol", 0.0),
        r_inv=getattr(args, "r_inv", DEFAULT_R_INV),
        out=getattr(args, "out", "."),
        cache_dir=getattr(args, "cache_dir", None),
        force=getattr(args, "force", False),
    )
    try:
        args.func(cfg, args)
    except GuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except spectra.ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
