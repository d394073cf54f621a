"""Deterministic file emission: field CSV / PGM rasters, curve tables,
fit results.

Every CSV carries comment lines naming the producing configuration (level,
boundary spec, twist, renormalization constants, solver tolerance, graph
content hash), floats print at 15 significant digits, and nothing
time-dependent enters the output, so identical configurations yield
byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .geometry import CarpetGraph

__all__ = [
    "format_float",
    "header_lines",
    "emit_field_csv",
    "read_field_csv",
    "emit_field_pgm",
    "emit_curve_csv",
    "emit_table_csv",
    "emit_json",
]

PGM_MAXVAL = 65535
PGM_HOLE = 0


def format_float(v: float) -> str:
    return format(float(v), ".15g")


def header_lines(meta: dict) -> list[str]:
    out = []
    for key in sorted(meta):
        val = meta[key]
        if isinstance(val, float):
            val = format_float(val)
        out.append(f"# {key}={val}")
    return out


def emit_field_csv(path, graph: CarpetGraph, field: np.ndarray, meta: dict) -> None:
    """Rows of (cell address, value); complex values emit two columns."""
    complex_field = np.iscomplexobj(field)
    with open(path, "w") as fh:
        for line in header_lines(meta):
            fh.write(line + "\n")
        fh.write("address,value_im_re" if complex_field else "address,value")
        fh.write("\n")
        for i in range(graph.n_cells):
            if complex_field:
                fh.write(f"{graph.address(i)},{format_float(field[i].real)},"
                         f"{format_float(field[i].imag)}\n")
            else:
                fh.write(f"{graph.address(i)},{format_float(field[i])}\n")


def read_field_csv(path):
    addresses, values = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("address"):
                continue
            parts = line.strip().split(",")
            addresses.append(parts[0])
            if len(parts) == 3:
                values.append(complex(float(parts[1]), float(parts[2])))
            else:
                values.append(float(parts[1]))
    return addresses, np.asarray(values)


def emit_field_pgm(path, graph: CarpetGraph, field: np.ndarray, meta: dict) -> None:
    """Paint the field onto the 3^m x 3^m grid as an ASCII PGM.

    Holes take the sentinel gray 0; cell values scale linearly onto
    1..65535 (a constant field maps to mid-gray).
    """
    field = np.asarray(field, dtype=float)
    side = graph.side_length
    lo, hi = float(field.min()), float(field.max())
    if hi > lo:
        levels = 1 + np.round((field - lo) / (hi - lo) * (PGM_MAXVAL - 1)).astype(int)
    else:
        levels = np.full(graph.n_cells, (PGM_MAXVAL + 1) // 2, dtype=int)
    raster = np.full((side, side), PGM_HOLE, dtype=int)
    raster[graph.rows, graph.cols] = levels
    with open(path, "w") as fh:
        fh.write("P2\n")
        for line in header_lines(meta):
            fh.write(line + "\n")
        fh.write(f"{side} {side}\n{PGM_MAXVAL}\n")
        for r in range(side):
            fh.write(" ".join(str(v) for v in raster[r]) + "\n")


def emit_curve_csv(path, columns: dict[str, np.ndarray], meta: dict) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[name]) for name in names]
    n = len(arrays[0])
    with open(path, "w") as fh:
        for line in header_lines(meta):
            fh.write(line + "\n")
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(
                str(a[i]) if a.dtype.kind in "iUSb" else format_float(a[i])
                for a in arrays) + "\n")


def emit_table_csv(path, rows: list[list], header: list[str], meta: dict) -> None:
    with open(path, "w") as fh:
        for line in header_lines(meta):
            fh.write(line + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                format_float(v) if isinstance(v, float) else str(v)
                for v in row) + "\n")


def emit_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
