"""Level-m cell complex of the Sierpinski carpet.

Cells at level m are words of m digits in 0..7.  Each digit picks one of the
eight subsquares that remain after the middle ninth is removed, arranged
clockwise starting at the top-left:

    0 1 2
    7 . 3
    6 5 4

The first digit is the outermost (coarsest) subdivision, so the address
'15' is the bottom-center ninth of the top-center third.  Every word over
{0,...,7} names a valid cell, and the lexicographic order of addresses
coincides with the numeric order of their base-8 values; cell indices are
exactly those base-8 values.

Two cells are adjacent when their squares share a full edge of length
3^-m (corner contact does not count).  Cells along the outer boundary of
the unit square own one *virtual cell* per touched side -- the reflection
of the cell across that boundary segment -- which the operator assembly
uses to encode boundary conditions.  Virtual cells are indexed after the
8^m real cells, ordered by side (top, right, bottom, left) and then by
position along the side.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DIGIT_COL",
    "DIGIT_ROW",
    "SIDES",
    "CarpetGraph",
    "GroupElement",
    "D4",
    "D4_BY_NAME",
    "build_graph",
    "apply_symmetry",
    "compose",
    "line_restriction",
    "graph_to_json",
    "graph_from_json",
]

# digit -> (column, row) inside a 3x3 block, row 0 at the top
DIGIT_COL = np.array([0, 1, 2, 2, 2, 1, 0, 0], dtype=np.int64)
DIGIT_ROW = np.array([0, 0, 0, 1, 2, 2, 2, 1], dtype=np.int64)

SIDES = ("top", "right", "bottom", "left")

MAX_LEVEL = 7

GRAPH_FORMAT_VERSION = 1


class LevelRangeError(ValueError):
    """Requested level outside the supported range."""


def _check_level(m: int, max_level: int = MAX_LEVEL) -> None:
    if not (1 <= m <= max_level):
        raise LevelRangeError(f"level must be in 1..{max_level}, got {m}")


def address_to_index(address: str) -> int:
    """Base-8 value of an address string such as '230'."""
    return int(address, 8)


def index_to_address(index: int, level: int) -> str:
    digits = []
    for j in range(level):
        digits.append(str((index >> (3 * (level - 1 - j))) & 7))
    return "".join(digits)


def _digits_of_indices(indices: np.ndarray, level: int) -> np.ndarray:
    """(n, level) array of base-8 digits, first digit outermost."""
    shifts = 3 * np.arange(level - 1, -1, -1, dtype=np.int64)
    return (indices[:, None] >> shifts[None, :]) & 7


@dataclass(frozen=True)
class GroupElement:
    """One of the eight symmetries of the square, as a permutation of the
    digit alphabet applied digit-wise to addresses."""

    name: str
    perm: tuple[int, ...]

    def __call__(self, digit: int) -> int:
        return self.perm[digit]


def _rot(k: int) -> tuple[int, ...]:
    return tuple((d + 2 * k) % 8 for d in range(8))


D4 = (
    GroupElement("identity", _rot(0)),
    GroupElement("rot90", _rot(1)),
    GroupElement("rot180", _rot(2)),
    GroupElement("rot270", _rot(3)),
    GroupElement("mirror_h", (2, 1, 0, 7, 6, 5, 4, 3)),   # x -> 1-x
    GroupElement("mirror_v", (6, 5, 4, 3, 2, 1, 0, 7)),   # y -> 1-y
    GroupElement("diag_main", (0, 7, 6, 5, 4, 3, 2, 1)),  # fixes top-left/bottom-right
    GroupElement("diag_anti", (4, 3, 2, 1, 0, 7, 6, 5)),  # fixes top-right/bottom-left
)

D4_BY_NAME = {g.name: g for g in D4}


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """g after h: (g*h)(d) = g(h(d)).  Valid because every element of the
    square's symmetry group acts on addresses digit-wise."""
    perm = tuple(g.perm[h.perm[d]] for d in range(8))
    for e in D4:
        if e.perm == perm:
            return e
    raise ValueError("composition left the group; table is corrupt")


def apply_symmetry(g: GroupElement, address: str) -> str:
    """Image of a cell address under a symmetry of the square."""
    return "".join(str(g.perm[int(c)]) for c in address)


def apply_symmetry_indices(g: GroupElement, graph: "CarpetGraph") -> np.ndarray:
    """Permutation p with p[i] = index of g(cell_i), for all cells at once."""
    digits = _digits_of_indices(np.arange(graph.n_cells, dtype=np.int64), graph.level)
    mapped = np.asarray(g.perm, dtype=np.int64)[digits]
    shifts = 3 * np.arange(graph.level - 1, -1, -1, dtype=np.int64)
    return (mapped << shifts[None, :]).sum(axis=1)


@dataclass(frozen=True)
class CarpetGraph:
    """Immutable level-m cell graph with boundary registry.

    Attributes
    ----------
    level : subdivision depth m; there are 8**m cells.
    cols, rows : integer grid position of each cell in the 3**m x 3**m grid,
        row 0 at the top.  Cell i sits at (cols[i], rows[i]).
    edges : (E, 2) array of adjacent cell index pairs, i < j, sorted.
    grid : (3**m, 3**m) lookup, grid[col, row] = cell index or -1 for holes.
    boundary_cells : per side, the 3**m cell indices along that side in
        position order (top/bottom by column, left/right by row).
    """

    level: int
    cols: np.ndarray
    rows: np.ndarray
    edges: np.ndarray
    grid: np.ndarray
    boundary_cells: dict[str, np.ndarray]
    _neighbor_csr: tuple[np.ndarray, np.ndarray] = field(repr=False, default=None)

    @property
    def n_cells(self) -> int:
        return 8**self.level

    @property
    def side_length(self) -> int:
        return 3**self.level

    @property
    def n_virtual(self) -> int:
        return 4 * 3**self.level

    def address(self, index: int) -> str:
        return index_to_address(index, self.level)

    def index(self, address: str) -> int:
        if len(address) != self.level or any(c not in "01234567" for c in address):
            raise ValueError(f"not a level-{self.level} address: {address!r}")
        return address_to_index(address)

    def cell_rect(self, address: str) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) of the cell's square in the unit square, y up."""
        i = self.index(address)
        h = 3.0 ** (-self.level)
        c, r = int(self.cols[i]), int(self.rows[i])
        return (c * h, 1.0 - (r + 1) * h, (c + 1) * h, 1.0 - r * h)

    def cell_center(self, address: str) -> tuple[float, float]:
        x0, y0, x1, y1 = self.cell_rect(address)
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)

    def neighbor_indices(self, index: int) -> np.ndarray:
        indptr, indices = self._neighbor_csr
        return indices[indptr[index] : indptr[index + 1]]

    def neighbors(self, address: str) -> list[str]:
        """Sorted addresses of the cells sharing a full edge with `address`."""
        i = self.index(address)
        return [self.address(int(j)) for j in np.sort(self.neighbor_indices(i))]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_cells, dtype=np.int64)
        np.add.at(deg, self.edges[:, 0], 1)
        np.add.at(deg, self.edges[:, 1], 1)
        return deg

    # -- virtual cells -----------------------------------------------------

    def virtual_owner(self, side: str, position: int) -> int:
        """Cell index owning the virtual cell at (side, position)."""
        return int(self.boundary_cells[side][position])

    def virtual_owners(self) -> np.ndarray:
        """Owners of all 4*3^m virtual cells in canonical order
        (top, right, bottom, left; position ascending within each side)."""
        return np.concatenate([self.boundary_cells[s] for s in SIDES])

    def virtual_index(self, side: str, position: int) -> int:
        return self.n_cells + SIDES.index(side) * self.side_length + position

    def virtual_count_per_cell(self) -> np.ndarray:
        counts = np.zeros(self.n_cells, dtype=np.int64)
        np.add.at(counts, self.virtual_owners(), 1)
        return counts

    def segment_interval(self, position: int) -> tuple[float, float]:
        """Parameter interval of a boundary segment along its side.

        Sides are parameterized by t in [0, 1] in position order: left to
        right for top/bottom, top to bottom for left/right.
        """
        h = 3.0 ** (-self.level)
        return (position * h, (position + 1) * h)

    # -- hashing / equality ------------------------------------------------

    def content_hash(self) -> str:
        payload = json.dumps(
            {
                "format_version": GRAPH_FORMAT_VERSION,
                "level": self.level,
                "edges": self.edges.tolist(),
                "boundary": {s: self.boundary_cells[s].tolist() for s in SIDES},
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode()
        return hashlib.sha256(payload).hexdigest()


def build_graph(m: int, max_level: int = MAX_LEVEL) -> CarpetGraph:
    """Construct the level-m cell graph.

    Deterministic: cells are ordered lexicographically by address, edges
    sorted with the smaller index first.
    """
    _check_level(m, max_level)
    n = 8**m
    side = 3**m
    indices = np.arange(n, dtype=np.int64)
    digits = _digits_of_indices(indices, m)
    place = 3 ** np.arange(m - 1, -1, -1, dtype=np.int64)
    cols = (DIGIT_COL[digits] * place[None, :]).sum(axis=1)
    rows = (DIGIT_ROW[digits] * place[None, :]).sum(axis=1)

    grid = np.full((side, side), -1, dtype=np.int64)
    grid[cols, rows] = indices

    # right and down neighbors; symmetry gives the rest
    edge_list = []
    for dc, dr in ((1, 0), (0, 1)):
        c2, r2 = cols + dc, rows + dr
        ok = (c2 < side) & (r2 < side)
        j = grid[c2[ok], r2[ok]]
        present = j >= 0
        a = indices[ok][present]
        b = j[present]
        edge_list.append(np.column_stack([np.minimum(a, b), np.maximum(a, b)]))
    edges = np.vstack(edge_list)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]

    boundary = {
        "top": grid[np.arange(side), 0],
        "right": grid[side - 1, np.arange(side)],
        "bottom": grid[np.arange(side), side - 1],
        "left": grid[0, np.arange(side)],
    }
    for s, cells in boundary.items():
        if np.any(cells < 0):
            raise AssertionError(f"outer boundary side {s} not fully covered")

    both = np.concatenate([edges[:, 0], edges[:, 1]])
    order = np.argsort(both, kind="stable")
    partners = np.concatenate([edges[:, 1], edges[:, 0]])[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, both + 1, 1)
    indptr = np.cumsum(indptr)

    return CarpetGraph(
        level=m,
        cols=cols,
        rows=rows,
        edges=edges,
        grid=grid,
        boundary_cells=boundary,
        _neighbor_csr=(indptr, partners),
    )


# -- line restrictions -----------------------------------------------------


def _runs_from_cells(graph: CarpetGraph, cells: np.ndarray, coords: np.ndarray,
                     positions: np.ndarray):
    """Split a positional scan into maximal runs of consecutive cells."""
    runs = []
    current: list[tuple[str, float]] = []
    prev_pos = None
    for cell, coord, pos in zip(cells, coords, positions):
        if cell < 0:
            if current:
                runs.append(current)
                current = []
            prev_pos = None
            continue
        if prev_pos is not None and pos != prev_pos + 1:
            runs.append(current)
            current = []
        current.append((graph.address(int(cell)), float(coord)))
        prev_pos = pos
    if current:
        runs.append(current)
    return runs


def line_restriction(graph: CarpetGraph, anchor: str,
                     direction: str) -> list[list[tuple[str, float]]]:
    """Cells crossed by a line through `anchor`, as ordered runs.

    direction 'horizontal' / 'vertical': the axis-parallel line through the
    anchor's row / column.  direction 'half_diagonal': the 45-degree segment
    from the nearest corner of the square toward the center; the anchor must
    lie on one of the two diagonals.  Runs are maximal hole-free stretches,
    each a list of (address, coordinate) with the coordinate measured along
    the line (x for horizontal, depth from the top edge for vertical, arc
    length from the corner for the diagonal).

    Raises ValueError if the line meets no cells or the anchor is not on a
    diagonal when 'half_diagonal' is requested.
    """
    i = graph.index(anchor)
    side = graph.side_length
    h = 3.0 ** (-graph.level)
    col, row = int(graph.cols[i]), int(graph.rows[i])

    if direction == "horizontal":
        scan = np.arange(side)
        cells = graph.grid[scan, row]
        coords = (scan + 0.5) * h
        positions = scan
    elif direction == "vertical":
        scan = np.arange(side)
        cells = graph.grid[col, scan]
        coords = (scan + 0.5) * h
        positions = scan
    elif direction == "half_diagonal":
        if col == row:
            cs, rs = np.arange(side), np.arange(side)
        elif col + row == side - 1:
            cs, rs = side - 1 - np.arange(side), np.arange(side)
        else:
            raise ValueError(f"cell {anchor!r} does not lie on a diagonal")
        cells = graph.grid[cs, rs]
        coords = (np.arange(side) + 0.5) * h * np.sqrt(2.0)
        positions = np.arange(side)
    else:
        raise ValueError(f"unknown direction {direction!r}")

    runs = _runs_from_cells(graph, cells, coords, positions)
    if not runs:
        raise ValueError("line does not cross any cell")
    return runs


# -- serialization ---------------------------------------------------------


def graph_to_json(graph: CarpetGraph) -> str:
    """Versioned JSON serialization; cell addresses are implicit by index."""
    return json.dumps(
        {
            "format_version": GRAPH_FORMAT_VERSION,
            "level": graph.level,
            "n_cells": graph.n_cells,
            "edges": graph.edges.tolist(),
            "boundary": {s: graph.boundary_cells[s].tolist() for s in SIDES},
        },
        sort_keys=True,
        separators=(",", ":"),
    )


def graph_from_json(text: str) -> CarpetGraph:
    doc = json.loads(text)
    if doc.get("format_version") != GRAPH_FORMAT_VERSION:
        raise ValueError(f"unsupported graph format version {doc.get('format_version')!r}")
    graph = build_graph(int(doc["level"]))
    if graph.edges.tolist() != doc["edges"]:
        raise ValueError("serialized adjacency does not match rebuilt graph")
    for s in SIDES:
        if graph.boundary_cells[s].tolist() != doc["boundary"][s]:
            raise ValueError("serialized boundary registry does not match rebuilt graph")
    return graph
