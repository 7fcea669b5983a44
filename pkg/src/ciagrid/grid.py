"""Dyadic rounding grids over axis-aligned box domains.

A rounding grid is an ordered partition of a box into dyadic cells. A
cell is addressed by (depth, index): at depth j the box is divided into
2**j slabs per axis and index gives the per-axis position, so the cell
covers origin + [index * h, (index + 1) * h) with h = lengths / 2**j.

Cells are kept in Morton (Z-curve) order with axis 0 in the least
significant bit position. Splitting a cell replaces it in place by its
2**dim children, again Morton ordered, so the cell sequence always
traverses the domain along the Z-curve. All measures are exact
`fractions.Fraction` values; floating point enters only in reporting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "Domain",
    "Cell",
    "Grid",
    "Adjacency",
    "as_fraction",
    "morton_key",
    "morton_index",
    "initial_grid",
    "split_cell",
    "cell_volume",
    "cell_box",
    "scaled_box",
    "adjacency",
    "split_adjacency",
    "verify_admissible",
    "validate_grid",
    "regularity_constant",
    "grid_to_json",
    "grid_from_json",
    "save_grid",
    "load_grid",
]


def as_fraction(value) -> Fraction:
    """Convert a number to an exact Fraction.

    Floats go through their shortest decimal repr, so a literal like
    0.6 becomes 3/5 rather than the binary expansion of the double.
    Strings accept both "0.6" and "3/5".
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box, the root cell of every grid over it."""

    origin: tuple[Fraction, ...]
    lengths: tuple[Fraction, ...]

    def __post_init__(self):
        origin = tuple(as_fraction(x) for x in self.origin)
        lengths = tuple(as_fraction(x) for x in self.lengths)
        if len(origin) != len(lengths):
            raise ValueError("origin and lengths must have equal dimension")
        if not origin:
            raise ValueError("domain needs at least one axis")
        if any(s <= 0 for s in lengths):
            raise ValueError("domain side lengths must be positive")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "lengths", lengths)

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> Fraction:
        return math.prod(self.lengths, start=Fraction(1))


@dataclass(frozen=True)
class Cell:
    """Dyadic cell address: per-axis index at the given depth."""

    depth: int
    index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if self.depth < 0:
            raise ValueError("cell depth must be non-negative")
        if any(not 0 <= i < 2**self.depth for i in self.index):
            raise ValueError(f"cell index {self.index} out of range at depth {self.depth}")


@dataclass(frozen=True)
class Grid:
    """Ordered dyadic partition of a domain.

    generation counts the splits applied since the initial grid; it
    disambiguates grids with equal cell sets but different history.
    """

    domain: Domain
    cells: tuple[Cell, ...]
    generation: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise ValueError("grid must contain at least one cell")
        d = self.domain.dim
        for cell in self.cells:
            if len(cell.index) != d:
                raise ValueError("cell dimension does not match domain")

    def __len__(self) -> int:
        return len(self.cells)

    def depth_max(self) -> int:
        return max(c.depth for c in self.cells)

    def volume(self, n: int) -> Fraction:
        return cell_volume(self.domain, self.cells[n])

    def volumes(self) -> tuple[Fraction, ...]:
        return tuple(cell_volume(self.domain, c) for c in self.cells)


def morton_key(index: Sequence[int], depth: int) -> int:
    """Interleave the bits of a cell index, axis 0 least significant."""
    d = len(index)
    key = 0
    for b in range(depth):
        for a in range(d):
            key |= ((index[a] >> b) & 1) << (b * d + a)
    return key


def morton_index(key: int, depth: int, dim: int) -> tuple[int, ...]:
    """Inverse of morton_key."""
    index = [0] * dim
    for b in range(depth):
        for a in range(dim):
            index[a] |= ((key >> (b * dim + a)) & 1) << b
    return tuple(index)


def initial_grid(domain: Domain, depth0: int = 0) -> Grid:
    """Uniform grid of 2**(dim * depth0) cells in Morton order."""
    if depth0 < 0:
        raise ValueError("depth0 must be non-negative")
    d = domain.dim
    cells = tuple(
        Cell(depth0, morton_index(key, depth0, d)) for key in range(2 ** (d * depth0))
    )
    return Grid(domain, cells, generation=0)


def split_cell(grid: Grid, n: int) -> Grid:
    """New grid with cell n replaced by its 2**dim children in Morton order."""
    if not 0 <= n < len(grid.cells):
        raise IndexError(f"cell position {n} out of range")
    parent = grid.cells[n]
    d = grid.domain.dim
    children = tuple(
        Cell(
            parent.depth + 1,
            tuple(2 * parent.index[a] + ((c >> a) & 1) for a in range(d)),
        )
        for c in range(2**d)
    )
    cells = grid.cells[:n] + children + grid.cells[n + 1 :]
    return Grid(grid.domain, cells, generation=grid.generation + 1)


def cell_volume(domain: Domain, cell: Cell) -> Fraction:
    return domain.volume / 2 ** (domain.dim * cell.depth)


def cell_box(domain: Domain, cell: Cell) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Exact corner coordinates (lo, hi) of a cell."""
    scale = 2**cell.depth
    lo = tuple(
        domain.origin[a] + Fraction(cell.index[a], scale) * domain.lengths[a]
        for a in range(domain.dim)
    )
    hi = tuple(
        domain.origin[a] + Fraction(cell.index[a] + 1, scale) * domain.lengths[a]
        for a in range(domain.dim)
    )
    return lo, hi


def scaled_box(cell: Cell, depth: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Integer corner coordinates on the uniform lattice at `depth`."""
    if depth < cell.depth:
        raise ValueError("scale depth must be at least the cell depth")
    shift = depth - cell.depth
    lo = tuple(i << shift for i in cell.index)
    hi = tuple((i + 1) << shift for i in cell.index)
    return lo, hi


@dataclass(frozen=True)
class Adjacency:
    """Facet contacts (i, j, interface) with i < j.

    The interface value is the (dim-1)-measure of the shared facet; in
    one dimension it is the counting measure, so 1 per contact.
    """

    pairs: tuple[tuple[int, int, Fraction], ...]

    def neighbors(self, count: int) -> list[list[tuple[int, Fraction]]]:
        """Per-cell neighbor lists [(other, interface), ...]."""
        out: list[list[tuple[int, Fraction]]] = [[] for _ in range(count)]
        for i, j, w in self.pairs:
            out[i].append((j, w))
            out[j].append((i, w))
        return out


def _interface(
    box_i, box_j, lengths: Sequence[Fraction], scale_depth: int
) -> Fraction | None:
    """Facet measure of two scaled boxes, or None if they do not share one."""
    lo_i, hi_i = box_i
    lo_j, hi_j = box_j
    d = len(lo_i)
    axis = None
    for a in range(d):
        if hi_i[a] == lo_j[a] or hi_j[a] == lo_i[a]:
            if axis is None:
                axis = a
            # a second touching axis means corner contact; the overlap
            # test below rejects it, so no special case is needed
    if axis is None:
        return None
    measure = Fraction(1)
    for b in range(d):
        if b == axis:
            continue
        overlap = min(hi_i[b], hi_j[b]) - max(lo_i[b], lo_j[b])
        if overlap <= 0:
            return None
        measure *= Fraction(overlap) * lengths[b] / 2**scale_depth
    return measure


def adjacency(grid: Grid) -> Adjacency:
    """All facet contacts of a grid, sorted by (i, j)."""
    cells = grid.cells
    d = grid.domain.dim
    depth = grid.depth_max()
    boxes = [scaled_box(c, depth) for c in cells]
    pairs: list[tuple[int, int, Fraction]] = []
    for a in range(d):
        by_lo: dict[int, list[int]] = {}
        for j, (lo, _hi) in enumerate(boxes):
            by_lo.setdefault(lo[a], []).append(j)
        for i, (_lo, hi) in enumerate(boxes):
            for j in by_lo.get(hi[a], ()):
                w = _interface(boxes[i], boxes[j], grid.domain.lengths, depth)
                if w is not None:
                    pairs.append((min(i, j), max(i, j), w))
    pairs.sort(key=lambda p: (p[0], p[1]))
    return Adjacency(tuple(pairs))


def split_adjacency(grid: Grid, adj: Adjacency, n: int) -> Adjacency:
    """Adjacency of split_cell(grid, n), maintained incrementally.

    Pairs not involving cell n survive with shifted indices; contacts
    of the 2**dim children among themselves and with the former
    neighbors of n are recomputed locally.
    """
    d = grid.domain.dim
    fan = 2**d
    after = split_cell(grid, n)
    depth = after.depth_max()

    def shift(i: int) -> int:
        return i if i < n else i + fan - 1

    pairs: list[tuple[int, int, Fraction]] = []
    former: list[int] = []
    for i, j, w in adj.pairs:
        if i == n or j == n:
            former.append(shift(j) if i == n else shift(i))
        else:
            a, b = shift(i), shift(j)
            pairs.append((min(a, b), max(a, b), w))

    children = list(range(n, n + fan))
    boxes = {c: scaled_box(after.cells[c], depth) for c in children + former}
    for pos, i in enumerate(children):
        for j in children[pos + 1 :] + former:
            w = _interface(boxes[i], boxes[j], grid.domain.lengths, depth)
            if w is not None:
                pairs.append((min(i, j), max(i, j), w))
    pairs.sort(key=lambda p: (p[0], p[1]))
    return Adjacency(tuple(pairs))


def verify_admissible(grid: Grid) -> Fraction:
    """Check that every cell volume is an integer multiple of the
    smallest one and return that smallest volume.

    Dyadic construction guarantees this (volumes are the root volume
    over powers of 2**dim); the check exists to certify grids that
    arrive from files.
    """
    vol_min = grid.domain.volume / 2 ** (grid.domain.dim * grid.depth_max())
    for pos, cell in enumerate(grid.cells):
        ratio = cell_volume(grid.domain, cell) / vol_min
        if ratio.denominator != 1:
            raise ValueError(f"cell {pos} volume is not a multiple of the minimum")
    return vol_min


def validate_grid(grid: Grid) -> None:
    """Check that the cells tile the domain in Z-curve order.

    Each cell at depth j owns a contiguous block of Morton keys at the
    maximal depth; the blocks must be consecutive and cover the whole
    key range exactly once.
    """
    d = grid.domain.dim
    depth = grid.depth_max()
    cursor = 0
    for pos, cell in enumerate(grid.cells):
        width = 2 ** (d * (depth - cell.depth))
        start = morton_key(cell.index, cell.depth) * width
        if start != cursor:
            raise ValueError(f"cell {pos} breaks the Z-curve tiling at key {cursor}")
        cursor = start + width
    if cursor != 2 ** (d * depth):
        raise ValueError("cells do not cover the domain")


def regularity_constant(domain: Domain) -> float:
    """Lower bound on cell volume over circumscribed-ball volume.

    Every dyadic cell is a scaled copy of the root box, so the ratio is
    the same at every depth and depends only on the dimension and the
    aspect ratio of the domain.
    """
    d = domain.dim
    sides = [float(s) for s in domain.lengths]
    radius = math.sqrt(sum(s * s for s in sides)) / 2.0
    ball = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * radius**d
    return math.prod(sides) / ball


def grid_to_json(grid: Grid) -> str:
    """Serialize bit-exactly; coordinates are rational strings."""
    doc = {
        "dim": grid.domain.dim,
        "origin": [str(x) for x in grid.domain.origin],
        "lengths": [str(x) for x in grid.domain.lengths],
        "generation": grid.generation,
        "cells": [{"depth": c.depth, "index": list(c.index)} for c in grid.cells],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def grid_from_json(text: str) -> Grid:
    doc = json.loads(text)
    origin = tuple(Fraction(x) for x in doc["origin"])
    lengths = tuple(Fraction(x) for x in doc["lengths"])
    domain = Domain(origin, lengths)
    if doc["dim"] != domain.dim:
        raise ValueError("dim field disagrees with coordinate arrays")
    cells = tuple(Cell(c["depth"], tuple(c["index"])) for c in doc["cells"])
    grid = Grid(domain, cells, generation=int(doc.get("generation", 0)))
    validate_grid(grid)
    return grid


def save_grid(grid: Grid, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(grid_to_json(grid))
        handle.write("\n")


def load_grid(path) -> Grid:
    with open(path, "r", encoding="utf-8") as handle:
        return grid_from_json(handle.read())
