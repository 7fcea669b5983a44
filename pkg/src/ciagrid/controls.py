"""Relaxed and binary controls over a dyadic reference grid.

A relaxed control assigns to every cell of the uniform depth-L
reference grid a convex-coefficient vector over M modes. Values live
on the Morton-ordered reference cells, so any dyadic cell of depth at
most L covers a contiguous block of them; cell integrals are prefix-sum
differences and therefore exact rationals.

A binary control assigns one mode per cell of a rounding grid. The
control distance between the two is the maximum over cell prefixes of
the max-norm of the accumulated integral mismatch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .grid import Cell, Domain, Grid, as_fraction, cell_volume, morton_index, morton_key

__all__ = [
    "ControlField",
    "BinaryControl",
    "cell_integral",
    "cell_average",
    "nonbinariness",
    "binary_cell_mode",
    "pseudometric",
    "field_distance",
    "binary_to_field",
    "control_to_json",
    "control_from_json",
    "save_control",
    "load_control",
]


@dataclass(frozen=True)
class ControlField:
    """Cellwise convex coefficients on the depth-`depth` reference grid.

    values[k] is the M-vector on the reference cell with Morton key k.
    Every vector must lie in the unit simplex exactly; validation is
    strict because downstream floor/ceil constructions have no rounding
    slack to absorb drift.
    """

    domain: Domain
    num_modes: int
    depth: int
    values: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if self.num_modes < 1:
            raise ValueError("need at least one mode")
        if self.depth < 0:
            raise ValueError("reference depth must be non-negative")
        count = 2 ** (self.domain.dim * self.depth)
        rows = tuple(
            tuple(as_fraction(v) for v in row) for row in self.values
        )
        if len(rows) != count:
            raise ValueError(f"expected {count} reference rows, got {len(rows)}")
        for k, row in enumerate(rows):
            if len(row) != self.num_modes:
                raise ValueError(f"row {k} has {len(row)} entries, expected {self.num_modes}")
            if any(v < 0 or v > 1 for v in row):
                raise ValueError(f"row {k} leaves [0,1]")
            if sum(row) != 1:
                raise ValueError(f"row {k} does not sum to 1 exactly")
        object.__setattr__(self, "values", rows)

    @cached_property
    def _prefix(self) -> tuple[tuple[Fraction, ...], ...]:
        acc = [Fraction(0)] * self.num_modes
        out = [tuple(acc)]
        for row in self.values:
            acc = [a + v for a, v in zip(acc, row)]
            out.append(tuple(acc))
        return tuple(out)

    @property
    def reference_volume(self) -> Fraction:
        return self.domain.volume / 2 ** (self.domain.dim * self.depth)

    def block(self, cell: Cell) -> tuple[int, int]:
        """Half-open range of reference rows covered by a dyadic cell."""
        if cell.depth > self.depth:
            raise ValueError(
                f"cell depth {cell.depth} exceeds reference depth {self.depth}"
            )
        width = 2 ** (self.domain.dim * (self.depth - cell.depth))
        start = morton_key(cell.index, cell.depth) * width
        return start, start + width


@dataclass(frozen=True)
class BinaryControl:
    """One mode per rounding-grid cell, aligned with grid order."""

    num_modes: int
    modes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        if any(not 0 <= m < self.num_modes for m in self.modes):
            raise ValueError("mode index out of range")

    def __len__(self) -> int:
        return len(self.modes)


def cell_integral(alpha: ControlField, cell: Cell) -> tuple[Fraction, ...]:
    """Exact integral of alpha over the cell, one value per mode."""
    start, end = alpha.block(cell)
    pre = alpha._prefix
    vol = alpha.reference_volume
    return tuple((pre[end][m] - pre[start][m]) * vol for m in range(alpha.num_modes))


def cell_average(alpha: ControlField, cell: Cell) -> tuple[Fraction, ...]:
    """Cell integral divided by cell volume; a point in the simplex."""
    start, end = alpha.block(cell)
    pre = alpha._prefix
    width = end - start
    return tuple(
        (pre[end][m] - pre[start][m]) / width for m in range(alpha.num_modes)
    )


def nonbinariness(alpha: ControlField, cell: Cell) -> Fraction:
    """Max over modes of min(integral, volume - integral) on the cell.

    Zero exactly when alpha is a single unit vector across the cell;
    bounded above by the cell volume.
    """
    vol = cell_volume(alpha.domain, cell)
    ints = cell_integral(alpha, cell)
    return max(min(v, vol - v) for v in ints)


def binary_cell_mode(alpha: ControlField, cell: Cell) -> int | None:
    """The single mode alpha takes on the whole cell, or None.

    Exact test: the integral of one mode equals the cell volume, which
    with simplex rows happens iff every reference row is that unit
    vector.
    """
    vol = cell_volume(alpha.domain, cell)
    for m, v in enumerate(cell_integral(alpha, cell)):
        if v == vol:
            return m
    return None


def pseudometric(alpha: ControlField, omega: BinaryControl, grid: Grid) -> Fraction:
    """Control distance: max over prefixes of the sup-norm deficit."""
    if len(omega.modes) != len(grid.cells):
        raise ValueError("binary control does not match grid size")
    phi = [Fraction(0)] * alpha.num_modes
    worst = Fraction(0)
    for cell, mode in zip(grid.cells, omega.modes):
        ints = cell_integral(alpha, cell)
        vol = cell_volume(alpha.domain, cell)
        for m in range(alpha.num_modes):
            phi[m] += ints[m]
        phi[mode] -= vol
        worst = max(worst, max(abs(p) for p in phi))
    return worst


def field_distance(alpha: ControlField, beta: ControlField, grid: Grid) -> Fraction:
    """Same prefix distance between two relaxed controls on one grid."""
    if alpha.num_modes != beta.num_modes:
        raise ValueError("mode counts differ")
    phi = [Fraction(0)] * alpha.num_modes
    worst = Fraction(0)
    for cell in grid.cells:
        ia = cell_integral(alpha, cell)
        ib = cell_integral(beta, cell)
        for m in range(alpha.num_modes):
            phi[m] += ia[m] - ib[m]
        worst = max(worst, max(abs(p) for p in phi))
    return worst


def binary_to_field(
    omega: BinaryControl, grid: Grid, depth: int | None = None
) -> ControlField:
    """Expand a binary control to a reference-grid field of unit rows."""
    if depth is None:
        depth = grid.depth_max()
    if depth < grid.depth_max():
        raise ValueError("expansion depth below the deepest grid cell")
    d = grid.domain.dim
    count = 2 ** (d * depth)
    rows: list[tuple[Fraction, ...] | None] = [None] * count
    zero = Fraction(0)
    one = Fraction(1)
    for cell, mode in zip(grid.cells, omega.modes):
        width = 2 ** (d * (depth - cell.depth))
        start = morton_key(cell.index, cell.depth) * width
        row = tuple(one if m == mode else zero for m in range(omega.num_modes))
        for k in range(start, start + width):
            rows[k] = row
    return ControlField(grid.domain, omega.num_modes, depth, tuple(rows))


def _row_major_position(index: tuple[int, ...], depth: int) -> int:
    pos = 0
    for i in index:
        pos = (pos << depth) | i
    return pos


def control_to_json(alpha: ControlField) -> str:
    """Serialize bit-exactly, values as rational strings, Morton order."""
    doc = {
        "domain": {
            "dim": alpha.domain.dim,
            "origin": [str(x) for x in alpha.domain.origin],
            "lengths": [str(x) for x in alpha.domain.lengths],
        },
        "M": alpha.num_modes,
        "L": alpha.depth,
        "order": "morton",
        "alpha": [[str(v) for v in row] for row in alpha.values],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def control_from_json(text: str) -> ControlField:
    """Parse an instance file.

    Accepts rational strings ("3/5") and decimal numbers; decimals are
    parsed as exact decimal fractions, never as binary doubles. Value
    order is Morton by default; "order": "row-major" declares C order
    over the index tuple with the last axis fastest. An optional "mask"
    of 0/1 flags (same order) marks active cells; inactive cells are
    coerced to the first mode, which makes them exactly binary there.
    """
    doc = json.loads(text, parse_float=Fraction)
    dom = doc["domain"]
    domain = Domain(
        tuple(as_fraction(x) for x in dom["origin"]),
        tuple(as_fraction(x) for x in dom["lengths"]),
    )
    if "dim" in dom and dom["dim"] != domain.dim:
        raise ValueError("dim field disagrees with coordinate arrays")
    num_modes = int(doc["M"])
    depth = int(doc["L"])
    raw = [tuple(as_fraction(v) for v in row) for row in doc["alpha"]]
    count = 2 ** (domain.dim * depth)
    if len(raw) != count:
        raise ValueError(f"expected {count} alpha rows, got {len(raw)}")

    order = doc.get("order", "morton")
    if order == "morton":
        rows = raw
        mask = doc.get("mask")
    elif order == "row-major":
        rows = [None] * count
        mask_raw = doc.get("mask")
        mask = [1] * count if mask_raw is not None else None
        for key in range(count):
            index = morton_index(key, depth, domain.dim)
            src = _row_major_position(index, depth)
            rows[key] = raw[src]
            if mask_raw is not None:
                mask[key] = mask_raw[src]
    else:
        raise ValueError(f"unknown value order {order!r}")

    if mask is not None:
        if len(mask) != count:
            raise ValueError("mask length does not match alpha")
        unit = (Fraction(1),) + (Fraction(0),) * (num_modes - 1)
        rows = [row if flag else unit for row, flag in zip(rows, mask)]
    return ControlField(domain, num_modes, depth, tuple(rows))


def binary_to_json(omega: BinaryControl) -> str:
    """Serialize a mode assignment; modes follow the grid cell order."""
    doc = {"M": omega.num_modes, "modes": list(omega.modes)}
    return json.dumps(doc, indent=2, sort_keys=True)


def binary_from_json(text: str) -> BinaryControl:
    doc = json.loads(text)
    return BinaryControl(int(doc["M"]), tuple(int(m) for m in doc["modes"]))


def save_control(alpha: ControlField, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(control_to_json(alpha))
        handle.write("\n")


def load_control(path) -> ControlField:
    with open(path, "r", encoding="utf-8") as handle:
        return control_from_json(handle.read())
