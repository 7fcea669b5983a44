"""Seeded synthetic control fields and the bundled experiment suite.

All generators produce exact rational fields: values are snapped to a
small denominator, and geometric profiles are evaluated at rational
cell centers. Randomness comes from a caller-supplied random.Random,
so every suite is reproducible from a seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .controls import ControlField
from .grid import Domain, Grid, as_fraction, initial_grid, morton_index, split_cell

__all__ = [
    "constant_blend",
    "linear_front",
    "radial_bump",
    "checkerboard",
    "helmholtz_slice",
    "random_field",
    "random_grid",
    "SuiteEntry",
    "smooth_suite",
    "bundled_suite",
]


def unit_domain(dim: int) -> Domain:
    return Domain((Fraction(0),) * dim, (Fraction(1),) * dim)


def constant_blend(domain: Domain, depth: int, weights) -> ControlField:
    """The same simplex vector on every reference cell."""
    row = tuple(as_fraction(w) for w in weights)
    count = 2 ** (domain.dim * depth)
    return ControlField(domain, len(row), depth, (row,) * count)


def _centers(domain: Domain, depth: int):
    """Rational reference-cell centers in Morton order."""
    side = 2**depth
    count = side**domain.dim
    for key in range(count):
        index = morton_index(key, depth, domain.dim)
        yield tuple(
            domain.origin[a] + Fraction(2 * index[a] + 1, 2 * side) * domain.lengths[a]
            for a in range(domain.dim)
        )


def _clip01(v: Fraction) -> Fraction:
    return Fraction(0) if v < 0 else Fraction(1) if v > 1 else v


def linear_front(
    depth: int,
    slope=Fraction(0),
    offset=Fraction(1, 2),
    width=Fraction(1, 4),
    domain: Domain | None = None,
) -> ControlField:
    """Two-mode field: a one-hot half-plane with a linear blend band.

    The first mode is fully active where x + slope * y is below the
    offset, fades linearly across the band of the given width, and is
    inactive beyond it. Works in any dimension; axes beyond the second
    are ignored.
    """
    domain = domain or unit_domain(2)
    slope = as_fraction(slope)
    offset = as_fraction(offset)
    width = as_fraction(width)
    rows = []
    for center in _centers(domain, depth):
        coord = center[0] + (slope * center[1] if len(center) > 1 else 0)
        v = _clip01((offset + width / 2 - coord) / width)
        rows.append((v, 1 - v))
    return ControlField(domain, 2, depth, tuple(rows))


def radial_bump(
    depth: int,
    center=(Fraction(1, 2), Fraction(1, 2)),
    inner=Fraction(1, 4),
    outer=Fraction(1, 2),
    domain: Domain | None = None,
) -> ControlField:
    """Two-mode field: one-hot disc, taper in r^2 to the second mode."""
    domain = domain or unit_domain(2)
    center = tuple(as_fraction(c) for c in center)
    inner2 = as_fraction(inner) ** 2
    outer2 = as_fraction(outer) ** 2
    rows = []
    for point in _centers(domain, depth):
        r2 = sum((p - c) ** 2 for p, c in zip(point, center))
        v = _clip01((outer2 - r2) / (outer2 - inner2))
        rows.append((v, 1 - v))
    return ControlField(domain, 2, depth, tuple(rows))


def checkerboard(
    depth: int,
    period: int = 4,
    high=(Fraction(7, 10), Fraction(3, 10)),
    low=(Fraction(3, 10), Fraction(7, 10)),
    domain: Domain | None = None,
) -> ControlField:
    """Alternating blend tiles; deliberately non-smooth."""
    domain = domain or unit_domain(2)
    high = tuple(as_fraction(v) for v in high)
    low = tuple(as_fraction(v) for v in low)
    side = 2**depth
    rows = []
    for key in range(side**domain.dim):
        index = morton_index(key, depth, domain.dim)
        parity = sum(i * period // side for i in index) % 2
        rows.append(high if parity == 0 else low)
    return ControlField(domain, len(high), depth, tuple(rows))


# Frozen 16x16 interference-pattern slice: a barycentric coordinate in
# [0, 2] stored as 64ths, Morton order. Mode vectors interpolate
# between modes floor(v) and floor(v)+1 of a 3-mode field.
_SLICE_V64 = (
    95, 77, 92, 86, 63, 49, 78, 63, 78, 80, 58, 58, 75, 66, 55, 60,
    34, 29, 50, 53, 43, 65, 70, 79, 69, 86, 83, 112, 103, 95, 124, 102,
    40, 31, 29, 12, 29, 49, 15, 45, 30, 13, 40, 34, 23, 54, 53, 75,
    87, 119, 85, 105, 121, 93, 94, 69, 79, 77, 76, 51, 55, 40, 24, 19,
    75, 61, 65, 32, 36, 29, 8, 15, 60, 20, 60, 27, 3, 19, 23, 40,
    52, 89, 49, 85, 114, 113, 101, 99, 49, 70, 55, 58, 76, 75, 54, 54,
    60, 47, 56, 66, 56, 69, 85, 93, 48, 73, 38, 65, 95, 102, 85, 95,
    69, 59, 86, 74, 50, 45, 63, 49, 99, 93, 103, 105, 83, 60, 94, 66,
    53, 67, 63, 96, 92, 99, 120, 113, 68, 108, 68, 101, 125, 109, 105, 88,
    76, 39, 79, 43, 14, 15, 27, 29, 79, 58, 73, 70, 52, 53, 74, 74,
    68, 81, 72, 62, 72, 59, 43, 35, 80, 55, 90, 63, 33, 26, 43, 33,
    59, 69, 42, 54, 78, 83, 65, 79, 29, 35, 25, 23, 45, 68, 34, 62,
    33, 51, 36, 42, 65, 79, 50, 65, 50, 48, 70, 70, 53, 62, 73, 68,
    94, 99, 78, 75, 85, 63, 58, 49, 59, 42, 45, 16, 25, 33, 4, 26,
    88, 97, 99, 116, 99, 79, 113, 83, 98, 115, 88, 94, 105, 74, 75, 53,
    41, 9, 43, 23, 7, 35, 34, 59, 49, 51, 52, 77, 73, 88, 104, 109,
)


def helmholtz_slice() -> ControlField:
    """Frozen 16x16 three-mode slice of a wave interference pattern."""
    rows = []
    for v64 in _SLICE_V64:
        v = Fraction(v64, 64)
        base = min(int(v), 1)
        t = v - base
        row = [Fraction(0)] * 3
        row[base] = 1 - t
        row[base + 1] = t
        rows.append(tuple(row))
    return ControlField(unit_domain(2), 3, 4, tuple(rows))


def random_field(
    rng: random.Random,
    domain: Domain,
    num_modes: int,
    depth: int,
    denominator: int = 32,
    binary_share: float = 0.5,
) -> ControlField:
    """Random field mixing one-hot cells with random simplex blends."""
    count = 2 ** (domain.dim * depth)
    rows = []
    for _ in range(count):
        if rng.random() < binary_share:
            mode = rng.randrange(num_modes)
            rows.append(
                tuple(
                    Fraction(1) if m == mode else Fraction(0)
                    for m in range(num_modes)
                )
            )
        else:
            counts = [0] * num_modes
            for _ in range(denominator):
                counts[rng.randrange(num_modes)] += 1
            rows.append(tuple(Fraction(c, denominator) for c in counts))
    return ControlField(domain, num_modes, depth, tuple(rows))


def random_grid(
    rng: random.Random, domain: Domain, depth_cap: int, splits: int, depth0: int = 0
) -> Grid:
    """Random non-uniform grid: repeatedly split a random splittable cell."""
    grid = initial_grid(domain, depth0)
    for _ in range(splits):
        candidates = [
            n for n, c in enumerate(grid.cells) if c.depth < depth_cap
        ]
        if not candidates:
            break
        grid = split_cell(grid, rng.choice(candidates))
    return grid


@dataclass(frozen=True)
class SuiteEntry:
    """One bundled experiment instance with its tolerance."""

    name: str
    alpha: ControlField
    delta: Fraction
    smooth: bool


def smooth_suite(depth: int = 4) -> list[SuiteEntry]:
    """Deterministic smooth fields: fronts and bumps over [0,1]^2.

    Offsets avoid coarse dyadic boundaries and slope-zero fronts are
    left out: both make depth-1 columns nearly binary, so the coarsest
    admissible uniform grid degenerates and adaptive refinement has
    nothing to save. Entries marked fine carry a tighter tolerance.
    """
    sixteenth = Fraction(1, 16)
    fine = Fraction(1, 64)
    entries = []
    fronts = [
        (Fraction(1, 4), Fraction(9, 16), sixteenth),
        (Fraction(1, 2), Fraction(9, 16), sixteenth),
        (Fraction(1, 2), Fraction(5, 8), sixteenth),
        (Fraction(1), Fraction(9, 16), sixteenth),
        (Fraction(1), Fraction(5, 8), sixteenth),
        (Fraction(2), Fraction(9, 16), sixteenth),
        (Fraction(2), Fraction(5, 8), sixteenth),
        (Fraction(1, 4), Fraction(5, 8), fine),
        (Fraction(1), Fraction(9, 16), fine),
    ]
    for slope, offset, delta in fronts:
        suffix = "-fine" if delta == fine else ""
        entries.append(
            SuiteEntry(
                f"front-s{slope}-o{offset}{suffix}",
                linear_front(depth, slope, offset),
                delta,
                True,
            )
        )
    bumps = [
        (Fraction(1, 4), Fraction(1, 2), fine),
        (Fraction(1, 8), Fraction(3, 8), sixteenth),
        (Fraction(1, 8), Fraction(3, 8), fine),
    ]
    for inner, outer, delta in bumps:
        suffix = "-fine" if delta == fine else ""
        entries.append(
            SuiteEntry(
                f"bump-{inner}-{outer}{suffix}",
                radial_bump(depth, inner=inner, outer=outer),
                delta,
                True,
            )
        )
    return entries


def bundled_suite() -> list[SuiteEntry]:
    """The instances cmd_experiment runs by default."""
    entries = [
        SuiteEntry(
            "front-gentle",
            linear_front(4, Fraction(1, 4), Fraction(9, 16)),
            Fraction(1, 16),
            True,
        ),
        SuiteEntry(
            "front-tilted",
            linear_front(4, Fraction(1), Fraction(5, 8)),
            Fraction(1, 16),
            True,
        ),
        SuiteEntry(
            "bump",
            radial_bump(4, inner=Fraction(1, 8), outer=Fraction(3, 8)),
            Fraction(1, 16),
            True,
        ),
        SuiteEntry("checker", checkerboard(4), Fraction(1, 12), False),
        SuiteEntry("waves", helmholtz_slice(), Fraction(1, 8), False),
    ]
    return entries
