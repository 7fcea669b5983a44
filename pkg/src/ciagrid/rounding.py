"""Sum-up rounding over a rounding grid, with a copy rule.

Cells are visited in grid order. The running deficit phi accumulates
the integral of the relaxed control minus the volume committed to the
chosen modes; each cell picks the mode with the largest accumulated
claim gamma. Cells on which the relaxed control is already a single
unit vector copy that mode, which leaves phi untouched and makes the
rounding exact on binary inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .controls import BinaryControl, ControlField, binary_cell_mode, cell_integral
from .grid import Grid, cell_volume

__all__ = ["SurState", "sur_steps", "sur_variant"]


@dataclass(frozen=True)
class SurState:
    """Per-cell trace record: claims, chosen mode, deficit after."""

    cell: int
    gamma: tuple[Fraction, ...]
    mode: int
    phi: tuple[Fraction, ...]
    copied: bool


def sur_steps(alpha: ControlField, grid: Grid) -> Iterator[SurState]:
    """Yield one SurState per cell in grid order."""
    phi = [Fraction(0)] * alpha.num_modes
    for n, cell in enumerate(grid.cells):
        ints = cell_integral(alpha, cell)
        gamma = [p + v for p, v in zip(phi, ints)]
        copied_mode = binary_cell_mode(alpha, cell)
        if copied_mode is not None:
            mode = copied_mode
        else:
            mode = gamma.index(max(gamma))
        phi = list(gamma)
        phi[mode] -= cell_volume(alpha.domain, cell)
        yield SurState(n, tuple(gamma), mode, tuple(phi), copied_mode is not None)


def sur_variant(alpha: ControlField, grid: Grid) -> BinaryControl:
    """One-hot assignment produced by the copy-rule sum-up rounding."""
    return BinaryControl(
        alpha.num_modes, tuple(step.mode for step in sur_steps(alpha, grid))
    )
