"""Adaptive rounding-grid refinement.

Alternates a cheap rounding call with a split of the cell scoring the
largest non-binariness until the control distance of the rounded
certificate drops to the target. The split score of untouched cells
never changes and children never score above their parent, so the
recorded score history is non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .controls import BinaryControl, ControlField, nonbinariness, pseudometric
from .errors import DepthExhausted, StalledRefinement
from .grid import Grid, as_fraction, initial_grid, split_cell
from .rounding import sur_variant

__all__ = ["RefinementStep", "RefinementResult", "refine_until"]

RoundingAlgorithm = Callable[[ControlField, Grid], BinaryControl]


@dataclass(frozen=True)
class RefinementStep:
    """One executed split.

    distance is the certificate distance that triggered the split;
    cells is the grid size after the split.
    """

    iteration: int
    split_index: int
    score: Fraction
    distance: Fraction
    cells: int


@dataclass(frozen=True)
class RefinementResult:
    grid: Grid
    omega: BinaryControl
    iterations: int
    history: tuple[RefinementStep, ...]
    distance: Fraction


def refine_until(
    alpha: ControlField,
    delta,
    grid0: Grid | None = None,
    ra: RoundingAlgorithm = sur_variant,
) -> RefinementResult:
    """Refine until the rounded certificate satisfies distance <= delta.

    The depth cap is the reference depth of alpha: a cell at that depth
    cannot be split further, and selecting one for splitting raises
    DepthExhausted. A rounding callback that leaves distance above
    delta while every cell scores zero raises StalledRefinement; the
    built-in rounding cannot reach that state because it reproduces a
    binary field exactly.
    """
    delta = as_fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    grid = grid0 if grid0 is not None else initial_grid(alpha.domain)
    if grid.domain != alpha.domain:
        raise ValueError("grid and control field live on different domains")
    if grid.depth_max() > alpha.depth:
        raise ValueError("initial grid is finer than the reference depth")

    history: list[RefinementStep] = []
    while True:
        omega = ra(alpha, grid)
        distance = pseudometric(alpha, omega, grid)
        if distance <= delta:
            return RefinementResult(
                grid, omega, len(history), tuple(history), distance
            )
        scores = [nonbinariness(alpha, cell) for cell in grid.cells]
        best = max(scores)
        if best == 0:
            raise StalledRefinement(
                f"distance {distance} above target {delta} with all scores zero"
            )
        target = scores.index(best)
        if grid.cells[target].depth >= alpha.depth:
            raise DepthExhausted(target, alpha.depth, distance)
        grid = split_cell(grid, target)
        history.append(
            RefinementStep(len(history) + 1, target, best, distance, len(grid))
        )
