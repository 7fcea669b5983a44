"""Exception types shared across the package."""

from __future__ import annotations


class CiagridError(Exception):
    """Base class for all package-specific errors."""


class DepthExhausted(CiagridError):
    """Refinement selected a cell that is already at the depth cap.

    Carries the offending cell index and the cap so callers can report
    which part of the domain could not be resolved.
    """

    def __init__(self, cell_index: int, depth_cap: int, distance=None):
        self.cell_index = cell_index
        self.depth_cap = depth_cap
        self.distance = distance
        msg = f"cell {cell_index} is already at depth cap {depth_cap}"
        if distance is not None:
            msg += f" (control distance still {distance})"
        super().__init__(msg)


class StalledRefinement(CiagridError):
    """Every cell scored zero non-binariness but the target is not met.

    Cannot happen with the built-in rounding algorithm (a binary field
    is reproduced exactly, giving distance zero); custom rounding
    callbacks can trigger it.
    """


class Infeasible(CiagridError):
    """No binary assignment satisfies the prefix windows."""


class InfeasibleBounds(Infeasible):
    """A scaled prefix window is empty (lower bound above upper bound)."""

    def __init__(self, mode: int, cell: int, lower: int, upper: int):
        self.mode = mode
        self.cell = cell
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"window for mode {mode} at cell {cell} is empty: "
            f"[{lower}, {upper}]"
        )


class SizeLimit(CiagridError):
    """An exhaustive operation was asked to run beyond its size cap."""
