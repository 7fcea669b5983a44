"""Independent oracles used by the test suite.

Everything here recomputes results from first principles: geometry by
explicit box arithmetic, distances by direct summation over reference
cells, optima by exhaustive enumeration. None of it calls the prefix-sum,
Morton, or search machinery under test beyond plain data access.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from ciagrid.controls import BinaryControl, ControlField
from ciagrid.grid import Cell, Domain, Grid


def decode_axes(key: int, depth: int, dim: int) -> tuple[int, ...]:
    """De-interleave a Morton key bit by bit, axis 0 at the LSB."""
    coords = [0] * dim
    for bit in range(depth):
        for axis in range(dim):
            if key & (1 << (bit * dim + axis)):
                coords[axis] |= 1 << bit
    return tuple(coords)


def box_of(domain: Domain, cell: Cell):
    """Corner coordinates of a cell, from the raw index arithmetic."""
    lo = []
    hi = []
    for axis in range(domain.dim):
        step = Fraction(domain.lengths[axis], 2**cell.depth)
        lo.append(domain.origin[axis] + cell.index[axis] * step)
        hi.append(domain.origin[axis] + (cell.index[axis] + 1) * step)
    return tuple(lo), tuple(hi)


def box_volume(lo, hi) -> Fraction:
    vol = Fraction(1)
    for a, b in zip(lo, hi):
        vol *= b - a
    return vol


def box_contains(outer_lo, outer_hi, inner_lo, inner_hi) -> bool:
    return all(a <= c and d <= b for a, b, c, d in zip(outer_lo, outer_hi, inner_lo, inner_hi))


def reference_cells(alpha: ControlField):
    """All reference cells of a control field with their boxes, key order."""
    dim = alpha.domain.dim
    for key in range(2 ** (dim * alpha.depth)):
        cell = Cell(alpha.depth, decode_axes(key, alpha.depth, dim))
        lo, hi = box_of(alpha.domain, cell)
        yield key, lo, hi


def direct_cell_integral(alpha: ControlField, cell: Cell) -> tuple[Fraction, ...]:
    """Integral of alpha over one grid cell by summing reference cells."""
    lo, hi = box_of(alpha.domain, cell)
    vol = box_volume(
        (Fraction(0),) * alpha.domain.dim,
        tuple(Fraction(l, 2**alpha.depth) for l in alpha.domain.lengths),
    )
    total = [Fraction(0)] * alpha.num_modes
    for key, rlo, rhi in reference_cells(alpha):
        if box_contains(lo, hi, rlo, rhi):
            for m, v in enumerate(alpha.values[key]):
                total[m] += v * vol
    return tuple(total)


def direct_pseudometric(alpha: ControlField, omega: BinaryControl, grid: Grid) -> Fraction:
    """Control distance by direct prefix accumulation over grid cells."""
    acc = [Fraction(0)] * alpha.num_modes
    worst = Fraction(0)
    for n, cell in enumerate(grid.cells):
        integral = direct_cell_integral(alpha, cell)
        lo, hi = box_of(grid.domain, cell)
        vol = box_volume(lo, hi)
        for m in range(alpha.num_modes):
            acc[m] += integral[m]
            if omega.modes[n] == m:
                acc[m] -= vol
        worst = max(worst, max(abs(a) for a in acc))
    return worst


def facet_interface(domain: Domain, a: Cell, b: Cell) -> Fraction:
    """Shared-facet measure of two cells, zero if they do not touch.

    One axis must meet face to face while every other axis overlaps with
    positive extent; the interface is the product of those overlaps. In
    one dimension a shared endpoint counts as measure one.
    """
    alo, ahi = box_of(domain, a)
    blo, bhi = box_of(domain, b)
    touching = None
    overlaps = []
    for axis in range(domain.dim):
        if ahi[axis] == blo[axis] or bhi[axis] == alo[axis]:
            if touching is not None:
                return Fraction(0)
            touching = axis
            continue
        width = min(ahi[axis], bhi[axis]) - max(alo[axis], blo[axis])
        if width <= 0:
            return Fraction(0)
        overlaps.append(width)
    if touching is None:
        return Fraction(0)
    if domain.dim == 1:
        return Fraction(1)
    area = Fraction(1)
    for w in overlaps:
        area *= w
    return area


def assignments(instance):
    """Every mode tuple compatible with the instance fixings."""
    choices = [
        (forced,) if forced is not None else range(instance.num_modes)
        for forced in instance.fixed
    ]
    return itertools.product(*choices)


def window_ok(instance, modes) -> bool:
    """Direct check of all weighted prefix windows."""
    sums = [0] * instance.num_modes
    for n, mode in enumerate(modes):
        sums[mode] += instance.weights[n]
        for m in range(instance.num_modes):
            if not instance.lower[m][n] <= sums[m] <= instance.upper[m][n]:
                return False
    return True


def direct_objective(instance, modes, pair_costs=None) -> Fraction:
    """Switching cost summed pair by pair, default rule restated inline."""
    total = Fraction(0)
    for i, j, interface in instance.adjacency.pairs:
        a, b = modes[i], modes[j]
        if a == b:
            continue
        if pair_costs is None:
            total += interface * (instance.mode_weights[a] + instance.mode_weights[b])
        else:
            total += interface * Fraction(pair_costs[a][b])
    return total


def enumerate_optimum(instance, pair_costs=None):
    """Exhaustive optimum as (cost, modes), or None when infeasible."""
    best = None
    for modes in assignments(instance):
        if not window_ok(instance, modes):
            continue
        cost = direct_objective(instance, modes, pair_costs)
        if best is None or (cost, modes) < best:
            best = (cost, modes)
    return best


def feasible_set(instance):
    """All window-feasible assignments, in lexicographic order."""
    return [modes for modes in assignments(instance) if window_ok(instance, modes)]


class LpModel:
    """Bare-bones parse of the exported LP text, floats throughout."""

    def __init__(self, objective, constraints, binaries):
        self.objective = objective
        self.constraints = constraints
        self.binaries = binaries


def _parse_terms(tokens):
    terms: dict[str, float] = {}
    sign = 1.0
    coeff = None
    for tok in tokens:
        if tok == "+":
            sign, coeff = 1.0, None
        elif tok == "-":
            sign, coeff = -1.0, None
        else:
            try:
                value = float(tok)
            except ValueError:
                terms[tok] = terms.get(tok, 0.0) + sign * (1.0 if coeff is None else coeff)
                sign, coeff = 1.0, None
            else:
                coeff = value
    return terms


def parse_lp(text: str) -> LpModel:
    """Parse the subset of LP syntax that export_lp emits."""
    objective: dict[str, float] = {}
    constraints: dict[str, tuple[dict, str, float]] = {}
    binaries: set[str] = set()
    section = None
    obj_tokens: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        lowered = line.lower()
        if lowered in ("minimize", "subject to", "bounds", "binaries", "end"):
            section = lowered
            continue
        if section == "minimize":
            obj_tokens.extend(line.split())
        elif section == "subject to":
            name, rest = line.split(":", 1)
            for op in ("<=", ">=", "="):
                if op in rest:
                    expr, rhs = rest.rsplit(op, 1)
                    constraints[name.strip()] = (
                        _parse_terms(expr.split()),
                        op,
                        float(rhs),
                    )
                    break
            else:
                raise ValueError(f"constraint without comparator: {line}")
        elif section == "binaries":
            binaries.update(line.split())
    if obj_tokens and obj_tokens[0].endswith(":"):
        obj_tokens = obj_tokens[1:]
    objective = _parse_terms(obj_tokens)
    return LpModel(objective, constraints, binaries)


def lp_row_satisfied(terms, sense, rhs, values, tol=1e-9) -> bool:
    lhs = sum(coeff * values.get(var, 0.0) for var, coeff in terms.items())
    if sense == "<=":
        return lhs <= rhs + tol
    if sense == ">=":
        return lhs >= rhs - tol
    return abs(lhs - rhs) <= tol


def lp_point(instance, modes) -> dict[str, float]:
    """Variable values (1-based names) induced by a full assignment."""
    values: dict[str, float] = {}
    for n, mode in enumerate(modes):
        for m in range(instance.num_modes):
            values[f"w_{n + 1}_{m + 1}"] = 1.0 if mode == m else 0.0
    for i, j, _ in instance.adjacency.pairs:
        for m in range(instance.num_modes):
            gap = abs(values[f"w_{i + 1}_{m + 1}"] - values[f"w_{j + 1}_{m + 1}"])
            values[f"s_{i + 1}_{j + 1}_{m + 1}"] = gap
    return values
