"""Switching-cost rounding model on a dyadic grid.

Cell volumes on a dyadic grid are the root volume over powers of two,
so the prefix conditions behind the control distance scale to integer
windows: with per-cell weights 2^(k_i) the one-hot variables of mode m
must keep every weighted prefix sum inside [l_(m,n), u_(m,n)]. The
instance stores those integer bounds, the facet adjacency carrying the
switching costs, and any modes fixed by exactly binary cells.

Valid inequalities come in two families. Lattice cuts exclude fixings
of the non-maximal-weight variables that strand the residual window
strictly between two multiples of the largest weight. Parity cuts
difference two windows of the same mode, divide by a power of two and
round both sides.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .controls import (
    BinaryControl,
    ControlField,
    binary_cell_mode,
    cell_average,
    control_to_json,
)
from .errors import InfeasibleBounds, SizeLimit
from .grid import Adjacency, Grid, as_fraction, grid_to_json, verify_admissible
from .grid import adjacency as facet_adjacency

__all__ = [
    "ScarpInstance",
    "Cut",
    "build_instance",
    "pair_cost_table",
    "objective_value",
    "satisfies_windows",
    "export_lp",
    "separate_lattice",
    "separate_parity",
    "separate_all",
    "infeasibility_window",
    "instance_to_json",
    "instance_from_json",
]

SEPARATION_TOLERANCE = Fraction(1, 10**9)


@dataclass(frozen=True)
class ScarpInstance:
    """Integer data of the switching-cost rounding problem.

    weights[i] = 2^(k_i) with at least one k_i equal to zero; lower and
    upper are indexed [mode][cell]. Bounds are stored exactly as the
    floor/ceil formulas produce them, including infeasible pairs with
    lower > upper (brute_force reports those as Infeasible).
    """

    num_cells: int
    num_modes: int
    weights: tuple[int, ...]
    scale: int
    lower: tuple[tuple[int, ...], ...]
    upper: tuple[tuple[int, ...], ...]
    adjacency: Adjacency
    mode_weights: tuple[Fraction, ...]
    fixed: tuple[int | None, ...]
    delta: Fraction
    provenance: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if len(self.weights) != self.num_cells:
            raise ValueError("weights length does not match cell count")
        if min(self.weights, default=1) < 1 or min(self.weights, default=1) != 1:
            raise ValueError("weights must be positive with at least one equal to 1")
        ordered = sorted(self.weights)
        for small, large in zip(ordered, ordered[1:]):
            if large % small:
                raise ValueError("weights are not sequential (each must divide the larger)")
        for mat in (self.lower, self.upper):
            if len(mat) != self.num_modes or any(len(row) != self.num_cells for row in mat):
                raise ValueError("bound matrices must be [modes][cells]")
        if len(self.mode_weights) != self.num_modes:
            raise ValueError("mode_weights length does not match mode count")
        if any(w < 0 for w in self.mode_weights):
            raise ValueError("mode_weights must be nonnegative")
        if len(self.fixed) != self.num_cells:
            raise ValueError("fixed length does not match cell count")
        if any(f is not None and not 0 <= f < self.num_modes for f in self.fixed):
            raise ValueError("fixed mode out of range")


def build_instance(
    alpha: ControlField,
    grid: Grid,
    delta,
    mode_weights=None,
    fix_binary: bool = True,
) -> ScarpInstance:
    """Assemble the integer model for a control field on a grid.

    Raises InfeasibleBounds when some window is empty, which signals
    that delta is too small for this grid; refining further widens the
    windows.
    """
    verify_admissible(grid)
    delta = as_fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    d = grid.domain.dim
    depths = [cell.depth for cell in grid.cells]
    j_values = [d * depth for depth in depths]
    j_max = max(j_values)
    weights = tuple(2 ** (j_max - j) for j in j_values)
    scale = 2**j_max

    n_cells = len(grid.cells)
    m_modes = alpha.num_modes
    averages = [cell_average(alpha, cell) for cell in grid.cells]
    slack = delta / grid.domain.volume
    lower = []
    upper = []
    for m in range(m_modes):
        acc = Fraction(0)
        lo_row = []
        hi_row = []
        for n in range(n_cells):
            acc += averages[n][m] / 2 ** j_values[n]
            lo = math.ceil(scale * (acc - slack))
            hi = math.floor(scale * (acc + slack))
            if lo > hi:
                raise InfeasibleBounds(m, n, lo, hi)
            lo_row.append(lo)
            hi_row.append(hi)
        lower.append(tuple(lo_row))
        upper.append(tuple(hi_row))

    if mode_weights is None:
        mode_weights = (Fraction(1),) * m_modes
    else:
        mode_weights = tuple(as_fraction(w) for w in mode_weights)

    fixed: tuple[int | None, ...]
    if fix_binary:
        fixed = tuple(binary_cell_mode(alpha, cell) for cell in grid.cells)
    else:
        fixed = (None,) * n_cells

    provenance = (
        ("grid", hashlib.sha256(grid_to_json(grid).encode()).hexdigest()[:16]),
        ("alpha", hashlib.sha256(control_to_json(alpha).encode()).hexdigest()[:16]),
    )
    return ScarpInstance(
        num_cells=n_cells,
        num_modes=m_modes,
        weights=weights,
        scale=scale,
        lower=tuple(lower),
        upper=tuple(upper),
        adjacency=facet_adjacency(grid),
        mode_weights=mode_weights,
        fixed=fixed,
        delta=delta,
        provenance=provenance,
    )


def pair_cost_table(instance: ScarpInstance, pair_costs=None) -> list[list[Fraction]]:
    """Cost of a mode pair across a unit interface.

    Default is the per-mode decomposable model: a differing pair (a, b)
    costs mode_weights[a] + mode_weights[b], equal modes cost nothing.
    A full symmetric matrix replaces that when supplied; its diagonal
    is ignored because equal modes never switch.
    """
    m_modes = instance.num_modes
    zero = Fraction(0)
    table = [[zero] * m_modes for _ in range(m_modes)]
    if pair_costs is None:
        for a in range(m_modes):
            for b in range(m_modes):
                if a != b:
                    table[a][b] = instance.mode_weights[a] + instance.mode_weights[b]
        return table
    if len(pair_costs) != m_modes or any(len(row) != m_modes for row in pair_costs):
        raise ValueError("pair cost matrix must be modes x modes")
    for a in range(m_modes):
        for b in range(m_modes):
            if a == b:
                continue
            cost = as_fraction(pair_costs[a][b])
            if cost != as_fraction(pair_costs[b][a]):
                raise ValueError("pair cost matrix must be symmetric")
            if cost < 0:
                raise ValueError("pair costs must be nonnegative")
            table[a][b] = cost
    return table


def objective_value(instance: ScarpInstance, omega: BinaryControl, pair_costs=None) -> Fraction:
    """Total interface-weighted switching cost of a one-hot assignment."""
    if len(omega.modes) != instance.num_cells:
        raise ValueError("assignment length does not match instance")
    if omega.num_modes != instance.num_modes:
        raise ValueError("assignment mode count does not match instance")
    for n, forced in enumerate(instance.fixed):
        if forced is not None and omega.modes[n] != forced:
            raise ValueError(f"assignment breaks the fixing of cell {n}")
    table = pair_cost_table(instance, pair_costs)
    total = Fraction(0)
    for i, j, interface in instance.adjacency.pairs:
        total += interface * table[omega.modes[i]][omega.modes[j]]
    return total


def satisfies_windows(instance: ScarpInstance, omega) -> bool:
    """Direct check of every weighted prefix window for a full assignment."""
    modes = omega.modes if isinstance(omega, BinaryControl) else tuple(omega)
    if len(modes) != instance.num_cells:
        raise ValueError("assignment length does not match instance")
    sums = [0] * instance.num_modes
    for n, mode in enumerate(modes):
        sums[mode] += instance.weights[n]
        for m in range(instance.num_modes):
            if not instance.lower[m][n] <= sums[m] <= instance.upper[m][n]:
                return False
    return True


@dataclass(frozen=True)
class Cut:
    """Sparse valid inequality over the one-hot variables.

    coefficients maps (cell, mode) to an integer coefficient, stored
    sorted; origin records the data that generated the cut.
    """

    kind: str
    coefficients: tuple[tuple[tuple[int, int], int], ...]
    sense: str
    rhs: int
    origin: tuple

    def __post_init__(self):
        if self.sense not in (">=", "<="):
            raise ValueError("sense must be >= or <=")
        object.__setattr__(
            self, "coefficients", tuple(sorted(self.coefficients))
        )

    def evaluate(self, point) -> Fraction:
        total = Fraction(0)
        for (cell, mode), coef in self.coefficients:
            total += coef * as_fraction(point[cell][mode])
        return total

    def violation(self, point) -> Fraction:
        """Positive when the point breaks the cut."""
        value = self.evaluate(point)
        return self.rhs - value if self.sense == ">=" else value - self.rhs

    def satisfied_by_modes(self, modes) -> bool:
        total = 0
        for (cell, mode), coef in self.coefficients:
            if modes[cell] == mode:
                total += coef
        return total >= self.rhs if self.sense == ">=" else total <= self.rhs


def _lattice_gap_free(sigma: int, lower: int, upper: int, step: int) -> bool:
    """True when [lower - sigma, upper - sigma] contains no multiple of step.

    Equivalent to the existence of an integer y with
    upper - step + 1 <= sigma + step * y <= lower - 1: consecutive
    multiples straddle the residual window strictly. Empty windows
    (lower > upper) qualify trivially.
    """
    lo = upper - sigma - step + 1
    hi = lower - sigma - 1
    return hi // step >= -((-lo) // step)


def separate_lattice(
    instance: ScarpInstance, point, n: int, m: int, size_limit: int = 30
) -> list[Cut]:
    """No-good cut for prefix [0..n] and mode m, if one is violated.

    Splits the prefix into maximal-weight cells and the rest; searches
    the 0/1 fixings of the rest whose residual window is stranded
    between multiples of the maximal weight, minimizing the L1 distance
    to the fractional point by depth-first branch-and-bound. A fixing
    closer than 1 yields a violated no-good inequality.
    """
    weights = instance.weights[: n + 1]
    step = max(weights)
    members = [i for i in range(n + 1) if weights[i] < step]
    if not members:
        return []
    if len(members) > size_limit:
        raise SizeLimit(f"{len(members)} candidate cells exceed the cap {size_limit}")

    lower = instance.lower[m][n]
    upper = instance.upper[m][n]
    target = [as_fraction(point[i][m]) for i in members]
    # forced[i]: the only admissible value on a fixed cell
    forced: list[int | None] = []
    for i in members:
        f = instance.fixed[i]
        forced.append(None if f is None else int(f == m))

    count = len(members)
    suffix_min = [Fraction(0)] * (count + 1)
    for pos in range(count - 1, -1, -1):
        t = target[pos]
        here = min(t, 1 - t) if forced[pos] is None else abs(t - forced[pos])
        suffix_min[pos] = suffix_min[pos + 1] + here

    best_cost = Fraction(1)
    best_fix: tuple[int, ...] | None = None
    chosen = [0] * count

    def descend(pos: int, sigma: int, cost: Fraction) -> None:
        nonlocal best_cost, best_fix
        if cost + suffix_min[pos] >= best_cost:
            return
        if pos == count:
            if _lattice_gap_free(sigma, lower, upper, step):
                best_cost = cost
                best_fix = tuple(chosen)
            return
        t = target[pos]
        if forced[pos] is None:
            values = (1, 0) if t >= Fraction(1, 2) else (0, 1)
        else:
            values = (forced[pos],)
        for v in values:
            chosen[pos] = v
            descend(
                pos + 1,
                sigma + v * instance.weights[members[pos]],
                cost + abs(t - v),
            )

    descend(0, 0, Fraction(0))
    if best_fix is None or Fraction(1) - best_cost <= SEPARATION_TOLERANCE:
        return []
    coefficients = []
    rhs = 1
    for i, v in zip(members, best_fix):
        if v:
            coefficients.append(((i, m), -1))
            rhs -= 1
        else:
            coefficients.append(((i, m), 1))
    return [
        Cut(
            kind="lattice",
            coefficients=tuple(coefficients),
            sense=">=",
            rhs=rhs,
            origin=("lattice", n, m, tuple(members), best_fix),
        )
    ]


def separate_parity(instance: ScarpInstance, point, m: int) -> list[Cut]:
    """Violated rounded window differences for mode m.

    For every cell interval and every power 2^k between the interval's
    smallest and largest weight: divide the differenced windows by 2^k
    and round. The upper form keeps only cells with weight >= 2^k; the
    lower form keeps small-weight cells with coefficient 1. Intervals
    whose differenced window is already empty prove infeasibility and
    yield no cut (see infeasibility_window).
    """
    n_cells = instance.num_cells
    values = [as_fraction(point[i][m]) for i in range(n_cells)]
    kval = [w.bit_length() - 1 for w in instance.weights]
    cuts: list[Cut] = []
    seen: set[tuple] = set()
    for r in range(n_cells - 1):
        for s in range(r + 1, n_cells):
            lo_base = instance.lower[m][s] - instance.upper[m][r]
            hi_base = instance.upper[m][s] - instance.lower[m][r]
            if hi_base < 0:
                continue
            cells = range(r + 1, s + 1)
            ks = [kval[i] for i in cells]
            k_lo, k_hi = min(ks), max(ks)
            for k in range(k_lo, k_hi + 1):
                shift = 2**k
                hi_terms = tuple(
                    ((i, m), 2 ** (kval[i] - k)) for i in cells if kval[i] >= k
                )
                hi_rhs = hi_base // shift
                hi_lhs = sum(c * values[i] for (i, _), c in hi_terms)
                if hi_lhs - hi_rhs > SEPARATION_TOLERANCE:
                    key = ("<=", hi_terms, hi_rhs)
                    if key not in seen:
                        seen.add(key)
                        cuts.append(
                            Cut("parity", hi_terms, "<=", hi_rhs, ("parity", m, r, s, k, "hi"))
                        )
                lo_terms = tuple(
                    ((i, m), 1 if kval[i] < k else 2 ** (kval[i] - k)) for i in cells
                )
                lo_rhs = -((-lo_base) // shift)
                lo_lhs = sum(c * values[i] for (i, _), c in lo_terms)
                if lo_rhs - lo_lhs > SEPARATION_TOLERANCE:
                    key = (">=", lo_terms, lo_rhs)
                    if key not in seen:
                        seen.add(key)
                        cuts.append(
                            Cut("parity", lo_terms, ">=", lo_rhs, ("parity", m, r, s, k, "lo"))
                        )
    return cuts


def separate_all(
    instance: ScarpInstance, point, kinds=("lattice", "parity"), size_limit: int = 30
) -> list[Cut]:
    """All violated cuts of the requested kinds, merged deterministically.

    Lattice separation that exceeds its size cap is skipped, not an
    error, at this level.
    """
    cuts: list[Cut] = []
    if "lattice" in kinds:
        for m in range(instance.num_modes):
            for n in range(instance.num_cells):
                try:
                    cuts.extend(separate_lattice(instance, point, n, m, size_limit))
                except SizeLimit:
                    continue
    if "parity" in kinds:
        for m in range(instance.num_modes):
            cuts.extend(separate_parity(instance, point, m))
    unique: dict[tuple, Cut] = {}
    for cut in cuts:
        key = (cut.coefficients, cut.sense, cut.rhs)
        if key not in unique:
            unique[key] = cut
    return sorted(unique.values(), key=lambda c: c.origin)


def infeasibility_window(instance: ScarpInstance) -> tuple[int, int, int] | None:
    """First (mode, r, s) whose differenced window proves infeasibility.

    Returns (m, r, s) with upper[m][s] - lower[m][r] < 0 for r < s, or
    a single empty window as (m, n, n); None when no such proof exists.
    """
    for m in range(instance.num_modes):
        for n in range(instance.num_cells):
            if instance.lower[m][n] > instance.upper[m][n]:
                return (m, n, n)
        for r in range(instance.num_cells - 1):
            for s in range(r + 1, instance.num_cells):
                if instance.upper[m][s] - instance.lower[m][r] < 0:
                    return (m, r, s)
    return None


def _lp_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return repr(float(value))


def export_lp(instance: ScarpInstance, cuts=()) -> str:
    """Serialize the model in LP text format.

    Variables are named w_<cell>_<mode> and s_<i>_<j>_<mode> with
    1-based indices. The w variables are binary; each adjacent pair
    gets M continuous switch variables bounded below by both signed
    differences, so minimizing prices every differing mode pair at
    interface * mode_weight on each side. Fixed cells are pinned in
    the Bounds section. Deterministic given the instance.
    """
    lines = ["\\ switching-cost rounding model"]
    for key, value in instance.provenance:
        lines.append(f"\\ {key} {value}")
    lines.append(f"\\ delta {instance.delta}")

    objective = []
    for i, j, interface in instance.adjacency.pairs:
        for m in range(instance.num_modes):
            coef = interface * instance.mode_weights[m]
            objective.append((f"s_{i + 1}_{j + 1}_{m + 1}", coef))
    lines.append("Minimize")
    if objective:
        terms = " + ".join(f"{_lp_number(c)} {name}" for name, c in objective)
        lines.append(f" obj: {terms}")
    else:
        lines.append(" obj:")

    lines.append("Subject To")
    for n in range(instance.num_cells):
        terms = " + ".join(f"w_{n + 1}_{m + 1}" for m in range(instance.num_modes))
        lines.append(f" sos1_{n + 1}: {terms} = 1")
    for m in range(instance.num_modes):
        for n in range(instance.num_cells):
            terms = []
            for i in range(n + 1):
                coef = instance.weights[i]
                head = "" if not terms else "+ "
                coef_txt = "" if coef == 1 else f"{coef} "
                terms.append(f"{head}{coef_txt}w_{i + 1}_{m + 1}")
            body = " ".join(terms)
            lines.append(f" win_lo_{m + 1}_{n + 1}: {body} >= {instance.lower[m][n]}")
            lines.append(f" win_hi_{m + 1}_{n + 1}: {body} <= {instance.upper[m][n]}")
    for i, j, _interface in instance.adjacency.pairs:
        for m in range(instance.num_modes):
            s = f"s_{i + 1}_{j + 1}_{m + 1}"
            a = f"w_{i + 1}_{m + 1}"
            b = f"w_{j + 1}_{m + 1}"
            lines.append(f" cost_a_{i + 1}_{j + 1}_{m + 1}: {s} - {a} + {b} >= 0")
            lines.append(f" cost_b_{i + 1}_{j + 1}_{m + 1}: {s} + {a} - {b} >= 0")
    for t, cut in enumerate(cuts):
        terms = []
        for (cell, mode), coef in cut.coefficients:
            name = f"w_{cell + 1}_{mode + 1}"
            if not terms:
                prefix = "" if coef >= 0 else "- "
            else:
                prefix = "+ " if coef >= 0 else "- "
            mag = abs(coef)
            coef_txt = "" if mag == 1 else f"{mag} "
            terms.append(f"{prefix}{coef_txt}{name}")
        body = " ".join(terms)
        lines.append(f" cut_{cut.kind}_{t + 1}: {body} {cut.sense} {cut.rhs}")

    lines.append("Bounds")
    for n, forced in enumerate(instance.fixed):
        if forced is not None:
            lines.append(f" w_{n + 1}_{forced + 1} = 1")
    lines.append("Binaries")
    names = [
        f"w_{n + 1}_{m + 1}"
        for n in range(instance.num_cells)
        for m in range(instance.num_modes)
    ]
    for start in range(0, len(names), 8):
        lines.append(" " + " ".join(names[start : start + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def instance_to_json(instance: ScarpInstance) -> str:
    doc = {
        "N": instance.num_cells,
        "M": instance.num_modes,
        "weights": list(instance.weights),
        "scale": instance.scale,
        "lower": [list(row) for row in instance.lower],
        "upper": [list(row) for row in instance.upper],
        "adjacency": [[i, j, str(w)] for i, j, w in instance.adjacency.pairs],
        "mode_weights": [str(w) for w in instance.mode_weights],
        "fixed": list(instance.fixed),
        "delta": str(instance.delta),
        "provenance": [list(pair) for pair in instance.provenance],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def _provenance_pairs(raw) -> tuple[tuple[str, str], ...]:
    # older files stored a mapping; pair lists preserve order
    if isinstance(raw, dict):
        return tuple(sorted((str(k), str(v)) for k, v in raw.items()))
    return tuple((str(k), str(v)) for k, v in raw)


def instance_from_json(text: str) -> ScarpInstance:
    doc = json.loads(text)
    return ScarpInstance(
        num_cells=int(doc["N"]),
        num_modes=int(doc["M"]),
        weights=tuple(int(w) for w in doc["weights"]),
        scale=int(doc["scale"]),
        lower=tuple(tuple(int(v) for v in row) for row in doc["lower"]),
        upper=tuple(tuple(int(v) for v in row) for row in doc["upper"]),
        adjacency=Adjacency(
            tuple((int(i), int(j), Fraction(w)) for i, j, w in doc["adjacency"])
        ),
        mode_weights=tuple(Fraction(w) for w in doc["mode_weights"]),
        fixed=tuple(None if f is None else int(f) for f in doc["fixed"]),
        delta=Fraction(doc["delta"]),
        provenance=_provenance_pairs(doc.get("provenance", [])),
    )
