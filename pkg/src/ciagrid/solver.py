"""Exact search for switching-cost rounding instances.

brute_force enumerates every assignment under a hard size cap and is
the ground truth the rest of the test suite measures against.
solve_exact is a depth-first branch-and-bound in grid order: window
feasibility is propagated through per-mode suffix extremes of the
residual prefix windows, the cost bound is the switching cost already
incurred among decided pairs, and optional cuts act as hard
constraints with potential-based pruning. No LP relaxation is
embedded; large instances go through export_lp to an external solver.
"""

from __future__ import annotations

import heapq
import math
import time
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .controls import BinaryControl
from .errors import Infeasible, SizeLimit
from .scarp import Cut, ScarpInstance, objective_value, pair_cost_table

__all__ = [
    "PrefixWindows",
    "SolveConfig",
    "SolveReport",
    "brute_force",
    "solve_exact",
    "check_cut",
]


class PrefixWindows:
    """Feasibility test for partial assignments in grid order.

    After p cells are decided with per-mode weighted sums S, a
    completion exists in the per-mode relaxation iff for every mode m
    and every row n >= p - 1 the free and fixed weights still to come
    can steer the sum into [lower, upper]. Suffix extremes reduce the
    check to two comparisons per mode.
    """

    def __init__(self, instance: ScarpInstance):
        n_cells = instance.num_cells
        m_modes = instance.num_modes
        self.modes = m_modes
        # per-mode prefix weight totals: committed (fixed to m) and
        # reachable (fixed to m or free)
        self.committed = []
        self.reachable = []
        for m in range(m_modes):
            fix = [0] * (n_cells + 1)
            reach = [0] * (n_cells + 1)
            for i in range(n_cells):
                w = instance.weights[i]
                forced = instance.fixed[i]
                fix[i + 1] = fix[i] + (w if forced == m else 0)
                reach[i + 1] = reach[i] + (w if forced in (None, m) else 0)
            self.committed.append(fix)
            self.reachable.append(reach)
        # suffix extremes of the residual requirements
        self.need = []
        self.room = []
        for m in range(m_modes):
            need = [0] * n_cells
            room = [0] * n_cells
            acc_lo = None
            acc_hi = None
            for n in range(n_cells - 1, -1, -1):
                lo = instance.lower[m][n] - self.reachable[m][n + 1]
                hi = instance.upper[m][n] - self.committed[m][n + 1]
                acc_lo = lo if acc_lo is None else max(acc_lo, lo)
                acc_hi = hi if acc_hi is None else min(acc_hi, hi)
                need[n] = acc_lo
                room[n] = acc_hi
            self.need.append(need)
            self.room.append(room)

    def feasible(self, decided: int, sums) -> bool:
        """Can cells [0, decided) with weighted sums `sums` be completed?"""
        row = decided - 1 if decided > 0 else 0
        for m in range(self.modes):
            if sums[m] < self.need[m][row] + self.reachable[m][decided]:
                return False
            if sums[m] > self.room[m][row] + self.committed[m][decided]:
                return False
        return True


def _back_neighbors(instance: ScarpInstance) -> list[list[tuple[int, Fraction]]]:
    out: list[list[tuple[int, Fraction]]] = [[] for _ in range(instance.num_cells)]
    for i, j, interface in instance.adjacency.pairs:
        out[j].append((i, interface))
    return out


def _allowed_modes(instance: ScarpInstance, n: int) -> tuple[int, ...]:
    forced = instance.fixed[n]
    if forced is None:
        return tuple(range(instance.num_modes))
    return (forced,)


@dataclass(frozen=True)
class SolveConfig:
    """Knobs of solve_exact; defaults suit desk-scale instances."""

    node_budget: int = 10_000_000
    time_budget: float | None = 60.0
    cuts: tuple[Cut, ...] = ()
    warm_start: bool = True
    heuristic_window: int = 8
    heuristic_beam: int | None = None
    pair_costs: tuple | None = None
    track_dual: bool = False


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a solve or heuristic run.

    dual_bound is None only when nothing is known (pure heuristic run
    without proof); proven_optimal implies dual_bound == objective.
    best is None only for budget exhaustion without an incumbent.
    """

    best: BinaryControl | None
    objective: Fraction | None
    proven_optimal: bool
    nodes: int
    incumbent_source: str
    dual_bound: Fraction | None
    dual_log: tuple[Fraction, ...] = ()

    @property
    def gap(self) -> float | None:
        """(primal - dual) / dual, the reporting convention here."""
        if self.objective is None or self.dual_bound is None:
            return None
        if self.dual_bound == 0:
            return 0.0 if self.objective == 0 else float("inf")
        return float((self.objective - self.dual_bound) / self.dual_bound)


def brute_force(instance: ScarpInstance, pair_costs=None, cap: int = 24) -> SolveReport:
    """Exhaustive ground truth under the size cap.

    Enumerates assignments in lexicographic mode order with window
    pruning, so the reported optimum is the lexicographically smallest
    among co-optima. nodes counts evaluated complete assignments.
    """
    if instance.num_cells * instance.num_modes > cap:
        raise SizeLimit(
            f"N*M = {instance.num_cells * instance.num_modes} exceeds the cap {cap}"
        )
    windows = PrefixWindows(instance)
    table = pair_cost_table(instance, pair_costs)
    back = _back_neighbors(instance)
    n_cells = instance.num_cells

    best_modes: tuple[int, ...] | None = None
    best_cost: Fraction | None = None
    leaves = 0
    modes: list[int] = []
    sums = [0] * instance.num_modes

    def descend(p: int, cost: Fraction) -> None:
        nonlocal best_modes, best_cost, leaves
        if p == n_cells:
            leaves += 1
            if best_cost is None or cost < best_cost:
                best_cost = cost
                best_modes = tuple(modes)
            return
        for m in _allowed_modes(instance, p):
            sums[m] += instance.weights[p]
            modes.append(m)
            if windows.feasible(p + 1, sums):
                extra = sum(
                    interface * table[modes[i]][m] for i, interface in back[p]
                )
                descend(p + 1, cost + extra)
            modes.pop()
            sums[m] -= instance.weights[p]

    descend(0, Fraction(0))
    if best_modes is None:
        raise Infeasible("no assignment satisfies the prefix windows")
    return SolveReport(
        best=BinaryControl(instance.num_modes, best_modes),
        objective=best_cost,
        proven_optimal=True,
        nodes=leaves,
        incumbent_source="search",
        dual_bound=best_cost,
    )


class _CutState:
    """Hard-constraint bookkeeping for one cut during the search."""

    def __init__(self, cut: Cut, instance: ScarpInstance):
        self.sense = cut.sense
        self.rhs = cut.rhs
        n_cells = instance.num_cells
        m_modes = instance.num_modes
        self.coef = [[0] * m_modes for _ in range(n_cells)]
        for (cell, mode), c in cut.coefficients:
            self.coef[cell][mode] = c
        # best and worst contribution still achievable from each suffix
        self.suffix_max = [0] * (n_cells + 1)
        self.suffix_min = [0] * (n_cells + 1)
        for n in range(n_cells - 1, -1, -1):
            options = [self.coef[n][m] for m in _allowed_modes(instance, n)]
            self.suffix_max[n] = self.suffix_max[n + 1] + max(options)
            self.suffix_min[n] = self.suffix_min[n + 1] + min(options)

    def admits(self, achieved: int, p: int) -> bool:
        if self.sense == ">=":
            return achieved + self.suffix_max[p] >= self.rhs
        return achieved + self.suffix_min[p] <= self.rhs


def solve_exact(
    instance: ScarpInstance,
    incumbent: BinaryControl | None = None,
    config: SolveConfig | None = None,
) -> SolveReport:
    """Depth-first branch-and-bound over cell modes in grid order.

    Returns a proven optimum on natural exhaustion. On budget
    exhaustion the report carries the best incumbent (possibly None)
    and the smallest cost bound among abandoned subtrees as dual_bound;
    proven_optimal still holds when no abandoned subtree could beat the
    incumbent.
    """
    config = config or SolveConfig()
    windows = PrefixWindows(instance)
    table = pair_cost_table(instance, config.pair_costs)
    back = _back_neighbors(instance)
    n_cells = instance.num_cells
    zero = Fraction(0)

    if not windows.feasible(0, (0,) * instance.num_modes):
        raise Infeasible("empty prefix window at the root")

    best_modes: tuple[int, ...] | None = None
    best_cost: Fraction | None = None
    source = "search"

    if all(f is not None for f in instance.fixed):
        modes = tuple(instance.fixed)  # type: ignore[arg-type]
        sums = [0] * instance.num_modes
        for p, m in enumerate(modes):
            sums[m] += instance.weights[p]
            if not windows.feasible(p + 1, sums):
                raise Infeasible(f"the fixing violates a window at cell {p}")
        omega = BinaryControl(instance.num_modes, modes)
        cost = objective_value(instance, omega, config.pair_costs)
        return SolveReport(omega, cost, True, 0, "fixing", cost)

    def assignment_cost(modes) -> Fraction:
        return objective_value(
            instance, BinaryControl(instance.num_modes, tuple(modes)), config.pair_costs
        )

    if incumbent is not None:
        if len(incumbent.modes) != n_cells:
            raise ValueError("incumbent length does not match instance")
        sums = [0] * instance.num_modes
        for p, m in enumerate(incumbent.modes):
            forced = instance.fixed[p]
            if forced is not None and m != forced:
                raise ValueError(f"incumbent breaks the fixing of cell {p}")
            sums[m] += instance.weights[p]
            if not windows.feasible(p + 1, sums):
                raise ValueError("incumbent violates the prefix windows")
        best_modes = tuple(incumbent.modes)
        best_cost = assignment_cost(best_modes)
        source = "given"
    elif config.warm_start:
        from .heuristic import prefix_heuristic

        try:
            warm = prefix_heuristic(
                instance,
                window=config.heuristic_window,
                beam=config.heuristic_beam,
                pair_costs=config.pair_costs,
            )
        except Infeasible:
            warm = None
        if warm is not None and warm.best is not None:
            best_modes = warm.best.modes
            best_cost = warm.objective
            source = "heuristic"

    cut_states = [_CutState(cut, instance) for cut in config.cuts]

    # open-node bounds, tracked lazily for the dual bound
    heap: list[Fraction] = []
    open_counts: Counter = Counter()

    def push_bound(b: Fraction) -> None:
        heapq.heappush(heap, b)
        open_counts[b] += 1

    def drop_bound(b: Fraction) -> None:
        open_counts[b] -= 1

    def min_open() -> Fraction | None:
        while heap and open_counts[heap[0]] <= 0:
            heapq.heappop(heap)
        return heap[0] if heap else None

    # stack entries: (decided, modes, sums, cost, per-cut achieved)
    root = (0, (), (0,) * instance.num_modes, zero, (0,) * len(cut_states))
    stack = [root]
    push_bound(zero)
    nodes = 0
    aborted = False
    dual_log: list[Fraction] = []
    # None disables the wall clock; node budgets alone keep runs reproducible
    deadline = math.inf if config.time_budget is None else time.monotonic() + config.time_budget

    while stack:
        if nodes >= config.node_budget or time.monotonic() > deadline:
            aborted = True
            break
        p, modes, sums, cost, achieved = stack.pop()
        drop_bound(cost)
        nodes += 1
        if best_cost is not None and cost >= best_cost:
            if config.track_dual:
                cur = min_open()
                dual_log.append(best_cost if cur is None else min(cur, best_cost))
            continue
        if p == n_cells:
            best_cost = cost
            best_modes = modes
            source = "search"
            if config.track_dual:
                cur = min_open()
                dual_log.append(best_cost if cur is None else min(cur, best_cost))
            continue
        # push children in reverse so mode 0 is explored first
        for m in reversed(_allowed_modes(instance, p)):
            new_sums = list(sums)
            new_sums[m] += instance.weights[p]
            if not windows.feasible(p + 1, new_sums):
                continue
            new_achieved = tuple(
                a + st.coef[p][m] for a, st in zip(achieved, cut_states)
            )
            if not all(
                st.admits(a, p + 1) for a, st in zip(new_achieved, cut_states)
            ):
                continue
            extra = sum(interface * table[modes[i]][m] for i, interface in back[p])
            new_cost = cost + extra
            if best_cost is not None and new_cost >= best_cost:
                continue
            stack.append((p + 1, modes + (m,), tuple(new_sums), new_cost, new_achieved))
            push_bound(new_cost)
        if config.track_dual:
            cur = min_open()
            if cur is None:
                if best_cost is not None:
                    dual_log.append(best_cost)
            else:
                dual_log.append(cur if best_cost is None else min(cur, best_cost))

    if aborted:
        frontier = min_open()
        if best_cost is None:
            return SolveReport(
                None, None, False, nodes, source, frontier, tuple(dual_log)
            )
        if frontier is None or frontier >= best_cost:
            dual = best_cost
            proven = True
        else:
            dual = frontier
            proven = False
        omega = BinaryControl(instance.num_modes, best_modes)
        return SolveReport(
            omega, best_cost, proven, nodes, source, dual, tuple(dual_log)
        )

    if best_modes is None:
        raise Infeasible("search exhausted without a feasible assignment")
    omega = BinaryControl(instance.num_modes, best_modes)
    return SolveReport(
        omega, best_cost, True, nodes, source, best_cost, tuple(dual_log)
    )


def check_cut(instance: ScarpInstance, cut: Cut, cap: int = 24) -> BinaryControl | None:
    """First feasible assignment violating the cut, or None if valid."""
    if instance.num_cells * instance.num_modes > cap:
        raise SizeLimit(
            f"N*M = {instance.num_cells * instance.num_modes} exceeds the cap {cap}"
        )
    windows = PrefixWindows(instance)
    n_cells = instance.num_cells
    modes: list[int] = []
    sums = [0] * instance.num_modes

    def descend(p: int) -> tuple[int, ...] | None:
        if p == n_cells:
            if not cut.satisfied_by_modes(modes):
                return tuple(modes)
            return None
        for m in _allowed_modes(instance, p):
            sums[m] += instance.weights[p]
            modes.append(m)
            hit = None
            if windows.feasible(p + 1, sums):
                hit = descend(p + 1)
            modes.pop()
            sums[m] -= instance.weights[p]
            if hit is not None:
                return hit
        return None

    violator = descend(0)
    if violator is None:
        return None
    return BinaryControl(instance.num_modes, violator)
