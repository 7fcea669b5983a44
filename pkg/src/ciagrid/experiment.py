"""Experiment driver comparing rounding pipelines on bundled instances.

For every suite entry the driver runs four variants:

  uniform                   coarsest uniform grid meeting the tolerance,
                            then the exact switching-cost solve
  adaptive                  adaptive refinement, then the exact solve
  adaptive+heuristic        adaptive, warm started by the window sweep
  adaptive+heuristic+cuts   warm started and with inequalities separated
                            at the relaxed point appended up front

and writes a delimited summary (instance, variant, N, primal, dual,
gap, nodes), per-variant assignment artifacts, mode maps, a comparison
figure, and a manifest. Solves may run on a thread pool sized by the
threads argument or the CIAGRID_THREADS variable; artifact emission
always happens on the calling thread, and the summary is assembled in
suite order, so single-threaded reruns reproduce files byte for byte
(figures excepted) as long as no wall-clock budget interferes.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import report as rpt
from .controls import BinaryControl, binary_to_json, cell_average, pseudometric
from .grid import Grid, initial_grid, save_grid
from .instances import SuiteEntry, bundled_suite
from .refinement import refine_until
from .rounding import sur_variant
from .scarp import ScarpInstance, build_instance, separate_all
from .solver import SolveConfig, SolveReport, solve_exact

__all__ = [
    "VARIANTS",
    "VariantRun",
    "thread_count",
    "coarsest_uniform",
    "fractional_point",
    "run_entry",
    "run_experiment",
]

VARIANTS = ("uniform", "adaptive", "adaptive+heuristic", "adaptive+heuristic+cuts")


@dataclass(frozen=True)
class VariantRun:
    """One (instance, variant) outcome plus what produced it."""

    instance: str
    variant: str
    grid: Grid
    report: SolveReport

    @property
    def cells(self) -> int:
        return len(self.grid)


def thread_count(requested: int | None = None) -> int:
    """Effective parallelism: explicit argument, else CIAGRID_THREADS, else 1."""
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("CIAGRID_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"CIAGRID_THREADS must be an integer, got {env!r}") from exc
    return 1


def coarsest_uniform(alpha, delta: Fraction) -> Grid:
    """Coarsest uniform dyadic grid whose rounding meets the tolerance."""
    for depth in range(alpha.depth + 1):
        grid = initial_grid(alpha.domain, depth)
        omega = sur_variant(alpha, grid)
        if pseudometric(alpha, omega, grid) <= delta:
            return grid
    raise ValueError(
        f"no uniform grid up to depth {alpha.depth} meets tolerance {delta}"
    )


def fractional_point(alpha, grid: Grid):
    """Cell averages of the relaxed field, the point cuts separate at."""
    return tuple(cell_average(alpha, cell) for cell in grid.cells)


def _solve(instance: ScarpInstance, base: SolveConfig, *, warm: bool, cuts=()):
    config = SolveConfig(
        node_budget=base.node_budget,
        time_budget=base.time_budget,
        cuts=tuple(cuts),
        warm_start=warm,
        heuristic_window=base.heuristic_window,
        heuristic_beam=base.heuristic_beam,
        pair_costs=base.pair_costs,
        track_dual=base.track_dual,
    )
    return solve_exact(instance, config=config)


def run_entry(
    entry: SuiteEntry,
    base: SolveConfig,
    fix_binary: bool = True,
    cut_kinds=("lattice", "parity"),
) -> list[VariantRun]:
    """All four variants for one suite entry, in declaration order."""
    runs: list[VariantRun] = []

    grid_u = coarsest_uniform(entry.alpha, entry.delta)
    inst_u = build_instance(entry.alpha, grid_u, entry.delta, fix_binary=fix_binary)
    runs.append(VariantRun(entry.name, "uniform", grid_u, _solve(inst_u, base, warm=False)))

    refined = refine_until(entry.alpha, entry.delta)
    grid_a = refined.grid
    inst_a = build_instance(entry.alpha, grid_a, entry.delta, fix_binary=fix_binary)
    runs.append(
        VariantRun(entry.name, "adaptive", grid_a, _solve(inst_a, base, warm=False))
    )
    runs.append(
        VariantRun(
            entry.name, "adaptive+heuristic", grid_a, _solve(inst_a, base, warm=True)
        )
    )
    cuts = separate_all(inst_a, fractional_point(entry.alpha, grid_a), cut_kinds)
    runs.append(
        VariantRun(
            entry.name,
            "adaptive+heuristic+cuts",
            grid_a,
            _solve(inst_a, base, warm=True, cuts=cuts),
        )
    )
    return runs


def _summary_row(run: VariantRun):
    report = run.report
    return (
        run.instance,
        run.variant,
        run.cells,
        None if report.objective is None else float(report.objective),
        None if report.dual_bound is None else float(report.dual_bound),
        report.gap,
        report.nodes,
    )


def run_experiment(
    out_dir,
    entries=None,
    node_budget: int = 200_000,
    time_budget: float | None = None,
    window: int = 8,
    beam: int | None = None,
    threads: int | None = None,
    fix_binary: bool = True,
    cut_kinds=("lattice", "parity"),
) -> list[VariantRun]:
    """Run the full variant matrix and write every artifact.

    Returns the variant runs in suite order. Artifacts: summary.csv and
    summary.json at the output root, experiment.png, per-instance grid
    files and per-variant assignments with PGM and PNG mode maps, and
    manifest.json naming everything.
    """
    if entries is None:
        entries = bundled_suite()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = SolveConfig(
        node_budget=node_budget,
        time_budget=time_budget,
        warm_start=True,
        heuristic_window=window,
        heuristic_beam=beam,
    )
    workers = thread_count(threads)
    config_payload = {
        "command": "experiment",
        "suite": [
            {"name": e.name, "delta": str(e.delta), "smooth": e.smooth} for e in entries
        ],
        "node_budget": node_budget,
        "time_budget": time_budget,
        "window": window,
        "beam": beam,
        "threads": workers,
        "fix_binary": fix_binary,
        "cuts": list(cut_kinds),
    }
    digest = rpt.config_hash(config_payload)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run_entry, e, base, fix_binary, cut_kinds) for e in entries
            ]
            per_entry = [f.result() for f in futures]
    else:
        per_entry = [run_entry(e, base, fix_binary, cut_kinds) for e in entries]

    artifacts: list[Path] = []
    rows = []
    row_dicts = []
    for entry, runs in zip(entries, per_entry):
        entry_dir = out / entry.name
        entry_dir.mkdir(parents=True, exist_ok=True)
        grids_seen: dict[int, Grid] = {}
        for run in runs:
            rows.append(_summary_row(run))
            row_dicts.append(
                {
                    "instance": run.instance,
                    "variant": run.variant,
                    "cells": run.cells,
                    "primal": None
                    if run.report.objective is None
                    else float(run.report.objective),
                    "dual": None
                    if run.report.dual_bound is None
                    else float(run.report.dual_bound),
                }
            )
            grids_seen.setdefault(id(run.grid), run.grid)
            var_dir = entry_dir / run.variant.replace("+", "_")
            var_dir.mkdir(parents=True, exist_ok=True)
            if run.report.best is not None:
                omega_path = var_dir / "omega.json"
                omega_path.write_text(_omega_json(run, digest))
                artifacts.append(omega_path)
                pgm = var_dir / "modes.pgm"
                rpt.write_pgm(pgm, run.grid, run.report.best, digest)
                artifacts.append(pgm)
                png = var_dir / "modes.png"
                rpt.figure_mode_map(
                    png,
                    run.grid,
                    run.report.best,
                    digest,
                    title=f"{run.instance} {run.variant}",
                )
                artifacts.append(png)
        for tag, grid in (
            ("grid_uniform.json", runs[0].grid),
            ("grid_adaptive.json", runs[1].grid),
        ):
            path = entry_dir / tag
            save_grid(grid, path)
            artifacts.append(path)

    fields = ("instance", "variant", "N", "primal", "dual", "gap", "nodes")
    csv_path = out / "summary.csv"
    rpt.write_csv(csv_path, fields, rows, digest)
    artifacts.append(csv_path)
    json_path = out / "summary.json"
    rpt.write_json(
        json_path,
        {
            "rows": [dict(zip(fields, row)) for row in rows],
            "exact": [
                {
                    "instance": run.instance,
                    "variant": run.variant,
                    "objective": None
                    if run.report.objective is None
                    else str(run.report.objective),
                    "dual_bound": None
                    if run.report.dual_bound is None
                    else str(run.report.dual_bound),
                    "proven_optimal": run.report.proven_optimal,
                    "incumbent_source": run.report.incumbent_source,
                }
                for runs in per_entry
                for run in runs
            ],
        },
        digest,
    )
    artifacts.append(json_path)
    fig_path = out / "experiment.png"
    rpt.figure_experiment(
        fig_path,
        [
            {
                "instance": d["instance"],
                "variant": d["variant"],
                "primal": d["primal"],
                "dual": d["dual"],
            }
            for d in row_dicts
        ],
        digest,
    )
    artifacts.append(fig_path)
    rpt.write_manifest(out, config_payload, artifacts)
    return [run for runs in per_entry for run in runs]


def _omega_json(run: VariantRun, digest: str) -> str:
    import json

    body = json.loads(binary_to_json(run.report.best))
    body["config_hash"] = digest
    return json.dumps(body, sort_keys=True, indent=2) + "\n"
