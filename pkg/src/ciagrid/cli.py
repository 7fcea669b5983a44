"""Command-line front end.

Subcommands: refine, round, model, scarp solve, scarp heuristic,
experiment. Every run writes its artifacts into --out together with a
manifest.json echoing the effective configuration, its hash, and the
sha256 of every input and output file.

Exit codes: 0 success, 1 usage or input errors, 2 infeasible,
3 refinement depth exhausted, 4 solve budget exhausted without an
incumbent.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import report as rpt
from .controls import (
    ControlField,
    binary_to_json,
    cell_volume,
    load_control,
    nonbinariness,
    pseudometric,
)
from .errors import DepthExhausted, Infeasible
from .experiment import run_experiment
from .grid import Grid, initial_grid, load_grid, save_grid
from .heuristic import prefix_heuristic
from .instances import bundled_suite, random_field, unit_domain
from .refinement import refine_until
from .rounding import sur_variant
from .scarp import (
    build_instance,
    export_lp,
    instance_to_json,
    objective_value,
    satisfies_windows,
    separate_all,
)
from .solver import SolveConfig, solve_exact

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_DEPTH = 3
EXIT_NO_INCUMBENT = 4

CUT_CHOICES = {
    "none": (),
    "lattice": ("lattice",),
    "parity": ("parity",),
    "all": ("lattice", "parity"),
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 means infeasible here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _positive_fraction(text: str) -> Fraction:
    value = _fraction(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> _Parser:
    parser = _Parser(prog="ciagrid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, delta=False, grid=False, solve=False, heuristic=False):
        p.add_argument("--instance", required=True, help="relaxed control JSON file")
        p.add_argument("--out", required=True, help="output directory")
        if delta:
            p.add_argument(
                "--delta", type=_positive_fraction, required=True, help="tolerance"
            )
        if grid:
            p.add_argument(
                "--grid", default=None, help="rounding grid JSON (overrides --depth0)"
            )
            p.add_argument(
                "--depth0", type=int, default=0, help="uniform grid depth when no --grid"
            )
        if heuristic:
            p.add_argument("--window", type=int, default=8, help="decision window size")
            p.add_argument(
                "--beam", type=int, default=None, help="label cap per step (unbounded)"
            )
        if solve:
            p.add_argument("--node-budget", type=int, default=10_000_000)
            p.add_argument(
                "--time-budget",
                type=float,
                default=None,
                help="wall clock seconds (default: none; reruns stay reproducible)",
            )
            p.add_argument("--cuts", choices=sorted(CUT_CHOICES), default="none")
        p.add_argument(
            "--fix-binary",
            choices=("on", "off"),
            default="on",
            help="pin cells where the instance is already one-hot",
        )

    p_refine = sub.add_parser("refine", help="adaptive grid refinement")
    add_common(p_refine, delta=True)
    p_refine.add_argument("--depth0", type=int, default=0, help="starting uniform depth")
    p_refine.set_defaults(func=cmd_refine)

    p_round = sub.add_parser("round", help="sum-up rounding on a fixed grid")
    add_common(p_round, grid=True)
    p_round.set_defaults(func=cmd_round)

    p_model = sub.add_parser("model", help="write the integer model as LP")
    add_common(p_model, delta=True, grid=True)
    p_model.add_argument("--cuts", choices=sorted(CUT_CHOICES), default="none")
    p_model.set_defaults(func=cmd_model)

    p_scarp = sub.add_parser("scarp", help="switching-cost-aware rounding")
    scarp_sub = p_scarp.add_subparsers(dest="subcommand", required=True)
    p_solve = scarp_sub.add_parser("solve", help="exact branch and bound")
    add_common(p_solve, delta=True, grid=True, solve=True, heuristic=True)
    p_solve.set_defaults(func=cmd_solve)
    p_heur = scarp_sub.add_parser("heuristic", help="window sweep only")
    add_common(p_heur, delta=True, grid=True, heuristic=True)
    p_heur.set_defaults(func=cmd_heuristic)

    p_exp = sub.add_parser("experiment", help="bundled comparison matrix")
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--node-budget", type=int, default=200_000)
    p_exp.add_argument("--time-budget", type=float, default=None)
    p_exp.add_argument("--window", type=int, default=8)
    p_exp.add_argument("--beam", type=int, default=None)
    p_exp.add_argument(
        "--random", type=int, default=0, help="extra seeded random instances"
    )
    p_exp.add_argument("--seed", type=int, default=0, help="seed for --random")
    p_exp.add_argument("--fix-binary", choices=("on", "off"), default="on")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_alpha(args) -> ControlField:
    return load_control(args.instance)


def _pick_grid(args, alpha: ControlField) -> Grid:
    grid_path = getattr(args, "grid", None)
    if grid_path:
        grid = load_grid(grid_path)
        if grid.domain != alpha.domain:
            raise ValueError("grid domain differs from the instance domain")
        if grid.depth_max() > alpha.depth:
            raise ValueError("grid is deeper than the instance reference depth")
        return grid
    depth0 = getattr(args, "depth0", 0)
    if depth0 < 0 or depth0 > alpha.depth:
        raise ValueError(f"depth0 must lie in [0, {alpha.depth}]")
    return initial_grid(alpha.domain, depth0)


def _inputs_digest(args) -> dict:
    digests = {}
    instance = getattr(args, "instance", None)
    if instance:
        digests[str(instance)] = rpt.file_sha256(instance)
    grid_path = getattr(args, "grid", None)
    if grid_path:
        digests[str(grid_path)] = rpt.file_sha256(grid_path)
    return digests


def _config_payload(args, command: str, **extra) -> dict:
    payload = {"command": command, "inputs": _inputs_digest(args)}
    for key in (
        "delta",
        "depth0",
        "grid",
        "window",
        "beam",
        "node_budget",
        "time_budget",
        "cuts",
        "fix_binary",
        "seed",
        "random",
    ):
        if hasattr(args, key):
            value = getattr(args, key)
            payload[key] = str(value) if isinstance(value, Fraction) else value
    payload.update(extra)
    return payload


def _mode_artifacts(out: Path, grid: Grid, omega, digest: str, artifacts: list) -> None:
    omega_path = out / "omega.json"
    import json

    body = json.loads(binary_to_json(omega))
    body["config_hash"] = digest
    omega_path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n")
    artifacts.append(omega_path)
    if grid.domain.dim <= 2:
        pgm = out / "modes.pgm"
        rpt.write_pgm(pgm, grid, omega, digest)
        artifacts.append(pgm)
        png = out / "modes.png"
        rpt.figure_mode_map(png, grid, omega, digest)
        artifacts.append(png)


def cmd_refine(args) -> int:
    alpha = _load_alpha(args)
    out = _out_dir(args)
    payload = _config_payload(args, "refine")
    digest = rpt.config_hash(payload)
    grid0 = initial_grid(alpha.domain, args.depth0)
    artifacts: list[Path] = []
    try:
        result = refine_until(alpha, args.delta, grid0=grid0)
    except DepthExhausted as exc:
        rpt.write_json(
            out / "report.json",
            {
                "status": "depth-exhausted",
                "cell_index": exc.cell_index,
                "depth_cap": exc.depth_cap,
                "distance": None if exc.distance is None else str(exc.distance),
            },
            digest,
        )
        artifacts.append(out / "report.json")
        rpt.write_manifest(out, payload, artifacts)
        print(f"refine: {exc}", file=sys.stderr)
        return EXIT_DEPTH

    grid_path = out / "grid.json"
    save_grid(result.grid, grid_path)
    artifacts.append(grid_path)
    _mode_artifacts(out, result.grid, result.omega, digest, artifacts)
    history_path = out / "history.csv"
    rpt.write_csv(
        history_path,
        ("iteration", "split_index", "score", "distance", "cells"),
        [
            (s.iteration, s.split_index, s.score, s.distance, s.cells)
            for s in result.history
        ],
        digest,
    )
    artifacts.append(history_path)
    if result.history:
        fig_path = out / "refinement.png"
        rpt.figure_refinement(fig_path, result.history, digest)
        artifacts.append(fig_path)
    rpt.write_json(
        out / "report.json",
        {
            "status": "converged",
            "iterations": result.iterations,
            "cells": len(result.grid),
            "distance": str(result.distance),
            "distance_float": float(result.distance),
            "delta": str(args.delta),
        },
        digest,
    )
    artifacts.append(out / "report.json")
    rpt.write_manifest(out, payload, artifacts)
    print(f"refine: {len(result.grid)} cells, distance {result.distance}")
    return EXIT_OK


def cmd_round(args) -> int:
    alpha = _load_alpha(args)
    out = _out_dir(args)
    payload = _config_payload(args, "round")
    digest = rpt.config_hash(payload)
    grid = _pick_grid(args, alpha)
    omega = sur_variant(alpha, grid)
    distance = pseudometric(alpha, omega, grid)
    # distance bound: (M - 1) * largest cell volume among non-binary cells
    live = [
        cell_volume(alpha.domain, cell)
        for cell in grid.cells
        if nonbinariness(alpha, cell) > 0
    ]
    bound = (alpha.num_modes - 1) * max(live) if live else Fraction(0)
    artifacts: list[Path] = []
    _mode_artifacts(out, grid, omega, digest, artifacts)
    rpt.write_json(
        out / "report.json",
        {
            "cells": len(grid),
            "distance": str(distance),
            "distance_float": float(distance),
            "bound": str(bound),
            "bound_float": float(bound),
            "sur_ratio": float(distance / bound) if bound else None,
            "copied_cells": sum(
                1 for cell in grid.cells if nonbinariness(alpha, cell) == 0
            ),
        },
        digest,
    )
    artifacts.append(out / "report.json")
    rpt.write_manifest(out, payload, artifacts)
    print(f"round: distance {distance} on {len(grid)} cells")
    return EXIT_OK


def _separate_for(instance, alpha, grid, kinds):
    if not kinds:
        return ()
    from .experiment import fractional_point

    return separate_all(instance, fractional_point(alpha, grid), kinds)


def cmd_model(args) -> int:
    alpha = _load_alpha(args)
    out = _out_dir(args)
    payload = _config_payload(args, "model")
    digest = rpt.config_hash(payload)
    grid = _pick_grid(args, alpha)
    instance = build_instance(
        alpha, grid, args.delta, fix_binary=args.fix_binary == "on"
    )
    cuts = _separate_for(instance, alpha, grid, CUT_CHOICES[args.cuts])
    artifacts: list[Path] = []
    lp_path = out / "model.lp"
    lp_path.write_text(export_lp(instance, cuts=cuts))
    artifacts.append(lp_path)
    inst_path = out / "instance.json"
    inst_path.write_text(instance_to_json(instance) + "\n")
    artifacts.append(inst_path)
    rpt.write_json(
        out / "report.json",
        {
            "cells": instance.num_cells,
            "modes": instance.num_modes,
            "scale": instance.scale,
            "weights_max": max(instance.weights),
            "fixed_cells": sum(1 for f in instance.fixed if f is not None),
            "cuts": len(cuts),
        },
        digest,
    )
    artifacts.append(out / "report.json")
    rpt.write_manifest(out, payload, artifacts)
    print(f"model: {instance.num_cells} cells, {len(cuts)} cuts, LP at {lp_path}")
    return EXIT_OK


def _report_json(report) -> dict:
    return {
        "objective": None if report.objective is None else str(report.objective),
        "objective_float": None if report.objective is None else float(report.objective),
        "dual_bound": None if report.dual_bound is None else str(report.dual_bound),
        "dual_bound_float": None
        if report.dual_bound is None
        else float(report.dual_bound),
        "gap": report.gap,
        "nodes": report.nodes,
        "proven_optimal": report.proven_optimal,
        "incumbent_source": report.incumbent_source,
    }


def cmd_solve(args) -> int:
    alpha = _load_alpha(args)
    out = _out_dir(args)
    payload = _config_payload(args, "scarp solve")
    digest = rpt.config_hash(payload)
    grid = _pick_grid(args, alpha)
    instance = build_instance(
        alpha, grid, args.delta, fix_binary=args.fix_binary == "on"
    )
    cuts = _separate_for(instance, alpha, grid, CUT_CHOICES[args.cuts])
    config = SolveConfig(
        node_budget=args.node_budget,
        time_budget=args.time_budget,
        cuts=cuts,
        warm_start=True,
        heuristic_window=args.window,
        heuristic_beam=args.beam,
        track_dual=True,
    )
    report = solve_exact(instance, config=config)
    artifacts: list[Path] = []
    body = _report_json(report)
    body["cuts"] = len(cuts)
    rpt.write_json(out / "report.json", body, digest)
    artifacts.append(out / "report.json")
    if report.dual_log:
        log_path = out / "dual_log.csv"
        rpt.write_csv(
            log_path,
            ("node", "bound"),
            [(i + 1, float(b)) for i, b in enumerate(report.dual_log)],
            digest,
        )
        artifacts.append(log_path)
    if report.best is not None:
        _mode_artifacts(out, grid, report.best, digest, artifacts)
    rpt.write_manifest(out, payload, artifacts)
    if report.best is None:
        print("scarp solve: budget exhausted without an incumbent", file=sys.stderr)
        return EXIT_NO_INCUMBENT
    print(
        f"scarp solve: objective {report.objective}"
        f" ({'optimal' if report.proven_optimal else 'incumbent'},"
        f" {report.nodes} nodes)"
    )
    return EXIT_OK


def cmd_heuristic(args) -> int:
    alpha = _load_alpha(args)
    out = _out_dir(args)
    payload = _config_payload(args, "scarp heuristic")
    digest = rpt.config_hash(payload)
    grid = _pick_grid(args, alpha)
    instance = build_instance(
        alpha, grid, args.delta, fix_binary=args.fix_binary == "on"
    )
    stats: dict = {}
    try:
        report = prefix_heuristic(
            instance, window=args.window, beam=args.beam, stats=stats
        )
        best = report.best
        body = _report_json(report)
        label_count = report.nodes
    except Infeasible:
        # The sweep can dead-end under a tight beam; fall back to the
        # plain rounding if that happens to satisfy the windows.
        best = sur_variant(alpha, grid)
        if not satisfies_windows(instance, best):
            raise
        cost = objective_value(instance, best)
        body = {
            "objective": str(cost),
            "objective_float": float(cost),
            "dual_bound": None,
            "dual_bound_float": None,
            "gap": None,
            "nodes": 0,
            "proven_optimal": False,
            "incumbent_source": "fallback",
        }
        label_count = 0
    artifacts: list[Path] = []
    body["window_stats"] = stats
    rpt.write_json(out / "report.json", body, digest)
    artifacts.append(out / "report.json")
    _mode_artifacts(out, grid, best, digest, artifacts)
    rpt.write_manifest(out, payload, artifacts)
    print(f"scarp heuristic: objective {body['objective']} ({label_count} labels)")
    return EXIT_OK


def cmd_experiment(args) -> int:
    out = _out_dir(args)
    entries = bundled_suite()
    if args.random > 0:
        import random

        rng = random.Random(args.seed)
        from .instances import SuiteEntry

        for k in range(args.random):
            modes = 2 + k % 2
            alpha = random_field(rng, unit_domain(2), modes, 3)
            entries.append(
                SuiteEntry(f"random-{k}", alpha, Fraction(1, 8), False)
            )
    runs = run_experiment(
        out,
        entries=entries,
        node_budget=args.node_budget,
        time_budget=args.time_budget,
        window=args.window,
        beam=args.beam,
        fix_binary=args.fix_binary == "on",
    )
    solved = sum(1 for r in runs if r.report.proven_optimal)
    print(f"experiment: {len(runs)} runs, {solved} proven optimal, summary in {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DepthExhausted as exc:
        print(f"depth exhausted: {exc}", file=sys.stderr)
        return EXIT_DEPTH
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
