"""Artifact writers: delimited tables, structured reports, mode maps.

Every artifact names the configuration hash that produced it: CSV and
PGM files carry it on a leading comment line, JSON reports in a
config_hash field, figures in their PNG metadata. Writers emit LF
newlines and sorted JSON keys so a single-threaded rerun of the same
configuration reproduces files byte for byte (figures excepted: their
byte stream also depends on the matplotlib build).
"""

from __future__ import annotations

import csv
import hashlib
import json
from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle

from .controls import BinaryControl
from .grid import Grid, cell_box

__all__ = [
    "canonical_json",
    "config_hash",
    "file_sha256",
    "format_value",
    "write_csv",
    "write_json",
    "mode_raster",
    "write_pgm",
    "figure_mode_map",
    "figure_refinement",
    "figure_experiment",
    "write_manifest",
]

_MODE_COLORS = plt.get_cmap("tab10")


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def canonical_json(payload) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, separators=(",", ":"))


def config_hash(payload) -> str:
    """First 16 hex digits of the sha256 of the canonical configuration."""
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()[:16]


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def format_value(value) -> str:
    """Exact text for table cells: rationals as p/q, floats via repr."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_csv(path, fieldnames, rows, config: str) -> None:
    """Delimited table with a `# config <hash>` comment line on top.

    Rows may be sequences in field order or mappings keyed by field name.
    """
    with open(path, "w", newline="") as handle:
        handle.write(f"# config {config}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            if isinstance(row, dict):
                row = [row[name] for name in fieldnames]
            writer.writerow([format_value(v) for v in row])


def write_json(path, payload: dict, config: str) -> None:
    body = dict(_jsonable(payload))
    body["config_hash"] = config
    with open(path, "w", newline="") as handle:
        json.dump(body, handle, sort_keys=True, indent=2)
        handle.write("\n")


def mode_raster(grid: Grid, omega: BinaryControl):
    """Rasterize a mode assignment at the grid's deepest resolution.

    Returns (width, height, rows) with rows listed top down; axis 0
    runs left to right, axis 1 bottom to top. 1D grids raster to a
    single row. Grids beyond 2D have no raster form.
    """
    dim = grid.domain.dim
    if dim > 2:
        raise ValueError("mode raster supports 1D and 2D grids only")
    depth = grid.depth_max()
    width = 2**depth
    height = 2**depth if dim == 2 else 1
    pixels = [[0] * width for _ in range(height)]
    for cell, mode in zip(grid.cells, omega.modes):
        span = 2 ** (depth - cell.depth)
        x0 = cell.index[0] * span
        y0 = cell.index[1] * span if dim == 2 else 0
        rows = range(y0, y0 + span) if dim == 2 else (0,)
        for y in rows:
            row = pixels[height - 1 - y]
            for x in range(x0, x0 + span):
                row[x] = mode
    return width, height, pixels


def write_pgm(path, grid: Grid, omega: BinaryControl, config: str) -> None:
    """Plain (P2) mode map; gray level = mode index."""
    width, height, pixels = mode_raster(grid, omega)
    maxval = max(1, omega.num_modes - 1)
    with open(path, "w", newline="") as handle:
        handle.write("P2\n")
        handle.write(f"# config {config}\n")
        handle.write(f"{width} {height}\n{maxval}\n")
        for row in pixels:
            handle.write(" ".join(str(v) for v in row) + "\n")


def _png_metadata(config: str) -> dict:
    return {"Software": "ciagrid", "ciagrid:config": config}


def figure_mode_map(path, grid: Grid, omega: BinaryControl, config: str, title=None) -> None:
    """Cell patches colored by mode, cell edges drawn, exact geometry."""
    dim = grid.domain.dim
    if dim > 2:
        raise ValueError("mode map figures support 1D and 2D grids only")
    fig, ax = plt.subplots(figsize=(5, 5 if dim == 2 else 1.6))
    for cell, mode in zip(grid.cells, omega.modes):
        lo, hi = cell_box(grid.domain, cell)
        x0 = float(lo[0])
        wx = float(hi[0] - lo[0])
        if dim == 2:
            y0, wy = float(lo[1]), float(hi[1] - lo[1])
        else:
            y0, wy = 0.0, 1.0
        ax.add_patch(
            Rectangle(
                (x0, y0),
                wx,
                wy,
                facecolor=_MODE_COLORS(mode % 10),
                edgecolor="black",
                linewidth=0.4,
            )
        )
    ox = float(grid.domain.origin[0])
    ax.set_xlim(ox, ox + float(grid.domain.lengths[0]))
    if dim == 2:
        oy = float(grid.domain.origin[1])
        ax.set_ylim(oy, oy + float(grid.domain.lengths[1]))
        ax.set_aspect("equal")
    else:
        ax.set_ylim(0.0, 1.0)
        ax.set_yticks([])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_png_metadata(config))
    plt.close(fig)


def figure_refinement(path, history, config: str) -> None:
    """Distance and cell count against refinement iterations."""
    fig, ax = plt.subplots(figsize=(6, 4))
    iterations = [step.iteration for step in history]
    ax.step(
        iterations,
        [float(step.distance) for step in history],
        where="post",
        label="distance",
        color="tab:blue",
    )
    ax.step(
        iterations,
        [float(step.score) for step in history],
        where="post",
        label="split score",
        color="tab:orange",
    )
    ax.set_xlabel("iteration")
    ax.set_ylabel("value")
    twin = ax.twinx()
    twin.plot(
        iterations,
        [step.cells for step in history],
        drawstyle="steps-post",
        color="tab:green",
        label="cells",
    )
    twin.set_ylabel("cells")
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = twin.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_png_metadata(config))
    plt.close(fig)


def figure_experiment(path, rows, config: str) -> None:
    """Per-instance primal/dual comparison across experiment variants.

    rows: dicts with instance, variant, primal, dual keys (numbers or
    None).
    """
    instances = sorted({row["instance"] for row in rows})
    variants = sorted({row["variant"] for row in rows})
    fig, ax = plt.subplots(figsize=(1.8 * max(4, len(instances)), 4))
    group = 0.8
    bar = group / max(1, len(variants))
    for v_pos, variant in enumerate(variants):
        xs, primals, duals = [], [], []
        for i_pos, instance in enumerate(instances):
            match = [
                r for r in rows if r["instance"] == instance and r["variant"] == variant
            ]
            if not match:
                continue
            row = match[0]
            x = i_pos - group / 2 + (v_pos + 0.5) * bar
            if row["primal"] is not None:
                xs.append(x)
                primals.append(float(row["primal"]))
                duals.append(float(row["dual"]) if row["dual"] is not None else 0.0)
        color = _MODE_COLORS(v_pos % 10)
        ax.bar(xs, primals, width=bar * 0.9, color=color, alpha=0.45)
        ax.bar(xs, duals, width=bar * 0.9, color=color, label=variant)
    ax.set_xticks(range(len(instances)))
    ax.set_xticklabels(instances, rotation=20, ha="right")
    ax.set_ylabel("objective (solid dual, pale primal)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_png_metadata(config))
    plt.close(fig)


def write_manifest(out_dir, config_payload: dict, artifact_paths) -> str:
    """manifest.json naming the config, its hash, and artifact digests.

    Returns the config hash. Artifact paths are recorded relative to
    the output directory, sorted, with sha256 digests.
    """
    out = Path(out_dir)
    digest = config_hash(config_payload)
    artifacts = {}
    for path in artifact_paths:
        p = Path(path)
        artifacts[p.relative_to(out).as_posix()] = file_sha256(p)
    payload = {
        "config": _jsonable(config_payload),
        "config_hash": digest,
        "artifacts": dict(sorted(artifacts.items())),
    }
    with open(out / "manifest.json", "w", newline="") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")
    return digest
