"""Artifact writers: hashing, delimited text, rasters, figures."""

import csv
import hashlib
import json
from fractions import Fraction

import pytest

from ciagrid.controls import BinaryControl
from ciagrid.grid import initial_grid, split_cell
from ciagrid.instances import unit_domain
from ciagrid.refinement import RefinementStep
from ciagrid.report import (
    canonical_json,
    config_hash,
    figure_experiment,
    figure_mode_map,
    figure_refinement,
    file_sha256,
    format_value,
    mode_raster,
    write_csv,
    write_json,
    write_manifest,
    write_pgm,
)

F = Fraction


def test_canonical_json_and_hash():
    a = {"b": F(1, 3), "a": [1, 2.5, None]}
    b = {"a": [1, 2.5, None], "b": F(1, 3)}
    assert canonical_json(a) == canonical_json(b) == '{"a":[1,2.5,null],"b":"1/3"}'
    digest = config_hash(a)
    assert digest == config_hash(b)
    assert len(digest) == 16 and int(digest, 16) >= 0
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_format_value():
    assert format_value(F(3, 5)) == "3/5"
    assert format_value(0.25) == "0.25"
    assert format_value(None) == ""
    assert format_value(7) == "7"


def test_file_sha256(tmp_path):
    path = tmp_path / "blob.bin"
    path.write_bytes(b"contents")
    assert file_sha256(path) == hashlib.sha256(b"contents").hexdigest()


def test_write_csv_layout(tmp_path):
    path = tmp_path / "rows.csv"
    digest = config_hash({"run": 1})
    write_csv(path, ["name", "value"], [{"name": "x", "value": F(1, 2)}], digest)
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0] == f"# config {digest}"
    parsed = list(csv.DictReader(lines[1:]))
    assert parsed == [{"name": "x", "value": "1/2"}]
    assert "\r" not in text
    # same inputs, same bytes
    other = tmp_path / "again.csv"
    write_csv(other, ["name", "value"], [{"name": "x", "value": F(1, 2)}], digest)
    assert other.read_bytes() == path.read_bytes()


def test_write_json_injects_config(tmp_path):
    path = tmp_path / "report.json"
    digest = config_hash({"run": 2})
    write_json(path, {"z": 1, "a": F(1, 3)}, digest)
    text = path.read_text()
    doc = json.loads(text)
    assert doc["config_hash"] == digest
    assert doc["a"] == "1/3"
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"z"')


def test_mode_raster_geometry():
    grid = initial_grid(unit_domain(2), 1)
    raster = mode_raster(grid, BinaryControl(4, (0, 1, 2, 3)))
    # row 0 is the top of the domain: the cells with the larger second index
    assert raster == (2, 2, [[2, 3], [0, 1]])
    refined = split_cell(grid, 0)
    width, height, pixels = mode_raster(refined, BinaryControl(5, (0, 1, 2, 3, 4, 4, 4)))
    assert (width, height) == (4, 4)
    assert pixels[3][:2] == [0, 1] and pixels[2][:2] == [2, 3]
    assert pixels[0] == [4, 4, 4, 4]
    line = initial_grid(unit_domain(1), 2)
    assert mode_raster(line, BinaryControl(2, (0, 1, 1, 0))) == (4, 1, [[0, 1, 1, 0]])
    with pytest.raises(ValueError):
        mode_raster(initial_grid(unit_domain(3), 1), BinaryControl(2, (0,) * 8))


def test_write_pgm(tmp_path):
    path = tmp_path / "modes.pgm"
    digest = config_hash({"run": 3})
    grid = initial_grid(unit_domain(2), 1)
    write_pgm(path, grid, BinaryControl(4, (0, 1, 2, 3)), digest)
    lines = path.read_text().splitlines()
    assert lines[0] == "P2"
    assert lines[1] == f"# config {digest}"
    assert lines[2] == "2 2"
    assert lines[3] == "3"
    assert [line.split() for line in lines[4:]] == [["2", "3"], ["0", "1"]]
    # single-mode rasters still use a positive max value
    flat = tmp_path / "flat.pgm"
    write_pgm(flat, grid, BinaryControl(1, (0, 0, 0, 0)), digest)
    assert flat.read_text().splitlines()[3] == "1"


def test_figures_are_deterministic_pngs(tmp_path):
    digest = config_hash({"run": 4})
    grid = split_cell(initial_grid(unit_domain(2), 1), 1)
    omega = BinaryControl(3, (0, 1, 2, 1, 0, 2, 2))
    first = tmp_path / "map1.png"
    second = tmp_path / "map2.png"
    figure_mode_map(first, grid, omega, digest, title="modes")
    figure_mode_map(second, grid, omega, digest, title="modes")
    blob = first.read_bytes()
    assert blob[:8] == b"\x89PNG\r\n\x1a\n"
    assert blob == second.read_bytes()
    assert b"ciagrid:config" in blob and digest.encode() in blob

    history = [
        RefinementStep(1, 0, F(1, 2), F(1, 2), 2),
        RefinementStep(2, 0, F(1, 4), F(1, 4), 3),
        RefinementStep(3, 2, F(1, 4), F(1, 4), 4),
    ]
    ref_png = tmp_path / "refine.png"
    figure_refinement(ref_png, history, digest)
    assert ref_png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    rows = [
        {"instance": "a", "variant": "uniform", "primal": 2.0, "dual": 2.0},
        {"instance": "a", "variant": "adaptive", "primal": 1.5, "dual": 1.5},
        {"instance": "b", "variant": "uniform", "primal": 3.0, "dual": 2.5},
        {"instance": "b", "variant": "adaptive", "primal": 2.0, "dual": 2.0},
    ]
    exp_png = tmp_path / "experiment.png"
    figure_experiment(exp_png, rows, digest)
    assert exp_png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_write_manifest(tmp_path):
    digest_payload = {"tool": "demo", "delta": F(1, 8)}
    a = tmp_path / "a.csv"
    a.write_text("# config x\n")
    sub = tmp_path / "deep"
    sub.mkdir()
    b = sub / "b.json"
    b.write_text("{}\n")
    digest = write_manifest(tmp_path, digest_payload, [a, b])
    assert digest == config_hash(digest_payload)
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert doc["config_hash"] == digest
    assert doc["config"]["delta"] == "1/8"
    assert doc["artifacts"]["a.csv"] == file_sha256(a)
    assert doc["artifacts"]["deep/b.json"] == file_sha256(b)
    assert list(doc["artifacts"]) == sorted(doc["artifacts"])
