"""Relaxed/binary controls: exact integrals, the prefix distance, JSON."""

import json
import random
from fractions import Fraction

import pytest

from ciagrid.controls import (
    BinaryControl,
    ControlField,
    binary_cell_mode,
    binary_from_json,
    binary_to_field,
    binary_to_json,
    cell_average,
    cell_integral,
    control_from_json,
    control_to_json,
    field_distance,
    load_control,
    nonbinariness,
    pseudometric,
    save_control,
)
from ciagrid.grid import cell_volume, initial_grid, split_cell
from ciagrid.instances import random_field, random_grid, unit_domain
from ciagrid.rounding import sur_variant

from helpers import direct_cell_integral, direct_pseudometric

HALF = Fraction(1, 2)


def field_1d(*rows):
    depth = (len(rows) - 1).bit_length()
    return ControlField(unit_domain(1), len(rows[0]), depth, tuple(rows))


def test_simplex_validation():
    good = ((Fraction(3, 5), Fraction(2, 5)), (HALF, HALF))
    ControlField(unit_domain(1), 2, 1, good)
    with pytest.raises(ValueError):
        ControlField(unit_domain(1), 2, 1, ((Fraction(3, 2), Fraction(-1, 2)), (HALF, HALF)))
    with pytest.raises(ValueError):
        ControlField(unit_domain(1), 2, 1, ((Fraction(1, 3), Fraction(1, 3)), (HALF, HALF)))
    with pytest.raises(ValueError):
        ControlField(unit_domain(1), 2, 1, good[:1])
    with pytest.raises(ValueError):
        ControlField(unit_domain(1), 3, 1, good)
    with pytest.raises(ValueError):
        ControlField(unit_domain(1), 2, -1, good)


def test_cell_integral_matches_direct_sum():
    rng = random.Random(17)
    for trial in range(15):
        dim = 1 + trial % 3
        alpha = random_field(rng, unit_domain(dim), 2 + trial % 2, 2)
        grid = random_grid(rng, unit_domain(dim), 2, 3)
        for cell in grid.cells:
            reference = direct_cell_integral(alpha, cell)
            assert cell_integral(alpha, cell) == reference
            vol = cell_volume(alpha.domain, cell)
            assert tuple(a * vol for a in cell_average(alpha, cell)) == reference


def test_cell_integral_additive_under_split():
    rng = random.Random(29)
    alpha = random_field(rng, unit_domain(2), 3, 3)
    grid = initial_grid(unit_domain(2), 1)
    for n, parent in enumerate(grid.cells):
        child_grid = split_cell(grid, n)
        children = child_grid.cells[n : n + 4]
        summed = [Fraction(0)] * 3
        for child in children:
            for m, v in enumerate(cell_integral(alpha, child)):
                summed[m] += v
        assert tuple(summed) == cell_integral(alpha, parent)


def test_nonbinariness_definition():
    alpha = field_1d((Fraction(3, 5), Fraction(2, 5)), (HALF, HALF))
    grid = initial_grid(unit_domain(1), 1)
    c0, c1 = grid.cells
    # max over modes of min(integral, volume - integral)
    assert nonbinariness(alpha, c0) == Fraction(1, 5)
    assert nonbinariness(alpha, c1) == Fraction(1, 4)
    binary = field_1d((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)))
    assert nonbinariness(binary, binary_cell := grid.cells[0]) == 0
    assert binary_cell_mode(binary, binary_cell) == 0
    assert binary_cell_mode(binary, grid.cells[1]) == 1
    assert binary_cell_mode(alpha, c0) is None
    # mixed binary children: integral matches neither 0 nor the volume
    root = initial_grid(unit_domain(1), 0).cells[0]
    assert binary_cell_mode(binary, root) is None
    assert nonbinariness(binary, root) == HALF


def test_pseudometric_matches_direct_recompute():
    rng = random.Random(41)
    for trial in range(20):
        dim = 1 + trial % 3
        alpha = random_field(rng, unit_domain(dim), 2 + trial % 2, 2)
        grid = random_grid(rng, unit_domain(dim), 2, trial % 4)
        omega = sur_variant(alpha, grid)
        assert pseudometric(alpha, omega, grid) == direct_pseudometric(alpha, omega, grid)
        # an adversarial constant assignment, not just the rounded one
        flat = BinaryControl(alpha.num_modes, (0,) * len(grid.cells))
        assert pseudometric(alpha, flat, grid) == direct_pseudometric(alpha, flat, grid)


def test_pseudometric_zero_for_own_field():
    rng = random.Random(43)
    grid = random_grid(rng, unit_domain(2), 3, 4)
    modes = tuple(rng.randrange(2) for _ in grid.cells)
    omega = BinaryControl(2, modes)
    lifted = binary_to_field(omega, grid)
    assert pseudometric(lifted, omega, grid) == 0
    alpha = random_field(rng, unit_domain(2), 2, grid.depth_max())
    assert field_distance(alpha, alpha, grid) == 0
    assert field_distance(alpha, lifted, grid) == pseudometric(alpha, omega, grid)


def test_control_json_round_trip(tmp_path):
    rng = random.Random(47)
    alpha = random_field(rng, unit_domain(2), 3, 2)
    again = control_from_json(control_to_json(alpha))
    assert again == alpha
    path = tmp_path / "alpha.json"
    save_control(alpha, path)
    assert load_control(path) == alpha


def test_control_json_decimals_are_exact():
    doc = {
        "domain": {"origin": ["0"], "lengths": ["1"]},
        "M": 2,
        "L": 1,
        "alpha": [[0.2, 0.8], ["3/10", "7/10"]],
    }
    alpha = control_from_json(json.dumps(doc))
    assert alpha.values[0] == (Fraction(1, 5), Fraction(4, 5))
    assert alpha.values[1] == (Fraction(3, 10), Fraction(7, 10))


def test_control_json_row_major_order():
    rows = [["1", "0"], ["0", "1"], ["1/2", "1/2"], ["1/4", "3/4"]]
    doc = {
        "domain": {"origin": ["0", "0"], "lengths": ["1", "1"]},
        "M": 2,
        "L": 1,
        "order": "row-major",
        "alpha": rows,
    }
    alpha = control_from_json(json.dumps(doc))
    # row-major runs the last axis fastest: position 2 holds index (1, 0),
    # which is Morton key 1
    assert alpha.values[0] == (Fraction(1), Fraction(0))
    assert alpha.values[1] == (Fraction(1, 2), Fraction(1, 2))
    assert alpha.values[2] == (Fraction(0), Fraction(1))
    assert alpha.values[3] == (Fraction(1, 4), Fraction(3, 4))


def test_control_json_mask_coerces_inactive_cells():
    doc = {
        "domain": {"origin": ["0"], "lengths": ["1"]},
        "M": 2,
        "L": 1,
        "alpha": [["1/2", "1/2"], ["1/3", "2/3"]],
        "mask": [0, 1],
    }
    alpha = control_from_json(json.dumps(doc))
    assert alpha.values[0] == (Fraction(1), Fraction(0))
    assert alpha.values[1] == (Fraction(1, 3), Fraction(2, 3))


def test_control_json_rejects_bad_documents():
    base = {
        "domain": {"origin": ["0"], "lengths": ["1"]},
        "M": 2,
        "L": 1,
        "alpha": [["1/2", "1/2"], ["1/3", "2/3"]],
    }
    wrong_order = dict(base, order="column-major")
    with pytest.raises(ValueError):
        control_from_json(json.dumps(wrong_order))
    wrong_dim = dict(base, domain={"dim": 2, "origin": ["0"], "lengths": ["1"]})
    with pytest.raises(ValueError):
        control_from_json(json.dumps(wrong_dim))
    wrong_rows = dict(base, alpha=[["1/2", "1/2"]])
    with pytest.raises(ValueError):
        control_from_json(json.dumps(wrong_rows))
    wrong_mask = dict(base, mask=[1])
    with pytest.raises(ValueError):
        control_from_json(json.dumps(wrong_mask))


def test_binary_json_round_trip():
    omega = BinaryControl(3, (0, 2, 1, 1))
    assert binary_from_json(binary_to_json(omega)) == omega


def test_binary_to_field_respects_depth():
    grid = split_cell(initial_grid(unit_domain(1), 1), 0)
    omega = BinaryControl(2, (0, 1, 1))
    lifted = binary_to_field(omega, grid, depth=3)
    assert lifted.depth == 3
    for n, cell in enumerate(grid.cells):
        assert binary_cell_mode(lifted, cell) == omega.modes[n]
