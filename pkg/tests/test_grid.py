"""Geometry layer: Morton ordering, splitting, adjacency, serialization."""

import math
import random
from fractions import Fraction

import pytest

from ciagrid.grid import (
    Cell,
    Domain,
    adjacency,
    as_fraction,
    cell_box,
    cell_volume,
    grid_from_json,
    grid_to_json,
    initial_grid,
    load_grid,
    morton_index,
    morton_key,
    regularity_constant,
    save_grid,
    scaled_box,
    split_adjacency,
    split_cell,
    validate_grid,
    verify_admissible,
)
from ciagrid.instances import random_grid, unit_domain

from helpers import box_of, box_volume, decode_axes, facet_interface

SKEW = Domain((Fraction(-1), Fraction(1, 2)), (Fraction(2), Fraction(3, 2)))


def test_as_fraction_decimal_semantics():
    assert as_fraction(0.6) == Fraction(3, 5)
    assert as_fraction("0.1") == Fraction(1, 10)
    assert as_fraction("3/5") == Fraction(3, 5)
    assert as_fraction(2) == Fraction(2)
    third = Fraction(1, 3)
    assert as_fraction(third) is third


def test_morton_key_frozen_values():
    # axis 0 owns the least significant bit
    assert morton_key((0, 0), 1) == 0
    assert morton_key((1, 0), 1) == 1
    assert morton_key((0, 1), 1) == 2
    assert morton_key((1, 1), 1) == 3
    assert morton_key((1, 0, 1), 1) == 5
    assert morton_key((3, 2), 2) == 0b1101


def test_morton_round_trip():
    for dim in (1, 2, 3):
        for depth in range(4):
            for key in range(2 ** (dim * depth)):
                index = morton_index(key, depth, dim)
                assert index == decode_axes(key, depth, dim)
                assert morton_key(index, depth) == key


def test_initial_grid_layout():
    g = initial_grid(unit_domain(2), 1)
    assert g.generation == 0
    assert [c.index for c in g.cells] == [(0, 0), (1, 0), (0, 1), (1, 1)]
    validate_grid(g)
    deep = initial_grid(SKEW, 2)
    assert len(deep.cells) == 16
    validate_grid(deep)
    assert sum(cell_volume(SKEW, c) for c in deep.cells) == SKEW.volume


def test_split_cell_children_tile_parent():
    g = initial_grid(unit_domain(2), 1)
    parent = g.cells[2]
    plo, phi = box_of(g.domain, parent)
    g2 = split_cell(g, 2)
    assert g2.generation == g.generation + 1
    assert len(g2.cells) == 7
    assert g2.cells[:2] == g.cells[:2]
    assert g2.cells[-1] == g.cells[-1]
    children = g2.cells[2:6]
    assert all(c.depth == parent.depth + 1 for c in children)
    # children arrive in Morton order and tile the parent exactly
    keys = [morton_key(c.index, c.depth) for c in children]
    assert keys == sorted(keys)
    total = Fraction(0)
    for child in children:
        clo, chi = box_of(g.domain, child)
        assert all(a <= b and c <= d for a, b, c, d in zip(plo, chi, clo, phi))
        total += box_volume(clo, chi)
    assert total == box_volume(plo, phi)
    validate_grid(g2)


def test_split_sequences_stay_valid():
    rng = random.Random(71)
    for dim in (1, 2, 3):
        g = initial_grid(unit_domain(dim), 1)
        for _ in range(8):
            g = split_cell(g, rng.randrange(len(g.cells)))
            validate_grid(g)
            assert verify_admissible(g) == g.domain.volume / 2 ** (dim * g.depth_max())


def test_split_rejects_bad_index():
    g = initial_grid(unit_domain(1), 1)
    with pytest.raises(IndexError):
        split_cell(g, 5)


def test_cell_box_against_direct_arithmetic():
    rng = random.Random(9)
    for _ in range(40):
        dim = rng.choice((1, 2))
        domain = rng.choice((unit_domain(dim), SKEW if dim == 2 else unit_domain(1)))
        depth = rng.randrange(4)
        index = tuple(rng.randrange(2**depth) for _ in range(dim))
        cell = Cell(depth, index)
        assert cell_box(domain, cell) == box_of(domain, cell)
        assert cell_volume(domain, cell) == box_volume(*box_of(domain, cell))


def test_scaled_box_integer_corners():
    lo, hi = scaled_box(Cell(1, (1, 0)), 3)
    assert (lo, hi) == ((4, 0), (8, 4))
    lo, hi = scaled_box(Cell(2, (3,)), 2)
    assert (lo, hi) == ((3,), (4,))


def test_adjacency_matches_facet_geometry():
    rng = random.Random(23)
    for dim in (1, 2, 3):
        grids = [initial_grid(unit_domain(dim), 1), initial_grid(unit_domain(dim), 2)]
        for seed in range(4):
            grids.append(
                random_grid(random.Random(100 * dim + seed), unit_domain(dim), 3, 5)
            )
        if dim == 2:
            grids.append(random_grid(rng, SKEW, 3, 6))
        for g in grids:
            pairs = {(i, j): f for i, j, f in adjacency(g).pairs}
            for i in range(len(g.cells)):
                for j in range(i + 1, len(g.cells)):
                    oracle = facet_interface(g.domain, g.cells[i], g.cells[j])
                    assert pairs.get((i, j), Fraction(0)) == oracle, (g.domain, i, j)
            assert all(i < j for i, j in pairs)


def test_split_adjacency_matches_recompute():
    rng = random.Random(5)
    for dim in (1, 2, 3):
        g = initial_grid(unit_domain(dim), 1)
        adj = adjacency(g)
        for _ in range(10):
            n = rng.randrange(len(g.cells))
            g2 = split_cell(g, n)
            adj = split_adjacency(g, adj, n)
            assert set(adj.pairs) == set(adjacency(g2).pairs)
            g = g2


def test_validate_grid_rejects_disorder():
    g = initial_grid(unit_domain(2), 1)
    shuffled = type(g)(g.domain, (g.cells[1], g.cells[0]) + g.cells[2:], g.generation)
    with pytest.raises(ValueError):
        validate_grid(shuffled)
    short = type(g)(g.domain, g.cells[:-1], g.generation)
    with pytest.raises(ValueError):
        validate_grid(short)
    doubled = type(g)(g.domain, g.cells[:1] + g.cells, g.generation)
    with pytest.raises(ValueError):
        validate_grid(doubled)


def test_grid_json_round_trip(tmp_path):
    g = random_grid(random.Random(3), SKEW, 3, 5)
    assert grid_from_json(grid_to_json(g)) == g
    path = tmp_path / "grid.json"
    save_grid(g, path)
    assert load_grid(path) == g
    # exact rationals survive the text form
    assert grid_from_json(grid_to_json(g)).domain.origin == (Fraction(-1), Fraction(1, 2))


def test_regularity_constant_values():
    assert abs(regularity_constant(unit_domain(1)) - 1.0) < 1e-12
    assert abs(regularity_constant(unit_domain(2)) - 2.0 / math.pi) < 1e-12
    slab = Domain((Fraction(0), Fraction(0)), (Fraction(4), Fraction(1)))
    assert regularity_constant(slab) < regularity_constant(unit_domain(2))
