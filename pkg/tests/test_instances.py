"""Bundled generators: determinism, validity, suite composition."""

import random
from fractions import Fraction

from ciagrid.grid import validate_grid
from ciagrid.instances import (
    SuiteEntry,
    bundled_suite,
    checkerboard,
    constant_blend,
    helmholtz_slice,
    linear_front,
    radial_bump,
    random_field,
    random_grid,
    smooth_suite,
    unit_domain,
)

F = Fraction


def test_generators_are_deterministic():
    a = random_field(random.Random(42), unit_domain(2), 3, 2)
    b = random_field(random.Random(42), unit_domain(2), 3, 2)
    assert a == b
    g1 = random_grid(random.Random(7), unit_domain(2), 3, 5)
    g2 = random_grid(random.Random(7), unit_domain(2), 3, 5)
    assert g1 == g2
    assert random_field(random.Random(43), unit_domain(2), 3, 2) != a


def test_random_grid_shape():
    for dim in (1, 2, 3):
        for splits in (0, 3, 6):
            g = random_grid(random.Random(dim * 10 + splits), unit_domain(dim), 3, splits)
            validate_grid(g)
            assert len(g.cells) == 1 + splits * (2**dim - 1)
            assert g.depth_max() <= 3


def test_analytic_fields_are_valid_and_typed():
    # ControlField construction enforces exact simplex rows, so building
    # each generator output is itself the validity check
    front = linear_front(3, F(1, 4), F(9, 16))
    assert front.domain.dim == 2 and front.depth == 3
    bump = radial_bump(3, inner=F(1, 8), outer=F(3, 8))
    assert bump.num_modes == 2
    checker = checkerboard(3)
    assert checker.depth == 3
    blend = constant_blend(unit_domain(2), 2, (F(1, 3), F(2, 3)))
    assert set(blend.values) == {(F(1, 3), F(2, 3))}
    waves = helmholtz_slice()
    assert waves.domain.dim == 2 and waves.num_modes == 3


def test_linear_front_has_a_transition_band():
    front = linear_front(2, F(0), F(9, 16))
    fractional = [row for row in front.values if 0 < row[0] < 1]
    binary = [row for row in front.values if row[0] in (0, 1)]
    assert fractional and binary


def test_random_field_mixes_binary_and_fractional_rows():
    alpha = random_field(random.Random(3), unit_domain(2), 2, 3, binary_share=F(1, 2))
    binary_rows = sum(1 for row in alpha.values if max(row) == 1)
    assert 0 < binary_rows < len(alpha.values)


def test_smooth_suite_composition():
    entries = smooth_suite()
    assert len(entries) == 12
    assert len({e.name for e in entries}) == 12
    for entry in entries:
        assert isinstance(entry, SuiteEntry)
        assert entry.smooth
        assert entry.alpha.domain.dim == 2
        assert entry.alpha.depth == 4
        assert entry.delta in (F(1, 16), F(1, 64))
    assert sum(1 for e in entries if e.delta == F(1, 64)) == 4


def test_bundled_suite_composition():
    entries = bundled_suite()
    assert [e.name for e in entries] == [
        "front-gentle",
        "front-tilted",
        "bump",
        "checker",
        "waves",
    ]
    assert [e.smooth for e in entries] == [True, True, True, False, False]
    assert all(e.delta > 0 for e in entries)
