import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from friedelsum.errors import ParseError, ValidationError
from friedelsum.potential import (
    Potential,
    load_potential,
    parse_potential_file,
    serialize_potential,
    square_well,
    zero_potential,
)

WELL_DOC = """# attractive square well
kind = piecewise_constant
pieces = [(1.0, -5.0)]
"""

SHELL_DOC = """kind = piecewise_constant
support_radius = 2.0
pieces = [
    (0.5, 0.0),   # inner core empty
    (2.0, -3.0),
]
"""

TAB_DOC = """kind = tabulated
support_radius = 1.5
samples = [(0.0, -4.0), (0.5, -3.0), (1.0, -1.0), (1.5, 0.0)]
"""


def test_square_well_values():
    v = parse_potential_file(WELL_DOC)
    assert v.support_radius == 1.0
    assert v(0.3) == -5.0
    assert v(1.0) == 0.0
    assert v(7.0) == 0.0
    assert v.bound == 5.0
    assert v == square_well(-5.0, 1.0)


def test_multiline_pieces_and_comments():
    v = parse_potential_file(SHELL_DOC)
    assert v(0.2) == 0.0 and v(1.0) == -3.0 and v(2.5) == 0.0
    assert v.integral_abs() == pytest.approx(4.5)


def test_tabulated_is_continuous_and_vanishes_outside():
    v = parse_potential_file(TAB_DOC)
    r = np.linspace(0, 3, 301)
    vals = v.evaluate(r)
    assert vals[0] == -4.0
    assert np.all(vals[r >= 1.5] == 0.0)
    assert np.max(np.abs(np.diff(vals))) < 0.1


def test_on_grid_averages_at_jumps():
    v = square_well(-5.0, 1.0)
    r = np.linspace(0, 2, 5)
    assert list(v.on_grid(r)) == [-5.0, -5.0, -2.5, 0.0, 0.0]
    assert list(v.jumps_on_grid(r)) == [0.0, 0.0, 5.0, 0.0, 0.0]


def test_aligned_step_puts_breakpoints_on_grid():
    v = parse_potential_file(SHELL_DOC)
    h = v.aligned_step(0.013)
    assert h <= 0.013
    for b in (0.5, 2.0):
        assert abs(b / h - round(b / h)) < 1e-9


@pytest.mark.parametrize(
    "doc, line",
    [
        ("kind = piecewise_constant\npieces = [(1.0, -5.0)\n", 2),
        ("kind = piecewise_constant\npieces = 3\n", 2),
        ("kind = piecewise_constant\n\ncolor = red\npieces = [(1.0, 1.0)]\n", 3),
        ("kind = piecewise_constant\nthis is not a pair\n", 2),
        ("kind = piecewise_constant\npieces = [(1.0, 1.0)]\npieces = [(1.0, 1.0)]\n", 3),
    ],
)
def test_parse_errors_carry_line_numbers(doc, line):
    with pytest.raises(ParseError, match=f"line {line}:"):
        parse_potential_file(doc)


@pytest.mark.parametrize(
    "doc",
    [
        "kind = piecewise_constant\nsupport_radius = 1.0\npieces = [(2.0, -1.0)]\n",  # non-compact
        "kind = piecewise_constant\npieces = [(1.0, inf)]\n",
        "kind = piecewise_constant\npieces = [(2.0, -1.0), (1.0, 2.0)]\n",
        "kind = tabulated\nsupport_radius = 1.0\nsamples = [(0.0, -1.0), (1.0, -0.5)]\n",
        "kind = tabulated\nsamples = [(0.0, -1.0), (1.0, 0.0)]\n",
        "kind = nonsense\npieces = [(1.0, 1.0)]\n",
        "pieces = [(1.0, 1.0)]\n",
    ],
)
def test_inadmissible_potentials_rejected(doc):
    with pytest.raises(ValidationError):
        parse_potential_file(doc)


def test_constructor_validates():
    with pytest.raises(ValidationError):
        Potential("piecewise_constant", ((1.0, math.nan),), 1.0)
    with pytest.raises(ValidationError):
        square_well(-1.0, 0.0)


def test_zero_potential():
    v = zero_potential(2.0)
    assert v.is_zero and v.bound == 0.0 and v(0.5) == 0.0


def test_load_from_file(tmp_path):
    p = tmp_path / "w.cfg"
    p.write_text(WELL_DOC, encoding="utf-8")
    assert load_potential(p) == square_well(-5.0, 1.0)


finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(
    widths=st.lists(st.floats(0.01, 3.0), min_size=1, max_size=5),
    values=st.lists(finite, min_size=5, max_size=5),
    extra=st.floats(0.0, 1.0),
)
def test_serialize_round_trip(widths, values, extra):
    edges = np.cumsum(widths)
    pts = tuple((float(e), float(val)) for e, val in zip(edges, values))
    v = Potential("piecewise_constant", pts, float(edges[-1] + extra))
    w = parse_potential_file(serialize_potential(v))
    assert w == v
    r = np.linspace(0, edges[-1] + extra + 1, 97)
    assert np.array_equal(w.evaluate(r), v.evaluate(r))
