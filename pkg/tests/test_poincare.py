import csv
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilbox.cli import load_system
from nilbox.poincare import (
    Indeterminate,
    ReturnMapError,
    analyze_focus,
    cyclicity_bound,
    focus_conditions,
    k_from_dimension,
    k_from_exponent,
    poincare_sequence,
    return_map,
    write_displacement_csv,
    write_sequence_csv,
)
from nilbox.series import TruncSeries2
from nilbox.system_model import PlanarSystem, char_data, system_from_terms


def linear(delta):
    # x' = -d x + y, y' = -x - d y: one turn multiplies the radius by exp(-2 pi d)
    d = Fraction(delta)
    xdot = TruncSeries2({k: v for k, v in {(1, 0): -d, (0, 1): Fraction(1)}.items() if v}, 4)
    ydot = TruncSeries2({k: v for k, v in {(1, 0): Fraction(-1), (0, 1): -d}.items() if v}, 4)
    return PlanarSystem(xdot, ydot, 4, {}, True, "linear")


def test_linear_center_returns_to_start():
    s = linear(0)
    for x in (0.05, 0.2, -0.1):
        assert return_map(s, None, x) == pytest.approx(x, rel=1e-9)


@pytest.mark.parametrize("delta", ["1/100", "1/20"])
def test_linear_focus_contraction(delta):
    s = linear(delta)
    q = math.exp(-2 * math.pi * float(Fraction(delta)))
    assert return_map(s, None, 0.3) == pytest.approx(0.3 * q, rel=1e-8)
    assert return_map(s, None, 0.3, inverse=True) == pytest.approx(0.3 / q, rel=1e-8)


def test_geometric_sequence_has_dimension_zero():
    seq = poincare_sequence(linear("1/50"), None, 0.3, N=60)
    assert seq.warnings == []
    assert np.allclose(seq.points[1:] / seq.points[:-1], math.exp(-2 * math.pi / 50), rtol=1e-7)


def test_center_is_refused():
    seq = poincare_sequence(linear(0), None, 0.2, N=10, inverse=False)
    assert "center-like, no dimension claim" in seq.warnings
    with pytest.raises(Indeterminate):
        analyze_focus(linear(0), None, x1=0.2, N=10)


def test_focus_conditions():
    assert focus_conditions(char_data(load_system("focus_flat")))["holds"]
    assert not focus_conditions(char_data(load_system("focus_curved")))["holds"]
    assert not focus_conditions(char_data(load_system("example1")))["holds"]
    # b^2 - 4 n a >= 0 fails the test: y' = -x^3 - 3 x^2 y gives b = 3, n = 2, a = 1
    cond = focus_conditions(char_data(system_from_terms([(0, 1, 1)], [(3, 0, -1), (1, 1, -3)])))
    assert not cond["holds"] and cond["reason"] == "discriminant >= 0"


@pytest.mark.parametrize("j, k", [(1, 0), (2, 0), (3, 1), (4, 1), (5, 2), (6, 2), (9, 4)])
def test_k_from_exponent(j, k):
    assert k_from_exponent(j) == k


@pytest.mark.parametrize("j", [2, 3, 4, 5, 6])
def test_k_from_dimension_table(j):
    k, pattern = k_from_dimension(1 - 1 / j + 0.01)
    assert k == (j - 1) // 2
    assert pattern == ("2k+1" if j % 2 else "2k+2")


def test_indeterminate_cases():
    with pytest.raises(Indeterminate):
        k_from_exponent(0)
    with pytest.raises(Indeterminate):
        k_from_dimension(0.58)  # between 1/2 and 2/3


def test_return_map_errors():
    with pytest.raises(ValueError):
        return_map(linear(0), None, 0.0)
    with pytest.raises(ReturnMapError):
        return_map(linear("-1/10"), None, 0.5, guard=0.6)


@pytest.fixture(scope="module")
def flat_fit():
    s = load_system("focus_flat")
    return analyze_focus(s, char_data(s).f.truncate(12), x1=0.2, N=200)


def test_flat_focus_is_consistent(flat_fit):
    assert flat_fit.direction == "forward"
    assert flat_fit.fitted_exp == pytest.approx(2, abs=0.1)
    assert flat_fit.k_disp == 0 and flat_fit.k_dim == 0
    assert flat_fit.consistent and cyclicity_bound(flat_fit) == 0
    assert flat_fit.seq_dim.estimate == pytest.approx(0.5, abs=0.04)
    d = flat_fit.to_dict()
    assert d["consistent"] and d["displacement"]["k"] == 0


def test_csv_writers(flat_fit, tmp_path):
    write_sequence_csv(tmp_path / "seq.csv", flat_fit.sequence)
    write_displacement_csv(tmp_path / "disp.csv", flat_fit)
    rows = list(csv.reader((tmp_path / "seq.csv").open()))
    assert rows[0] == ["k", "x"] and len(rows) == 201
    assert float(rows[1][1]) == 0.2
    rows = list(csv.reader((tmp_path / "disp.csv").open()))
    assert rows[0] == ["x0", "P(x0)-x0"] and len(rows) == 10
    assert all(float(r[1]) < 0 for r in rows[1:])


@settings(max_examples=6)
@given(st.floats(0.02, 0.2), st.floats(0.02, 0.2))
def test_return_map_is_monotone(a, b):
    s = load_system("focus_flat")
    f = char_data(s).f.truncate(12)
    if abs(a - b) < 1e-3:
        return
    pa, pb = return_map(s, f, a), return_map(s, f, b)
    assert (pa - pb) * (a - b) > 0
    assert 0 < pa < a and 0 < pb < b
