import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nilbox.fractal import (
    OrbitSample,
    OrbitWarning,
    fit_exponent,
    generate_orbit,
    grid_boxcount_dimension,
    interval_union_dimension,
    joint_power_dimension,
    seeded_orbit,
    spiral_boxcount_dimension,
    synthetic_sequence,
    separatrix_branch,
    separatrix_dimensions,
    write_ladder_csv,
    write_orbit_csv,
)
from nilbox.series import INF
from nilbox.system_model import system_from_terms


@settings(max_examples=12)
@given(st.floats(1.3, 6.0))
def test_exponent_fit_recovers_alpha(alpha):
    seq = synthetic_sequence(alpha, x0=0.5, N=5000)
    rep = fit_exponent(seq)
    assert rep.exponent == pytest.approx(alpha, abs=0.02)
    assert rep.estimate == pytest.approx(1 - 1 / alpha, abs=0.01)


@settings(max_examples=12)
@given(st.floats(1.4, 5.0), st.floats(0.1, 10.0))
def test_interval_union_is_scale_invariant(alpha, scale):
    seq = synthetic_sequence(alpha, x0=0.5, N=4000)
    a = interval_union_dimension(seq).estimate
    b = interval_union_dimension(seq.points * scale).estimate
    assert a == pytest.approx(b, abs=1e-6)
    assert a == pytest.approx(1 - 1 / alpha, abs=0.03)


@settings(max_examples=8)
@given(st.floats(1.5, 4.0), st.floats(1.5, 4.0))
def test_joint_dimension_follows_slower_sequence(a, b):
    xs = synthetic_sequence(a, N=3000).points
    ys = synthetic_sequence(b, N=3000).points
    est = grid_boxcount_dimension(np.column_stack([xs, ys])).estimate
    assert est == pytest.approx(joint_power_dimension(a, b), abs=0.05)


def test_estimators_reject_bad_sequences():
    with pytest.raises(ValueError):
        fit_exponent(np.array([0.5, 0.4, 0.45, 0.3] * 20))
    with pytest.raises(ValueError):
        interval_union_dimension(np.linspace(1, 0.5, 10))
    with pytest.raises(ValueError):
        grid_boxcount_dimension(np.zeros((10, 3)))


def test_geometric_sequence_has_dimension_zero():
    seq = 0.5 * 0.9 ** np.arange(300)
    rep = fit_exponent(seq)
    assert rep.estimate < 0.05


def test_fixed_ladder_shrinks_with_warning():
    seq = synthetic_sequence(2.0, x0=0.5, N=500)
    with pytest.warns(OrbitWarning):
        rep = interval_union_dimension(seq, eps0=0.125, levels=30)
    assert "shrunk" in rep.note
    assert rep.ladder[-1][0] >= -np.diff(seq.points)[-1]


def test_spiral_estimator_on_a_power_spiral():
    # r = theta^(-1/2) has box dimension 2/(1 + 1/2) = 4/3; both orientations
    th = np.linspace(2 * np.pi, 160 * np.pi, 16000)
    r = 0.2 * (th / (2 * np.pi)) ** -0.5
    for sign in (1, -1):
        pts = np.column_stack([r * np.cos(sign * th), r * np.sin(sign * th)])
        assert spiral_boxcount_dimension(pts, levels=4).estimate == pytest.approx(4 / 3, abs=0.1)


def test_joint_power_exact():
    assert joint_power_dimension(3, 2) == Fraction(2, 3)
    assert joint_power_dimension(Fraction(5, 2), 2) == Fraction(3, 5)
    with pytest.raises(ValueError):
        joint_power_dimension(1, 2)


def test_separatrix_closed_forms():
    # m <= n + 1 branch (cusp, gamma = 3/2, m = 2)
    assert separatrix_dimensions(2, 1, Fraction(3, 2)) == (Fraction(1, 3), Fraction(1, 4), Fraction(1, 3))
    assert separatrix_dimensions(2, INF, Fraction(3, 2))[2] == Fraction(1, 3)
    # m > n + 1 branch (node, gamma = n + 1)
    assert separatrix_dimensions(5, 2, 3) == (Fraction(2, 3), Fraction(2, 5), Fraction(2, 3))
    assert separatrix_dimensions(9, 4, 5) == (Fraction(4, 5), Fraction(4, 9), Fraction(4, 5))
    # the y-branch of the joint dimension
    assert separatrix_dimensions(10, 9, Fraction(3, 1))[2] == Fraction(7, 10)
    assert separatrix_branch(9, 4, 5).startswith("m>n+1, gamma>=")
    with pytest.raises(ValueError):
        separatrix_dimensions(5, 2, 6)


@given(st.integers(3, 12), st.integers(1, 12), st.fractions(Fraction(7, 6), 12, max_denominator=6))
def test_joint_is_max_of_projections(m, n, g):
    assume(1 < g < m)
    dx, dy, joint = separatrix_dimensions(m, n, g)
    assert joint == max(dx, dy)
    assert 0 < dx < 1 and 0 <= dy < 1


def test_orbit_generation_modes_agree_near_origin():
    s = system_from_terms([(0, 1, 1)], [(5, 0, -1), (2, 1, -4)])
    x0 = 0.05
    start = (x0, -x0**3 / 3)
    a = generate_orbit(s, start, N=60)
    b = generate_orbit(s, start, N=60, mode="truncated_map", K_u=9)
    assert np.max(np.abs(a.points - b.points)) < 1e-9
    with pytest.raises(ValueError):
        generate_orbit(s, start, N=10)
    with pytest.raises(ValueError):
        generate_orbit(s, start, N=60, mode="other")


def test_escape_is_reported():
    s = system_from_terms([(0, 1, 1)], [(2, 0, 1)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        orb = generate_orbit(s, (0.5, 0.5), N=100)
    assert any("guard" in w for w in orb.warnings)


def test_seeded_orbit_is_monotone():
    s = system_from_terms([(0, 1, 1)], [(2, 0, 1)])
    c = np.sqrt(2 / 3)
    orb = seeded_orbit(s, (1e-3, -c * 1e-3**1.5), 0.3)
    ax = np.abs(orb.points[:, 0])
    assert np.all(np.diff(ax) < 0) and ax[0] <= 0.3


def test_csv_writers(tmp_path):
    seq = synthetic_sequence(2.0, N=100)
    write_orbit_csv(tmp_path / "a.csv", seq)
    rep = interval_union_dimension(seq)
    write_ladder_csv(tmp_path / "b.csv", rep)
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "k,x"
    assert len((tmp_path / "b.csv").read_text().splitlines()) == len(rep.ladder) + 1
    pts = OrbitSample(np.column_stack([seq.points, seq.points]), "synthetic", (0.5, 0.5))
    write_orbit_csv(tmp_path / "c.csv", pts)
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "k,x,y"
