from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from nilbox.classifier import Kind, classify
from nilbox.cusp_infinity import (
    chart2_orbit,
    chart2_transform,
    chart_transform,
    correction_exponent,
    cusp_dimensions,
    cusp_normal_data,
    reflect,
    separatrix_orbit,
    separatrix_series,
)
from nilbox.fractal import fit_exponent
from nilbox.series import norm, substitute_y
from nilbox.system_model import InputError, char_data, flatten, system_from_terms

U, V, X, Y = sympy.symbols("u v x y")


def _is_zero(c) -> bool:
    return sympy.simplify(sympy.sympify(c)) == 0 if not isinstance(c, (int, Fraction)) else c == 0


def _invariance_residual(sys_, sep):
    """X(u, g) g' - V(u, g) on the flattened field, computed independently of the solver."""
    cd = char_data(sys_)
    fl = flatten(sys_, cd)
    g = sep.flat
    return substitute_y(fl.xdot, g).mul(g.derivative()) - substitute_y(fl.ydot, g)


@settings(max_examples=10)
@given(st.sampled_from([1, 2, 3]), st.sampled_from([-2, -1, 1, 2]), st.sampled_from([Fraction(1), Fraction(2), Fraction(1, 2)]))
def test_cusp_separatrix_solves_invariance(n, b, a):
    s = system_from_terms([(0, 1, 1)], [(2, 0, a), (n, 1, b)])
    for sep in separatrix_series(s):
        assert sep.side == 1
        r = _invariance_residual(s, sep)
        limit = sep.flat.order + sep.gamma - 1
        for e, c in r.terms():
            if e < limit:
                assert _is_zero(c), (e, c)
        assert _is_zero(sympy.sympify(sep.leading_coeff) ** 2 - sympy.Rational(2 * a.numerator, 3 * a.denominator))


def test_cusp_leading_coefficient_is_exact():
    s = system_from_terms([(0, 1, 1)], [(2, 0, 1)])
    seps = separatrix_series(s)
    assert {sep.branch for sep in seps} == {"stable", "unstable"}
    assert {sympy.sympify(sep.leading_coeff) for sep in seps} == {sympy.sqrt(sympy.Rational(2, 3)), -sympy.sqrt(sympy.Rational(2, 3))}
    assert all(sep.gamma == Fraction(3, 2) for sep in seps)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cusp_correction_exponent(n):
    s = system_from_terms([(0, 1, 1)], [(2, 0, 1), (n, 1, 1)])
    for sep in separatrix_series(s):
        assert correction_exponent(sep) == n + 1


def test_negative_a_uses_reflection():
    s = system_from_terms([(0, 1, 1)], [(2, 0, -1), (1, 1, 1)])
    seps = separatrix_series(s)
    assert all(sep.side == -1 for sep in seps)
    r = reflect(s)
    assert r.ydot[(2, 0)] == 1 and r.ydot[(1, 1)] == -1
    # the curve is invariant for the original field: slope matches y'/x'
    rhs = s.vector_field()
    for sep in seps:
        x = -0.01
        h = 1e-6
        slope = (sep.evaluate(x + h) - sep.evaluate(x - h)) / (2 * h)
        dx, dy = rhs(0, [x, sep.evaluate(x)])
        assert slope == pytest.approx(dy / dx, rel=1e-3)


def test_node_roots_example1():
    s = system_from_terms([(0, 1, 1)], [(5, 0, -1), (2, 1, -4)])
    seps = separatrix_series(s)
    assert sorted(sep.leading_coeff for sep in seps) == [-1, Fraction(-1, 3)]
    assert all(sep.gamma == 3 for sep in seps)


def test_node_separatrix_example2():
    s = system_from_terms([(0, 1, 1), (2, 0, 1), (1, 2, 1)], [(3, 0, -2), (1, 1, -2), (0, 3, 2)], K=12)
    seps = separatrix_series(s, order=11)
    series = [sep.series.truncate(11) for sep in seps]
    terms = [dict(s_.terms()) for s_ in series]
    assert {Fraction(2): -1, Fraction(5): Fraction(-3, 5), Fraction(8): Fraction(-6, 5)} in terms
    for sep in seps:
        r = _invariance_residual(s, sep)
        assert all(c == 0 for e, c in r.terms() if e < 11 + sep.gamma - 1)


def test_separatrix_rejects_focus():
    s = system_from_terms([(0, 1, 1)], [(3, 0, -1), (2, 1, -1)])
    with pytest.raises(InputError):
        separatrix_series(s)


def test_cusp_closed_forms():
    assert cusp_dimensions(2) == (Fraction(1, 3), Fraction(1, 4), Fraction(1, 3))
    assert cusp_dimensions(4) == (Fraction(3, 5), Fraction(3, 8), Fraction(3, 5))
    with pytest.raises(ValueError):
        cusp_dimensions(3)


def test_separatrix_orbit_stays_on_curve():
    s = system_from_terms([(0, 1, 1)], [(2, 0, 1), (1, 1, -1)])
    for sep in separatrix_series(s):
        orb = separatrix_orbit(s, sep, x0=0.3, N=500)
        x, y = orb.points[:, 0], orb.points[:, 1]
        g = np.array([sep.evaluate(t) for t in x])
        tail = slice(len(x) // 2, None)
        assert np.max(np.abs(y[tail] - g[tail]) / np.abs(g[tail])) < 1e-2


def _sym_field(sys_):
    P = sum(sympy.Rational(c.numerator, c.denominator) * X**i * Y**j for (i, j), c in sys_.xdot)
    Q = sum(sympy.Rational(c.numerator, c.denominator) * X**i * Y**j for (i, j), c in sys_.ydot)
    return P, Q


def _poly(p: dict):
    return sum(sympy.Rational(c.numerator, c.denominator) * U**i * V**j for (i, j), c in p.items())


@pytest.mark.parametrize("chart", [1, 2])
@pytest.mark.parametrize("terms", [[(2, 0, 1), (1, 1, 1)], [(2, 0, -1), (2, 1, 3)], [(2, 0, 1), (3, 1, -1)], [(5, 0, -1), (2, 1, -4)]])
def test_chart_transform_matches_direct_substitution(chart, terms):
    s = system_from_terms([(0, 1, 1)], terms)
    ch = chart_transform(s, chart)
    P, Q = _sym_field(s)
    if chart == 2:  # u = x/y, v = 1/y
        ud, vd = (P * Y - X * Q) / Y**2, -Q / Y**2
        sub = {X: U / V, Y: 1 / V}
    else:  # u = y/x, v = 1/x
        ud, vd = (Q * X - Y * P) / X**2, -P / X**2
        sub = {X: 1 / V, Y: U / V}
    ud, vd = sympy.simplify(ud.subs(sub)), sympy.simplify(vd.subs(sub))
    ou, ov = _poly(ch.udot), _poly(ch.vdot)
    factor = sympy.simplify(ou / ud)
    assert sympy.simplify(ov - factor * vd) == 0
    # the factor is a monomial v^k u^l
    assert sympy.Poly(sympy.numer(factor), U, V).is_monomial and sympy.Poly(sympy.denom(factor), U, V).is_monomial


@pytest.mark.parametrize("m, n", [(2, 1), (2, 2), (2, 3), (4, 3), (4, 5)])
@pytest.mark.parametrize("a, b", [(1, 1), (1, -1), (-2, 3)])
def test_chart2_normal_form(m, n, a, b):
    s = system_from_terms([(0, 1, 1)], [(m, 0, a), (n, 1, b)])
    ch = chart_transform(s, 2)
    # u' = v^n - a u^(m+1) v^(n+1-m) - b u^(n+1),  v' = -a u^m v^(n+2-m) - b u^n v
    assert ch.udot == {(0, n): 1, (m + 1, n + 1 - m): -a, (n + 1, 0): -b}
    assert ch.vdot == {(m, n + 2 - m): -a, (n, 1): -b}


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_infinity_dimensions_and_multiplicity(n):
    s = system_from_terms([(0, 1, 1)], [(2, 0, 1), (n, 1, 1)])
    inf = chart2_transform(s)
    assert inf.chart2_dim == Fraction(n, n + 1)
    assert inf.multiplicity_at_infinity == n // 2
    assert inf.chart1_semi_hyperbolic
    assert sorted(inf.chart1_eigenvalues) == [0.0, 1.0]


@pytest.mark.parametrize("n, b", [(1, 1), (2, -1), (3, 1), (2, 1)])
def test_chart2_orbit_dimension(n, b):
    s = system_from_terms([(0, 1, 1)], [(2, 0, 1), (n, 1, b)])
    inf = chart2_transform(s)
    orb = chart2_orbit(inf, u0=0.3, N=1500)
    assert fit_exponent(orb.projection(0)).estimate == pytest.approx(n / (n + 1), abs=0.05)


def test_infinity_input_checks():
    with pytest.raises(InputError):
        cusp_normal_data(system_from_terms([(0, 1, 1)], [(5, 0, -1), (2, 1, -4)]))
    with pytest.raises(InputError):
        cusp_normal_data(system_from_terms([(0, 1, 1)], [(4, 0, 1), (2, 1, 1)]))
    with pytest.raises(InputError):
        cusp_normal_data(system_from_terms([(0, 1, 1), (2, 0, 1)], [(2, 0, 1), (1, 1, 1)]))
    with pytest.raises(InputError):
        cusp_normal_data(system_from_terms([(0, 1, 1)], [(2, 0, 1)]))


def test_classify_reflected_cusp():
    s = system_from_terms([(0, 1, 1)], [(2, 0, -1), (1, 1, 1)])
    assert classify(char_data(reflect(s))).kind == Kind.CUSP
    assert norm(Fraction(3, 1)) == 3
