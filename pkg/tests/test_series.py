from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from nilbox.series import INF, PuiseuxSeries1, TPolySeries2, TruncSeries2, compose_tpoly, solve_implicit, substitute_y

X, Y = sympy.symbols("x y")
K = 6

coef = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def series(min_deg=0, max_deg=K, order=K):
    keys = [(i, j) for i in range(max_deg + 1) for j in range(max_deg + 1) if min_deg <= i + j <= max_deg]
    return st.dictionaries(st.sampled_from(keys), coef, max_size=6).map(lambda d: TruncSeries2(d, order))


def to_sympy(s: TruncSeries2):
    return sum((sympy.Rational(c.numerator, c.denominator) * X**i * Y**j for (i, j), c in s), sympy.Integer(0))


def from_sympy(expr, order) -> TruncSeries2:
    poly = sympy.Poly(sympy.expand(expr), X, Y)
    return TruncSeries2({(i, j): Fraction(int(c.p), int(c.q)) for (i, j), c in zip(poly.monoms(), poly.coeffs()) if i + j <= order}, order)


@given(series(), series(), series())
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == TruncSeries2({}, K)


@given(series(), series())
def test_product_matches_sympy(a, b):
    assert a * b == from_sympy(to_sympy(a) * to_sympy(b), K)


@given(series(max_deg=3), series(max_deg=3), st.fractions(-2, 2, max_denominator=5), st.fractions(-2, 2, max_denominator=5))
def test_evaluate_is_multiplicative(a, b, x, y):
    # degrees <= 3 each, so the product is exact at order 6
    assert (a * b).evaluate(x, y) == a.evaluate(x, y) * b.evaluate(x, y)


@given(series())
def test_compose_with_identity(a):
    assert a.compose(TruncSeries2.x(K), TruncSeries2.y(K)) == a


@given(series(max_deg=4), series(min_deg=1, max_deg=3), series(min_deg=1, max_deg=3))
def test_compose_matches_sympy(a, p, q):
    expected = from_sympy(to_sympy(a).subs({X: to_sympy(p), Y: to_sympy(q)}, simultaneous=True), K)
    assert a.compose(p, q) == expected


@given(series(), st.sampled_from(["x", "y"]), st.integers(1, 2))
def test_partial_derivative_loses_orders(a, var, times):
    sym = X if var == "x" else Y
    d = a.partial_derivative(var, times)
    assert d.trunc_order == K - times
    assert d == from_sympy(sympy.diff(to_sympy(a), sym, times), K - times)


@given(series(min_deg=2, max_deg=K, order=K))
def test_solve_implicit_residual(A):
    s = TruncSeries2.y(K) + A
    f = solve_implicit(s)
    assert f.coeff(0) == 0
    r = substitute_y(s, f)
    assert all(r.coeff(p) == 0 for p in range(K + 1))


def test_solve_implicit_known_curve():
    # y + x^2 + x y^2 = 0
    s = TruncSeries2({(0, 1): 1, (2, 0): 1, (1, 2): 1}, 11)
    f = solve_implicit(s)
    assert [f.coeff(p) for p in (2, 5, 8, 11)] == [-1, -1, -2, -5]
    assert all(f.coeff(p) == 0 for p in (1, 3, 4, 6, 7, 9, 10))


def test_solve_implicit_rejects_bad_input():
    with pytest.raises(ValueError):
        solve_implicit(TruncSeries2({(0, 0): 1, (0, 1): 1}, 4))
    with pytest.raises(ValueError):
        solve_implicit(TruncSeries2({(0, 1): 2}, 4))


puiseux_terms = st.dictionaries(st.integers(1, 9), coef, max_size=4)


@given(puiseux_terms, puiseux_terms, st.sampled_from([1, 2, 3]))
def test_puiseux_product_matches_sympy(p, q, d):
    a = PuiseuxSeries1(p, d, Fraction(12, d))
    b = PuiseuxSeries1(q, d, Fraction(12, d))
    t = sympy.symbols("t", positive=True)
    ea = sum((sympy.Rational(c.numerator, c.denominator) * t**k for k, c in p.items()), sympy.Integer(0))
    eb = sum((sympy.Rational(c.numerator, c.denominator) * t**k for k, c in q.items()), sympy.Integer(0))
    prod = sympy.Poly(sympy.expand(ea * eb), t)
    expected = {}
    for (k,), c in zip(prod.monoms(), prod.coeffs()):
        if Fraction(k, d) < a.mul(b).order:
            expected[Fraction(k, d)] = Fraction(int(c.p), int(c.q))
    got = {e: c for e, c in a.mul(b).terms()}
    assert got == {e: c for e, c in expected.items() if c}


def test_puiseux_order_and_leading():
    s = PuiseuxSeries1({3: 2, 5: -1}, 2, 4)
    assert s.leading() == (Fraction(3, 2), 2)
    assert s.valuation() == Fraction(3, 2)
    assert PuiseuxSeries1({}, 1, INF).leading() is None
    assert s.evaluate(0.25) == pytest.approx(2 * 0.25**1.5 - 0.25**2.5)


def test_tpoly_integration():
    # int_0^1 (x + 2 t y) dt = x + y
    p = TPolySeries2({(1, 0, 0): Fraction(1), (0, 1, 1): Fraction(2)}, 3)
    q = p.integrate()
    assert q.at(1) == TruncSeries2({(1, 0): 1, (0, 1): 1}, 3)


def test_compose_tpoly_degree_cap():
    s = TruncSeries2({(2, 0): 1}, 4)
    p = TPolySeries2({(1, 0, 0): Fraction(1), (0, 1, 1): Fraction(1)}, 4)
    q = TPolySeries2({(0, 1, 0): Fraction(1)}, 4)
    out = compose_tpoly(s, p, q, 4).at(1)
    assert out == TruncSeries2({(2, 0): 1, (1, 1): 2, (0, 2): 1}, 4)
