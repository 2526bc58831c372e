import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nilbox.classifier import classify
from nilbox.series import INF, TruncSeries2, substitute_y
from nilbox.system_model import InputError, char_data, flatten, flatten_coefficients, parse_system, system_from_terms


def test_parse_with_parameters():
    doc = {"params": {"a": "-1", "b": "3/2"}, "xdot": [[0, 1, "1"]], "ydot": [[5, 0, "a"], [2, 1, "2*b"]]}
    s = parse_system(json.dumps(doc))
    assert s.ydot[(5, 0)] == -1 and s.ydot[(2, 1)] == 3
    assert s.trunc_order == 12 and not s.order_fixed


@pytest.mark.parametrize(
    "doc",
    [
        "not json",
        [1, 2],
        {"xdot": [[0, 1, "1"]]},
        {"xdot": [[0, 1, "1"]], "ydot": [[2, 0, "q"]]},
        {"xdot": [[0, 1, "1"]], "ydot": [[2, 0, "__import__('os')"]]},
        {"xdot": [[0, 1, "1"]], "ydot": [[-1, 0, "1"]]},
        {"xdot": [[0, 1, "1"]], "ydot": [[2, 0, "1"]], "extra": 1},
        {"xdot": [[0, 1, "2"]], "ydot": [[2, 0, "1"]]},
        {"xdot": [[0, 1, "1"], [1, 0, "1"]], "ydot": [[2, 0, "1"]]},
        {"xdot": [[0, 1, "1"]], "ydot": [[0, 1, "1"]]},
        {"xdot": [[0, 1, "1"]], "ydot": [[2, 0, "1"]], "trunc_order": 1},
    ],
)
def test_bad_input_raises_input_error(doc):
    with pytest.raises(InputError):
        parse_system(doc if isinstance(doc, str) else json.dumps(doc))


def test_example2_characteristic_data():
    s = system_from_terms([(0, 1, 1), (2, 0, 1), (1, 2, 1)], [(3, 0, -2), (1, 1, -2), (0, 3, 2)], K=12)
    cd = char_data(s)
    assert [cd.f.coeff(p) for p in (2, 5, 8, 11)] == [-1, -1, -2, -5]
    assert (cd.m, cd.a, cd.n, cd.b) == (9, -2, 4, 7)
    assert [cd.G.coeff(p) for p in (4, 7)] == [7, 14]
    # x^12 coefficient of F computed by hand: -2x f contributes +10, 2 f^3 contributes -18
    assert cd.F.coeff(12) == -8


def test_char_data_raises_order_until_leading_terms_appear():
    s = system_from_terms([(0, 1, 1)], [(15, 0, -1), (7, 1, 1)])
    cd = char_data(s)
    assert cd.m == 15 and cd.n == 7


def test_axis_of_singularities():
    s = system_from_terms([(0, 1, 1)], [(1, 1, 1)], K=8)
    cd = char_data(s.with_order(8))
    assert cd.m == INF and cd.n == 1


nf_coef = st.fractions(min_value=-2, max_value=2, max_denominator=3)


@st.composite
def normal_form(draw):
    """Random x' = y + A, y' = B with A, B of degree >= 2 and a nonzero x^m term."""
    keys = [(i, j) for i in range(5) for j in range(4) if 2 <= i + j <= 4]
    A = draw(st.dictionaries(st.sampled_from(keys), nf_coef, max_size=3))
    B = draw(st.dictionaries(st.sampled_from(keys), nf_coef, max_size=4))
    m = draw(st.integers(2, 5))
    B[(m, 0)] = draw(st.sampled_from([Fraction(-1), Fraction(1), Fraction(2)]))
    xt = [(0, 1, 1)] + [(i, j, c) for (i, j), c in A.items() if c]
    yt = [(i, j, c) for (i, j), c in B.items() if c]
    return system_from_terms(xt, yt, K=10)


@given(normal_form())
def test_flatten_puts_curve_on_axis(s):
    fl = flatten(s)
    fcd = char_data(fl)
    assert fcd.f.truncate(fl.trunc_order - 1).is_zero()


@given(normal_form())
def test_flatten_dual_route(s):
    """Composition route and y-derivative route give the same coefficients of v^k."""
    cd = char_data(s)
    fl = flatten(s, cd)
    K = fl.trunc_order
    phis, psis = flatten_coefficients(s, cd, 3)
    for k in range(4):
        for p in range(K - k + 1):
            assert fl.xdot[(p, k)] == phis[k].coeff(p)
            assert fl.ydot[(p, k)] == psis[k].coeff(p)


@given(normal_form())
def test_classification_invariant_under_flattening(s):
    cd = char_data(s)
    fcd = char_data(flatten(s, cd))
    if cd.m != INF and fcd.m != INF:
        assert classify(cd) == classify(fcd)


@given(normal_form())
def test_curve_solves_defining_equation(s):
    cd = char_data(s)
    r = substitute_y(s.xdot, cd.f)
    assert all(r.coeff(p) == 0 for p in range(s.trunc_order))


def test_reversed_field():
    s = system_from_terms([(0, 1, 1)], [(2, 0, 1)])
    r = s.reversed()
    assert r.xdot == -s.xdot and r.ydot == -s.ydot
    rhs = s.vector_field()
    assert rhs(0.0, [0.5, 0.25]) == pytest.approx([0.25, 0.25])


def test_truncseries_float_terms():
    s = TruncSeries2({(1, 0): Fraction(1, 3)}, 3)
    assert s.float_terms() == [(1, 0, pytest.approx(1 / 3))]
