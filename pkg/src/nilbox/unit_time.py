"""Unit-time map by Picard iteration and the characteristic map on ``y = f(x)``.

The linear part of every supported field is the nilpotent block
``J = [[0, s], [0, 0]]`` (``s = 1`` forwards, ``s = -1`` for the reversed
field), so ``exp(J t) = I + J t`` and the Picard integrals reduce to exact
integrals of polynomials in ``t``::

    x_{k+1}(t) = x + s t y + int_0^t [A(x_k) + s (t - tau) B(x_k)] dtau
    y_{k+1}(t) = y + int_0^t B(x_k) dtau
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .series import (
    INF,
    PuiseuxSeries1,
    TPolySeries2,
    TruncSeries2,
    compose_tpoly,
    substitute_y,
)
from .system_model import CharData, PlanarSystem

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class UnitTimeMap:
    U1: TruncSeries2
    U2: TruncSeries2
    order: int

    def __call__(self, x, y):
        return self.U1.evaluate(x, y), self.U2.evaluate(x, y)

    def compose(self, other: "UnitTimeMap") -> "UnitTimeMap":
        """``self o other``."""
        K = min(self.order, other.order)
        return UnitTimeMap(self.U1.compose(other.U1, other.U2).truncate(K), self.U2.compose(other.U1, other.U2).truncate(K), K)

    def to_dict(self) -> dict:
        def terms(s):
            return [[i, j, str(c)] for (i, j), c in s]

        return {"U1": terms(self.U1), "U2": terms(self.U2), "order": self.order}


@dataclass(frozen=True)
class CharMap:
    C_h: PuiseuxSeries1
    leading_exp: object  # Fraction, or INF when C_h = x to the computed order
    leading_coeff: object

    def to_dict(self) -> dict:
        return {
            "C_h": self.C_h.to_dict(),
            "leading_exp": "inf" if self.leading_exp == INF else str(self.leading_exp),
            "leading_coeff": None if self.leading_coeff is None else str(self.leading_coeff),
        }


def picard_flow(xdot: TruncSeries2, ydot: TruncSeries2, K: int) -> tuple[TPolySeries2, TPolySeries2]:
    """Time-dependent truncated flow ``(x(t), y(t))`` as t-polynomial series.

    ``xdot`` must have linear part ``s*y`` (``s = +-1``) and ``ydot`` none.
    Iteration ``k`` only carries degrees ``<= k``; the next iterate cannot
    change them, so the schedule reproduces the full Picard iterates.
    """
    s = xdot[(0, 1)]
    if s not in (1, -1) or xdot[(1, 0)] or ydot[(1, 0)] or ydot[(0, 1)] or xdot[(0, 0)] or ydot[(0, 0)]:
        raise ValueError("Picard engine needs linear part (s*y, 0) with s = +-1")
    A = xdot - TruncSeries2({(0, 1): s}, xdot.trunc_order)
    B = ydot
    P = TPolySeries2({(1, 0, 0): Fraction(1), (0, 1, 1): Fraction(s)}, 1)
    Q = TPolySeries2({(0, 1, 0): Fraction(1)}, 1)
    for k in range(1, K):
        deg = k + 1
        P, Q = TPolySeries2(P.coeffs, deg), TPolySeries2(Q.coeffs, deg)
        n1 = compose_tpoly(A, P, Q, deg)
        n2 = compose_tpoly(B, P, Q, deg)
        lin_p = TPolySeries2({(1, 0, 0): Fraction(1), (0, 1, 1): Fraction(s)}, deg)
        lin_q = TPolySeries2({(0, 1, 0): Fraction(1)}, deg)
        P = lin_p + n1.integrate() + n2.integrate_lagged().scale(s)
        Q = lin_q + n2.integrate()
    return P, Q


def degree_condition_holds(sys: PlanarSystem, cd: CharData) -> bool:
    """Check that the ``y**2``-part of ``y'`` starts above degree ``max(m, n + 1)``."""
    target = max(cd.m, cd.n + 1)
    if target == INF:
        return True
    low = min((i + j for (i, j) in sys.ydot.coeffs if j >= 2), default=INF)
    return low > target


def picard_unit_time(sys: PlanarSystem, K_u: int, *, reverse: bool = False, cd: CharData | None = None) -> UnitTimeMap:
    """Taylor expansion of the time-1 (or time-(-1)) map to total degree ``K_u``."""
    if K_u > sys.trunc_order and not sys.order_fixed:
        sys = sys.with_order(K_u)
    if K_u > sys.trunc_order:
        raise ValueError(f"K_u = {K_u} exceeds the system truncation order {sys.trunc_order}")
    if K_u < 1:
        raise ValueError("K_u must be positive")
    if cd is not None and sys.xdot.coeffs == {(0, 1): 1} and not degree_condition_holds(sys, cd):
        warnings.warn("deg(B) + 2 > max{m, n+1} violated: y^2-terms enter the unit-time map early", stacklevel=2)
    xdot, ydot = (-sys.xdot, -sys.ydot) if reverse else (sys.xdot, sys.ydot)
    P, Q = picard_flow(xdot.truncate(K_u), ydot.truncate(K_u), K_u)
    return UnitTimeMap(P.at(1), Q.at(1), K_u)


def leading_map_coefficients(U: UnitTimeMap, cd: CharData) -> dict:
    """Homogeneous coefficients of ``U - e^J`` at the first nonlinear degree.

    Normalised by ``a`` (``m <= n + 1``) or ``b`` (``m > n + 1``) where the
    leading structure is ``a x^m`` or ``b x^n y`` respectively.
    """
    if cd.m == INF and cd.n == INF:
        return {}
    if cd.m <= cd.n + 1:
        deg, scale, tag = int(cd.m), cd.a, "a"
    else:
        deg, scale, tag = int(cd.n) + 1, cd.b, "b"
    out = {"degree": deg, "normalised_by": tag, "U1": {}, "U2": {}}
    for name, s in (("U1", U.U1), ("U2", U.U2)):
        for (i, j), c in sorted(s.homogeneous(deg).items(), key=lambda kv: -kv[0][0]):
            out[name][f"x^{i}*y^{j}"] = str(c / scale)
    return out


def characteristic_map(U: UnitTimeMap, f: PuiseuxSeries1) -> CharMap:
    """``C_h(x) = U1(x, f(x))``; leading data of ``C_h(x) - x``."""
    K = U.order
    g = U.U1 - TruncSeries2.x(K)
    disp = substitute_y(g, f)
    x = PuiseuxSeries1({1: 1}, 1)
    C_h = disp + x.rescale(disp.denom) if disp.denom > 1 else disp + x
    lead = disp.leading()
    if lead is None:
        return CharMap(C_h, INF, None)
    return CharMap(C_h, lead[0], lead[1])


def characteristic_dimension(cm: CharMap):
    """``1 - 1/mu``, with ``mu`` the leading exponent of ``C_h(x) - x``.

    Returns ``None`` (dimension 0 or undetermined at this order) when ``C_h``
    is the identity to the computed order.
    """
    mu = cm.leading_exp
    if mu == INF:
        return None
    if mu <= 1:
        raise ValueError(f"leading exponent {mu} of C_h - x must exceed 1")
    return 1 - 1 / Fraction(mu)


def default_unit_order(cd: CharData) -> int:
    """Degree needed to see the first nonlinear term of ``C_h`` plus two orders."""
    if cd.m == INF:
        return 6
    return int(cd.m) + 2
