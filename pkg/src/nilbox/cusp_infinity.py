"""Separatrix expansions for cusps and nodes, and the singular points at infinity.

Separatrices are computed in the flattened coordinates ``u = x, v = y - f(x)``
as invariant curves ``v = g(u)``.  The invariance residual
``X(u, g) g'(u) - V(u, g)`` is solved one Puiseux coefficient at a time: the
residual coefficient at the first unresolved exponent is affine in the
new unknown, so two evaluations fix it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy

from .classifier import Kind, SingularityClass, classify
from .fractal import OrbitSample, generate_orbit, seeded_orbit
from .series import INF, PuiseuxSeries1, TruncSeries2, divide, norm, substitute_y, to_float
from .system_model import CharData, InputError, PlanarSystem, char_data, flatten

DRIFT_TOL = 0.02  # relative deviation from the series that triggers seeding


@dataclass(frozen=True)
class Separatrix:
    branch: str  # "stable"/"unstable" for a cusp, "root0", "root1" for a node
    series: PuiseuxSeries1  # y as a series in x, original coordinates (analysis frame)
    flat: PuiseuxSeries1  # v = g(u) in flattened coordinates
    gamma: Fraction  # leading exponent of g
    leading_coeff: object
    side: int = 1  # -1: the curve lives in x < 0 and is reported in the reflected frame
    notes: tuple = ()

    def evaluate(self, x: float) -> float:
        """``y`` on the curve at the original abscissa ``x``."""
        if self.side < 0:
            return -self.series.evaluate(-x)
        return self.series.evaluate(x)

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "side": self.side,
            "series": self.series.to_dict(),
            "flattened": self.flat.to_dict(),
            "gamma": str(self.gamma),
            "leading_coeff": str(self.leading_coeff),
            "leading_coeff_float": to_float(self.leading_coeff),
            "notes": list(self.notes),
        }


def reflect(sys: PlanarSystem) -> PlanarSystem:
    """Conjugate by ``(x, y) -> (-x, -y)``; keeps the normal form, flips the sign of ``a`` for even ``m``."""
    K = sys.trunc_order
    neg = TruncSeries2({(1, 0): -1}, K), TruncSeries2({(0, 1): -1}, K)
    X = -sys.xdot.compose(*neg)
    Y = -sys.ydot.compose(*neg)
    label = (sys.label + " (reflected)") if sys.label else ""
    return PlanarSystem(X, Y, K, sys.params, sys.order_fixed, label)


def _residual(X: TruncSeries2, V: TruncSeries2, g: PuiseuxSeries1) -> PuiseuxSeries1:
    return substitute_y(X, g).mul(g.derivative()) - substitute_y(V, g)


def _solve_curve(X, V, e0, c0, d, order):
    """Coefficients of ``g = c0 u^e0 + ...`` (denominator ``d``) below ``order``."""
    K = X.trunc_order
    coeffs = {int(e0 * d): norm(c0)}
    notes = []
    p = int(e0 * d) + 1
    limit = Fraction(order)
    while Fraction(p, d) < limit:
        target = Fraction(p, d) + e0 - 1
        if target >= K + 1:
            notes.append(f"system order {K} exhausted at exponent {Fraction(p, d)}")
            limit = Fraction(p, d)
            break
        trial = {}
        for c in (0, 1):
            g = PuiseuxSeries1({**coeffs, p: c}, d)
            trial[c] = _residual(X, V, g).coeff(target)
        r0 = norm(trial[0])
        slope = norm(trial[1] - trial[0])
        if slope == 0:
            if r0 != 0:
                notes.append(f"resonance with nonzero residual at exponent {Fraction(p, d)}; series stops")
                limit = Fraction(p, d)
                break
            notes.append(f"free coefficient at exponent {Fraction(p, d)} set to 0")
            c = 0
        else:
            c = divide(-r0, slope)
        if c != 0:
            coeffs[p] = norm(c)
        p += 1
    return PuiseuxSeries1(coeffs, d, limit), notes


def _cusp_frame(sys: PlanarSystem, cd: CharData):
    if cd.a > 0:
        return sys, cd, 1
    rs = reflect(sys)
    return rs, char_data(rs), -1


def separatrix_series(sys: PlanarSystem, order=None, *, cd: CharData | None = None, cls: SingularityClass | None = None) -> list[Separatrix]:
    """Invariant curves through the origin for a cusp (two branches) or a node.

    ``order`` is the exclusive exponent bound of the returned series.
    """
    cd = cd or char_data(sys)
    cls = cls or classify(cd)
    if cls.kind not in (Kind.CUSP, Kind.NODE):
        raise InputError(f"separatrix expansion needs a cusp or a node, got {cls.kind.value}")
    m = int(cd.m)
    side = 1
    if cls.kind == Kind.CUSP:
        sys, cd, side = _cusp_frame(sys, cd)
        d = 2
        e0 = Fraction(m + 1, 2)
        c = sympy.sqrt(sympy.Rational(2 * cd.a.numerator, (m + 1) * cd.a.denominator))
        n_eff = int(cd.n) if cd.n != INF else m
        order = Fraction(order) if order is not None else max(Fraction(m + 4, 2), Fraction(n_eff + 2))
        roots = [("unstable", c), ("stable", -c)]
    else:
        n = int(cd.n)
        d = 1
        e0 = Fraction(n + 1)
        if m == 2 * n + 1:
            disc = cd.b**2 + 4 * cd.a * (n + 1)
            if disc < 0:
                raise InputError(f"no real separatrix root: discriminant {disc} < 0")
            sq = sympy.sqrt(sympy.Rational(disc.numerator, disc.denominator))
            bb = sympy.Rational(cd.b.numerator, cd.b.denominator)
            vals = [(bb + sq) / (2 * (n + 1)), (bb - sq) / (2 * (n + 1))]
            vals = [norm(v) for v in vals]
            if vals[0] == vals[1]:
                vals = vals[:1]
        else:
            vals = [cd.b / (n + 1)]
        order = Fraction(order) if order is not None else e0 + 6
        roots = [(f"root{i}", v) for i, v in enumerate(vals)]

    need = int(math.ceil(order + e0)) + 1
    work = sys if (sys.order_fixed or sys.trunc_order >= need) else sys.with_order(need)
    wcd = cd if work is sys else char_data(work)
    flat = flatten(work, wcd)
    out = []
    for branch, c in roots:
        g, notes = _solve_curve(flat.xdot, flat.ydot, e0, c, d, order)
        f = wcd.f.truncate(g.order)
        series = f + g if not f.is_zero() else g
        out.append(Separatrix(branch, series, g, e0, norm(c), side, tuple(notes)))
    return out


def correction_exponent(sep: Separatrix):
    """Exponent of the first term after the leading one (``None`` if absent to order)."""
    terms = sep.flat.terms()
    return terms[1][0] if len(terms) > 1 else None


# ---------------------------------------------------------------- cusp closed forms


def cusp_dimensions(m: int):
    """``(dim S_x, dim S_y, dim S)`` on a cusp separatrix of multiplicity ``m``."""
    if m % 2 or m < 2:
        raise ValueError("cusp multiplicity must be even and >= 2")
    dx = 1 - Fraction(2, m + 1)
    dy = 1 - Fraction(m + 1, 2 * m)
    return dx, dy, dx


def _seed_for_length(c: float, e0: float, x0: float, N: int) -> float:
    """Start abscissa so that ``x' = c x**e0`` needs about ``N`` unit steps to reach ``x0``."""
    return (N * abs(c) * (e0 - 1) + x0 ** (1 - e0)) ** (-1.0 / (e0 - 1))


def separatrix_orbit(sys: PlanarSystem, sep: Separatrix, x0: float = 0.3, N: int = 2000) -> OrbitSample:
    """Unit-time orbit on a separatrix, ordered toward the origin.

    Cusp branches are repelling transversally, so they are followed by
    seeding near the origin; node separatrices are integrated directly
    (with the inverse map for a repelling node).  Points are returned in
    original coordinates.
    """
    frame = reflect(sys) if sep.side < 0 else sys
    rhs_sign = _curve_direction(frame, sep, x0)
    time_sign = 1 if rhs_sign < 0 else -1
    if sep.branch in ("stable", "unstable"):
        xs = _seed_for_length(to_float(sep.leading_coeff), float(sep.gamma), x0, N)
        orbit = seeded_orbit(frame, (xs, sep.series.evaluate(xs)), x0, time_sign=time_sign)
    else:
        orbit = generate_orbit(frame, (x0, sep.series.evaluate(x0)), N, "numerical_flow", time_sign=time_sign)
        dev = _curve_deviation(orbit, sep)
        if dev > DRIFT_TOL:
            # forward orbit drifts off: the curve repels, follow it from a seed instead
            xs = _seed_for_length(to_float(sep.leading_coeff), float(sep.gamma), x0, N)
            seeded = seeded_orbit(frame, (xs, sep.series.evaluate(xs)), x0, time_sign=time_sign)
            if _curve_deviation(seeded, sep) < dev:
                seeded.warnings.append(f"forward orbit left the curve (relative deviation {dev:.2g}); seeded instead")
                orbit = seeded
    if sep.side < 0:
        orbit = orbit.mapped(lambda x, y: (-x, -y))
    return orbit


def _curve_deviation(orbit: OrbitSample, sep: Separatrix) -> float:
    """Largest relative distance ``|y - g(x)| / |g(x)|`` along the orbit."""
    x, y = orbit.points[:, 0], orbit.points[:, 1]
    g = np.array([sep.series.evaluate(t) for t in x])
    ok = g != 0
    return float(np.max(np.abs(y[ok] - g[ok]) / np.abs(g[ok]))) if ok.any() else 0.0


def _curve_direction(sys: PlanarSystem, sep: Separatrix, x0: float) -> float:
    y0 = sep.series.evaluate(x0)
    return math.copysign(1.0, sys.xdot.evaluate(x0, y0)) * math.copysign(1.0, x0)


def flattened_points(orbit: OrbitSample, cd: CharData, side: int = 1) -> OrbitSample:
    """Map orbit points to ``(x, y - f(x))``."""
    if cd.f.is_zero():
        return orbit
    if side < 0:
        return orbit.mapped(lambda x, y: (x, y + np.array([cd.f.evaluate(-t) for t in x])))
    return orbit.mapped(lambda x, y: (x, y - np.array([cd.f.evaluate(t) for t in x])))


# ---------------------------------------------------------------- infinity


def _laurent_terms(s: TruncSeries2) -> dict:
    return {(i, j): c for (i, j), c in s}


def _lmul(p: dict, q: dict) -> dict:
    out: dict = {}
    for (i1, j1), c1 in p.items():
        for (i2, j2), c2 in q.items():
            k = (i1 + i2, j1 + j2)
            out[k] = out.get(k, 0) + c1 * c2
    return {k: c for k, c in out.items() if c != 0}


def _ladd(*ps) -> dict:
    out: dict = {}
    for p in ps:
        for k, c in p.items():
            out[k] = out.get(k, 0) + c
    return {k: c for k, c in out.items() if c != 0}


def _lsub_xy(p: dict, chart: int) -> dict:
    """Rewrite ``sum c x^i y^j`` in chart coordinates as a Laurent polynomial in ``(u, v)``."""
    out: dict = {}
    for (i, j), c in p.items():
        # chart 2: x = u/v, y = 1/v; chart 1: x = 1/v, y = u/v
        k = (i, -i - j) if chart == 2 else (j, -i - j)
        out[k] = out.get(k, 0) + c
    return out


@dataclass(frozen=True)
class ChartSystem:
    udot: dict  # {(i, j): c} for c u^i v^j
    vdot: dict
    multiplier: int  # both components were multiplied by v**multiplier
    divisor: tuple  # common monomial (i, j) removed afterwards

    def as_system(self, label: str = "") -> PlanarSystem:
        K = max(i + j for i, j in list(self.udot) + list(self.vdot))
        return PlanarSystem(TruncSeries2(self.udot, K), TruncSeries2(self.vdot, K), K, {}, True, label)

    def to_dict(self) -> dict:
        def terms(p):
            return [[i, j, str(c)] for (i, j), c in sorted(p.items())]

        return {"udot": terms(self.udot), "vdot": terms(self.vdot), "multiplied_by_v^": self.multiplier, "divided_by": list(self.divisor)}


def chart_transform(sys: PlanarSystem, chart: int) -> ChartSystem:
    """Polynomial field in a Poincare chart, denominators cleared.

    Chart 2 uses ``x = u/v, y = 1/v`` and chart 1 uses ``x = 1/v, y = u/v``.
    The result is multiplied by the smallest power of ``v`` making it
    polynomial and then divided by the largest common monomial.
    """
    if chart not in (1, 2):
        raise ValueError("chart must be 1 or 2")
    P = _lsub_xy(_laurent_terms(sys.xdot), chart)
    Q = _lsub_xy(_laurent_terms(sys.ydot), chart)
    u, v = {(1, 0): 1}, {(0, 1): 1}
    uv = {(1, 1): 1}
    if chart == 2:
        udot = _ladd(_lmul(v, P), _lmul({(1, 1): -1}, Q))
        vdot = _lmul({(0, 2): -1}, Q)
    else:
        udot = _ladd(_lmul(v, Q), _lmul({(1, 1): -1}, P))
        vdot = _lmul({(0, 2): -1}, P)
    allk = list(udot) + list(vdot)
    M = max(0, -min(j for _, j in allk))
    udot = {(i, j + M): c for (i, j), c in udot.items()}
    vdot = {(i, j + M): c for (i, j), c in vdot.items()}
    allk = list(udot) + list(vdot)
    gi, gj = min(i for i, _ in allk), min(j for _, j in allk)
    udot = {(i - gi, j - gj): Fraction(c) for (i, j), c in udot.items()}
    vdot = {(i - gi, j - gj): Fraction(c) for (i, j), c in vdot.items()}
    return ChartSystem(udot, vdot, M, (gi, gj))


def cusp_normal_data(sys: PlanarSystem):
    """``(a, m, b, n)`` when the system is exactly ``x' = y, y' = a x^m + b x^n y``."""
    if dict(sys.xdot.coeffs) != {(0, 1): 1}:
        raise InputError("infinity analysis needs x' = y")
    a = m = b = n = None
    for (i, j), c in sys.ydot:
        if j == 0 and a is None:
            a, m = c, i
        elif j == 1 and b is None:
            b, n = c, i
        else:
            raise InputError("infinity analysis needs y' = a x^m + b x^n y")
    if a is None or b is None:
        raise InputError("infinity analysis needs both a x^m and b x^n y terms")
    if m % 2 or m >= 2 * n + 1:
        raise InputError(f"not a cusp of the form a x^m + b x^n y: m = {m}, n = {n}")
    if m > n + 1:
        raise InputError(f"chart form requires m <= n + 1 (m = {m}, n = {n})")
    return a, m, b, n


@dataclass
class InfinityAnalysis:
    chart2_system: ChartSystem
    chart1_system: ChartSystem
    chart2_dim: Fraction
    chart1_dim: Fraction
    multiplicity_at_infinity: int
    chart1_eigenvalues: tuple
    chart1_semi_hyperbolic: bool
    chart2_curve: tuple  # (c, exponent, u-side, time sign) with v = c |u|**exponent
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        c, s, side, t_sign = self.chart2_curve
        return {
            "chart2_system": self.chart2_system.to_dict(),
            "chart1_system": self.chart1_system.to_dict(),
            "chart2_dim": str(self.chart2_dim),
            "chart1_dim": str(self.chart1_dim),
            "multiplicity_at_infinity": self.multiplicity_at_infinity,
            "chart1_eigenvalues": [str(e) for e in self.chart1_eigenvalues],
            "chart1_semi_hyperbolic": self.chart1_semi_hyperbolic,
            "chart2_curve": {"coeff": c, "exponent": str(s), "u_side": side, "time_sign": t_sign},
            "notes": self.notes,
        }


def chart2_transform(sys: PlanarSystem) -> InfinityAnalysis:
    a, m, b, n = cusp_normal_data(sys)
    ch2 = chart_transform(sys, 2)
    ch1 = chart_transform(sys, 1)
    # chart 1 singular point on v = 0: u' = [n+1 = m] a + b u (+ u^2 when n = 0)
    u_star = -a / b if n + 1 == m else Fraction(0)
    jac_uu = sum(c * i * u_star ** (i - 1) for (i, j), c in ch1.udot.items() if j == 0 and i >= 1)
    jac_vv = sum(c * u_star**i for (i, j), c in ch1.vdot.items() if j == 1)
    jac_uv = sum(c * u_star**i for (i, j), c in ch1.udot.items() if j == 1)
    jac_vu = sum(c * i * u_star ** (i - 1) for (i, j), c in ch1.vdot.items() if j == 0 and i >= 1)
    tr, det = jac_uu + jac_vv, jac_uu * jac_vv - jac_uv * jac_vu
    disc = tr * tr - 4 * det
    eig = tuple(sorted(((tr + s * math.sqrt(float(disc))) / 2 for s in (1, -1)), reverse=True)) if disc >= 0 else ()
    semi = det == 0 and tr != 0
    # separatrix of the chart-2 point: v = c |u|^((n+1)/n) on the side sign(u) = sign(b),
    # c^n = |b|/(n+1) (n even) or b/(n+1) (n odd); along it d|u|/dt ~ -b sign(u)^n |u|^(n+1)
    u_side = 1 if b > 0 else -1
    c = math.copysign(abs(float(b) / (n + 1)) ** (1.0 / n), float(b) if n % 2 else 1.0)
    t_sign = 1 if (n % 2 == 1 or b > 0) else -1
    notes = [f"chart 2 multiplied by v^{ch2.multiplier}, common factor u^{ch2.divisor[0]} v^{ch2.divisor[1]} removed"]
    return InfinityAnalysis(
        ch2,
        ch1,
        1 - Fraction(1, n + 1),
        1 - Fraction(1, 2 * n - m + 2),
        n // 2,
        eig,
        semi,
        (c, Fraction(n + 1, n), u_side, t_sign),
        notes,
    )


def chart2_orbit(inf: InfinityAnalysis, u0: float = 0.3, N: int = 2000) -> OrbitSample:
    """Unit-time orbit of the chart-2 field along ``v = c |u|**((n+1)/n)``, seeded near the origin."""
    c, s, side, t_sign = inf.chart2_curve
    s = float(s)
    n = round(1 / (s - 1))
    sysc = inf.chart2_system.as_system("chart 2")
    # leading motion along the curve: |u|' = -|b| n/(n+1) |u|^(n+1)
    b = next(cf for (i, j), cf in inf.chart2_system.vdot.items() if (i, j) == (n, 1))
    rate = abs(float(b)) * n / (n + 1)
    us = _seed_for_length(rate, n + 1, u0, N)
    return seeded_orbit(sysc, (side * us, c * us**s), u0, time_sign=t_sign, guard=10.0)
