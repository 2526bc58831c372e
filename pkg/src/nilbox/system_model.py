"""Planar systems ``x' = y + A(x, y), y' = B(x, y)`` with a nilpotent singularity.

Input documents are JSON objects::

    {"xdot": [[i, j, "p/q"], ...], "ydot": [[i, j, "p/q"], ...],
     "trunc_order": K, "params": {"name": "p/q"}}

where ``[i, j, c]`` stands for ``c * x**i * y**j``.  A coefficient may be a
rational literal or an arithmetic expression over bound parameter names
(``"-a/2"``, ``"2*b"``).
"""
from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .series import INF, PuiseuxSeries1, TruncSeries2, solve_implicit, substitute_y

DEFAULT_ORDER = 12


class InputError(ValueError):
    """Malformed or out-of-scope system description."""


@dataclass(frozen=True)
class PlanarSystem:
    xdot: TruncSeries2
    ydot: TruncSeries2
    trunc_order: int = DEFAULT_ORDER
    params: Mapping[str, Fraction] = field(default_factory=dict)
    order_fixed: bool = False
    label: str = ""

    def with_order(self, K: int) -> "PlanarSystem":
        return PlanarSystem(self.xdot.with_order(K), self.ydot.with_order(K), K, self.params, True, self.label)

    @property
    def A(self) -> TruncSeries2:
        return self.xdot - TruncSeries2.y(self.trunc_order)

    @property
    def B(self) -> TruncSeries2:
        return self.ydot

    def reversed(self) -> "PlanarSystem":
        return PlanarSystem(-self.xdot, -self.ydot, self.trunc_order, self.params, self.order_fixed, self.label)

    def vector_field(self):
        """Float right-hand side ``rhs(t, state)`` for scipy integrators."""
        return make_field(self.xdot.float_terms(), self.ydot.float_terms())

    def to_dict(self) -> dict:
        def terms(s):
            return [[i, j, str(c)] for (i, j), c in s]

        out = {"xdot": terms(self.xdot), "ydot": terms(self.ydot), "trunc_order": self.trunc_order}
        if self.params:
            out["params"] = {k: str(v) for k, v in self.params.items()}
        return out


def make_field(xterms, yterms, sign: float = 1.0):
    """Build ``rhs(t, s)`` from float monomial lists (numpy-friendly)."""

    def poly(terms, x, y):
        total = 0.0
        for i, j, c in terms:
            total = total + c * x**i * y**j
        return total

    def rhs(t, s):
        x, y = s[0], s[1]
        return [sign * poly(xterms, x, y), sign * poly(yterms, x, y)]

    return rhs


def check_normal_form(xdot: TruncSeries2, ydot: TruncSeries2) -> None:
    """Raise unless the linear part is the nilpotent block ``(y, 0)``."""
    for name, s, want in (("xdot", xdot, {(0, 1): 1}), ("ydot", ydot, {})):
        for mono in ((0, 0), (1, 0), (0, 1)):
            c = s[mono]
            expect = want.get(mono, 0)
            if c != expect:
                raise InputError(
                    f"{name}: linear part not nilpotent-normal; monomial x^{mono[0]}*y^{mono[1]} "
                    f"has coefficient {c}, expected {expect}"
                )


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def eval_coeff(text, params: Mapping[str, Fraction]) -> Fraction:
    """Evaluate a coefficient expression over rationals and parameter names."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(text).limit_denominator(10**12)
    if not isinstance(text, str):
        raise InputError(f"coefficient must be a string, got {text!r}")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise InputError(f"cannot parse coefficient {text!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return Fraction(str(node.value))
        if isinstance(node, ast.Name):
            if node.id not in params:
                raise InputError(f"unbound parameter {node.id!r} in {text!r}")
            return params[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow):
            e = ev(node.right)
            if e.denominator != 1:
                raise InputError(f"non-integer power in {text!r}")
            return ev(node.left) ** int(e)
        raise InputError(f"unsupported syntax in coefficient {text!r}")

    return ev(tree)


def _parse_terms(raw, name: str, params) -> list[tuple[int, int, Fraction]]:
    if not isinstance(raw, list):
        raise InputError(f"{name} must be a list of [i, j, coeff] triples")
    out = []
    for entry in raw:
        if not (isinstance(entry, list) and len(entry) == 3):
            raise InputError(f"{name}: bad term {entry!r}")
        i, j, c = entry
        if not (isinstance(i, int) and isinstance(j, int)) or i < 0 or j < 0:
            raise InputError(f"{name}: exponents must be non-negative integers in {entry!r}")
        out.append((i, j, eval_coeff(c, params)))
    return out


def parse_system(doc, *, validate: bool = True) -> PlanarSystem:
    """Parse a JSON document (string or already-decoded dict)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("system document must be a JSON object")
    unknown = set(doc) - {"xdot", "ydot", "trunc_order", "params", "label"}
    if unknown:
        raise InputError(f"unknown keys: {sorted(unknown)}")
    for key in ("xdot", "ydot"):
        if key not in doc:
            raise InputError(f"missing key {key!r}")
    params = {k: eval_coeff(v, {}) for k, v in (doc.get("params") or {}).items()}
    xt = _parse_terms(doc["xdot"], "xdot", params)
    yt = _parse_terms(doc["ydot"], "ydot", params)
    K = doc.get("trunc_order")
    fixed = K is not None
    if fixed and (not isinstance(K, int) or K < 2):
        raise InputError("trunc_order must be an integer >= 2")
    if not fixed:
        deg = max([i + j for i, j, _ in xt + yt] + [0])
        K = max(DEFAULT_ORDER, deg)
    xdot = TruncSeries2.from_terms(xt, K)
    ydot = TruncSeries2.from_terms(yt, K)
    if validate:
        check_normal_form(xdot, ydot)
    return PlanarSystem(xdot, ydot, K, params, fixed, str(doc.get("label", "")))


def system_from_terms(xdot, ydot, K: int | None = None, label: str = "") -> PlanarSystem:
    """Convenience constructor from ``(i, j, c)`` triples; validates the normal form."""
    doc = {"xdot": [[i, j, str(c)] for i, j, c in xdot], "ydot": [[i, j, str(c)] for i, j, c in ydot], "label": label}
    if K is not None:
        doc["trunc_order"] = K
    return parse_system(doc)


@dataclass(frozen=True)
class CharData:
    f: PuiseuxSeries1
    F: PuiseuxSeries1
    G: PuiseuxSeries1
    m: float  # int, or INF when F vanishes to the computed order
    a: Fraction | None
    n: float
    b: Fraction | None
    trunc_order: int

    @property
    def F_zero_to_order(self) -> bool:
        return self.m == INF

    @property
    def G_zero_to_order(self) -> bool:
        return self.n == INF

    def summary(self) -> dict:
        def fmt(k):
            return "inf" if k == INF else int(k)

        return {
            "f": self.f.to_dict(),
            "F": self.F.to_dict(),
            "G": self.G.to_dict(),
            "m": fmt(self.m),
            "a": None if self.a is None else str(self.a),
            "n": fmt(self.n),
            "b": None if self.b is None else str(self.b),
            "trunc_order": self.trunc_order,
            "notes": [
                msg
                for flag, msg in (
                    (self.F_zero_to_order, f"F identically zero up to order {self.F.order}"),
                    (self.G_zero_to_order, f"G identically zero up to order {self.G.order}"),
                )
                if flag
            ],
        }


def _leading(s: PuiseuxSeries1):
    lead = s.leading()
    if lead is None:
        return INF, None
    e, c = lead
    if e.denominator != 1:
        raise ValueError(f"non-integer leading exponent {e}")
    return int(e), c


def _char_data_at(sys: PlanarSystem) -> CharData:
    xdot, ydot = sys.xdot, sys.ydot
    f = solve_implicit(xdot)
    F = substitute_y(ydot, f)
    div = sys.A.partial_derivative("x") + ydot.partial_derivative("y")
    G = substitute_y(div, f)
    m, a = _leading(F)
    n, b = _leading(G)
    return CharData(f, F, G, m, a, n, b, sys.trunc_order)


def char_data(sys: PlanarSystem) -> CharData:
    """Characteristic curve ``f``, ``F = B(x, f)``, ``G = div(x, f)`` and leading data.

    Unless the order was pinned by the user, the working order is raised to
    ``max(2m + 2, 2n + 4, 12)`` once ``m`` and ``n`` are known.
    """
    check_normal_form(sys.xdot, sys.ydot)
    cd = _char_data_at(sys)
    if sys.order_fixed:
        return cd
    want = max(
        2 * cd.m + 2 if cd.m != INF else 0,
        2 * cd.n + 4 if cd.n != INF else 0,
        DEFAULT_ORDER,
    )
    if want > sys.trunc_order:
        cd = _char_data_at(sys.with_order(int(want)))
    return cd


def _univariate(f: PuiseuxSeries1, K: int) -> TruncSeries2:
    if f.denom != 1:
        raise ValueError("characteristic curve must be an ordinary power series")
    return TruncSeries2({(p, 0): c for p, c in f.coeffs.items()}, K)


def flatten(sys: PlanarSystem, cd: CharData | None = None) -> PlanarSystem:
    """Shear ``u = x, v = y - f(x)`` taking the characteristic curve to ``v = 0``.

    Returns ``u' = X(u, v + f(u))``, ``v' = Y(u, v + f(u)) - f'(u) X(u, v + f(u))``.
    """
    cd = cd or char_data(sys)
    K = sys.trunc_order
    if cd.f.order != INF:
        K = min(K, int(math.ceil(cd.f.order)) - 1)
    if cd.f.is_zero():
        return PlanarSystem(sys.xdot.truncate(K), sys.ydot.truncate(K), K, sys.params, sys.order_fixed, sys.label)
    fu = _univariate(cd.f, K)
    u = TruncSeries2.x(K)
    v_plus_f = TruncSeries2.y(K) + fu
    X = sys.xdot.truncate(K).compose(u, v_plus_f)
    Y = sys.ydot.truncate(K).compose(u, v_plus_f)
    # f' is exact below degree K and X has no constant term, so f' X is known to degree K
    fprime = fu.partial_derivative("x").with_order(K)
    V = Y - fprime * X
    return PlanarSystem(X, V.truncate(K), K, sys.params, sys.order_fixed, sys.label + " (flattened)" if sys.label else "")


def flatten_coefficients(sys: PlanarSystem, cd: CharData, kmax: int) -> tuple[list[PuiseuxSeries1], list[PuiseuxSeries1]]:
    """``phi_k(u)`` and ``psi_k(u)`` from y-derivatives along the characteristic curve.

    ``phi_k = (1/k!) d^k X/dy^k`` and ``psi_k = (1/k!)(d^k Y/dy^k - f' d^k X/dy^k)``,
    both evaluated at ``y = f(x)``.
    """
    fprime = cd.f.derivative()
    phis, psis = [], []
    X, Y = sys.xdot, sys.ydot
    for k in range(kmax + 1):
        dX = X.partial_derivative("y", k) if k else X
        dY = Y.partial_derivative("y", k) if k else Y
        fact = Fraction(1, math.factorial(k))
        xk = substitute_y(dX, cd.f)
        yk = substitute_y(dY, cd.f)
        phis.append(xk.scale(fact))
        psis.append((yk - fprime.mul(xk)).scale(fact))
    return phis, psis
