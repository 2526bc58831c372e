"""Exact truncated power series in one and two variables.

Three containers live here:

``TruncSeries2``
    bivariate series in ``(x, y)`` truncated at total degree ``K``; terms of
    higher degree are unknown, i.e. ``O(|(x, y)|**(K + 1))``.
``PuiseuxSeries1``
    univariate series in ``x`` with exponents in ``(1/d) Z``, known modulo
    ``O(x**order)``.
``TPolySeries2``
    bivariate series whose coefficients are polynomials in a time variable
    ``t``; the working state of Picard iteration.

Coefficients are normally :class:`fractions.Fraction`.  Floats and sympy
numbers (used for irrational separatrix coefficients such as ``sqrt(2/3)``)
pass through the same code paths; sympy values are kept expanded so that
zero tests stay exact.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Mapping

INF = math.inf


def _is_sympy(c) -> bool:
    return type(c).__module__.startswith("sympy")


def norm(c):
    """Canonical form of a coefficient (sympy expressions expanded, rationals
    demoted to Fraction)."""
    if isinstance(c, (int, Fraction)):
        return Fraction(c)
    if _is_sympy(c):
        import sympy

        c = sympy.expand(c)
        if c.is_Rational:
            return Fraction(int(c.p), int(c.q))
    return c


def divide(num, den):
    """Exact quotient of two coefficients."""
    if _is_sympy(num) or _is_sympy(den):
        import sympy

        return norm(sympy.radsimp(sympy.sympify(num) / sympy.sympify(den)))
    return norm(num / den) if not isinstance(num, float) else num / den


def to_float(c) -> float:
    return float(c)


def parse_coeff(c):
    if isinstance(c, str):
        return Fraction(c)
    return norm(c)


def _fmt_coeff(c) -> str:
    return str(c)


class TruncSeries2:
    """Bivariate series truncated at total degree ``trunc_order``.

    Instances are treated as immutable.  ``coeffs`` maps exponent pairs
    ``(i, j)`` (for ``x**i * y**j``) to nonzero coefficients.
    """

    __slots__ = ("coeffs", "trunc_order")

    def __init__(self, coeffs: Mapping[tuple[int, int], object] | None = None, trunc_order: int = 12):
        if trunc_order < 0:
            raise ValueError("trunc_order must be non-negative")
        clean = {}
        for (i, j), c in (coeffs or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent ({i}, {j})")
            if i + j > trunc_order:
                continue
            c = norm(c)
            if c != 0:
                clean[(int(i), int(j))] = c
        self.coeffs = clean
        self.trunc_order = int(trunc_order)

    # -- constructors -------------------------------------------------
    @classmethod
    def x(cls, trunc_order: int = 12) -> "TruncSeries2":
        return cls({(1, 0): 1}, trunc_order)

    @classmethod
    def y(cls, trunc_order: int = 12) -> "TruncSeries2":
        return cls({(0, 1): 1}, trunc_order)

    @classmethod
    def const(cls, c, trunc_order: int = 12) -> "TruncSeries2":
        return cls({(0, 0): c}, trunc_order)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[int, int, object]], trunc_order: int = 12) -> "TruncSeries2":
        acc: dict[tuple[int, int], object] = {}
        for i, j, c in terms:
            acc[(i, j)] = acc.get((i, j), 0) + parse_coeff(c)
        return cls(acc, trunc_order)

    # -- basic queries --------------------------------------------------
    def __getitem__(self, key: tuple[int, int]):
        return self.coeffs.get(key, Fraction(0))

    def __iter__(self):
        return iter(sorted(self.coeffs.items(), key=lambda kv: (kv[0][0] + kv[0][1], -kv[0][0])))

    def __len__(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        return max((i + j for i, j in self.coeffs), default=-1)

    def lowest_degree(self) -> float:
        return min((i + j for i, j in self.coeffs), default=INF)

    def homogeneous(self, d: int) -> dict[tuple[int, int], object]:
        return {k: c for k, c in self.coeffs.items() if sum(k) == d}

    def truncate(self, K: int) -> "TruncSeries2":
        return TruncSeries2(self.coeffs, min(K, self.trunc_order))

    def with_order(self, K: int) -> "TruncSeries2":
        """Same stored terms, different nominal truncation (for exact polynomials)."""
        return TruncSeries2(self.coeffs, K)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncSeries2):
            return NotImplemented
        K = min(self.trunc_order, other.trunc_order)
        return self.truncate(K).coeffs == other.truncate(K).coeffs

    def __hash__(self):
        return hash((frozenset(self.coeffs.items()), self.trunc_order))

    def __repr__(self) -> str:
        if not self.coeffs:
            body = "0"
        else:
            body = " + ".join(f"({_fmt_coeff(c)})*x^{i}*y^{j}" for (i, j), c in self)
        return f"TruncSeries2({body} + O({self.trunc_order + 1}))"

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other) -> "TruncSeries2":
        if isinstance(other, TruncSeries2):
            return other
        return TruncSeries2.const(other, self.trunc_order)

    def __add__(self, other) -> "TruncSeries2":
        other = self._coerce(other)
        K = min(self.trunc_order, other.trunc_order)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0) + c
        return TruncSeries2(out, K)

    __radd__ = __add__

    def __neg__(self) -> "TruncSeries2":
        return TruncSeries2({k: -c for k, c in self.coeffs.items()}, self.trunc_order)

    def __sub__(self, other) -> "TruncSeries2":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "TruncSeries2":
        return self._coerce(other) - self

    def scale(self, c) -> "TruncSeries2":
        c = norm(c)
        return TruncSeries2({k: v * c for k, v in self.coeffs.items()}, self.trunc_order)

    def __mul__(self, other) -> "TruncSeries2":
        if not isinstance(other, TruncSeries2):
            return self.scale(other)
        K = min(self.trunc_order, other.trunc_order)
        rhs = sorted(other.coeffs.items(), key=lambda kv: kv[0][0] + kv[0][1])
        out: dict[tuple[int, int], object] = {}
        for (i1, j1), c1 in self.coeffs.items():
            room = K - i1 - j1
            for (i2, j2), c2 in rhs:
                if i2 + j2 > room:
                    break
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0) + c1 * c2
        return TruncSeries2(out, K)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "TruncSeries2":
        if n < 0:
            raise ValueError("negative power")
        result = TruncSeries2.const(1, self.trunc_order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def partial_derivative(self, var: str, times: int = 1) -> "TruncSeries2":
        """Partial derivative in ``'x'`` or ``'y'``.  Loses ``times`` orders."""
        if var not in ("x", "y"):
            raise ValueError("var must be 'x' or 'y'")
        coeffs = dict(self.coeffs)
        for _ in range(times):
            nxt = {}
            for (i, j), c in coeffs.items():
                if var == "x" and i:
                    nxt[(i - 1, j)] = c * i
                elif var == "y" and j:
                    nxt[(i, j - 1)] = c * j
            coeffs = nxt
        return TruncSeries2(coeffs, max(self.trunc_order - times, 0))

    def compose(self, p: "TruncSeries2", q: "TruncSeries2") -> "TruncSeries2":
        """``self(p(x, y), q(x, y))`` for ``p, q`` without constant term."""
        if (0, 0) in p.coeffs or (0, 0) in q.coeffs:
            raise ValueError("composition requires p(0,0) = q(0,0) = 0")
        K = min(self.trunc_order, p.trunc_order, q.trunc_order)
        p, q = p.truncate(K), q.truncate(K)
        pw_p = _power_cache(p, TruncSeries2.const(1, K))
        pw_q = _power_cache(q, TruncSeries2.const(1, K))
        total = TruncSeries2({}, K)
        for (i, j), c in self.coeffs.items():
            if i + j > K:
                continue
            total = total + (pw_p(i) * pw_q(j)).scale(c)
        return total

    def evaluate(self, x, y):
        """Evaluate the stored polynomial (floats, Fractions or numpy arrays)."""
        total = 0
        for (i, j), c in self.coeffs.items():
            cc = c if isinstance(x, Fraction) else float(c)
            total = total + cc * x**i * y**j
        return total

    __call__ = evaluate

    def float_terms(self) -> list[tuple[int, int, float]]:
        return [(i, j, float(c)) for (i, j), c in self.coeffs.items()]


def _power_cache(base, one) -> Callable[[int], object]:
    cache = [one]

    def power(n: int):
        while len(cache) <= n:
            cache.append(cache[-1] * base)
        return cache[n]

    return power


class PuiseuxSeries1:
    """Univariate series ``sum c_p x**(p/denom)`` known modulo ``O(x**order)``.

    ``order`` is an exclusive bound (a Fraction or ``INF`` for exact finite
    sums); ``trunc_exp`` is the largest exponent still determined.
    """

    __slots__ = ("coeffs", "denom", "order")

    def __init__(self, coeffs: Mapping[int, object] | None = None, denom: int = 1, order=INF):
        if denom < 1:
            raise ValueError("denominator must be positive")
        order = order if order == INF else Fraction(order)
        clean = {}
        for p, c in (coeffs or {}).items():
            if order != INF and Fraction(p, denom) >= order:
                continue
            c = norm(c)
            if c != 0:
                clean[int(p)] = c
        self.coeffs = clean
        self.denom = int(denom)
        self.order = order

    @classmethod
    def from_exponents(cls, terms: Mapping, order=INF) -> "PuiseuxSeries1":
        """Build from ``{exponent: coeff}`` with rational exponents."""
        exps = [Fraction(e) for e in terms]
        d = math.lcm(*[e.denominator for e in exps]) if exps else 1
        if order != INF:
            d = math.lcm(d, Fraction(order).denominator)
        return cls({int(Fraction(e) * d): c for e, c in terms.items()}, d, order)

    @property
    def trunc_exp(self):
        return self.order - Fraction(1, self.denom) if self.order != INF else INF

    def exponents(self) -> list[Fraction]:
        return [Fraction(p, self.denom) for p in sorted(self.coeffs)]

    def terms(self) -> list[tuple[Fraction, object]]:
        return [(Fraction(p, self.denom), self.coeffs[p]) for p in sorted(self.coeffs)]

    def coeff(self, exponent):
        e = Fraction(exponent) * self.denom
        if e.denominator != 1:
            return Fraction(0)
        return self.coeffs.get(int(e), Fraction(0))

    def valuation(self):
        """Lowest exponent with a nonzero coefficient, else ``order``."""
        if self.coeffs:
            return Fraction(min(self.coeffs), self.denom)
        return self.order

    def leading(self):
        """``(exponent, coefficient)`` of the lowest term, or ``None`` if zero to order."""
        if not self.coeffs:
            return None
        p = min(self.coeffs)
        return Fraction(p, self.denom), self.coeffs[p]

    def is_zero(self) -> bool:
        return not self.coeffs

    def rescale(self, d: int) -> "PuiseuxSeries1":
        if d % self.denom:
            raise ValueError("new denominator must be a multiple of the old one")
        f = d // self.denom
        return PuiseuxSeries1({p * f: c for p, c in self.coeffs.items()}, d, self.order)

    def truncate(self, order) -> "PuiseuxSeries1":
        return PuiseuxSeries1(self.coeffs, self.denom, min(self.order, order))

    def _common(self, other: "PuiseuxSeries1"):
        d = math.lcm(self.denom, other.denom)
        return self.rescale(d), other.rescale(d), d

    def _coerce(self, other) -> "PuiseuxSeries1":
        if isinstance(other, PuiseuxSeries1):
            return other
        return PuiseuxSeries1({0: other}, self.denom)

    def __add__(self, other) -> "PuiseuxSeries1":
        a, b, d = self._common(self._coerce(other))
        out = dict(a.coeffs)
        for p, c in b.coeffs.items():
            out[p] = out.get(p, 0) + c
        return PuiseuxSeries1(out, d, min(a.order, b.order))

    __radd__ = __add__

    def __neg__(self) -> "PuiseuxSeries1":
        return PuiseuxSeries1({p: -c for p, c in self.coeffs.items()}, self.denom, self.order)

    def __sub__(self, other) -> "PuiseuxSeries1":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PuiseuxSeries1":
        return self._coerce(other) - self

    def scale(self, c) -> "PuiseuxSeries1":
        c = norm(c)
        return PuiseuxSeries1({p: v * c for p, v in self.coeffs.items()}, self.denom, self.order)

    def shift(self, exponent) -> "PuiseuxSeries1":
        """Multiply by ``x**exponent``."""
        e = Fraction(exponent)
        d = math.lcm(self.denom, e.denominator)
        s = self.rescale(d)
        k = int(e * d)
        order = s.order + e if s.order != INF else INF
        return PuiseuxSeries1({p + k: c for p, c in s.coeffs.items()}, d, order)

    def mul(self, other, cap=INF) -> "PuiseuxSeries1":
        """Product, discarding exponents ``>= cap``."""
        if not isinstance(other, PuiseuxSeries1):
            return self.scale(other).truncate(cap)
        a, b, d = self._common(other)
        va, vb = a.valuation(), b.valuation()
        order = min(_add_inf(a.order, vb), _add_inf(b.order, va), cap)
        lim = INF if order == INF else order * d
        rhs = sorted(b.coeffs.items())
        out: dict[int, object] = {}
        for p1, c1 in a.coeffs.items():
            for p2, c2 in rhs:
                if p1 + p2 >= lim:
                    break
                out[p1 + p2] = out.get(p1 + p2, 0) + c1 * c2
        return PuiseuxSeries1(out, d, order)

    def __mul__(self, other) -> "PuiseuxSeries1":
        return self.mul(other)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PuiseuxSeries1":
        result = PuiseuxSeries1({0: 1}, self.denom)
        for _ in range(n):
            result = result * self
        return result

    def derivative(self) -> "PuiseuxSeries1":
        d = self.denom
        out = {p - d: c * Fraction(p, d) for p, c in self.coeffs.items() if p}
        order = self.order - 1 if self.order != INF else INF
        return PuiseuxSeries1(out, d, order)

    def evaluate(self, x):
        """Float evaluation; fractional powers require ``x >= 0``."""
        total = 0.0
        for p, c in self.coeffs.items():
            e = p / self.denom
            if self.denom == 1 or p % self.denom == 0:
                total = total + float(c) * x ** (p // self.denom)
            else:
                total = total + float(c) * x**e
        return total

    __call__ = evaluate

    def evaluate_derivative(self, x):
        return self.derivative().evaluate(x)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PuiseuxSeries1):
            return NotImplemented
        a, b, _ = self._common(other)
        order = min(a.order, b.order)
        return a.truncate(order).coeffs == b.truncate(order).coeffs

    def __hash__(self):
        return hash((frozenset(self.coeffs.items()), self.denom))

    def __repr__(self) -> str:
        parts = [f"({_fmt_coeff(c)})*x^{e}" for e, c in self.terms()] or ["0"]
        tail = "" if self.order == INF else f" + O(x^{self.order})"
        return "PuiseuxSeries1(" + " + ".join(parts) + tail + ")"

    def to_dict(self) -> dict:
        return {
            "terms": [[str(e), str(c)] for e, c in self.terms()],
            "order": None if self.order == INF else str(self.order),
        }


def _add_inf(a, b):
    if a == INF or b == INF:
        return INF
    return a + b


def substitute_y(s: TruncSeries2, f: PuiseuxSeries1) -> PuiseuxSeries1:
    """``s(x, f(x))`` with conservative truncation tracking.

    Unknown terms of ``s`` contribute ``O(x**((K + 1) * min(1, val f)))`` and
    the uncertainty of ``f`` propagates through the ``y``-dependent terms.
    """
    if f.coeffs and min(f.coeffs) < 0:
        raise ValueError("substitute_y: f has negative exponents")
    if (f.coeffs and min(f.coeffs) == 0) or f.valuation() <= 0:
        raise ValueError("substitute_y: f(0) must vanish")
    vf = f.valuation()
    cap = Fraction(s.trunc_order + 1) * min(Fraction(1), vf if vf != INF else Fraction(1))
    maxj = max((j for _, j in s.coeffs), default=0)
    powers = [PuiseuxSeries1({0: 1}, f.denom)]
    for _ in range(maxj):
        powers.append(powers[-1].mul(f, cap))
    total = PuiseuxSeries1({}, f.denom, cap)
    for (i, j), c in s.coeffs.items():
        if i >= cap:
            continue
        term = powers[j].shift(i).scale(c).truncate(cap)
        total = total + term
    return total


def solve_implicit(s: TruncSeries2) -> PuiseuxSeries1:
    """Solve ``s(x, f(x)) = 0`` with ``f(0) = 0`` for ``s = y + A(x, y)``.

    Coefficients are fixed one order at a time: since ``ds/dy(0,0) = 1`` the
    residual coefficient at ``x**p`` depends on the unknown ``c_p`` with unit
    slope, so ``c_p`` is the negated residual.  The result is exact modulo
    ``O(x**(K + 1))``.
    """
    if s[(0, 0)] != 0:
        raise ValueError("solve_implicit: s(0,0) must vanish")
    if s[(0, 1)] != 1:
        raise ValueError(f"solve_implicit: ds/dy(0,0) = {s[(0, 1)]}, expected 1")
    K = s.trunc_order
    f = PuiseuxSeries1({}, 1, K + 1)
    for p in range(1, K + 1):
        r = substitute_y(s, f).coeff(p)
        if r != 0:
            coeffs = dict(f.coeffs)
            coeffs[p] = coeffs.get(p, 0) - r
            f = PuiseuxSeries1(coeffs, 1, K + 1)
    return f


class TPolySeries2:
    """Bivariate series in ``(x, y)`` with polynomial-in-``t`` coefficients.

    ``coeffs`` maps ``(i, j, p)`` to the coefficient of ``x**i y**j t**p``;
    truncation is by total ``(x, y)``-degree only.
    """

    __slots__ = ("coeffs", "trunc_order")

    def __init__(self, coeffs: Mapping[tuple[int, int, int], object] | None = None, trunc_order: int = 12):
        clean = {}
        for (i, j, p), c in (coeffs or {}).items():
            if i + j > trunc_order or c == 0:
                continue
            clean[(i, j, p)] = c
        self.coeffs = clean
        self.trunc_order = trunc_order

    @classmethod
    def lift(cls, s: TruncSeries2, K: int | None = None) -> "TPolySeries2":
        K = s.trunc_order if K is None else K
        return cls({(i, j, 0): c for (i, j), c in s.coeffs.items()}, K)

    def t_degree(self) -> int:
        return max((p for _, _, p in self.coeffs), default=0)

    def __add__(self, other: "TPolySeries2") -> "TPolySeries2":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0) + c
        return TPolySeries2(out, min(self.trunc_order, other.trunc_order))

    def scale(self, c) -> "TPolySeries2":
        return TPolySeries2({k: v * c for k, v in self.coeffs.items()}, self.trunc_order)

    def __mul__(self, other: "TPolySeries2") -> "TPolySeries2":
        K = min(self.trunc_order, other.trunc_order)
        rhs = sorted(other.coeffs.items(), key=lambda kv: kv[0][0] + kv[0][1])
        out: dict[tuple[int, int, int], object] = {}
        get = out.get
        for (i1, j1, p1), c1 in self.coeffs.items():
            room = K - i1 - j1
            for (i2, j2, p2), c2 in rhs:
                if i2 + j2 > room:
                    break
                key = (i1 + i2, j1 + j2, p1 + p2)
                out[key] = get(key, 0) + c1 * c2
        return TPolySeries2(out, K)

    def truncate(self, K: int) -> "TPolySeries2":
        return TPolySeries2(self.coeffs, min(K, self.trunc_order))

    def integrate(self) -> "TPolySeries2":
        """``int_0^t (.)(tau) dtau``."""
        return TPolySeries2({(i, j, p + 1): c / (p + 1) for (i, j, p), c in self.coeffs.items()}, self.trunc_order)

    def integrate_lagged(self) -> "TPolySeries2":
        """``int_0^t (t - tau) (.)(tau) dtau``."""
        return TPolySeries2(
            {(i, j, p + 2): c / ((p + 1) * (p + 2)) for (i, j, p), c in self.coeffs.items()},
            self.trunc_order,
        )

    def at(self, t) -> TruncSeries2:
        t = norm(t)
        out: dict[tuple[int, int], object] = {}
        for (i, j, p), c in self.coeffs.items():
            out[(i, j)] = out.get((i, j), 0) + c * t**p
        return TruncSeries2(out, self.trunc_order)


def compose_tpoly(s: TruncSeries2, p: TPolySeries2, q: TPolySeries2, K: int) -> TPolySeries2:
    """``s(p, q)`` truncated at total degree ``K`` (``p, q`` vanish at the origin)."""
    one = TPolySeries2({(0, 0, 0): Fraction(1)}, K)
    p, q = p.truncate(K), q.truncate(K)
    pw_p = _power_cache(p, one)
    pw_q = _power_cache(q, one)
    total = TPolySeries2({}, K)
    for (i, j), c in s.coeffs.items():
        if i + j > K:
            continue
        total = total + (pw_p(i) * pw_q(j)).scale(c)
    return total
