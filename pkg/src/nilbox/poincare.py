"""Poincare return map on the characteristic curve near a nilpotent focus.

The section is ``E(x, y) = y - f(x) = 0``.  Starting at ``(x0, f(x0))`` the
return is the first later crossing with ``x * x0 > 0``.  Crossings are
located by scipy's event root finder on the dense output.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .fractal import DimensionReport, OrbitSample, fit_exponent, interval_union_dimension
from .series import INF, PuiseuxSeries1
from .system_model import CharData, PlanarSystem, make_field

EVENT_TOL = 1e-10
DIM_TOL = 0.04


class ReturnMapError(RuntimeError):
    """No admissible return (not a focus, or the start point is too far out)."""


class Indeterminate(ValueError):
    """No integer cyclicity bound is consistent with the data."""


def focus_conditions(cd: CharData) -> dict:
    """Leading-term focus test with ``F = -B(x, f)`` and ``G = -div`` along the curve.

    Needs ``F ~ a x^(2n-1)`` with ``a > 0`` and ``b^2 - 4 n a < 0`` where ``b``
    is the ``x^(n-1)`` coefficient of ``G`` (zero if absent).
    """
    out = {"holds": False}
    if cd.m == INF or cd.m % 2 == 0:
        out["reason"] = "F has no odd leading power"
        return out
    n = (int(cd.m) + 1) // 2
    a = -cd.a
    b = -cd.G.coeff(n - 1)
    disc = b * b - 4 * n * a
    out.update({"n": n, "a": str(a), "b": str(b), "discriminant": str(disc)})
    out["holds"] = bool(n >= 2 and a > 0 and disc < 0)
    if not out["holds"]:
        out["reason"] = "a <= 0" if a <= 0 else ("n < 2" if n < 2 else "discriminant >= 0")
    return out


def _section(f: PuiseuxSeries1 | None):
    if f is None or f.is_zero():
        return lambda x: 0.0
    return f.evaluate


def _crossings(sys: PlanarSystem, f, x0: float, *, sign: float, count: int, rtol: float, guard: float, t_max: float, chunk: float = 200.0):
    """First ``count`` same-side crossings of ``y = f(x)`` after leaving ``(x0, f(x0))``."""
    fx = _section(f)
    rhs = make_field(sys.xdot.float_terms(), sys.ydot.float_terms(), sign)

    def section(t, s):
        return s[1] - fx(s[0])

    def escape(t, s):
        return guard - math.hypot(s[0], s[1])

    escape.terminal = True
    state = np.array([x0, fx(x0)])
    t0, found, residuals = 0.0, [], []
    while len(found) < count:
        if t0 >= t_max:
            raise ReturnMapError(f"no return within time {t_max} (after {len(found)} returns)")
        sol = solve_ivp(rhs, (t0, t0 + chunk), state, method="DOP853", rtol=rtol, atol=1e-30, events=[section, escape])
        if sol.status == -1:
            raise ReturnMapError(f"integration failed: {sol.message}")
        for t, y in zip(sol.t_events[0], sol.y_events[0]):
            if t <= 1e-9 or y[0] * x0 <= 0:
                continue
            found.append(y[0])
            residuals.append(abs(y[1] - fx(y[0])))
            if len(found) >= count:
                break
        if len(sol.t_events[1]) and len(found) < count:
            raise ReturnMapError(f"trajectory left the radius {guard} (after {len(found)} returns)")
        t0, state = sol.t[-1], sol.y[:, -1]
    return np.array(found[:count]), np.array(residuals[:count])


def return_map(sys: PlanarSystem, f, x0: float, *, inverse: bool = False, rtol: float = 1e-12, guard: float = 1.0, t_max: float = 1e5) -> float:
    """``P(x0)`` (or ``P^-1(x0)`` with ``inverse``), the next same-side hit of ``y = f(x)``."""
    if x0 == 0:
        raise ValueError("x0 must be nonzero")
    xs, res = _crossings(sys, f, x0, sign=-1.0 if inverse else 1.0, count=1, rtol=rtol, guard=guard, t_max=t_max)
    if res[0] > EVENT_TOL:
        raise ReturnMapError(f"event residual {res[0]:.2e} exceeds {EVENT_TOL}")
    return float(xs[0])


def focus_direction(sys: PlanarSystem, f, x1: float, *, rtol: float = 1e-12, guard: float = 1.0) -> bool:
    """``True`` when the focus repels (iterate the inverse map), from one forward return."""
    p1 = return_map(sys, f, x1, rtol=rtol, guard=guard)
    return abs(p1) > abs(x1)


def poincare_sequence(sys: PlanarSystem, f, x1: float, N: int = 200, *, inverse: bool | None = None, rtol: float = 1e-12, guard: float = 1.0, t_max: float = 1e6) -> OrbitSample:
    """``x_{k+1} = P(x_k)`` (stable) or ``P^-1(x_k)`` (unstable) from one long integration.

    With ``inverse=None`` the direction is chosen from the first return.
    """
    if inverse is None:
        inverse = focus_direction(sys, f, x1, rtol=rtol, guard=guard)
    notes = ["inverse map"] if inverse else []
    xs, res = _crossings(sys, f, x1, sign=-1.0 if inverse else 1.0, count=N - 1, rtol=rtol, guard=guard, t_max=t_max)
    if res.max(initial=0.0) > EVENT_TOL:
        raise ReturnMapError(f"event residual {res.max():.2e} exceeds {EVENT_TOL}")
    seq = np.concatenate([[x1], xs])
    d = np.diff(np.abs(seq))
    if np.all(np.abs(d) < 1e-12 * abs(x1)):
        notes.append("center-like, no dimension claim")
    elif not np.all(d < 0):
        notes.append("sequence not monotone")
    return OrbitSample(seq, "poincare_map", (x1,), notes)


@dataclass
class PoincareFit:
    samples: list  # (x0, P(x0))
    direction: str  # "forward" or "inverse"
    fitted_exp: float
    fitted_coeff: float
    fit_r2: float
    seq_dim: DimensionReport  # exponent fit of the return sequence (primary)
    seq_union: DimensionReport  # interval-union cross-check
    k_dim: int | None
    k_disp: int | None
    pattern: str | None  # "2k+1" or "2k+2" for the dimension match
    notes: list = field(default_factory=list)
    sequence: OrbitSample | None = field(default=None, repr=False)

    @property
    def exponent_is_integer(self) -> bool:
        return abs(self.fitted_exp - round(self.fitted_exp)) <= 0.1

    @property
    def consistent(self) -> bool:
        return self.k_dim is not None and self.k_dim == self.k_disp

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "displacement": {
                "fitted_exp": round(self.fitted_exp, 6),
                "fitted_coeff": float(f"{self.fitted_coeff:.6g}"),
                "fit_r2": round(self.fit_r2, 6),
                "integer_within_0.1": self.exponent_is_integer,
                "k": self.k_disp,
            },
            "sequence_dim": self.seq_dim.to_dict(),
            "sequence_interval_union": self.seq_union.to_dict(),
            "k_from_dimension": self.k_dim,
            "pattern": self.pattern,
            "consistent": self.consistent,
            "samples": [[float(f"{a:.12g}"), float(f"{b:.12g}")] for a, b in self.samples],
            "notes": self.notes,
        }


def k_from_dimension(dim: float, tol: float = DIM_TOL):
    """Integer ``k`` with ``dim`` within ``tol`` of ``1 - 1/(2k+1)`` or ``1 - 1/(2k+2)``.

    Returns ``(k, pattern)``; the closest match wins.
    """
    best = None
    for j in range(1, 200):
        err = abs(dim - (1 - 1 / j))
        if err <= tol and (best is None or err < best[0]):
            best = (err, j)
    if best is None:
        raise Indeterminate(f"dimension {dim:.4f} matches no 1 - 1/j within {tol}")
    j = best[1]
    return k_from_exponent(j), ("2k+1" if j % 2 else "2k+2")


def k_from_exponent(j: int) -> int:
    """``k`` with ``j = 2k+1`` or ``j = 2k+2``."""
    if j < 1:
        raise Indeterminate(f"exponent {j} < 1")
    return (j - 1) // 2


def displacement_fit(sys, f, x_values, *, inverse: bool = False, rtol: float = 1e-12, guard: float = 1.0):
    """Least-squares ``|P(x) - x| ~ c x^j`` over the given start points."""
    samples = [(float(x), return_map(sys, f, float(x), inverse=inverse, rtol=rtol, guard=guard)) for x in x_values]
    xs = np.array([s[0] for s in samples])
    disp = np.array([s[1] - s[0] for s in samples])
    if np.any(disp == 0) or len(set(np.sign(disp))) != 1:
        raise Indeterminate("displacement changes sign or vanishes over the sample window")
    lx, ld = np.log(np.abs(xs)), np.log(np.abs(disp))
    j, c = np.polyfit(lx, ld, 1)
    resid = ld - (j * lx + c)
    ss = float(np.sum((ld - ld.mean()) ** 2))
    r2 = 1 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return samples, float(j), float(np.sign(disp[0]) * math.exp(c)), r2


def analyze_focus(sys: PlanarSystem, f, *, x1: float = 0.2, N: int = 200, x_grid=None, rtol: float = 1e-12, guard: float = 1.0) -> PoincareFit:
    """Sequence dimension, displacement exponent and both k estimates."""
    inverse = focus_direction(sys, f, x1, rtol=rtol, guard=guard)
    seq = poincare_sequence(sys, f, x1, N, inverse=inverse, rtol=rtol, guard=guard)
    notes = list(seq.warnings)
    if "center-like, no dimension claim" in notes:
        raise Indeterminate("center-like, no dimension claim")
    if x_grid is None:
        x_grid = np.geomspace(x1, x1 / 16, 9)
    samples, j, c, r2 = displacement_fit(sys, f, x_grid, inverse=inverse, rtol=rtol, guard=guard)
    seq_dim = fit_exponent(seq)
    seq_union = interval_union_dimension(seq)
    try:
        k_dim, pattern = k_from_dimension(seq_dim.estimate)
    except Indeterminate as exc:
        k_dim, pattern = None, None
        notes.append(str(exc))
    k_disp = None
    if abs(j - round(j)) <= 0.1:
        k_disp = k_from_exponent(int(round(j)))
    else:
        notes.append(f"displacement exponent {j:.3f} is not an integer within 0.1")
    fit = PoincareFit(samples, "inverse" if inverse else "forward", j, c, r2, seq_dim, seq_union, k_dim, k_disp, pattern, notes, seq)
    if not fit.consistent:
        fit.notes.append("indeterminate at this resolution: dimension-based and displacement-based k differ")
    return fit


def cyclicity_bound(fit: PoincareFit) -> int:
    """At most ``k`` limit cycles bifurcate; requires both estimators to agree."""
    if not fit.consistent:
        raise Indeterminate("indeterminate at this resolution")
    return fit.k_dim


def write_sequence_csv(path, seq: OrbitSample) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "x"])
        for k, x in enumerate(seq.points):
            w.writerow([k, repr(float(x))])


def write_displacement_csv(path, fit: PoincareFit) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x0", "P(x0)-x0"])
        for x, p in fit.samples:
            w.writerow([repr(x), repr(p - x)])
