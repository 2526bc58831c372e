"""Discrete orbits of the unit-time map and box-dimension estimators.

Three estimators are provided:

* ``fit_exponent``: slope of ``log|x_k - x_{k+1}|`` against ``log|x_k|``
  gives ``alpha`` and the dimension ``1 - 1/alpha``.
* ``interval_union_dimension``: exact length of the union of
  ``[x_k - eps, x_k + eps]`` over an eps ladder.
* ``grid_boxcount_dimension``: occupancy of a square grid of side ``eps/2``,
  a cell counting when its centre lies within ``eps`` of the sample.

``spiral_boxcount_dimension`` is the grid count specialised to a sampled
trajectory spiralling into a point.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .series import INF, TruncSeries2
from .system_model import PlanarSystem, make_field

log = logging.getLogger(__name__)

SOURCES = ("numerical_flow", "truncated_map", "poincare_map", "synthetic")
UNDERFLOW = 1e-13
HEAD = 0.25  # fraction of an orbit treated as transient


class OrbitWarning(UserWarning):
    pass


@dataclass
class OrbitSample:
    points: np.ndarray  # shape (N, 2), or (N,) for scalar sequences
    source: str
    initial: tuple
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.source not in SOURCES:
            raise ValueError(f"unknown orbit source {self.source!r}")

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def is_scalar(self) -> bool:
        return self.points.ndim == 1

    def projection(self, axis: int) -> "OrbitSample":
        if self.is_scalar:
            raise ValueError("already a scalar sample")
        return OrbitSample(self.points[:, axis], self.source, self.initial, list(self.warnings))

    def mapped(self, fn) -> "OrbitSample":
        """Apply ``fn(x, y) -> (x', y')`` pointwise (for example a coordinate change)."""
        x, y = fn(self.points[:, 0], self.points[:, 1])
        return OrbitSample(np.column_stack([x, y]), self.source, self.initial, list(self.warnings))


@dataclass
class DimensionReport:
    estimate: float
    method: str
    fit_r2: float
    scale_range: tuple
    prediction: Fraction | None = None
    exponent: float | None = None
    note: str = ""
    ladder: list = field(default_factory=list, repr=False)

    @property
    def discrepancy(self) -> float | None:
        if self.prediction is None:
            return None
        return abs(self.estimate - float(self.prediction))

    def with_prediction(self, p) -> "DimensionReport":
        self.prediction = None if p is None else Fraction(p)
        return self

    def to_dict(self) -> dict:
        out = {
            "estimate": round(self.estimate, 6),
            "method": self.method,
            "fit_r2": round(self.fit_r2, 6),
            "scale_range": [float(f"{s:.6g}") for s in self.scale_range],
        }
        if self.exponent is not None:
            out["exponent"] = round(self.exponent, 6)
        if self.prediction is not None:
            out["prediction"] = str(self.prediction)
            out["discrepancy"] = round(self.discrepancy, 6)
        if self.note:
            out["note"] = self.note
        return out


# ---------------------------------------------------------------- orbits


def _poly_eval(terms):
    ii = np.array([t[0] for t in terms], dtype=int)
    jj = np.array([t[1] for t in terms], dtype=int)
    cc = np.array([t[2] for t in terms], dtype=float)

    def ev(x, y):
        return float(np.sum(cc * x**ii * y**jj)) if len(cc) else 0.0

    return ev


def _integrate_unit_steps(rhs, start, n_steps, *, rtol, guard, stop_norm, stop_x=None):
    """Integrate and sample at integer times; returns (points, reason)."""

    def escape(t, s):
        return guard - math.hypot(s[0], s[1])

    def collapse(t, s):
        return math.hypot(s[0], s[1]) - stop_norm

    events = [escape, collapse]
    escape.terminal = collapse.terminal = True
    if stop_x is not None:

        def reach(t, s):
            return abs(s[0]) - stop_x

        def cross(t, s):
            return s[0]

        reach.terminal = cross.terminal = True
        reach.direction = 1
        events += [reach, cross]
    sol = solve_ivp(
        rhs,
        (0.0, float(n_steps)),
        list(start),
        method="DOP853",
        t_eval=np.arange(n_steps + 1, dtype=float),
        rtol=rtol,
        atol=1e-30,
        events=events,
    )
    if sol.status == -1:
        raise FloatingPointError(f"integration failed: {sol.message}")
    pts = sol.y.T
    reason = "done"
    if sol.status == 1:
        for name, ev in zip(("escape", "collapse", "reach", "cross"), sol.t_events):
            if len(ev):
                reason = name
                if name == "reach":
                    pts = np.vstack([pts, sol.y_events[2][0]])
                break
    return pts, reason


def generate_orbit(
    sys: PlanarSystem,
    x0,
    N: int = 2000,
    mode: str = "numerical_flow",
    *,
    time_sign: int = 1,
    rtol: float = 1e-12,
    guard: float = 1.0,
    K_u: int | None = None,
) -> OrbitSample:
    """Iterate the time-``time_sign`` map ``N`` times from the point ``x0``.

    ``time_sign = -1`` gives orbits of the inverse map, used when the origin
    repels along the curve of interest.
    """
    if N < 50:
        raise ValueError("orbit length N must be at least 50")
    if time_sign not in (1, -1):
        raise ValueError("time_sign must be +1 or -1")
    start = (float(x0[0]), float(x0[1]))
    notes = []
    if mode == "numerical_flow":
        rhs = make_field(sys.xdot.float_terms(), sys.ydot.float_terms(), float(time_sign))
        pts, reason = _integrate_unit_steps(rhs, start, N, rtol=rtol, guard=guard, stop_norm=1e-14)
    elif mode == "truncated_map":
        from .unit_time import default_unit_order, picard_unit_time

        if K_u is None:
            from .system_model import char_data

            K_u = default_unit_order(char_data(sys))
        U = picard_unit_time(sys, K_u, reverse=time_sign < 0)
        u1, u2 = _poly_eval(U.U1.float_terms()), _poly_eval(U.U2.float_terms())
        pts = [start]
        reason = "done"
        x, y = start
        for _ in range(N):
            x, y = u1(x, y), u2(x, y)
            if not (math.isfinite(x) and math.isfinite(y)) or math.hypot(x, y) > guard:
                reason = "escape"
                break
            pts.append((x, y))
            if math.hypot(x, y) < 1e-14:
                reason = "collapse"
                break
        pts = np.array(pts)
    else:
        raise ValueError(f"unknown orbit mode {mode!r}")
    if reason == "escape":
        msg = f"orbit left the guard radius {guard} after {len(pts) - 1} steps"
        warnings.warn(msg, OrbitWarning, stacklevel=2)
        notes.append(msg)
    r = np.hypot(pts[:, 0], pts[:, 1])
    if len(r) > 2 and not r[-1] < r[0]:
        notes.append("orbit does not approach the origin")
    return OrbitSample(pts, mode, start, notes)


def seeded_orbit(
    sys: PlanarSystem,
    seed,
    x_stop: float,
    *,
    time_sign: int = 1,
    max_steps: int = 200000,
    rtol: float = 1e-12,
    guard: float = 1.0,
) -> OrbitSample:
    """Orbit of the time-``time_sign`` map ending at ``seed``.

    Integrates the opposite direction from ``seed`` (close to the origin) in
    unit steps until ``|x|`` exceeds ``x_stop`` (or ``x`` changes sign) and
    reverses the list.  This
    follows curves that are repelling in the transverse direction, where a
    forward integration would drift off.
    """
    rhs = make_field(sys.xdot.float_terms(), sys.ydot.float_terms(), -float(time_sign))
    pts, reason = _integrate_unit_steps(
        rhs, (float(seed[0]), float(seed[1])), max_steps, rtol=rtol, guard=guard, stop_norm=0.0, stop_x=x_stop
    )
    notes = []
    if reason == "cross":
        notes.append(f"seeded orbit turned back through x = 0 before |x| reached {x_stop}")
    elif reason != "reach":
        notes.append(f"seeded orbit stopped ({reason}) before |x| reached {x_stop}")
    else:
        pts = pts[:-1]  # the event point is not on the unit-time lattice
    pts = pts[::-1]
    # keep the part where |x| decreases monotonically toward the seed
    ax = np.abs(pts[:, 0])
    bad = np.nonzero(np.diff(ax) >= 0)[0]
    if len(bad):
        cut = int(bad[-1]) + 1
        notes.append(f"dropped {cut} leading points where |x| is not monotone")
        pts = pts[cut:]
    return OrbitSample(pts, "numerical_flow", tuple(pts[0]), notes)


def synthetic_sequence(alpha: float, x0: float = 0.5, N: int = 10000, c: float = 1.0) -> OrbitSample:
    """``x_{k+1} = x_k - c x_k**alpha``."""
    xs = np.empty(N)
    x = x0
    for k in range(N):
        xs[k] = x
        x = x - c * x**alpha
    return OrbitSample(xs, "synthetic", (x0,))


# ---------------------------------------------------------------- estimators


def _as_scalar(seq) -> np.ndarray:
    if isinstance(seq, OrbitSample):
        if not seq.is_scalar:
            raise ValueError("expected a scalar sample; take a projection first")
        seq = seq.points
    return np.abs(np.asarray(seq, dtype=float))


def _linfit(lx, ly):
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return float(slope), min(max(r2, 0.0), 1.0)


def fit_exponent(seq, *, discard: float = 0.25, prediction=None, min_points: int = 30) -> DimensionReport:
    """Fit ``|x_k - x_{k+1}| ~ |x_k|**alpha``; dimension ``1 - 1/alpha``."""
    x = _as_scalar(seq)
    d = -np.diff(x)
    if np.any(d <= 0):
        raise ValueError("sequence is not strictly monotone toward 0")
    start = int(len(d) * discard)
    xs, ds = x[start:-1], d[start:]
    ok = (ds > UNDERFLOW) & (ds > 1e-10 * xs)
    if ok.sum() < min_points:
        raise ValueError(f"only {int(ok.sum())} usable differences (need {min_points})")
    lx, ld = np.log(xs[ok]), np.log(ds[ok])
    alpha, r2 = _linfit(lx, ld)
    rng = (float(xs[ok].min()), float(xs[ok].max()))
    if alpha <= 1.0:
        return DimensionReport(0.0, "exponent_fit", r2, rng, prediction, alpha, "hyperbolic-like, dimension 0")
    return DimensionReport(1.0 - 1.0 / alpha, "exponent_fit", r2, rng, prediction, alpha)


def _ladder(eps0, levels, gaps, *, resolution):
    """eps values for the neighbourhood estimators.

    With ``eps0`` given the ladder is ``eps0 * 2**-i`` restricted to
    ``eps >= resolution``.  Otherwise it runs geometrically from the final
    gap up to half the gap at the end of the transient (first quarter), so
    every level has both a separated head and an overlapping nucleus.
    """
    note = ""
    if eps0 is not None:
        eps = eps0 * 2.0 ** -np.arange(levels + 1)
        keep = eps >= resolution
        if not keep.all():
            note = f"ladder shrunk to {int(keep.sum())} levels (sample resolution {resolution:.3g})"
            warnings.warn(note, OrbitWarning, stacklevel=3)
        eps = eps[keep]
    else:
        hi = gaps[int(len(gaps) * HEAD)] / 2.0
        lo = resolution
        if hi <= lo * 1.5:
            hi = max(gaps.max() / 2.0, lo * 4)
        eps = np.geomspace(hi, lo, levels + 1)
    if len(eps) < 3:
        raise ValueError("eps ladder has fewer than 3 usable levels")
    return eps, note


def interval_union_dimension(seq, *, eps0: float | None = None, levels: int = 10, prediction=None) -> DimensionReport:
    """1D Minkowski estimate from the exact measure of the eps-neighbourhood.

    Points below the last sample are represented by the interval
    ``[0, x_min]``, which is what the neighbourhood of the infinite tail
    fills once ``2 eps`` exceeds the final gap.
    """
    x = np.sort(_as_scalar(seq))[::-1]
    x = x[x > 0]
    gaps = -np.diff(x)
    if len(gaps) < 30:
        raise ValueError("need at least 30 points")
    eps, note = _ladder(eps0, levels, gaps, resolution=gaps[-1])
    meas = np.array([x[-1] + 2 * e + np.minimum(gaps, 2 * e).sum() for e in eps])
    slope, r2 = _linfit(np.log(eps), np.log(meas))
    est = min(max(1.0 - slope, 0.0), 1.0)
    return DimensionReport(est, "interval_union", r2, (float(eps.min()), float(eps.max())), prediction, None, note, list(zip(eps.tolist(), meas.tolist())))


def _resample(points: np.ndarray, spacing: float) -> np.ndarray:
    """Insert points along consecutive segments so no gap exceeds ``spacing``."""
    seg = np.diff(points, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    reps = np.maximum(np.ceil(lens / spacing).astype(np.int64), 1)
    idx = np.repeat(np.arange(len(seg)), reps)
    offs = np.arange(int(reps.sum())) - np.repeat(np.cumsum(reps) - reps, reps)
    frac = offs / np.repeat(reps, reps)
    out = points[idx] + seg[idx] * frac[:, None]
    return np.vstack([out, points[-1:]])


_OFFS = np.array([(di, dj) for di in range(-2, 3) for dj in range(-2, 3)], dtype=np.int64)


def _marked_cells(pts: np.ndarray, h: float, chunk: int = 200000) -> np.ndarray:
    """Codes of cells of side ``h`` whose centres lie within ``2h`` of a point."""
    out = []
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk] / h
        base = np.floor(p).astype(np.int64)
        ci = base[:, None, 0] + _OFFS[None, :, 0]
        cj = base[:, None, 1] + _OFFS[None, :, 1]
        hit = (ci + 0.5 - p[:, None, 0]) ** 2 + (cj + 0.5 - p[:, None, 1]) ** 2 <= 4.0
        codes = (ci[hit] << 32) + (cj[hit] & 0xFFFFFFFF)
        out.append(np.unique(codes))
    return np.unique(np.concatenate(out)) if out else np.empty(0, dtype=np.int64)


def _disk_cells(radius: float, h: float) -> np.ndarray:
    n = int(math.ceil(radius / h)) + 1
    i = np.arange(-n, n, dtype=np.int64)
    ci, cj = np.meshgrid(i, i, indexing="ij")
    hit = ((ci + 0.5) * h) ** 2 + ((cj + 0.5) * h) ** 2 <= radius**2
    return np.unique((ci[hit] << 32) + (cj[hit] & 0xFFFFFFFF))


def grid_boxcount_dimension(
    orbit,
    *,
    eps0: float | None = None,
    levels: int = 10,
    tail: str = "segment",
    polyline: bool = False,
    prediction=None,
) -> DimensionReport:
    """2D Minkowski estimate by grid occupancy; dimension ``2 - slope``.

    ``tail`` closes the part of the set beyond the last sample: ``"segment"``
    adds the straight segment to the origin, ``"disk"`` fills the disk of
    radius ``|p_last|`` (spirals), ``"none"`` adds nothing.  With
    ``polyline`` the samples are treated as a continuous curve.
    """
    pts = orbit.points if isinstance(orbit, OrbitSample) else np.asarray(orbit, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected an (N, 2) point array")
    step = np.hypot(*np.diff(pts, axis=0).T)
    if polyline:
        gaps = np.sort(step)[::-1]
        resolution = float(np.max(step))
    else:
        gaps = step
        resolution = float(step[-1])
    if len(gaps) < 30:
        raise ValueError("need at least 30 points")
    eps, note = _ladder(eps0, levels, gaps, resolution=resolution)
    last = pts[-1]
    r_end = float(np.hypot(*last))
    area = []
    for e in eps:
        h = e / 2.0
        sample = pts
        if polyline:
            sample = _resample(pts, h / 2.0)
        if tail == "segment":
            sample = np.vstack([sample, _resample(np.array([last, [0.0, 0.0]]), h / 2.0)])
        codes = _marked_cells(sample, h)
        if tail == "disk":
            codes = np.union1d(codes, _disk_cells(r_end + e, h))
        area.append(len(codes) * h * h)
    area = np.array(area)
    slope, r2 = _linfit(np.log(eps), np.log(area))
    est = min(max(2.0 - slope, 0.0), 1.999999)
    return DimensionReport(est, "grid_boxcount", r2, (float(eps.min()), float(eps.max())), prediction, None, note, list(zip(eps.tolist(), area.tolist())))


def _scanline_fill(loop: np.ndarray, h: float) -> np.ndarray:
    """Codes of cells of side ``h`` whose centres lie inside the closed polygon ``loop``."""
    p = np.vstack([loop, loop[:1]]) / h
    x0, y0, x1, y1 = p[:-1, 0], p[:-1, 1], p[1:, 0], p[1:, 1]
    rows = np.arange(int(np.floor(p[:, 1].min())), int(np.ceil(p[:, 1].max())) + 1)
    out = []
    for j in rows:
        yc = j + 0.5
        hit = (y0 <= yc) != (y1 <= yc)
        if not hit.any():
            continue
        xs = np.sort(x0[hit] + (yc - y0[hit]) * (x1[hit] - x0[hit]) / (y1[hit] - y0[hit]))
        for a, b in zip(xs[0::2], xs[1::2]):
            i = np.arange(int(np.ceil(a - 0.5)), int(np.floor(b - 0.5)) + 1, dtype=np.int64)
            if len(i):
                out.append((i << 32) + (j & 0xFFFFFFFF))
    return np.unique(np.concatenate(out)) if out else np.empty(0, dtype=np.int64)


def spiral_boxcount_dimension(curve, *, center=(0.0, 0.0), eps0: float | None = None, levels: int = 5, prediction=None) -> DimensionReport:
    """Grid box count of a densely sampled spiral converging to ``center``.

    Turns are cut where the curve crosses the ray ``y = y_c, x > x_c`` (either
    orientation).  For
    each eps the first turn whose radial spacing drops below ``2 eps`` starts
    the nucleus: the curve up to the end of that turn is rasterised and the
    region inside the turn is filled, since the rest of the spiral lies in it
    and is eps-dense there.
    """
    pts = np.asarray(curve, dtype=float) - np.asarray(center, dtype=float)
    y = pts[:, 1]
    down = np.nonzero((y[:-1] > 0) & (y[1:] <= 0) & (pts[:-1, 0] > 0))[0]
    up = np.nonzero((y[:-1] < 0) & (y[1:] >= 0) & (pts[:-1, 0] > 0))[0]
    idx = down if len(down) >= len(up) else up  # clockwise or counter-clockwise
    if len(idx) < 8:
        raise ValueError("spiral has fewer than 8 turns")
    w = y[idx] / (y[idx] - y[idx + 1])
    xr = pts[idx, 0] + w * (pts[idx + 1, 0] - pts[idx, 0])
    gaps = np.abs(np.diff(xr))
    if eps0 is None:
        eps = np.geomspace(gaps[len(gaps) // 8] / 4.0, gaps[-1], levels + 1)
    else:
        eps = eps0 * 2.0 ** -np.arange(levels + 1)
    note = ""
    area, used = [], []
    for e in eps:
        k = np.nonzero(gaps < 2 * e)[0]
        if not len(k) or k[0] + 1 >= len(idx):
            note = "ladder shrunk: finest levels below the last turn spacing"
            continue
        k = int(k[0])
        h = e / 2.0
        head = _resample(pts[: idx[k + 1] + 1], h / 2.0)
        codes = np.union1d(_marked_cells(head, h), _scanline_fill(pts[idx[k] + 1 : idx[k + 1] + 1], h))
        area.append(len(codes) * h * h)
        used.append(e)
    if len(used) < 3:
        raise ValueError("eps ladder has fewer than 3 usable levels")
    eps, area = np.array(used), np.array(area)
    slope, r2 = _linfit(np.log(eps), np.log(area))
    est = min(max(2.0 - slope, 0.0), 1.999999)
    return DimensionReport(est, "grid_boxcount", r2, (float(eps.min()), float(eps.max())), prediction, None, note, list(zip(eps.tolist(), area.tolist())))


# ---------------------------------------------------------------- closed forms


def joint_power_dimension(alpha, beta):
    """Joint dimension of a pair of sequences with gap exponents ``alpha``, ``beta``."""
    if alpha <= 1 or beta <= 1:
        raise ValueError("gap exponents must exceed 1")
    top = max(alpha, beta)
    if isinstance(top, (int, Fraction)):
        return 1 - Fraction(1) / Fraction(top)
    return 1.0 - 1.0 / top


def _as_exact(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, float) and v.is_integer():
        return Fraction(int(v))
    return v


def separatrix_dimensions(m, n, gamma):
    """``(dim Gamma_x, dim Gamma_y, dim Gamma)`` for an orbit on ``y ~ x**gamma``.

    ``n = INF`` (divergence vanishing along the curve) falls in the
    ``m <= n + 1`` branch.  Exact for rational ``gamma``.
    """
    g = _as_exact(gamma)
    if not 1 < g < m:
        raise ValueError(f"gamma = {gamma} must lie in (1, m) = (1, {m})")
    one = Fraction(1) if isinstance(g, Fraction) else 1.0
    dx = one - one / g
    if n == INF or m <= n + 1:
        dy = one - g / m
        joint = dx if g * g >= m else dy
    else:
        dy = one - g / (n + g)
        # gamma >= (1 + sqrt(1 + 4n))/2  <=>  gamma**2 - gamma >= n for gamma > 0
        joint = dx if g * g - g >= n else dy
    return dx, dy, joint


def separatrix_branch(m, n, gamma) -> str:
    g = _as_exact(gamma)
    if n == INF or m <= n + 1:
        return "m<=n+1, " + ("gamma^2>=m" if g * g >= m else "gamma^2<m")
    return "m>n+1, " + ("gamma>=(1+sqrt(1+4n))/2" if g * g - g >= n else "gamma<(1+sqrt(1+4n))/2")


# ---------------------------------------------------------------- csv


def write_orbit_csv(path, orbit: OrbitSample) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if orbit.is_scalar:
            w.writerow(["k", "x"])
            for k, x in enumerate(orbit.points):
                w.writerow([k, repr(float(x))])
        else:
            w.writerow(["k", "x", "y"])
            for k, (x, y) in enumerate(orbit.points):
                w.writerow([k, repr(float(x)), repr(float(y))])


def write_ladder_csv(path, report: DimensionReport) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "measure"])
        for e, v in report.ladder:
            w.writerow([repr(e), repr(v)])


def write_fits_csv(path, reports: dict) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "method", "estimate", "fit_r2", "scale_min", "scale_max", "prediction"])
        for name in sorted(reports):
            r = reports[name]
            w.writerow([name, r.method, f"{r.estimate:.6f}", f"{r.fit_r2:.6f}", f"{r.scale_range[0]:.6g}", f"{r.scale_range[1]:.6g}", "" if r.prediction is None else str(r.prediction)])
