"""Command line front end.

Subcommands read a system JSON file (or the name of a bundled system, see
``nilbox list``) and print a JSON report.  ``bt-atlas`` needs no input: it
samples the unfolding ``x' = y, y' = b1 + b2 x + x^2 - x y``.

Exit status: 0 on success, 1 for input errors, 2 for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from . import __version__
from .classifier import Kind, classify, cusp_cyclicity_bound, node_cyclicity_lower_bound
from .cusp_infinity import (
    chart2_orbit,
    chart2_transform,
    flattened_points,
    separatrix_orbit,
    separatrix_series,
)
from .fractal import (
    DimensionReport,
    OrbitSample,
    fit_exponent,
    generate_orbit,
    grid_boxcount_dimension,
    interval_union_dimension,
    seeded_orbit,
    spiral_boxcount_dimension,
    separatrix_branch,
    separatrix_dimensions,
    write_fits_csv,
    write_ladder_csv,
    write_orbit_csv,
)
from .poincare import (
    Indeterminate,
    ReturnMapError,
    analyze_focus,
    cyclicity_bound,
    focus_conditions,
    write_displacement_csv,
    write_sequence_csv,
)
from .series import INF, TruncSeries2
from .system_model import InputError, PlanarSystem, char_data, parse_system, system_from_terms
from .unit_time import (
    characteristic_dimension,
    characteristic_map,
    default_unit_order,
    leading_map_coefficients,
    picard_unit_time,
)

SCHEMA_VERSION = "1.0"

DEFAULTS = {
    "orbit_n": 2000,
    "x0": 0.3,
    "tol": 1e-12,
    "eps_levels": 10,
    "poincare_x0": 0.2,
    "poincare_n": 200,
}


class NumericalError(RuntimeError):
    pass


def bundled_systems() -> list[str]:
    root = resources.files("nilbox") / "systems"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_system(arg: str, order: int | None = None) -> PlanarSystem:
    path = Path(arg)
    if path.exists():
        text = path.read_text()
    elif arg in bundled_systems():
        text = (resources.files("nilbox") / "systems" / f"{arg}.json").read_text()
    else:
        raise InputError(f"no such file or bundled system: {arg!r}")
    sys_ = parse_system(text)
    if order is not None:
        if order < 2:
            raise InputError("--order must be >= 2")
        sys_ = sys_.with_order(order)
    return sys_


def _frac(v):
    if v is None:
        return None
    if v == INF:
        return "inf"
    return str(v)


def _pred(report: DimensionReport, p) -> dict:
    report.with_prediction(p)
    return report.to_dict()


# ---------------------------------------------------------------- report


@dataclass
class AnalysisReport:
    system: dict
    char_data: dict
    classification: dict
    sections: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "system": self.system,
            "char_data": self.char_data,
            "classification": self.classification,
            "warnings": sorted(set(self.warnings)),
        }
        out.update(self.sections)
        return out


def _unitmap_section(s: PlanarSystem, cd, opts) -> dict:
    K_u = opts.order if opts.order is not None else default_unit_order(cd)
    U = picard_unit_time(s, K_u, cd=cd)
    cm = characteristic_map(U, cd.f.truncate(K_u + 1))
    dim = characteristic_dimension(cm)
    out = {
        "unit_map": U.to_dict(),
        "leading_coefficients": leading_map_coefficients(U, cd),
        "char_map": cm.to_dict(),
        "dim_ch": _frac(dim) if dim is not None else "0 (C_h = x to this order)",
    }
    return out


def _scalar_reports(seq: OrbitSample, pred, opts) -> dict:
    fit = fit_exponent(seq)
    union = interval_union_dimension(seq, eps0=opts.eps0, levels=opts.eps_levels)
    return {"exponent_fit": _pred(fit, pred), "interval_union": _pred(union, pred)}


def _dimension_section(s: PlanarSystem, cd, cls, opts, csv_dir) -> dict:
    out: dict = {}
    if cls.kind not in (Kind.CUSP, Kind.NODE):
        out["note"] = f"no separatrix orbit for {cls.kind.value}"
        return out
    seps = separatrix_series(s, cd=cd, cls=cls)
    branches = []
    fits = {}
    for sep in seps:
        try:
            pred = separatrix_dimensions(int(cd.m), cd.n, sep.gamma)
            branch_name = separatrix_branch(int(cd.m), cd.n, sep.gamma)
        except ValueError as exc:
            pred, branch_name = (None, None, None), str(exc)
        orbit = separatrix_orbit(s, sep, x0=opts.x0, N=opts.orbit_n)
        flat = flattened_points(orbit, cd, sep.side)
        if sep.side < 0:
            flat = flat.mapped(lambda x, y: (-x, -y))
        entry = {
            "separatrix": sep.to_dict(),
            "predictions": {"x": _frac(pred[0]), "y": _frac(pred[1]), "joint": _frac(pred[2]), "branch": branch_name},
            "orbit": {"points": orbit.count, "source": orbit.source, "coordinates": "(x, y - f(x))", "warnings": orbit.warnings},
            "x": _scalar_reports(flat.projection(0), pred[0], opts),
            "y": _scalar_reports(flat.projection(1), pred[1], opts),
            "joint": _pred(grid_boxcount_dimension(flat, eps0=opts.eps0, levels=opts.eps_levels), pred[2]),
        }
        branches.append(entry)
        if csv_dir:
            write_orbit_csv(csv_dir / f"orbit_{sep.branch}.csv", orbit)
            write_orbit_csv(csv_dir / f"orbit_{sep.branch}_flattened.csv", flat)
            fits[f"{sep.branch}_x"] = fit_exponent(flat.projection(0)).with_prediction(pred[0])
            fits[f"{sep.branch}_y"] = fit_exponent(flat.projection(1)).with_prediction(pred[1])
            joint = grid_boxcount_dimension(flat, eps0=opts.eps0, levels=opts.eps_levels).with_prediction(pred[2])
            fits[f"{sep.branch}_joint"] = joint
            write_ladder_csv(csv_dir / f"ladder_{sep.branch}_joint.csv", joint)
    if csv_dir and fits:
        write_fits_csv(csv_dir / "fits.csv", fits)
    out["separatrices"] = branches
    if cls.kind == Kind.NODE:
        out["cyclicity_lower_bound"] = node_cyclicity_lower_bound(int(cd.m))
    return out


def _poincare_section(s: PlanarSystem, cd, cls, opts, csv_dir) -> dict:
    cond = focus_conditions(cd)
    out = {"focus_conditions": cond}
    if cls.kind != Kind.CENTER_OR_FOCUS or not cond["holds"]:
        raise NumericalError(f"Poincare analysis needs a nilpotent focus; got {cls.kind.value} (case {cls.case_label}), focus test: {cond.get('reason', 'ok')}")
    f = cd.f.truncate(min(s.trunc_order, 12))
    fit = analyze_focus(s, f, x1=opts.poincare_x0, N=opts.poincare_n, rtol=opts.tol)
    out["analysis"] = fit.to_dict()
    try:
        out["cyclicity_bound"] = cyclicity_bound(fit)
    except Indeterminate as exc:
        out["cyclicity_bound"] = None
        out["indeterminate"] = str(exc)
    if csv_dir:
        write_displacement_csv(csv_dir / "displacement.csv", fit)
        write_sequence_csv(csv_dir / "return_sequence.csv", fit.sequence)
    return out


def _infinity_section(s: PlanarSystem, opts, csv_dir) -> dict:
    inf = chart2_transform(s)
    out = inf.to_dict()
    orbit = chart2_orbit(inf, u0=opts.x0, N=opts.orbit_n)
    u = orbit.projection(0)
    out["chart2_orbit"] = {"points": orbit.count, "warnings": orbit.warnings, "u": _scalar_reports(u, inf.chart2_dim, opts)}
    if csv_dir:
        write_orbit_csv(csv_dir / "chart2_orbit.csv", orbit)
    return out


def build_report(s: PlanarSystem, command: str, opts, csv_dir: Path | None = None) -> AnalysisReport:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cd = char_data(s)
        cls = classify(cd)
        rep = AnalysisReport(s.to_dict(), cd.summary(), cls.to_dict())
        if cls.kind == Kind.CUSP:
            rep.sections["cusp_cyclicity_bound"] = cusp_cyclicity_bound(int(cd.n)) if cd.n != INF else None
        if command in ("unitmap", "dimension"):
            rep.sections["unitmap"] = _unitmap_section(s, cd, opts)
        if command == "dimension":
            rep.sections["dimension"] = _dimension_section(s, cd, cls, opts, csv_dir)
        if command == "poincare":
            rep.sections["poincare"] = _poincare_section(s, cd, cls, opts, csv_dir)
        if command == "infinity":
            rep.sections["infinity"] = _infinity_section(s, opts, csv_dir)
    rep.warnings.extend(str(w.message) for w in caught)
    return rep


# ---------------------------------------------------------------- BT atlas

P_SLOPE = Fraction(-6, 25)  # homoclinic curve b1 ~ -6/25 b2^2, b2 < 0 (label only)
BT_TOL = 1e-3


@dataclass
class BTAtlasEntry:
    beta: tuple
    label: str
    flags: list = field(default_factory=list)
    equilibria: list = field(default_factory=list)
    dimensions: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "beta": [str(b) for b in self.beta],
            "label": self.label,
            "flags": self.flags,
            "equilibria": self.equilibria,
            "dimensions": self.dimensions,
            "notes": self.notes,
        }


def bt_label(b1, b2) -> tuple[str, list]:
    """Region or curve of ``(b1, b2)``; near-miss points get a flag."""
    b1, b2 = Fraction(b1), Fraction(b2)
    if b1 == 0 and b2 == 0:
        return "origin", []
    fold = b2 * b2 / 4
    if b1 == fold:
        return ("T-" if b2 < 0 else "T+"), []
    if b1 == 0 and b2 < 0:
        return "H", []
    if b2 < 0 and b1 == P_SLOPE * b2 * b2:
        return "P", []
    flags = []
    scale = max(abs(b1), b2 * b2, Fraction(1, 10**9))
    for name, gap in (("T", b1 - fold), ("H", b1 if b2 < 0 else None), ("P", b1 - P_SLOPE * b2 * b2 if b2 < 0 else None)):
        if gap is not None and abs(gap) / scale < BT_TOL:
            flags.append(f"ambiguous: within {BT_TOL} (relative) of curve {name}")
    if b1 > fold:
        return "1", flags
    if b2 < 0 and 0 < b1 < fold:
        return "2", flags
    if b2 < 0 and P_SLOPE * b2 * b2 < b1 < 0:
        return "3", flags
    return "4", flags


def bt_system(b1, b2, x_star=0) -> PlanarSystem:
    """The unfolding written around ``(x_star, 0)``: ``xi = x - x_star``.

    ``y' = c + (b2 + 2 x*) xi + xi^2 - x* y - xi y`` with ``c`` the value at
    the shift point (zero at an equilibrium).
    """
    b1, b2, xs = Fraction(b1), Fraction(b2), Fraction(x_star)
    c = b1 + b2 * xs + xs * xs
    terms = {(0, 0): c, (1, 0): b2 + 2 * xs, (2, 0): Fraction(1), (0, 1): -xs, (1, 1): Fraction(-1)}
    K = 8
    return PlanarSystem(TruncSeries2({(0, 1): Fraction(1)}, K), TruncSeries2({k: v for k, v in terms.items() if v}, K), K, {}, True, f"BT({b1}, {b2}) at x = {xs}")


def _equilibria(b1: float, b2: float) -> list[float]:
    disc = b2 * b2 - 4 * b1
    if disc < -1e-15:
        return []
    if abs(disc) <= 1e-15:
        return [-b2 / 2]
    r = math.sqrt(disc)
    return sorted([(-b2 - r) / 2, (-b2 + r) / 2])


def _eq_type(x_star: float, b2: float) -> tuple[str, list, np.ndarray]:
    J = np.array([[0.0, 1.0], [b2 + 2 * x_star, -x_star]])
    tr, det = float(np.trace(J)), float(np.linalg.det(J))
    ev = np.linalg.eigvals(J)
    if abs(det) < 1e-14 and abs(tr) < 1e-14:
        kind = "nilpotent cusp"
    elif abs(det) < 1e-14:
        kind = "saddle-node"
    elif det < 0:
        kind = "saddle"
    elif abs(tr) < 1e-14:
        kind = "weak focus"
    elif tr * tr - 4 * det < 0:
        kind = "stable focus" if tr < 0 else "unstable focus"
    else:
        kind = "stable node" if tr < 0 else "unstable node"
    eig = sorted(([float(e.real), float(e.imag)] for e in ev), key=lambda p: (p[0], p[1]))
    return kind, [[round(a, 9), round(b, 9)] for a, b in eig], J


def _hyperbolic_dimension(b1, b2, x_star: float, J: np.ndarray, kind: str, N: int) -> dict:
    """Exponent fit of the eigen-coordinate radius along a converging orbit."""
    s = bt_system(b1, b2, Fraction(x_star))
    ev, vecs = np.linalg.eig(J)
    # time-tau map with |Re lambda| tau <= 0.1, so the fit sees enough steps before underflow
    tau = Fraction(min(1.0, 0.1 / float(np.max(np.abs(ev.real))))).limit_denominator(1000)
    ydot = {k: tau * v for k, v in s.ydot.coeffs.items() if k != (0, 0)}
    s = PlanarSystem(s.xdot.scale(tau), TruncSeries2(ydot, 8), 8, {}, True, s.label)
    if np.iscomplexobj(ev) and abs(ev[0].imag) > 0:
        P = np.column_stack([vecs[:, 0].real, vecs[:, 0].imag])
    else:
        P = vecs.real
    Pinv = np.linalg.inv(P)
    time_sign = 1 if kind.startswith("stable") else -1
    start = 0.05 * max(abs(x_star), 0.1)
    orbit = generate_orbit(s, (start, 0.0), N, time_sign=time_sign)
    q = orbit.points @ Pinv.T
    r = np.hypot(q[:, 0], q[:, 1])
    r = r[r > 1e-12]
    rep = fit_exponent(r, prediction=0)
    d = rep.to_dict()
    d["coordinates"] = "eigen-basis radius"
    d["time_step"] = str(tau)
    return d


def _saddle_node_dimension(b1, b2, x_star: float, N: int) -> dict:
    """Sequence dimension of the unit-time orbit on the centre manifold."""
    s = bt_system(b1, b2, Fraction(x_star).limit_denominator(10**9))
    # centre manifold y ~ xi^2 / x*, so xi' ~ xi^2 / x*: approach from xi with sign -sign(x*)
    side = -1.0 if x_star > 0 else 1.0
    if x_star > 0:
        # transverse direction attracts: follow the slow eigenvector forward
        xi0 = 0.2 * abs(x_star) * side
        orbit = generate_orbit(s, (xi0, xi0 * xi0 / (x_star + xi0)), N)
    else:
        xi0 = 5e-4 * abs(x_star) * side
        orbit = seeded_orbit(s, (xi0, xi0 * xi0 / x_star), 0.6 * abs(x_star), max_steps=50 * N)
    xi = orbit.projection(0)
    out = {"exponent_fit": _pred(fit_exponent(xi), Fraction(1, 2)), "interval_union": _pred(interval_union_dimension(xi), Fraction(1, 2))}
    out["orbit_points"] = orbit.count
    out["orbit_warnings"] = orbit.warnings
    return out


def _cusp_entry_dimensions(N: int) -> dict:
    s = system_from_terms([(0, 1, 1)], [(2, 0, 1), (1, 1, -1)], label="BT origin")
    cd = char_data(s)
    cls = classify(cd)
    out = {}
    for sep in separatrix_series(s, cd=cd, cls=cls):
        orbit = separatrix_orbit(s, sep, x0=0.3, N=N)
        sx, sy = orbit.projection(0), orbit.projection(1)
        out[sep.branch] = {
            "S_x": _pred(fit_exponent(sx), Fraction(1, 3)),
            "S_y": _pred(fit_exponent(sy), Fraction(1, 4)),
            "S": _pred(grid_boxcount_dimension(orbit), Fraction(1, 3)),
            "S_x_interval_union": _pred(interval_union_dimension(sx), Fraction(1, 3)),
        }
    U = picard_unit_time(s, default_unit_order(cd), cd=cd)
    out["dim_ch"] = str(characteristic_dimension(characteristic_map(U, cd.f)))
    return out


def _weak_focus_dimensions(b1, b2, x_star: float, spiral: bool) -> dict:
    s = bt_system(b1, b2, Fraction(x_star))
    scale = min(abs(float(b2)), 1.0)
    fit = analyze_focus(s, None, x1=0.2 * scale, N=200)
    out = {"poincare": fit.to_dict()}
    out["poincare"]["sequence_dim"]["prediction"] = "2/3"
    out["poincare"]["sequence_dim"]["discrepancy"] = round(abs(fit.seq_dim.estimate - 2 / 3), 6)
    out["poincare"]["sequence_interval_union"]["prediction"] = "2/3"
    out["poincare"]["sequence_interval_union"]["discrepancy"] = round(abs(fit.seq_union.estimate - 2 / 3), 6)
    if spiral:
        out["spiral"] = _pred(spiral_trajectory_dimension(s, 0.6 * scale), Fraction(4, 3))
    return out


def spiral_trajectory_dimension(s: PlanarSystem, r0: float, T: float = 3000.0, dt: float = 0.02) -> DimensionReport:
    """Box count of the trajectory from ``(r0, 0)``, sampled every ``dt``."""
    rhs = s.vector_field()
    sol = solve_ivp(rhs, (0.0, T), [r0, 0.0], method="DOP853", rtol=1e-11, atol=1e-14, dense_output=True)
    if sol.status != 0:
        raise NumericalError(f"spiral integration failed: {sol.message}")
    pts = sol.sol(np.arange(0.0, T, dt)).T
    if not np.all(np.isfinite(pts)) or np.hypot(*pts[-1]) >= r0:
        raise NumericalError("trajectory does not spiral in")
    return spiral_boxcount_dimension(pts)


def atlas_entry(b1, b2, *, N: int = 2000, spiral: bool = True) -> BTAtlasEntry:
    b1, b2 = Fraction(b1), Fraction(b2)
    label, flags = bt_label(b1, b2)
    entry = BTAtlasEntry((b1, b2), label, flags)
    if label == "P":
        entry.notes.append("global bifurcation, dimension out of scope")
        return entry
    fb1, fb2 = float(b1), float(b2)
    for x_star in _equilibria(fb1, fb2):
        kind, eig, J = _eq_type(x_star, fb2)
        entry.equilibria.append({"x": round(x_star, 12), "y": 0.0, "type": kind, "eigenvalues": eig})
        key = f"x={x_star + 0.0:.6g}"
        try:
            if kind == "nilpotent cusp":
                entry.dimensions[key] = _cusp_entry_dimensions(N)
            elif kind == "saddle-node":
                entry.dimensions[key] = {"centre_manifold": _saddle_node_dimension(b1, b2, x_star, N)}
            elif kind == "weak focus":
                entry.dimensions[key] = _weak_focus_dimensions(b1, b2, x_star, spiral)
            elif kind in ("stable focus", "unstable focus", "stable node", "unstable node"):
                entry.dimensions[key] = {"hyperbolic": _hyperbolic_dimension(b1, b2, x_star, J, kind, 600)}
            else:
                entry.notes.append(f"{kind} at x = {x_star:.6g}: no accumulating orbit sampled")
        except (ReturnMapError, Indeterminate, ValueError, NumericalError) as exc:
            entry.notes.append(f"{kind} at x = {x_star:.6g}: {exc}")
    if not entry.equilibria:
        entry.notes.append("no equilibria")
    return entry


DEFAULT_ATLAS = (
    ("0", "0"),
    ("1/4", "-1"),
    ("1/4", "1"),
    ("0", "-1/2"),
    ("1/2", "-1"),
    ("1/10", "-1"),
    ("-1/20", "-1"),
    ("-1/10", "2"),
    ("-6/25", "-1"),
)


def _entry_job(args):
    b1, b2, N, spiral = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return atlas_entry(Fraction(b1), Fraction(b2), N=N, spiral=spiral).to_dict()


def cmd_bt_atlas(points=DEFAULT_ATLAS, *, N: int = 2000, spiral: bool = True, jobs: int | None = None) -> list[dict]:
    """Atlas entries in input order; points are evaluated in parallel."""
    work = [(str(Fraction(b1)), str(Fraction(b2)), N, spiral) for b1, b2 in points]
    jobs = jobs or min(len(work), os.cpu_count() or 1)
    if jobs <= 1:
        return [_entry_job(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_entry_job, work))


# ---------------------------------------------------------------- argparse


def _parse_beta(text: str):
    try:
        b1, b2 = text.split(",")
        return Fraction(b1.strip()), Fraction(b2.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"expected B1,B2 (rationals), got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nilbox", description="Nilpotent singularities: unit-time map, classification and box dimensions.")
    p.add_argument("--version", action="version", version=f"nilbox {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("system", help="system JSON file or bundled system name")
    common.add_argument("--order", type=int, default=None, metavar="K", help="truncation order of the series (default: from the system, at least 12)")
    common.add_argument("--orbit-n", type=int, default=DEFAULTS["orbit_n"], metavar="N", help="orbit length (default 2000)")
    common.add_argument("--x0", type=float, default=DEFAULTS["x0"], help="orbit start abscissa (default 0.3; 0.2 for poincare)")
    common.add_argument("--tol", type=float, default=DEFAULTS["tol"], help="integrator rtol (default 1e-12)")
    common.add_argument("--eps0", type=float, default=None, help="largest eps of the dimension ladder (default: adaptive)")
    common.add_argument("--eps-levels", type=int, default=DEFAULTS["eps_levels"], help="number of halvings in the ladder (default 10)")
    common.add_argument("--csv-dir", type=Path, default=None, help="write CSV sidecars here")
    common.add_argument("--json", type=Path, default=None, metavar="PATH", help="write the report to PATH instead of stdout")

    for name, help_ in (
        ("classify", "characteristic data and singularity type"),
        ("unitmap", "unit-time map, characteristic map and dim_ch"),
        ("dimension", "separatrix orbits and their box dimensions"),
        ("poincare", "return map and cyclicity of a nilpotent focus"),
        ("infinity", "charts at infinity for x' = y, y' = a x^m + b x^n y"),
    ):
        sub.add_parser(name, parents=[common], help=help_)

    bt = sub.add_parser("bt-atlas", help="sample the Bogdanov-Takens unfolding")
    bt.add_argument("--beta", type=_parse_beta, action="append", default=None, metavar="B1,B2", help="parameter point (repeatable; write --beta=-1/10,2 for a negative B1); default: one point per region and curve")
    bt.add_argument("--orbit-n", type=int, default=DEFAULTS["orbit_n"], metavar="N")
    bt.add_argument("--no-spiral", action="store_true", help="skip the trajectory box count on H")
    bt.add_argument("--jobs", type=int, default=None, help="worker processes (default: one per point, capped by CPUs)")
    bt.add_argument("--json", type=Path, default=None, metavar="PATH")

    sub.add_parser("list", help="list bundled systems")
    return p


def _emit(doc, path: Path | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for name in bundled_systems():
                print(name)
            return 0
        if args.command == "bt-atlas":
            pts = args.beta or DEFAULT_ATLAS
            entries = cmd_bt_atlas(pts, N=args.orbit_n, spiral=not args.no_spiral, jobs=args.jobs)
            _emit({"schema_version": SCHEMA_VERSION, "entries": entries}, args.json)
            return 0
        if args.orbit_n < 50:
            raise InputError("--orbit-n must be at least 50")
        args.poincare_x0 = args.x0 if args.x0 != DEFAULTS["x0"] else DEFAULTS["poincare_x0"]
        args.poincare_n = max(args.orbit_n // 10, 50)
        s = load_system(args.system, args.order)
        csv_dir = args.csv_dir
        if csv_dir is not None:
            csv_dir.mkdir(parents=True, exist_ok=True)
        rep = build_report(s, args.command, args, csv_dir)
        _emit(rep.to_dict(), args.json)
        return 0
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, ReturnMapError, Indeterminate, ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
