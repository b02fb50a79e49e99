"""Command-line front end: potentials, lambda grids, suites and file output.

Every suite produces a list of ReportRecord rows. A record passes iff its
residual is at most its tolerance, and the process exits with status 0 iff
every record passes. Numeric tables are written as CSV with 17 significant
digits; structured reports as JSON. Column orders are fixed (docs/formats.md).
"""

from __future__ import annotations

import argparse
import csv
import importlib
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import interpolate

from . import cubicexp, invscatter, jost, scatter
from .cubicexp import ZETA1, ZETA2
from .jost import AdmissibilityError, Potential

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

# Anchor -> "module:attribute" of the implementation the record exercises.
ANCHORS = {
    "genexp-identity": "cubic_ist.cubicexp:identity_residuals",
    "transition-unimodular": "cubic_ist.scatter:TransitionMatrix.det_residual",
    "transition-j-unitary": "cubic_ist.scatter:TransitionMatrix.j_unitarity_residual",
    "transition-cofactor": "cubic_ist.scatter:TransitionMatrix.cofactor_residual",
    "scattering-unitarity": "cubic_ist.scatter:unitarity_residual",
    "jost-asymptotic-moment": "cubic_ist.jost:moment_estimate",
    "bound-state-zero": "cubic_ist.scatter:find_bound_states",
    "jump-ray-zeta1": "cubic_ist.scatter:jump_sides",
    "jump-ray-zeta2": "cubic_ist.scatter:jump_sides",
    "nystrom-conditioning": "cubic_ist.invscatter:FredholmSolver",
    "reconstruction-real": "cubic_ist.invscatter:recover_q",
    "roundtrip-bound-state": "cubic_ist.scatter:find_bound_states",
}


def resolve_anchor(anchor: str):
    """Import the object an anchor points at; raises KeyError/AttributeError if it does not exist."""
    mod_name, attr = ANCHORS[anchor].split(":")
    obj = importlib.import_module(mod_name)
    for part in attr.split("."):
        obj = getattr(obj, part)
    return obj


class ConfigError(ValueError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass(frozen=True)
class ReportRecord:
    check: str
    anchor: str
    residual: float
    tolerance: float
    detail: str = ""

    def __post_init__(self):
        if self.anchor not in ANCHORS:
            raise ValueError(f"unknown anchor {self.anchor!r}")

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{flag}  {self.check}: residual {self.residual:.3e} <= {self.tolerance:.1e}{extra}"


# ---------------------------------------------------------------------------
# formatting


def fmt(v) -> str:
    """17 significant digits; integers and strings pass through."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def records_csv(records: Sequence[ReportRecord]) -> str:
    return csv_text(["check", "anchor", "residual", "tolerance", "pass"],
                    [(r.check, r.anchor, r.residual, r.tolerance, r.passed) for r in records])


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# potentials


def _bump_profile(x, w):
    x = np.asarray(x, dtype=float) / w
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def builtin_potential(name: str, params: Optional[dict] = None) -> Potential:
    """Named profiles with a decay rate chosen so the weighted L2 condition holds with margin.

    gaussian: q0 exp(-x^2 / w^2), a = 3 by default.
    bump:     q0 exp(1 - 1 / (1 - (x/w)^2)) on |x| < w, zero outside, a = 3 by default.
    sech:     q0 sech(x / w), a = 0.5 / w by default (half the true decay rate).
    samples:  cubic spline through (x, q), zero outside the sampled range.
    """
    p = dict(params or {})
    name = name.lower()
    if name == "gaussian":
        q0, w = float(p.pop("q0", 0.1)), float(p.pop("w", 1.0))
        if w <= 0:
            raise ConfigError("potential.w", "must be positive")
        a = float(p.pop("decay_rate", 3.0))
        q = (lambda x: q0 * np.exp(-(np.asarray(x, dtype=float) / w) ** 2)) if q0 else \
            (lambda x: np.zeros_like(np.asarray(x, dtype=float)))
        extent = max(40.0, 12 * w)
        pars = {"q0": q0, "w": w}
    elif name == "bump":
        q0, w = float(p.pop("q0", 0.05)), float(p.pop("w", 1.0))
        if w <= 0:
            raise ConfigError("potential.w", "must be positive")
        a = float(p.pop("decay_rate", 3.0))
        q = lambda x: q0 * _bump_profile(x, w)
        extent = max(40.0, 2 * w)
        pars = {"q0": q0, "w": w}
    elif name == "sech":
        q0, w = float(p.pop("q0", 0.1)), float(p.pop("w", 1.0))
        if w <= 0:
            raise ConfigError("potential.w", "must be positive")
        a = float(p.pop("decay_rate", 0.5 / w))
        q = lambda x: q0 / np.cosh(np.asarray(x, dtype=float) / w)
        extent = max(40.0, 60 * w)
        pars = {"q0": q0, "w": w}
    elif name == "samples":
        xs = np.asarray(p.pop("x"), dtype=float)
        qs = np.asarray(p.pop("q"), dtype=float)
        if "decay_rate" not in p:
            raise ConfigError("potential.decay_rate", "required for sampled potentials")
        a = float(p.pop("decay_rate"))
        if xs.ndim != 1 or xs.size != qs.size or xs.size < 4 or np.any(np.diff(xs) <= 0):
            raise ConfigError("potential.x", "need at least four increasing samples matching q")
        spline = interpolate.CubicSpline(xs, qs)
        lo, hi = float(xs[0]), float(xs[-1])

        def q(x):
            x = np.asarray(x, dtype=float)
            return np.where((x >= lo) & (x <= hi), spline(np.clip(x, lo, hi)), 0.0)

        extent = max(abs(lo), abs(hi)) + 1.0
        pars = {"n": int(xs.size), "x_min": lo, "x_max": hi}
    else:
        raise ConfigError("potential.type", f"unknown potential {name!r}")
    if p:
        raise ConfigError("potential", f"unexpected parameters {sorted(p)}")
    if not a > 0:
        raise ConfigError("potential.decay_rate", "must be positive")
    pot = Potential(q=q, decay_rate=a, name=name, extent=extent, params=pars)
    pot.admissibility()
    return pot


def load_potential(spec) -> Potential:
    """From a dict, a JSON file {type, params..., decay_rate}, or a two-column CSV (needs decay_rate)."""
    if isinstance(spec, (str, Path)):
        path = Path(spec)
        if path.suffix.lower() == ".csv":
            raise ConfigError("potential", "CSV potentials need a JSON wrapper with decay_rate")
        spec = json.loads(path.read_text())
        if "csv" in spec:
            data = np.loadtxt(path.parent / spec.pop("csv"), delimiter=",", skiprows=1, ndmin=2)
            spec = {**spec, "type": "samples", "x": data[:, 0].tolist(), "q": data[:, 1].tolist()}
    spec = dict(spec)
    kind = spec.pop("type", None)
    if kind is None:
        raise ConfigError("potential.type", "missing")
    params = dict(spec.pop("params", {}))
    params.update(spec)
    return builtin_potential(kind, params)


def potential_summary(pot: Potential) -> dict:
    lhs, holds = scatter.zero_region_condition(pot)
    return {"name": pot.name, "params": pot.params, "decay_rate": pot.decay_rate,
            "q1": pot.q1, "q2": pot.q2, "sigma_inf": float(pot.sigma(pot.extent + 1)),
            "zero_region_lhs": lhs, "zero_region_condition_holds": holds}


# ---------------------------------------------------------------------------
# lambda grids


@dataclass(frozen=True)
class LambdaPoint:
    label: str
    lam: complex


def default_lambda_grid(a: float, n_real: int = 20, n_ray: int = 10, n_imag: int = 10,
                        omega: tuple = (5.0, 40.0), lo: float = 0.02) -> list[LambdaPoint]:
    """Midpoints of (lo, a/3) on the real axis and on the rays i l_{zeta1}, i l_{zeta2}, plus i omega."""
    hi = a / 3
    if hi <= lo:
        raise ConfigError("lambda_grid", f"a/3 = {hi:.3g} does not exceed the lower end {lo}")

    def mids(n):
        return lo + (hi - lo) * (np.arange(n) + 0.5) / n

    pts = [LambdaPoint("real", complex(t)) for t in mids(n_real)]
    pts += [LambdaPoint("ray_zeta1", 1j * ZETA1 * t) for t in mids(n_ray)]
    pts += [LambdaPoint("ray_zeta2", 1j * ZETA2 * t) for t in mids(n_ray)]
    pts += [LambdaPoint("imag", 1j * w) for w in np.geomspace(omega[0], omega[1], n_imag)]
    return pts


def load_lambda_grid(spec, a: float) -> list[LambdaPoint]:
    """{"points": [{"re", "im", "label"}...]} or keyword overrides of the default grid."""
    if spec is None:
        return default_lambda_grid(a)
    if isinstance(spec, (str, Path)):
        spec = json.loads(Path(spec).read_text())
    if "points" in spec:
        out = []
        for i, p in enumerate(spec["points"]):
            try:
                out.append(LambdaPoint(str(p.get("label", "custom")), complex(p["re"], p.get("im", 0.0))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"lambda_grid.points[{i}]", str(exc)) from exc
        return out
    kw = {k: spec[k] for k in ("n_real", "n_ray", "n_imag", "lo") if k in spec}
    if "omega" in spec:
        kw["omega"] = tuple(spec["omega"])
    return default_lambda_grid(a, **kw)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    subcommand: str
    potential: Optional[dict] = None
    lambda_grid: Optional[dict] = None
    tolerances: dict = field(default_factory=dict)
    out: Optional[str] = None
    report: Optional[str] = None
    seed: int = 0
    options: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.subcommand not in SUITES:
            raise ConfigError("subcommand", f"unknown subcommand {self.subcommand!r}")
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerances.{k}", "must be a positive number")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")
        return self

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))


DEFAULT_TOLERANCES = {
    "identity": 1e-11,
    "det": 1e-6,
    "j_unitarity": 1e-6,
    "unitarity": 1e-6,
    "cofactor": 1e-6,
    "asymptotic": 0.05,
    "bound_zero": 1e-8,
    "jump": 1e-4,
    "condition": 1e12,
    "imag_q": 1e-6,
    "kappa": 1e-2,
}


def threads() -> int:
    try:
        return max(1, int(os.environ.get("CUBIC_IST_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn: Callable, items: Sequence) -> list:
    n = threads()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


@dataclass
class SuiteResult:
    records: list
    table: Optional[str] = None       # CSV or JSON body for --out
    summary: Optional[dict] = None


# ---------------------------------------------------------------------------
# suites


def suite_identities(cfg: RunConfig) -> SuiteResult:
    n = int(cfg.options.get("samples", 1000))
    radius = float(cfg.options.get("radius", 5.0))
    if n <= 0 or radius <= 0:
        raise ConfigError("options", "samples and radius must be positive")
    rng = np.random.default_rng(cfg.seed)  # fixed seed => identical samples and CSV
    r = radius * np.sqrt(rng.random((2, n)))
    th = 2 * np.pi * rng.random((2, n))
    zs = r * np.exp(1j * th)
    worst = {fam: 0.0 for fam in cubicexp.IDENTITY_FAMILIES}
    for z, w in zip(zs[0], zs[1]):
        for fam, v in cubicexp.identity_residuals(z, w).items():
            worst[fam] = max(worst[fam], v)
    tol = cfg.tol("identity")
    recs = [ReportRecord(f"identity[{fam}]", "genexp-identity", v, tol) for fam, v in worst.items()]
    table = csv_text(["identity", "max_residual", "samples"], [(f, v, n) for f, v in worst.items()])
    return SuiteResult(recs, table)


FORWARD_COLUMNS = (
    ["label", "lambda_re", "lambda_im"]
    + [f"t0{k}_{p}" for k in range(3) for p in ("re", "im")]
    + ["sc1_re", "sc1_im", "sc2_re", "sc2_im", "det_re", "det_im",
       "det_residual", "junitarity_residual", "unitarity_residual", "cofactor_residual",
       "moment_re", "moment_im", "moment_rel_error"]
)


def _forward_row(pot: Potential, pt: LambdaPoint, x_moment: float):
    lam = pt.lam
    nan = float("nan")
    if pt.label == "imag":
        m = jost.moment_estimate(pot, lam.imag, x_moment)
        exact = float(pot.integral_from(x_moment))
        rel = abs(m - exact) / abs(exact) if exact else abs(m)
        row = [pt.label, lam.real, lam.imag] + [nan] * 6 + [nan] * 4 + [nan] * 2 + [nan] * 4
        return row + [m.real, m.imag, rel], None
    rec = scatter.forward_record(pot, lam)
    t = rec.T.t[0]
    det = np.linalg.det(rec.T.t)
    co = rec.coeffs
    sc = [co.sc1.real, co.sc1.imag, co.sc2.real, co.sc2.imag] if co else [nan] * 4
    unit = co.unitarity_residual if co else nan
    row = [pt.label, lam.real, lam.imag]
    for v in t:
        row += [v.real, v.imag]
    row += sc + [det.real, det.imag, rec.det_residual, rec.j_unitarity_residual, unit,
                 rec.cofactor_residual, nan, nan, nan]
    return row, rec


def suite_forward(cfg: RunConfig) -> SuiteResult:
    pot = load_potential(cfg.potential or {"type": "gaussian"})
    grid = load_lambda_grid(cfg.lambda_grid, pot.decay_rate)
    x_moment = float(cfg.options.get("x", 0.0))
    results = _pmap(lambda pt: _forward_row(pot, pt, x_moment), grid)
    rows = [r for r, _ in results]
    recs = []
    fwd = [rec for _, rec in results if rec is not None]
    if fwd:
        recs.append(ReportRecord("forward[det T = 1]", "transition-unimodular",
                                 max(r.det_residual for r in fwd), cfg.tol("det")))
        recs.append(ReportRecord("forward[J-unitarity]", "transition-j-unitary",
                                 max(r.j_unitarity_residual for r in fwd), cfg.tol("j_unitarity")))
        recs.append(ReportRecord("forward[cofactor]", "transition-cofactor",
                                 max(r.cofactor_residual for r in fwd), cfg.tol("cofactor")))
        unit = [r.coeffs.unitarity_residual for r in fwd if r.coeffs is not None]
        if unit:
            recs.append(ReportRecord("forward[unitarity]", "scattering-unitarity", max(unit),
                                     cfg.tol("unitarity")))
    imag = [r for r in rows if r[0] == "imag"]
    if imag:
        last = max(imag, key=lambda r: r[2])
        recs.append(ReportRecord(f"forward[asymptotic moment, omega={last[2]:g}, x={x_moment:g}]",
                                 "jost-asymptotic-moment", last[-1], cfg.tol("asymptotic")))
    summary = {"potential": potential_summary(pot), "n_lambda": len(grid)}
    return SuiteResult(recs, csv_text(FORWARD_COLUMNS, rows), summary)


def _bound_state_dicts(report: scatter.BoundStateReport) -> list:
    return [{"ray": s.ray, "kappa": s.kappa, "b_re": s.b.real, "b_im": s.b.imag,
             "t00_abs": s.t00_abs, "t00p_abs": s.t00p_abs, "simple": s.simple}
            for s in report.states]


def suite_bound_states(cfg: RunConfig) -> SuiteResult:
    pot = load_potential(cfg.potential or {"type": "gaussian"})
    scan = scatter.BoundSearchConfig(n_scan=int(cfg.options.get("n_scan", 400)))
    report = scatter.find_bound_states(pot, scan)
    recs = [ReportRecord(f"bound-states[{s.ray} kappa={s.kappa:.6g}]", "bound-state-zero",
                         s.t00_abs, cfg.tol("bound_zero")) for s in report.states]
    body = {
        "potential": potential_summary(pot),
        "condition": {"lhs": report.condition_lhs, "decay_rate": report.decay_rate,
                      "holds": report.condition_holds},
        "states": _bound_state_dicts(report),
    }
    return SuiteResult(recs, json_text(body), body)


def load_spectral_data(spec) -> invscatter.SpectralData:
    """{sc1: [{t, re, im}...] | null, sc2: null, bound: [{kappa, b_re, b_im}...], boundHat: [...]}."""
    if isinstance(spec, (str, Path)):
        spec = json.loads(Path(spec).read_text())

    def states(key):
        out = []
        for i, s in enumerate(spec.get(key) or []):
            try:
                out.append((float(s["kappa"]), complex(s.get("b_re", 0.0), s.get("b_im", 0.0))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"data.{key}[{i}]", str(exc)) from exc
        return tuple(out)

    def ray(key):
        pts = spec.get(key)
        if not pts:
            return None
        try:
            t = [float(p["t"]) for p in pts]
            v = [complex(p.get("re", 0.0), p.get("im", 0.0)) for p in pts]
            return invscatter.SampledRayFunction(np.array(t), np.array(v))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"data.{key}", str(exc)) from exc

    return invscatter.SpectralData(states("bound"), states("boundHat"), ray("sc1"), ray("sc2"))


def _x_grid(cfg: RunConfig) -> np.ndarray:
    lo = float(cfg.options.get("x_min", -5.0))
    hi = float(cfg.options.get("x_max", 5.0))
    dx = float(cfg.options.get("dx", 0.0025))
    if not (hi > lo and dx > 0):
        raise ConfigError("options", "need x_max > x_min and dx > 0")
    n = int(round((hi - lo) / dx)) + 1
    return np.linspace(lo, hi, n)


def _invert(data: invscatter.SpectralData, x: np.ndarray):
    if data.sc2 is not None:
        raise scatter.UnsupportedRegimeError("reconstruction with non-zero sc2 is not supported")
    if data.sc1 is None:
        return invscatter.solve_reflectionless(data, x)
    return invscatter.solve_sc2zero(data, x)


def _inverse_records(cfg: RunConfig, sol) -> list:
    recs = []
    if math.isfinite(sol.condition):
        recs.append(ReportRecord("invert[Nystrom condition]", "nystrom-conditioning", sol.condition,
                                 cfg.tol("condition")))
    return recs


def suite_invert(cfg: RunConfig) -> SuiteResult:
    if "data" not in cfg.options:
        raise ConfigError("options.data", "missing spectral data file")
    data = load_spectral_data(cfg.options["data"])
    x = _x_grid(cfg)
    sol = _invert(data, x)
    rows = [(xi, q.real, q.imag, F.real, F.imag) for xi, q, F in zip(x, sol.q, sol.F)]
    summary = {"max_abs_q": float(np.max(np.abs(sol.q))), "max_imag_q": sol.max_imag_q,
               "right_edge_F": sol.right_edge_F, "condition": sol.condition}
    return SuiteResult(_inverse_records(cfg, sol),
                       csv_text(["x", "q_re", "q_im", "F_re", "F_im"], rows), summary)


def suite_roundtrip(cfg: RunConfig) -> SuiteResult:
    """invert, then run the forward map on the real part of the reconstruction."""
    if "data" not in cfg.options:
        raise ConfigError("options.data", "missing spectral data file")
    data = load_spectral_data(cfg.options["data"])
    x = _x_grid(cfg)
    sol = _invert(data, x)
    peak = float(np.max(np.abs(sol.q))) or 1.0
    recs = _inverse_records(cfg, sol)
    recs.append(ReportRecord("roundtrip[reconstruction is real]", "reconstruction-real",
                             sol.max_imag_q / peak, cfg.tol("imag_q")))
    a = float(cfg.options.get("decay_rate", 3.0))
    pot = builtin_potential("samples", {"x": x, "q": sol.q.real, "decay_rate": a})
    grid = [p for p in load_lambda_grid(cfg.lambda_grid, a) if p.label != "imag"]
    def level(pt):
        try:
            co = scatter.forward_record(pot, pt.lam).coeffs
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            return {"label": pt.label, "lambda": pt.lam, "abs_sc1": None, "abs_sc2": None,
                    "error": f"{type(exc).__name__}: {exc}"}
        return {"label": pt.label, "lambda": pt.lam,
                "abs_sc1": abs(co.sc1) if co else None, "abs_sc2": abs(co.sc2) if co else None}

    levels = _pmap(level, grid)
    try:
        report = scatter.find_bound_states(pot)
        found, cond = _bound_state_dicts(report), {"lhs": report.condition_lhs, "holds": report.condition_holds}
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        found, cond = [], {"error": f"{type(exc).__name__}: {exc}"}
    for fam, ray in ((data.bound, "l2"), (data.bound_hat, "hat_l1")):
        for k, _ in fam:
            cands = [s["kappa"] for s in found if s["ray"] == ray]
            err = min((abs(c - k) / k for c in cands), default=math.inf)
            recs.append(ReportRecord(f"roundtrip[{ray} kappa={k:g} recovered]", "roundtrip-bound-state",
                                     err, cfg.tol("kappa")))
    body = {"inversion": {"max_abs_q": peak, "max_imag_q": sol.max_imag_q,
                          "right_edge_F": sol.right_edge_F},
            "potential": potential_summary(pot), "levels": levels, "bound_states": found,
            "condition": cond}
    return SuiteResult(recs, json_text(body), body)


JUMP_COLUMNS = ["t", "x", "residual_zeta1", "residual_zeta2", "boundary_psi2", "boundary_psi1"]


def suite_jump(cfg: RunConfig) -> SuiteResult:
    pot = load_potential(cfg.potential or {"type": "gaussian", "q0": 0.05})
    ts = [float(t) for t in cfg.options.get("t", [0.25, 0.5, 1.0, 1.5, 2.0])]
    x = float(cfg.options.get("x", 0.0))
    with_bs = bool(cfg.options.get("boundary_system", False))
    report = scatter.find_bound_states(pot)
    res = _pmap(lambda t: scatter.jump_residual(pot, t, x, with_boundary_system=with_bs,
                                                bound_report=report), ts)
    nan = float("nan")
    rows = [(r.t, r.x, r.on_zeta1_ray, r.on_zeta2_ray,
             *(r.boundary_system if r.boundary_system else (nan, nan))) for r in res]
    tol = cfg.tol("jump")
    recs = [ReportRecord(f"jump[zeta1 ray, t={r.t:g}]", "jump-ray-zeta1", r.on_zeta1_ray, tol) for r in res]
    recs += [ReportRecord(f"jump[zeta2 ray, t={r.t:g}]", "jump-ray-zeta2", r.on_zeta2_ray, tol) for r in res]
    summary = {"potential": potential_summary(pot), "bound_states": len(report.states)}
    return SuiteResult(recs, csv_text(JUMP_COLUMNS, rows), summary)


SUITES = {
    "verify-identities": suite_identities,
    "forward": suite_forward,
    "bound-states": suite_bound_states,
    "invert": suite_invert,
    "roundtrip": suite_roundtrip,
    "jump-residual": suite_jump,
}


def run(cfg: RunConfig) -> tuple[int, SuiteResult]:
    cfg.validate()
    result = SUITES[cfg.subcommand](cfg)
    if result.table is not None:
        _write(cfg.out, result.table)
    if cfg.report:
        _write(cfg.report, records_csv(result.records))
    status = EXIT_OK if all(r.passed for r in result.records) else EXIT_FAILED_CHECKS
    return status, result


# ---------------------------------------------------------------------------
# command line


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cubic-ist", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON RunConfig; command-line options override it")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, potential=True):
        sp.add_argument("--out", help="table output path (default stdout)")
        sp.add_argument("--report", help="CSV of pass/fail records")
        sp.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                        help="override a tolerance, e.g. --tol det=1e-8")
        if potential:
            sp.add_argument("--potential", help="JSON potential descriptor or a builtin name")
            sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                            help="parameter for a builtin potential")

    sp = sub.add_parser("verify-identities", help="generalized-exponential identity suite")
    common(sp, potential=False)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--radius", type=float)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("forward", help="transition matrix and scattering data on a lambda grid")
    common(sp)
    sp.add_argument("--lambda-grid", help="JSON lambda grid")
    sp.add_argument("--x", type=float, help="x for the asymptotic moment check")

    sp = sub.add_parser("bound-states", help="scan for zeros of t00 on the bound-state rays")
    common(sp)
    sp.add_argument("--n-scan", type=int)

    for name, helptext in (("invert", "reconstruct q from spectral data"),
                           ("roundtrip", "invert, then scatter the reconstruction")):
        sp = sub.add_parser(name, help=helptext)
        common(sp, potential=False)
        sp.add_argument("--data", required=True, help="JSON spectral data")
        sp.add_argument("--x-min", type=float)
        sp.add_argument("--x-max", type=float)
        sp.add_argument("--dx", type=float)
        if name == "roundtrip":
            sp.add_argument("--lambda-grid", help="JSON lambda grid")
            sp.add_argument("--decay-rate", type=float)

    sp = sub.add_parser("jump-residual", help="jump relations on the rays i l_zeta1, i l_zeta2")
    common(sp)
    sp.add_argument("--t", type=float, nargs="+")
    sp.add_argument("--x", type=float)
    sp.add_argument("--boundary-system", action="store_true",
                    help="also evaluate the boundary-value system (diagnostic only)")
    return p


def _kv(items: Sequence[str], where: str) -> dict:
    out = {}
    for it in items:
        key, sep, val = it.partition("=")
        if not sep:
            raise ConfigError(where, f"expected KEY=VALUE, got {it!r}")
        try:
            out[key] = float(val)
        except ValueError:
            out[key] = val
    return out


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = {}
    if args.config:
        base = json.loads(Path(args.config).read_text())
    cfg = RunConfig(subcommand=args.subcommand,
                    potential=base.get("potential"), lambda_grid=base.get("lambda_grid"),
                    tolerances=dict(base.get("tolerances", {})), out=base.get("out"),
                    report=base.get("report"), seed=int(base.get("seed", 0)),
                    options=dict(base.get("options", {})))
    cfg.tolerances.update(_kv(args.tol, "tolerances"))
    cfg.out = args.out or cfg.out
    cfg.report = args.report or cfg.report
    if getattr(args, "potential", None):
        pth = Path(args.potential)
        cfg.potential = json.loads(pth.read_text()) if pth.suffix == ".json" else {"type": args.potential}
    if getattr(args, "param", None):
        cfg.potential = {**(cfg.potential or {"type": "gaussian"}), **_kv(args.param, "potential")}
    if getattr(args, "lambda_grid", None):
        cfg.lambda_grid = json.loads(Path(args.lambda_grid).read_text())
    opts = {k: v for k, v in vars(args).items()
            if k not in ("config", "subcommand", "out", "report", "tol", "potential", "param", "lambda_grid")}
    if opts.get("seed") is not None:
        cfg.seed = opts["seed"]
    opts.pop("seed", None)
    cfg.options.update({k: v for k, v in opts.items() if v is not None and v is not False})
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        status, result = run(cfg)
    except (ConfigError, AdmissibilityError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, jost.ConvergenceError, cubicexp.RangeError, jost.OutOfRegimeError,
            scatter.UnsupportedRegimeError, invscatter.DomainTooSmallError) as exc:
        mod = type(exc).__module__.rsplit(".", 1)[-1]
        print(f"numeric error [{mod}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for r in result.records:
        print(r.line(), file=sys.stderr)
    if result.summary is not None and cfg.out not in (None, "-") and cfg.subcommand in ("invert", "jump-residual", "forward"):
        print(json.dumps(_jsonable(result.summary)), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
