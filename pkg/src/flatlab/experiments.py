"""Experiment runner: config in, CSV tables plus a JSON manifest out.

CSV bodies depend only on the resolved config, so reruns are
byte-identical. Timings live in the manifest alone.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._fit import loglog_slope
from .config import Config
from .curves import CurveSpec, graph_curve, moment_curve
from .errors import InsufficientScales
from .ifs import WeightedIFS, attractor_interval
from .lift import contraction_depth, discretize_affine, ensure_contracting, lift, verify_conjugacy
from .measures import DiscreteMeasure, discretize, discretize_depth, frostman_fit, nonconcentration_sweep, pushforward
from .moments import flattening_report, fourier_moment_consistency
from .spectral import Ball, CRegion, ERegion, default_step, lp_region_integrals, superlevel_cover_count, \
    superlevel_cover_count_measure


@dataclass
class Table:
    name: str
    columns: tuple
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating, Fraction)):
        return format(float(v) + 0.0, ".17g")
    return str(v)


@dataclass
class Report:
    kind: str
    tables: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def table(self, name) -> Table:
        return next(t for t in self.tables if t.name == name)


# --- shared builders -----------------------------------------------------------

def curve_for(cfg: Config, ifs: WeightedIFS) -> CurveSpec | None:
    kind = cfg["curve.kind"]
    if kind == "none":
        return None
    dom = cfg["curve.domain"]
    if dom is None:
        a, b = attractor_interval(ifs)
        pad = 0.05 * (b - a)
        dom = (a - pad, b + pad)
    dom = tuple(float(v) for v in dom)
    if kind == "moment":
        return moment_curve(cfg["curve.dim"], dom)
    return graph_curve(cfg["curve.components"], dom)


def measure_for(cfg: Config, ifs: WeightedIFS, tau: float, on_curve: bool = True) -> DiscreteMeasure:
    mu = discretize(ifs, tau)
    curve = curve_for(cfg, ifs) if on_curve else None
    return pushforward(mu, curve) if curve is not None else mu


def _slope_or_nan(x, y, min_points=2):
    try:
        return loglog_slope(x, y, min_points=min_points)
    except (InsufficientScales, ValueError):
        return float("nan")


# --- the experiment kinds ------------------------------------------------------

def run_fourier_scan(cfg: Config, ifs: WeightedIFS, report: Report):
    nu = measure_for(cfg, ifs, cfg["fourier.tau"])
    eps = cfg["fourier.epsilon"]
    names = cfg["fourier.regions"] if nu.dim > 1 else ["ball"]
    rows = []
    for R in [float(r) for r in cfg["fourier.R"]]:
        regions = [{"ball": Ball(R), "c": CRegion(R, eps), "e": ERegion(R, eps)}[n] for n in names]
        for p in [float(v) for v in cfg["fourier.p"]]:
            h = cfg["fourier.h"] or default_step(nu, p)
            t0 = time.perf_counter()
            res = lp_region_integrals(nu, regions, p, h, cfg["budgets.grid_budget"], cfg["run.threads"])
            report.timings[f"R={R:g},p={p:g}"] = time.perf_counter() - t0
            for name, (est, cnt) in zip(names, res):
                rows.append((name, R, eps, p, h, est, cnt))
    report.tables.append(Table("fourier_scan", ("region", "R", "epsilon", "p", "h", "integral_estimate",
                                                "cell_count"), rows))
    for name in names:
        for p in sorted({r[3] for r in rows}):
            pts = [(r[1], r[5]) for r in rows if r[0] == name and r[3] == p]
            report.fits[f"R_exponent[{name},p={p:g}]"] = _slope_or_nan(*zip(*pts))
            report.series[f"{name}_p{p:g}"] = [(math.log2(R), math.log2(v)) for R, v in pts if v > 0]
    report.budgets["atoms"] = nu.n_atoms


def run_tsujii_scan(cfg: Config, ifs: WeightedIFS, report: Report):
    delta = cfg["tsujii.delta"]
    Rs = [float(r) for r in cfg["tsujii.R"]]
    rows = [(R, delta, superlevel_cover_count(ifs, R, delta, cfg["tsujii.tol"], cfg["tsujii.step"],
                                              cfg["budgets.max_words"])) for R in Rs]
    report.tables.append(Table("tsujii_scan", ("R", "delta", "cover_count"), rows))
    report.fits["cover_exponent"] = _slope_or_nan(Rs, [max(r[2], 1) for r in rows])
    report.series["cover"] = [(math.log2(R), math.log2(max(c, 1))) for R, _, c in rows]
    if cfg["tsujii.contrast"]:
        atom = DiscreteMeasure.delta([0.0])
        crow = [(R, delta, superlevel_cover_count_measure(atom, R, delta, cfg["tsujii.step"])) for R in Rs]
        report.tables.append(Table("tsujii_contrast", ("R", "delta", "cover_count"), crow))
        report.fits["contrast_exponent"] = _slope_or_nan(Rs, [r[2] for r in crow])


def run_flattening(cfg: Config, ifs: WeightedIFS, report: Report):
    curve = curve_for(cfg, ifs)
    levels = range(cfg["flattening.m_min"], cfg["flattening.m_max"] + 1)
    rep = flattening_report(
        ifs, curve, cfg["flattening.p_max"], levels,
        epsilon=cfg["flattening.epsilon"],
        tau=cfg["flattening.tau"] or None,
        grid_coalesce=cfg["flattening.grid_coalesce"],
        coalesce_width=cfg["flattening.coalesce_width"] or None,
        cell_budget=cfg["budgets.cell_budget"],
        max_atoms=cfg["budgets.max_atoms"],
    )
    report.tables.append(Table("flattening", rep.columns, rep.rows))
    for p, dim in rep.dims.items():
        report.fits[f"dim2[p={p}]"] = dim
        report.series[f"p{p}"] = [(m, math.log2(s)) for q, m, s, _, _ in rep.rows if q == p]
    report.budgets["coalesce_width"] = rep.coalesce_width
    report.budgets["tau"] = rep.tau


def run_frostman(cfg: Config, ifs: WeightedIFS, report: Report):
    tau = cfg["frostman.tau"]
    m = measure_for(cfg, ifs, tau, on_curve=cfg["frostman.on_curve"])
    base = cfg["frostman.radius_base"]
    radii = [base**-k for k in range(cfg["frostman.k_min"], cfg["frostman.k_max"] + 1)]
    fit = frostman_fit(m, radii)
    report.tables.append(Table("frostman", fit.columns, fit.table))
    report.fits["frostman_exponent"] = fit.exponent
    report.fits["scale_floor"] = tau**0.5
    report.series["ball_mass"] = [(math.log2(r), math.log2(v)) for r, v in fit.table]
    report.budgets["atoms"] = m.n_atoms


def run_nonconcentration(cfg: Config, ifs: WeightedIFS, report: Report):
    m = measure_for(cfg, ifs, cfg["nonconcentration.tau"])
    eps = [2.0**-k for k in range(cfg["nonconcentration.k_min"], cfg["nonconcentration.k_max"] + 1)]
    fit = nonconcentration_sweep(m, eps, trials=cfg["nonconcentration.trials"], seed=cfg["run.seed"],
                                 n_directions=cfg["nonconcentration.directions"],
                                 max_pairs=cfg["nonconcentration.pairs"])
    report.tables.append(Table("nonconcentration", fit.columns, fit.table))
    report.fits["beta_hat"] = fit.exponent
    report.series["worst_slab"] = [(math.log2(e), math.log2(v)) for e, v in fit.table]
    report.budgets["atoms"] = m.n_atoms


def run_lift_verify(cfg: Config, ifs: WeightedIFS, report: Report):
    ell = cfg["lift.ell"]
    n = cfg["lift.samples"]
    rows = []
    xs = [Fraction(k, n) for k in range(-n, n + 1)]
    exact = ifs.is_exact
    defect = verify_conjugacy(ifs, lift(ifs, ell), xs if exact else [float(x) for x in xs])
    rows.append(("conjugacy_defect", float(defect)))
    rows.append(("conjugacy_exact", exact))
    depth = cfg["lift.depth"]
    a = discretize_affine(lift(ifs, ell, exact=False), depth, x0=0.0, max_atoms=cfg["budgets.max_atoms"])
    b = pushforward(discretize_depth(ifs, depth), moment_curve(ell, attractor_interval(ifs)))
    rows.append(("coherence_distance", float(np.max(np.abs(a.points - b.points)))))
    rows.append(("coherence_weight_distance", float(np.max(np.abs(a.weights - b.weights)))))
    m = contraction_depth(float(ifs.max_ratio), ell)
    rows.append(("contraction_depth", m))
    if ifs.n**m <= cfg["budgets.max_atoms"]:
        _, lifted = ensure_contracting(ifs, ell, max_maps=cfg["budgets.max_atoms"])
        rows.append(("max_spectral_norm", lifted.max_spectral_norm()))
    report.tables.append(Table("lift_verify", ("check", "value"), rows))
    report.fits.update({k: v for k, v in rows})


def run_consistency(cfg: Config, ifs: WeightedIFS, report: Report):
    levels = [int(v) for v in cfg["consistency.levels"]]
    tau = cfg["consistency.tau"] or 2.0 ** -(max(levels) + 4)
    nu = measure_for(cfg, ifs, tau)
    rows = []
    for lv in levels:
        t0 = time.perf_counter()
        c = fourier_moment_consistency(nu, lv, h=cfg["consistency.h"] or None, threads=cfg["run.threads"])
        report.timings[f"level={lv}"] = time.perf_counter() - t0
        rows.append((lv, c.s_m, c.integral, c.ratio, c.cells))
    report.tables.append(Table("consistency", ("level", "s_m", "integral", "ratio", "cell_count"), rows))
    ratios = [r[3] for r in rows]
    report.fits["ratio_min"] = min(ratios)
    report.fits["ratio_max"] = max(ratios)
    report.series["ratio"] = [(lv, math.log2(r)) for lv, *_, r, _ in rows]
    report.budgets["atoms"] = nu.n_atoms


RUNNERS = {
    "fourier-scan": run_fourier_scan,
    "tsujii-scan": run_tsujii_scan,
    "flattening-report": run_flattening,
    "frostman-scan": run_frostman,
    "nonconcentration-sweep": run_nonconcentration,
    "lift-verify": run_lift_verify,
    "consistency-check": run_consistency,
}


def run(kind: str, cfg: Config) -> Report:
    if kind not in RUNNERS:
        raise ValueError(f"unknown experiment kind {kind!r}")
    report = Report(kind)
    t0 = time.perf_counter()
    RUNNERS[kind](cfg, cfg.build_ifs(), report)
    report.timings["total"] = time.perf_counter() - t0
    return report


# --- output ----------------------------------------------------------------------

def plotdata_name(kind: str, series: str) -> str:
    """File name template for plot series: ``<kind>__<series>.dat``."""
    return f"{kind}__{series}.dat"


def emit_plotdata(report: Report, out_dir) -> list[Path]:
    """One two-column, whitespace-separated file per series."""
    out = Path(out_dir)
    paths = []
    for name, pts in report.series.items():
        if not paths:
            out.mkdir(parents=True, exist_ok=True)
        path = out / plotdata_name(report.kind, name)
        path.write_text("".join(f"{_cell(x)} {_cell(y)}\n" for x, y in pts))
        paths.append(path)
    return paths


def _versions() -> dict:
    return {"flatlab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, Fraction):
        return str(v)
    return v


def write_report(report: Report, cfg: Config, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for t in report.tables:
        path = out / f"{t.name}.csv"
        path.write_text(t.to_csv())
        files.append(path)
    files += emit_plotdata(report, out)
    manifest = {
        "kind": report.kind,
        "config": cfg.echo(),
        "seed": cfg["run.seed"],
        "versions": _versions(),
        "wall_seconds": {k: round(v, 6) for k, v in report.timings.items()},
        "budgets": {k: _json_value(v) for k, v in report.budgets.items()},
        "fits": {k: _json_value(v) for k, v in report.fits.items()},
        "files": sorted(p.name for p in files),
    }
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return files + [mpath]
