"""Run orchestration: one scenario in, one self-describing run directory out.

Layout of a run directory::

    manifest.json        config hash, grid, decision ids, status, headline numbers
    scenario.json        the fully defaulted scenario tree
    diagnostics.csv      one row per output stride
    trajectory.rnlw      u frames (v + w for split runs)
    split_v.rnlw         split runs only
    split_w.rnlw
    reports/*.json       energy, virial, bounds, growth, scatter, hyperbolic
    figures/*.png
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import hyperbolic as hyp
from ..errors import ConfigurationError, DivergenceError, InsufficientDataError, NLWError
from ..linear_prop import Trajectory
from ..monitors import (
    CHI_PROFILE_ID,
    M2_KERNEL_ID,
    bound_ratios,
    growth_fit,
    relative_drift,
    trajectory_diagnostics,
    virial_residual,
)
from ..nlw_solver import (
    COUPLED_KICK_ID,
    KICK_ID,
    evolve,
    evolve_coupled,
    evolve_span,
    split_initial_data,
)
from ..radial_field import BUMP_ID
from ..scattering import CONE_CLIP_ID, l4_accumulation
from . import checkpoint
from .config import Scenario, from_dict, get_path

OUTPUT_ENV = "NLWLAB_OUTPUT"
CSV_SCHEMA_VERSION = 1
CONFIG_FORMAT_ID = "YAML mapping, strict keys (see nlwlab.cli.config)"

DECISIONS = {
    "reduction": "phi = r*u, Dirichlet at r = 0 and r = r_max, sine basis",
    "fourier_normalization": "u_hat(xi) = int u e^{-i x.xi} dx; ||u||_{H^s}^2 = (2 pi)^-3 int |xi|^2s |u_hat|^2",
    "lp_bump": BUMP_ID,
    "quadrature": "trapezoid on the uniform grid; M1 adds the dr^2/12 endpoint term",
    "negative_order_norms": "evaluated on sine coefficients directly",
    "time_integrals": "trapezoid in t at the output stride",
    "linf_origin": "two-node Richardson (4 u(r1) - u(r2)) / 3",
    "scheme": "Strang splitting with the exact spectral free flow",
    "kick": KICK_ID,
    "coupled_kick": COUPLED_KICK_ID,
    "rescaling": "grid relabelling r_max/lam, phi_t*lam, t/lam",
    "origin_value": "two-node Richardson extrapolation of phi/r",
    "morawetz_chi": CHI_PROFILE_ID,
    "m2_kernel": M2_KERNEL_ID,
    "sup_R_grid": "R = 2^k dr, k = 2..log2(n+1)",
    "virial_stencil": "5-point centered, 4th order; kappa by least squares",
    "sinh_series_branch": f"s < {hyp.SERIES_BRANCH}: 1 - s^2/6 + 7 s^4/360",
    "hyperbolic_reduction": "v = s*u~ with kick weight (s/sinh s)^2 / s^2",
    "chain_rule": hyp.CHAIN_RULE_ID,
    "hyperbolic_interpolation": hyp.INTERPOLATION_ID,
    "scatter_predicate": "defect(t/2, t) < tol_factor * data norm for the two largest dyadic pairs",
    "cone_clip": CONE_CLIP_ID,
    "checkpoint_format": checkpoint.FORMAT_ID,
    "config_format": CONFIG_FORMAT_ID,
}


def output_root(root=None) -> Path:
    return Path(root or os.environ.get(OUTPUT_ENV) or "runs")


# -- serialization helpers ----------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def csv_columns(R: float):
    tag = f"{R:g}"
    return ["t", "E", "Ev", "M1", "M2", "M3", "E_mod", "weighted_l4",
            f"local_mass_R{tag}", f"local_energy_R{tag}", "hs_half_u", "hs_half_ut"]


def write_diagnostics(path, records, R: float):
    keys = ["t", "E", "Ev", "M1", "M2", "M3", "E_mod", "weighted_l4", "local_mass",
            "local_energy", "hs_half_u", "hs_half_ut"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_columns(R))
        for rec in records:
            d = rec.as_dict()
            w.writerow(["%.17g" % d[k] for k in keys])


def read_diagnostics(path):
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    return {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(head)}


# -- stages ---------------------------------------------------------------------------------------

@dataclass
class RunArtifacts:
    run_dir: Path
    status: str
    manifest: dict
    headline: dict = field(default_factory=dict)


def _simulate(sc: Scenario, run_dir: Path, reports: dict):
    st = sc.initial_state()
    cfg = sc.solver
    if sc.split is not None:
        res = split_initial_data(st, sc.split)
        v_traj, w_traj = evolve_coupled(res.v0, res.w0, cfg, sc.monitors)
        traj = Trajectory(v_traj.grid, v_traj.times, v_traj.phi + w_traj.phi,
                          v_traj.phit + w_traj.phit, {**v_traj.meta, "kind": "coupled-sum"})
        records = v_traj.records
        checkpoint.write_trajectory(run_dir / "split_v.rnlw", v_traj, sc.checkpoint_every)
        checkpoint.write_trajectory(run_dir / "split_w.rnlw", w_traj, sc.checkpoint_every)
        ratio = [r.E_mod / r.Ev for r in records if r.Ev > 0]
        reports["split"] = {
            "j_cut": res.j_cut, "tail_norm": res.tail_norm, "energy_v0": res.energy_v0,
            "epsilon_target": sc.split.epsilon_target,
            "emod_over_ev_min": min(ratio) if ratio else None,
            "emod_over_ev_max": max(ratio) if ratio else None,
            "w_norms": w_traj.records,
        }
        try:
            slope, r2 = growth_fit(records)
            reports["growth"] = {"exponent": slope, "r2": r2, "records": len(records)}
        except InsufficientDataError as exc:
            reports["growth"] = {"skipped": str(exc)}
        return traj, records
    if sc.t_start is not None and sc.t_start < st.t:
        traj = evolve_span(st, sc.t_start, cfg, sc.mu)
        records = trajectory_diagnostics(traj, sc.monitors)
    else:
        traj = evolve(st, cfg, sc.monitors, sc.mu)
        records = traj.records
    return traj, records


def _physics_reports(sc: Scenario, traj: Trajectory, records, reports: dict):
    E = np.array([r.E for r in records])
    reports["energy"] = {"E0": float(E[0]), "relative_drift": relative_drift(E),
                         "dt": sc.solver.dt}
    if sc.split is None:
        try:
            rep = virial_residual(traj, cfg=sc.monitors, mu=sc.mu)
            reports["virial"] = rep.to_dict()
        except InsufficientDataError as exc:
            reports["virial"] = {"skipped": str(exc)}
        reports["bounds"] = bound_ratios(traj, sc.monitors).to_dict()


def scatter_stage(traj: Trajectory, r_cone: float, tol_factor: float):
    """(report dict, ScatterReport)."""
    rep = l4_accumulation(traj, r_cone)
    out = rep.to_dict()
    out["tol_factor"] = tol_factor
    out["scattering_detected"] = rep.scattering_detected(tol_factor)
    return out, rep


def hyperbolic_stage(traj: Trajectory, spec) -> tuple[dict, Trajectory]:
    """Hyperboloid data, native evolution, energy drift, two-route agreement
    and the change-of-variables check."""
    hg = hyp.make_hyperbolic_grid(spec.s_max, spec.m)
    h0 = hyp.hyperboloid_data(traj, hg)
    dt_tau = spec.dt_tau or 0.25 * hg.ds
    htraj = hyp.evolve_hyperbolic(h0, spec.tau_end, dt_tau, spec.output_stride)
    E = hyp.energy_series(htraj)
    tau_c = float(htraj.times[np.argmin(np.abs(htraj.times - spec.compare_tau))])
    cov = hyp.change_of_variables_check(traj, htraj)
    report = {
        "s_max": spec.s_max, "m": spec.m, "dt_tau": dt_tau, "tau_end": spec.tau_end,
        "energy_initial": float(E[0]), "energy_drift": relative_drift(E),
        "compare_tau": tau_c, "route_agreement": hyp.route_agreement(traj, htraj, tau_c),
        "change_of_variables": {"lhs": cov.lhs, "rhs": cov.rhs, "rel_err": cov.rel_err,
                                "region": cov.region},
        "coverage_t": [1.0, 0.5 * float(np.exp(spec.s_max)
                                        + np.exp(2 * min(spec.tau_end, spec.s_max) - spec.s_max))],
        "chain_rule": hyp.CHAIN_RULE_ID,
        "taus": htraj.times.tolist(), "energy": E.tolist(),
    }
    return report, htraj


def _error_payload(exc: Exception) -> dict:
    if isinstance(exc, DivergenceError):
        return {"type": "DivergenceError", **exc.payload()}
    out = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("field", "t_needed", "t_available", "best", "line", "column"):
        if getattr(exc, attr, None) is not None:
            out[attr] = getattr(exc, attr)
    return out


def _headline(reports: dict) -> dict:
    h = {}
    if "energy" in reports:
        h["E0"] = reports["energy"]["E0"]
        h["energy_drift"] = reports["energy"]["relative_drift"]
    if "virial" in reports and "kappa" in reports["virial"]:
        h["kappa"] = reports["virial"]["kappa"]
        h["virial_max_ratio"] = reports["virial"]["max_ratio"]
    if "growth" in reports and "exponent" in reports["growth"]:
        h["growth_exponent"] = reports["growth"]["exponent"]
        h["growth_r2"] = reports["growth"]["r2"]
    if "split" in reports:
        h["j_cut"] = reports["split"]["j_cut"]
        h["emod_over_ev_min"] = reports["split"]["emod_over_ev_min"]
    if "scatter" in reports:
        d = reports["scatter"]["cauchy_defects"]
        h["final_cauchy_defect"] = d[-1]["defect"] if d else None
        h["scattering_detected"] = reports["scatter"]["scattering_detected"]
    if "hyperbolic" in reports:
        h["hyperbolic_energy_drift"] = reports["hyperbolic"]["energy_drift"]
        h["change_of_variables_rel_err"] = reports["hyperbolic"]["change_of_variables"]["rel_err"]
    return h


def run(sc: Scenario, out_root=None, figures: bool = True) -> RunArtifacts:
    """Execute a scenario; solver and coverage failures are recorded in the
    manifest (status "failed") instead of propagating."""
    run_dir = output_root(out_root) / sc.name
    (run_dir / "reports").mkdir(parents=True, exist_ok=True)
    write_json(run_dir / "scenario.json", sc.source)
    reports: dict = {}
    manifest = {
        "name": sc.name,
        "config_hash": sc.config_hash,
        "grid": {"r_max": sc.grid.r_max, "n": sc.grid.n, "dr": sc.grid.dr},
        "solver": {"dt": sc.solver.dt, "t_end": sc.solver.t_end,
                   "output_stride": sc.solver.output_stride, "mu": sc.mu,
                   "t_start": sc.t_start, "t0": sc.t0},
        "monitors": {"R": sc.monitors.R, "c1": sc.monitors.c1, "c2": sc.monitors.c2,
                     "c3": sc.monitors.c3, "delta": sc.monitors.delta},
        "decisions": DECISIONS,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "csv_columns": csv_columns(sc.monitors.R),
        "seed": sc.seed,
    }
    htraj = None
    traj = None
    records = []
    try:
        traj, records = _simulate(sc, run_dir, reports)
        write_diagnostics(run_dir / "diagnostics.csv", records, sc.monitors.R)
        checkpoint.write_trajectory(run_dir / "trajectory.rnlw", traj, sc.checkpoint_every)
        _physics_reports(sc, traj, records, reports)
        if sc.scatter is not None:
            reports["scatter"], _ = scatter_stage(traj, sc.scatter.r_cone,
                                                  sc.scatter.tol_factor)
        if sc.hyperbolic is not None:
            reports["hyperbolic"], htraj = hyperbolic_stage(traj, sc.hyperbolic)
        manifest["status"] = "ok"
    except NLWError as exc:
        manifest["status"] = "failed"
        manifest["error"] = _error_payload(exc)
    for key, rep in reports.items():
        write_json(run_dir / "reports" / f"{key}.json", rep)
    manifest["kappa"] = reports.get("virial", {}).get("kappa")
    manifest["reports"] = sorted(reports)
    manifest["headline"] = _headline(reports)
    if figures and records:
        from .figures import render_run

        manifest["figures"] = render_run(run_dir / "figures", records, reports, sc.monitors.R)
    write_json(run_dir / "manifest.json", manifest)
    return RunArtifacts(run_dir, manifest["status"], manifest, manifest["headline"])


# -- sweeps ------------------------------------------------------------------------------------

def _slug(x) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", repr(x)).strip("_")


def sweep(base: Scenario, axis: str, values, out_root=None, figures: bool = False):
    """Independent runs with ``axis`` set to each value; writes summary.csv
    under <root>/<base name>-sweep/ and returns the RunArtifacts list."""
    get_path(base.source, axis)  # schema check before any run
    root = output_root(out_root) / f"{base.name}-sweep"
    root.mkdir(parents=True, exist_ok=True)
    results = []
    for i, value in enumerate(values):
        sc = base.with_value(axis, value)
        tree = dict(sc.source)
        tree["name"] = f"{base.name}-{i:03d}-{_slug(value)}"
        results.append((value, run(from_dict(tree), root, figures)))
    keys = sorted({k for _, a in results for k in a.headline})
    with open(root / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([axis, "name", "status", *keys])
        for value, art in results:
            w.writerow([value, art.manifest["name"], art.status,
                        *[_fmt(art.headline.get(k)) for k in keys]])
    return [a for _, a in results]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return "%.17g" % x
    return x


# -- post-processing of existing runs ---------------------------------------------------------

def load_run(run_dir):
    run_dir = Path(run_dir)
    scen = run_dir / "scenario.json"
    if not scen.exists():
        raise ConfigurationError(f"{run_dir} is not a run directory (no scenario.json)", "run_dir")
    with open(scen, encoding="utf-8") as fh:
        sc = from_dict(json.load(fh))
    traj = checkpoint.read_trajectory(run_dir / "trajectory.rnlw", {"mu": sc.mu})
    return sc, traj


def diagnose(run_dir) -> Path:
    """Recompute monitors from the stored checkpoints into diagnostics_recomputed.csv."""
    run_dir = Path(run_dir)
    sc, traj = load_run(run_dir)
    if sc.split is not None:
        v = checkpoint.read_trajectory(run_dir / "split_v.rnlw")
        w = checkpoint.read_trajectory(run_dir / "split_w.rnlw")
        records = trajectory_diagnostics(v, sc.monitors, w)
    else:
        records = trajectory_diagnostics(traj, sc.monitors)
    out = run_dir / "diagnostics_recomputed.csv"
    write_diagnostics(out, records, sc.monitors.R)
    return out


def hyperbolic_run(run_dir, spec=None) -> dict:
    run_dir = Path(run_dir)
    sc, traj = load_run(run_dir)
    spec = spec or sc.hyperbolic
    if spec is None:
        from .config import HYPERBOLIC_DEFAULTS, HyperbolicSpec

        spec = HyperbolicSpec(**HYPERBOLIC_DEFAULTS)
    report, _ = hyperbolic_stage(traj, spec)
    write_json(run_dir / "reports" / "hyperbolic.json", report)
    return report


def scatter_run(run_dir, r_cone=None, tol_factor=None) -> dict:
    run_dir = Path(run_dir)
    sc, traj = load_run(run_dir)
    spec = sc.scatter
    r_cone = r_cone if r_cone is not None else (spec.r_cone if spec else 5.0)
    tol = tol_factor if tol_factor is not None else (spec.tol_factor if spec else 1e-3)
    report, rep = scatter_stage(traj, r_cone, tol)
    write_json(run_dir / "reports" / "scatter.json", report)
    with open(run_dir / "scatter.csv", "w", encoding="utf-8") as fh:
        fh.write(rep.to_csv())
    return report
