"""PNG figures for a run directory (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.frameon": False,
}
# fixed metadata keeps PNG bytes stable across reruns
_META = {"Software": None}


def _save(fig, path: Path):
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path.name


def _energy(records, out):
    t = np.array([r.t for r in records])
    fig, ax = plt.subplots()
    ax.plot(t, [r.E for r in records], label="E")
    ax.plot(t, [r.Ev for r in records], "--", label="E(v)")
    ax.plot(t, [r.E_mod for r in records], ":", label="modified energy")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend()
    return _save(fig, out / "energy.png")


def _morawetz(records, out):
    t = np.array([r.t for r in records])
    fig, ax = plt.subplots()
    for key in ("M1", "M2", "M3"):
        ax.plot(t, [getattr(r, key) for r in records], label=key)
    ax.set_xlabel("t")
    ax.set_ylabel("weighted potential")
    ax.legend()
    return _save(fig, out / "morawetz.png")


def _local(records, out, R):
    t = np.array([r.t for r in records])
    fig, ax = plt.subplots()
    ax.plot(t, [r.local_mass for r in records], label=f"local mass, R={R:g}")
    ax.plot(t, [r.local_energy for r in records], label=f"local energy, R={R:g}")
    ax.plot(t, [r.weighted_l4 for r in records], label="int u^4/|x|")
    ax.set_xlabel("t")
    ax.legend()
    return _save(fig, out / "local.png")


def _virial(rep, out):
    t = np.asarray(rep["times"])
    lhs = np.asarray(rep["lhs"])
    fig, ax = plt.subplots()
    ax.plot(t, lhs, label="dM1/dt")
    ax.plot(t, lhs - np.asarray(rep["residual"]), "--", label=f"fit, kappa={rep['kappa']:.5g}")
    ax.set_xlabel("t")
    ax.legend()
    return _save(fig, out / "virial.png")


def _scatter(rep, out):
    t = np.asarray(rep["times"])
    fig, ax = plt.subplots()
    ax.plot(t, rep["l4_total"], label="cumulative L4")
    ax.plot(t, rep["l4_tail"], label="L4 tail")
    ax.plot(t, rep["exterior_l4"], label=f"exterior, r >= {rep['r_cone']:g} + t")
    ax.set_xlabel("t")
    ax.legend()
    return _save(fig, out / "scatter.png")


def _hyperbolic(rep, out):
    tau = np.asarray(rep["taus"])
    E = np.asarray(rep["energy"])
    fig, ax = plt.subplots()
    ax.plot(tau, (E - E[0]) / E[0] if E[0] else E)
    ax.set_xlabel("tau")
    ax.set_ylabel("relative energy change")
    return _save(fig, out / "hyperbolic_energy.png")


def _growth(records, out):
    t = np.array([r.t for r in records])
    ev = np.array([r.Ev for r in records])
    fig, ax = plt.subplots()
    ax.loglog(1 + t, ev)
    ax.set_xlabel("1 + t")
    ax.set_ylabel("E(v)")
    return _save(fig, out / "growth.png")


def render_run(out: Path, records, reports: dict, R: float) -> list:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    with plt.rc_context(_STYLE):
        names.append(_energy(records, out))
        names.append(_morawetz(records, out))
        names.append(_local(records, out, R))
        if "kappa" in reports.get("virial", {}):
            names.append(_virial(reports["virial"], out))
        if "split" in reports and all(r.Ev > 0 for r in records):
            names.append(_growth(records, out))
        if "scatter" in reports:
            names.append(_scatter(reports["scatter"], out))
        if "hyperbolic" in reports:
            names.append(_hyperbolic(reports["hyperbolic"], out))
    return names
