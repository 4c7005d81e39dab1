"""Scattering diagnostics: free-flow profiles, their Cauchy defects,
exterior-cone smallness and L^4 spacetime accumulation."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError
from .linear_prop import Trajectory, free_evolve, l4_density
from .radial_field import FOUR_PI, FieldState, critical_norm, integrate_interval

DEFAULT_R_CONE = 5.0
SCATTER_TOL_FACTOR = 1e-3
CONE_CLIP_ID = "linear sub-cell weighting of cells cut by r = r_cone + |t|"


def _frame(traj: Trajectory, t: float) -> int:
    lo, hi = traj.times[0], traj.times[-1]
    slack = 1e-9 * max(1.0, abs(t))
    if not lo - slack <= t <= hi + slack:
        raise RangeError(f"t={t} outside trajectory range [{lo}, {hi}]")
    return int(np.argmin(np.abs(traj.times - t)))


def scatter_profile(traj: Trajectory, t: float) -> FieldState:
    """S(-t)(u(t), u_t(t)) for the stored frame nearest to ``t``; the
    result is stamped at time 0."""
    i = _frame(traj, t)
    return free_evolve(traj.state(i), -float(traj.times[i]))


def cauchy_defect(traj: Trajectory, t1: float, t2: float) -> float:
    """||profile(t2) - profile(t1)|| in H^1/2 x H^-1/2 (sum of the two norms)."""
    i, j = sorted((_frame(traj, t1), _frame(traj, t2)))
    if i == j:
        return 0.0
    return critical_norm(scatter_profile(traj, traj.times[j]) - scatter_profile(traj, traj.times[i]))


def _exterior_density(traj: Trajectory, r_cone: float) -> np.ndarray:
    g = traj.grid
    dens = traj.phi ** 4 / g.r ** 2
    return np.array([FOUR_PI * integrate_interval(row, g, r_cone + abs(t), g.r_max)
                     for t, row in zip(traj.times, dens)])


def _pieces(values, times):
    return 0.5 * (values[1:] + values[:-1]) * np.diff(times)


def exterior_cone_norm(traj: Trajectory, r_cone: float) -> float:
    """||u||_{L^4} over {r >= r_cone + |t|} within the trajectory's span."""
    if r_cone < 0:
        raise RangeError(f"r_cone must be >= 0, got {r_cone}")
    if len(traj) < 2:
        return 0.0
    return float(np.sum(_pieces(_exterior_density(traj, r_cone), traj.times))) ** 0.25


def dyadic_pairs(traj: Trajectory, count: int = 3):
    """(t/2, t) pairs ending at the final time, largest last."""
    t_end = traj.times[-1]
    out = []
    for k in range(count):
        a, b = t_end / 2 ** (k + 1), t_end / 2 ** k
        if a <= traj.times[0] or b - a < traj.dt_out:
            break
        out.append((float(a), float(b)))
    return out[::-1]


@dataclass
class ScatterReport:
    times: np.ndarray
    profile_norms: np.ndarray
    cauchy_defects: list
    l4_total: np.ndarray
    l4_tail: np.ndarray
    exterior_l4: np.ndarray
    r_cone: float = DEFAULT_R_CONE
    data_norm: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("times", "profile_norms", "l4_total", "l4_tail", "exterior_l4"):
            a = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(a)):
                raise RangeError(f"{name} has non-finite entries")
            setattr(self, name, a)

    def scattering_detected(self, factor: float = SCATTER_TOL_FACTOR) -> bool:
        """Defects of the two largest dyadic pairs are below factor * data norm."""
        if len(self.cauchy_defects) < 2:
            return False
        tol = factor * self.data_norm
        return all(d["defect"] < tol for d in self.cauchy_defects[-2:])

    def to_dict(self) -> dict:
        return {
            "r_cone": self.r_cone,
            "data_norm": self.data_norm,
            "scattering_detected": self.scattering_detected(),
            "cauchy_defects": self.cauchy_defects,
            "times": self.times.tolist(),
            "profile_norms": self.profile_norms.tolist(),
            "l4_total": self.l4_total.tolist(),
            "l4_tail": self.l4_tail.tolist(),
            "exterior_l4": self.exterior_l4.tolist(),
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "profile_norm", "l4_total", "l4_tail", "exterior_l4"])
        for row in zip(self.times, self.profile_norms, self.l4_total, self.l4_tail,
                       self.exterior_l4):
            w.writerow(["%.17g" % x for x in row])
        return buf.getvalue()


def l4_accumulation(traj: Trajectory, r_cone: float = DEFAULT_R_CONE, pairs=None) -> ScatterReport:
    """Cumulative and tail L^4_{t,x} norms, exterior-cone accumulation,
    profile norms at every frame and Cauchy defects over ``pairs``
    (dyadic pairs ending at the final time by default)."""
    if r_cone < 0:
        raise RangeError(f"r_cone must be >= 0, got {r_cone}")
    times = traj.times
    dens = l4_density(traj.phi, traj.grid)
    ext = _exterior_density(traj, r_cone)
    if len(traj) > 1:
        p, q = _pieces(dens, times), _pieces(ext, times)
        cum = np.concatenate(([0.0], np.cumsum(p)))
        tail = np.concatenate((np.cumsum(p[::-1])[::-1], [0.0]))
        cum_ext = np.concatenate(([0.0], np.cumsum(q)))
    else:
        cum = tail = cum_ext = np.zeros(1)
    norms = np.array([critical_norm(scatter_profile(traj, t)) for t in times])
    if pairs is None:
        pairs = dyadic_pairs(traj)
    defects = [{"t1": a, "t2": b, "defect": cauchy_defect(traj, a, b)} for a, b in pairs]
    return ScatterReport(times, norms, defects, cum ** 0.25, tail ** 0.25, cum_ext ** 0.25,
                         float(r_cone), float(critical_norm(traj.state(0))),
                         {"cone_clip": CONE_CLIP_ID, "tol_factor": SCATTER_TOL_FACTOR})
