"""Exact free propagator, the radial d'Alembert formula, trajectories and
spacetime norms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, RangeError
from .radial_field import (
    FOUR_PI,
    FieldState,
    RadialGrid,
    dst_forward,
    dst_inverse,
    integrate,
    u_at_origin,
)


@dataclass(eq=False)
class Trajectory:
    """Time-ordered states on one grid, stored as stacked phi / phi_t arrays.

    ``phi[i]`` and ``phit[i]`` hold r*u and r*u_t at ``times[i]``.
    ``records`` carries per-stride diagnostics when a solver produced it.
    """

    grid: RadialGrid
    times: np.ndarray
    phi: np.ndarray
    phit: np.ndarray
    meta: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        self.phit = np.atleast_2d(np.asarray(self.phit, dtype=float))
        m = len(self.times)
        if m == 0:
            raise ConfigurationError("trajectory needs at least one state", "states")
        if self.phi.shape != (m, self.grid.n) or self.phit.shape != (m, self.grid.n):
            raise ConfigurationError("state arrays do not match times/grid", "states")
        if m > 1 and not np.all(np.diff(self.times) > 0):
            raise ConfigurationError("time stamps must be strictly increasing", "times")
        for a in (self.times, self.phi, self.phit):
            a.setflags(write=False)

    @classmethod
    def from_states(cls, states, meta=None, records=None):
        states = list(states)
        if not states:
            raise ConfigurationError("trajectory needs at least one state", "states")
        grid = states[0].grid
        for s in states:
            if s.grid != grid:
                raise ConfigurationError("states live on different grids", "grid")
        return cls(grid,
                   np.array([s.t for s in states]),
                   np.array([s.u.phi for s in states]),
                   np.array([s.ut.phi for s in states]),
                   dict(meta or {}), list(records or []))

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> FieldState:
        return FieldState.from_arrays(self.grid, self.phi[i], self.phit[i], self.times[i])

    @property
    def states(self) -> list[FieldState]:
        return [self.state(i) for i in range(len(self))]

    def __iter__(self):
        return iter(self.states)

    def index_of(self, t: float, tol: float | None = None) -> int:
        """Index of the stored frame at time ``t``."""
        if tol is None:
            tol = 1e-9 * max(1.0, abs(t))
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol:
            raise RangeError(
                f"t={t} is not a stored time (range [{self.times[0]}, {self.times[-1]}], "
                f"nearest {self.times[i]})")
        return i

    def window(self, t0: float, t1: float) -> "Trajectory":
        mask = (self.times >= t0 - 1e-12) & (self.times <= t1 + 1e-12)
        recs = [r for r in self.records if t0 - 1e-12 <= r.t <= t1 + 1e-12]
        return Trajectory(self.grid, self.times[mask], self.phi[mask], self.phit[mask],
                          dict(self.meta), recs)

    def scaled(self, factor: float) -> "Trajectory":
        return Trajectory(self.grid, self.times, self.phi * factor, self.phit * factor,
                          dict(self.meta))

    @property
    def dt_out(self) -> float:
        return float(np.median(np.diff(self.times))) if len(self) > 1 else 0.0


def time_integral(values: np.ndarray, times: np.ndarray) -> float:
    """Trapezoid in t at the stored stride."""
    if len(times) < 2:
        return 0.0
    return float(np.trapezoid(values, times)) if hasattr(np, "trapezoid") \
        else float(np.trapz(values, times))


# -- propagator ----------------------------------------------------------------------------

def free_rotation(a, b, xi, t):
    """Advance sine coefficients (a of phi, b of phi_t) by the free flow."""
    c = np.cos(xi * t)
    s = np.sin(xi * t)
    return c * a + (s / xi) * b, -xi * s * a + c * b


def free_evolve(st: FieldState, t: float) -> FieldState:
    """S(t) applied to (u, u_t): phi_hat(t) = cos(xi t) phi_hat + sin(xi t)/xi phit_hat."""
    if not np.isfinite(t):
        raise ConfigurationError(f"time must be finite, got {t}", "t")
    if t == 0:
        return FieldState(st.t, st.u, st.ut)
    g = st.grid
    a, b = free_rotation(dst_forward(st.u.phi), dst_forward(st.ut.phi), g.xi, t)
    return FieldState.from_arrays(g, dst_inverse(a), dst_inverse(b), st.t + t)


def free_trajectory(st: FieldState, times) -> Trajectory:
    """Free evolution sampled at absolute ``times`` (exact at every sample)."""
    g = st.grid
    a0 = dst_forward(st.u.phi)
    b0 = dst_forward(st.ut.phi)
    times = np.asarray(times, dtype=float)
    phi = np.empty((len(times), g.n))
    phit = np.empty_like(phi)
    for i, t in enumerate(times):
        a, b = free_rotation(a0, b0, g.xi, t - st.t)
        phi[i] = dst_inverse(a)
        phit[i] = dst_inverse(b)
    return Trajectory(g, times, phi, phit, {"kind": "free"})


def dalembert_oracle(u0_profile: Callable, t: float, r, du0: Callable | None = None):
    """Free radial solution with u_t(0) = 0, from the odd extension of r*u0.

        r u(t, r) = [(r + t) u0(r + t) + (r - t) u0(|r - t|)] / 2

    At r = 0 the limit u0(t) + t u0'(t) is returned; ``du0`` supplies u0'
    (otherwise a fourth-order central difference is used).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or t < 0:
        raise ConfigurationError("dalembert_oracle needs t, r >= 0", "r")
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    out = np.empty_like(r)
    pos = r > 0
    rp = r[pos]
    out[pos] = 0.5 * ((rp + t) * u0_profile(rp + t)
                      + (rp - t) * u0_profile(np.abs(rp - t))) / rp
    if np.any(~pos):
        if du0 is None:
            h = 1e-3 * max(1.0, t)
            tt = np.array([t - 2 * h, t - h, t + h, t + 2 * h])
            vals = u0_profile(np.abs(tt))
            d = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
        else:
            d = du0(t)
        out[~pos] = u0_profile(np.array([t]))[0] + t * d
    return out[0] if scalar else out


# -- spacetime norms -----------------------------------------------------------------------

def l4_density(phi: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """int u^4 dx at each stored time: 4 pi int phi^4 / r^2 dr."""
    return FOUR_PI * integrate(phi ** 4 / grid.r ** 2, grid)


def strichartz_l4(traj: Trajectory) -> float:
    """||u||_{L^4_{t,x}} over the trajectory's time span."""
    return time_integral(l4_density(traj.phi, traj.grid), traj.times) ** 0.25


def l2_linf_norm(traj: Trajectory, r_min: float = 0.0) -> float:
    """||u||_{L^2_t L^inf_x(r >= r_min)}.

    For r_min == 0 the origin value (two-node Richardson estimate of u(0))
    joins the sup.
    """
    g = traj.grid
    if r_min < 0 or r_min > g.r_max:
        raise RangeError(f"r_min={r_min} outside [0, {g.r_max}]")
    mask = g.r >= r_min
    u = np.abs(traj.phi[:, mask] / g.r[mask]) if mask.any() else np.zeros((len(traj), 1))
    sup = u.max(axis=1)
    if r_min == 0:
        sup = np.maximum(sup, np.abs(u_at_origin(traj.phi, g)))
    return time_integral(sup ** 2, traj.times) ** 0.5
