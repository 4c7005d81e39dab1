"""Strang-split integration of u_tt - Lap u + u^3 = 0 and of the coupled
Fourier-truncation system

    w_tt - Lap w + w^3 = 0
    v_tt - Lap v + v^3 + 3 v^2 w + 3 v w^2 = 0.

One step is: half kick phi_t -= (dt/2) phi^3 / r^2, exact free drift in
the sine basis, half kick. The state is carried in sine coefficients, so
each step costs one inverse and one forward transform per component.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DivergenceError, TargetUnreachableError
from .linear_prop import Trajectory, free_rotation
from .monitors import MonitorConfig, diagnostics, energy
from .radial_field import (
    FieldState,
    LPConfig,
    RadialGrid,
    critical_norm,
    dst_forward,
    dst_inverse,
    hs_norm,
    lp_multiplier,
)

log = logging.getLogger(__name__)

OVERFLOW_LIMIT = 1e100
KICK_ID = "u_t -= (dt/2) u^3 pointwise as phi_t -= (dt/2) phi^3/r^2; Strang kick-drift-kick"
COUPLED_KICK_ID = ("v and w advanced in lockstep; each half kick of v uses w at the same "
                   "sub-step (pre-drift w for the first, post-drift w for the second)")


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 10.0
    output_stride: int = 10
    scheme: str = "strang"

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be positive, got {self.dt}", "solver.dt")
        if not np.isfinite(self.t_end):
            raise ConfigurationError("t_end must be finite", "solver.t_end")
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ConfigurationError("output_stride must be a positive integer",
                                     "solver.output_stride")
        if self.scheme != "strang":
            raise ConfigurationError(f"unknown scheme {self.scheme!r}", "solver.scheme")

    def check_grid(self, grid: RadialGrid):
        if self.dt > 0.5 * grid.dr * (1 + 1e-12):
            raise ConfigurationError(
                f"dt={self.dt} exceeds 0.5*dr={0.5 * grid.dr:.6g}", "solver.dt")

    def n_steps(self, t0: float) -> int:
        n = int(round((self.t_end - t0) / self.dt))
        if n < 0:
            raise ConfigurationError(f"t_end={self.t_end} precedes start time {t0}",
                                     "solver.t_end")
        return n


@dataclass(frozen=True)
class SplitConfig:
    j_cut: int = 0
    epsilon_target: float | None = None

    def __post_init__(self):
        if self.epsilon_target is not None and not self.epsilon_target > 0:
            raise ConfigurationError("epsilon_target must be positive",
                                     "split.epsilon_target")


# -- core loop -------------------------------------------------------------------------------

class _Kicker:
    """Spectral coefficients of weight * phi^3 (times mu)."""

    def __init__(self, grid: RadialGrid, weight: np.ndarray, mu: float):
        self.grid = grid
        self.weight = weight
        self.mu = mu

    def __call__(self, phi):
        if self.mu == 0:
            return None
        # overflow surfaces as DivergenceError via _check
        with np.errstate(over="ignore", invalid="ignore"):
            return dst_forward(self.mu * self.weight * phi ** 3)

    def coupled(self, pv, pw):
        if self.mu == 0:
            return None
        with np.errstate(over="ignore", invalid="ignore"):
            return dst_forward(self.mu * self.weight
                               * (pv ** 3 + 3 * pv * pv * pw + 3 * pv * pw * pw))


def _check(N, phi, step, t, component):
    if N is None:
        ok = np.all(np.isfinite(phi))
    else:
        ok = np.all(np.isfinite(N))
    if not ok or np.max(np.abs(phi)) > OVERFLOW_LIMIT:
        raise DivergenceError(step, t, float(np.max(np.abs(phi))), component)


def integrate_split(grid: RadialGrid, phi0, phit0, t0: float, dt: float, n_steps: int,
                    stride: int, weight: np.ndarray, mu: float = 1.0,
                    component: str = "u", on_output: Callable | None = None,
                    include_final: bool = False):
    """Run ``n_steps`` Strang steps; returns (times, phi, phit) at every
    ``stride``-th step, starting with the initial state.

    ``weight`` multiplies phi^3 in the kick (1/r^2 for the radial cubic
    equation). Negative ``dt`` runs backwards in time. ``include_final``
    appends the last state when ``n_steps`` is not a stride multiple.
    """
    kick = _Kicker(grid, weight, mu)
    xi = grid.xi
    C = np.cos(xi * dt)
    S = np.sin(xi * dt)
    Sx = S / xi
    xS = xi * S
    h = 0.5 * dt
    a = dst_forward(phi0)
    b = dst_forward(phit0)
    phi = np.array(phi0, dtype=float)
    N = kick(phi)
    n_out = n_steps // stride + 2
    times = np.empty(n_out)
    phis = np.empty((n_out, grid.n))
    phits = np.empty((n_out, grid.n))
    times[0], phis[0], phits[0] = t0, phi0, phit0
    if on_output:
        on_output(t0, phis[0], phits[0])
    k = 1
    for step in range(1, n_steps + 1):
        if N is not None:
            b = b - h * N
        a, b = C * a + Sx * b, -xS * a + C * b
        phi = dst_inverse(a)
        N = kick(phi)
        if N is not None:
            b = b - h * N
        if N is not None or step % stride == 0:
            _check(N, phi, step, t0 + step * dt, component)
        if step % stride == 0:
            t = t0 + step * dt
            times[k] = t
            phis[k] = phi
            phits[k] = dst_inverse(b)
            if on_output:
                on_output(t, phis[k], phits[k])
            k += 1
    if include_final and n_steps % stride:
        times[k], phis[k], phits[k] = t0 + n_steps * dt, phi, dst_inverse(b)
        if on_output:
            on_output(times[k], phis[k], phits[k])
        k += 1
    return times[:k], phis[:k], phits[:k]


def _inv_r2(grid):
    return 1.0 / grid.r ** 2


def step(st: FieldState, dt: float, mu: float = 1.0) -> FieldState:
    """One Strang step (kick, exact drift, kick) of size ``dt`` (may be negative)."""
    g = st.grid
    w = _inv_r2(g)
    phi = st.u.phi
    phit = st.ut.phi - 0.5 * dt * mu * w * phi ** 3
    a, b = free_rotation(dst_forward(phi), dst_forward(phit), g.xi, dt)
    phi = dst_inverse(a)
    phit = dst_inverse(b) - 0.5 * dt * mu * w * phi ** 3
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(phit))) \
            or np.max(np.abs(phi)) > OVERFLOW_LIMIT:
        raise DivergenceError(1, st.t + dt, float(np.max(np.abs(phi))))
    return FieldState.from_arrays(g, phi, phit, st.t + dt)


def evolve(st: FieldState, cfg: SolverConfig, monitors: MonitorConfig | None = None,
           mu: float = 1.0) -> Trajectory:
    """Integrate from ``st.t`` to ``cfg.t_end``; diagnostics are recorded at
    every output stride when ``monitors`` is given. ``mu = 0`` gives the
    free equation through the same machinery."""
    g = st.grid
    cfg.check_grid(g)
    n = cfg.n_steps(st.t)
    records = []

    def on_output(t, phi, phit):
        if monitors is not None:
            records.append(diagnostics(t, FieldState.from_arrays(g, phi, phit, t), None, monitors))

    times, phi, phit = integrate_split(g, st.u.phi, st.ut.phi, st.t, cfg.dt, n,
                                       cfg.output_stride, _inv_r2(g), mu, "u", on_output)
    meta = {"kind": "direct", "mu": mu, "dt": cfg.dt, "output_stride": cfg.output_stride,
            "dt_out": cfg.dt * cfg.output_stride, "scheme": cfg.scheme}
    return Trajectory(g, times, phi, phit, meta, records)


def evolve_span(st: FieldState, t_min: float, cfg: SolverConfig, mu: float = 1.0) -> Trajectory:
    """Integrate backwards from ``st.t`` to ``t_min`` and forwards to
    ``cfg.t_end``; one trajectory on a single output lattice anchored at
    ``st.t`` (its first frame is at or just below ``t_min``)."""
    g = st.grid
    cfg.check_grid(g)
    if t_min > st.t:
        raise ConfigurationError("t_min must not exceed the data time", "t_min")
    k = cfg.output_stride
    n_back = int(np.ceil((st.t - t_min) / (cfg.dt * k) - 1e-9)) * k
    w = _inv_r2(g)
    tb, pb, qb = integrate_split(g, st.u.phi, st.ut.phi, st.t, -cfg.dt, n_back, k, w, mu, "u")
    tf, pf, qf = integrate_split(g, st.u.phi, st.ut.phi, st.t, cfg.dt, cfg.n_steps(st.t), k,
                                 w, mu, "u")
    meta = {"kind": "direct-span", "mu": mu, "dt": cfg.dt, "output_stride": k,
            "dt_out": cfg.dt * k, "scheme": cfg.scheme, "t_data": st.t}
    return Trajectory(g, np.concatenate((tb[:0:-1], tf)), np.concatenate((pb[:0:-1], pf)),
                      np.concatenate((qb[:0:-1], qf)), meta)


def evolve_coupled(v0: FieldState, w0: FieldState, cfg: SolverConfig,
                   monitors: MonitorConfig | None = None):
    """Integrate the (v, w) system; returns (v_traj, w_traj).

    v_traj.records hold DiagnosticsRecords (E of v + w, Ev = E(v), ...);
    w_traj.records hold per-stride w norms (L6, L4 density, critical norm).
    """
    g = v0.grid
    if w0.grid != g:
        raise ConfigurationError("v0 and w0 must share a grid", "grid")
    cfg.check_grid(g)
    t0 = v0.t
    n = cfg.n_steps(t0)
    dt = cfg.dt
    weight = _inv_r2(g)
    kick = _Kicker(g, weight, 1.0)
    xi = g.xi
    C, S = np.cos(xi * dt), np.sin(xi * dt)
    Sx, xS = S / xi, xi * S
    h = 0.5 * dt
    av, bv = dst_forward(v0.u.phi), dst_forward(v0.ut.phi)
    aw, bw = dst_forward(w0.u.phi), dst_forward(w0.ut.phi)
    pv, pw = v0.u.phi.copy(), w0.u.phi.copy()
    Nw = kick(pw)
    Nv = kick.coupled(pv, pw)
    out_v, out_w = [(t0, pv, v0.ut.phi)], [(t0, pw, w0.ut.phi)]
    for k in range(1, n + 1):
        bw = bw - h * Nw
        bv = bv - h * Nv
        aw, bw = C * aw + Sx * bw, -xS * aw + C * bw
        av, bv = C * av + Sx * bv, -xS * av + C * bv
        pw = dst_inverse(aw)
        pv = dst_inverse(av)
        Nw = kick(pw)
        Nv = kick.coupled(pv, pw)
        bw = bw - h * Nw
        bv = bv - h * Nv
        t = t0 + k * dt
        _check(Nw, pw, k, t, "w")
        _check(Nv, pv, k, t, "v")
        if k % cfg.output_stride == 0:
            out_v.append((t, pv, dst_inverse(bv)))
            out_w.append((t, pw, dst_inverse(bw)))
    times = np.array([o[0] for o in out_v])
    meta = {"dt": dt, "output_stride": cfg.output_stride, "dt_out": dt * cfg.output_stride,
            "scheme": cfg.scheme, "coupled_kick": COUPLED_KICK_ID, "mu": 1.0}
    v_traj = Trajectory(g, times, np.array([o[1] for o in out_v]),
                        np.array([o[2] for o in out_v]), {**meta, "kind": "coupled-v"})
    w_traj = Trajectory(g, times, np.array([o[1] for o in out_w]),
                        np.array([o[2] for o in out_w]), {**meta, "kind": "coupled-w"})
    w_traj.records = [_w_norms(w_traj.state(i)) for i in range(len(w_traj))]
    if monitors is not None:
        v_traj.records = [diagnostics(times[i], v_traj.state(i), w_traj.state(i), monitors)
                          for i in range(len(times))]
    return v_traj, w_traj


def _w_norms(w: FieldState) -> dict:
    g = w.grid
    u = w.u.phi / g.r
    l6 = (4 * np.pi * g.dr * np.sum(u ** 6 * g.r ** 2)) ** (1 / 6)
    l4 = 4 * np.pi * g.dr * np.sum(u ** 4 * g.r ** 2)
    return {"t": float(w.t), "w_l6": float(l6), "w_l4_density": float(l4),
            "w_critical": critical_norm(w)}


# -- data splitting -----------------------------------------------------------------------

@dataclass
class SplitResult:
    v0: FieldState
    w0: FieldState
    j_cut: int
    tail_norm: float
    energy_v0: float

    def __iter__(self):
        return iter((self.v0, self.w0))


def tail_norm(st: FieldState, j: int, lp: LPConfig | None = None) -> float:
    """||P_{>j} u||_{H^1/2} + ||P_{>j} u_t||_{H^-1/2}."""
    _, w = _split_at(st, j, lp or LPConfig.for_grid(st.grid))
    return hs_norm(w.u, 0.5) + hs_norm(w.ut, -0.5)


def _split_at(st, j, lp):
    g = st.grid
    m = lp_multiplier(g.xi, j, "high", lp)
    w_phi = dst_inverse(m * dst_forward(st.u.phi))
    w_phit = dst_inverse(m * dst_forward(st.ut.phi))
    w = FieldState.from_arrays(g, w_phi, w_phit, st.t)
    v = FieldState.from_arrays(g, st.u.phi - w_phi, st.ut.phi - w_phit, st.t)
    return v, w


def split_initial_data(st: FieldState, sc: SplitConfig, lp: LPConfig | None = None) -> SplitResult:
    """v0 = P_{<=j} data, w0 = P_{>j} data with v0 + w0 = data.

    With ``epsilon_target`` set, j is raised from ``sc.j_cut`` until the
    critical norm of w0 is <= epsilon_target. The search stops at
    ``j_max - 1``; at ``j_max`` the high piece vanishes identically and
    the split degenerates.
    """
    lp = lp or LPConfig.for_grid(st.grid)
    j = max(sc.j_cut, lp.j_min - 1)
    v, w = _split_at(st, j, lp)
    tail = hs_norm(w.u, 0.5) + hs_norm(w.ut, -0.5)
    if sc.epsilon_target is not None:
        best = tail
        while tail > sc.epsilon_target:
            if j + 1 > lp.j_max - 1:
                raise TargetUnreachableError(
                    f"no cut up to j={lp.j_max - 1} reaches epsilon={sc.epsilon_target}", best)
            j += 1
            v, w = _split_at(st, j, lp)
            tail = hs_norm(w.u, 0.5) + hs_norm(w.ut, -0.5)
            best = min(best, tail)
    return SplitResult(v, w, j, float(tail), energy(v))


# -- scaling ------------------------------------------------------------------------------

def rescale_state(st: FieldState, lam: float) -> FieldState:
    """u -> lam u(lam t, lam x) as a grid relabelling.

    phi samples are unchanged on the grid with r_max / lam; phi_t gains a
    factor lam and time stamps divide by lam.
    """
    g = st.grid
    g2 = RadialGrid(g.r_max / lam, g.n)
    return FieldState.from_arrays(g2, st.u.phi, lam * st.ut.phi, st.t / lam)


def rescale_config(cfg: SolverConfig, lam: float) -> SolverConfig:
    return SolverConfig(cfg.dt / lam, cfg.t_end / lam, cfg.output_stride, cfg.scheme)


def rescale_trajectory(traj: Trajectory, lam: float) -> Trajectory:
    g = traj.grid
    return Trajectory(RadialGrid(g.r_max / lam, g.n), traj.times / lam, traj.phi,
                      lam * traj.phit, dict(traj.meta))
