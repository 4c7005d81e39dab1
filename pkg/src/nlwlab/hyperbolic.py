"""Hyperbolic coordinates t = e^tau cosh s, r = e^tau sinh s inside the
light cone.

With u~(tau, s) = (e^tau sinh s / s) u(e^tau cosh s, e^tau sinh s) the
cubic equation becomes

    (d_tautau - d_ss - (2/s) d_s) u~ + (s / sinh s)^2 u~^3 = 0.

States are stored through v = s*u~, which is simply phi = r*u read off at
(t, r) = (e^tau cosh s, e^tau sinh s). Its tau-derivative follows from
the chain rule, d_tau t = t and d_tau r = r:

    s*u~_tau = t phi_t + r phi_r.

In v the equation reads v_tautau - v_ss + (s/sinh s)^2 v^3 / s^2 = 0,
so the native evolution reuses the radial Strang integrator with a
different kick weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, CoverageError, DivergenceError
from .linear_prop import Trajectory, time_integral
from .nlw_solver import integrate_split
from .radial_field import (
    FOUR_PI,
    RadialGrid,
    dst_forward,
    integrate,
    integrate_interval,
    radial_derivative,
    u_at_origin,
)

CHAIN_RULE_ID = "s*u~_tau = t*phi_t + r*phi_r at (t, r) = (e^tau cosh s, e^tau sinh s)"
INTERPOLATION_ID = "bilinear in (t, r) on stored frames; phi(0) = phi(r_max) = 0"
SERIES_BRANCH = 1e-4


class HyperbolicGrid(RadialGrid):
    """Uniform s-grid on [0, s_max] with ``m`` interior nodes."""

    @property
    def s_max(self):
        return self.r_max

    @property
    def m(self):
        return self.n

    @property
    def ds(self):
        return self.dr

    @property
    def s(self):
        return self.r


def make_hyperbolic_grid(s_max: float, m: int) -> HyperbolicGrid:
    return HyperbolicGrid(float(s_max), int(m))


@dataclass(frozen=True, eq=False)
class HyperbolicState:
    """v = s*u~ and vt = s*u~_tau on ``grid`` at hyperbolic time ``tau``."""

    grid: HyperbolicGrid
    tau: float
    v: np.ndarray
    vt: np.ndarray

    def __post_init__(self):
        for name in ("v", "vt"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (self.grid.m,):
                raise ConfigurationError(f"{name} must have length {self.grid.m}", name)
            if not np.all(np.isfinite(a)):
                raise ConfigurationError(f"{name} has non-finite entries", name)
            object.__setattr__(self, name, a)

    @property
    def u(self):
        """u~ at the grid nodes."""
        return self.v / self.grid.s

    @property
    def ut(self):
        return self.vt / self.grid.s


def s_over_sinh(s) -> np.ndarray:
    """s / sinh s, exact at 0 and free of overflow for large s."""
    s = np.abs(np.asarray(s, dtype=float))
    out = np.empty_like(s)
    small = s < SERIES_BRANCH
    x = s[small] ** 2
    out[small] = 1.0 - x / 6.0 + 7.0 * x * x / 360.0
    big = ~small
    sb = s[big]
    out[big] = -2.0 * sb * np.exp(-sb) / np.expm1(-2.0 * sb)
    return out


def nonlinear_weight(s) -> np.ndarray:
    """(s / sinh s)^2."""
    return s_over_sinh(s) ** 2


# -- sampling standard-coordinate trajectories ---------------------------------------

def _frame_padded(traj: Trajectory, rows, which: str):
    g = traj.grid
    if which == "phi":
        body = traj.phi[rows]
        return np.pad(body, ((0, 0), (1, 1)))
    if which == "phit":
        return np.pad(traj.phit[rows], ((0, 0), (1, 1)))
    if which == "phir":
        return radial_derivative(traj.phi[rows], g, with_ends=True)
    raise ValueError(which)


def _bilinear(traj: Trajectory, t, r, which):
    """Bilinear (t, r) interpolation of a stored quantity."""
    g = traj.grid
    times = traj.times
    i = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2)
    ft = (t - times[i]) / (times[i + 1] - times[i])
    x = r / g.dr
    j = np.clip(np.floor(x).astype(int), 0, g.n)
    fr = x - j
    rows = np.unique(np.concatenate((i, i + 1)))
    pos = np.searchsorted(rows, i)
    pos1 = np.searchsorted(rows, i + 1)
    F = _frame_padded(traj, rows, which)
    lo = (1 - fr) * F[pos, j] + fr * F[pos, j + 1]
    hi = (1 - fr) * F[pos1, j] + fr * F[pos1, j + 1]
    return (1 - ft) * lo + ft * hi


def _check_coverage(traj: Trajectory, t, r):
    tol = 1e-9 * max(1.0, float(np.max(t)))
    t0, t1 = traj.times[0], traj.times[-1]
    if len(traj) < 2:
        raise CoverageError("trajectory needs at least two frames", (float(np.min(t)), float(np.max(t))),
                            (t0, t1))
    if np.min(t) < t0 - tol or np.max(t) > t1 + tol:
        raise CoverageError(
            f"hyperboloid needs t in [{np.min(t):.6g}, {np.max(t):.6g}], "
            f"trajectory covers [{t0:.6g}, {t1:.6g}]",
            (float(np.min(t)), float(np.max(t))), (float(t0), float(t1)))
    if np.max(r) > traj.grid.r_max:
        raise CoverageError(
            f"hyperboloid reaches r={np.max(r):.6g} beyond r_max={traj.grid.r_max}",
            (float(np.min(t)), float(np.max(t))), (float(t0), float(t1)))


def sample_hyperbolic(traj: Trajectory, s, tau: float):
    """(v, vt) = (s u~, s u~_tau) at arbitrary s >= 0 on hyperbolic time ``tau``."""
    s = np.asarray(s, dtype=float)
    t = np.exp(tau) * np.cosh(s)
    r = np.exp(tau) * np.sinh(s)
    _check_coverage(traj, t, r)
    t = np.clip(t, traj.times[0], traj.times[-1])
    v = _bilinear(traj, t, r, "phi")
    vt = t * _bilinear(traj, t, r, "phit") + r * _bilinear(traj, t, r, "phir")
    return v, vt


def to_hyperbolic(traj: Trajectory, grid: HyperbolicGrid, tau: float) -> HyperbolicState:
    """Sample (s*u~, s*u~_tau) on the hyperboloid t^2 - r^2 = e^(2 tau)."""
    v, vt = sample_hyperbolic(traj, grid.s, tau)
    return HyperbolicState(grid, float(tau), v, vt)


def hyperboloid_data(traj: Trajectory, grid: HyperbolicGrid) -> HyperbolicState:
    """Data on tau = 0, i.e. t^2 - r^2 = 1 (u~_tau by the chain rule)."""
    return to_hyperbolic(traj, grid, 0.0)


def origin_limit(state: HyperbolicState) -> float:
    """u~(tau, 0) from the two smallest s-nodes (Richardson)."""
    return float(u_at_origin(state.v, state.grid))


# -- native evolution --------------------------------------------------------------------

def hyperbolic_energy(st: HyperbolicState) -> float:
    """1/2 ||u~_tau||^2 + 1/2 ||u~_s||^2 + 1/4 int u~^4 (s/sinh s)^2 dx
    (L^2 norms over R^3, radial measure 4 pi s^2 ds)."""
    g = st.grid
    s = g.s
    c = dst_forward(st.v)
    grad = 0.5 * g.s_max * np.sum(g.xi ** 2 * c * c)
    kin = integrate(st.vt ** 2, g)
    quart = integrate(st.v ** 4 * nonlinear_weight(s) / s ** 2, g)
    return float(FOUR_PI * (0.5 * kin + 0.5 * grad + 0.25 * quart))


def evolve_hyperbolic(st: HyperbolicState, tau_end: float, dt_tau: float,
                      stride: int = 1) -> Trajectory:
    """Strang integration of the transformed equation from ``st.tau`` to
    ``tau_end``; the returned Trajectory is indexed by tau on the s-grid."""
    g = st.grid
    if not dt_tau > 0 or dt_tau > 0.5 * g.ds * (1 + 1e-12):
        raise ConfigurationError(f"dt_tau must lie in (0, 0.5*ds={0.5 * g.ds:.6g}]", "dt_tau")
    span = tau_end - st.tau
    if span < 0:
        raise ConfigurationError("tau_end precedes the initial tau", "tau_end")
    # shrink the step so that tau_end is hit exactly
    n = int(np.ceil(span / dt_tau - 1e-9))
    if n:
        dt_tau = span / n
    weight = nonlinear_weight(g.s) / g.s ** 2
    try:
        taus, v, vt = integrate_split(g, st.v, st.vt, st.tau, dt_tau, n, stride, weight,
                                      1.0, "hyperbolic", include_final=True)
    except DivergenceError:
        raise
    meta = {"kind": "hyperbolic", "dt_tau": dt_tau, "output_stride": stride}
    return Trajectory(g, taus, v, vt, meta)


def hyperbolic_state(htraj: Trajectory, i: int) -> HyperbolicState:
    return HyperbolicState(htraj.grid, float(htraj.times[i]), htraj.phi[i], htraj.phit[i])


def energy_series(htraj: Trajectory) -> np.ndarray:
    return np.array([hyperbolic_energy(hyperbolic_state(htraj, i)) for i in range(len(htraj))])


def transformed_trajectory(traj: Trajectory, grid: HyperbolicGrid, taus,
                           restrict: bool = False) -> Trajectory:
    """to_hyperbolic at each tau in ``taus`` stacked as a Trajectory.

    With ``restrict`` only nodes up to one step past s_max - (tau - taus[0])
    are sampled and the rest are left at zero, which is all the restricted
    change-of-variables check reads.
    """
    taus = np.asarray(taus, dtype=float)
    v = np.zeros((len(taus), grid.m))
    vt = np.zeros_like(v)
    for i, tau in enumerate(taus):
        # one node past the cut so the straddling cell is interpolated
        keep = grid.s <= grid.s_max - (tau - taus[0]) + grid.ds * (1 + 1e-9) if restrict \
            else np.ones(grid.m, bool)
        v[i, keep], vt[i, keep] = sample_hyperbolic(traj, grid.s[keep], tau)
    meta = {"kind": "hyperbolic-transformed", "restricted": restrict}
    return Trajectory(grid, taus, v, vt, meta)


# -- change of variables ---------------------------------------------------------------

@dataclass
class ChangeOfVariablesReport:
    lhs: float
    rhs: float
    rel_err: float
    exact: bool
    region: str

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.rel_err))


def change_of_variables_check(traj: Trajectory, htraj: Trajectory,
                              restrict: bool = True) -> ChangeOfVariablesReport:
    """Compare int int u~^4 (s/sinh s)^2 s^2 ds dtau with int int u^4 r^2 dr dt
    over the matching region.

    With ``restrict`` the region is the domain of dependence of the initial
    hyperboloid segment, s + (tau - tau0) <= s_max, which in (t, r) is
    t + r <= e^(s_max + tau0); otherwise s <= s_max (r <= t tanh s_max).
    Cells cut by the region boundary are weighted by the covered fraction.
    """
    hg = htraj.grid
    s = hg.s
    taus = htraj.times
    tau0, tau1 = float(taus[0]), float(taus[-1])
    s_max = hg.s_max
    dens = htraj.phi ** 4 * nonlinear_weight(s) / s ** 2
    if restrict:
        rows = [integrate_interval(dens[i], hg, 0.0, s_max - (taus[i] - tau0))
                for i in range(len(taus))]
    else:
        rows = list(integrate(dens, hg))
    lhs = time_integral(np.array(rows), taus)

    g = traj.grid
    rho0, rho1 = np.exp(tau0), np.exp(tau1)
    if restrict:
        big = np.exp(s_max + tau0)
        # t peaks on the last hyperboloid at s = s_max - (tau1 - tau0)
        top = min(tau1, tau0 + s_max)
        t_max = 0.5 * (big + np.exp(2 * top - s_max - tau0))
        r_need = rho0 * np.sinh(s_max)
    else:
        t_max = rho1 * np.cosh(s_max)
        r_need = t_max * np.tanh(s_max)
    _check_coverage(traj, np.array([rho0, t_max]), np.array([0.0, r_need]))
    mask = (traj.times >= rho0 - 1e-12) & (traj.times <= t_max + 1e-12)
    ts = traj.times[mask]
    phi4 = traj.phi[mask] ** 4 / g.r ** 2
    vals = []
    for t, row in zip(ts, phi4):
        r_lo = np.sqrt(max(t * t - rho1 * rho1, 0.0))
        r_hi = np.sqrt(max(t * t - rho0 * rho0, 0.0))
        r_hi = min(r_hi, big - t) if restrict else min(r_hi, t * np.tanh(s_max))
        vals.append(integrate_interval(row, g, r_lo, r_hi) if r_hi > r_lo else 0.0)
    rhs = time_integral(np.array(vals), ts)
    scale = max(abs(lhs), abs(rhs))
    exact = scale == 0.0
    rel = 0.0 if exact else abs(lhs - rhs) / scale
    return ChangeOfVariablesReport(float(lhs), float(rhs), float(rel), exact,
                                   "domain-of-dependence" if restrict else "s<=s_max")


def route_agreement(traj: Trajectory, htraj: Trajectory, tau: float) -> float:
    """Relative L^2(ds) gap between the native solution at ``tau`` and the
    transformed standard-coordinate solution, on the nodes the initial
    hyperboloid segment determines (s <= s_max - (tau - tau0))."""
    i = htraj.index_of(tau)
    g = htraj.grid
    keep = g.s <= g.s_max - (tau - htraj.times[0]) + 1e-12
    v_ref, _ = sample_hyperbolic(traj, g.s[keep], tau)
    v_nat = htraj.phi[i][keep]
    den = np.linalg.norm(v_ref)
    return float(np.linalg.norm(v_nat - v_ref) / den) if den > 0 else float(np.linalg.norm(v_nat))
