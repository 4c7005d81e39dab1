"""Energies, Morawetz potentials, the virial identity, spacetime bounds,
the modified energy and the growth-law fit.

Every r-integral is a trapezoid rule on the uniform grid except the
gradient term of the energy, which uses the sine-coefficient Parseval
identity (exact for the discrete representation).

In the phi = r*u variables, a Morawetz potential with radial weight a(r),

    M_a = int u_t a(|x|) x.grad u + int u_t a(|x|) u,

reduces to 4 pi int a(r) r phi_t phi_r dr, because r u_r + u = phi_r.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError, InsufficientDataError
from .linear_prop import Trajectory, time_integral
from .radial_field import (
    FOUR_PI,
    FieldState,
    RadialGrid,
    bump,
    cumulative_integral,
    dst_forward,
    integrate,
    integrate_interval,
    radial_derivative,
    sobolev_norm,
    u_at_origin,
)

CHI_PROFILE_ID = ("chi(x)=(1/x) int_0^x phi_cut, phi_cut = LP bump (1 on [0,1], 0 past 2, "
                  "int_1^2 = 1/2) so chi = 3/(2x) for x >= 2")
M2_KERNEL_ID = "closed-form ball averages: int_{|y|<=2R} dy/|x-y| and grad int_{|y|<=2R} |x-y| dy"


@dataclass(frozen=True)
class MonitorConfig:
    R: float = 1.0
    c1: float = 0.01
    c2: float = 0.01
    c3: float = 0.01
    delta: float = 0.5
    chi_profile: str = CHI_PROFILE_ID

    def __post_init__(self):
        if not self.R > 0:
            raise ConfigurationError(f"R must be positive, got {self.R}", "monitors.R")
        for name in ("c1", "c2", "c3"):
            # zero weights are allowed to switch a potential off
            if not getattr(self, name) >= 0:
                raise ConfigurationError(f"{name} must be >= 0", f"monitors.{name}")
        if not 0 < self.delta < 1:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}",
                                     "monitors.delta")


@dataclass
class DiagnosticsRecord:
    t: float
    E: float
    Ev: float
    M1: float
    M2: float
    M3: float
    E_mod: float
    weighted_l4: float
    local_mass: float
    local_energy: float
    hs_half_u: float
    hs_half_ut: float

    def as_dict(self):
        return asdict(self)


# -- building blocks ---------------------------------------------------------------------------

def gradient_sq(phi: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """int |grad u|^2 dx = 4 pi int phi_r^2 dr via Parseval."""
    c = dst_forward(phi)
    return FOUR_PI * 0.5 * grid.r_max * np.sum(grid.xi ** 2 * c * c, axis=-1)


def _energy_arrays(phi, phit, grid):
    r = grid.r
    kin = 0.5 * FOUR_PI * integrate(phit ** 2, grid)
    pot = 0.25 * FOUR_PI * integrate(phi ** 4 / r ** 2, grid)
    return kin + 0.5 * gradient_sq(phi, grid) + pot


def energy(st: FieldState) -> float:
    """E = 1/2 int u_t^2 + 1/2 int |grad u|^2 + 1/4 int u^4."""
    return float(_energy_arrays(st.u.phi, st.ut.phi, st.grid))


def morawetz_chi(x) -> np.ndarray:
    """Weight chi with (x chi)' = phi_cut: 1 on [0,1], 3/(2x) past 2."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    far = x >= 2.0
    out[far] = 1.5 / x[far]
    mid = (x > 1.0) & (x < 2.0)
    if mid.any():
        xm = x[mid]
        nodes, weights = np.polynomial.legendre.leggauss(64)
        half = 0.5 * (xm - 1.0)
        pts = 1.0 + half[:, None] * (nodes[None, :] + 1.0)
        ramp = half * (bump(pts) @ weights)
        out[mid] = (1.0 + ramp) / xm
    return out


def ball_potential(r, rho) -> np.ndarray:
    """int_{|y| <= rho} dy / |x - y| at |x| = r."""
    r = np.asarray(r, dtype=float)
    inside = 2.0 * np.pi * (rho ** 2 - r ** 2 / 3.0)
    with np.errstate(divide="ignore"):
        outside = 4.0 * np.pi * rho ** 3 / (3.0 * r)
    return np.where(r < rho, inside, outside)


def ball_distance_gradient(r, rho) -> np.ndarray:
    """Radial component of int_{|y| <= rho} (x - y)/|x - y| dy at |x| = r."""
    r = np.asarray(r, dtype=float)
    inside = 4.0 * np.pi * (r * rho ** 2 / 3.0 - r ** 3 / 15.0)
    with np.errstate(divide="ignore"):
        outside = 4.0 * np.pi * (rho ** 3 / 3.0 - rho ** 5 / (15.0 * r ** 2))
    return np.where(r < rho, inside, outside)


def _m_weighted(phit, phir, weight, grid):
    # weight = a(r) * r
    return FOUR_PI * integrate(weight * phit * phir, grid)


def _m1_raw(phi, phit, grid, phir=None):
    # phit*phir is odd in r with slope u_t(0) u(0) at the origin; the
    # Euler-Maclaurin endpoint term makes the rule O(dr^4), which the
    # virial identity needs (its time derivative would otherwise carry
    # an O(dr^2) u_t(0)^2 defect).
    if phir is None:
        phir = radial_derivative(phi, grid)
    slope0 = u_at_origin(phit, grid) * u_at_origin(phi, grid)
    return FOUR_PI * (integrate(phit * phir, grid) + grid.dr ** 2 / 12.0 * slope0)


def _m2_raw(phi, phit, grid, R, phir=None):
    if phir is None:
        phir = radial_derivative(phi, grid)
    r = grid.r
    rho = 2.0 * R
    k1 = ball_distance_gradient(r, rho)
    k0 = ball_potential(r, rho)
    return FOUR_PI * integrate(phit * (k1 * (phir - phi / r) + k0 * phi), grid) / R ** 3


def _m3_raw(phi, phit, grid, R, phir=None):
    if phir is None:
        phir = radial_derivative(phi, grid)
    r = grid.r
    return _m_weighted(phit, phir, morawetz_chi(r / R) * r / R, grid)


def morawetz_potential(st: FieldState, kind: str, cfg: MonitorConfig) -> float:
    """Weighted Morawetz potential M1 (a = 1/|x|), M2 (ball-averaged
    translates of a = 1/|x - y|, |y| <= 2R) or M3 (a = chi(|x|/R)/R)."""
    phi, phit, g = st.u.phi, st.ut.phi, st.grid
    if kind == "M1":
        return float(cfg.c1 * _m1_raw(phi, phit, g))
    if kind == "M2":
        return float(cfg.c2 * _m2_raw(phi, phit, g, cfg.R))
    if kind == "M3":
        return float(cfg.c3 * _m3_raw(phi, phit, g, cfg.R))
    raise ValueError(f"unknown Morawetz potential {kind!r}")


def morawetz_m1_direct(st: FieldState) -> float:
    """Unweighted M1 through u, u_r and u_t separately:
    4 pi int [u_t u_r r^2 + u_t u r] dr."""
    g = st.grid
    r = g.r
    u = st.u.phi / r
    ut = st.ut.phi / r
    ur = (radial_derivative(st.u.phi, g) - u) / r
    return float(FOUR_PI * integrate(ut * ur * r ** 2 + ut * u * r, g))


def hardy_constant(st: FieldState) -> float:
    """|M1| / (||u_t||_2 ||grad u||_2) for the unweighted M1; nan on zero data."""
    g = st.grid
    num = abs(_m1_raw(st.u.phi, st.ut.phi, g))
    den = np.sqrt(FOUR_PI * integrate(st.ut.phi ** 2, g) * gradient_sq(st.u.phi, g))
    return float(num / den) if den > 0 else float("nan")


def coupling_term(v: FieldState, w: FieldState) -> float:
    """int v^3 w dx."""
    g = v.grid
    return float(FOUR_PI * integrate(v.u.phi ** 3 * w.u.phi / g.r ** 2, g))


def modified_energy(v: FieldState, w: FieldState, cfg: MonitorConfig) -> float:
    """E(v) + M1 + M2 + M3 (all on v) + int v^3 w."""
    g = v.grid
    phi, phit = v.u.phi, v.ut.phi
    phir = radial_derivative(phi, g)
    return float(energy(v)
                 + cfg.c1 * _m1_raw(phi, phit, g, phir)
                 + cfg.c2 * _m2_raw(phi, phit, g, cfg.R, phir)
                 + cfg.c3 * _m3_raw(phi, phit, g, cfg.R, phir)
                 + coupling_term(v, w))


def local_mass(phi, grid, R):
    """R^-3 int_{|x| <= R} u^2 dx."""
    return FOUR_PI * integrate_interval(phi ** 2, grid, 0.0, R) / R ** 3


def local_energy(phi, phit, grid, R, phir=None):
    """R^-1 int_{|x| <= R} (|grad u|^2 + u_t^2) dx."""
    if phir is None:
        phir = radial_derivative(phi, grid)
    dens = (phir - phi / grid.r) ** 2 + phit ** 2
    return FOUR_PI * integrate_interval(dens, grid, 0.0, R) / R


def diagnostics(t: float, v: FieldState, w: FieldState | None, cfg: MonitorConfig) -> DiagnosticsRecord:
    """One diagnostics row; with ``w is None`` the state is treated as
    v = u, w = 0."""
    g = v.grid
    u = v if w is None else v + w
    phi, phit = u.u.phi, u.ut.phi
    vphi, vphit = v.u.phi, v.ut.phi
    vphir = radial_derivative(vphi, g)
    uphir = vphir if w is None else radial_derivative(phi, g)
    E = float(_energy_arrays(phi, phit, g))
    Ev = E if w is None else float(_energy_arrays(vphi, vphit, g))
    M1 = cfg.c1 * _m1_raw(vphi, vphit, g, vphir)
    M2 = cfg.c2 * _m2_raw(vphi, vphit, g, cfg.R, vphir)
    M3 = cfg.c3 * _m3_raw(vphi, vphit, g, cfg.R, vphir)
    coupling = 0.0 if w is None else coupling_term(v, w)
    hs_u, hs_ut = sobolev_norm(u, 0.5)
    return DiagnosticsRecord(
        t=float(t), E=E, Ev=Ev,
        M1=float(M1), M2=float(M2), M3=float(M3),
        E_mod=float(Ev + M1 + M2 + M3 + coupling),
        weighted_l4=float(FOUR_PI * integrate(phi ** 4 / g.r ** 3, g)),
        local_mass=float(local_mass(phi, g, cfg.R)),
        local_energy=float(local_energy(phi, phit, g, cfg.R, uphir)),
        hs_half_u=hs_u, hs_half_ut=hs_ut,
    )


def trajectory_diagnostics(traj: Trajectory, cfg: MonitorConfig, w_traj: Trajectory | None = None):
    out = []
    for i in range(len(traj)):
        w = None if w_traj is None else w_traj.state(i)
        out.append(diagnostics(traj.times[i], traj.state(i), w, cfg))
    return out


# -- virial identity ---------------------------------------------------------------------------

@dataclass
class IdentityReport:
    """Centered-difference dM1/dt against -kappa u(t,0)^2 - (mu/2) int u^4/|x|."""

    times: np.ndarray
    lhs: np.ndarray
    delta_term: np.ndarray
    quartic_term: np.ndarray
    mu: float
    kappa: float
    residual: np.ndarray
    tolerance: np.ndarray
    stencil: str = "5-point centered, 4th order"

    @property
    def passed(self) -> bool:
        return bool(np.all(np.abs(self.residual) <= self.tolerance))

    @property
    def rhs(self):
        k = 0.0 if not np.isfinite(self.kappa) else self.kappa
        return -k * self.delta_term - 0.5 * self.mu * self.quartic_term

    @property
    def max_ratio(self) -> float:
        """max |residual| / tolerance (<= 1 means the check passes)."""
        return float(np.max(np.abs(self.residual) / self.tolerance))

    @property
    def sign_violation(self) -> float:
        """max(lhs - rhs); the inequality direction holds when this stays
        below the residual tolerance."""
        return float(np.max(self.lhs - self.rhs))

    def to_dict(self):
        return {
            "kappa": self.kappa, "mu": self.mu, "passed": self.passed,
            "max_ratio": self.max_ratio, "stencil": self.stencil,
            "times": self.times.tolist(), "lhs": self.lhs.tolist(),
            "delta_term": self.delta_term.tolist(),
            "quartic_term": self.quartic_term.tolist(),
            "residual": self.residual.tolist(),
        }


def morawetz_series(traj: Trajectory) -> np.ndarray:
    """Unweighted M1 at every stored time."""
    g = traj.grid
    return _m1_raw(traj.phi, traj.phit, g)


def virial_residual(traj: Trajectory, window=None, cfg: MonitorConfig | None = None,
                    mu: float | None = None, rel_tol: float = 1e-3,
                    abs_tol: float = 1e-6) -> IdentityReport:
    """Check d/dt M1 = -kappa u(t,0)^2 - (mu/2) int u^4/|x| with kappa fit by
    least squares. ``mu`` defaults to ``traj.meta['mu']`` (1 if absent)."""
    if window is not None:
        traj = traj.window(*window)
    if mu is None:
        mu = float(traj.meta.get("mu", 1.0))
    if len(traj) < 5:
        raise InsufficientDataError(
            f"virial window holds {len(traj)} samples; at least 5 strides needed")
    steps = np.diff(traj.times)
    h = steps[0]
    if not np.allclose(steps, h, rtol=1e-9, atol=1e-12):
        raise InsufficientDataError("virial check needs a uniform output stride")
    g = traj.grid
    M = morawetz_series(traj)
    lhs = (M[:-4] - 8 * M[1:-3] + 8 * M[3:-1] - M[4:]) / (12.0 * h)
    sl = slice(2, len(traj) - 2)
    U = u_at_origin(traj.phi[sl], g) ** 2
    Q = FOUR_PI * integrate(traj.phi[sl] ** 4 / g.r ** 3, g)
    target = lhs + 0.5 * mu * Q
    denom = float(np.dot(U, U))
    kappa = -float(np.dot(target, U)) / denom if denom > 0 else float("nan")
    resid = target + (kappa if np.isfinite(kappa) else 0.0) * U
    tol = np.maximum(rel_tol * np.abs(lhs), abs_tol)
    return IdentityReport(traj.times[sl].copy(), lhs, U, Q, mu, kappa, resid, tol)


def kappa_consistency(kappas) -> float:
    """Maximum relative spread (max - min)/mean of fitted kappas."""
    k = np.asarray(kappas, dtype=float)
    return float((k.max() - k.min()) / abs(k.mean()))


# -- Morawetz bounds -------------------------------------------------------------------------

@dataclass
class BoundReport:
    lhs: dict
    rhs: float
    ratios: dict
    R_grid: list
    R_argmax: dict
    undefined: bool = False

    def to_dict(self):
        return asdict(self)


def bound_ratios(traj: Trajectory, cfg: MonitorConfig | None = None) -> BoundReport:
    """LHS / (sup_t ||u||_{H^1} sup_t ||u_t||_2) for the weighted-L4,
    local-mass and local-energy spacetime bounds.

    The sup over R runs over R = 2^k dr, k = 2..log2(n+1).
    """
    g = traj.grid
    r = g.r
    phi, phit = traj.phi, traj.phit
    phir = radial_derivative(phi, g)
    grad = np.sqrt(gradient_sq(phi, g))
    kin = np.sqrt(FOUR_PI * integrate(phit ** 2, g))
    rhs = float(grad.max() * kin.max())

    wl4 = time_integral(FOUR_PI * integrate(phi ** 4 / r ** 3, g), traj.times)
    kmax = int(np.floor(np.log2(g.n + 1)))
    ks = np.arange(2, kmax + 1)
    R_grid = (2.0 ** ks) * g.dr
    mass_dens = phi ** 2
    en_dens = (phir - phi / r) ** 2 + phit ** 2
    mass_t = _node_cumulative(mass_dens, g, ks, traj.times)
    ener_t = _node_cumulative(en_dens, g, ks, traj.times)
    mass_R = FOUR_PI * mass_t / R_grid ** 3
    ener_R = FOUR_PI * ener_t / R_grid
    lhs = {"weighted_l4": float(wl4),
           "local_mass": float(mass_R.max()),
           "local_energy": float(ener_R.max())}
    argmax = {"local_mass": float(R_grid[np.argmax(mass_R)]),
              "local_energy": float(R_grid[np.argmax(ener_R)])}
    if rhs > 0:
        ratios = {k: v / rhs for k, v in lhs.items()}
        undefined = False
    else:
        ratios = {k: float("nan") for k in lhs}
        undefined = True
    return BoundReport(lhs, rhs, ratios, R_grid.tolist(), argmax, undefined)


def _node_cumulative(dens, grid, ks, times):
    """Time-integrated int_0^{2^k dr} dens dr for each k (R on grid nodes)."""
    cum = cumulative_integral(dens, grid)
    total = integrate(dens, grid)
    cols = []
    for k in ks:
        idx = 2 ** int(k)
        col = total if idx == grid.n + 1 else cum[:, idx - 1]
        cols.append(time_integral(col, times))
    return np.array(cols)


# -- growth law ---------------------------------------------------------------------------------

def growth_fit(records, min_records: int = 20, min_span: float = 10.0):
    """Least-squares slope of ln E(v) against ln(1 + t).

    ``records`` is a sequence of DiagnosticsRecord (uses ``t`` and ``Ev``)
    or a pair of arrays (t, Ev). Returns (exponent, r2).
    """
    if isinstance(records, tuple) and len(records) == 2:
        t, ev = (np.asarray(a, dtype=float) for a in records)
    else:
        t = np.array([rec.t for rec in records], dtype=float)
        ev = np.array([rec.Ev for rec in records], dtype=float)
    if len(t) < min_records:
        raise InsufficientDataError(f"growth fit needs >= {min_records} records, got {len(t)}")
    x = np.log1p(t)
    if x[-1] - x[0] < np.log(min_span) - 1e-12:
        raise InsufficientDataError("records must span a decade in (1 + t)")
    if np.any(ev <= 0):
        raise InsufficientDataError("energies must be positive for a log fit")
    y = np.log(ev)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 1e-300 else 1.0
    if abs(slope) < 1e-14:
        slope = 0.0
    return float(slope), float(r2)


def relative_drift(values) -> float:
    """max_t |E(t) - E(0)| / E(0)."""
    v = np.asarray(values, dtype=float)
    return float(np.max(np.abs(v - v[0])) / abs(v[0])) if v[0] != 0 else 0.0

