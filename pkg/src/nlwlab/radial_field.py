"""Radial grids, sine-spectral representation, Sobolev norms and
Littlewood-Paley projections.

A radial function u(r) on R^3 is stored through phi(r) = r*u(r) on the
interior nodes r_i = i*dr (i = 1..n) of [0, r_max], with homogeneous
Dirichlet conditions at both ends. In this variable the radial Laplacian
is d^2/dr^2, which is diagonal in the basis sin(xi_k r), xi_k = k*pi/r_max.

Fourier convention (fixed for the whole package)::

    u_hat(xi) = int u(x) exp(-i x.xi) dx = (4 pi / xi) int_0^inf sin(r xi) phi(r) dr
    ||u||_{H^s}^2 = (2 pi)^-3 int |xi|^(2s) |u_hat|^2 dxi

With phi = sum_k c_k sin(xi_k r) this becomes the exact discrete form
``4 pi (r_max/2) sum_k xi_k^(2s) c_k^2``. Parseval on the grid is exact:
``dr * sum_i phi_i^2 == (r_max/2) * sum_k c_k^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft

from .errors import ConfigurationError, RangeError, UnsupportedOrderError

MIN_NODES = 4
FOUR_PI = 4.0 * np.pi
BUMP_ID = "smoothstep-exp: chi=1 on |xi|<=1, h(2-|xi|)/(h(2-|xi|)+h(|xi|-1)) on (1,2), h(x)=exp(-1/x)"


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid on [0, r_max] with ``n`` interior nodes.

    Any ``n >= 4`` works; the sine transform is fastest when ``n + 1``
    is a power of two (e.g. 4095).
    """

    r_max: float
    n: int

    def __post_init__(self):
        if not np.isfinite(self.r_max) or self.r_max <= 0:
            raise ConfigurationError(f"r_max must be positive, got {self.r_max}", "r_max")
        if int(self.n) != self.n or self.n < MIN_NODES:
            raise ConfigurationError(f"n must be an integer >= {MIN_NODES}, got {self.n}", "n")

    @property
    def dr(self) -> float:
        return self.r_max / (self.n + 1)

    @cached_property
    def r(self) -> np.ndarray:
        r = self.dr * np.arange(1, self.n + 1)
        r.setflags(write=False)
        return r

    @cached_property
    def xi(self) -> np.ndarray:
        xi = np.pi / self.r_max * np.arange(1, self.n + 1)
        xi.setflags(write=False)
        return xi

    def refined(self, factor: int = 2) -> "RadialGrid":
        """Same domain with dr divided by ``factor``."""
        return RadialGrid(self.r_max, (self.n + 1) * factor - 1)


def make_grid(r_max: float, n: int) -> RadialGrid:
    return RadialGrid(float(r_max), int(n))


@dataclass(frozen=True, eq=False)
class RadialField:
    """Samples of phi(r) = r*u(r) on the interior nodes of ``grid``."""

    grid: RadialGrid
    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.shape != (self.grid.n,):
            raise ConfigurationError(
                f"phi has shape {phi.shape}, grid expects ({self.grid.n},)", "phi")
        if not np.all(np.isfinite(phi)):
            raise ConfigurationError("field contains non-finite samples", "phi")
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_profile(cls, grid: RadialGrid, profile: Callable[[np.ndarray], np.ndarray]):
        """Sample a radial profile u(r)."""
        return cls(grid, grid.r * np.asarray(profile(grid.r), dtype=float))

    @classmethod
    def zeros(cls, grid: RadialGrid):
        return cls(grid, np.zeros(grid.n))

    @property
    def u(self) -> np.ndarray:
        """u(r_i) = phi_i / r_i."""
        return self.phi / self.grid.r

    def __add__(self, other):
        _check_same_grid(self.grid, other.grid)
        return RadialField(self.grid, self.phi + other.phi)

    def __sub__(self, other):
        _check_same_grid(self.grid, other.grid)
        return RadialField(self.grid, self.phi - other.phi)

    def __mul__(self, scalar):
        return RadialField(self.grid, self.phi * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class FieldState:
    """Phase-space point (u, u_t) at time ``t``."""

    t: float
    u: RadialField
    ut: RadialField

    def __post_init__(self):
        _check_same_grid(self.u.grid, self.ut.grid)
        if not np.isfinite(self.t):
            raise ConfigurationError(f"time stamp must be finite, got {self.t}", "t")

    @property
    def grid(self) -> RadialGrid:
        return self.u.grid

    @classmethod
    def from_profiles(cls, grid, u0, u1=None, t=0.0):
        ut = RadialField.zeros(grid) if u1 is None else RadialField.from_profile(grid, u1)
        return cls(float(t), RadialField.from_profile(grid, u0), ut)

    @classmethod
    def from_arrays(cls, grid, phi, phit, t=0.0):
        return cls(float(t), RadialField(grid, phi), RadialField(grid, phit))

    @classmethod
    def zeros(cls, grid, t=0.0):
        return cls(float(t), RadialField.zeros(grid), RadialField.zeros(grid))

    def __add__(self, other):
        return FieldState(self.t, self.u + other.u, self.ut + other.ut)

    def __sub__(self, other):
        return FieldState(self.t, self.u - other.u, self.ut - other.ut)

    def scaled(self, factor):
        return FieldState(self.t, self.u * factor, self.ut * factor)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients c_k of phi = sum_k c_k sin(xi_k r)."""

    grid: RadialGrid
    coeff: np.ndarray

    @property
    def xi(self):
        return self.grid.xi


def _check_same_grid(a: RadialGrid, b: RadialGrid):
    if a != b:
        raise ConfigurationError(f"grid mismatch: {a} vs {b}", "grid")


# -- transforms ---------------------------------------------------------------

def dst_forward(phi: np.ndarray) -> np.ndarray:
    """Grid samples -> sine coefficients (works on the last axis)."""
    n = phi.shape[-1]
    return scipy.fft.dst(phi, type=1, axis=-1) / (n + 1)


def dst_inverse(coeff: np.ndarray) -> np.ndarray:
    return scipy.fft.dst(coeff, type=1, axis=-1) * 0.5


def to_spectral(f: RadialField) -> SpectralField:
    return SpectralField(f.grid, dst_forward(f.phi))


def from_spectral(c: SpectralField) -> RadialField:
    return RadialField(c.grid, dst_inverse(c.coeff))


def fourier_transform(f: RadialField) -> np.ndarray:
    """u_hat(xi_k) in the package convention.

    The sine coefficient is the trapezoid approximation of
    (2/r_max) int_0^r_max sin(xi_k r) phi(r) dr.
    """
    c = dst_forward(f.phi)
    return FOUR_PI / f.grid.xi * (0.5 * f.grid.r_max) * c


def radial_derivative(phi: np.ndarray, grid: RadialGrid, with_ends: bool = False):
    """Spectral d(phi)/dr.

    With ``with_ends`` the values at r = 0 and r = r_max are included
    (length n + 2); d(phi)/dr at r = 0 equals u(0).
    """
    c = dst_forward(phi)
    padded = np.zeros(phi.shape[:-1] + (grid.n + 2,))
    padded[..., 1:-1] = c * grid.xi
    d = scipy.fft.dct(padded, type=1, axis=-1) * 0.5
    return d if with_ends else d[..., 1:-1]


def u_at_origin(phi: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """u(0) from two-node Richardson extrapolation of phi/r.

    u is even in r, so u(r) = u(0) + a r^2 + O(r^4) and
    u(0) ~ (4 u(r_1) - u(r_2)) / 3.
    """
    u1 = phi[..., 0] / grid.r[0]
    u2 = phi[..., 1] / grid.r[1]
    return (4.0 * u1 - u2) / 3.0


# -- quadrature -------------------------------------------------------------------

def integrate(values: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Trapezoid over [0, r_max] for an integrand vanishing at both ends."""
    return grid.dr * np.sum(values, axis=-1)


def integrate_interval(values: np.ndarray, grid: RadialGrid, a: float, b: float,
                       at_zero: float = 0.0) -> float:
    """Exact integral over [a, b] of the piecewise-linear interpolant.

    ``values`` are the interior samples; the interpolant uses ``at_zero``
    at r = 0 and 0 at r = r_max. Cells cut by a or b are weighted by the
    covered fraction, so the rule stays second order for any a, b.
    """
    a = max(float(a), 0.0)
    b = min(float(b), grid.r_max)
    if b <= a:
        return 0.0
    f = np.concatenate(([at_zero], values, [0.0]))
    dr = grid.dr
    cum = np.concatenate(([0.0], np.cumsum(0.5 * dr * (f[1:] + f[:-1]))))
    return _cum_at(cum, f, dr, b) - _cum_at(cum, f, dr, a)


def _cum_at(cum, f, dr, x):
    i = min(int(x / dr), len(f) - 2)
    s = x - i * dr
    slope = (f[i + 1] - f[i]) / dr
    return cum[i] + f[i] * s + 0.5 * slope * s * s


def cumulative_integral(values: np.ndarray, grid: RadialGrid, at_zero=0.0) -> np.ndarray:
    """Trapezoid integral from 0 to each interior node (last axis)."""
    f = np.concatenate((np.full(values.shape[:-1] + (1,), at_zero), values), axis=-1)
    return np.cumsum(0.5 * grid.dr * (f[..., 1:] + f[..., :-1]), axis=-1)


# -- Sobolev norms ------------------------------------------------------------------

S_MIN, S_MAX = -1.0, 2.0


def hs_norm(f: RadialField, s: float) -> float:
    """Homogeneous Sobolev norm of order ``s`` in [-2, 2]."""
    if not -2.0 <= s <= 2.0:
        raise UnsupportedOrderError(f"Sobolev order {s} outside [-2, 2]")
    c = dst_forward(f.phi)
    val = FOUR_PI * 0.5 * f.grid.r_max * np.sum(f.grid.xi ** (2.0 * s) * c * c)
    return float(np.sqrt(val))


def sobolev_norm(st: FieldState, s: float) -> tuple[float, float]:
    """(||u||_{H^s}, ||u_t||_{H^(s-1)}) for s in [-1, 2]."""
    if not S_MIN <= s <= S_MAX:
        raise UnsupportedOrderError(f"Sobolev order {s} outside [{S_MIN}, {S_MAX}]")
    return hs_norm(st.u, s), hs_norm(st.ut, s - 1.0)


def critical_norm(st: FieldState) -> float:
    """||u||_{H^1/2} + ||u_t||_{H^-1/2}."""
    a, b = sobolev_norm(st, 0.5)
    return a + b


def l2_norm(f: RadialField) -> float:
    return float(np.sqrt(FOUR_PI * integrate(f.phi ** 2, f.grid)))


# -- Littlewood-Paley ------------------------------------------------------------------

def _h(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def bump(xi) -> np.ndarray:
    """Smooth even cutoff: 1 on |xi| <= 1, 0 on |xi| >= 2, monotone between."""
    x = np.abs(np.asarray(xi, dtype=float))
    a = _h(2.0 - x)
    b = _h(x - 1.0)
    out = np.where(x <= 1.0, 1.0, 0.0)
    mid = (x > 1.0) & (x < 2.0)
    out[mid] = a[mid] / (a[mid] + b[mid])
    return out


@dataclass(frozen=True)
class LPConfig:
    """Dyadic band range for P_j with multiplier bump(xi/2^j) - bump(xi/2^(j-1))."""

    j_min: int
    j_max: int
    bump: Callable = field(default=bump, compare=False)
    bump_id: str = BUMP_ID

    @classmethod
    def for_grid(cls, grid: RadialGrid) -> "LPConfig":
        """Smallest band range whose bands cover every resolved xi_k."""
        j_min = int(np.floor(np.log2(grid.xi[0])))
        j_max = int(np.ceil(np.log2(grid.xi[-1])))
        return cls(j_min, j_max)


def lp_multiplier(xi: np.ndarray, j: int, kind: str, cfg: LPConfig) -> np.ndarray:
    chi = cfg.bump
    if kind == "band":
        return chi(xi / 2.0 ** j) - chi(xi / 2.0 ** (j - 1))
    if kind == "low":
        return chi(xi / 2.0 ** j)
    if kind == "high":
        return 1.0 - chi(xi / 2.0 ** j)
    raise ValueError(f"unknown projection kind {kind!r}; expected band, low or high")


def lp_project(f: RadialField, j: int, kind: str = "band", cfg: LPConfig | None = None) -> RadialField:
    """Apply P_j ("band"), P_{<=j} ("low") or P_{>j} ("high")."""
    cfg = cfg or LPConfig.for_grid(f.grid)
    if not cfg.j_min - 1 <= j <= cfg.j_max:
        raise RangeError(f"band j={j} outside resolved range [{cfg.j_min}, {cfg.j_max}]")
    c = dst_forward(f.phi)
    return RadialField(f.grid, dst_inverse(lp_multiplier(f.grid.xi, j, kind, cfg) * c))


def weighted_l4(f: RadialField) -> float:
    """int u^4/|x| dx = 4 pi int u^4 r dr = 4 pi int phi^4 / r^3 dr."""
    r = f.grid.r
    return float(FOUR_PI * integrate(f.phi ** 4 / r ** 3, f.grid))
