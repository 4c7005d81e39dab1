import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from nlwlab.errors import ConfigurationError, InsufficientDataError
from nlwlab.linear_prop import Trajectory, free_trajectory
from nlwlab.monitors import (
    MonitorConfig,
    ball_distance_gradient,
    ball_potential,
    bound_ratios,
    diagnostics,
    growth_fit,
    hardy_constant,
    kappa_consistency,
    modified_energy,
    morawetz_chi,
    morawetz_m1_direct,
    morawetz_potential,
    morawetz_series,
    virial_residual,
)
from nlwlab.nlw_solver import SolverConfig, SplitConfig, evolve, split_initial_data
from nlwlab.radial_field import FieldState, bump, make_grid

from conftest import gaussian_state

G = make_grid(20.0, 511)


def _ball_brute(r, rho, grad=False):
    # shells |y| = s; on each shell the mu-integrand behaves like
    # (1 - mu)^(-1/2) near s = r, which the algebraic quadrature weight absorbs
    def shell(s):
        def g(mu):
            d = np.sqrt((r - s) ** 2 + 2 * r * s * (1 - mu))
            w = (r - s * mu) / d if grad else 1.0 / d
            return w * np.sqrt(1 - mu) if d > 0 else (1.0 if grad else 1.0 / np.sqrt(2 * r * s))

        val = integrate.quad(g, -1, 1, weight="alg", wvar=(0.0, -0.5), epsabs=1e-14)[0]
        return 2 * np.pi * s * s * val

    cuts = [0.0, r, rho] if r < rho else [0.0, rho]
    return sum(integrate.quad(shell, a, b, limit=200, epsabs=1e-13)[0]
               for a, b in zip(cuts[:-1], cuts[1:]))


@pytest.mark.parametrize("r", [0.3, 1.1, 1.9, 2.5, 6.0])
def test_ball_kernels_against_brute_force(r):
    rho = 2.0
    assert ball_potential(r, rho) == pytest.approx(_ball_brute(r, rho), rel=1e-7)
    assert ball_distance_gradient(r, rho) == pytest.approx(_ball_brute(r, rho, True), rel=1e-7)


def test_ball_kernels_are_continuous():
    rho = 1.5
    lo, hi = rho * (1 - 1e-12), rho * (1 + 1e-12)
    assert ball_potential(lo, rho) == pytest.approx(ball_potential(hi, rho), rel=1e-9)
    assert ball_distance_gradient(lo, rho) == pytest.approx(ball_distance_gradient(hi, rho), rel=1e-9)


def test_chi_profile():
    x = np.linspace(0.01, 5, 2000)
    c = morawetz_chi(x)
    assert np.all(c[x <= 1] == 1)
    assert np.allclose(c[x >= 2], 1.5 / x[x >= 2])
    # (x chi)' equals the cutoff
    d = np.gradient(x * c, x)
    inner = (x > 0.05) & (x < 4.95)
    assert np.max(np.abs(d[inner] - bump(x[inner]))) < 2e-3


def test_config_validation():
    for bad in ({"R": 0}, {"c1": -1}, {"delta": 1.0}, {"delta": 0.0}):
        with pytest.raises(ConfigurationError):
            MonitorConfig(**bad)
    assert MonitorConfig(c1=0).c1 == 0


def test_m1_two_quadrature_routes():
    # the direct route has no endpoint correction, so the gap closes at O(dr^2)
    gaps = []
    for n in (1023, 2047):
        st_ = FieldState.from_profiles(make_grid(20.0, n), lambda r: np.exp(-r ** 2),
                                       lambda r: (1 - r) * np.exp(-(r - 0.5) ** 2))
        raw = morawetz_potential(st_, "M1", MonitorConfig(c1=1.0))
        gaps.append(abs(morawetz_m1_direct(st_) - raw) / abs(raw))
    assert gaps[1] < 1e-4
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.05)
    with pytest.raises(ValueError):
        morawetz_potential(st_, "M4", MonitorConfig())


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 3), st.floats(0.3, 3), st.floats(0.05, 2), st.sampled_from([-1, 1]),
       st.floats(0, 2))
def test_hardy_bound(w1, w2, a, sign, c):
    # |int u_t (u_r + u/r)| <= ||u_t|| ||u_r + u/r|| = ||u_t|| ||grad u||
    st_ = FieldState.from_profiles(G, lambda r: np.exp(-(r / w1) ** 2),
                                   lambda r: sign * a * (r - c) * np.exp(-(r / w2) ** 2))
    assert hardy_constant(st_) <= 1 + 1e-6


def test_zero_data_diagnostics():
    z = FieldState.zeros(G)
    rec = diagnostics(0.0, z, None, MonitorConfig())
    assert all(v == 0 for k, v in rec.as_dict().items())
    assert np.isnan(hardy_constant(z))


def test_virial_kappa_is_two_pi():
    g = make_grid(20.0, 2047)
    traj = evolve(gaussian_state(g), SolverConfig(dt=0.004, t_end=4.0, output_stride=5))
    rep = virial_residual(traj)
    assert rep.kappa == pytest.approx(2 * np.pi, rel=1e-3)
    assert rep.passed and rep.max_ratio <= 1
    assert rep.sign_violation <= np.max(rep.tolerance)
    assert set(rep.to_dict()) >= {"kappa", "residual", "stencil"}
    assert kappa_consistency([6.28, 6.29, 6.27]) == pytest.approx(0.02 / 6.28, rel=1e-3)


def test_virial_needs_uniform_samples():
    traj = free_trajectory(gaussian_state(G), np.linspace(0, 1, 4))
    with pytest.raises(InsufficientDataError):
        virial_residual(traj)
    traj = free_trajectory(gaussian_state(G), [0, 0.1, 0.2, 0.4, 0.5, 0.6])
    with pytest.raises(InsufficientDataError):
        virial_residual(traj)
    assert len(morawetz_series(traj)) == 6


def test_bound_ratios():
    traj = evolve(gaussian_state(G), SolverConfig(dt=0.01, t_end=3.0, output_stride=5))
    rep = bound_ratios(traj, MonitorConfig())
    assert not rep.undefined
    assert all(np.isfinite(v) and v > 0 for v in rep.ratios.values())
    assert rep.R_grid[0] == pytest.approx(4 * G.dr)
    zero = Trajectory(G, [0, 1], np.zeros((2, G.n)), np.zeros((2, G.n)))
    assert bound_ratios(zero).undefined


def test_growth_fit_recovers_power_law():
    t = np.linspace(0, 50, 60)
    slope, r2 = growth_fit((t, 3.0 * (1 + t) ** 0.3))
    assert slope == pytest.approx(0.3, abs=1e-12) and r2 == pytest.approx(1.0)
    assert growth_fit((t, np.full_like(t, 2.0)))[0] == 0.0
    with pytest.raises(InsufficientDataError):
        growth_fit((t[:5], t[:5] + 1))
    with pytest.raises(InsufficientDataError):
        growth_fit((np.linspace(0, 2, 30), np.ones(30)))


def test_modified_energy_comparable_for_small_tail():
    st_ = gaussian_state(G)
    v, w = split_initial_data(st_, SplitConfig(epsilon_target=0.1))
    em = modified_energy(v, w, MonitorConfig())
    from nlwlab.monitors import energy

    assert 0.5 <= em / energy(v) <= 2
