import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from nlwlab.errors import ConfigurationError, RangeError
from nlwlab.linear_prop import (
    Trajectory,
    dalembert_oracle,
    free_evolve,
    free_trajectory,
    l2_linf_norm,
    l4_density,
    strichartz_l4,
    time_integral,
)
from nlwlab.monitors import energy
from nlwlab.radial_field import FieldState, make_grid

from conftest import gaussian_state

G = make_grid(20.0, 255)


def u0(r):
    return np.exp(-r ** 2)


@pytest.mark.parametrize("t", [1.0, 5.0, 10.0])
def test_free_flow_matches_dalembert(grid, gaussian, t):
    out = free_evolve(gaussian, t)
    want = dalembert_oracle(u0, t, grid.r)
    assert np.max(np.abs(out.u.u - want)) < 1e-10
    assert out.t == t


def test_dalembert_origin_limit():
    du0 = lambda r: -2 * r * np.exp(-r ** 2)
    for t in (0.5, 2.0):
        exact = u0(t) + t * du0(t)
        assert dalembert_oracle(u0, t, 0.0, du0) == pytest.approx(exact, abs=1e-15)
        assert dalembert_oracle(u0, t, 0.0) == pytest.approx(exact, abs=1e-9)
        assert dalembert_oracle(u0, t, 1e-7) == pytest.approx(exact, abs=1e-6)
    with pytest.raises(ConfigurationError):
        dalembert_oracle(u0, 1.0, -1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.3, 2.0), st.floats(-1, 1))
def test_group_law_and_energy(s, t, width, vel):
    data = FieldState.from_profiles(G, lambda r: np.exp(-(r / width) ** 2),
                                    lambda r: vel * np.exp(-r ** 2))
    a = free_evolve(free_evolve(data, s), t)
    b = free_evolve(data, s + t)
    assert np.max(np.abs(a.u.phi - b.u.phi)) < 1e-11
    assert np.max(np.abs(a.ut.phi - b.ut.phi)) < 1e-11
    # the free flow conserves the quadratic part of the energy
    lin = lambda x: energy(x) - _quartic(x)
    assert lin(b) == pytest.approx(lin(data), rel=1e-11)


def _quartic(st_):
    g = st_.grid
    return 0.25 * 4 * np.pi * g.dr * np.sum(st_.u.phi ** 4 / g.r ** 2)


def test_free_evolve_rejects_nonfinite(gaussian):
    with pytest.raises(ConfigurationError):
        free_evolve(gaussian, np.inf)
    same = free_evolve(gaussian, 0.0)
    assert np.array_equal(same.u.phi, gaussian.u.phi)


def test_trajectory_invariants():
    traj = free_trajectory(gaussian_state(G), np.linspace(0, 2, 11))
    assert len(traj) == 11 and traj.dt_out == pytest.approx(0.2)
    assert not traj.phi.flags.writeable
    assert traj.index_of(0.4) == 2
    with pytest.raises(RangeError):
        traj.index_of(0.45)
    w = traj.window(0.4, 1.0)
    assert len(w) == 4 and w.times[0] == pytest.approx(0.4)
    with pytest.raises(ConfigurationError):
        Trajectory(G, [0.0, 0.0], traj.phi[:2], traj.phit[:2])
    with pytest.raises(ConfigurationError):
        Trajectory(G, [0.0], traj.phi[:2], traj.phit[:2])
    again = Trajectory.from_states(traj.states)
    assert np.array_equal(again.phi, traj.phi)


def test_strichartz_l4_against_spacetime_quadrature():
    g = make_grid(30.0, 1023)
    times = np.linspace(0, 8, 801)
    traj = free_trajectory(gaussian_state(g), times)

    def row(t):
        f = lambda r: 4 * np.pi * r * r * dalembert_oracle(u0, t, np.array([r]))[0] ** 4
        return integrate.quad(f, 0, t + 8, limit=200)[0]

    ts = np.linspace(0, 8, 161)
    brute = integrate.simpson([row(t) for t in ts], x=ts) ** 0.25
    assert strichartz_l4(traj) == pytest.approx(brute, rel=1e-3)
    dens = l4_density(traj.phi, g)
    assert time_integral(dens, times) == pytest.approx(strichartz_l4(traj) ** 4)


def test_l2_linf():
    traj = free_trajectory(gaussian_state(G), np.linspace(0, 1, 11))
    full = l2_linf_norm(traj)
    outer = l2_linf_norm(traj, r_min=3.0)
    assert 0 <= outer < full
    assert l2_linf_norm(traj, r_min=G.r_max) == 0.0
    with pytest.raises(RangeError):
        l2_linf_norm(traj, r_min=-1)
    with pytest.raises(RangeError):
        l2_linf_norm(traj, r_min=G.r_max + 1)
