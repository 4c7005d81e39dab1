import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint

from nlwlab.errors import RangeError
from nlwlab.linear_prop import free_trajectory
from nlwlab.nlw_solver import SolverConfig, evolve
from nlwlab.radial_field import FieldState, make_grid, sobolev_norm
from nlwlab.scattering import (
    cauchy_defect, dyadic_pairs, exterior_cone_norm, l4_accumulation, scatter_profile,
)

from conftest import gaussian_state


@pytest.fixture(scope="module")
def free_traj(grid):
    return free_trajectory(gaussian_state(grid), np.linspace(0.0, 8.0, 161))


@pytest.fixture(scope="module")
def nl_traj(grid):
    return evolve(gaussian_state(grid, amp=2.0), SolverConfig(0.01, 8.0, 5))


def test_free_profile_is_constant(free_traj):
    p0 = scatter_profile(free_traj, 0.0)
    for t in (2.0, 5.0, 8.0):
        d = scatter_profile(free_traj, t) - p0
        assert np.max(np.abs(d.u.phi)) < 1e-11 and np.max(np.abs(d.ut.phi)) < 1e-11
    assert cauchy_defect(free_traj, 4.0, 8.0) < 1e-11


def test_zero_trajectory(grid):
    z = free_trajectory(FieldState.zeros(grid), np.linspace(0, 4, 11))
    rep = l4_accumulation(z)
    assert rep.data_norm == 0.0
    assert not np.any(rep.l4_total) and not np.any(rep.l4_tail)
    assert all(d["defect"] == 0.0 for d in rep.cauchy_defects)
    assert exterior_cone_norm(z, 1.0) == 0.0


def test_profile_is_an_isometry(nl_traj):
    for t in (1.0, 6.0):
        i = nl_traj.index_of(t)
        assert np.hypot(*sobolev_norm(scatter_profile(nl_traj, t), 0.5)) == \
            pytest.approx(np.hypot(*sobolev_norm(nl_traj.state(i), 0.5)), rel=1e-12)


def test_cauchy_defect_symmetry_and_diagonal(nl_traj):
    a = cauchy_defect(nl_traj, 2.0, 6.0)
    assert a > 0
    assert cauchy_defect(nl_traj, 6.0, 2.0) == a
    assert cauchy_defect(nl_traj, 3.0, 3.0) == 0.0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_exterior_norm_monotone_in_cone_radius(nl_traj, a, b):
    lo, hi = sorted((a, b))
    assert exterior_cone_norm(nl_traj, hi) <= exterior_cone_norm(nl_traj, lo) + 1e-15


def test_tail_and_total_monotone(nl_traj):
    rep = l4_accumulation(nl_traj, r_cone=2.0)
    assert np.all(np.diff(rep.l4_tail) <= 0)
    assert np.all(np.diff(rep.l4_total) >= 0)
    assert np.all(np.diff(rep.exterior_l4) >= 0)
    assert rep.l4_tail[0] == pytest.approx(rep.l4_total[-1], rel=1e-12)


def test_free_l4_total_against_quadrature(grid, free_traj):
    rep = l4_accumulation(free_traj)

    def u(t, r):
        return 0.5 * ((r - t) * np.exp(-(r - t) ** 2) + (r + t) * np.exp(-(r + t) ** 2)) / r

    ref = sint.dblquad(lambda r, t: 4 * np.pi * r * r * u(t, r) ** 4, 0.0, 8.0,
                       1e-9, 20.0, epsabs=1e-12)[0] ** 0.25
    assert rep.l4_total[-1] == pytest.approx(ref, rel=0.05)


def test_defect_grows_with_amplitude(grid):
    defects = []
    for a in (0.5, 1.0, 2.0):
        tr = evolve(gaussian_state(grid, amp=a), SolverConfig(0.01, 8.0, 10))
        defects.append(cauchy_defect(tr, 4.0, 8.0) / a)
    assert defects[0] < defects[1] < defects[2]


def test_report_serialisation(nl_traj):
    rep = l4_accumulation(nl_traj)
    d = json.loads(rep.to_json())
    assert d["r_cone"] == 5.0 and len(d["times"]) == len(nl_traj)
    assert [p["t2"] for p in d["cauchy_defects"]] == [2.0, 4.0, 8.0]
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["t", "profile_norm", "l4_total", "l4_tail", "exterior_l4"]
    assert len(rows) == len(nl_traj) + 1
    assert float(rows[-1][2]) == rep.l4_total[-1]


def test_scattering_flag(free_traj, nl_traj):
    assert l4_accumulation(free_traj).scattering_detected()
    assert not l4_accumulation(nl_traj).scattering_detected()


def test_dyadic_pairs_and_range_errors(nl_traj):
    assert dyadic_pairs(nl_traj) == [(1.0, 2.0), (2.0, 4.0), (4.0, 8.0)]
    with pytest.raises(RangeError):
        scatter_profile(nl_traj, 9.0)
    with pytest.raises(RangeError):
        exterior_cone_norm(nl_traj, -1.0)
    with pytest.raises(RangeError):
        l4_accumulation(nl_traj, r_cone=-0.5)
