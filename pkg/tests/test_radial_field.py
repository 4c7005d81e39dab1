import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from nlwlab.errors import ConfigurationError, RangeError, UnsupportedOrderError
from nlwlab.radial_field import (
    FOUR_PI,
    FieldState,
    LPConfig,
    RadialField,
    bump,
    critical_norm,
    cumulative_integral,
    dst_forward,
    dst_inverse,
    fourier_transform,
    hs_norm,
    integrate as grid_integrate,
    integrate_interval,
    l2_norm,
    lp_project,
    make_grid,
    radial_derivative,
    sobolev_norm,
    u_at_origin,
    weighted_l4,
)
from nlwlab.monitors import energy

SMALL = make_grid(10.0, 63)
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_grid_geometry():
    g = make_grid(40.0, 4095)
    assert g.dr == pytest.approx(40 / 4096)
    assert g.r[0] == pytest.approx(g.dr) and g.r[-1] == pytest.approx(40 - g.dr)
    assert g.xi[0] == pytest.approx(np.pi / 40)
    assert not g.r.flags.writeable
    assert g.refined(2).n == 8191


@pytest.mark.parametrize("r_max,n", [(0.0, 8), (-1.0, 8), (np.inf, 8), (1.0, 0), (1.0, 2.5)])
def test_grid_rejects_bad_input(r_max, n):
    with pytest.raises(ConfigurationError):
        make_grid(r_max, n) if n == int(n) else __import__("nlwlab").radial_field.RadialGrid(r_max, n)


def test_field_rejects_shape_and_nan():
    with pytest.raises(ConfigurationError):
        RadialField(SMALL, np.zeros(5))
    bad = np.zeros(SMALL.n)
    bad[3] = np.nan
    with pytest.raises(ConfigurationError):
        RadialField(SMALL, bad)


@settings(max_examples=50, deadline=None)
@given(arrays(float, SMALL.n, elements=finite))
def test_sine_transform_round_trip(phi):
    assert np.allclose(dst_inverse(dst_forward(phi)), phi, atol=1e-12 * (1 + np.abs(phi).max()))


@settings(max_examples=50, deadline=None)
@given(arrays(float, SMALL.n, elements=finite))
def test_parseval(phi):
    c = dst_forward(phi)
    lhs = SMALL.dr * np.sum(phi ** 2)
    rhs = 0.5 * SMALL.r_max * np.sum(c ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


def test_gaussian_half_norm_against_fourier_quadrature(gaussian):
    # (2 pi)^-3 int |xi| |u_hat|^2 dxi with u_hat = pi^(3/2) exp(-xi^2/4)
    val, _ = integrate.quad(lambda x: x ** 3 * np.pi ** 3 * np.exp(-x * x / 2), 0, np.inf)
    oracle = FOUR_PI * val / (2 * np.pi) ** 3
    assert oracle == pytest.approx(np.pi, rel=1e-12)
    assert hs_norm(gaussian.u, 0.5) ** 2 == pytest.approx(oracle, rel=1e-6)


def test_fourier_transform_convention(gaussian):
    g = gaussian.grid
    got = fourier_transform(gaussian.u)
    want = np.pi ** 1.5 * np.exp(-g.xi ** 2 / 4)
    assert np.max(np.abs(got - want)) < 1e-10


def test_weighted_l4_gaussian_converges_at_second_order():
    val, _ = integrate.quad(lambda r: FOUR_PI * np.exp(-4 * r * r) * r, 0, np.inf)
    assert val == pytest.approx(np.pi / 2)
    errs = []
    for n in (1023, 2047, 4095):
        st = FieldState.from_profiles(make_grid(40.0, n), lambda r: np.exp(-r ** 2))
        errs.append(abs(weighted_l4(st.u) - val))
    # the integrand u^4 r has slope 4 pi at r = 0, so the trapezoid is O(dr^2)
    assert errs[-1] < 1e-4 * val
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_gaussian_energy_oracle(gaussian):
    grad, _ = integrate.quad(lambda r: FOUR_PI * r * r * (2 * r * np.exp(-r * r)) ** 2, 0, np.inf)
    quart, _ = integrate.quad(lambda r: FOUR_PI * r * r * np.exp(-4 * r * r), 0, np.inf)
    oracle = 0.5 * grad + 0.25 * quart
    assert oracle == pytest.approx(3.12706, abs=1e-5)
    assert energy(gaussian) == pytest.approx(oracle, rel=1e-7)


def test_norm_orders(gaussian):
    with pytest.raises(UnsupportedOrderError):
        hs_norm(gaussian.u, 2.5)
    with pytest.raises(UnsupportedOrderError):
        sobolev_norm(gaussian, -1.5)
    a, b = sobolev_norm(gaussian, 0.5)
    assert b == 0.0 and critical_norm(gaussian) == pytest.approx(a)
    assert l2_norm(gaussian.u) ** 2 == pytest.approx((np.pi / 2) ** 1.5, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(arrays(float, SMALL.n, elements=finite))
def test_interpolation_inequality(phi):
    f = RadialField(SMALL, phi)
    assert hs_norm(f, 0.5) ** 2 <= hs_norm(f, 0.0) * hs_norm(f, 1.0) * (1 + 1e-10) + 1e-300


def test_radial_derivative_and_origin_value(gaussian):
    g = gaussian.grid
    d = radial_derivative(gaussian.u.phi, g, with_ends=True)
    exact = (1 - 2 * g.r ** 2) * np.exp(-g.r ** 2)
    assert np.max(np.abs(d[1:-1] - exact)) < 1e-10
    assert d[0] == pytest.approx(1.0, abs=1e-10)  # phi_r(0) = u(0)
    assert u_at_origin(gaussian.u.phi, g) == pytest.approx(1.0, abs=3 * g.dr ** 4)


def test_integrate_interval_is_exact_for_linear_pieces():
    g = make_grid(4.0, 7)
    vals = 2.0 + 3.0 * g.r
    # interpolant with 2 at r = 0, but 0 at r_max; stay inside [0, r_max - dr]
    got = integrate_interval(vals, g, 0.37, 3.21, at_zero=2.0)
    assert got == pytest.approx(2 * (3.21 - 0.37) + 1.5 * (3.21 ** 2 - 0.37 ** 2))
    assert integrate_interval(vals, g, 2.0, 1.0) == 0.0
    full = cumulative_integral(vals, g, at_zero=2.0)
    assert full[3] == pytest.approx(integrate_interval(vals, g, 0, g.r[3], at_zero=2.0))


def test_bump_shape():
    x = np.linspace(-3, 3, 601)
    b = bump(x)
    assert np.all(b[np.abs(x) <= 1] == 1) and np.all(b[np.abs(x) >= 2] == 0)
    assert np.all(np.diff(b[x >= 0]) <= 0)
    assert np.allclose(b, bump(-x))
    mid, _ = integrate.quad(lambda s: bump(np.array([s]))[0], 1, 2)
    assert mid == pytest.approx(0.5, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(arrays(float, SMALL.n, elements=finite))
def test_lp_partition_of_unity(phi):
    f = RadialField(SMALL, phi)
    cfg = LPConfig.for_grid(SMALL)
    total = lp_project(f, cfg.j_min - 1, "low", cfg).phi.copy()
    for j in range(cfg.j_min, cfg.j_max + 1):
        total += lp_project(f, j, "band", cfg).phi
    total += lp_project(f, cfg.j_max, "high", cfg).phi
    assert np.max(np.abs(total - phi)) <= 1e-10 * (1 + np.abs(phi).max())


def test_lp_range_errors():
    f = RadialField(SMALL, np.ones(SMALL.n))
    cfg = LPConfig.for_grid(SMALL)
    with pytest.raises(RangeError):
        lp_project(f, cfg.j_max + 1, "band", cfg)
    with pytest.raises(RangeError):
        lp_project(f, cfg.j_min - 2, "band", cfg)
    with pytest.raises(ValueError):
        lp_project(f, cfg.j_min, "middle", cfg)


def test_field_state_arithmetic(gaussian):
    z = FieldState.zeros(gaussian.grid)
    s = gaussian + z
    assert np.array_equal(s.u.phi, gaussian.u.phi)
    assert np.array_equal((gaussian - gaussian).u.phi, z.u.phi)
    assert np.array_equal(gaussian.scaled(2.0).u.phi, 2 * gaussian.u.phi)
    assert grid_integrate(np.zeros(gaussian.grid.n), gaussian.grid) == 0.0
