"""
Tests for the numerical kernels: g(z), the thermal kernel, adaptive quadrature
and seeded Monte Carlo.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from app.errors import DomainError, IntegrationError, RegionError
from app.numerics.specfun import (
    HBAR,
    K_B,
    Box,
    QuadratureSettings,
    SphereAboveHalfSpace,
    expint_g,
    expint_g_quadrature,
    integrate_adaptive,
    integrate_mc,
    ln_four_over_e,
    thermal_kernel,
)


@pytest.fixture
def small_mc():
    """Monte Carlo settings small enough for unit tests"""
    return QuadratureSettings(mc_samples=200_000, mc_batch=50_000, seed=12345)


class TestConstants:
    """Physical constants and fixed numbers"""

    def test_codata_values(self):
        assert HBAR == 1.054571817e-34
        assert K_B == 1.380649e-23

    def test_ln_four_over_e(self):
        assert ln_four_over_e() == pytest.approx(math.log(4.0 / math.e), rel=1e-15)
        assert ln_four_over_e() == pytest.approx(0.3862944, rel=1e-6)

    def test_settings_validation(self):
        with pytest.raises(DomainError, match="rel_tol"):
            QuadratureSettings(rel_tol=0.0)
        with pytest.raises(DomainError, match="mc_samples"):
            QuadratureSettings(mc_samples=0)
        assert QuadratureSettings().with_seed(7).seed == 7
        assert QuadratureSettings().with_samples(10).mc_samples == 10


class TestExpintG:
    """g(z) = integral cos(t)/(t+z) dt"""

    def test_value_at_one(self):
        si, ci = special.sici(1.0)
        expected = -ci * math.cos(1.0) + (0.5 * math.pi - si) * math.sin(1.0)
        assert expint_g(1.0).real == pytest.approx(expected, rel=1e-12)
        assert expint_g(1.0).real == pytest.approx(0.3433780, abs=1e-7)
        assert abs(expint_g(1.0).imag) <= 1e-15

    def test_conjugate_symmetry(self):
        z = complex(0.7, 1.3)
        assert expint_g(z.conjugate()) == pytest.approx(expint_g(z).conjugate(), rel=1e-13)

    @pytest.mark.parametrize("modulus", [1e-2, 0.5, 3.0, 40.0, 60.0, 200.0])
    @pytest.mark.parametrize("angle", [0.0, 0.4, 1.0, 1.5])
    def test_matches_quadrature(self, modulus, angle):
        z = modulus * complex(math.cos(angle), math.sin(angle))
        closed = expint_g(z)
        oracle = expint_g_quadrature(z)
        assert abs(closed - oracle) <= 1e-8 * abs(oracle)

    def test_small_argument_initial_value(self):
        theta = 0.3
        z = 1e-7 * complex(math.cos(theta), math.sin(theta))
        assert expint_g(z).imag == pytest.approx(-theta, rel=1e-5)

    def test_large_argument_asymptote(self):
        omega, gamma = 1.0, 0.1
        wb = math.sqrt(omega ** 2 - gamma ** 2 / 4)
        tau = 500.0
        value = expint_g(complex(wb, gamma / 2) * tau).imag
        assert value == pytest.approx(-gamma * wb / (tau ** 2 * omega ** 4), rel=0.05)

    def test_continuous_across_asymptotic_switch(self):
        direction = complex(math.cos(0.2), math.sin(0.2))
        below = expint_g(direction * (50.0 - 1e-9))
        above = expint_g(direction * (50.0 + 1e-9))
        assert abs(above - below) <= 1e-10 * abs(below)

    def test_im_g_monotone_along_physical_ray(self):
        omega, gamma = 1.0, 0.2
        wb = math.sqrt(omega ** 2 - gamma ** 2 / 4)
        taus = np.logspace(-3, 3, 1000)
        values = np.array([expint_g(complex(wb, gamma / 2) * t).imag for t in taus])
        assert np.all(np.diff(values) >= 0)

    def test_left_half_plane_is_finite(self):
        value = expint_g(complex(-2.0, 0.5))
        assert math.isfinite(value.real) and math.isfinite(value.imag)

    @pytest.mark.parametrize("z", [0.0, -1.0, complex(-3.0, 0.0)])
    def test_domain_errors(self, z):
        with pytest.raises(DomainError):
            expint_g(z)

    def test_quadrature_rejects_left_half_plane(self):
        with pytest.raises(DomainError, match="Re z"):
            expint_g_quadrature(complex(-1.0, 1.0))


class TestThermalKernel:
    """hbar w coth(hbar w / 2kT)"""

    def test_zero_temperature(self):
        assert thermal_kernel(3.0, 0.0) == pytest.approx(HBAR * 3.0, rel=1e-15)

    def test_classical_limit(self):
        assert thermal_kernel(2 * math.pi * 1e4, 4.0) == pytest.approx(2 * K_B * 4.0, rel=1e-12)

    def test_zero_frequency_is_finite(self):
        assert thermal_kernel(0.0, 1.0) == pytest.approx(2 * K_B, rel=1e-15)

    def test_vectorized(self):
        omegas = np.array([-1e14, 0.0, 1e14])
        values = thermal_kernel(omegas, 300.0)
        assert values.shape == (3,)
        assert values[0] == pytest.approx(values[2], rel=1e-15)

    def test_negative_temperature(self):
        with pytest.raises(DomainError, match="temperature"):
            thermal_kernel(1.0, -1.0)

    @given(
        omega=st.floats(min_value=-1e15, max_value=1e15, allow_nan=False),
        t_low=st.one_of(st.just(0.0), st.floats(min_value=1e-3, max_value=500.0)),
        dt=st.floats(min_value=1e-3, max_value=500.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_even_nonnegative_nondecreasing_in_temperature(self, omega, t_low, dt):
        low = thermal_kernel(omega, t_low)
        high = thermal_kernel(omega, t_low + dt)
        assert low >= 0
        assert thermal_kernel(-omega, t_low) == low
        assert high >= low * (1 - 1e-12)


class TestIntegrateAdaptive:
    """Gauss-Kronrod wrapper"""

    def test_polynomial(self):
        assert integrate_adaptive(lambda x: x ** 3, 0.0, 2.0) == pytest.approx(4.0, rel=1e-12)

    def test_infinite_range(self):
        assert integrate_adaptive(lambda x: math.exp(-x), 0.0, math.inf) == pytest.approx(1.0, rel=1e-10)

    def test_cosine_weight_finite(self):
        value = integrate_adaptive(lambda x: 1.0, 0.0, math.pi / 2, weight_frequency=1.0)
        assert value == pytest.approx(1.0, rel=1e-10)

    def test_fourier_tail(self):
        # integral_0^inf e^{-x} cos(2x) dx = 1/5
        value = integrate_adaptive(lambda x: math.exp(-x), 0.0, math.inf, weight_frequency=2.0)
        assert value == pytest.approx(0.2, rel=1e-8)

    def test_double_integral_of_debye_kernel(self):
        tight = QuadratureSettings(rel_tol=1e-12)
        value = integrate_adaptive(
            lambda u: integrate_adaptive(lambda v: u * u * v * v / (u + v), 0.0, 1.0, tight), 0.0, 1.0, tight
        )
        assert value == pytest.approx(ln_four_over_e() / 5.0, rel=1e-8)

    def test_non_convergence_raises(self):
        starved = QuadratureSettings(rel_tol=1e-14, max_subdivisions=1)
        with pytest.raises(IntegrationError, match="did not converge"):
            integrate_adaptive(lambda x: math.sin(50 * x) / math.sqrt(x), 0.0, 10.0, starved)


class TestIntegrateMonteCarlo:
    """Seeded, batch-parallel Monte Carlo"""

    def test_box_volume(self, small_mc):
        mean, err = integrate_mc(lambda p: np.ones(p.shape[0]), Box((0, 0), (2, 3)), small_mc)
        assert mean == pytest.approx(6.0, rel=1e-12)
        assert err == pytest.approx(0.0, abs=1e-9)

    def test_box_integral(self, small_mc):
        mean, err = integrate_mc(lambda p: p[:, 0] ** 2, Box((0.0,), (1.0,)), small_mc)
        assert abs(mean - 1.0 / 3.0) <= 4 * err

    @pytest.mark.parametrize("power", [0.0, 1.0, 3.0, 5.0])
    def test_sphere_volume_for_any_focus(self, small_mc, power):
        region = SphereAboveHalfSpace(radius=1.0, gap=0.2, focus_power=power)
        mean, err = integrate_mc(lambda p: np.ones(p.shape[0]), region, small_mc)
        assert abs(mean - 4.0 / 3.0 * math.pi) <= 4 * err

    def test_points_lie_inside_sphere(self):
        region = SphereAboveHalfSpace(radius=1.0, gap=0.5, focus_power=4.0)
        rng = np.random.default_rng(0)
        points, weights = region.sample(rng, 10_000)
        centre = np.array([0.0, 0.0, 1.5])
        assert np.all(np.linalg.norm(points - centre, axis=1) <= 1.0 + 1e-12)
        assert np.all(weights >= 0)

    def test_deterministic_and_thread_independent(self, small_mc):
        region = SphereAboveHalfSpace(radius=1.0, gap=0.1, focus_power=4.0)
        f = lambda p: p[:, 2] ** -4  # noqa: E731
        serial = integrate_mc(f, region, small_mc, workers=1)
        threaded = integrate_mc(f, region, small_mc, workers=4)
        assert serial == threaded
        assert integrate_mc(f, region, small_mc.with_seed(99)) != serial

    def test_region_errors(self, small_mc):
        with pytest.raises(RegionError, match="unsupported"):
            integrate_mc(lambda p: p[:, 0], "not a region", small_mc)
        with pytest.raises(RegionError, match="upper bounds"):
            integrate_mc(lambda p: p[:, 0], Box((1.0,), (0.0,)), small_mc)
        with pytest.raises(RegionError, match="gap"):
            integrate_mc(lambda p: p[:, 0], SphereAboveHalfSpace(1.0, 0.0), small_mc)

    def test_wrong_output_shape(self, small_mc):
        with pytest.raises(RegionError, match="shape"):
            integrate_mc(lambda p: p, Box((0.0, 0.0), (1.0, 1.0)), small_mc)
