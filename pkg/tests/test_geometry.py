"""
Tests for the pairwise dipole layer and the sphere-over-half-space totals.
"""

import math

import numpy as np
import pytest

from app.atomic.ensemble import SpectralDistribution
from app.errors import DomainError
from app.experiment.predict import coefficient
from app.geometry.tip_sample import (
    DEFAULT_TRANSVERSE_FRACTION,
    PAIRWISE_TRANSVERSE_FRACTION,
    DipoleCoupling,
    MaterialSpec,
    TipSampleGeometry,
    half_space_kernels,
    pair_energy,
    pairwise_force,
    pairwise_noise,
    pairwise_spring,
    rotation_to,
    sphere_volume_mc,
    total_energy,
    total_energy_mc,
    total_force,
    total_force_mc,
    total_force_normal,
    total_noise,
    total_noise_mc,
    total_noise_normal,
    total_spring,
    total_spring_mc,
    total_spring_normal,
)
from app.numerics.specfun import HBAR, QuadratureSettings


@pytest.fixture
def material():
    """Unit densities and coupling over a Debye distribution at omega_D = 1"""
    return MaterialSpec(1.0, 1.0, DipoleCoupling(1.0), SpectralDistribution.debye(1.0))


@pytest.fixture
def mc_settings():
    return QuadratureSettings(mc_samples=200_000, mc_batch=50_000, seed=2024)


def central_difference(f, x, step):
    return (f(x + step) - f(x - step)) / (2.0 * step)


class TestTipSampleGeometry:
    """Validation and geometric factors"""

    @pytest.mark.parametrize(
        "radius, gap, normal, message",
        [
            (0.0, 1.0, (0, 0, 1), "radius"),
            (1.0, -1.0, (0, 0, 1), "gap"),
            (1.0, 1.0, (0, 0, 2), "unit"),
            (1.0, 1.0, (0, 1), "unit"),
        ],
    )
    def test_invalid(self, radius, gap, normal, message):
        with pytest.raises(DomainError, match=message):
            TipSampleGeometry(radius, gap, normal)

    def test_energy_factor_derivative_is_force_factor(self):
        geom = TipSampleGeometry(1.0, 0.3)
        slope = central_difference(lambda h: geom.with_gap(h).energy_factor, 0.3, 1e-6)
        assert slope == pytest.approx(-4.0 * geom.force_factor, rel=1e-7)

    def test_force_factor_derivative_is_spring_factor(self):
        geom = TipSampleGeometry(1.0, 0.3)
        slope = central_difference(lambda h: geom.with_gap(h).force_factor, 0.3, 1e-6)
        assert slope == pytest.approx(-4.0 * geom.spring_factor, rel=1e-7)


class TestPairwise:
    """Single atom pair at separation r"""

    r_vec = np.array([0.3, -0.4, 1.2])

    def test_energy_is_attractive(self, material):
        assert pair_energy(material, self.r_vec) < 0

    def test_force_is_minus_energy_gradient(self, material):
        force = pairwise_force(material, self.r_vec)
        for i in range(3):
            step = np.zeros(3)
            step[i] = 1e-6
            grad = (pair_energy(material, self.r_vec + step) - pair_energy(material, self.r_vec - step)) / 2e-6
            assert force[i] == pytest.approx(-grad, rel=1e-6)
        # points back toward the sample atom
        assert np.dot(force, self.r_vec) < 0

    def test_spring_is_minus_force_jacobian(self, material):
        spring = pairwise_spring(material, self.r_vec)
        for i in range(3):
            step = np.zeros(3)
            step[i] = 1e-6
            column = (pairwise_force(material, self.r_vec + step) - pairwise_force(material, self.r_vec - step)) / 2e-6
            assert np.allclose(spring[i], -column, rtol=1e-6, atol=1e-9 * np.max(np.abs(spring)))
        assert np.allclose(spring, spring.T)
        assert np.trace(spring) == pytest.approx(
            3.0 * material.cross_per_beta * (3 - 8) / np.linalg.norm(self.r_vec) ** 8, rel=1e-12
        )

    def test_noise_is_rank_one_along_separation(self, material):
        noise = pairwise_noise(material, self.r_vec)
        d = np.linalg.norm(self.r_vec)
        assert np.linalg.matrix_rank(noise, tol=1e-12 * np.max(noise)) == 1
        assert noise @ self.r_vec == pytest.approx(np.trace(noise) * self.r_vec, rel=1e-12)
        assert np.trace(noise) == pytest.approx(9.0 * material.noise_dc / d ** 8, rel=1e-12)

    def test_zero_separation(self, material):
        with pytest.raises(DomainError, match="singular"):
            pairwise_force(material, (0.0, 0.0, 0.0))


class TestTotals:
    """Closed-form sphere-over-half-space totals"""

    def test_force_is_minus_energy_derivative(self, material):
        geom = TipSampleGeometry(1.0, 0.2)
        slope = central_difference(lambda h: total_energy(geom.with_gap(h), material), 0.2, 1e-6)
        assert total_force_normal(geom, material) == pytest.approx(-slope, rel=1e-7)
        assert total_force_normal(geom, material) < 0

    def test_spring_is_minus_force_derivative(self, material):
        geom = TipSampleGeometry(1.0, 0.2)
        slope = central_difference(lambda h: total_force_normal(geom.with_gap(h), material), 0.2, 1e-6)
        assert total_spring_normal(geom, material) == pytest.approx(-slope, rel=1e-7)

    def test_debye_prefactors(self, material):
        geom = TipSampleGeometry(1.0, 0.05)
        scale = HBAR  # kappa = rho = omega_D = 1
        assert -total_force_normal(geom, material) == pytest.approx(
            coefficient("total_force") * scale * geom.force_factor, rel=1e-12
        )
        assert -total_spring_normal(geom, material) == pytest.approx(
            coefficient("total_spring") * scale * geom.spring_factor, rel=1e-12
        )
        assert total_noise_normal(geom, material) == pytest.approx(
            coefficient("total_noise") * HBAR ** 2 * geom.spring_factor, rel=1e-12
        )

    @pytest.mark.parametrize("aspect", [1e-3, 0.1, 1.0, 10.0])
    def test_noise_over_spring_ratio(self, material, aspect):
        geom = TipSampleGeometry(1.0, aspect)
        ratio = total_noise_normal(geom, material) / (-total_spring_normal(geom, material) * HBAR)
        assert ratio == pytest.approx(1.8298438, rel=1e-6)

    def test_transverse_ratio_approaches_small_gap_form(self, material):
        target = coefficient("transverse_noise")
        for gap in (1e-2, 1e-3, 1e-4):
            geom = TipSampleGeometry(1.0, gap)
            tangential = total_noise(geom, material)[0, 0]
            force = np.linalg.norm(total_force(geom, material))
            ratio = tangential * gap / (HBAR * force)
            assert ratio / target - 1.0 == pytest.approx(gap / (2.0 + gap), rel=1e-9)

    def test_noise_tensor_structure(self, material):
        geom = TipSampleGeometry(1.0, 0.1)
        noise = total_noise(geom, material)
        normal = total_noise_normal(geom, material)
        assert np.allclose(noise, np.diag([normal / 24, normal / 24, normal]), rtol=1e-14, atol=0)
        pairwise = total_noise(geom, material, PAIRWISE_TRANSVERSE_FRACTION)
        assert pairwise[0, 0] == pytest.approx(normal / 6, rel=1e-14)
        with pytest.raises(DomainError, match="transverse_fraction"):
            total_noise(geom, material, 1.5)

    @pytest.mark.parametrize("normal", [(1.0, 0.0, 0.0), (0.0, 0.6, 0.8), (0.0, 0.0, -1.0)])
    def test_rotation_follows_normal(self, material, normal):
        local = TipSampleGeometry(1.0, 0.1)
        rotated = TipSampleGeometry(1.0, 0.1, normal)
        n = np.asarray(normal)
        f_n = total_force_normal(local, material)
        assert np.allclose(total_force(rotated, material), n * f_n, rtol=1e-12, atol=1e-12 * abs(f_n))
        k_nn = total_spring_normal(local, material)
        assert np.allclose(total_spring(rotated, material), k_nn * np.outer(n, n), rtol=1e-12, atol=1e-12 * abs(k_nn))
        noise = total_noise(rotated, material)
        s_nn = total_noise_normal(local, material)
        expected = s_nn * (np.outer(n, n) + DEFAULT_TRANSVERSE_FRACTION * (np.eye(3) - np.outer(n, n)))
        assert np.allclose(noise, expected, rtol=1e-12, atol=1e-12 * s_nn)

    def test_rotation_is_orthogonal(self):
        rot = rotation_to((0.0, 0.6, 0.8))
        assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-15)
        assert np.allclose(rot @ np.array([0.0, 0.0, 1.0]), [0.0, 0.6, 0.8], atol=1e-15)


class TestHalfSpaceKernels:
    """Unit-height half-space integrals by nested quadrature"""

    def test_closed_values(self):
        kernels = half_space_kernels()
        assert kernels.energy == pytest.approx(math.pi / 6, rel=1e-8)
        assert kernels.force == pytest.approx(math.pi / 12, rel=1e-8)
        assert kernels.normal_square == pytest.approx(math.pi / 20, rel=1e-8)
        assert kernels.inverse_eighth == pytest.approx(math.pi / 15, rel=1e-8)

    def test_pairwise_transverse_share(self):
        kernels = half_space_kernels()
        assert kernels.transverse_fraction == pytest.approx(PAIRWISE_TRANSVERSE_FRACTION, rel=1e-8)
        assert abs(kernels.spring_transverse) <= 1e-8 * abs(kernels.spring_normal)


class TestMonteCarloOracles:
    """Monte Carlo over the sphere against the closed forms"""

    @pytest.mark.parametrize("radius_over_gap", [1.0, 10.0, 100.0])
    def test_force_and_spring(self, material, mc_settings, radius_over_gap):
        geom = TipSampleGeometry(radius_over_gap, 1.0, (0.0, 0.6, 0.8))
        force = total_force_mc(geom, material, mc_settings)
        spring = total_spring_mc(geom, material, mc_settings)
        assert force.agrees_with(total_force(geom, material), sigmas=4.0)
        assert spring.agrees_with(total_spring(geom, material), sigmas=4.0)
        assert force.samples == 200_000

    def test_energy(self, material, mc_settings):
        geom = TipSampleGeometry(5.0, 1.0)
        energy = total_energy_mc(geom, material, mc_settings)
        assert energy.agrees_with(total_energy(geom, material), sigmas=4.0)

    def test_noise_uses_pairwise_share(self, material, mc_settings):
        geom = TipSampleGeometry(10.0, 1.0)
        noise = total_noise_mc(geom, material, mc_settings)
        assert noise.agrees_with(total_noise(geom, material, PAIRWISE_TRANSVERSE_FRACTION), sigmas=4.0)
        assert noise.value[0, 0] / noise.value[2, 2] == pytest.approx(1.0 / 6.0, rel=1e-8)

    def test_sphere_volume(self, mc_settings):
        geom = TipSampleGeometry(2.0, 0.5)
        volume, err = sphere_volume_mc(geom, mc_settings)
        assert abs(volume - 4.0 / 3.0 * math.pi * 8.0) <= 4 * err

    def test_deviation_of_exact_zero(self, material, mc_settings):
        geom = TipSampleGeometry(1.0, 1.0)
        force = total_force_mc(geom, material, mc_settings)
        # lateral components are exactly zero on both sides
        assert force.deviation_sigmas(total_force(geom, material))[:2].tolist() == [0.0, 0.0]
