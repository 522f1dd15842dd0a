"""
Tests for the experiment-level relations: coefficients, calibration and
Casimir noise/damping predictions.
"""

import math

import pytest

from app.atomic.ensemble import SpectralDistribution
from app.errors import DomainError
from app.experiment.predict import (
    COEFFICIENTS,
    CantileverParams,
    NormalVibration,
    PredictionResult,
    TransverseVibration,
    casimir_damping_normal,
    casimir_damping_transverse,
    casimir_noise_normal,
    casimir_noise_transverse,
    coefficient,
    coefficient_identities,
    equipartition_x2,
    predict_from_geometry,
    quantum_regime_ratio,
    thermal_force_psd,
)
from app.geometry.mode_shape import ModeShape
from app.geometry.tip_sample import DipoleCoupling, MaterialSpec, TipSampleGeometry
from app.numerics.specfun import HBAR, K_B

LN = math.log(4.0 / math.e)

LITERALS = {
    "normal_noise": 1.8298438,
    "normal_damping": 0.9149219,
    "transverse_noise": 0.1524870,
    "cross_average": 0.3476649,
    "noise_average": 1.4137167,
    "total_force": 1.1437718,
    "total_spring": 4.5750870,
    "total_noise": 8.3716947,
}


@pytest.fixture
def cantilever():
    """1 pg, 10 kHz, Q = 1e4, 4 K"""
    return CantileverParams(1e-12, 2 * math.pi * 1e4, 1e4, 4.0)


@pytest.fixture
def material():
    return MaterialSpec(1.0, 1.0, DipoleCoupling(1.0), SpectralDistribution.debye(1.0))


class TestCoefficients:
    """Exact dimensionless coefficients"""

    @pytest.mark.parametrize("name, literal", sorted(LITERALS.items()))
    def test_literal_values(self, name, literal):
        assert coefficient(name) == pytest.approx(literal, rel=1e-6)

    def test_closed_forms(self):
        assert coefficient("normal_noise") == pytest.approx(9 * math.pi / (40 * LN), rel=1e-12)
        assert coefficient("transverse_noise") == pytest.approx(3 * math.pi / (160 * LN), rel=1e-12)
        assert coefficient("total_noise") == pytest.approx(27 * math.pi ** 3 / 100, rel=1e-12)

    def test_identities_hold(self):
        identities = coefficient_identities()
        assert identities
        assert all(identities.values()), identities

    def test_every_coefficient_is_positive(self):
        assert all(coefficient(name) > 0 for name in COEFFICIENTS)

    def test_unknown_name(self):
        with pytest.raises(DomainError, match="unknown coefficient"):
            coefficient("nonexistent")


class TestCantileverParams:
    """Calibration quantities"""

    def test_thermal_force_psd(self, cantilever):
        assert thermal_force_psd(cantilever) == pytest.approx(6.940e-34, rel=1e-3)

    def test_from_spring(self):
        params = CantileverParams.from_spring(1e-3, 2 * math.pi * 1e4, 100.0, 4.0)
        assert params.spring == pytest.approx(1e-3, rel=1e-14)
        assert params.ringdown_time == pytest.approx(200.0 / (2 * math.pi * 1e4), rel=1e-15)
        assert equipartition_x2(params) == pytest.approx(5.5226e-20, rel=1e-4)

    def test_quantum_regime_ratio(self, cantilever):
        assert quantum_regime_ratio(cantilever) == pytest.approx(HBAR * cantilever.omega0 / (K_B * 4.0), rel=1e-15)
        zero_t = CantileverParams(1e-12, 1.0, 1.0, 0.0)
        assert quantum_regime_ratio(zero_t) == math.inf

    @pytest.mark.parametrize(
        "kwargs, message",
        [
            (dict(mass=0.0, omega0=1.0, quality=1.0, temperature=1.0), "mass"),
            (dict(mass=1.0, omega0=-1.0, quality=1.0, temperature=1.0), "omega0"),
            (dict(mass=1.0, omega0=1.0, quality=math.nan, temperature=1.0), "quality"),
            (dict(mass=1.0, omega0=1.0, quality=1.0, temperature=-1.0), "temperature"),
        ],
    )
    def test_invalid(self, kwargs, message):
        with pytest.raises(DomainError, match=message):
            CantileverParams(**kwargs)

    def test_from_spring_rejects_negative_spring(self):
        with pytest.raises(DomainError, match="spring"):
            CantileverParams.from_spring(-1.0, 1.0, 1.0, 1.0)


class TestCasimirNoise:
    """delta S_f and delta damping from the measured spring shift"""

    def test_normal_pins(self):
        noise = casimir_noise_normal(-2.6e-3)
        assert noise == pytest.approx(5.01722e-37, rel=1e-4)
        assert math.sqrt(noise) == pytest.approx(7.0833e-19, rel=1e-4)
        assert casimir_damping_normal(-2.6e-3, 4.0) == pytest.approx(4.5425e-15, rel=1e-4)

    def test_transverse_pins(self):
        assert casimir_noise_transverse(1e-3, 1e-4, 1e-9) == pytest.approx(1.60808e-33, rel=1e-4)
        assert casimir_damping_transverse(1e-3, 1e-4, 1e-9, 4.0) == pytest.approx(1.45591e-11, rel=1e-4)

    def test_fluctuation_dissipation_closure(self):
        noise = casimir_noise_normal(-2.6e-3)
        damping = casimir_damping_normal(-2.6e-3, 4.0)
        assert 2 * K_B * 4.0 * damping == pytest.approx(noise, rel=1e-14)

    def test_zero_shift_gives_zero(self):
        assert casimir_noise_normal(0.0) == 0.0
        assert math.copysign(1.0, casimir_noise_normal(-0.0)) == 1.0
        assert casimir_noise_transverse(0.0, 1e-4, 1e-9) == 0.0

    def test_override(self):
        assert casimir_noise_normal(-1.0, coefficient_override=2.0) == pytest.approx(2.0 * HBAR, rel=1e-15)

    def test_sign_errors(self):
        with pytest.raises(DomainError, match="softens"):
            casimir_noise_normal(1e-3)
        with pytest.raises(DomainError, match="stiffens"):
            casimir_noise_transverse(-1e-3, 1e-4, 1e-9)

    @pytest.mark.parametrize("mode_l, gap, message", [(0.0, 1e-9, "mode length"), (1e-4, 0.0, "gap")])
    def test_transverse_validation(self, mode_l, gap, message):
        with pytest.raises(DomainError, match=message):
            casimir_noise_transverse(1e-3, mode_l, gap)

    @pytest.mark.parametrize("temperature", [0.0, -4.0, math.inf])
    def test_damping_needs_positive_temperature(self, temperature):
        with pytest.raises(DomainError, match="temperature"):
            casimir_damping_normal(-2.6e-3, temperature)


class TestPredictFromGeometry:
    """Totals turned into observables"""

    def test_normal(self, material):
        geom = TipSampleGeometry(1.0, 0.01)
        result = predict_from_geometry(geom, material, NormalVibration(), 4.0)
        assert result.vibration == "normal"
        assert result.delta_k < 0
        assert result.delta_Sf == pytest.approx(result.reference_delta_Sf, rel=1e-12)
        assert result.details["ratio_over_hbar"] == pytest.approx(1.8298438, rel=1e-6)
        assert result.delta_damping == pytest.approx(result.delta_Sf / (2 * K_B * 4.0), rel=1e-15)
        assert result.sqrt_delta_Sf == pytest.approx(math.sqrt(result.delta_Sf), rel=1e-15)

    def test_transverse(self, material):
        geom = TipSampleGeometry(1.0, 1e-3)
        vibration = TransverseVibration(ModeShape.linear(50.0))
        result = predict_from_geometry(geom, material, vibration, 4.0)
        assert result.vibration == "transverse"
        assert result.delta_k > 0
        assert result.details["mode_length"] == 50.0
        assert result.details["ratio_to_small_gap_form"] == pytest.approx(1.0 + 1e-3 / 2.001, rel=1e-9)

    def test_transverse_warns_at_large_gap(self, material, caplog):
        geom = TipSampleGeometry(1.0, 0.5)
        predict_from_geometry(geom, material, TransverseVibration(ModeShape.linear(50.0)), 4.0)
        assert "only indicative" in caplog.text

    def test_requires_positive_temperature(self, material):
        with pytest.raises(DomainError, match="temperature"):
            predict_from_geometry(TipSampleGeometry(1.0, 0.01), material, NormalVibration(), 0.0)

    def test_unknown_vibration(self, material):
        with pytest.raises(DomainError, match="vibration"):
            predict_from_geometry(TipSampleGeometry(1.0, 0.01), material, object(), 4.0)

    def test_result_rejects_negative_noise(self):
        with pytest.raises(DomainError, match="noise shift"):
            PredictionResult.from_noise(-1.0, -1e-40, 4.0)

    def test_to_dict(self, material):
        result = predict_from_geometry(TipSampleGeometry(1.0, 0.01), material, NormalVibration(), 4.0)
        payload = result.to_dict()
        assert set(payload) >= {"delta_k", "delta_Sf", "delta_damping", "sqrt_delta_Sf", "details"}
