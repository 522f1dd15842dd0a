"""
Experiment-level relations: thermal calibration of a cantilever and the
temperature-independent Casimir force noise with its accompanying damping.

Every dimensionless coefficient is held as an exact sympy expression and only
turned into a float at the point of use.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Union

import sympy as sp

from app.errors import DomainError
from app.geometry.mode_shape import ModeShape, mode_length
from app.geometry.tip_sample import (
    DEFAULT_TRANSVERSE_FRACTION,
    MaterialSpec,
    TipSampleGeometry,
    total_force,
    total_noise_local,
    total_spring_normal,
)
from app.numerics.specfun import HBAR, K_B

logger = logging.getLogger(__name__)

LN_FOUR_OVER_E = sp.log(4) - 1

COEFFICIENTS: Dict[str, sp.Expr] = {
    "normal_noise": 9 * sp.pi / (40 * LN_FOUR_OVER_E),
    "normal_damping": 9 * sp.pi / (80 * LN_FOUR_OVER_E),
    "transverse_noise": 3 * sp.pi / (160 * LN_FOUR_OVER_E),
    "transverse_damping": 3 * sp.pi / (320 * LN_FOUR_OVER_E),
    "cross_average": 9 * LN_FOUR_OVER_E / 10,
    "noise_average": 9 * sp.pi / 20,
    "total_force": 3 * LN_FOUR_OVER_E * sp.pi ** 2 / 10,
    "total_spring": 6 * LN_FOUR_OVER_E * sp.pi ** 2 / 5,
    "total_noise": 27 * sp.pi ** 3 / 100,
}

# Transverse (h/r) above which the small-gap coefficient is only indicative.
TRANSVERSE_ASPECT_LIMIT = 0.1


def coefficient(name: str) -> float:
    """Float value of a named coefficient"""
    try:
        expr = COEFFICIENTS[name]
    except KeyError:
        raise DomainError(f"unknown coefficient {name!r}; known: {sorted(COEFFICIENTS)}")
    return float(expr.evalf(30))


def coefficient_identities() -> Dict[str, bool]:
    """Exact relations between the stored coefficients, checked symbolically"""
    c = COEFFICIENTS
    return {
        "normal_noise_is_twice_damping": sp.simplify(c["normal_noise"] - 2 * c["normal_damping"]) == 0,
        "transverse_noise_is_twice_damping": sp.simplify(c["transverse_noise"] - 2 * c["transverse_damping"]) == 0,
        "noise_over_spring_is_normal_noise": sp.simplify(c["total_noise"] / c["total_spring"] - c["normal_noise"]) == 0,
        "force_is_cross_average_times_pi2_over_3": sp.simplify(c["total_force"] - c["cross_average"] * sp.pi ** 2 / 3) == 0,
        "noise_is_noise_average_times_3pi2_over_5": sp.simplify(c["total_noise"] - c["noise_average"] * 3 * sp.pi ** 2 / 5) == 0,
    }


@dataclass(frozen=True)
class CantileverParams:
    """Effective mass (kg), resonance (rad/s), quality factor and bath temperature (K)"""
    mass: float
    omega0: float
    quality: float
    temperature: float

    def __post_init__(self):
        for name in ("mass", "omega0", "quality"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be > 0, got {value}")
        if not (math.isfinite(self.temperature) and self.temperature >= 0):
            raise DomainError(f"temperature must be >= 0, got {self.temperature}")

    @classmethod
    def from_spring(cls, spring: float, omega0: float, quality: float, temperature: float) -> "CantileverParams":
        """Infer the mass from k = m omega0^2"""
        if not (math.isfinite(spring) and spring > 0):
            raise DomainError(f"spring constant must be > 0, got {spring}")
        if not (math.isfinite(omega0) and omega0 > 0):
            raise DomainError(f"omega0 must be > 0, got {omega0}")
        return cls(mass=spring / omega0 ** 2, omega0=omega0, quality=quality, temperature=temperature)

    @property
    def spring(self) -> float:
        """k = m omega0^2"""
        return self.mass * self.omega0 ** 2

    @property
    def damping(self) -> float:
        """m omega0 / Q"""
        return self.mass * self.omega0 / self.quality

    @property
    def ringdown_time(self) -> float:
        """2Q / omega0"""
        return 2.0 * self.quality / self.omega0


@dataclass(frozen=True)
class PredictionResult:
    """Shifts in spring constant, force noise and damping caused by the nearby sample"""
    delta_k: float
    delta_Sf: float
    delta_damping: float
    sqrt_delta_Sf: float
    reference_delta_Sf: Optional[float] = None
    vibration: str = "normal"
    details: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_noise(cls, delta_k: float, delta_Sf: float, temperature: float, **extra) -> "PredictionResult":
        if delta_Sf < 0:
            raise DomainError(f"noise shift must be >= 0, got {delta_Sf}")
        return cls(
            delta_k=delta_k,
            delta_Sf=delta_Sf,
            delta_damping=_damping_from_noise(delta_Sf, temperature),
            sqrt_delta_Sf=math.sqrt(delta_Sf),
            **extra,
        )

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class NormalVibration:
    """Tip oscillating along the sample normal"""


@dataclass(frozen=True)
class TransverseVibration:
    """End-on tip oscillating parallel to the surface; the mode fixes l"""
    mode: ModeShape


Vibration = Union[NormalVibration, TransverseVibration]


def _damping_from_noise(delta_Sf: float, temperature: float) -> float:
    if not (math.isfinite(temperature) and temperature > 0):
        raise DomainError(
            f"damping shift diverges at temperature {temperature}; a positive temperature is required"
        )
    return delta_Sf / (2.0 * K_B * temperature)


def thermal_force_psd(params: CantileverParams) -> float:
    """S_f = (m omega0 / Q) 2 k_B T"""
    return params.damping * 2.0 * K_B * params.temperature


def equipartition_x2(params: CantileverParams) -> float:
    """<x^2> = k_B T / k"""
    return K_B * params.temperature / params.spring


def quantum_regime_ratio(params: CantileverParams) -> float:
    """hbar omega0 / k_B T; the classical calibration assumes this is small"""
    if params.temperature == 0:
        return math.inf
    return HBAR * params.omega0 / (K_B * params.temperature)


def casimir_noise_normal(delta_k: float, coefficient_override: Optional[float] = None) -> float:
    """delta S_f = (9 pi / (40 ln(4/e))) hbar (-delta k); delta k <= 0 when approaching along the normal"""
    if delta_k > 0:
        raise DomainError(f"normal approach softens the cantilever: delta_k must be <= 0, got {delta_k}")
    c = coefficient("normal_noise") if coefficient_override is None else coefficient_override
    return c * HBAR * (-delta_k + 0.0)


def casimir_damping_normal(delta_k: float, temperature: float, coefficient_override: Optional[float] = None) -> float:
    """delta(m omega0 / Q) = delta S_f / (2 k_B T)"""
    noise = casimir_noise_normal(delta_k, coefficient_override)
    return _damping_from_noise(noise, temperature)


def casimir_noise_transverse(
    delta_k: float,
    mode_l: float,
    gap: float,
    coefficient_override: Optional[float] = None,
) -> float:
    """delta S_f = (3 pi / (160 ln(4/e))) (l/h) hbar delta k; delta k >= 0 end-on"""
    if delta_k < 0:
        raise DomainError(f"end-on geometry stiffens the cantilever: delta_k must be >= 0, got {delta_k}")
    if not (math.isfinite(mode_l) and mode_l > 0):
        raise DomainError(f"mode length must be > 0, got {mode_l}")
    if not (math.isfinite(gap) and gap > 0):
        raise DomainError(f"gap must be > 0, got {gap}")
    c = coefficient("transverse_noise") if coefficient_override is None else coefficient_override
    return c * (mode_l / gap) * HBAR * delta_k


def casimir_damping_transverse(
    delta_k: float,
    mode_l: float,
    gap: float,
    temperature: float,
    coefficient_override: Optional[float] = None,
) -> float:
    noise = casimir_noise_transverse(delta_k, mode_l, gap, coefficient_override)
    return _damping_from_noise(noise, temperature)


def predict_from_geometry(
    geom: TipSampleGeometry,
    material: MaterialSpec,
    vibration: Vibration,
    temperature: float,
    transverse_fraction: float = DEFAULT_TRANSVERSE_FRACTION,
) -> PredictionResult:
    """
    Geometry totals turned into observables. Normal: delta k and delta S_f are the
    normal components of the spring and noise tensors. Transverse: delta k = |f|/l
    and delta S_f is the tangential noise component.
    """
    if isinstance(vibration, NormalVibration):
        delta_k = total_spring_normal(geom, material)
        delta_sf = float(total_noise_local(geom, material, transverse_fraction)[2, 2])
        return PredictionResult.from_noise(
            delta_k,
            delta_sf,
            temperature,
            reference_delta_Sf=casimir_noise_normal(delta_k),
            vibration="normal",
            details={"ratio_over_hbar": delta_sf / (-delta_k * HBAR) if delta_k else math.nan},
        )
    if isinstance(vibration, TransverseVibration):
        if geom.aspect > TRANSVERSE_ASPECT_LIMIT:
            logger.warning(
                f"[Predict] h/r = {geom.aspect:.3g} exceeds {TRANSVERSE_ASPECT_LIMIT}; "
                f"the small-gap transverse coefficient is only indicative"
            )
        l_value = mode_length(vibration.mode)
        force = float(math.hypot(*total_force(geom, material)))
        delta_k = force / l_value
        delta_sf = float(total_noise_local(geom, material, transverse_fraction)[0, 0])
        reference = casimir_noise_transverse(delta_k, l_value, geom.gap)
        return PredictionResult.from_noise(
            delta_k,
            delta_sf,
            temperature,
            reference_delta_Sf=reference,
            vibration="transverse",
            details={
                "mode_length": l_value,
                "aspect": geom.aspect,
                "ratio_to_small_gap_form": delta_sf / reference if reference else math.nan,
            },
        )
    raise DomainError(f"unknown vibration type {type(vibration).__name__}")
