"""
Pairwise dipole interaction and its sphere-over-half-space totals.

Frames: sample occupies z <= 0 and the tip is a ball of radius r whose lowest
point sits at height h. Totals are built in the frame where the outward sample
normal is +z, then rotated so that +z maps onto the caller's normal.

Sign conventions: U = -X beta^2 / 2 with X = <q_a q_b>^av / beta, so the force on
the tip atom f = -grad U = X beta grad(beta) is attractive, and the spring tensor
k = grad grad U.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from app.atomic.ensemble import SpectralDistribution, averaged_cross_expectation, averaged_pair_noise_dc
from app.errors import DomainError, RegionError
from app.numerics.specfun import (
    QuadratureSettings,
    SphereAboveHalfSpace,
    integrate_adaptive,
    integrate_mc,
)

logger = logging.getLogger(__name__)

# Tangential/normal noise share in the published tensor structure.
DEFAULT_TRANSVERSE_FRACTION = 1.0 / 24.0
# The same share obtained by summing r^-8 pair noise over a half-space.
PAIRWISE_TRANSVERSE_FRACTION = 1.0 / 6.0

Z_AXIS = np.array([0.0, 0.0, 1.0])

# Relative accuracy of the quadrature kernels, added to every MC component error.
_QUADRATURE_FLOOR = 1e-9


@dataclass(frozen=True)
class DipoleCoupling:
    """beta_ab = kappa / |r_ab|^3"""
    kappa: float

    def __post_init__(self):
        if not math.isfinite(self.kappa):
            raise DomainError(f"kappa must be finite, got {self.kappa}")

    def beta(self, distance: float) -> float:
        return self.kappa / distance ** 3


@dataclass(frozen=True)
class TipSampleGeometry:
    """Sphere radius, gap and outward sample normal"""
    radius: float
    gap: float
    normal: Tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise DomainError(f"radius must be > 0, got {self.radius}")
        if not (math.isfinite(self.gap) and self.gap > 0):
            raise DomainError(f"gap must be > 0, got {self.gap}")
        n = np.asarray(self.normal, dtype=float)
        if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise DomainError(f"normal must be a unit 3-vector, got {self.normal}")
        object.__setattr__(self, "normal", tuple(float(c) for c in n))

    @property
    def unit_normal(self) -> np.ndarray:
        return np.asarray(self.normal, dtype=float)

    @property
    def aspect(self) -> float:
        """h / r"""
        return self.gap / self.radius

    @property
    def force_factor(self) -> float:
        """G_f = r^3 / (h^2 (2r + h)^2)"""
        r, h = self.radius, self.gap
        return r ** 3 / (h * h * (2.0 * r + h) ** 2)

    @property
    def spring_factor(self) -> float:
        """G_k = r^3 (r + h) / (h^3 (2r + h)^3); dG_f/dh = -4 G_k"""
        r, h = self.radius, self.gap
        return r ** 3 * (r + h) / (h ** 3 * (2.0 * r + h) ** 3)

    @property
    def energy_factor(self) -> float:
        """r/h + r/(2r+h) + ln(h/(2r+h)); its h-derivative is -4 G_f"""
        r, h = self.radius, self.gap
        return r / h + r / (2.0 * r + h) + math.log(h / (2.0 * r + h))

    def with_gap(self, gap: float) -> "TipSampleGeometry":
        return TipSampleGeometry(self.radius, gap, self.normal)


@dataclass(frozen=True)
class MaterialSpec:
    """Atomic number densities (m^-3), dipole coupling and frequency distribution"""
    rho_a: float
    rho_b: float
    coupling: DipoleCoupling
    dist: SpectralDistribution
    settings: Optional[QuadratureSettings] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("rho_a", "rho_b"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be > 0, got {value}")

    @cached_property
    def cross_per_beta(self) -> float:
        """X = <q_a q_b>^av / beta (J s^2)"""
        return averaged_cross_expectation(self.dist, 1.0, self.settings)

    @cached_property
    def noise_dc(self) -> float:
        """Averaged low-frequency pair-noise level S_av"""
        return averaged_pair_noise_dc(self.dist)

    @property
    def density_product(self) -> float:
        return self.rho_a * self.rho_b


def _separation(r_vec: Sequence[float]) -> Tuple[np.ndarray, float]:
    r = np.asarray(r_vec, dtype=float)
    if r.shape != (3,):
        raise DomainError(f"separation must be a 3-vector, got shape {r.shape}")
    distance = float(np.linalg.norm(r))
    if distance == 0.0:
        raise DomainError("pairwise interaction is singular at zero separation")
    return r, distance


# ---------------------------------------------------------------------------
# Pairwise layer
# ---------------------------------------------------------------------------

def pair_energy(material: MaterialSpec, r_vec: Sequence[float]) -> float:
    """U = -<q_a q_b> beta / 2 = -X kappa^2 / (2 r^6)"""
    _, d = _separation(r_vec)
    beta = material.coupling.beta(d)
    return -0.5 * material.cross_per_beta * beta * beta


def pairwise_force(material: MaterialSpec, r_vec: Sequence[float]) -> np.ndarray:
    """(grad beta) <q_a q_b>^av = -3 X kappa^2 r_vec / r^8, pointing from a back toward b"""
    r, d = _separation(r_vec)
    return -3.0 * material.cross_per_beta * material.coupling.kappa ** 2 * r / d ** 8


def pairwise_spring(material: MaterialSpec, r_vec: Sequence[float]) -> np.ndarray:
    """k_ij = -d_i f_j = 3 X kappa^2 (delta_ij - 8 rhat_i rhat_j) / r^8"""
    r, d = _separation(r_vec)
    rhat = r / d
    strength = 3.0 * material.cross_per_beta * material.coupling.kappa ** 2 / d ** 8
    return strength * (np.eye(3) - 8.0 * np.outer(rhat, rhat))


def pairwise_noise(material: MaterialSpec, r_vec: Sequence[float]) -> np.ndarray:
    """(grad beta)(grad beta)^T S_av = 9 kappa^2 S_av rhat rhat^T / r^8"""
    r, d = _separation(r_vec)
    rhat = r / d
    return 9.0 * material.coupling.kappa ** 2 * material.noise_dc / d ** 8 * np.outer(rhat, rhat)


# ---------------------------------------------------------------------------
# Closed-form totals
# ---------------------------------------------------------------------------

def rotation_to(normal: Sequence[float]) -> np.ndarray:
    """Rotation matrix taking +z onto the given unit normal"""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    c = float(np.dot(Z_AXIS, n))
    if c > 1.0 - 1e-15:
        return np.eye(3)
    if c < -1.0 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    axis = np.cross(Z_AXIS, n)
    s = float(np.linalg.norm(axis))
    k = axis / s
    cross = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + s * cross + (1.0 - c) * cross @ cross


def to_caller_frame(geom: TipSampleGeometry, local):
    """Rotate a vector or 3x3 tensor from the n = +z frame into the caller's frame"""
    rot = rotation_to(geom.normal)
    local = np.asarray(local, dtype=float)
    if local.shape == (3,):
        return rot @ local
    return rot @ local @ rot.T


def _interaction_scale(material: MaterialSpec) -> float:
    return material.coupling.kappa ** 2 * material.cross_per_beta * material.density_product


def total_energy(geom: TipSampleGeometry, material: MaterialSpec) -> float:
    """Hamaker energy -(pi^2/12) kappa^2 X rho_a rho_b [r/h + r/(2r+h) + ln(h/(2r+h))]"""
    return -math.pi ** 2 / 12.0 * _interaction_scale(material) * geom.energy_factor


def total_force_normal(geom: TipSampleGeometry, material: MaterialSpec) -> float:
    """Signed normal component of the total force; negative means toward the sample"""
    return -math.pi ** 2 / 3.0 * _interaction_scale(material) * geom.force_factor


def total_force_local(geom: TipSampleGeometry, material: MaterialSpec) -> np.ndarray:
    return np.array([0.0, 0.0, total_force_normal(geom, material)])


def total_force(geom: TipSampleGeometry, material: MaterialSpec) -> np.ndarray:
    """-n (pi^2/3) kappa^2 X rho_a rho_b G_f; for Debye X = (9 ln(4/e)/10) hbar / w_D"""
    return to_caller_frame(geom, total_force_local(geom, material))


def total_spring_normal(geom: TipSampleGeometry, material: MaterialSpec) -> float:
    """n.k.n = -(4 pi^2 / 3) kappa^2 X rho_a rho_b G_k"""
    return -4.0 * math.pi ** 2 / 3.0 * _interaction_scale(material) * geom.spring_factor


def total_spring_local(geom: TipSampleGeometry, material: MaterialSpec) -> np.ndarray:
    local = np.zeros((3, 3))
    local[2, 2] = total_spring_normal(geom, material)
    return local


def total_spring(geom: TipSampleGeometry, material: MaterialSpec) -> np.ndarray:
    return to_caller_frame(geom, total_spring_local(geom, material))


def total_noise_normal(geom: TipSampleGeometry, material: MaterialSpec) -> float:
    """n.S.n = (3 pi^2 / 5) kappa^2 S_av rho_a rho_b G_k"""
    scale = material.coupling.kappa ** 2 * material.noise_dc * material.density_product
    return 3.0 * math.pi ** 2 / 5.0 * scale * geom.spring_factor


def total_noise_local(
    geom: TipSampleGeometry,
    material: MaterialSpec,
    transverse_fraction: float = DEFAULT_TRANSVERSE_FRACTION,
) -> np.ndarray:
    if not (0.0 <= transverse_fraction <= 1.0):
        raise DomainError(f"transverse_fraction must lie in [0, 1], got {transverse_fraction}")
    normal = total_noise_normal(geom, material)
    return np.diag([normal * transverse_fraction, normal * transverse_fraction, normal])


def total_noise(
    geom: TipSampleGeometry,
    material: MaterialSpec,
    transverse_fraction: float = DEFAULT_TRANSVERSE_FRACTION,
) -> np.ndarray:
    """S_nn [n n + f (I - n n)] with f = transverse_fraction"""
    return to_caller_frame(geom, total_noise_local(geom, material, transverse_fraction))


# ---------------------------------------------------------------------------
# Numerical oracles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HalfSpaceKernels:
    """
    Integrals over a uniform half-space seen from unit height (s >= 1 is depth
    below the tip, rho the lateral distance). A tip at height z picks up
    each kernel times z^-(power).
    """
    energy: float  # int 1/r^6, power 3
    force: float  # int s/r^8, power 4
    inverse_eighth: float  # int 1/r^8, power 5
    normal_square: float  # int s^2/r^10, power 5
    lateral_square: float  # int rho^2 cos^2(phi)/r^10, power 5

    @property
    def spring_normal(self) -> float:
        return self.inverse_eighth - 8.0 * self.normal_square

    @property
    def spring_transverse(self) -> float:
        return self.inverse_eighth - 8.0 * self.lateral_square

    @property
    def transverse_fraction(self) -> float:
        return self.lateral_square / self.normal_square


def _half_space_integral(integrand, settings: QuadratureSettings) -> float:
    """int_1^inf ds int_0^inf 2 pi rho d rho integrand(s, rho)"""
    def column(s):
        return integrate_adaptive(lambda rho: 2.0 * math.pi * rho * integrand(s, rho), 0.0, math.inf, settings)

    return integrate_adaptive(column, 1.0, math.inf, settings)


@lru_cache(maxsize=4)
def half_space_kernels(rel_tol: float = 1e-10) -> HalfSpaceKernels:
    """Unit-height half-space kernels by nested adaptive quadrature"""
    settings = QuadratureSettings(rel_tol=rel_tol)
    kernels = HalfSpaceKernels(
        energy=_half_space_integral(lambda s, rho: (s * s + rho * rho) ** -3, settings),
        force=_half_space_integral(lambda s, rho: s * (s * s + rho * rho) ** -4, settings),
        inverse_eighth=_half_space_integral(lambda s, rho: (s * s + rho * rho) ** -4, settings),
        normal_square=_half_space_integral(lambda s, rho: s * s * (s * s + rho * rho) ** -5, settings),
        # cos^2 averages to 1/2 over the azimuth
        lateral_square=_half_space_integral(lambda s, rho: 0.5 * rho * rho * (s * s + rho * rho) ** -5, settings),
    )
    logger.debug(f"[Geometry] half-space kernels {kernels}")
    return kernels


@dataclass
class MonteCarloTotal:
    """Monte Carlo estimate of a total (vector, tensor or scalar) with per-component errors"""
    value: np.ndarray
    std_error: np.ndarray
    samples: int

    def deviation_sigmas(self, closed) -> np.ndarray:
        """|closed - value| / std_error per component; exact matches of zero-error components give 0"""
        closed = np.asarray(closed, dtype=float)
        diff = np.abs(closed - self.value)
        with np.errstate(divide="ignore", invalid="ignore"):
            sig = np.where(self.std_error > 0, diff / self.std_error, np.where(diff > 0, np.inf, 0.0))
        return sig

    def agrees_with(self, closed, sigmas: float = 3.0) -> bool:
        return bool(np.all(self.deviation_sigmas(closed) <= sigmas))


def _sphere_moment(geom: TipSampleGeometry, power: float, settings: QuadratureSettings) -> Tuple[float, float]:
    """MC estimate of int_sphere z^-power dV with heights importance-sampled toward the gap"""
    if geom.gap <= 0:
        raise RegionError(f"gap must be > 0, got {geom.gap}")
    region = SphereAboveHalfSpace(geom.radius, geom.gap, focus_power=power)
    return integrate_mc(lambda points: points[:, 2] ** (-power), region, settings)


def _mc_settings(settings: Optional[QuadratureSettings]) -> QuadratureSettings:
    settings = settings or QuadratureSettings.default()
    if settings.mc_samples < 100_000:
        logger.warning(f"[Geometry] Monte Carlo oracle running with only {settings.mc_samples} samples")
    return settings


def sphere_volume_mc(geom: TipSampleGeometry, settings: Optional[QuadratureSettings] = None) -> Tuple[float, float]:
    """Sanity oracle: volume of the tip by the same sampler, with no focusing"""
    region = SphereAboveHalfSpace(geom.radius, geom.gap, focus_power=0.0)
    return integrate_mc(lambda points: np.ones(points.shape[0]), region, _mc_settings(settings))


def total_energy_mc(geom: TipSampleGeometry, material: MaterialSpec, settings: Optional[QuadratureSettings] = None) -> MonteCarloTotal:
    settings = _mc_settings(settings)
    kernels = half_space_kernels()
    moment, err = _sphere_moment(geom, 3.0, settings)
    scale = -0.5 * _interaction_scale(material) * kernels.energy
    return MonteCarloTotal(np.array(scale * moment), np.array(abs(scale) * err), settings.mc_samples)


def total_force_mc(geom: TipSampleGeometry, material: MaterialSpec, settings: Optional[QuadratureSettings] = None) -> MonteCarloTotal:
    """Tip force by MC over the sphere with the half-space sum done by quadrature"""
    settings = _mc_settings(settings)
    kernels = half_space_kernels()
    moment, err = _sphere_moment(geom, 4.0, settings)
    scale = -3.0 * _interaction_scale(material) * kernels.force
    rot = rotation_to(geom.normal)
    value = rot @ np.array([0.0, 0.0, scale * moment])
    std = np.abs(rot @ np.array([0.0, 0.0, abs(scale) * err])) + _QUADRATURE_FLOOR * np.max(np.abs(value))
    return MonteCarloTotal(value, std, settings.mc_samples)


def total_spring_mc(geom: TipSampleGeometry, material: MaterialSpec, settings: Optional[QuadratureSettings] = None) -> MonteCarloTotal:
    settings = _mc_settings(settings)
    kernels = half_space_kernels()
    moment, err = _sphere_moment(geom, 5.0, settings)
    scale = 3.0 * _interaction_scale(material)
    local = np.diag([kernels.spring_transverse, kernels.spring_transverse, kernels.spring_normal]) * scale
    return _rotated_tensor_total(geom, local, moment, err, settings.mc_samples)


def total_noise_mc(geom: TipSampleGeometry, material: MaterialSpec, settings: Optional[QuadratureSettings] = None) -> MonteCarloTotal:
    """Noise tensor of the pairwise model; its tangential share is PAIRWISE_TRANSVERSE_FRACTION"""
    settings = _mc_settings(settings)
    kernels = half_space_kernels()
    moment, err = _sphere_moment(geom, 5.0, settings)
    scale = 9.0 * material.coupling.kappa ** 2 * material.noise_dc * material.density_product
    local = np.diag([kernels.lateral_square, kernels.lateral_square, kernels.normal_square]) * scale
    return _rotated_tensor_total(geom, local, moment, err, settings.mc_samples)


def _rotated_tensor_total(geom, local_unit, moment, err, samples) -> MonteCarloTotal:
    rot = rotation_to(geom.normal)
    value = rot @ (local_unit * moment) @ rot.T
    # every component shares one MC moment, so errors scale with the component's kernel
    unit = np.abs(rot @ local_unit @ rot.T)
    return MonteCarloTotal(value, unit * err + _QUADRATURE_FLOOR * np.max(np.abs(value)), samples)
