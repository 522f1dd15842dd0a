"""
Special functions and numerical kernels shared by the rest of the package.

Contents:
- physical constants (CODATA 2018) and ln(4/e)
- g(z) = integral_0^inf cos(t)/(t+z) dt and its direct quadrature oracle
- the quantum thermal noise kernel hbar*w*coth(hbar*w/2kT)
- adaptive 1-D quadrature and seeded, batch-parallel Monte Carlo
"""

import logging
import math
import cmath
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special

from app import config
from app.errors import AccuracyError, DomainError, IntegrationError, RegionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values used everywhere in the package"""
    hbar: float = 1.054571817e-34  # J*s
    k_B: float = 1.380649e-23  # J/K


CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar
K_B = CONSTANTS.k_B


def ln_four_over_e() -> float:
    """ln(4/e) = 2 ln 2 - 1"""
    return 2.0 * math.log(2.0) - 1.0


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances, subdivision limit and Monte Carlo controls for one computation"""
    rel_tol: float = 1e-10
    abs_tol: float = 0.0
    max_subdivisions: int = 200
    mc_samples: int = config.MC_SAMPLES
    seed: int = config.DEFAULT_SEED
    mc_batch: int = config.MC_BATCH

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.abs_tol >= 0:
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if self.max_subdivisions < 1:
            raise DomainError(f"max_subdivisions must be >= 1, got {self.max_subdivisions}")
        if self.mc_samples < 1:
            raise DomainError(f"mc_samples must be >= 1, got {self.mc_samples}")
        if self.mc_batch < 1:
            raise DomainError(f"mc_batch must be >= 1, got {self.mc_batch}")

    @classmethod
    def default(cls) -> "QuadratureSettings":
        """Settings drawn from the environment (CASIMIR_SEED, CASIMIR_MC_SAMPLES, ...)"""
        return cls(seed=config.seed_from_env(), mc_samples=config.MC_SAMPLES, mc_batch=config.MC_BATCH)

    def with_samples(self, mc_samples: int) -> "QuadratureSettings":
        return replace(self, mc_samples=int(mc_samples))

    def with_seed(self, seed: int) -> "QuadratureSettings":
        return replace(self, seed=int(seed))


# ---------------------------------------------------------------------------
# g(z)
# ---------------------------------------------------------------------------

# Above this modulus the asymptotic series is used instead of E1.
_ASYMPTOTIC_MODULUS = 50.0


def _check_g_argument(z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"g(z) requires a finite argument, got {z}")
    if z == 0:
        raise DomainError("g(z) is singular at z = 0")
    if z.imag == 0.0 and z.real < 0.0:
        raise DomainError(f"g(z) has a branch cut on the negative real axis, got z = {z}")
    return z


def _continuation_terms(z: complex) -> complex:
    """Extra terms picked up when g is continued into the left half plane"""
    if z.real >= 0.0:
        return 0.0j
    if z.imag > 0.0:
        return -1j * math.pi * cmath.exp(1j * z)
    return 1j * math.pi * cmath.exp(-1j * z)


def _g_asymptotic(z: complex) -> complex:
    """g(z) ~ sum_k (-1)^k (2k+1)! / z^(2k+2), truncated at its smallest term"""
    inv_z2 = 1.0 / (z * z)
    term = inv_z2
    total = term
    previous = abs(term)
    k = 0
    while True:
        k += 1
        term = -term * (2 * k) * (2 * k + 1) * inv_z2
        size = abs(term)
        if size >= previous or size < 1e-17 * abs(total):
            if size < previous:
                total += term
            break
        total += term
        previous = size
    return total + _continuation_terms(z)


def _g_exponential_integral(z: complex) -> complex:
    """g(z) = (e^{-iz} E1(-iz) + e^{iz} E1(iz)) / 2, continued across the imaginary axis"""
    w_minus = -1j * z
    w_plus = 1j * z

    # E1(-iz): cut reached on the negative imaginary z axis
    if z.real == 0.0 and z.imag < 0.0:
        e1_minus = -special.expi(-z.imag) + 1j * math.pi
    else:
        e1_minus = complex(special.exp1(w_minus))
        if z.real < 0.0 and z.imag < 0.0:
            e1_minus += 2j * math.pi

    # E1(iz): cut reached on the positive imaginary z axis
    if z.real == 0.0 and z.imag > 0.0:
        e1_plus = -special.expi(z.imag) - 1j * math.pi
    else:
        e1_plus = complex(special.exp1(w_plus))
        if z.real < 0.0 and z.imag > 0.0:
            e1_plus -= 2j * math.pi

    return 0.5 * (cmath.exp(w_minus) * e1_minus + cmath.exp(w_plus) * e1_plus)


def expint_g(z: complex) -> complex:
    """
    g(z) = integral_0^inf cos(t)/(t+z) dt = -Ci(z) cos z + (pi/2 - Si(z)) sin z,
    analytic everywhere except the cut along the non-positive real axis.

    Raises:
        DomainError: z = 0 or z on the negative real axis
        AccuracyError: evaluation produced a non-finite value
    """
    z = _check_g_argument(z)
    if abs(z) >= _ASYMPTOTIC_MODULUS:
        value = _g_asymptotic(z)
    else:
        value = _g_exponential_integral(z)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise AccuracyError(f"g(z) evaluation lost accuracy at z = {z}")
    return value


def expint_g_quadrature(z: complex, settings: Optional[QuadratureSettings] = None) -> complex:
    """Direct Fourier quadrature of g's defining integral; oracle for expint_g"""
    z = _check_g_argument(z)
    settings = settings or QuadratureSettings()
    x, y = z.real, z.imag
    if x < 0.0:
        raise DomainError(f"quadrature oracle needs Re z >= 0 to keep the path clear of the pole, got {z}")

    def real_part(t):
        return (t + x) / ((t + x) ** 2 + y * y)

    def imag_part(t):
        return -y / ((t + x) ** 2 + y * y)

    # The first cycle holds the 1/(t+z) spike; the tail uses the infinite-range Fourier rule.
    split = 2.0 * math.pi
    head_re = integrate_adaptive(real_part, 0.0, split, settings, weight_frequency=1.0)
    tail_re = integrate_adaptive(real_part, split, math.inf, settings, weight_frequency=1.0)
    if y == 0.0:
        return complex(head_re + tail_re, 0.0)
    head_im = integrate_adaptive(imag_part, 0.0, split, settings, weight_frequency=1.0)
    tail_im = integrate_adaptive(imag_part, split, math.inf, settings, weight_frequency=1.0)
    return complex(head_re + tail_re, head_im + tail_im)


# ---------------------------------------------------------------------------
# Thermal kernel
# ---------------------------------------------------------------------------

def thermal_kernel(omega, temperature: float):
    """
    hbar*omega*coth(hbar*omega / 2 k_B T), the bath kernel of the fluctuation-dissipation
    relation. Even in omega, equal to hbar|omega| at T = 0 and 2 k_B T at omega = 0.
    Accepts scalars or arrays for omega.
    """
    if temperature < 0:
        raise DomainError(f"temperature must be >= 0, got {temperature}")
    w = np.abs(np.asarray(omega, dtype=float))
    if temperature == 0:
        result = HBAR * w
    else:
        two_kt = 2.0 * K_B * temperature
        x = HBAR * w / two_kt
        small = x < 1e-4
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            exact = two_kt * x / np.tanh(np.where(small, 1.0, x))
        series = two_kt * (1.0 + x * x / 3.0)
        result = np.where(small, series, exact)
    if np.ndim(result) == 0:
        return float(result)
    return result


# ---------------------------------------------------------------------------
# Adaptive quadrature
# ---------------------------------------------------------------------------

# quad's own error estimate may overshoot the request by this factor before we give up.
_ERROR_SLACK = 100.0


def _quad(f, a, b, settings, epsabs, **kwargs):
    result = integrate.quad(
        f, a, b,
        epsabs=epsabs,
        epsrel=settings.rel_tol,
        limit=settings.max_subdivisions,
        full_output=1,
        **kwargs,
    )
    value, abserr = float(result[0]), float(result[1])
    message = result[3] if len(result) > 3 else None
    return value, abserr, message


def integrate_adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    settings: Optional[QuadratureSettings] = None,
    weight_frequency: Optional[float] = None,
    points: Optional[Sequence[float]] = None,
) -> float:
    """
    Adaptive Gauss-Kronrod quadrature of f over [a, b] (b may be +inf).

    With weight_frequency set, integrates f(x)*cos(weight_frequency*x) using the
    dedicated oscillatory rules (finite range) or the Fourier rule ([a, inf)).

    Raises:
        IntegrationError: the error estimate stayed above tolerance
    """
    settings = settings or QuadratureSettings()
    kwargs = {}
    if weight_frequency is not None:
        kwargs["weight"] = "cos"
        kwargs["wvar"] = float(weight_frequency)
        if math.isinf(b):
            kwargs["limlst"] = 100
    elif points is not None and math.isfinite(a) and math.isfinite(b):
        inner = [p for p in points if a < p < b]
        if inner:
            kwargs["points"] = inner

    fourier_tail = weight_frequency is not None and math.isinf(b)
    if fourier_tail:
        # The Fourier rule honours only an absolute tolerance; rescale once the size is known.
        epsabs = settings.abs_tol if settings.abs_tol > 0 else settings.rel_tol
        value, abserr, message = _quad(f, a, b, settings, epsabs, **kwargs)
        target = max(settings.abs_tol, settings.rel_tol * abs(value))
        if target > 0 and target < epsabs:
            value, abserr, message = _quad(f, a, b, settings, target, **kwargs)
    else:
        value, abserr, message = _quad(f, a, b, settings, settings.abs_tol, **kwargs)
        target = max(settings.abs_tol, settings.rel_tol * abs(value))

    if not math.isfinite(value):
        raise IntegrationError(f"quadrature over [{a}, {b}] returned {value}")
    if abserr > _ERROR_SLACK * target and abserr > 0:
        raise IntegrationError(
            f"quadrature over [{a}, {b}] did not converge: estimate {value:.6e}, "
            f"error {abserr:.2e} (limit {settings.max_subdivisions} subdivisions)"
            + (f"; {message}" if message else "")
        )
    if message:
        logger.debug(f"[Quadrature] [{a}, {b}] accepted with warning: {message}")
    return value


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Axis-aligned box; points are drawn uniformly"""
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def validate(self) -> None:
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size == 0:
            raise RegionError(f"box bounds must be equal-length vectors, got {self.lower} and {self.upper}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise RegionError("box bounds must be finite")
        if np.any(hi <= lo):
            raise RegionError(f"box upper bounds must exceed lower bounds, got {self.lower} and {self.upper}")

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.upper, float) - np.asarray(self.lower, float)))

    def sample(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        points = lo + (hi - lo) * rng.random((n, lo.size))
        return points, np.full(n, self.volume)


@dataclass(frozen=True)
class SphereAboveHalfSpace:
    """
    Ball of the given radius whose lowest point sits at height `gap` above the
    plane z = 0. Heights are drawn from a proposal proportional to z^-focus_power
    so samples concentrate toward the gap; positions across each horizontal
    slice are uniform.
    """
    radius: float
    gap: float
    focus_power: float = 0.0

    def validate(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise RegionError(f"sphere radius must be > 0, got {self.radius}")
        if not (math.isfinite(self.gap) and self.gap > 0):
            raise RegionError(f"gap must be > 0, got {self.gap}")
        if not (math.isfinite(self.focus_power) and self.focus_power >= 0):
            raise RegionError(f"focus_power must be >= 0, got {self.focus_power}")

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.radius ** 3

    def _heights(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Inverse-CDF draw of heights and the proposal density at each"""
        h, top = self.gap, self.gap + 2.0 * self.radius
        m = self.focus_power
        if m == 0:
            z = h + (top - h) * u
            return z, np.full_like(z, 1.0 / (top - h))
        if abs(m - 1.0) < 1e-12:
            log_ratio = math.log(top / h)
            z = h * np.exp(u * log_ratio)
            return z, 1.0 / (z * log_ratio)
        # Work in units of the gap so large powers stay in range.
        s_top = top / h
        e = 1.0 - m
        norm = (s_top ** e - 1.0) / e
        s = (1.0 + u * (s_top ** e - 1.0)) ** (1.0 / e)
        return h * s, s ** (-m) / (norm * h)

    def sample(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        u = rng.random((n, 3))
        z, density = self._heights(u[:, 0])
        t = z - self.gap
        slice_radius_sq = np.clip(t * (2.0 * self.radius - t), 0.0, None)
        rho = np.sqrt(u[:, 1] * slice_radius_sq)
        phi = 2.0 * math.pi * u[:, 2]
        points = np.column_stack((rho * np.cos(phi), rho * np.sin(phi), z))
        weights = math.pi * slice_radius_sq / density
        return points, weights


Region = Union[Box, SphereAboveHalfSpace]


def _batch_sizes(total: int, batch: int) -> List[int]:
    sizes = [batch] * (total // batch)
    if total % batch:
        sizes.append(total % batch)
    return sizes


def integrate_mc(
    f: Callable[[np.ndarray], np.ndarray],
    region: Region,
    settings: Optional[QuadratureSettings] = None,
    workers: Optional[int] = None,
) -> Tuple[float, float]:
    """
    Monte Carlo integral of f over region; returns (estimate, standard error).

    f receives an (n, d) array of points and returns n values. Batches draw from
    independent Philox streams spawned from settings.seed and are reduced in batch
    order, so results are bit-identical for any number of worker threads.

    Raises:
        RegionError: the region descriptor is invalid
    """
    if not isinstance(region, (Box, SphereAboveHalfSpace)):
        raise RegionError(f"unsupported region descriptor {type(region).__name__}")
    region.validate()
    settings = settings or QuadratureSettings.default()
    workers = config.WORKERS if workers is None else workers
    if settings.mc_samples < 1000:
        logger.warning(f"[MonteCarlo] only {settings.mc_samples} samples; standard error is unreliable")

    sizes = _batch_sizes(settings.mc_samples, settings.mc_batch)
    children = np.random.SeedSequence(settings.seed).spawn(len(sizes))

    def run_batch(index: int) -> Tuple[float, float]:
        rng = np.random.Generator(np.random.Philox(children[index]))
        points, weights = region.sample(rng, sizes[index])
        values = np.asarray(f(points), dtype=float)
        if values.shape != (sizes[index],):
            raise RegionError(f"integrand returned shape {values.shape}, expected ({sizes[index]},)")
        values = values * weights
        return float(np.sum(values)), float(np.sum(values * values))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run_batch, range(len(sizes))))
    else:
        partials = [run_batch(i) for i in range(len(sizes))]

    n = settings.mc_samples
    total = 0.0
    total_sq = 0.0
    for s, s2 in partials:
        total += s
        total_sq += s2
    mean = total / n
    variance = max(total_sq / n - mean * mean, 0.0)
    std_error = math.sqrt(variance / (n - 1)) if n > 1 else math.inf
    logger.debug(f"[MonteCarlo] {type(region).__name__}: {mean:.6e} +/- {std_error:.2e} from {n} samples")
    return mean, std_error
