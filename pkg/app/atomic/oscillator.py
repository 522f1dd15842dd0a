"""
Single damped atomic oscillator coupled to an independent-oscillator heat bath.

Correlation convention: C_AB(tau) = 1/2 <A(t)B(t+tau) + B(t+tau)A(t)> and
S_A(omega) = integral dtau e^{i omega tau} C_AA(tau). Every spectrum here is real
and even in omega. Correlations of the scaled coordinate q carry units of hbar.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.errors import DomainError
from app.numerics.specfun import (
    HBAR,
    K_B,
    QuadratureSettings,
    expint_g,
    integrate_adaptive,
    thermal_kernel,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OscillatorSpec:
    """One atomic oscillator: bare frequency omega (rad/s) and damping rate gamma (rad/s)"""
    omega: float
    gamma: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise DomainError(f"oscillator omega must be > 0, got {self.omega}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise DomainError(f"oscillator gamma must be >= 0, got {self.gamma}")
        if self.gamma >= 2.0 * self.omega:
            raise DomainError(
                f"oscillator must be underdamped (gamma < 2 omega), got gamma={self.gamma}, omega={self.omega}"
            )

    @property
    def omega_bar(self) -> float:
        """Damped frequency sqrt(omega^2 - gamma^2/4)"""
        return math.sqrt(self.omega ** 2 - 0.25 * self.gamma ** 2)

    @property
    def is_undamped(self) -> bool:
        return self.gamma == 0.0


def autocorr_exact(spec: OscillatorSpec, tau: float) -> float:
    """
    Zero-temperature position autocorrelation including the slowly decaying
    squeezing term: (hbar/2)(w/wb)[e^{-G|t|/2} cos(wb t) + (2/pi) Im g((wb + iG/2)|t|)].
    """
    if spec.is_undamped:
        return 0.5 * HBAR * math.cos(spec.omega * tau)
    wb = spec.omega_bar
    ratio = spec.omega / wb
    lag = abs(tau)
    if lag == 0.0:
        initial = -math.atan(spec.gamma / (2.0 * wb))
        return 0.5 * HBAR * ratio * (1.0 + 2.0 / math.pi * initial)
    z = complex(wb, 0.5 * spec.gamma) * lag
    ringing = math.exp(-0.5 * spec.gamma * lag) * math.cos(wb * lag)
    return 0.5 * HBAR * ratio * (ringing + 2.0 / math.pi * expint_g(z).imag)


def autocorr_weak(spec: OscillatorSpec, tau: float) -> float:
    """Weak-damping form (hbar/2) e^{-G|t|/2} cos(wb t)"""
    if spec.is_undamped:
        return 0.5 * HBAR * math.cos(spec.omega * tau)
    return 0.5 * HBAR * math.exp(-0.5 * spec.gamma * abs(tau)) * math.cos(spec.omega_bar * tau)


def squeezing_term(spec: OscillatorSpec, tau: float) -> float:
    """autocorr_exact - autocorr_weak; negative at zero lag, ~1/tau^2 at long lags"""
    return autocorr_exact(spec, tau) - autocorr_weak(spec, tau)


def autocorr_quadrature(spec: OscillatorSpec, tau: float, settings: Optional[QuadratureSettings] = None) -> float:
    """
    (hbar/pi) integral_0^inf G w_a w cos(w tau) / ((w_a^2 - w^2)^2 + G^2 w^2) dw by
    adaptive quadrature, in units of w_a. Oracle for autocorr_exact.
    """
    if spec.is_undamped:
        return 0.5 * HBAR * math.cos(spec.omega * tau)
    settings = settings or QuadratureSettings(abs_tol=1e-14)
    g = spec.gamma / spec.omega
    phase = spec.omega * abs(tau)

    def lorentz(u):
        return g * u / ((1.0 - u * u) ** 2 + g * g * u * u)

    peak = math.sqrt(max(1.0 - 0.5 * g * g, 0.0))
    if phase == 0.0:
        total = (
            integrate_adaptive(lorentz, 0.0, 1.0, settings, points=[peak])
            + integrate_adaptive(lorentz, 1.0, 2.0, settings)
            + integrate_adaptive(lorentz, 2.0, math.inf, settings)
        )
    else:
        total = (
            integrate_adaptive(lorentz, 0.0, 1.0, settings, weight_frequency=phase)
            + integrate_adaptive(lorentz, 1.0, 2.0, settings, weight_frequency=phase)
            + integrate_adaptive(lorentz, 2.0, math.inf, settings, weight_frequency=phase)
        )
    return HBAR / math.pi * total


def position_spectrum(spec: OscillatorSpec, omega):
    """S_q(w) = hbar G w_a |w| / ((w_a^2 - w^2)^2 + G^2 w^2) for the zero-temperature bath"""
    if spec.is_undamped:
        raise DomainError("position_spectrum needs gamma > 0 (undamped spectrum is a pair of delta lines)")
    w = np.abs(np.asarray(omega, dtype=float))
    value = HBAR * spec.gamma * spec.omega * w / ((spec.omega ** 2 - w ** 2) ** 2 + (spec.gamma * w) ** 2)
    if np.ndim(value) == 0:
        return float(value)
    return value


def band_power_fraction(spec: OscillatorSpec, half_width: float) -> float:
    """
    Share of the zero-lag power (1/2pi) integral S_q dw that lies within half_width
    of the carriers +/- wb.
    """
    if spec.is_undamped:
        raise DomainError("band_power_fraction needs gamma > 0")
    if half_width < 0:
        raise DomainError(f"half_width must be >= 0, got {half_width}")
    if math.isinf(half_width):
        return 1.0
    wb = spec.omega_bar
    scale = spec.gamma * wb
    centre = spec.omega ** 2 - 0.5 * spec.gamma ** 2
    lo = max(wb - half_width, 0.0)
    hi = wb + half_width
    captured = math.atan((hi * hi - centre) / scale) - math.atan((lo * lo - centre) / scale)
    total = 0.5 * math.pi + math.atan(centre / scale)
    return captured / total


def langevin_force_spectrum(spec: OscillatorSpec, omega, temperature: float):
    """Bath force spectrum S_F(w) = G w_a hbar w coth(hbar w / 2 k_B T)"""
    return spec.gamma * spec.omega * thermal_kernel(omega, temperature)


def classical_crossover_temperature(omega: float) -> float:
    """Temperature at which hbar*omega = 2 k_B T"""
    return HBAR * abs(omega) / (2.0 * K_B)
