"""
Two dipole-coupled atomic oscillators.

The Hamiltonian convention is H = (w_a/2)(p_a^2 + q_a^2) + (w_b/2)(p_b^2 + q_b^2) - beta q_a q_b
with [q, p] = i hbar, so beta is in rad/s and <q^2> carries hbar.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from app.atomic.oscillator import OscillatorSpec, autocorr_weak
from app.errors import DiagonalizationError, DomainError
from app.numerics.specfun import HBAR

logger = logging.getLogger(__name__)

# Below this |w_a - w_b| / (w_a + w_b) the damping bracket switches to its series.
DEGENERACY_THRESHOLD = 1e-4


@dataclass(frozen=True)
class PairSpec:
    """Coupled pair: oscillators a and b with bilinear coupling beta (rad/s)"""
    a: OscillatorSpec
    b: OscillatorSpec
    beta: float

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise DomainError(f"coupling beta must be finite, got {self.beta}")
        limit = min(self.a.omega, self.b.omega)
        if abs(self.beta) >= limit:
            raise DomainError(
                f"coupling |beta| = {abs(self.beta)} must stay below min(omega_a, omega_b) = {limit}"
            )

    @property
    def is_undamped(self) -> bool:
        return self.a.is_undamped and self.b.is_undamped

    @property
    def gamma_bar(self) -> float:
        """Mean damping (G_a + G_b)/2; half-width of the pair-noise Lorentzians"""
        return 0.5 * (self.a.gamma + self.b.gamma)


def _log_ratio_kernel(s: float, use_series: bool) -> float:
    """q(s) = (log(1+s) - s) / s^2"""
    if use_series:
        return -0.5 + s / 3.0 - s * s / 4.0 + s ** 3 / 5.0 - s ** 4 / 6.0 + s ** 5 / 7.0
    return (math.log1p(s) - s) / (s * s)


def damping_correction(pair: PairSpec) -> float:
    """Gamma-linear part of <q_a q_b>; finite through w_a = w_b"""
    x, y = pair.a.omega, pair.b.omega
    near = abs(x - y) < DEGENERACY_THRESHOLD * (x + y)
    s_a = x * x / (y * y) - 1.0
    s_b = y * y / (x * x) - 1.0
    bracket = (
        pair.a.gamma * _log_ratio_kernel(s_a, near) / y ** 4
        + pair.b.gamma * _log_ratio_kernel(s_b, near) / x ** 4
    )
    return HBAR * pair.beta * x * y / (2.0 * math.pi) * bracket


def cross_expectation(pair: PairSpec) -> float:
    """
    Zero-temperature <q_a q_b> to first order in beta and the damping rates:
    hbar beta / (2 (w_a + w_b)) plus the damping correction.
    """
    leading = HBAR * pair.beta / (2.0 * (pair.a.omega + pair.b.omega))
    if pair.is_undamped:
        return leading
    return leading + damping_correction(pair)


def _coupling_matrices(pair: PairSpec):
    kinetic = np.diag([pair.a.omega, pair.b.omega])
    potential = np.array([[pair.a.omega, -pair.beta], [-pair.beta, pair.b.omega]])
    return kinetic, potential


def cross_expectation_exact_undamped(pair: PairSpec) -> float:
    """
    Exact ground-state <q_a q_b> with the bath switched off, from the normal modes
    of the quadratic form: <q q^T> = (hbar/2) A^1/2 (A^1/2 B A^1/2)^-1/2 A^1/2.

    Raises:
        DomainError: either oscillator is damped
        DiagonalizationError: the potential form is not positive definite
    """
    if not pair.is_undamped:
        raise DomainError("exact ground-state oracle applies only with gamma_a = gamma_b = 0")
    kinetic, potential = _coupling_matrices(pair)
    root_kinetic = np.sqrt(kinetic)
    mass_weighted = root_kinetic @ potential @ root_kinetic
    eigenvalues, modes = np.linalg.eigh(mass_weighted)
    if np.min(eigenvalues) <= 0:
        raise DiagonalizationError(
            f"coupling beta = {pair.beta} makes the quadratic form indefinite (mode frequencies^2 {eigenvalues})"
        )
    inverse_root = modes @ np.diag(eigenvalues ** -0.5) @ modes.T
    covariance = 0.5 * HBAR * root_kinetic @ inverse_root @ root_kinetic
    logger.debug(f"[Pair] normal-mode frequencies {np.sqrt(eigenvalues)}")
    return float(covariance[0, 1])


def cross_expectation_undamped_closed(pair: PairSpec) -> float:
    """Closed form of the exact undamped result: hbar beta w_a w_b / (2 s t)"""
    x, y = pair.a.omega, pair.b.omega
    det = x * x * y * y - pair.beta ** 2 * x * y
    if det <= 0:
        raise DiagonalizationError(f"coupling beta = {pair.beta} makes the quadratic form indefinite")
    s = math.sqrt(det)
    t = math.sqrt(x * x + y * y + 2.0 * s)
    return 0.5 * HBAR * pair.beta * x * y / (s * t)


def pair_noise_autocorr(pair: PairSpec, tau: float) -> float:
    """C_(qaqb)(tau) = C_qaqa(tau) C_qbqb(tau) with weak-damping factors"""
    return autocorr_weak(pair.a, tau) * autocorr_weak(pair.b, tau)


def pair_noise_spectrum_kernel(omega_bar_a, omega_bar_b, gamma_bar, omega):
    """
    Four Lorentzians of half-width gamma_bar and weight hbar^2/8 centred at
    +/-(wb_a - wb_b) and +/-(wb_a + wb_b). Broadcasts over array arguments.
    """
    g = np.asarray(gamma_bar, dtype=float)
    w = np.asarray(omega, dtype=float)
    diff = np.asarray(omega_bar_a, dtype=float) - np.asarray(omega_bar_b, dtype=float)
    total = np.asarray(omega_bar_a, dtype=float) + np.asarray(omega_bar_b, dtype=float)
    g2 = g * g
    lines = (
        g / (g2 + (w - diff) ** 2)
        + g / (g2 + (w + diff) ** 2)
        + g / (g2 + (w - total) ** 2)
        + g / (g2 + (w + total) ** 2)
    )
    return HBAR * HBAR / 8.0 * lines


def pair_noise_spectrum(pair: PairSpec, omega):
    """Fourier transform of pair_noise_autocorr; even and nonnegative"""
    if pair.gamma_bar <= 0:
        raise DomainError("pair_noise_spectrum needs gamma_a + gamma_b > 0")
    value = pair_noise_spectrum_kernel(pair.a.omega_bar, pair.b.omega_bar, pair.gamma_bar, omega)
    if np.ndim(value) == 0:
        return float(value)
    return value
