"""
Atomic layer: damped oscillators, coupled pairs and frequency averaging
"""

from .oscillator import (
    OscillatorSpec,
    autocorr_exact,
    autocorr_quadrature,
    autocorr_weak,
    band_power_fraction,
    classical_crossover_temperature,
    langevin_force_spectrum,
    position_spectrum,
    squeezing_term,
)
from .pair import (
    PairSpec,
    cross_expectation,
    cross_expectation_exact_undamped,
    cross_expectation_undamped_closed,
    pair_noise_autocorr,
    pair_noise_spectrum,
)
from .ensemble import (
    SpectralDistribution,
    averaged_cross_expectation,
    averaged_cross_coefficient,
    averaged_pair_noise_dc,
    averaged_pair_noise_dc_finite_gamma,
    extrapolate_zero_gamma,
    load_distribution_csv,
)

__all__ = [
    'OscillatorSpec',
    'autocorr_exact',
    'autocorr_quadrature',
    'autocorr_weak',
    'band_power_fraction',
    'classical_crossover_temperature',
    'langevin_force_spectrum',
    'position_spectrum',
    'squeezing_term',
    'PairSpec',
    'cross_expectation',
    'cross_expectation_exact_undamped',
    'cross_expectation_undamped_closed',
    'pair_noise_autocorr',
    'pair_noise_spectrum',
    'SpectralDistribution',
    'averaged_cross_expectation',
    'averaged_cross_coefficient',
    'averaged_pair_noise_dc',
    'averaged_pair_noise_dc_finite_gamma',
    'extrapolate_zero_gamma',
    'load_distribution_csv',
]
