"""
Experiment layer: cantilever calibration, Casimir noise predictions and Brownian-motion simulation
"""

from .predict import (
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
from .simulate import (
    Autocorrelation,
    FitResult,
    SimulationConfig,
    TimeSeries,
    equipartition_ratio,
    estimate_autocorrelation,
    extract_force_psd,
    fit_autocorrelation,
    peak_psd_ratio,
    read_timeseries_csv,
    simulate_brownian,
    write_timeseries_csv,
)

__all__ = [
    'COEFFICIENTS',
    'CantileverParams',
    'NormalVibration',
    'PredictionResult',
    'TransverseVibration',
    'casimir_damping_normal',
    'casimir_damping_transverse',
    'casimir_noise_normal',
    'casimir_noise_transverse',
    'coefficient',
    'coefficient_identities',
    'equipartition_x2',
    'predict_from_geometry',
    'quantum_regime_ratio',
    'thermal_force_psd',
    'Autocorrelation',
    'FitResult',
    'SimulationConfig',
    'TimeSeries',
    'equipartition_ratio',
    'estimate_autocorrelation',
    'extract_force_psd',
    'fit_autocorrelation',
    'peak_psd_ratio',
    'read_timeseries_csv',
    'simulate_brownian',
    'write_timeseries_csv',
]
