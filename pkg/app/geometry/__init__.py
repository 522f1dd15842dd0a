"""
Tip-sample geometry: pairwise dipole forces, sphere/half-space totals and cantilever mode shapes
"""

from .tip_sample import (
    DEFAULT_TRANSVERSE_FRACTION,
    PAIRWISE_TRANSVERSE_FRACTION,
    DipoleCoupling,
    HalfSpaceKernels,
    MaterialSpec,
    MonteCarloTotal,
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
    total_noise,
    total_noise_mc,
    total_spring,
    total_spring_mc,
)
from .mode_shape import ModeShape, clamped_free_root, euler_bernoulli_shape, load_mode_shape_csv, mode_length

__all__ = [
    'DEFAULT_TRANSVERSE_FRACTION',
    'PAIRWISE_TRANSVERSE_FRACTION',
    'DipoleCoupling',
    'HalfSpaceKernels',
    'MaterialSpec',
    'MonteCarloTotal',
    'TipSampleGeometry',
    'half_space_kernels',
    'pair_energy',
    'pairwise_force',
    'pairwise_noise',
    'pairwise_spring',
    'rotation_to',
    'sphere_volume_mc',
    'total_energy',
    'total_energy_mc',
    'total_force',
    'total_force_mc',
    'total_noise',
    'total_noise_mc',
    'total_spring',
    'total_spring_mc',
    'ModeShape',
    'clamped_free_root',
    'euler_bernoulli_shape',
    'load_mode_shape_csv',
    'mode_length',
]
