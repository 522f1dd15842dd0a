"""
Numerical kernels: special functions, quadrature and Monte Carlo
"""

from .specfun import (
    CONSTANTS,
    HBAR,
    K_B,
    Box,
    PhysicalConstants,
    QuadratureSettings,
    SphereAboveHalfSpace,
    expint_g,
    expint_g_quadrature,
    integrate_adaptive,
    integrate_mc,
    ln_four_over_e,
    thermal_kernel,
)

__all__ = [
    'CONSTANTS',
    'HBAR',
    'K_B',
    'Box',
    'PhysicalConstants',
    'QuadratureSettings',
    'SphereAboveHalfSpace',
    'expint_g',
    'expint_g_quadrature',
    'integrate_adaptive',
    'integrate_mc',
    'ln_four_over_e',
    'thermal_kernel',
]
