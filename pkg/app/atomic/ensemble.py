"""
Averages over the distribution of atomic frequencies.

A Debye density p(w) = 3 w^2 / w_D^3 has closed forms; tabulated densities are
piecewise-linear interpolants of their samples and are averaged by quadrature.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from app.atomic.pair import pair_noise_spectrum_kernel
from app.errors import DivergenceError, DomainError
from app.numerics.specfun import HBAR, QuadratureSettings, integrate_adaptive, ln_four_over_e
from app.numerics.tables import PathLike, read_columns

logger = logging.getLogger(__name__)

DEBYE = "debye"
TABULATED = "tabulated"

# w_max * integral p^2 beyond this is treated as a delta-like density.
DIVERGENCE_LIMIT = 1e6

# Gauss-Legendre nodes per segment away from the origin, and the largest
# (x, segment) block evaluated at once.
_GAUSS_ORDER = 8
_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True, eq=False)
class SpectralDistribution:
    """Normalized atomic frequency density on [0, omega_max]"""
    kind: str
    omega_max: float
    omega_grid: Optional[np.ndarray] = field(default=None, repr=False)
    density: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def debye(cls, omega_d: float) -> "SpectralDistribution":
        if not (math.isfinite(omega_d) and omega_d > 0):
            raise DomainError(f"Debye frequency must be > 0, got {omega_d}")
        return cls(kind=DEBYE, omega_max=float(omega_d))

    @classmethod
    def tabulated(cls, omegas: Sequence[float], p: Sequence[float]) -> "SpectralDistribution":
        """Piecewise-linear density through the samples, renormalized by the trapezoid rule"""
        grid = np.asarray(omegas, dtype=float)
        values = np.asarray(p, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise DomainError("tabulated distribution needs two equal-length columns with at least 2 rows")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(values))):
            raise DomainError("tabulated distribution contains non-finite values")
        if grid[0] < 0:
            raise DomainError(f"tabulated frequencies must be >= 0, got {grid[0]}")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("tabulated frequencies must be strictly increasing")
        if np.any(values < 0):
            raise DomainError("tabulated density has negative entries")
        norm = float(integrate.trapezoid(values, grid))
        if not norm > 0:
            raise DomainError("tabulated density integrates to zero")
        return cls(kind=TABULATED, omega_max=float(grid[-1]), omega_grid=grid, density=values / norm)

    @classmethod
    def uniform(cls, omega_max: float) -> "SpectralDistribution":
        """Flat density 1/omega_max on [0, omega_max]"""
        if not (math.isfinite(omega_max) and omega_max > 0):
            raise DomainError(f"omega_max must be > 0, got {omega_max}")
        return cls.tabulated([0.0, omega_max], [1.0, 1.0])

    @property
    def is_debye(self) -> bool:
        return self.kind == DEBYE

    def pdf(self, omega):
        w = np.asarray(omega, dtype=float)
        if self.is_debye:
            inside = (w >= 0) & (w <= self.omega_max)
            value = np.where(inside, 3.0 * w * w / self.omega_max ** 3, 0.0)
        else:
            value = np.interp(w, self.omega_grid, self.density, left=0.0, right=0.0)
        if np.ndim(value) == 0:
            return float(value)
        return value

    def breakpoints(self, limit: int = 50) -> Optional[list]:
        """Interior kinks of a short tabulation, for quadrature hints"""
        if self.is_debye or self.omega_grid.size > limit:
            return None
        return list(self.omega_grid[1:-1])

    def integral_of_square(self) -> float:
        """integral p^2 dw, exact for the piecewise-linear interpolant"""
        if self.is_debye:
            return 9.0 / (5.0 * self.omega_max)
        h = np.diff(self.omega_grid)
        p0, p1 = self.density[:-1], self.density[1:]
        return float(np.sum(h / 3.0 * (p0 * p0 + p0 * p1 + p1 * p1)))


def load_distribution_csv(path: PathLike) -> SpectralDistribution:
    """Read an `omega,p` table"""
    omegas, p = read_columns(path, ("omega", "p"))
    return SpectralDistribution.tabulated(omegas, p)


def _double_average(kernel, dist: SpectralDistribution, settings: QuadratureSettings, peaked: bool = False) -> float:
    """integral integral p(x) p(y) kernel(x, y) dx dy over the support"""
    top = dist.omega_max
    kinks = dist.breakpoints() or []

    def inner(x):
        points = kinks + [x] if peaked else kinks
        return integrate_adaptive(lambda y: dist.pdf(y) * kernel(x, y), 0.0, top, settings, points=points)

    return integrate_adaptive(lambda x: dist.pdf(x) * inner(x), 0.0, top, settings, points=kinks)


def _inverse_sum_moment(dist: SpectralDistribution, x: np.ndarray) -> np.ndarray:
    """
    integral p(y) / (x + y) dy for each x > 0, exact for the piecewise-linear density.

    On a segment of width h starting at y_j the integral is
    p_j L + (p_{j+1} - p_j)(1 - L / u) with u = h / (x + y_j) and L = log1p(u).
    """
    y = dist.omega_grid
    p = dist.density
    h = np.diff(y)
    out = np.empty(x.size)
    rows = max(1, _CHUNK_ELEMENTS // h.size)
    for start in range(0, x.size, rows):
        s = x[start:start + rows, None] + y[None, :-1]
        u = h[None, :] / s
        log_ratio = np.log1p(u)
        terms = p[None, :-1] * log_ratio + np.diff(p)[None, :] * (1.0 - log_ratio / u)
        out[start:start + rows] = terms.sum(axis=1)
    return out


def _tabulated_cross_average(dist: SpectralDistribution, settings: QuadratureSettings) -> float:
    """integral integral p(x) p(y) / 2(x + y) for a tabulated density"""
    y = dist.omega_grid
    # The first segment may touch x + y = 0, where the moment has a log singularity.
    head = integrate_adaptive(
        lambda x: dist.pdf(x) * _inverse_sum_moment(dist, np.array([x]))[0],
        y[0], y[1], settings,
    )
    if y.size == 2:
        return 0.5 * head
    nodes, weights = np.polynomial.legendre.leggauss(_GAUSS_ORDER)
    mid = 0.5 * (y[1:-1] + y[2:])
    half = 0.5 * (y[2:] - y[1:-1])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    tail = float(np.sum(w * dist.pdf(x) * _inverse_sum_moment(dist, x)))
    return 0.5 * (head + tail)


def averaged_cross_coefficient(dist: SpectralDistribution, settings: Optional[QuadratureSettings] = None) -> float:
    """
    Dimensionless c_av with <q_a q_b>^av = c_av hbar beta / omega_max.
    Debye: 9 ln(4/e) / 10. Tabulated densities are integrated in closed form
    over one frequency and by quadrature over the other.
    """
    if dist.is_debye:
        return 0.9 * ln_four_over_e()
    settings = settings or QuadratureSettings(rel_tol=1e-10)
    value = _tabulated_cross_average(dist, settings)
    logger.debug(f"[Ensemble] tabulated cross average over {dist.omega_grid.size} points: {value:.12e}")
    return value * dist.omega_max


def averaged_cross_expectation(
    dist: SpectralDistribution,
    beta: float,
    settings: Optional[QuadratureSettings] = None,
) -> float:
    """Frequency-averaged leading-order <q_a q_b> = <hbar beta / (2 (w_a + w_b))>"""
    if beta == 0:
        return 0.0
    return averaged_cross_coefficient(dist, settings) * HBAR * beta / dist.omega_max


def averaged_pair_noise_dc(dist: SpectralDistribution) -> float:
    """
    Damping-independent dc level of the averaged pair-noise spectrum,
    (pi hbar^2 / 4) integral p^2; 9 pi hbar^2 / (20 w_D) for Debye.

    Raises:
        DivergenceError: the density is too concentrated for integral p^2 to be meaningful
    """
    square = dist.integral_of_square()
    if not math.isfinite(square) or dist.omega_max * square > DIVERGENCE_LIMIT:
        raise DivergenceError(
            f"integral of p^2 is {square:.3e} for support {dist.omega_max:.3e}; density is delta-like"
        )
    return 0.25 * math.pi * HBAR * HBAR * square


def averaged_pair_noise_dc_finite_gamma(
    dist: SpectralDistribution,
    gamma: float,
    settings: Optional[QuadratureSettings] = None,
) -> float:
    """Double average of the pair-noise spectrum at w = 0 with both damping rates equal to gamma"""
    if not (math.isfinite(gamma) and gamma > 0):
        raise DomainError(f"gamma must be > 0, got {gamma}")
    if gamma >= 0.1 * dist.omega_max:
        logger.warning(f"[Ensemble] gamma = {gamma:.3e} is not small against omega_max = {dist.omega_max:.3e}")
    settings = settings or QuadratureSettings(rel_tol=1e-8, max_subdivisions=500)
    quarter_g2 = 0.25 * gamma * gamma

    def kernel(x, y):
        wb_x = math.sqrt(max(x * x - quarter_g2, 0.0))
        wb_y = math.sqrt(max(y * y - quarter_g2, 0.0))
        return float(pair_noise_spectrum_kernel(wb_x, wb_y, gamma, 0.0))

    value = _double_average(kernel, dist, settings, peaked=True)
    logger.debug(f"[Ensemble] finite-gamma dc noise at gamma={gamma:.3e}: {value:.10e}")
    return value


def extrapolate_zero_gamma(gammas: Sequence[float], values: Sequence[float]) -> float:
    """
    gamma -> 0 limit of the finite-gamma dc noise from V(g) = V0 + a g ln g + b g.
    The g ln g term comes from the hard upper edge of the density. Three points give
    an exact solve; more are fitted by least squares.
    """
    g = np.asarray(gammas, dtype=float)
    v = np.asarray(values, dtype=float)
    if g.size < 3 or g.shape != v.shape:
        raise DomainError("extrapolation needs at least three (gamma, value) pairs")
    if np.any(g <= 0):
        raise DomainError("gammas must be > 0")
    design = np.column_stack((np.ones_like(g), g * np.log(g), g))
    if g.size == 3:
        coefficients = np.linalg.solve(design, v)
    else:
        coefficients = np.linalg.lstsq(design, v, rcond=None)[0]
    return float(coefficients[0])
