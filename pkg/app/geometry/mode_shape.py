"""
Cantilever mode shapes and the effective mode length l, defined by
1/l = integral_0^L (d phi/dz)^2 dz with phi(0) = 0 and phi(L) = 1.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from app.errors import DomainError
from app.numerics.specfun import QuadratureSettings, integrate_adaptive
from app.numerics.tables import PathLike, read_columns

logger = logging.getLogger(__name__)

LINEAR = "linear"
EULER_BERNOULLI = "euler_bernoulli"
TABULATED = "tabulated"

MAX_MODE_INDEX = 20
ENDPOINT_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class ModeShape:
    """Mode shape of a cantilever of length L (m), normalized so phi(L) = 1"""
    kind: str
    length: float
    mode_index: int = 1
    z: Optional[np.ndarray] = field(default=None, repr=False)
    phi: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.length) and self.length > 0):
            raise DomainError(f"cantilever length must be > 0, got {self.length}")
        if self.kind not in (LINEAR, EULER_BERNOULLI, TABULATED):
            raise DomainError(f"unknown mode shape kind {self.kind!r}")
        if self.kind == EULER_BERNOULLI and not (1 <= self.mode_index <= MAX_MODE_INDEX):
            raise DomainError(f"mode_index must be in 1..{MAX_MODE_INDEX}, got {self.mode_index}")

    @classmethod
    def linear(cls, length: float) -> "ModeShape":
        return cls(kind=LINEAR, length=length)

    @classmethod
    def euler_bernoulli(cls, length: float, mode_index: int = 1) -> "ModeShape":
        return cls(kind=EULER_BERNOULLI, length=length, mode_index=int(mode_index))

    @classmethod
    def tabulated(cls, z: Sequence[float], phi: Sequence[float], length: Optional[float] = None) -> "ModeShape":
        """
        Sampled shape on [0, L]. Raises DomainError unless phi(0) = 0 and
        phi(L) = 1 within 1e-6 and z spans [0, L].
        """
        zs = np.asarray(z, dtype=float)
        ps = np.asarray(phi, dtype=float)
        if zs.ndim != 1 or zs.shape != ps.shape or zs.size < 3:
            raise DomainError("tabulated mode shape needs two equal-length columns with at least 3 rows")
        if np.any(np.diff(zs) <= 0):
            raise DomainError("mode shape positions must be strictly increasing")
        length = float(zs[-1]) if length is None else float(length)
        if abs(zs[0]) > ENDPOINT_TOLERANCE * length or abs(zs[-1] - length) > ENDPOINT_TOLERANCE * length:
            raise DomainError(f"mode shape positions must span [0, {length}], got [{zs[0]}, {zs[-1]}]")
        if abs(ps[0]) > ENDPOINT_TOLERANCE:
            raise DomainError(f"mode shape must vanish at the clamp, phi(0) = {ps[0]}")
        if abs(ps[-1] - 1.0) > ENDPOINT_TOLERANCE:
            raise DomainError(f"mode shape must be normalized to phi(L) = 1, got {ps[-1]}")
        return cls(kind=TABULATED, length=length, z=zs, phi=ps)


def clamped_free_root(mode_index: int) -> float:
    """n-th root of cos(x) cosh(x) + 1 = 0 (1.87510, 4.69409, ...)"""
    centre = (mode_index - 0.5) * math.pi
    return optimize.brentq(lambda x: math.cos(x) + 1.0 / math.cosh(x), centre - 0.6, centre + 0.6, xtol=1e-14)


def _euler_bernoulli_slope(root: float):
    """Unnormalized d phi / d xi for the clamped-free eigenfunction, xi = z / L"""
    # 1 - sigma written without the cosh - sinh cancellation
    denominator = math.sinh(root) + math.sin(root)
    one_minus_sigma = (math.sin(root) - math.cos(root) - math.exp(-root)) / denominator
    one_plus_sigma = 2.0 - one_minus_sigma
    sigma = 1.0 - one_minus_sigma

    def shape(xi):
        t = root * xi
        hyper = 0.5 * (one_minus_sigma * math.exp(t) + one_plus_sigma * math.exp(-t))
        return hyper - math.cos(t) + sigma * math.sin(t)

    def slope(xi):
        t = root * xi
        hyper = 0.5 * (one_minus_sigma * math.exp(t) - one_plus_sigma * math.exp(-t))
        return root * (hyper + math.sin(t) + sigma * math.cos(t))

    return shape, slope


def euler_bernoulli_shape(shape: ModeShape, z):
    """phi(z) for a clamped-free Euler-Bernoulli mode, normalized to phi(L) = 1"""
    root = clamped_free_root(shape.mode_index)
    raw, _ = _euler_bernoulli_slope(root)
    tip = raw(1.0)
    xi = np.atleast_1d(np.asarray(z, dtype=float)) / shape.length
    values = np.array([raw(x) for x in xi]) / tip
    return values if np.ndim(z) else float(values[0])


def mode_length(shape: ModeShape, settings: Optional[QuadratureSettings] = None) -> float:
    """Effective length l with 1/l = integral (phi')^2"""
    if shape.kind == LINEAR:
        return shape.length
    if shape.kind == EULER_BERNOULLI:
        settings = settings or QuadratureSettings(rel_tol=1e-12)
        root = clamped_free_root(shape.mode_index)
        raw, slope = _euler_bernoulli_slope(root)
        tip = raw(1.0)
        energy = integrate_adaptive(lambda xi: (slope(xi) / tip) ** 2, 0.0, 1.0, settings)
        l_value = shape.length / energy
        logger.debug(f"[ModeShape] Euler-Bernoulli mode {shape.mode_index}: root {root:.6f}, l/L = {l_value / shape.length:.6f}")
        return l_value
    gradient = np.gradient(shape.phi, shape.z)
    return 1.0 / float(integrate.trapezoid(gradient * gradient, shape.z))


def load_mode_shape_csv(path: PathLike, length: Optional[float] = None) -> ModeShape:
    """Read a `z,phi` table"""
    z, phi = read_columns(path, ("z", "phi"))
    return ModeShape.tabulated(z, phi, length)
