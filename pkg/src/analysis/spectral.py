"""
Truncated-grid functions and the Fourier transform f^(y) = int f(x) e^{-2 pi i x.y} dx.

A GridFunction holds complex samples at origin + k * h on each axis, with
h = R / N. The forward transform lands on the dual grid with spacing 1 / R
and origin -N / (2R); both directions are separable FFTs with the phase and
scale factors that make them match the continuous convention.
"""

from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple
import logging
import math

import numpy as np
from scipy import fft as sp_fft

from models.data_models import EnergyReport
from models.sets import MeasurableSet, IntervalSet, BoxSet

logger = logging.getLogger(__name__)

DOMAINS = ['space', 'frequency']


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Sample count N (per axis), extent R (per axis) and dimension d."""
    n: int
    extent: float
    dimension: int = 1

    def __post_init__(self):
        """Validate grid parameters after initialization."""
        if not _is_power_of_two(self.n):
            raise ValueError("Grid size N must be a power of two, got {}".format(self.n))
        if not (self.extent > 0 and math.isfinite(self.extent)):
            raise ValueError("Grid extent R must be positive and finite")
        if self.dimension < 1:
            raise ValueError("Grid dimension must be at least 1")

    @property
    def spacing(self) -> float:
        return self.extent / self.n

    def axes(self) -> List[np.ndarray]:
        axis = -self.extent / 2.0 + self.spacing * np.arange(self.n)
        return [axis] * self.dimension

    def refined(self) -> 'GridSpec':
        """Same extent, twice the samples."""
        return replace(self, n=2 * self.n)


def parse_grid(spec: str) -> GridSpec:
    """Parse 'N=4096,R=64[,d=1]'."""
    try:
        params = dict(item.split('=', 1) for item in spec.replace(' ', '').split(',') if item)
        return GridSpec(n=int(params['N']), extent=float(params['R']), dimension=int(params.get('d', 1)))
    except (KeyError, ValueError) as e:
        raise ValueError("Invalid grid spec '{}': {}".format(spec, e))


@dataclass
class GridFunction:
    """
    Complex samples of a function on a uniform truncated grid.

    Attributes:
        values: Complex array with one power-of-two axis per dimension
        extent: Extent R per axis
        origin: Coordinate of sample 0 per axis (defaults to -R/2)
        domain: 'space' or 'frequency'
        conjugate_origin: Origin of the grid this one was transformed from
    """
    values: np.ndarray
    extent: Tuple[float, ...]
    origin: Optional[Tuple[float, ...]] = None
    domain: str = 'space'
    conjugate_origin: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        """Validate the grid after initialization."""
        self.values = np.asarray(self.values, dtype=complex)
        self.extent = tuple(float(r) for r in np.atleast_1d(self.extent))
        if len(self.extent) == 1 and self.values.ndim > 1:
            self.extent = self.extent * self.values.ndim
        if len(self.extent) != self.values.ndim:
            raise ValueError("Need one extent per axis: {} axes, {} extents".format(
                self.values.ndim, len(self.extent)))
        for n in self.values.shape:
            if not _is_power_of_two(n):
                raise ValueError("Sample counts must be powers of two, got shape {}".format(self.values.shape))
        if any(r <= 0 for r in self.extent):
            raise ValueError("Extents must be positive")
        if self.origin is None:
            self.origin = tuple(-r / 2.0 for r in self.extent)
        self.origin = tuple(float(o) for o in np.atleast_1d(self.origin))
        if len(self.origin) != self.values.ndim:
            raise ValueError("Need one origin per axis")
        if self.domain not in DOMAINS:
            raise ValueError("domain must be one of: {}".format(", ".join(DOMAINS)))
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Grid samples must be finite")

    @classmethod
    def sample(cls, func: Callable, grid: GridSpec, domain: str = 'space') -> 'GridFunction':
        """Evaluate func on the grid; func receives one coordinate array per axis."""
        mesh = np.meshgrid(*grid.axes(), indexing='ij')
        return cls(np.asarray(func(*mesh), dtype=complex), (grid.extent,) * grid.dimension, domain=domain)

    @property
    def dimension(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple(r / n for r, n in zip(self.extent, self.shape))

    @property
    def axes(self) -> List[np.ndarray]:
        return [o + h * np.arange(n) for o, h, n in zip(self.origin, self.spacing, self.shape)]

    def mesh(self) -> List[np.ndarray]:
        return np.meshgrid(*self.axes, indexing='ij')

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def norm_sq(self) -> float:
        """Quadrature of |f|^2 with weight h^d."""
        return float(np.sum(np.abs(self.values) ** 2) * self.cell_volume)

    def with_values(self, values: np.ndarray) -> 'GridFunction':
        return replace(self, values=np.asarray(values, dtype=complex))

    def domain_set(self) -> MeasurableSet:
        """Union of the sample cells [x - h/2, x + h/2): the truncated domain."""
        lo = [o - h / 2.0 for o, h in zip(self.origin, self.spacing)]
        hi = [o + r - h / 2.0 for o, r, h in zip(self.origin, self.extent, self.spacing)]
        if self.dimension == 1:
            return IntervalSet([(lo[0], hi[0])])
        return BoxSet([(lo, hi)], dimension=self.dimension)

    def matches(self, other: 'GridFunction') -> bool:
        """Same shape, extents, origins and domain."""
        return (self.shape == other.shape and self.domain == other.domain
                and np.allclose(self.extent, other.extent, rtol=1e-12)
                and np.allclose(self.origin, other.origin, rtol=1e-12, atol=1e-12))


def _cis(sign: int, cycles) -> np.ndarray:
    # Reduce to one turn before scaling by 2 pi; phases reach 10^5 cycles on fine grids.
    return np.exp(sign * 2j * np.pi * np.mod(cycles, 1.0))


def _transform_axis(values: np.ndarray, axis: int, z0: float, dz: float, v0: float,
                    dv: float, sign: int, weight: float) -> np.ndarray:
    """out_m = weight * sum_k in_k exp(sign 2 pi i (z0 + k dz)(v0 + m dv)) along one axis."""
    n = values.shape[axis]
    k = np.arange(n)
    shape = [1] * values.ndim
    shape[axis] = n
    pre = _cis(sign, k * dz * v0).reshape(shape)
    post = (weight * _cis(sign, z0 * v0) * _cis(sign, z0 * k * dv)).reshape(shape)
    if sign < 0:
        core = sp_fft.fft(values * pre, axis=axis)
    else:
        core = sp_fft.ifft(values * pre, axis=axis) * n
    return core * post


def forward_transform(f: GridFunction) -> GridFunction:
    """
    Transform from the space grid to the dual frequency grid.

    Returns:
        GridFunction with domain 'frequency', spacing 1/R and origin -N/(2R)
    """
    values = f.values
    dual_extent, dual_origin = [], []
    for axis, (r, n, z0) in enumerate(zip(f.extent, f.shape, f.origin)):
        dz, dv = r / n, 1.0 / r
        v0 = -n / (2.0 * r)
        values = _transform_axis(values, axis, z0, dz, v0, dv, -1, dz)
        dual_extent.append(n / r)
        dual_origin.append(v0)
    return GridFunction(values, tuple(dual_extent), tuple(dual_origin), domain='frequency',
                        conjugate_origin=tuple(f.origin))


def inverse_transform(F: GridFunction, origin: Optional[Tuple[float, ...]] = None) -> GridFunction:
    """
    Transform from the frequency grid back to the space grid.

    Args:
        F: Frequency-domain samples
        origin: Space-grid origin; defaults to the grid F was computed from,
            or -R/2 when unknown

    Returns:
        GridFunction with domain 'space'
    """
    if origin is None:
        origin = F.conjugate_origin
    extents = [n / w for n, w in zip(F.shape, F.extent)]
    if origin is None:
        origin = tuple(-r / 2.0 for r in extents)
    values = F.values
    for axis, (r, n, v0, x0) in enumerate(zip(extents, F.shape, F.origin, origin)):
        dv, dx = 1.0 / r, r / n
        values = _transform_axis(values, axis, v0, dv, x0, dx, +1, dv)
    return GridFunction(values, tuple(extents), tuple(origin), domain='space',
                        conjugate_origin=tuple(F.origin))


def _check_within(f: GridFunction, region: MeasurableSet, label: str) -> None:
    if region.dimension != f.dimension:
        raise ValueError("{} has dimension {} but the grid has dimension {}".format(
            label, region.dimension, f.dimension))
    box = region.bounding_box()
    if box is None:
        return
    hull = f.domain_set().bounding_box()
    tol = 1e-9 * max(f.extent)
    below = hull[0] - box[0]
    above = box[1] - hull[1]
    if np.any(below > tol) or np.any(above > tol):
        overhang = ["axis {}: [{:.6g}, {:.6g}] outside [{:.6g}, {:.6g}]".format(
            i, box[0][i], box[1][i], hull[0][i], hull[1][i])
            for i in range(f.dimension) if below[i] > tol or above[i] > tol]
        raise ValueError("{} extends beyond the {} grid: {}".format(label, f.domain, "; ".join(overhang)))


def set_weights(f: GridFunction, region: MeasurableSet, label: str = "Set") -> np.ndarray:
    """Cell coverage of region on f's grid after checking it fits inside the grid."""
    _check_within(f, region, label)
    return np.clip(region.cell_weights(f.axes), 0.0, 1.0)


def energy_split(f: GridFunction, region: MeasurableSet) -> EnergyReport:
    """
    Split int |f|^2 into the part over region and the part over its in-domain complement.

    Raises:
        ValueError: If the region reaches outside the grid (the overhang is listed)
    """
    weights = set_weights(f, region)
    density = np.abs(f.values) ** 2 * f.cell_volume
    on_set = float(np.sum(weights * density))
    off_set = float(np.sum((1.0 - weights) * density))
    total = float(np.sum(density))
    return EnergyReport(total=total, on_set=on_set, off_set=off_set)


def uncertainty_defect(f: GridFunction, E: MeasurableSet, Sigma: MeasurableSet) -> float:
    """
    ||f||^2 / (int_{E^c} |f|^2 + int_{Sigma^c} |f^|^2) for one instance.

    Returns:
        The empirical constant; inf when the denominator underflows

    Raises:
        ValueError: For the zero function or sets outside the grids
    """
    total = f.norm_sq()
    if total == 0.0:
        raise ValueError("uncertainty_defect is undefined for the zero function")
    off_e = energy_split(f, E).off_set
    off_sigma = energy_split(forward_transform(f), Sigma).off_set
    denominator = off_e + off_sigma
    if denominator <= total * 1e-300:
        logger.debug("Denominator underflow for defect; returning inf")
        return math.inf
    return total / denominator
