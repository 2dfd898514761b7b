"""
Smooth dyadic partition of unity and the mollifiers built from it.

psi0(x) = q(|x|) is a radial cutoff equal to 1 on the unit ball and 0
outside the ball of radius 2, with q built from the smooth step
theta(t) = B(t) / (B(t) + B(1 - t)), B(t) = exp(-1/t). The partition terms
psi_j(x) = psi0(x / 2^j) - psi0(x / 2^(j-1)) telescope to psi0(x / 2^J).
phi is the inverse transform of psi0; it is computed once on a fine grid and
cached as a cubic spline, and the scaled family phi_j has the closed-form
transform phi_j^(y) = psi0(rho1(2^j) y / C1).
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple
import logging
import math

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline

from analysis.decay_fits import NOISE_FLOOR, fit_loglog_slope, integrate_abs, window_maxima
from analysis.spectral import GridFunction, forward_transform, inverse_transform
from models.data_models import RadialProfile
from models.radius import CompatiblePair, RadiusFunction, power_radius

logger = logging.getLogger(__name__)

# Samples per unit on the frequency side; psi0 changes on unit scales.
MIN_RESOLUTION = 256
ALIAS_TOLERANCE = 1e-8

# d = 1: frequency window [-256, 256) gives x spacing 1/512.
FREQUENCY_EXTENT = 512.0
# d = 2: phi is tabulated on 0 <= s <= RADIAL_EXTENT.
RADIAL_EXTENT = 48.0
HANKEL_NODES = 512
# The outer quarter of the table is the alias/truncation tail.
TAIL_START = 0.75

PROFILE_FIT = (4.0, 64.0)
PROFILE_WINDOW = 2.0
PROFILE_LIMITS = (64.0, 128.0)


def smooth_step(t) -> np.ndarray:
    """theta(t): 0 for t <= 0, 1 for t >= 1, C-infinity and increasing in between."""
    t = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t)
    out = np.where(flat >= 1.0, 1.0, 0.0)
    mid = (flat > 0.0) & (flat < 1.0)
    u = flat[mid]
    # B(t) / (B(t) + B(1 - t)) rewritten as a logistic of a decreasing exponent
    # keeps the sampled step monotone under rounding.
    with np.errstate(over='ignore'):
        out[mid] = 1.0 / (1.0 + np.exp(1.0 / u - 1.0 / (1.0 - u)))
    return out.reshape(t.shape)[()]


def cutoff_profile(r) -> np.ndarray:
    """q(r) = theta(2 - r): 1 on [0, 1], 0 on [2, inf), non-increasing."""
    return smooth_step(2.0 - np.asarray(r, dtype=float))


def default_j_max(extent: float, dimension: int = 1) -> int:
    """Smallest j with 2^(j+1) >= R sqrt(d), the largest |x| on the truncated domain."""
    reach = extent * math.sqrt(dimension)
    return max(0, int(math.ceil(math.log2(reach / 2.0))))


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass
class MollifierSystem:
    """
    psi0, the dyadic partition, phi and the scaled family phi_j for one rho1, C1.

    Attributes:
        rho1: Space-side radius function
        c1: Constant C1 > 0
        dimension: Ambient dimension
        j_max: Truncation level of the partition
        resolution: Frequency samples per unit used by build_phi
    """
    rho1: RadiusFunction
    c1: float = 1.0
    dimension: int = 1
    j_max: int = 5
    resolution: int = MIN_RESOLUTION
    phi_nodes: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    phi_values: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    phi_integral: float = field(default=math.nan, init=False)
    phi_l1: float = field(default=math.nan, init=False)
    tail_fraction: float = field(default=math.nan, init=False)
    envelope: Dict = field(default_factory=dict, init=False)
    _spline: Optional[CubicSpline] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        """Validate parameters after initialization."""
        if not (self.c1 > 0 and math.isfinite(self.c1)):
            raise ValueError("C1 must be positive and finite, got {}".format(self.c1))
        if self.dimension < 1:
            raise ValueError("Dimension must be at least 1")
        if self.j_max < 0:
            raise ValueError("j_max must be non-negative")

    @classmethod
    def from_pair(cls, pair: CompatiblePair, dimension: int = 1, extent: float = 64.0,
                  j_max: Optional[int] = None, resolution: int = MIN_RESOLUTION) -> 'MollifierSystem':
        """System for the space side of a pair on a grid of extent R."""
        if j_max is None:
            j_max = default_j_max(extent, dimension)
        return cls(pair.rho1, pair.c1, dimension, j_max, resolution)

    def _norm(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dimension == 1:
            return np.abs(x)
        if x.shape[-1] != self.dimension:
            raise ValueError("Points need a trailing axis of length {}, got shape {}".format(
                self.dimension, x.shape))
        return np.linalg.norm(x, axis=-1)

    def q(self, r) -> np.ndarray:
        return cutoff_profile(r)

    def psi0(self, x) -> np.ndarray:
        return cutoff_profile(self._norm(x))

    def partition_term(self, j: int, x) -> np.ndarray:
        """psi_j(x); supported in 2^(j-1) <= |x| <= 2^(j+1) for j >= 1."""
        if j < 0:
            raise ValueError("Partition level must be non-negative, got {}".format(j))
        r = self._norm(x)
        if j == 0:
            return cutoff_profile(r)
        return cutoff_profile(r / 2.0 ** j) - cutoff_profile(r / 2.0 ** (j - 1))

    def partition_sum(self, x, j_max: Optional[int] = None) -> np.ndarray:
        """Sum of psi_0 .. psi_J; equals 1 on |x| <= 2^J."""
        j_max = self.j_max if j_max is None else j_max
        return sum(self.partition_term(j, x) for j in range(j_max + 1))

    def scale(self, j: int) -> float:
        """s_j = C1 / rho1(2^j), so that phi_j(x) = s_j^d phi(s_j x)."""
        if j < -1:
            raise ValueError("Mollifier level must be at least -1, got {}".format(j))
        return self.c1 / self.rho1(2.0 ** j)

    def hat_phi_j(self, j: int, y) -> np.ndarray:
        """phi_j^(y) = psi0(rho1(2^j) y / C1): 1 for |y| <= s_j, 0 for |y| >= 2 s_j."""
        return cutoff_profile(self._norm(y) / self.scale(j))

    def _build_line(self, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
        n = int(FREQUENCY_EXTENT * resolution)
        y = -FREQUENCY_EXTENT / 2.0 + np.arange(n) / resolution
        psi = GridFunction(cutoff_profile(np.abs(y)), (FREQUENCY_EXTENT,), domain='frequency')
        phi = inverse_transform(psi, origin=(-resolution / 2.0,))
        return phi.axes[0], phi.values.real

    def _build_radial(self, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
        # phi(s) = 2 pi int_0^2 q(r) J0(2 pi r s) r dr; the plateau on [0, 1] is closed form.
        s = np.arange(int(RADIAL_EXTENT * resolution) + 1) / resolution
        nodes, weights = np.polynomial.legendre.leggauss(HANKEL_NODES)
        r = 1.5 + 0.5 * nodes
        w = 0.5 * weights * cutoff_profile(r) * r
        shoulder = np.empty_like(s)
        for start in range(0, s.size, 1024):
            chunk = s[start:start + 1024]
            shoulder[start:start + 1024] = 2 * math.pi * special.j0(2 * math.pi * np.outer(chunk, r)) @ w
        plateau = np.full_like(s, math.pi)
        nonzero = s > 0
        plateau[nonzero] = special.j1(2 * math.pi * s[nonzero]) / s[nonzero]
        return s, plateau + shoulder

    def build_phi(self, resolution: Optional[int] = None) -> 'MollifierSystem':
        """
        Compute and cache phi = inverse transform of psi0.

        d = 1 uses the FFT-based inverse transform on a frequency grid with
        `resolution` samples per unit; d = 2 tabulates the radial profile by
        a Hankel transform on a radial grid of the same density.

        Args:
            resolution: Samples per unit, a power of two >= 256

        Returns:
            self, with phi cached and the envelope fit recorded

        Raises:
            ValueError: If the resolution is too coarse, the dimension is
                unsupported, or the tail mass shows aliasing
        """
        resolution = self.resolution if resolution is None else int(resolution)
        if resolution < MIN_RESOLUTION or not _is_power_of_two(resolution):
            raise ValueError("phi resolution must be a power of two >= {} samples per unit, got {}".format(
                MIN_RESOLUTION, resolution))
        if self.dimension == 1:
            nodes, values = self._build_line(resolution)
            h = 1.0 / FREQUENCY_EXTENT
            self.phi_integral = float(np.sum(values) * h)
            self.phi_l1 = float(np.sum(np.abs(values)) * h)
            tail = np.abs(nodes) > TAIL_START * resolution / 2.0
            tail_mass = float(np.sum(np.abs(values[tail])) * h)
            positive = nodes >= 0
            radial_nodes, radial_values = nodes[positive], values[positive]
        elif self.dimension == 2:
            nodes, values = self._build_radial(resolution)
            self.phi_integral = float(2 * math.pi * integrate.simpson(values * nodes, x=nodes))
            self.phi_l1 = float(2 * math.pi * integrate.simpson(np.abs(values) * nodes, x=nodes))
            tail = nodes > TAIL_START * RADIAL_EXTENT
            tail_mass = float(2 * math.pi * integrate.simpson(np.abs(values[tail]) * nodes[tail], x=nodes[tail]))
            radial_nodes, radial_values = nodes, values
        else:
            raise ValueError("phi is tabulated for d = 1 and d = 2 only, got d = {}".format(self.dimension))

        self.tail_fraction = tail_mass / self.phi_l1
        if self.tail_fraction > ALIAS_TOLERANCE:
            logger.error("phi tail fraction {:.3g} exceeds {:g}".format(self.tail_fraction, ALIAS_TOLERANCE))
            raise ValueError("Aliasing detected in phi (tail fraction {:.3g}); use a finer grid than {} per unit".format(
                self.tail_fraction, resolution))

        self.resolution = resolution
        self.phi_nodes = nodes
        self.phi_values = values
        self._spline = CubicSpline(nodes, values)
        self.envelope = self._fit_envelope(radial_nodes, radial_values)
        logger.debug("phi built: d={}, phi(0)={:.6f}, l1={:.6f}, envelope slope {:.2f}".format(
            self.dimension, float(self.phi(np.zeros(self.dimension) if self.dimension > 1 else 0.0)),
            self.phi_l1, self.envelope.get('slope', math.nan)))
        return self

    def _fit_envelope(self, r: np.ndarray, values: np.ndarray) -> Dict:
        magnitude = np.abs(values)
        reach = TAIL_START * r.max()
        centers, maxima = window_maxima(r, magnitude, 2.0, reach, 1.0)
        fit = fit_loglog_slope(centers, maxima, floor=NOISE_FLOOR * magnitude.max())
        if 'error' in fit:
            logger.warning("Envelope fit for phi failed: {}".format(fit['error']))
        fit['constant'] = float(np.max(magnitude * (1.0 + r) ** (2 * self.dimension)))
        return fit

    @property
    def is_built(self) -> bool:
        return self._spline is not None

    def _ensure_built(self) -> None:
        if not self.is_built:
            self.build_phi()

    def phi(self, x) -> np.ndarray:
        """phi(x) from the cached spline; zero outside the tabulated range."""
        self._ensure_built()
        r = np.asarray(x, dtype=float) if self.dimension == 1 else self._norm(x)
        lo, hi = self.phi_nodes[0], self.phi_nodes[-1]
        inside = (r >= lo) & (r <= hi)
        return np.where(inside, self._spline(np.clip(r, lo, hi)), 0.0)

    def phi_j(self, j: int, x) -> np.ndarray:
        """phi_j(x) = s_j^d phi(s_j x)."""
        s = self.scale(j)
        return s ** self.dimension * self.phi(s * np.asarray(x, dtype=float))

    def export_phi(self, file_path: str) -> None:
        """Write the phi table and the parameters that produced it to a .npz file."""
        self._ensure_built()
        np.savez(file_path, nodes=self.phi_nodes, values=self.phi_values,
                 dimension=self.dimension, resolution=self.resolution, c1=self.c1,
                 j_max=self.j_max, rho1=self.rho1.label, phi_l1=self.phi_l1,
                 phi_integral=self.phi_integral)
        logger.info("Exported phi table ({} nodes) to {}".format(self.phi_nodes.size, file_path))

    def radial_profile_decay(self) -> RadialProfile:
        """
        p(t) = transform of |phi| along a ray, its derivative and a log-log fit of |p'|.

        The fit uses window maxima of |p'| on [4, 64]; when the maxima reach
        the noise floor the window is halved until three points remain.

        Returns:
            RadialProfile with the slope and the partial integrals of |p'|
            up to 64 and 128

        Raises:
            ValueError: In d != 1, or when no usable window is left
        """
        if self.dimension != 1:
            raise ValueError("The radial profile is computed in d = 1 only")
        self._ensure_built()
        space = GridFunction(np.abs(self.phi_values), (float(self.resolution),), origin=(self.phi_nodes[0],))
        transform = forward_transform(space)
        t_all = transform.axes[0]
        keep = (t_all >= 0) & (t_all <= PROFILE_LIMITS[1])
        t = t_all[keep]
        p = transform.values.real[keep]
        dp = np.gradient(p, t, edge_order=2)

        floor = NOISE_FLOOR * abs(p[0])
        lo, hi = PROFILE_FIT
        while True:
            centers, maxima = window_maxima(t, dp, lo, hi, PROFILE_WINDOW)
            fit = fit_loglog_slope(centers, maxima, floor=floor)
            if 'error' not in fit and np.all(maxima > floor):
                break
            if hi / 2.0 <= lo + 2 * PROFILE_WINDOW:
                raise ValueError("p' is below the noise floor on every window from t = {:g}".format(lo))
            hi /= 2.0
            logger.warning("p' reached the noise floor; shrinking the fit window to [{:g}, {:g}]".format(lo, hi))

        partial = {limit: integrate_abs(t, dp, limit) for limit in PROFILE_LIMITS}
        return RadialProfile(t=t, p=p, dp=dp, slope=fit['slope'], intercept=fit['intercept'],
                             fit_window=(lo, hi), partial_integrals=partial)


def build_psi0(rho1: Optional[RadiusFunction] = None, c1: float = 1.0, dimension: int = 1,
               j_max: int = 5, resolution: int = MIN_RESOLUTION) -> MollifierSystem:
    """A mollifier system; rho1 defaults to min(1/t, 1)."""
    return MollifierSystem(rho1 if rho1 is not None else power_radius(1.0), c1, dimension, j_max, resolution)


def partition_term(system: MollifierSystem, j: int, x) -> np.ndarray:
    return system.partition_term(j, x)


def build_phi(system: MollifierSystem, resolution: Optional[int] = None) -> MollifierSystem:
    return system.build_phi(resolution)


def hat_phi_j(system: MollifierSystem, j: int, y) -> np.ndarray:
    return system.hat_phi_j(j, y)


def radial_profile_decay(system: MollifierSystem) -> RadialProfile:
    return system.radial_profile_decay()


def test_mollifier():
    """Build phi in d = 1 and print its constants."""
    print("Testing Mollifier Module")
    print("=" * 50)

    system = build_psi0().build_phi()
    print("phi(0) = {:.6f}, int phi = {:.10f}, ||phi||_1 = {:.6f}".format(
        float(system.phi(0.0)), system.phi_integral, system.phi_l1))
    print("Envelope slope: {:.2f}".format(system.envelope['slope']))
    profile = system.radial_profile_decay()
    print("p' slope on [{:g}, {:g}]: {:.3f}".format(profile.fit_window[0], profile.fit_window[1], profile.slope))
    print("\nMollifier module test completed successfully!")


if __name__ == "__main__":
    test_mollifier()
