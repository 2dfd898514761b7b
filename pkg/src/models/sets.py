"""
Measurable-set models and epsilon-thinness certification.

Sets are finite unions of intervals (d=1), finite unions of axis-aligned
boxes (any d), lazily stored periodic interval lattices, or boolean grid
masks. Every representation answers the same questions: total measure,
measure of the intersection with a ball, fractional coverage of grid cells,
and quadrature nodes. Complements are always taken inside a truncated domain.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import logging
import math
import os

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import integrate, special

from models.data_models import ThinnessCertificate, INTERVAL_SET_SCHEMA, validate_dataframe_schema
from models.radius import RadiusFunction

logger = logging.getLogger(__name__)

METRICS = ['euclidean', 'sup']

# Intervals closer than this are merged when building from raw lists.
MERGE_TOL = 0.0


def ball_measure(d: int, r: float, metric: str = 'euclidean') -> float:
    """
    Measure of the d-dimensional ball of radius r.

    Args:
        d: Dimension
        r: Radius (r >= 0)
        metric: 'euclidean' for round balls, 'sup' for cubes of side 2r

    Returns:
        Volume of the ball
    """
    if d < 1:
        raise ValueError("Dimension must be at least 1")
    if r < 0:
        raise ValueError("Radius must be non-negative, got {}".format(r))
    if metric not in METRICS:
        raise ValueError("metric must be one of: {}".format(", ".join(METRICS)))
    if metric == 'sup' or d == 1:
        return (2.0 * r) ** d
    return math.pi ** (d / 2.0) / special.gamma(d / 2.0 + 1.0) * r ** d


def _as_point(x, d: int) -> np.ndarray:
    point = np.atleast_1d(np.asarray(x, dtype=float))
    if point.shape != (d,):
        raise ValueError("Point has dimension {} but the set has dimension {}".format(point.size, d))
    return point


def _cell_overlap(axis: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Length of [lo, hi] inside each cell [x - h/2, x + h/2) of a uniform axis."""
    h = axis[1] - axis[0] if axis.size > 1 else 1.0
    left = np.clip(axis - h / 2.0, lo, hi)
    right = np.clip(axis + h / 2.0, lo, hi)
    return right - left


def _axis_spacing(axis: np.ndarray) -> float:
    return float(axis[1] - axis[0]) if axis.size > 1 else 1.0


class MeasurableSet:
    """Common interface of every set representation."""

    dimension: int = 1

    def measure(self) -> float:
        raise NotImplementedError

    def is_empty(self) -> bool:
        return self.measure() == 0.0

    def bounding_box(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        raise NotImplementedError

    def intersect_ball_measure(self, x, r: float, metric: str = 'euclidean') -> float:
        raise NotImplementedError

    def ball_measures(self, centers: np.ndarray, radii: np.ndarray,
                      metric: str = 'euclidean') -> np.ndarray:
        """Intersection measures for many (center, radius) pairs at once."""
        centers = np.asarray(centers, dtype=float).reshape(len(radii), self.dimension)
        return np.array([self.intersect_ball_measure(c, r, metric) for c, r in zip(centers, radii)])

    def cell_weights(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Fraction of every grid cell covered by the set (cells centered on the axes)."""
        raise NotImplementedError

    def analytic_centers(self, rho: RadiusFunction) -> np.ndarray:
        """Centers where the thinness ratio is expected to peak; empty by default."""
        return np.zeros((0, self.dimension))


class IntervalSet(MeasurableSet):
    """Sorted, pairwise disjoint closed intervals on the line."""

    dimension = 1

    def __init__(self, intervals: Sequence[Tuple[float, float]] = ()):
        arr = np.asarray(list(intervals), dtype=float).reshape(-1, 2)
        if np.any(~np.isfinite(arr)):
            raise ValueError("Interval endpoints must be finite")
        if np.any(arr[:, 1] <= arr[:, 0]):
            raise ValueError("Every interval must satisfy lower < upper")
        if arr.shape[0] > 1 and np.any(arr[1:, 0] < arr[:-1, 1]):
            raise ValueError("Intervals must be sorted and pairwise disjoint")
        self.lower = arr[:, 0].copy()
        self.upper = arr[:, 1].copy()
        lengths = self.upper - self.lower
        self._prefix = np.concatenate([[0.0], np.cumsum(lengths)])

    @classmethod
    def from_intervals(cls, intervals: Sequence[Tuple[float, float]]) -> 'IntervalSet':
        """Build from an arbitrary list, merging overlapping or touching intervals."""
        items = sorted((float(a), float(b)) for a, b in intervals if b > a)
        merged: List[List[float]] = []
        for lo, hi in items:
            if merged and lo <= merged[-1][1] + MERGE_TOL:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return cls(merged)

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> 'IntervalSet':
        validate_dataframe_schema(df, INTERVAL_SET_SCHEMA, "Interval set")
        return cls.from_intervals(zip(df['lower'], df['upper']))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'lower': self.lower, 'upper': self.upper})

    @property
    def intervals(self) -> List[Tuple[float, float]]:
        return list(zip(self.lower.tolist(), self.upper.tolist()))

    def __len__(self) -> int:
        return self.lower.size

    def __repr__(self) -> str:
        return "IntervalSet({} intervals, measure={:.6g})".format(len(self), self.measure())

    def measure(self) -> float:
        return float(self._prefix[-1])

    def bounding_box(self):
        if len(self) == 0:
            return None
        return np.array([self.lower[0]]), np.array([self.upper[-1]])

    def cumulative(self, t) -> np.ndarray:
        """|E intersected with (-inf, t]| for an array of t."""
        t = np.asarray(t, dtype=float)
        if len(self) == 0:
            return np.zeros_like(t)
        idx = np.searchsorted(self.lower, t, side='right') - 1
        safe = np.clip(idx, 0, len(self) - 1)
        partial = np.clip(t - self.lower[safe], 0.0, self.upper[safe] - self.lower[safe])
        return np.where(idx >= 0, self._prefix[safe] + partial, 0.0)

    def intersect_ball_measure(self, x, r: float, metric: str = 'euclidean') -> float:
        if r <= 0:
            raise ValueError("Ball radius must be positive")
        center = _as_point(x, 1)[0]
        return float(self.cumulative(center + r) - self.cumulative(center - r))

    def ball_measures(self, centers, radii, metric='euclidean'):
        centers = np.asarray(centers, dtype=float).reshape(-1)
        radii = np.asarray(radii, dtype=float)
        return np.maximum(self.cumulative(centers + radii) - self.cumulative(centers - radii), 0.0)

    def union(self, other: 'IntervalSet') -> 'IntervalSet':
        return IntervalSet.from_intervals(self.intervals + other.intervals)

    def intersection(self, other: 'IntervalSet') -> 'IntervalSet':
        pieces = []
        i = j = 0
        while i < len(self) and j < len(other):
            lo = max(self.lower[i], other.lower[j])
            hi = min(self.upper[i], other.upper[j])
            if hi > lo:
                pieces.append((lo, hi))
            if self.upper[i] < other.upper[j]:
                i += 1
            else:
                j += 1
        return IntervalSet(pieces)

    def clip(self, lo: float, hi: float) -> 'IntervalSet':
        return self.intersection(IntervalSet([(lo, hi)]))

    def complement_within(self, lo: float, hi: float) -> 'IntervalSet':
        inside = self.clip(lo, hi)
        edges = [lo] + [v for pair in inside.intervals for v in pair] + [hi]
        return IntervalSet.from_intervals(zip(edges[0::2], edges[1::2]))

    def cell_weights(self, axes):
        axis = np.asarray(axes[0], dtype=float)
        h = _axis_spacing(axis)
        return (self.cumulative(axis + h / 2.0) - self.cumulative(axis - h / 2.0)) / h

    def quadrature_nodes(self, order: int = 8) -> Tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes and weights, `order` per interval."""
        if len(self) == 0:
            return np.zeros(0), np.zeros(0)
        base_x, base_w = np.polynomial.legendre.leggauss(order)
        half = (self.upper - self.lower)[:, None] / 2.0
        mid = (self.upper + self.lower)[:, None] / 2.0
        return (mid + half * base_x).ravel(), (half * base_w).ravel()


class BoxSet(MeasurableSet):
    """Pairwise disjoint axis-aligned boxes in d dimensions."""

    def __init__(self, boxes: Sequence[Tuple[Sequence[float], Sequence[float]]] = (),
                 dimension: Optional[int] = None):
        boxes = list(boxes)
        if dimension is None:
            if not boxes:
                raise ValueError("An empty BoxSet needs an explicit dimension")
            dimension = len(boxes[0][0])
        self.dimension = int(dimension)
        lows = np.asarray([b[0] for b in boxes], dtype=float).reshape(-1, self.dimension)
        highs = np.asarray([b[1] for b in boxes], dtype=float).reshape(-1, self.dimension)
        if np.any(highs <= lows):
            raise ValueError("Every box must satisfy lower < upper on each axis")
        for i in range(len(boxes)):
            overlap = np.all((np.minimum(highs[i], highs[i + 1:]) - np.maximum(lows[i], lows[i + 1:])) > 0, axis=1)
            if np.any(overlap):
                raise ValueError("Boxes {} and {} overlap".format(i, i + 1 + int(np.argmax(overlap))))
        self.lows = lows
        self.highs = highs

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> 'BoxSet':
        d = sum(1 for col in df.columns if col.startswith('lower_'))
        columns = ['lower_{}'.format(i) for i in range(d)] + ['upper_{}'.format(i) for i in range(d)]
        validate_dataframe_schema(df, columns, "Box set")
        boxes = [(row[:d], row[d:]) for row in df[columns].to_numpy(dtype=float)]
        return cls(boxes, dimension=d)

    def to_frame(self) -> pd.DataFrame:
        data = {}
        for i in range(self.dimension):
            data['lower_{}'.format(i)] = self.lows[:, i]
        for i in range(self.dimension):
            data['upper_{}'.format(i)] = self.highs[:, i]
        return pd.DataFrame(data)

    @property
    def boxes(self) -> List[Tuple[Tuple[float, ...], Tuple[float, ...]]]:
        return [(tuple(lo), tuple(hi)) for lo, hi in zip(self.lows.tolist(), self.highs.tolist())]

    def __len__(self) -> int:
        return self.lows.shape[0]

    def __repr__(self) -> str:
        return "BoxSet(d={}, {} boxes, measure={:.6g})".format(self.dimension, len(self), self.measure())

    def measure(self) -> float:
        return float(np.sum(np.prod(self.highs - self.lows, axis=1)))

    def bounding_box(self):
        if len(self) == 0:
            return None
        return self.lows.min(axis=0), self.highs.max(axis=0)

    @staticmethod
    def _subtract(lo: np.ndarray, hi: np.ndarray, cut_lo: np.ndarray, cut_hi: np.ndarray):
        """Split box [lo, hi] minus [cut_lo, cut_hi] into disjoint boxes."""
        if np.any(np.minimum(hi, cut_hi) <= np.maximum(lo, cut_lo)):
            return [(lo, hi)]
        pieces = []
        lo, hi = lo.copy(), hi.copy()
        for axis in range(lo.size):
            if lo[axis] < cut_lo[axis]:
                piece_hi = hi.copy()
                piece_hi[axis] = cut_lo[axis]
                pieces.append((lo.copy(), piece_hi))
                lo[axis] = cut_lo[axis]
            if hi[axis] > cut_hi[axis]:
                piece_lo = lo.copy()
                piece_lo[axis] = cut_hi[axis]
                pieces.append((piece_lo, hi.copy()))
                hi[axis] = cut_hi[axis]
        return pieces

    def union(self, other: 'BoxSet') -> 'BoxSet':
        if other.dimension != self.dimension:
            raise ValueError("Cannot unite sets of dimension {} and {}".format(self.dimension, other.dimension))
        pieces = list(zip(self.lows, self.highs))
        for lo, hi in zip(other.lows, other.highs):
            remaining = [(lo, hi)]
            for cut_lo, cut_hi in zip(self.lows, self.highs):
                remaining = [p for box in remaining for p in self._subtract(box[0], box[1], cut_lo, cut_hi)]
            pieces.extend(remaining)
        return BoxSet(pieces, dimension=self.dimension)

    def intersection(self, other: 'BoxSet') -> 'BoxSet':
        if other.dimension != self.dimension:
            raise ValueError("Cannot intersect sets of dimension {} and {}".format(self.dimension, other.dimension))
        pieces = []
        for lo, hi in zip(self.lows, self.highs):
            for olo, ohi in zip(other.lows, other.highs):
                ilo, ihi = np.maximum(lo, olo), np.minimum(hi, ohi)
                if np.all(ihi > ilo):
                    pieces.append((ilo, ihi))
        return BoxSet(pieces, dimension=self.dimension)

    def _disc_box_area(self, center: np.ndarray, r: float, lo: np.ndarray, hi: np.ndarray) -> float:
        """Area of a Euclidean disc intersected with one rectangle, by quadrature of chords."""
        a, b = lo - center, hi - center
        u_lo, u_hi = max(a[0], -r), min(b[0], r)
        if u_hi <= u_lo or a[1] >= r or b[1] <= -r:
            return 0.0

        def chord(u):
            half = math.sqrt(max(r * r - u * u, 0.0))
            return max(0.0, min(half, b[1]) - max(-half, a[1]))

        kinks = [u for level in (a[1], b[1]) if abs(level) < r
                 for u in (-math.sqrt(r * r - level * level), math.sqrt(r * r - level * level))
                 if u_lo < u < u_hi]
        value, _ = integrate.quad(chord, u_lo, u_hi, points=kinks or None, epsabs=1e-13, epsrel=1e-11, limit=200)
        return value

    def intersect_ball_measure(self, x, r: float, metric: str = 'euclidean') -> float:
        if r <= 0:
            raise ValueError("Ball radius must be positive")
        if metric not in METRICS:
            raise ValueError("metric must be one of: {}".format(", ".join(METRICS)))
        center = _as_point(x, self.dimension)
        if len(self) == 0:
            return 0.0
        if metric == 'sup' or self.dimension == 1:
            return float(self.ball_measures(center[None, :], np.array([r]), 'sup')[0])
        if self.dimension > 2:
            raise ValueError("Euclidean ball intersections are only supported for d <= 2; use metric='sup'")
        return float(sum(self._disc_box_area(center, r, lo, hi) for lo, hi in zip(self.lows, self.highs)))

    def ball_measures(self, centers, radii, metric='euclidean'):
        centers = np.asarray(centers, dtype=float).reshape(-1, self.dimension)
        radii = np.asarray(radii, dtype=float)
        if metric == 'euclidean' and self.dimension > 1:
            return super().ball_measures(centers, radii, metric)
        total = np.zeros(len(radii))
        # Offsets from the center keep tiny radii exact at large |x|.
        for lo, hi in zip(self.lows, self.highs):
            sides = np.minimum(hi - centers, radii[:, None]) - np.maximum(lo - centers, -radii[:, None])
            total += np.prod(np.clip(sides, 0.0, None), axis=1)
        return total

    def cell_weights(self, axes):
        axes = [np.asarray(a, dtype=float) for a in axes]
        if len(axes) != self.dimension:
            raise ValueError("Expected {} axes, got {}".format(self.dimension, len(axes)))
        weights = np.zeros(tuple(a.size for a in axes))
        for lo, hi in zip(self.lows, self.highs):
            factors = [_cell_overlap(a, lo[i], hi[i]) / _axis_spacing(a) for i, a in enumerate(axes)]
            weights += _outer(factors)
        return np.minimum(weights, 1.0)

    def quadrature_nodes(self, order: int = 6) -> Tuple[np.ndarray, np.ndarray]:
        """Tensor Gauss-Legendre nodes (shape (M, d)) and weights per box."""
        if len(self) == 0:
            return np.zeros((0, self.dimension)), np.zeros(0)
        base_x, base_w = np.polynomial.legendre.leggauss(order)
        grids = np.meshgrid(*([base_x] * self.dimension), indexing='ij')
        wgrid = np.prod(np.meshgrid(*([base_w] * self.dimension), indexing='ij'), axis=0).ravel()
        unit = np.stack([g.ravel() for g in grids], axis=1)
        nodes, weights = [], []
        for lo, hi in zip(self.lows, self.highs):
            half, mid = (hi - lo) / 2.0, (hi + lo) / 2.0
            nodes.append(mid + half * unit)
            weights.append(np.prod(half) * wgrid)
        return np.concatenate(nodes), np.concatenate(weights)

    def analytic_centers(self, rho: RadiusFunction, per_axis: int = 64) -> np.ndarray:
        """Points along and across each box, log-spaced toward its far ends."""
        centers = []
        for lo, hi in zip(self.lows, self.highs):
            coords = []
            for i in range(self.dimension):
                reach = max(abs(lo[i]), abs(hi[i]))
                extra = np.concatenate([np.logspace(-3, math.log10(reach + 1.0), per_axis),
                                        -np.logspace(-3, math.log10(reach + 1.0), per_axis)])
                extra = extra[(extra >= lo[i] - 1.0) & (extra <= hi[i] + 1.0)]
                coords.append(np.unique(np.concatenate([np.linspace(lo[i], hi[i], 9), extra, [0.0]])))
            mesh = np.meshgrid(*coords, indexing='ij')
            centers.append(np.stack([m.ravel() for m in mesh], axis=1))
        return np.concatenate(centers) if centers else np.zeros((0, self.dimension))


def _outer(factors: List[np.ndarray]) -> np.ndarray:
    result = factors[0]
    for factor in factors[1:]:
        result = np.multiply.outer(result, factor)
    return result


class PeriodicIntervalSet(MeasurableSet):
    """
    Intervals [c + j s - h, c + j s + h] for lattice indices first <= j <= last.

    Stored lazily so that very long lattices can be measured exactly in
    lattice-local coordinates.
    """

    dimension = 1

    def __init__(self, first: int, last: int, half_width: float, spacing: float = 1.0,
                 center: float = 0.0):
        if last < first:
            raise ValueError("Lattice range must satisfy first <= last")
        if not (half_width > 0 and spacing > 0):
            raise ValueError("half_width and spacing must be positive")
        if half_width >= spacing / 2.0:
            raise ValueError("Intervals overlap: half_width {} >= spacing/2 = {}".format(half_width, spacing / 2.0))
        self.first = int(first)
        self.last = int(last)
        self.half_width = float(half_width)
        self.spacing = float(spacing)
        self.center = float(center)

    def __len__(self) -> int:
        return self.last - self.first + 1

    def __repr__(self) -> str:
        return "PeriodicIntervalSet(j={}..{}, h={:.6g}, s={:.6g})".format(
            self.first, self.last, self.half_width, self.spacing)

    def measure(self) -> float:
        return len(self) * 2.0 * self.half_width

    def bounding_box(self):
        return (np.array([self.center + self.first * self.spacing - self.half_width]),
                np.array([self.center + self.last * self.spacing + self.half_width]))

    def to_interval_set(self, max_intervals: int = 1_000_000) -> IntervalSet:
        if len(self) > max_intervals:
            raise ValueError("Refusing to materialize {} intervals".format(len(self)))
        mids = self.center + self.spacing * np.arange(self.first, self.last + 1)
        return IntervalSet(np.stack([mids - self.half_width, mids + self.half_width], axis=1))

    def to_frame(self) -> pd.DataFrame:
        return self.to_interval_set().to_frame()

    def cumulative(self, t) -> np.ndarray:
        """|E intersected with (-inf, t]|, vectorized."""
        u = (np.asarray(t, dtype=float) - self.center) / self.spacing
        m = np.floor(u + 0.5)
        below = np.clip(np.minimum(m - 1, self.last) - self.first + 1, 0, None)
        own = np.clip((u - m) * self.spacing + self.half_width, 0.0, 2.0 * self.half_width)
        own = np.where((m >= self.first) & (m <= self.last), own, 0.0)
        return 2.0 * self.half_width * below + own

    def local_ball_measure(self, j: int, offset: float, r: float) -> float:
        """
        Measure of E intersected with [c + j s + offset - r, c + j s + offset + r].

        Only offsets relative to lattice point j enter floating point, so the
        result stays exact for |j| far beyond 2^53 / s.
        """
        h, s = self.half_width, self.spacing
        m_lo, m_hi = self.first - j, self.last - j
        a, b = offset - r, offset + r
        full_lo = max(math.ceil((a + h) / s), m_lo)
        full_hi = min(math.floor((b - h) / s), m_hi)
        total = 2.0 * h * max(0, full_hi - full_lo + 1)
        for m in {int(round(a / s)), int(round(b / s))}:
            if m_lo <= m <= m_hi and not (full_lo <= m <= full_hi):
                total += max(0.0, min(b, m * s + h) - max(a, m * s - h))
        return total

    def intersect_ball_measure(self, x, r: float, metric: str = 'euclidean') -> float:
        if r <= 0:
            raise ValueError("Ball radius must be positive")
        rel = _as_point(x, 1)[0] - self.center
        j = int(round(rel / self.spacing))
        return self.local_ball_measure(j, rel - j * self.spacing, r)

    def ball_measures(self, centers, radii, metric='euclidean'):
        centers = np.asarray(centers, dtype=float).reshape(-1)
        radii = np.asarray(radii, dtype=float)
        return np.maximum(self.cumulative(centers + radii) - self.cumulative(centers - radii), 0.0)

    def cell_weights(self, axes):
        axis = np.asarray(axes[0], dtype=float)
        h = _axis_spacing(axis)
        return (self.cumulative(axis + h / 2.0) - self.cumulative(axis - h / 2.0)) / h

    def lattice_probe_indices(self, count: int = 256) -> List[int]:
        """Log-spaced subset of lattice indices, always including both ends, 0 and the neighbours."""
        indices = {self.first - 1, self.first, self.last, self.last + 1}
        if self.first <= 0 <= self.last:
            indices.update({-1, 0, 1})
        for sign, bound in ((1, self.last), (-1, self.first)):
            if sign * bound > 0:
                indices.update(sign * int(v) for v in np.unique(np.round(np.logspace(0, math.log10(abs(bound)), count))))
        return sorted(i for i in indices if self.first - 1 <= i <= self.last + 1)

    def certify_analytic(self, rho: RadiusFunction, offsets: int = 65) -> Tuple[float, Tuple[float, ...], int]:
        """Worst ratio over lattice-local centers (j, offset); returns (eps, center, count)."""
        offset_grid = np.unique(np.concatenate([[0.0], self.spacing * np.linspace(-0.5, 0.5, offsets)]))
        worst, worst_center, count = 0.0, (self.center,), 0
        for j in self.lattice_probe_indices():
            for offset in offset_grid:
                x = self.center + j * self.spacing + offset
                r = rho(abs(x))
                ratio = self.local_ball_measure(j, float(offset), r) / (2.0 * r)
                count += 1
                if ratio > worst:
                    worst, worst_center = ratio, (x,)
        return worst, worst_center, count


class GridMaskSet(MeasurableSet):
    """Boolean mask on a uniform grid; cell i is centered at origin + i * spacing."""

    def __init__(self, mask: np.ndarray, origin: Sequence[float], spacing: Sequence[float]):
        mask = np.asarray(mask, dtype=bool)
        origin = tuple(float(v) for v in np.atleast_1d(origin))
        spacing = tuple(float(v) for v in np.atleast_1d(spacing))
        if mask.ndim != len(origin) or mask.ndim != len(spacing):
            raise ValueError("Mask, origin and spacing must agree on the dimension")
        if any(h <= 0 for h in spacing):
            raise ValueError("Grid masks need positive spacing")
        self.mask = mask
        self.origin = origin
        self.spacing = spacing
        self.dimension = mask.ndim
        self._sat = np.pad(mask.astype(np.int64), [(1, 0)] * mask.ndim)
        for axis in range(mask.ndim):
            self._sat = np.cumsum(self._sat, axis=axis)

    @classmethod
    def rasterize(cls, source: MeasurableSet, axes: Sequence[np.ndarray]) -> 'GridMaskSet':
        """Cells at least half covered by the source set."""
        axes = [np.asarray(a, dtype=float) for a in axes]
        mask = source.cell_weights(axes) >= 0.5
        return cls(mask, [a[0] for a in axes], [_axis_spacing(a) for a in axes])

    @property
    def axes(self) -> List[np.ndarray]:
        return [o + h * np.arange(n) for o, h, n in zip(self.origin, self.spacing, self.mask.shape)]

    def __repr__(self) -> str:
        return "GridMaskSet(shape={}, measure={:.6g})".format(self.mask.shape, self.measure())

    def measure(self) -> float:
        return float(self.mask.sum()) * float(np.prod(self.spacing))

    def bounding_box(self):
        if not self.mask.any():
            return None
        idx = np.argwhere(self.mask)
        o, h = np.asarray(self.origin), np.asarray(self.spacing)
        return o + h * (idx.min(axis=0) - 0.5), o + h * (idx.max(axis=0) + 0.5)

    def _count(self, lo_idx: Sequence[int], hi_idx: Sequence[int]) -> int:
        """Number of set cells with lo_idx <= index <= hi_idx (inclusive, clipped)."""
        lo = [max(0, int(v)) for v in lo_idx]
        hi = [min(n - 1, int(v)) for v, n in zip(hi_idx, self.mask.shape)]
        if any(h < l for l, h in zip(lo, hi)):
            return 0
        total = 0
        for corner in range(2 ** self.dimension):
            index, sign = [], 1
            for axis in range(self.dimension):
                if corner >> axis & 1:
                    index.append(lo[axis])
                    sign = -sign
                else:
                    index.append(hi[axis] + 1)
            total += sign * int(self._sat[tuple(index)])
        return total

    def _index_range(self, axis: int, a: float, b: float) -> Tuple[int, int]:
        """Cells of one axis whose centers lie in [a, b]."""
        o, h = self.origin[axis], self.spacing[axis]
        return math.ceil((a - o) / h - 1e-12), math.floor((b - o) / h + 1e-12)

    def intersect_ball_measure(self, x, r: float, metric: str = 'euclidean') -> float:
        if r <= 0:
            raise ValueError("Ball radius must be positive")
        center = _as_point(x, self.dimension)
        cell = float(np.prod(self.spacing))
        if metric == 'sup' or self.dimension == 1:
            ranges = [self._index_range(i, c - r, c + r) for i, c in enumerate(center)]
            return self._count([lo for lo, _ in ranges], [hi for _, hi in ranges]) * cell
        if self.dimension > 2:
            raise ValueError("Euclidean ball intersections are only supported for d <= 2; use metric='sup'")
        row_lo, row_hi = self._index_range(0, center[0] - r, center[0] + r)
        total = 0
        for i in range(max(row_lo, 0), min(row_hi, self.mask.shape[0] - 1) + 1):
            u = self.origin[0] + i * self.spacing[0] - center[0]
            half = math.sqrt(max(r * r - u * u, 0.0))
            col_lo, col_hi = self._index_range(1, center[1] - half, center[1] + half)
            total += self._count([i, col_lo], [i, col_hi])
        return total * cell

    def resample(self, origin: Sequence[float], spacing: Sequence[float],
                 shape: Sequence[int]) -> 'GridMaskSet':
        """
        Outer covering onto another grid: a target cell is set when any
        overlapping source cell is set, so measured thinness can only grow.
        """
        lows, highs = [], []
        for axis in range(self.dimension):
            centers = origin[axis] + spacing[axis] * np.arange(shape[axis])
            lo = np.floor((centers - spacing[axis] / 2.0 - self.origin[axis]) / self.spacing[axis] + 0.5 + 1e-12)
            hi = np.ceil((centers + spacing[axis] / 2.0 - self.origin[axis]) / self.spacing[axis] - 0.5 - 1e-12)
            lows.append(np.clip(lo.astype(int), 0, self.mask.shape[axis]))
            highs.append(np.clip(hi.astype(int), -1, self.mask.shape[axis] - 1))
        lo_mesh = np.meshgrid(*lows, indexing='ij')
        hi_mesh = np.meshgrid(*highs, indexing='ij')
        counts = np.zeros(tuple(shape), dtype=np.int64)
        for corner in range(2 ** self.dimension):
            index, sign = [], 1
            for axis in range(self.dimension):
                if corner >> axis & 1:
                    index.append(lo_mesh[axis])
                    sign = -sign
                else:
                    index.append(hi_mesh[axis] + 1)
            counts += sign * self._sat[tuple(index)]
        empty = np.any([h < l for l, h in zip(lo_mesh, hi_mesh)], axis=0)
        return GridMaskSet((counts > 0) & ~empty, origin, spacing)

    def cell_weights(self, axes):
        axes = [np.asarray(a, dtype=float) for a in axes]
        spacing = [_axis_spacing(a) for a in axes]
        origin = [float(a[0]) for a in axes]
        aligned = (tuple(a.size for a in axes) == self.mask.shape
                   and np.allclose(origin, self.origin, rtol=0, atol=1e-12 * max(spacing))
                   and np.allclose(spacing, self.spacing, rtol=1e-12))
        if aligned:
            return self.mask.astype(float)
        return self.resample(origin, spacing, [a.size for a in axes]).mask.astype(float)


@dataclass(frozen=True)
class ThinnessSampling:
    """Centers probed by certify_thinness: a grid on [-extent, extent]^d plus extras."""
    grid_extent: float
    grid_spacing: float
    extra_centers: Tuple[Tuple[float, ...], ...] = ()
    metric: str = 'euclidean'
    use_analytic: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        """Validate sampling parameters after initialization."""
        if self.grid_extent < 0:
            raise ValueError("grid_extent must be non-negative")
        if self.grid_extent > 0 and self.grid_spacing <= 0:
            raise ValueError("grid_spacing must be positive")
        if self.metric not in METRICS:
            raise ValueError("metric must be one of: {}".format(", ".join(METRICS)))


def _chunk_ratios(target: MeasurableSet, centers: np.ndarray, rho: RadiusFunction,
                  metric: str) -> Tuple[float, int]:
    radii = rho(np.linalg.norm(centers, axis=1))
    ratios = target.ball_measures(centers, radii, metric) / (
        ball_measure(target.dimension, 1.0, metric) * radii ** target.dimension)
    k = int(np.argmax(ratios))
    return float(ratios[k]), k


def certify_thinness(target: MeasurableSet, rho: RadiusFunction,
                     sampling: ThinnessSampling) -> ThinnessCertificate:
    """
    Measure max over probed centers of |E cap D(x, rho(|x|))| / |D(x, rho(|x|))|.

    Args:
        target: Set to certify
        rho: Radius function
        sampling: Center sampling; the grid must be at least as fine as
            half the smallest radius on the sampled domain

    Returns:
        ThinnessCertificate with the worst ratio and the center attaining it

    Raises:
        ValueError: If the grid spacing is coarser than the required spacing
    """
    d = target.dimension
    blocks = []
    note = "centers: "
    if sampling.grid_extent > 0:
        required = rho(sampling.grid_extent * math.sqrt(d)) / 2.0
        if sampling.grid_spacing > required * (1 + 1e-12):
            raise ValueError("Center grid too coarse: spacing {} exceeds required spacing {:.6g}".format(
                sampling.grid_spacing, required))
        axis = np.arange(-sampling.grid_extent, sampling.grid_extent + sampling.grid_spacing / 2.0,
                         sampling.grid_spacing)
        mesh = np.meshgrid(*([axis] * d), indexing='ij')
        blocks.append(np.stack([m.ravel() for m in mesh], axis=1))
        note += "grid |x|_inf <= {:g} at {:g}".format(sampling.grid_extent, sampling.grid_spacing)
    if sampling.extra_centers:
        blocks.append(np.asarray(sampling.extra_centers, dtype=float).reshape(-1, d))
        note += "; {} extra".format(len(sampling.extra_centers))
    if sampling.use_analytic and not isinstance(target, PeriodicIntervalSet):
        analytic = target.analytic_centers(rho)
        if len(analytic):
            blocks.append(analytic)
            note += "; {} analytic".format(len(analytic))

    worst, worst_center, count = 0.0, tuple([0.0] * d), 0
    if sampling.use_analytic and isinstance(target, PeriodicIntervalSet):
        worst, worst_center, count = target.certify_analytic(rho)
        note += "; {} lattice-local analytic".format(count)

    if blocks:
        centers = np.concatenate(blocks)
        chunks = np.array_split(centers, max(1, min(len(centers) // 4096 + 1, 64)))
        results = Parallel(n_jobs=sampling.n_jobs)(
            delayed(_chunk_ratios)(target, chunk, rho, sampling.metric) for chunk in chunks)
        for chunk, (ratio, k) in zip(chunks, results):
            if ratio > worst:
                worst, worst_center = ratio, tuple(float(v) for v in chunk[k])
        count += len(centers)

    if count == 0:
        raise ValueError("No centers to probe: give a grid extent, extra centers or analytic centers")
    note += "; outside the sampled region thinness follows from the construction"
    certificate = ThinnessCertificate(
        epsilon_measured=min(worst, 1.0),
        worst_center=worst_center,
        center_count=count,
        rho_label=rho.label,
        metric='euclidean' if d == 1 else sampling.metric,
        note=note,
    )
    logger.debug("Thinness of {!r} w.r.t. {}: {:.6g} at {}".format(
        target, rho.label, certificate.epsilon_measured, certificate.worst_center))
    return certificate


def periodic_thin_set(d: int, n: int, half_width: float, spacing: float = 1.0,
                      center_span: Optional[Tuple[int, int]] = None) -> MeasurableSet:
    """
    Lattice constructions used by the counterexamples.

    In d=1 the 2n - 1 intervals [j s - h, j s + h], |j| <= n - 1 (or the
    lattice span given by center_span). In d >= 2 the box
    [-(n - d), n - d] x [-h, h]^(d-1).

    Raises:
        ValueError: If half_width >= spacing / 2 (intervals would overlap)
    """
    if n < 1:
        raise ValueError("Count n must be at least 1")
    if half_width >= spacing / 2.0:
        raise ValueError("Intervals overlap: half_width {} >= spacing/2 = {}".format(half_width, spacing / 2.0))
    if d == 1:
        first, last = center_span if center_span is not None else (-(n - 1), n - 1)
        return PeriodicIntervalSet(first, last, half_width, spacing)
    length = float(n - d)
    if length <= 0:
        raise ValueError("The d={} box form needs n > d, got n={}".format(d, n))
    lo = [-length] + [-half_width] * (d - 1)
    hi = [length] + [half_width] * (d - 1)
    return BoxSet([(lo, hi)], dimension=d)


def truncate_to_disc(target: MeasurableSet, n: float) -> MeasurableSet:
    """
    E intersected with the sup-ball of radius n about the origin.

    Used to pass from thinness for a constant radius to thinness for the
    slowly decaying radius min(t^(-1/n), 1).
    """
    if n <= 0:
        raise ValueError("Truncation radius must be positive")
    if isinstance(target, PeriodicIntervalSet):
        first = max(target.first, math.ceil((-n - target.center - target.half_width) / target.spacing))
        last = min(target.last, math.floor((n - target.center + target.half_width) / target.spacing))
        if last < first:
            return IntervalSet([])
        return PeriodicIntervalSet(first, last, target.half_width, target.spacing,
                                   target.center).to_interval_set().clip(-n, n)
    if isinstance(target, IntervalSet):
        return target.clip(-n, n)
    if isinstance(target, BoxSet):
        cube = BoxSet([([-n] * target.dimension, [n] * target.dimension)], dimension=target.dimension)
        return target.intersection(cube)
    if isinstance(target, GridMaskSet):
        mesh = np.meshgrid(*target.axes, indexing='ij')
        inside = np.all([np.abs(m) <= n for m in mesh], axis=0)
        return GridMaskSet(target.mask & inside, target.origin, target.spacing)
    raise ValueError("Unsupported set type {}".format(type(target).__name__))


def parse_set(spec: str, d: int = 1) -> MeasurableSet:
    """
    Parse a set spec string: 'periodic:n=8,h=0.1[,spacing=1]', 'empty',
    or a CSV path with interval or box columns. 'domain' is resolved by the
    caller, which knows the grid.
    """
    name, _, body = spec.partition(':')
    name = name.strip().lower()
    if name == 'empty':
        return IntervalSet([]) if d == 1 else BoxSet([], dimension=d)
    if name == 'periodic':
        params = dict(item.split('=', 1) for item in body.split(',') if item)
        try:
            return periodic_thin_set(d, int(params['n']), float(params['h']), float(params.get('spacing', 1.0)))
        except KeyError as e:
            raise ValueError("Periodic set spec '{}' is missing {}".format(spec, e))
    if spec.endswith('.csv'):
        if not os.path.exists(spec):
            raise FileNotFoundError("Set file not found: {}".format(spec))
        df = pd.read_csv(spec)
        if 'lower' in df.columns:
            return IntervalSet.from_frame(df)
        return BoxSet.from_frame(df)
    raise ValueError("Unknown set spec '{}'".format(spec))
