"""
Log-log decay fits and stability statistics.
"""

from typing import Dict, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import integrate, stats

logger = logging.getLogger(__name__)

# Values below this are treated as numerical noise in log-log fits.
NOISE_FLOOR = 1e-13


def window_maxima(t: np.ndarray, values: np.ndarray, lo: float, hi: float,
                  width: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Maximum of |values| over consecutive windows [a, a + width) covering [lo, hi].

    Args:
        t: Sample positions (increasing)
        values: Samples
        lo: Start of the first window
        hi: End of the last window
        width: Window width

    Returns:
        Tuple of (window centers, window maxima); empty windows are skipped
    """
    t = np.asarray(t, dtype=float)
    values = np.abs(np.asarray(values))
    edges = np.arange(lo, hi + width / 2.0, width)
    centers, maxima = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        inside = (t >= a) & (t < b)
        if np.any(inside):
            k = np.flatnonzero(inside)[np.argmax(values[inside])]
            centers.append(t[k])
            maxima.append(values[k])
    return np.asarray(centers), np.asarray(maxima)


def fit_loglog_slope(x: Sequence[float], y: Sequence[float],
                     floor: float = NOISE_FLOOR) -> Dict:
    """
    Fit log|y| = intercept + slope * log x by least squares.

    Points with x <= 0 or |y| <= floor are dropped before fitting.

    Returns:
        Dictionary with slope, intercept, r_value, n_points and the fitted
        x-range; 'error' is set when fewer than 3 points survive
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    keep = (x > 0) & (y > floor) & np.isfinite(y)
    if keep.sum() < 3:
        return {
            'slope': np.nan,
            'intercept': np.nan,
            'r_value': np.nan,
            'n_points': int(keep.sum()),
            'x_range': (np.nan, np.nan),
            'error': 'Insufficient points above noise floor'
        }
    result = stats.linregress(np.log(x[keep]), np.log(y[keep]))
    return {
        'slope': float(result.slope),
        'intercept': float(result.intercept),
        'r_value': float(result.rvalue),
        'n_points': int(keep.sum()),
        'x_range': (float(x[keep].min()), float(x[keep].max())),
    }


def relative_spread(values: Sequence[float]) -> float:
    """(max - min) / |reference| with the first value as reference."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("relative_spread needs at least one value")
    reference = abs(values[0])
    if reference == 0:
        return 0.0 if np.all(values == 0) else math.inf
    return float((values.max() - values.min()) / reference)


def band_factor(values: Sequence[float]) -> float:
    """max / min of positive values; 1 means perfectly flat."""
    values = np.asarray(values, dtype=float)
    if values.size == 0 or np.any(values <= 0):
        raise ValueError("band_factor needs positive values")
    return float(values.max() / values.min())


def integrate_abs(t: np.ndarray, values: np.ndarray, upper: float,
                  lower: float = 0.0) -> float:
    """Trapezoid integral of |values| over [lower, upper] on the sample grid."""
    t = np.asarray(t, dtype=float)
    keep = (t >= lower) & (t <= upper)
    if keep.sum() < 2:
        return 0.0
    return float(integrate.trapezoid(np.abs(np.asarray(values)[keep]), t[keep]))


def summarize(name: str, values: Sequence[float], reference: Optional[float] = None) -> Dict:
    """Count, min, max, spread and band of a metric across a sweep."""
    values = np.asarray(values, dtype=float)
    summary = {
        'metric': name,
        'count': int(values.size),
        'min': float(values.min()),
        'max': float(values.max()),
        'spread': relative_spread(values),
    }
    if np.all(values > 0):
        summary['band'] = band_factor(values)
    if reference is not None:
        summary['max_over_reference'] = float(values.max() / reference)
    return summary


def test_decay_fits():
    """Demonstrate the fitting helpers on a synthetic t^-2 profile."""
    print("Testing Decay Fits Module")
    print("=" * 50)

    t = np.linspace(1.0, 64.0, 4000)
    values = np.cos(3 * t) / t ** 2
    centers, maxima = window_maxima(t, values, 4.0, 64.0, 2.0)
    fit = fit_loglog_slope(centers, maxima)
    print("Fitted slope: {:.3f} over {} windows".format(fit['slope'], fit['n_points']))
    print("Band of maxima * t^2: {:.3f}".format(band_factor(maxima * centers ** 2)))
    print("Spread of [1.0, 1.05, 0.98]: {:.3f}".format(relative_spread([1.0, 1.05, 0.98])))
    print("\nDecay fits module test completed successfully!")


if __name__ == "__main__":
    test_decay_fits()
