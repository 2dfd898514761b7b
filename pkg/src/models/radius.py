"""
Radius-function models for the adapted discs D(x, rho(|x|)).

A radius function is a continuous non-increasing map from [0, inf) to
(0, inf). Two of them, rho1 on the space side and rho2 on the frequency side,
together with constants C1 and C2 form a pair; the pair is compatible when
C2 / rho2(C1 / rho1(t)) >= t for every t >= 0. This module evaluates such
pairs, probes the compatibility inequality on a log grid, and applies the
scale transform that preserves it.
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple
import logging
import math
import os

import numpy as np
import pandas as pd

from models.data_models import (
    CompatibilityReport, validate_dataframe_schema, RADIUS_TABLE_SCHEMA
)

logger = logging.getLogger(__name__)

RADIUS_KINDS = ['powerlaw', 'constant', 'cutoff', 'tabulated']

# Relative slack on the log scale; Wolff-type pairs sit exactly on the boundary.
COMPATIBILITY_RTOL = 1e-9


@dataclass(frozen=True)
class RadiusFunction:
    """
    A continuous non-increasing radius field.

    Values are outer * base(inner * t), where base is one of
    min(t^-a, 1) (powerlaw, and cutoff for large exponents), a constant, or a
    monotone piecewise-linear table. The outer/inner factors carry the scale
    transform.
    """
    kind: str
    exponent: float = 1.0
    value: float = 1.0
    table_t: Tuple[float, ...] = ()
    table_rho: Tuple[float, ...] = ()
    outer: float = 1.0
    inner: float = 1.0

    def __post_init__(self):
        """Validate radius parameters after initialization."""
        if self.kind not in RADIUS_KINDS:
            raise ValueError("Radius kind must be one of: {}".format(", ".join(RADIUS_KINDS)))
        if self.kind in ('powerlaw', 'cutoff') and not (self.exponent > 0 and math.isfinite(self.exponent)):
            raise ValueError("Power-law exponent must be positive and finite")
        if self.kind == 'constant' and not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError("Constant radius must be positive and finite")
        if self.kind == 'tabulated':
            if len(self.table_t) < 2 or len(self.table_t) != len(self.table_rho):
                raise ValueError("A radius table needs at least two (t, rho) samples")
            t = np.asarray(self.table_t, dtype=float)
            rho = np.asarray(self.table_rho, dtype=float)
            if t[0] < 0 or np.any(np.diff(t) <= 0):
                raise ValueError("Radius table abscissae must be non-negative and strictly increasing")
            if np.any(rho <= 0) or not np.all(np.isfinite(rho)):
                raise ValueError("Radius table values must be positive and finite")
        for name in ('outer', 'inner'):
            factor = getattr(self, name)
            if not (factor > 0 and math.isfinite(factor)):
                raise ValueError("Scale factor {} must be positive and finite".format(name))

    @property
    def label(self) -> str:
        if self.kind == 'powerlaw':
            base = "powerlaw:a={:g}".format(self.exponent)
        elif self.kind == 'cutoff':
            base = "cutoff:n={:g}".format(self.exponent)
        elif self.kind == 'constant':
            base = "constant:c={:g}".format(self.value)
        else:
            base = "tabulated:points={}".format(len(self.table_t))
        if self.outer != 1.0 or self.inner != 1.0:
            base += "@outer={:g},inner={:g}".format(self.outer, self.inner)
        return base

    def _monotone_table(self) -> np.ndarray:
        # Clamp to a non-increasing profile; the proofs only use monotonicity and continuity.
        return np.minimum.accumulate(np.asarray(self.table_rho, dtype=float))

    def _base_log_at_log(self, log_t: np.ndarray) -> np.ndarray:
        if self.kind in ('powerlaw', 'cutoff'):
            return -self.exponent * np.maximum(log_t, 0.0)
        if self.kind == 'constant':
            return np.full_like(log_t, math.log(self.value))
        with np.errstate(over='ignore'):
            t = np.exp(log_t)
        return np.log(np.interp(t, np.asarray(self.table_t, dtype=float), self._monotone_table()))

    def log_at_log(self, log_t) -> np.ndarray:
        """
        Evaluate log rho(exp(log_t)).

        Working in logs keeps compositions such as rho2(C1 / rho1(t)) finite
        for steep cutoffs whose values underflow in double precision.
        """
        log_t = np.asarray(log_t, dtype=float)
        return math.log(self.outer) + self._base_log_at_log(log_t + math.log(self.inner))

    def __call__(self, t):
        """
        Evaluate rho at t >= 0.

        Args:
            t: Scalar or array of non-negative arguments

        Returns:
            Float for scalar input, ndarray otherwise
        """
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise ValueError("Radius functions are defined for t >= 0 only")
        with np.errstate(divide='ignore'):
            values = np.exp(self.log_at_log(np.log(arr)))
        if np.ndim(t) == 0:
            return float(values)
        return values

    def min_on(self, t_max: float) -> float:
        """Smallest value on [0, t_max]; rho is non-increasing so this is rho(t_max)."""
        return self(float(t_max))


@dataclass(frozen=True)
class CompatiblePair:
    """Space and frequency radius functions with their constants C1, C2."""
    rho1: RadiusFunction
    rho2: RadiusFunction
    c1: float = 1.0
    c2: float = 1.0
    compatible: Optional[bool] = None

    def __post_init__(self):
        """Validate the constants after initialization."""
        if not (self.c1 > 0 and math.isfinite(self.c1)):
            raise ValueError("C1 must be positive and finite")
        if not (self.c2 > 0 and math.isfinite(self.c2)):
            raise ValueError("C2 must be positive and finite")

    @property
    def label(self) -> str:
        return "{}|{}".format(self.rho1.label, self.rho2.label)

    def with_constants(self, c1: float, c2: float) -> 'CompatiblePair':
        """Same radius functions, new constants; compatibility must be re-checked."""
        return replace(self, c1=c1, c2=c2, compatible=None)


def power_radius(a: float) -> RadiusFunction:
    return RadiusFunction(kind='powerlaw', exponent=a)


def constant_radius(c: float = 1.0) -> RadiusFunction:
    return RadiusFunction(kind='constant', value=c)


def cutoff_radius(n: float = 8.0) -> RadiusFunction:
    return RadiusFunction(kind='cutoff', exponent=n)


def wolff_pair() -> CompatiblePair:
    """rho1 = rho2 = min(1/t, 1) with C1 = C2 = 1."""
    return CompatiblePair(power_radius(1.0), power_radius(1.0))


def power_pair(a: float) -> CompatiblePair:
    """rho1 = min(t^-a, 1), rho2 = min(t^(-1/a), 1)."""
    return CompatiblePair(power_radius(a), power_radius(1.0 / a))


def interpolation_pair(n: float) -> CompatiblePair:
    """rho1 = min(t^(-1/n), 1), rho2 = min(t^-n, 1); n = 1 is the Wolff pair."""
    return CompatiblePair(power_radius(1.0 / n), power_radius(n))


def incompatible_pair() -> CompatiblePair:
    """rho1 = min(1/t, 1), rho2 = min(t^(-1/2), 1): fails for every C1, C2 at large t."""
    return CompatiblePair(power_radius(1.0), power_radius(0.5))


def load_radius_table(file_path: str) -> RadiusFunction:
    """
    Load a tabulated radius function from a two-column CSV (t, rho).

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the schema or values are invalid
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError("Radius table not found: {}".format(file_path))
    df = pd.read_csv(file_path)
    validate_dataframe_schema(df, RADIUS_TABLE_SCHEMA, "Radius table")
    df = df.sort_values('t')
    return RadiusFunction(kind='tabulated', table_t=tuple(df['t'].astype(float)),
                          table_rho=tuple(df['rho'].astype(float)))


def _parse_params(body: str) -> dict:
    params = {}
    if not body:
        return params
    for item in body.split(','):
        if '=' not in item:
            raise ValueError("Expected key=value in '{}'".format(item))
        key, val = item.split('=', 1)
        params[key.strip()] = val.strip()
    return params


def parse_radius(spec: str) -> RadiusFunction:
    """
    Parse a radius spec string.

    Accepted forms: 'powerlaw:a=2', 'constant:c=1', 'cutoff:n=8',
    'table:path/to/table.csv'.
    """
    kind, _, body = spec.partition(':')
    kind = kind.strip().lower()
    if kind == 'table':
        return load_radius_table(body)
    params = _parse_params(body)
    try:
        if kind == 'powerlaw':
            return power_radius(float(params.get('a', 1.0)))
        if kind == 'constant':
            return constant_radius(float(params.get('c', 1.0)))
        if kind == 'cutoff':
            return cutoff_radius(float(params.get('n', 8.0)))
    except (TypeError, ValueError) as e:
        raise ValueError("Invalid radius spec '{}': {}".format(spec, e))
    raise ValueError("Unknown radius kind '{}' in spec '{}'".format(kind, spec))


def parse_pair(spec: str) -> CompatiblePair:
    """
    Parse a pair spec string.

    Accepted forms: 'wolff', 'powerlaw:a=2', 'interp:n=4', 'incompatible',
    each optionally followed by ',c1=..,c2=..'.
    """
    name, _, body = spec.partition(':')
    name = name.strip().lower()
    if ',' in name:
        name, _, extra = name.partition(',')
        body = extra if not body else body + ',' + extra
    params = _parse_params(body)
    if name == 'wolff':
        pair = wolff_pair()
    elif name == 'powerlaw':
        pair = power_pair(float(params.pop('a', 2.0)))
    elif name == 'interp':
        pair = interpolation_pair(float(params.pop('n', 1.0)))
    elif name == 'incompatible':
        pair = incompatible_pair()
    else:
        raise ValueError("Unknown pair '{}' in spec '{}'".format(name, spec))
    c1 = float(params.pop('c1', pair.c1))
    c2 = float(params.pop('c2', pair.c2))
    if params:
        raise ValueError("Unexpected pair parameters: {}".format(sorted(params)))
    return pair.with_constants(c1, c2)


def probe_grid(t_max: float, probes: int) -> np.ndarray:
    """0 followed by probes - 1 log-spaced points ending exactly at t_max."""
    if not (t_max > 0 and math.isfinite(t_max)):
        raise ValueError("t_max must be positive and finite")
    if probes < 2:
        raise ValueError("At least 2 probes are required")
    t_lo = min(1e-6, t_max / 10.0)
    grid = np.concatenate([[0.0], np.logspace(math.log10(t_lo), math.log10(t_max), probes - 1)])
    grid[-1] = t_max
    return grid


def compatibility_log_lhs(pair: CompatiblePair, t: np.ndarray) -> np.ndarray:
    """log of C2 / rho2(C1 / rho1(t)) for t >= 0."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide='ignore'):
        log_t = np.log(t)
    log_inner = math.log(pair.c1) - pair.rho1.log_at_log(log_t)
    log_lhs = math.log(pair.c2) - pair.rho2.log_at_log(log_inner)
    bad = ~np.isfinite(log_lhs)
    if np.any(bad):
        offending = float(t[np.argmax(bad)])
        raise ValueError("Non-finite radius evaluation at t = {!r} for pair {}".format(offending, pair.label))
    return log_lhs


def check_compatibility(pair: CompatiblePair, t_max: float = 1e8,
                        probes: int = 10_000) -> CompatibilityReport:
    """
    Probe C2 / rho2(C1 / rho1(t)) >= t on [0, t_max].

    Args:
        pair: Radius pair with constants
        t_max: Largest probed argument
        probes: Number of probe points (0, then log-spaced up to t_max)

    Returns:
        CompatibilityReport with the minimum margin and where it occurs

    Raises:
        ValueError: If either radius function evaluates to a non-finite value
    """
    t = probe_grid(t_max, probes)
    log_lhs = compatibility_log_lhs(pair, t)
    with np.errstate(divide='ignore', over='ignore'):
        log_t = np.log(t)
        lhs = np.exp(np.minimum(log_lhs, 700.0))
    satisfied = log_lhs >= log_t - COMPATIBILITY_RTOL * np.maximum(np.abs(log_t), 1.0)
    margins = lhs - t
    worst = int(np.argmin(margins))
    report = CompatibilityReport(
        holds=bool(np.all(satisfied)),
        worst_margin=float(margins[worst]),
        worst_t=float(t[worst]),
        probes=probes,
        t_max=float(t_max),
    )
    logger.debug("Compatibility of {}: holds={} worst_margin={:.3g} at t={:.3g}".format(
        pair.label, report.holds, report.worst_margin, report.worst_t))
    return report


def certify_pair(pair: CompatiblePair, t_max: float = 1e8,
                 probes: int = 10_000) -> Tuple[CompatiblePair, CompatibilityReport]:
    """Run check_compatibility and return the pair marked with the outcome."""
    report = check_compatibility(pair, t_max, probes)
    return replace(pair, compatible=report.holds), report


def _scaled(rho: RadiusFunction, outer: float, inner: float) -> RadiusFunction:
    return replace(rho, outer=rho.outer * outer, inner=rho.inner * inner)


def scale_pair(pair: CompatiblePair, k: float) -> CompatiblePair:
    """
    Apply rho1(t) -> k rho1(t / k) and rho2(t) -> rho2(k t) / k.

    The constants are unchanged and the compatibility status carries over.
    """
    if not (k > 0 and math.isfinite(k)):
        raise ValueError("Scale factor k must be positive and finite, got {}".format(k))
    return replace(
        pair,
        rho1=_scaled(pair.rho1, k, 1.0 / k),
        rho2=_scaled(pair.rho2, 1.0 / k, k),
    )
