"""
Report models for the thin-set uncertainty laboratory.

This module defines the plain result records produced by the numerical
modules (compatibility checks, thinness certificates, energy splits, Schur
sweeps, coverings, radial profiles) together with the CSV schemas used when
those records are written as report rows.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple
import math

import pandas as pd


def _finite_non_negative(name: str, value: float) -> None:
    if not math.isfinite(value) or value < 0:
        raise ValueError("{} must be finite and non-negative, got {}".format(name, value))


@dataclass
class CompatibilityReport:
    """Outcome of probing C2 / rho2(C1 / rho1(t)) >= t on a log grid."""
    holds: bool
    worst_margin: float
    worst_t: float
    probes: int
    t_max: float

    def __post_init__(self):
        """Validate report fields after initialization."""
        if self.probes < 2:
            raise ValueError("A compatibility report needs at least 2 probes")
        if not (0 <= self.worst_t <= self.t_max):
            raise ValueError("worst_t must lie in [0, t_max]")


@dataclass
class ThinnessCertificate:
    """Measured thinness of a set with respect to a radius function."""
    epsilon_measured: float
    worst_center: Tuple[float, ...]
    center_count: int
    rho_label: str
    metric: str = "euclidean"
    note: str = ""

    def __post_init__(self):
        """Validate certificate fields after initialization."""
        if not (0 <= self.epsilon_measured <= 1 + 1e-9):
            raise ValueError("epsilon_measured must be between 0 and 1")
        if self.center_count < 1:
            raise ValueError("A certificate needs at least one probed center")
        if self.metric not in ['euclidean', 'sup']:
            raise ValueError("metric must be one of: euclidean, sup")

    def holds_at(self, eps: float, rtol: float = 1e-9) -> bool:
        """Whether the measured thinness is within eps (relative tolerance rtol)."""
        return self.epsilon_measured <= eps * (1 + rtol)


@dataclass
class EnergyReport:
    """Split of the energy of a grid function over a set and its complement."""
    total: float
    on_set: float
    off_set: float

    def __post_init__(self):
        """Validate additivity after initialization."""
        for name in ('total', 'on_set', 'off_set'):
            _finite_non_negative(name, getattr(self, name))
        if abs(self.on_set + self.off_set - self.total) > 1e-10 * max(self.total, 1e-300):
            raise ValueError("on_set + off_set must equal total")

    @property
    def on_fraction(self) -> float:
        return self.on_set / self.total if self.total > 0 else 0.0


@dataclass
class SchurReport:
    """Measured kernel integrals and leakage coefficients for one sweep point."""
    sup_row: float
    sup_col: float
    sup_l_col: float
    thin_row_sup: float
    thin_col_sup: float
    epsilon: float
    leakage_alpha: float
    leakage_beta: float

    def __post_init__(self):
        """Validate that every measured quantity is finite and non-negative."""
        for name in ('sup_row', 'sup_col', 'sup_l_col', 'thin_row_sup', 'thin_col_sup',
                     'epsilon', 'leakage_alpha', 'leakage_beta'):
            _finite_non_negative(name, getattr(self, name))

    @property
    def leakage_budget(self) -> float:
        """4(alpha + beta); the reduction closes when this is at most 1/2."""
        return 4.0 * (self.leakage_alpha + self.leakage_beta)


@dataclass
class CoverResult:
    """Vitali selection of rho-adapted balls covering a target disc."""
    centers: List[Tuple[float, ...]]
    radii: List[float]
    overlap_sum: float
    target_measure: float
    constant: float
    covered: bool
    disjoint: bool
    candidate_count: int
    pitch: float
    probe_count: int = 0
    candidate_centers: Optional[object] = None
    candidate_radii: Optional[object] = None
    selected_index: Tuple[int, ...] = ()

    def __post_init__(self):
        """Validate the cover after initialization."""
        if len(self.centers) != len(self.radii):
            raise ValueError("centers and radii must have the same length")
        if self.target_measure <= 0:
            raise ValueError("Target measure must be positive")
        if any(r <= 0 for r in self.radii):
            raise ValueError("Selected radii must be positive")

    @property
    def bound(self) -> float:
        """6^d, the constant guaranteed by the third-radius selection."""
        return 6.0 ** len(self.centers[0]) if self.centers else 1.0


@dataclass
class CounterexampleInstance:
    """
    One (f_n, E_n, Sigma_n) construction for a pair violating compatibility.

    Attributes:
        k: Scale parameter (C1 = k / eps)
        n: Count of bumps per side (d = 1) or length parameter (d >= 2)
        a_n: Count of frequency windows per side (d = 1) or length parameter (d >= 2)
        eps: Thinness of both sets
        dim: Dimension
        E: Space-side set containing supp f_n
        Sigma: Frequency-side set
        ratio: int over Sigma^c of |f_n^|^2 divided by ||f_n||^2
        thinness_E: Certificate of E w.r.t. rho1
        thinness_Sigma: Certificate of Sigma w.r.t. rho2
        norm_sq: Closed-form ||f_n||^2
        requirements: Named quantities the construction wants large (or small)
        requirements_met: Whether every requirement is on the right side of 1
        leakage_parts: Fractions lost to each factor of f_n^
        f_n: Sampled function, present once the instance is materialized
        grid_checks: Grid measurements of a materialized instance
    """
    k: float
    n: int
    a_n: float
    eps: float
    dim: int
    E: object
    Sigma: object
    ratio: float
    thinness_E: ThinnessCertificate
    thinness_Sigma: ThinnessCertificate
    norm_sq: float
    requirements: dict = field(default_factory=dict)
    requirements_met: bool = True
    leakage_parts: Tuple[float, ...] = ()
    t_k: Optional[float] = None
    f_n: Optional[object] = None
    grid_checks: dict = field(default_factory=dict)

    def __post_init__(self):
        """Validate the construction parameters."""
        if not (0 < self.eps < 1):
            raise ValueError("eps must lie in (0, 1), got {}".format(self.eps))
        if self.n < 1 or self.a_n < 1:
            raise ValueError("n and a_n must be at least 1, got n={}, a_n={}".format(self.n, self.a_n))
        if not (0 <= self.ratio <= 1 + 1e-12):
            raise ValueError("ratio must lie in [0, 1], got {}".format(self.ratio))
        _finite_non_negative('norm_sq', self.norm_sq)

    @property
    def defect(self) -> float:
        """||f||^2 / (int_{E^c} |f|^2 + int_{Sigma^c} |f^|^2) = 1 / ratio, as f vanishes off E."""
        return 1.0 / self.ratio if self.ratio > 0 else math.inf

    @property
    def certified(self) -> bool:
        return self.thinness_E.holds_at(self.eps) and self.thinness_Sigma.holds_at(self.eps)


@dataclass
class PullbackReport:
    """Thinness of the level sets E = {|G| > 1 - delta}, Sigma = {|H| > 1 - delta}."""
    thinness_E: ThinnessCertificate
    thinness_Sigma: ThinnessCertificate
    density_mu1: float
    density_mu2: float
    allowance_E: float
    allowance_Sigma: float
    gradient_ratio_E: float
    gradient_ratio_Sigma: float

    def __post_init__(self):
        """Validate densities and allowances."""
        for name in ('density_mu1', 'density_mu2', 'allowance_E', 'allowance_Sigma'):
            value = getattr(self, name)
            if not (0 <= value <= 1 + 1e-9):
                raise ValueError("{} must lie in [0, 1], got {}".format(name, value))

    @property
    def passed(self) -> bool:
        return (self.thinness_E.epsilon_measured <= self.allowance_E
                and self.thinness_Sigma.epsilon_measured <= self.allowance_Sigma)


@dataclass
class ContractionResult:
    """
    Power-iteration estimate of ||T_H T_G||.

    Attributes:
        beta: Square root of the last Rayleigh quotient
        beta_interval: Bracket around beta from the last residual
        iterations: Power iterations run
        converged: Whether the relative change dropped below tolerance
        rayleigh_history: Rayleigh quotients, one per iteration
        c_emp: Uncertainty constant measured on the level sets
        bound_chain_value: 1 - (1 - (1 - delta)^2) / max(1, c_emp), a bound on beta^2
        delta: Level threshold used for the level sets
    """
    beta: float
    beta_interval: Tuple[float, float]
    iterations: int
    converged: bool
    rayleigh_history: Tuple[float, ...] = ()
    c_emp: float = math.nan
    bound_chain_value: float = math.nan
    delta: float = math.nan

    def __post_init__(self):
        """Validate the estimate."""
        if not (0 <= self.beta <= 1 + 1e-9):
            raise ValueError("beta must lie in [0, 1], got {}".format(self.beta))
        if self.beta_interval[0] > self.beta_interval[1]:
            raise ValueError("beta_interval must satisfy lower <= upper")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")


@dataclass
class RadialProfile:
    """Samples of p(t), the transform of |phi| along a ray, and its decay fit."""
    t: object
    p: object
    dp: object
    slope: float
    intercept: float
    fit_window: Tuple[float, float]
    partial_integrals: dict = field(default_factory=dict)

    def __post_init__(self):
        """Validate the fit window."""
        if not (0 < self.fit_window[0] < self.fit_window[1]):
            raise ValueError("Fit window must satisfy 0 < t_lo < t_hi")


def validate_dataframe_schema(df: pd.DataFrame, expected_columns: List[str],
                              data_type: str) -> bool:
    """
    Validate that a DataFrame has the expected schema.

    Args:
        df: DataFrame to validate
        expected_columns: List of expected column names
        data_type: Type of data for error messages

    Returns:
        True if schema is valid

    Raises:
        ValueError: If schema validation fails
    """
    missing_columns = set(expected_columns) - set(df.columns)
    if missing_columns:
        raise ValueError("{} data missing required columns: {}".format(data_type, sorted(missing_columns)))

    if df.empty:
        raise ValueError("{} data is empty".format(data_type))

    return True


def validate_report_row(row: dict, schema: List[str], data_type: str) -> dict:
    """Return row restricted to schema order; raise if a column is absent."""
    missing = [col for col in schema if col not in row]
    if missing:
        raise ValueError("{} row missing columns: {}".format(data_type, missing))
    return {col: row[col] for col in schema}


# Schema definitions for CSV reports and inputs
INTERVAL_SET_SCHEMA = ['lower', 'upper']

BOX_SET_SCHEMA_PREFIX = ['lower_', 'upper_']

RADIUS_TABLE_SCHEMA = ['t', 'rho']

GRID_FUNCTION_SCHEMA = ['x', 're', 'im']

CONDITION_SCHEMA = [
    'config_hash', 'rho1', 'rho2', 'C1', 'C2', 'k', 't_max',
    'holds', 'worst_margin', 'worst_t'
]

THINNESS_SCHEMA = [
    'config_hash', 'set', 'rho', 'metric', 'epsilon_measured',
    'worst_center', 'center_count', 'note'
]

OPERATORS_SCHEMA = [
    'config_hash', 'rho1', 'rho2', 'C1', 'C2', 'eps', 'sup_row', 'sup_col',
    'sup_l_col', 'thin_row_sup', 'thin_col_sup', 'alpha', 'beta', 'C_emp'
]

COVER_SCHEMA = [
    'config_hash', 'd', 'x', 'r', 'rho1', 'selected', 'constant',
    'bound', 'covered', 'disjoint'
]

COVER_DUMP_SCHEMA = ['center', 'radius', 'selected']

COUNTEREXAMPLE_SCHEMA = [
    'config_hash', 'dim', 'k', 'n', 'a_n', 'ratio', 'thinness_E',
    'thinness_Sigma', 'defect'
]

CONTRACTION_SCHEMA = [
    'config_hash', 'p', 'delta', 'eps_E', 'eps_Sigma', 'beta', 'bound_chain_value'
]

PROFILE_SCHEMA = [
    'config_hash', 'd', 'phi_l1', 'slope', 'fit_lo', 'fit_hi',
    'integral_64', 'integral_128'
]
