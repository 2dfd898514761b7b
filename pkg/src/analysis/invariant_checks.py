"""
Invariant checks on experiment report rows.

Each experiment hands its rows (as a DataFrame) to an InvariantValidator.
Failed invariants are collected as issues and make the run exit with
status 1; softer findings are collected as warnings and only logged.
"""

from typing import Dict, List, Optional, Sequence
import logging
import math

import numpy as np
import pandas as pd

from analysis.decay_fits import band_factor, relative_spread

logger = logging.getLogger(__name__)

RTOL = 1e-9
SCHUR_ROW_FACTOR = 3.0
EPS_BAND = 3.0
PROFILE_SLOPE = -1.8
PROFILE_CONVERGENCE = 0.05
LADDER_DROP = 0.1
LADDER_SPAN = 8.0
CONTRACTION_MARGIN = 1e-3


class InvariantValidator:
    """
    Collects issues and warnings for one experiment's report rows.
    """

    def __init__(self, experiment: str):
        """Initialize an empty report for the named experiment."""
        self.experiment = experiment
        self.issues: List[str] = []
        self.warnings: List[str] = []
        self.metrics: Dict[str, float] = {}

    def require(self, condition: bool, message: str) -> bool:
        """Record an issue unless condition holds."""
        if not condition:
            self.issues.append(message)
            logger.error("[{}] invariant failed: {}".format(self.experiment, message))
        return bool(condition)

    def advise(self, condition: bool, message: str) -> bool:
        """Record a warning unless condition holds."""
        if not condition:
            self.warnings.append(message)
            logger.warning("[{}] {}".format(self.experiment, message))
        return bool(condition)

    def validate_rows(self, rows: pd.DataFrame, schema: Sequence[str]) -> bool:
        """
        Check schema, emptiness, non-finite numbers and duplicate rows.

        Returns:
            True if the rows can be checked further
        """
        missing = [col for col in schema if col not in rows.columns]
        if not self.require(not missing, "Missing report columns: {}".format(missing)):
            return False
        if not self.require(len(rows) > 0, "Report is empty"):
            return False
        numeric = rows.select_dtypes(include=[np.number])
        bad_cols = [col for col in numeric.columns if not np.all(np.isfinite(numeric[col].astype(float)))]
        self.advise(not bad_cols, "Non-finite values in columns: {}".format(bad_cols))
        duplicates = int(rows.duplicated().sum())
        self.advise(duplicates == 0, "{} duplicate rows".format(duplicates))
        self.metrics['rows'] = float(len(rows))
        return True

    def check_stability(self, name: str, values: Sequence[float], tolerance: float) -> None:
        """Relative spread of a metric under refinement must stay within tolerance."""
        spread = relative_spread(values)
        self.metrics['{}_spread'.format(name)] = spread
        self.require(spread <= tolerance, "{} changes by {:.3g} under refinement (tolerance {:g})".format(
            name, spread, tolerance))

    # Per-experiment checks

    def check_condition(self, rows: pd.DataFrame, context: Dict) -> None:
        """The scale transform must not change the compatibility verdict of a pair."""
        self.require(bool(np.all((rows['worst_t'] >= 0) & (rows['worst_t'] <= rows['t_max']))),
                     "worst_t outside [0, t_max]")
        for pair, group in rows.groupby(['rho1', 'rho2', 'C1', 'C2']):
            self.require(group['holds'].nunique() == 1,
                         "Scaling changed the verdict for {}".format(pair))
        self.metrics['holds_fraction'] = float(rows['holds'].mean())

    def check_thinness(self, rows: pd.DataFrame, context: Dict) -> None:
        eps = rows['epsilon_measured'].astype(float)
        self.require(bool(np.all((eps >= 0) & (eps <= 1 + RTOL))), "epsilon_measured outside [0, 1]")
        nominal = context.get('eps')
        if nominal is not None:
            self.advise(bool(np.all(eps <= nominal * (1 + RTOL))),
                        "Measured thinness {:.4g} above nominal {:g}".format(float(eps.max()), nominal))
        self.metrics['epsilon_max'] = float(eps.max())

    def check_schur(self, rows: pd.DataFrame, context: Dict) -> None:
        """sup_row within 3 ||phi||_1 and thin integrals linear in eps within a factor-3 band."""
        phi_l1 = context.get('phi_l1')
        if phi_l1 is not None:
            worst = float(rows['sup_row'].max())
            self.require(worst <= SCHUR_ROW_FACTOR * phi_l1 * (1 + 1e-6),
                         "sup_row {:.6g} exceeds 3 ||phi||_1 = {:.6g}".format(worst, SCHUR_ROW_FACTOR * phi_l1))
        if len(rows) > 1:
            for col in ('thin_row_sup', 'thin_col_sup'):
                scaled = rows[col].astype(float) / rows['eps'].astype(float)
                if np.all(scaled > 0):
                    band = band_factor(scaled)
                    self.metrics['{}_band'.format(col)] = band
                    self.require(band <= EPS_BAND, "{}/eps varies by a factor {:.3g} (> {:g})".format(
                        col, band, EPS_BAND))

    def check_up(self, rows: pd.DataFrame, context: Dict) -> None:
        """C_emp must not exceed the reduction-chain constant when the leakage budget closes."""
        for _, row in rows.iterrows():
            budget = 4.0 * (row['alpha'] + row['beta'])
            bound = context.get('bound_constant', math.inf)
            if budget <= 0.5:
                self.require(row['C_emp'] <= bound * (1 + RTOL),
                             "C_emp {:.6g} exceeds the chain constant {:.6g}".format(row['C_emp'], bound))
            else:
                self.advise(False, "Leakage budget 4(alpha + beta) = {:.4g} > 1/2; no constant certified".format(
                    budget))
        self.metrics['C_emp_max'] = float(rows['C_emp'].max())

    def check_cover(self, rows: pd.DataFrame, context: Dict) -> None:
        self.require(bool(rows['covered'].all()), "{} covers miss probe points".format(int((~rows['covered']).sum())))
        self.require(bool(rows['disjoint'].all()), "{} selections overlap".format(int((~rows['disjoint']).sum())))
        excess = rows['constant'] > rows['bound'] * (1 + RTOL)
        self.require(not bool(excess.any()), "{} constants exceed 6^d".format(int(excess.sum())))
        self.metrics['constant_over_bound'] = float((rows['constant'] / rows['bound']).max())

    def check_counterexample(self, rows: pd.DataFrame, context: Dict) -> None:
        """Ratios strictly decrease along the k ladder, drop tenfold over k -> 8k, and both sets stay eps-thin."""
        eps = context.get('eps')
        for dim, group in rows.groupby('dim'):
            ordered = group.sort_values('k')
            ratios = ordered['ratio'].to_numpy(dtype=float)
            ks = ordered['k'].to_numpy(dtype=float)
            self.require(bool(np.all(np.diff(ratios) < 0)),
                         "d={}: ratios are not strictly decreasing in k".format(dim))
            if ks[-1] / ks[0] >= LADDER_SPAN:
                self.require(ratios[-1] / ratios[0] <= LADDER_DROP,
                             "d={}: ratio drops only by {:.3g} from k={:g} to k={:g}".format(
                                 dim, ratios[-1] / ratios[0], ks[0], ks[-1]))
            if eps is not None:
                for col in ('thinness_E', 'thinness_Sigma'):
                    self.require(bool(np.all(group[col] <= eps * (1 + RTOL))),
                                 "d={}: {} above eps = {:g}".format(dim, col, eps))

    def check_contraction(self, rows: pd.DataFrame, context: Dict) -> None:
        """beta < 1 and beta^2 under the chain value built from the measured constant."""
        beta = rows['beta'].astype(float)
        self.require(bool(np.all(beta < 1.0)), "beta reaches 1")
        self.require(bool(np.all(beta ** 2 <= rows['bound_chain_value'] + RTOL)),
                     "beta^2 exceeds the bound chain value")
        self.advise(bool(np.all(beta <= 1.0 - CONTRACTION_MARGIN)),
                    "beta {:.6f} within {:g} of 1".format(float(beta.max()), CONTRACTION_MARGIN))

    def check_profile(self, rows: pd.DataFrame, context: Dict) -> None:
        """|p'| decays at least like t^-1.8 and its partial integrals settle."""
        for _, row in rows.iterrows():
            self.require(row['slope'] <= PROFILE_SLOPE, "Fitted slope {:.3f} above {:g}".format(
                row['slope'], PROFILE_SLOPE))
            change = abs(row['integral_128'] - row['integral_64']) / max(abs(row['integral_128']), 1e-300)
            self.require(change <= PROFILE_CONVERGENCE,
                         "Partial integrals of |p'| differ by {:.3g}".format(change))

    def result(self) -> Dict:
        return {
            'experiment': self.experiment,
            'is_valid': not self.issues,
            'issues': list(self.issues),
            'warnings': list(self.warnings),
            'metrics': dict(self.metrics),
        }

    def get_summary(self) -> str:
        """One-line summary for the log."""
        status = "passed" if not self.issues else "FAILED"
        return "{}: invariants {} ({} issues, {} warnings)".format(
            self.experiment, status, len(self.issues), len(self.warnings))


CHECKS = {
    'verify-condition': InvariantValidator.check_condition,
    'thinness': InvariantValidator.check_thinness,
    'schur': InvariantValidator.check_schur,
    'up': InvariantValidator.check_up,
    'cover': InvariantValidator.check_cover,
    'counterexample': InvariantValidator.check_counterexample,
    'contraction': InvariantValidator.check_contraction,
    'profile': InvariantValidator.check_profile,
}


def validate_experiment(experiment: str, rows: pd.DataFrame, schema: Sequence[str],
                        context: Optional[Dict] = None) -> InvariantValidator:
    """
    Run the schema checks and the experiment's invariants on its rows.

    Args:
        experiment: Experiment name (a key of CHECKS)
        rows: Report rows
        schema: Expected columns
        context: Extra values the checks compare against (eps, phi_l1, ...)

    Returns:
        InvariantValidator holding the issues, warnings and metrics
    """
    if experiment not in CHECKS:
        raise ValueError("Unknown experiment '{}'".format(experiment))
    validator = InvariantValidator(experiment)
    if validator.validate_rows(rows, schema):
        CHECKS[experiment](validator, rows, context or {})
    logger.info(validator.get_summary())
    return validator


def test_invariant_checks():
    """Validate a healthy and a broken counterexample ladder."""
    print("Testing Invariant Checks Module")
    print("=" * 50)

    healthy = pd.DataFrame({
        'config_hash': ['demo'] * 4, 'dim': [1] * 4, 'k': [2.0, 4.0, 8.0, 16.0],
        'n': [32000, 1024000, 32768000, 1048576000], 'a_n': [1e6, 4e7, 1.6e9, 6.4e10],
        'ratio': [0.03, 0.008, 0.002, 0.0005], 'thinness_E': [0.1] * 4, 'thinness_Sigma': [0.099] * 4,
        'defect': [33.3, 125.0, 500.0, 2000.0],
    })
    schema = list(healthy.columns)
    print(validate_experiment('counterexample', healthy, schema, {'eps': 0.1}).get_summary())

    broken = healthy.assign(ratio=[0.03, 0.04, 0.002, 0.0005])
    validator = validate_experiment('counterexample', broken, schema, {'eps': 0.1})
    for issue in validator.issues:
        print("  issue: {}".format(issue))

    print("\nInvariant checks module test completed successfully!")


if __name__ == "__main__":
    test_invariant_checks()
