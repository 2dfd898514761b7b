"""
Property-based tests for S, T, the kernels K and L, and the measured bounds.

**Feature: thin-set-uncertainty-lab, Property 13: Splitting Operators**
"""

import pytest
import numpy as np
from hypothesis import given, strategies as st, settings
import math
import os
import sys

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from analysis.operators import (
    OperatorPair, apply_S, apply_T, kernel_K, kernel_L, schur_bounds,
    verify_up_inequality, epsilon_sweep, bound_constant, leakages
)
from analysis.mollifier import cutoff_profile
from analysis.spectral import GridFunction, GridSpec, forward_transform, inverse_transform
from data.corpus import sample_corpus, gaussian
from models.data_models import SchurReport
from models.radius import wolff_pair, power_pair, incompatible_pair
from models.sets import IntervalSet, periodic_thin_set


SMALL_GRID = GridSpec(1024, 32.0)
WIDE_GRID = GridSpec(4096, 64.0)


@pytest.fixture(scope="module")
def small_op():
    return OperatorPair.build(wolff_pair(), SMALL_GRID)


@pytest.fixture(scope="module")
def wide_op():
    return OperatorPair.build(wolff_pair(), WIDE_GRID)


def _relative_error(a: GridFunction, b: GridFunction) -> float:
    return math.sqrt(a.with_values(a.values - b.values).norm_sq() / b.norm_sq())


class TestSplittingProperties:
    """S f + T f = f and the multiplier regimes."""

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=10, deadline=None)
    def test_split_identity(self, small_op, seed):
        """
        **Feature: thin-set-uncertainty-lab, Property 13: Split Identity**

        ||S f + T f - f|| <= 1e-8 ||f|| on the corpus (2^J covers the domain).
        """
        for _, f in sample_corpus(SMALL_GRID, count=3, seed=seed):
            total = f.with_values(apply_S(small_op, f).values + apply_T(small_op, f).values)
            assert _relative_error(total, f) <= 1e-8

    def test_band_limited_passes_through_S(self, small_op):
        """f^ supported in |y| <= C1 / rho1(1/2) = 1 gives S f = f and T f = 0."""
        probe = forward_transform(gaussian(SMALL_GRID))
        F = probe.with_values(cutoff_profile(2.0 * np.abs(probe.axes[0])) * np.exp(2j * math.pi * 0.7 * probe.axes[0]))
        f = inverse_transform(F)
        assert _relative_error(apply_S(small_op, f), f) <= 1e-8
        assert math.sqrt(apply_T(small_op, f).norm_sq() / f.norm_sq()) <= 1e-8

    def test_zero_function(self, small_op):
        zero = GridFunction(np.zeros(1024), (32.0,))
        assert np.all(apply_S(small_op, zero).values == 0)
        assert np.all(apply_T(small_op, zero).values == 0)

    def test_grid_mismatch(self, small_op):
        with pytest.raises(ValueError, match="Grid mismatch"):
            apply_S(small_op, gaussian(GridSpec(2048, 32.0)))
        with pytest.raises(ValueError):
            apply_T(small_op, forward_transform(gaussian(SMALL_GRID)))

    def test_oscillatory_function_goes_to_T(self, wide_op):
        """Frequencies far outside the low-level plateaus: T f = f sum_j psi_j."""
        f = GridFunction.sample(lambda x: np.exp(-math.pi * (x / 0.5) ** 2) * np.exp(2j * math.pi * 24.0 * x),
                                WIDE_GRID)
        x = f.axes[0]
        partition = sum(wide_op.system.partition_term(j, x) for j in range(wide_op.j_max + 1))
        assert _relative_error(apply_T(wide_op, f), f.with_values(f.values * partition)) <= 1e-8

    def test_pair_and_system_must_agree(self, small_op):
        with pytest.raises(ValueError):
            OperatorPair(small_op.system, power_pair(2.0), SMALL_GRID)
        with pytest.raises(ValueError):
            OperatorPair(small_op.system, wolff_pair(), GridSpec(64, 8.0, dimension=2))


class TestKernelProperties:
    """Pointwise kernels and the two-path consistency checks."""

    def test_inner_ball_uses_level_zero(self, small_op):
        y = np.linspace(-5.0, 5.0, 101)
        for x in (0.0, 0.3, -1.0):
            expected = small_op.system.phi_j(-1, x - y)
            assert np.allclose(kernel_K(small_op, x, y), expected, rtol=0, atol=1e-14)

    @pytest.mark.parametrize("x", [0.0, 0.9, 3.0, 7.5, 15.0])
    def test_rows_integrate_to_one(self, small_op, x):
        """
        **Feature: thin-set-uncertainty-lab, Property 14: Kernel Row Mass**

        int K(x, y) dy = sum_j psi_j(x) int phi = 1 for |x| <= 2^J.
        """
        assert small_op.row_integral(x, absolute=False) == pytest.approx(1.0, abs=1e-5)

    def test_kernel_path_matches_multiplier_path_for_S(self, wide_op):
        f = GridFunction.sample(lambda x: np.exp(-math.pi * ((x - 1.0) / 1.5) ** 2) * np.exp(2j * math.pi * 2.0 * x),
                                WIDE_GRID)
        index = np.array([100, 1500, 2048, 2100, 2400, 3900])
        points = f.axes[0][index]
        via_kernel = wide_op.kernel_apply_S(f, points)
        via_multiplier = apply_S(wide_op, f).values[index]
        assert np.max(np.abs(via_kernel - via_multiplier)) <= 1e-4 * np.max(np.abs(f.values))

    def test_l_vanishes_at_zero_frequency(self, small_op):
        x = np.linspace(-10.0, 10.0, 201)
        assert np.all(kernel_L(small_op, x, 0.0) == 0.0)

    def test_l_coefficients_are_non_negative(self, small_op):
        y = np.linspace(-40.0, 40.0, 8001)
        for j in range(small_op.j_max + 1):
            assert np.all(small_op.l_coefficient(j, y) >= 0.0)

    def test_kernel_path_matches_multiplier_path_for_T(self):
        """(T f)^ = int L(x, y) f^(y) dy, with the top level carrying the remainder."""
        op = OperatorPair.build(wolff_pair(), WIDE_GRID, j_max=3)
        f = GridFunction.sample(lambda x: np.exp(-math.pi * (x - 0.5) ** 2) * np.exp(2j * math.pi * 3.0 * x),
                                WIDE_GRID)
        transformed = forward_transform(apply_T(op, f))
        index = np.array([1800, 2048, 2100, 2200, 2300, 2600])
        via_kernel = op.kernel_transform_T(f, transformed.axes[0][index])
        scale = np.max(np.abs(forward_transform(f).values))
        assert np.max(np.abs(via_kernel - transformed.values[index])) <= 1e-4 * scale


class TestSchurProperties:
    """Measured Schur integrals and leakages."""

    def test_row_bound_and_empty_sets(self, small_op):
        """
        **Feature: thin-set-uncertainty-lab, Property 15: Schur Row Bound**

        sup_x int |K(x, y)| dy <= 3 ||phi||_1; empty E gives no thin mass and no leakage.
        """
        corpus = sample_corpus(SMALL_GRID, count=2, seed=1)
        report = schur_bounds(small_op, IntervalSet([]), IntervalSet([]), probes=24, corpus=corpus)
        assert report.sup_row <= 3 * small_op.system.phi_l1 * (1 + 1e-6)
        assert report.sup_row >= small_op.system.phi_l1 * (1 - 1e-2)
        assert report.thin_row_sup == 0.0 and report.thin_col_sup == 0.0
        assert report.leakage_alpha == 0.0 and report.leakage_beta == 0.0
        with pytest.raises(ValueError):
            schur_bounds(small_op, IntervalSet([]), IntervalSet([]), probes=0, corpus=corpus)

    def test_thin_mass_is_linear_in_eps(self, small_op):
        """thin_row_sup / eps stays within a factor 3 across the sweep."""
        corpus = sample_corpus(SMALL_GRID, count=2, seed=2)
        reports = epsilon_sweep(small_op, probes=24, corpus=corpus)
        ratios = [r.thin_row_sup / r.epsilon for r in reports]
        assert [r.epsilon for r in reports] == [0.02, 0.05, 0.1, 0.2]
        assert max(ratios) <= 3 * min(ratios)
        assert all(r.thin_col_sup > 0 for r in reports)

    def test_schur_integrals_do_not_depend_on_rho1(self):
        """sup_row, sup_col and the L column integral vary by less than a factor 10 across rho1 families."""
        corpus = sample_corpus(SMALL_GRID, count=1, seed=3)
        rows, cols, l_cols = [], [], []
        for pair in (power_pair(1.0), power_pair(2.0), power_pair(0.5), power_pair(0.05)):
            op = OperatorPair.build(pair, SMALL_GRID)
            report = schur_bounds(op, IntervalSet([]), IntervalSet([]), probes=12, corpus=corpus)
            rows.append(report.sup_row)
            cols.append(report.sup_col)
            l_cols.append(report.sup_l_col)
        assert max(rows) < 10 * min(rows)
        assert max(cols) < 10 * min(cols)
        assert min(l_cols) > 0
        assert max(l_cols) < 10 * min(l_cols)

    def test_bound_constant(self):
        closed = SchurReport(1.0, 2.0, 1.5, 0.1, 0.1, 0.01, 0.05, 0.05)
        assert bound_constant(closed) == 16.0
        open_budget = SchurReport(1.0, 2.0, 1.5, 0.1, 0.1, 0.01, 0.1, 0.1)
        assert bound_constant(open_budget) == math.inf


class TestUncertaintyProperties:
    """Empirical constants over the corpus."""

    def test_empty_sets_give_one_half(self, small_op):
        corpus = sample_corpus(SMALL_GRID, count=5, seed=4)
        result = verify_up_inequality(small_op, IntervalSet([]), IntervalSet([]), corpus)
        assert result['C_emp'] == pytest.approx(0.5, rel=1e-10)
        assert result['worst_function'] in {fid for fid, _ in corpus}
        assert result['compatible']

    def test_thin_lattices_are_certified(self, small_op):
        """
        **Feature: thin-set-uncertainty-lab, Property 16: Empirical Constant Stability**

        Wolff pair, eps = 0.01 lattices: finite C_emp, stable under doubling the corpus,
        and the measured leakages close the reduction.
        """
        target = periodic_thin_set(1, 8, 0.005)
        half = verify_up_inequality(small_op, target, target, sample_corpus(SMALL_GRID, count=50, seed=0))
        full = verify_up_inequality(small_op, target, target, sample_corpus(SMALL_GRID, count=100, seed=0))
        assert math.isfinite(half['C_emp'])
        assert abs(full['C_emp'] - half['C_emp']) < 0.1 * half['C_emp']
        assert half['sufficient'] and half['leakage_budget'] <= 0.5

    def test_constant_is_stable_under_grid_doubling(self, small_op):
        """The same corpus functions resampled with twice the samples move C_emp by under 10%."""
        target = periodic_thin_set(1, 8, 0.005)
        coarse = verify_up_inequality(small_op, target, target, sample_corpus(SMALL_GRID, count=20, seed=0))
        fine_corpus = sample_corpus(SMALL_GRID.refined(), count=20, seed=0, drawn_for=SMALL_GRID)
        assert fine_corpus[0][1].values.shape == (2048,)
        fine = verify_up_inequality(small_op, target, target, fine_corpus)
        assert abs(fine['C_emp'] - coarse['C_emp']) < 0.1 * coarse['C_emp']

    def test_incompatible_pair_still_computes(self, caplog):
        op = OperatorPair.build(incompatible_pair(), SMALL_GRID)
        corpus = sample_corpus(SMALL_GRID, count=2, seed=5)
        result = verify_up_inequality(op, IntervalSet([]), IntervalSet([]), corpus)
        assert not result['compatible']
        assert math.isfinite(result['C_emp'])
        assert "not compatible" in caplog.text

    def test_leakages_are_bounded_by_one(self, small_op):
        corpus = sample_corpus(SMALL_GRID, count=3, seed=6)
        domain = corpus[0][1].domain_set()
        alpha, beta = leakages(small_op, domain, IntervalSet([]), corpus)
        assert alpha > 0.0
        assert beta == 0.0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
