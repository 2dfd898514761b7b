"""
Property-based tests for the contraction pairs T_H T_G.

**Feature: thin-set-uncertainty-lab, Property 20: Contraction**
"""

import pytest
import numpy as np
from hypothesis import given, strategies as st, settings
import math
import os
import sys

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from analysis.contraction import (
    AtomicMeasure, SymbolPair, bernoulli_measure, parse_measure, char_function,
    level_set_density, pullback_thinness, operator_norm, composition_norm,
    apply_space_symbol, apply_composition, contraction_sweep, refinement_check,
    bound_chain_value
)
from analysis.spectral import GridSpec
from data.corpus import sample_corpus
from models.data_models import CONTRACTION_SCHEMA

GRID = GridSpec(4096, 64.0)


@pytest.fixture(scope="module")
def bernoulli_result():
    mu = bernoulli_measure()
    return composition_norm(SymbolPair(mu, mu, p=2.0, delta=0.05), GRID)


class TestMeasureProperties:
    """Atomic measures and their characteristic functions."""

    def test_bernoulli_modulus(self):
        xi = np.linspace(-5.0, 5.0, 2001)
        assert np.allclose(np.abs(char_function(bernoulli_measure(), xi)), np.abs(np.cos(np.pi * xi)), atol=1e-12)

    @given(locations=st.lists(st.floats(min_value=-10, max_value=10), min_size=2, max_size=6, unique=True),
           raw=st.lists(st.floats(min_value=0.1, max_value=5.0), min_size=6, max_size=6))
    @settings(max_examples=30, deadline=None)
    def test_total_mass_and_bound(self, locations, raw):
        weights = np.asarray(raw[:len(locations)])
        weights = weights / weights.sum()
        mu = AtomicMeasure(tuple(locations), tuple(weights.tolist()[:-1]) + (1.0 - float(weights[:-1].sum()),))
        assert char_function(mu, 0.0) == pytest.approx(1.0, abs=1e-12)
        xi = np.linspace(-3.0, 3.0, 301)
        assert np.all(np.abs(char_function(mu, xi)) <= 1.0 + 1e-12)

    def test_parse_measure(self):
        mu = parse_measure('atoms:0:0.5,1:0.5')
        assert mu == bernoulli_measure()
        assert parse_measure('bernoulli') == mu
        with pytest.raises(ValueError):
            parse_measure('atoms:0:1.0')
        with pytest.raises(ValueError):
            parse_measure('atoms:0:0.5,1:0.6')
        with pytest.raises(ValueError):
            parse_measure('gauss:1')

    def test_point_mass_is_rejected(self):
        with pytest.raises(ValueError, match="point mass"):
            AtomicMeasure((0.0,), (1.0,))
        with pytest.raises(ValueError):
            AtomicMeasure((0.0, 0.0), (0.5, 0.5))


class TestLevelSetProperties:
    """Density of F = {|mu^| > 1 - delta} on unit windows."""

    @given(delta=st.floats(min_value=0.001, max_value=0.9))
    @settings(max_examples=25, deadline=None)
    def test_bernoulli_closed_form(self, delta):
        """
        **Feature: thin-set-uncertainty-lab, Property 20: Level-Set Density**

        |cos(pi xi)| > 1 - delta on a window of measure 2 arccos(1 - delta) / pi per period.
        """
        expected = 2.0 * math.acos(1.0 - delta) / math.pi
        assert level_set_density(bernoulli_measure(), delta) == pytest.approx(expected, rel=1e-8, abs=1e-10)

    def test_reference_value(self):
        assert level_set_density(bernoulli_measure(), 0.1) == pytest.approx(0.2871, abs=1e-4)

    def test_monotone_shrinkage(self):
        mu = AtomicMeasure((0.0, 1.0, math.sqrt(2.0)), (0.5, 0.3, 0.2))
        densities = [level_set_density(mu, delta) for delta in (0.3, 0.1, 0.03, 0.01)]
        assert all(b <= a for a, b in zip(densities, densities[1:]))
        assert level_set_density(bernoulli_measure(), 0.01) < level_set_density(bernoulli_measure(), 0.1)

    def test_threshold_near_zero(self):
        assert level_set_density(bernoulli_measure(), 0.999) == pytest.approx(1.0, abs=1e-3)

    def test_refusals(self):
        with pytest.raises(ValueError):
            level_set_density(bernoulli_measure(), 0.0)
        with pytest.raises(ValueError):
            level_set_density(bernoulli_measure(), 1.0)


class TestSymbolProperties:
    """SymbolPair invariants."""

    @given(p=st.floats(min_value=1.05, max_value=20.0))
    @settings(max_examples=30, deadline=None)
    def test_conjugate_exponents(self, p):
        sym = SymbolPair(bernoulli_measure(), bernoulli_measure(), p=p)
        assert (sym.p - 1.0) * (sym.p_conjugate - 1.0) == pytest.approx(1.0, rel=1e-12)
        assert 1.0 / sym.p + 1.0 / sym.p_conjugate == pytest.approx(1.0, rel=1e-12)

    def test_symbols_are_dominated(self):
        sym = SymbolPair(bernoulli_measure(), bernoulli_measure(), p=3.0)
        x = np.linspace(-10.0, 10.0, 4001)
        assert np.all(np.abs(sym.G(x)) <= np.abs(char_function(sym.mu1, np.abs(x) ** 3)) + 1e-12)
        assert np.all(np.abs(sym.H(x)) <= np.abs(char_function(sym.mu2, np.abs(x) ** 1.5)) + 1e-12)
        assert np.all(sym.G(x)[np.abs(x) >= sym.window] == 0)

    def test_refusals(self):
        mu = bernoulli_measure()
        with pytest.raises(ValueError):
            SymbolPair(mu, mu, p=1.0)
        with pytest.raises(ValueError):
            SymbolPair(mu, mu, delta=1.5)
        with pytest.raises(ValueError):
            SymbolPair(mu, mu, dimension=2, space_coefficients=(1.0,))
        with pytest.raises(ValueError):
            SymbolPair(mu, mu, dimension=2, space_coefficients=(1.0, 0.0))


class TestPullbackProperties:
    """Thinness of the pulled-back level sets."""

    def test_bernoulli_pair_passes(self):
        """
        **Feature: thin-set-uncertainty-lab, Property 20: Pullback Thinness**

        p = 2, delta = 0.05: both level sets certify within max(eps^(1/p), eps).
        """
        sym = SymbolPair(bernoulli_measure(), bernoulli_measure(), p=2.0, delta=0.05)
        report = pullback_thinness(sym, eps_target=0.25)
        assert report.passed
        assert report.density_mu1 == pytest.approx(2.0 * math.acos(0.95) / math.pi, rel=1e-8)
        assert report.thinness_E.epsilon_measured > 0
        assert report.gradient_ratio_E <= 4.0
        assert report.gradient_ratio_Sigma <= 4.0

    def test_tiny_delta_gives_nearly_empty_sets(self):
        sym = SymbolPair(bernoulli_measure(), bernoulli_measure(), p=2.0, delta=1e-6)
        report = pullback_thinness(sym)
        assert report.thinness_E.epsilon_measured < 0.05
        assert report.thinness_Sigma.epsilon_measured < 0.05

    def test_two_dimensional_sets(self):
        sym = SymbolPair(bernoulli_measure(), bernoulli_measure(), p=2.0, delta=0.05,
                         dimension=2, window=2.0)
        report = pullback_thinness(sym, eps_target=0.25)
        assert report.thinness_E.metric == 'sup'
        assert 0 < report.thinness_E.epsilon_measured <= 1.0
        assert report.gradient_ratio_E <= 4.0


class TestCompositionProperties:
    """Power-iteration estimate of ||T_H T_G||."""

    def test_unit_symbols(self):
        result, _ = operator_norm(lambda *x: np.ones_like(x[0]), lambda *x: np.ones_like(x[0]), GridSpec(1024, 16.0))
        assert result.beta == pytest.approx(1.0, abs=1e-9)
        assert result.converged

    def test_zero_symbol(self):
        result, _ = operator_norm(lambda *x: np.zeros_like(x[0]), lambda *x: np.ones_like(x[0]), GridSpec(1024, 16.0))
        assert result.beta == 0.0
        assert result.beta_interval == (0.0, 0.0)

    def test_symbols_above_one_are_refused(self):
        with pytest.raises(ValueError, match="bounded by 1"):
            operator_norm(lambda *x: 2.0 * np.ones_like(x[0]), lambda *x: np.ones_like(x[0]), GridSpec(64, 8.0))

    def test_bernoulli_contraction(self, bernoulli_result):
        """
        **Feature: thin-set-uncertainty-lab, Property 20: Strict Contraction**

        beta <= 1 - 1e-3 and beta^2 sits under the chain value built from C_emp.
        """
        assert bernoulli_result.beta <= 1.0 - 1e-3
        assert bernoulli_result.beta > 0.0
        assert bernoulli_result.beta ** 2 <= bernoulli_result.bound_chain_value + 1e-9
        assert bernoulli_result.bound_chain_value < 1.0
        assert bernoulli_result.c_emp >= 1.0 or bernoulli_result.bound_chain_value == pytest.approx(0.95 ** 2)

    def test_rayleigh_quotients_increase(self, bernoulli_result):
        history = bernoulli_result.rayleigh_history
        assert len(history) == bernoulli_result.iterations
        assert all(b >= a * (1 - 1e-12) for a, b in zip(history, history[1:]))
        lo, hi = bernoulli_result.beta_interval
        assert lo <= bernoulli_result.beta <= hi <= 1.0

    def test_grid_refinement(self):
        sym = SymbolPair(bernoulli_measure(), bernoulli_measure(), p=2.0, delta=0.05)
        check = refinement_check(sym, GRID)
        assert check['relative_change'] < 1e-2
        assert check['beta_refined'] <= 1.0 - 1e-3

    def test_two_dimensional_contraction(self):
        sym = SymbolPair(bernoulli_measure(), bernoulli_measure(), p=2.0, delta=0.05, dimension=2,
                         window=2.0, space_coefficients=(1.0, 2.0), frequency_coefficients=(1.0, 1.0))
        result = composition_norm(sym, GridSpec(512, 16.0, 2), corpus_count=4)
        assert 0.0 < result.beta < 1.0
        assert result.beta ** 2 <= result.bound_chain_value + 1e-9

    def test_dimension_mismatch(self):
        sym = SymbolPair(bernoulli_measure(), bernoulli_measure())
        with pytest.raises(ValueError):
            composition_norm(sym, GridSpec(64, 8.0, 2))


class TestContractionBoundProperties:
    """||T_G f|| <= ||f|| and the chain value."""

    def test_corpus_is_not_amplified(self):
        """
        **Feature: thin-set-uncertainty-lab, Property 20: Norm Bound**

        |G| <= 1 and Parseval give ||T_G f|| <= ||f|| and ||T_H T_G f|| <= ||f||.
        """
        sym = SymbolPair(bernoulli_measure(), AtomicMeasure((0.0, 0.5, 2.0), (0.2, 0.3, 0.5)), p=3.0)
        for _, f in sample_corpus(GRID, count=12, seed=3):
            norm = f.norm_sq()
            assert apply_space_symbol(sym, f).norm_sq() <= norm * (1 + 1e-10)
            assert apply_composition(sym, f).norm_sq() <= norm * (1 + 1e-10)

    @given(delta=st.floats(min_value=0.001, max_value=0.999), c=st.floats(min_value=0.0, max_value=1e6))
    @settings(max_examples=50, deadline=None)
    def test_chain_value_range(self, delta, c):
        value = bound_chain_value(delta, c)
        assert (1.0 - delta) ** 2 - 1e-12 <= value < 1.0
        assert bound_chain_value(delta, math.inf) == 1.0

    def test_sweep_rows(self):
        mu = bernoulli_measure()
        rows = contraction_sweep(SymbolPair(mu, mu, p=2.0), GridSpec(2048, 32.0), deltas=(0.1, 0.05, 0.02),
                                 corpus_count=4)
        assert [row['delta'] for row in rows] == [0.1, 0.05, 0.02]
        assert list(rows[0]) == [col for col in CONTRACTION_SCHEMA if col != 'config_hash']
        assert len({row['beta'] for row in rows}) == 1
        eps = [row['eps_E'] for row in rows]
        assert all(b <= a for a, b in zip(eps, eps[1:]))
        assert all(row['beta'] ** 2 <= row['bound_chain_value'] + 1e-9 for row in rows)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
