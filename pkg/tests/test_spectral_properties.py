"""
Property-based tests for grid functions, transforms and energy functionals.

**Feature: thin-set-uncertainty-lab, Property 6: Transform Convention and Energy Splits**
"""

import pytest
import numpy as np
from hypothesis import given, strategies as st, settings
import math
import os
import sys

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from analysis.spectral import (
    GridFunction, GridSpec, parse_grid, forward_transform, inverse_transform,
    energy_split, uncertainty_defect
)
from data.corpus import sample_corpus, gaussian, generate_corpus, corpus_bounds
from models.sets import IntervalSet, BoxSet


class TestTransformProperties:
    """Forward and inverse transforms under the e^{-2 pi i x y} convention."""

    def test_gaussian_is_fixed_point(self):
        """
        **Feature: thin-set-uncertainty-lab, Property 6: Gaussian Fixed Point**

        exp(-pi x^2) transforms to exp(-pi y^2) on R = 32, N = 2^12.
        """
        f = gaussian(GridSpec(4096, 32.0))
        F = forward_transform(f)
        y = F.axes[0]
        assert F.domain == 'frequency'
        assert F.spacing[0] == pytest.approx(1.0 / 32.0)
        assert y[0] == pytest.approx(-4096 / 64.0)
        assert np.max(np.abs(F.values - np.exp(-math.pi * y ** 2))) < 1e-8

    def test_modulation_law(self):
        """A shift by a multiplies the transform by exp(-2 pi i a y)."""
        grid = GridSpec(4096, 64.0)
        a = 1.3
        F0 = forward_transform(gaussian(grid, 0.0, 1.5))
        Fa = forward_transform(gaussian(grid, a, 1.5))
        y = F0.axes[0]
        assert np.max(np.abs(Fa.values - F0.values * np.exp(-2j * math.pi * a * y))) < 1e-9

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=15, deadline=None)
    def test_parseval_and_round_trip(self, seed):
        """
        **Feature: thin-set-uncertainty-lab, Property 7: Unitarity**

        ||f|| = ||f^|| and inverse(forward(f)) = f to 1e-10 relative.
        """
        grid = GridSpec(4096, 64.0)
        for _, f in sample_corpus(grid, count=6, seed=seed):
            F = forward_transform(f)
            assert abs(F.norm_sq() - f.norm_sq()) <= 1e-10 * f.norm_sq()
            back = inverse_transform(F)
            assert back.matches(f)
            scale = np.max(np.abs(f.values))
            assert np.max(np.abs(back.values - f.values)) <= 1e-10 * scale

    def test_separable_two_dimensional_with_axis_extents(self):
        """Per-axis extents in d = 2; the Gaussian is still its own transform."""
        shape, extent = (128, 256), (16.0, 32.0)
        f = GridFunction(np.zeros(shape), extent)
        x, y = f.mesh()
        f = f.with_values(np.exp(-math.pi * (x ** 2 + y ** 2)))
        F = forward_transform(f)
        u, v = F.mesh()
        assert F.extent == (128 / 16.0, 256 / 32.0)
        assert np.max(np.abs(F.values - np.exp(-math.pi * (u ** 2 + v ** 2)))) < 1e-8
        assert np.max(np.abs(inverse_transform(F).values - f.values)) < 1e-12

    def test_non_default_origin_round_trip(self):
        grid = GridSpec(1024, 32.0)
        f = gaussian(grid, 0.0, 1.0)
        shifted = GridFunction(f.values, f.extent, origin=(-10.0,))
        back = inverse_transform(forward_transform(shifted))
        assert back.origin == (-10.0,)
        assert np.max(np.abs(back.values - shifted.values)) < 1e-12

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridFunction(np.zeros(1000), (10.0,))
        with pytest.raises(ValueError):
            GridFunction(np.array([np.nan, 0.0]), (1.0,))
        with pytest.raises(ValueError):
            GridSpec(1000, 10.0)
        spec = parse_grid('N=4096,R=64')
        assert spec.n == 4096 and spec.extent == 64.0 and spec.dimension == 1
        assert parse_grid('N=512,R=32,d=2').dimension == 2
        with pytest.raises(ValueError):
            parse_grid('R=64')


class TestEnergyProperties:
    """energy_split and uncertainty_defect."""

    @given(seed=st.integers(min_value=0, max_value=10_000),
           lo=st.floats(min_value=-20.0, max_value=10.0),
           width=st.floats(min_value=0.01, max_value=20.0))
    @settings(max_examples=30, deadline=None)
    def test_energy_additivity(self, seed, lo, width):
        """on_set + off_set = total to 1e-10 relative."""
        grid = GridSpec(1024, 64.0)
        _, f = sample_corpus(grid, count=1, seed=seed)[0]
        report = energy_split(f, IntervalSet([(lo, lo + width)]))
        assert abs(report.on_set + report.off_set - report.total) <= 1e-10 * report.total
        assert report.total == pytest.approx(f.norm_sq(), rel=1e-12)

    def test_full_and_empty_sets(self):
        f = gaussian(GridSpec(1024, 64.0))
        full = energy_split(f, f.domain_set())
        assert full.off_set <= 1e-12 * full.total
        empty = energy_split(f, IntervalSet([]))
        assert empty.on_set == 0.0

    def test_smoothed_indicator_concentrates(self):
        grid = GridSpec(4096, 64.0)
        f = GridFunction.sample(lambda x: np.exp(-((x - 0.5) / 0.2) ** 8), grid)
        report = energy_split(f, IntervalSet([(0.0, 1.0)]))
        assert report.on_fraction >= 0.99

    def test_overhang_is_listed(self):
        f = gaussian(GridSpec(1024, 64.0))
        with pytest.raises(ValueError, match="axis 0"):
            energy_split(f, IntervalSet([(-40.0, 0.0)]))
        with pytest.raises(ValueError):
            energy_split(f, BoxSet([((0, 0), (1, 1))]))

    def test_defect_examples(self):
        """
        **Feature: thin-set-uncertainty-lab, Property 8: Defect Anchors**

        Empty sets give 1/2; the full spatial domain with empty Sigma gives 1.
        """
        f = gaussian(GridSpec(4096, 64.0), 0.3, 1.2)
        assert uncertainty_defect(f, IntervalSet([]), IntervalSet([])) == pytest.approx(0.5, rel=1e-10)
        assert uncertainty_defect(f, f.domain_set(), IntervalSet([])) == pytest.approx(1.0, rel=1e-10)
        with pytest.raises(ValueError):
            uncertainty_defect(f.with_values(np.zeros(4096)), IntervalSet([]), IntervalSet([]))

    def test_defect_is_infinite_when_nothing_leaks(self):
        f = gaussian(GridSpec(1024, 64.0))
        F = forward_transform(f)
        assert uncertainty_defect(f, f.domain_set(), F.domain_set()) > 1e10

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_grid_refinement_stability(self, seed):
        """Doubling N changes the defect by less than 2% on smooth corpus functions."""
        coarse, fine = GridSpec(1024, 64.0), GridSpec(2048, 64.0)
        E, sigma = IntervalSet([(-1.0, 1.0)]), IntervalSet([(-0.5, 0.5)])
        member = generate_corpus(coarse, count=1, seed=seed)[0]
        values = []
        for grid in (coarse, fine):
            f = GridFunction.sample(member.evaluate, grid)
            values.append(uncertainty_defect(f, E, sigma))
        assert abs(values[1] - values[0]) <= 0.02 * values[0]


class TestCorpusProperties:
    """Corpus parameters scale with the grid."""

    @pytest.mark.parametrize("n, extent", [(128, 2.0), (256, 8.0), (1024, 32.0), (4096, 64.0)])
    def test_width_range_fits_the_grid(self, n, extent):
        grid = GridSpec(n, extent)
        span, band, (narrowest, widest) = corpus_bounds(grid)
        assert 0 < narrowest <= widest <= 3.0
        assert widest <= extent / 8.0 + 1e-12
        assert narrowest >= 8.0 * extent / n - 1e-12
        assert band <= n / (8.0 * extent) + 1e-12

    @pytest.mark.parametrize("n, extent", [(128, 2.0), (256, 8.0), (1024, 32.0)])
    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=10, deadline=None)
    def test_gaussian_tails_vanish_at_both_edges(self, n, extent, seed):
        """
        **Feature: thin-set-uncertainty-lab, Property 24: Corpus Tails**

        Single Gaussian members and their transforms fall below 1e-12 of their
        peaks at the grid edges, small extents included.
        """
        grid = GridSpec(n, extent)
        for member in generate_corpus(grid, count=6, seed=seed):
            if member.kind == 'packets':
                continue
            f = GridFunction.sample(member.evaluate, grid)
            F = forward_transform(f)
            for values in (np.abs(f.values), np.abs(F.values)):
                assert max(values[0], values[-1]) <= 1e-12 * np.max(values)

    def test_coarse_grid_falls_back_to_one_width(self):
        span, band, (narrowest, widest) = corpus_bounds(GridSpec(64, 2.0))
        assert narrowest == widest == pytest.approx(0.71875 / 3.0)
        with pytest.raises(ValueError, match="too coarse"):
            corpus_bounds(GridSpec(2, 2.0))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
