"""
Property-based tests for the adaptive covering and the thin-ball bound.

**Feature: thin-set-uncertainty-lab, Property 17: Adaptive Covering**
"""

import pytest
import numpy as np
from hypothesis import given, strategies as st, settings
import os
import sys

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from analysis.covering import (
    greedy_cover, thin_ball_bound, vitali_select, third_balls_disjoint,
    probe_points, covers, random_instance, cover_sweep
)
from models.radius import constant_radius, power_radius
from models.sets import IntervalSet, periodic_thin_set, ball_measure


class TestCoverProperties:
    """greedy_cover invariants on worked and randomized instances."""

    def test_constant_radius_at_three_r(self):
        """rho = 3r breaks r >= rho(|x|); the selection alone keeps only the center ball, constant 3^d."""
        with pytest.raises(ValueError, match="r >= rho1"):
            greedy_cover(0.0, 1.0, constant_radius(3.0))
        offsets = np.linspace(-1.0, 1.0, 13)
        mesh = np.meshgrid(offsets, offsets, indexing='ij')
        grid = np.stack([g.ravel() for g in mesh], axis=1)
        grid = grid[np.linalg.norm(grid, axis=1) <= 1.0]
        kept = vitali_select(grid, np.full(len(grid), 3.0), np.zeros(2))
        assert len(kept) == 1 and np.all(grid[kept[0]] == 0.0)
        assert ball_measure(2, 3.0) / ball_measure(2, 1.0) == pytest.approx(9.0)

    def test_line_example(self):
        result = greedy_cover(0.0, 1.0, constant_radius(1.0))
        assert result.covered and result.disjoint
        assert result.constant <= 6.0
        assert result.bound == 6.0

    def test_plane_example(self):
        """
        **Feature: thin-set-uncertainty-lab, Property 17: Plane Cover**

        d=2, rho = min(1/t, 1), x = (4, 0), r = 2: constant <= 36 with 10^4 probes covered.
        """
        result = greedy_cover((4.0, 0.0), 2.0, power_radius(1.0), probes=10_000)
        assert result.covered and result.disjoint
        assert result.constant <= 36.0
        assert result.probe_count >= 7_000
        assert all(rho <= 6.0 for rho in result.radii)

    def test_oversized_candidates_are_moved(self):
        """Steep rho: grid points with rho > 3r move onto the level set rho = 3r."""
        result = greedy_cover(1.2, 0.3, power_radius(8.0))
        assert max(result.radii) <= 0.9 * (1 + 1e-9)
        assert max(result.radii) == pytest.approx(0.9, rel=1e-9)
        assert result.covered and result.disjoint
        assert result.constant <= 6.0

    def test_precondition_is_refused(self):
        with pytest.raises(ValueError, match="r >= rho1"):
            greedy_cover(0.0, 0.5, constant_radius(1.0))
        with pytest.raises(ValueError):
            greedy_cover((0.0, 0.0), 0.0, constant_radius(1.0))

    @given(seed=st.integers(min_value=0, max_value=100_000), d=st.sampled_from([1, 2]))
    @settings(max_examples=25, deadline=None)
    def test_randomized_instances(self, seed, d):
        """Disjoint third-radius balls, full coverage and constant <= 6^d."""
        x, r, rho = random_instance(np.random.default_rng(seed), d)
        result = greedy_cover(x, r, rho, probes=2_500)
        assert result.disjoint
        assert result.covered
        assert result.constant <= 6.0 ** d * (1 + 1e-9)
        assert all(radius <= 3 * r * (1 + 1e-9) for radius in result.radii)
        assert all(np.linalg.norm(np.asarray(c) - x) <= r * (1 + 1e-12) for c in result.centers)

    def test_sweep_rows(self):
        rows = cover_sweep((1, 2), count=5, seed=3, probes=900)
        assert len(rows) == 10
        assert [row['d'] for row in rows] == [1] * 5 + [2] * 5
        assert all(row['covered'] and row['disjoint'] for row in rows)
        assert all(row['constant'] <= row['bound'] * (1 + 1e-9) for row in rows)
        assert rows == cover_sweep((1, 2), count=5, seed=3, probes=900)


class TestSelectionProperties:
    """The greedy selection and the independent checks."""

    def test_decreasing_radius_order(self):
        centers = np.array([[0.0], [0.5], [3.0]])
        radii = np.array([1.0, 3.0, 1.0])
        kept = vitali_select(centers, radii, np.array([0.0]))
        assert kept[0] == 1
        assert 0 not in kept
        assert 2 in kept

    def test_ties_prefer_the_target_center(self):
        centers = np.array([[-0.5], [0.0], [0.5]])
        kept = vitali_select(centers, np.ones(3), np.array([0.0]))
        assert kept == [1]

    def test_disjointness_check(self):
        assert third_balls_disjoint(np.array([[0.0], [2.0]]), np.array([3.0, 3.0]))
        assert not third_balls_disjoint(np.array([[0.0], [1.9]]), np.array([3.0, 3.0]))
        assert third_balls_disjoint(np.zeros((1, 2)), np.ones(1))

    def test_probes_and_coverage(self):
        points = probe_points(np.array([0.0, 0.0]), 1.0, probes=400)
        assert np.all(np.linalg.norm(points, axis=1) <= 1.0 + 1e-12)
        assert covers(points, np.zeros((1, 2)), np.ones(1))
        assert not covers(points, np.zeros((1, 2)), np.array([0.9]))
        line = probe_points(np.array([2.0]), 0.5, probes=11)
        assert line[0, 0] == 1.5 and line[-1, 0] == 2.5


class TestThinBallProperties:
    """|D(x, r) cap E| <= C eps |D(x, r)| through the cover."""

    def test_empty_set(self):
        assert thin_ball_bound(IntervalSet([]), 0.0, 2.0, constant_radius(1.0), 0.1) == 0.0

    def test_periodic_set(self):
        """
        **Feature: thin-set-uncertainty-lab, Property 18: Thin Ball Bound**

        h = 0.05 lattice (eps = 0.1 for rho = 1), r = 5: ratio <= 6.
        """
        E = periodic_thin_set(1, 20, 0.05)
        ratio = thin_ball_bound(E, 0.0, 5.0, constant_radius(1.0), 0.1)
        assert ratio <= 6.0
        assert ratio == pytest.approx(1.0, rel=1e-9)

    def test_ratio_does_not_depend_on_r(self):
        E = periodic_thin_set(1, 20, 0.05)
        ratios = [thin_ball_bound(E, 0.3, r, constant_radius(1.0), 0.1) for r in (2.0, 4.0, 8.0, 16.0)]
        assert max(ratios) <= 2 * min(ratios)

    def test_thick_set_is_refused(self):
        with pytest.raises(ValueError, match="not 0.1-thin"):
            thin_ball_bound(IntervalSet([(-10.0, 10.0)]), 0.0, 2.0, constant_radius(1.0), 0.1)
        with pytest.raises(ValueError):
            thin_ball_bound(IntervalSet([]), 0.0, 2.0, constant_radius(1.0), 0.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
