"""
Property-based tests for the dyadic partition, phi and the radial profile.

**Feature: thin-set-uncertainty-lab, Property 9: Mollifier Construction**
"""

import pytest
import numpy as np
from hypothesis import given, strategies as st, settings
import math
import os
import sys

# Add src to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from analysis.mollifier import (
    MollifierSystem, build_psi0, build_phi, partition_term, hat_phi_j,
    radial_profile_decay, cutoff_profile, smooth_step, default_j_max
)
from analysis.decay_fits import (
    fit_loglog_slope, window_maxima, relative_spread, band_factor, summarize
)
from analysis.spectral import GridFunction, GridSpec, forward_transform
from models.radius import wolff_pair, power_radius


@pytest.fixture(scope="module")
def line_system():
    return build_psi0(power_radius(1.0)).build_phi()


@pytest.fixture(scope="module")
def plane_system():
    return build_psi0(power_radius(1.0), dimension=2).build_phi()


class TestPartitionProperties:
    """psi0, q and the telescoping partition psi_j."""

    def test_profile_examples(self):
        """
        **Feature: thin-set-uncertainty-lab, Property 9: Cutoff Profile Anchors**

        q(0.5) = 1, q(2.5) = 0 and q(1.5) = 1/2 by the symmetry of theta.
        """
        assert cutoff_profile(0.5) == 1.0
        assert cutoff_profile(2.5) == 0.0
        assert cutoff_profile(1.5) == pytest.approx(0.5, abs=1e-15)
        assert smooth_step(0.0) == 0.0 and smooth_step(1.0) == 1.0

    def test_profile_is_monotone_and_bounded(self):
        r = np.linspace(0.0, 3.0, 30001)
        q = cutoff_profile(r)
        assert np.all(np.diff(q) <= 0)
        assert np.all((q >= 0) & (q <= 1))
        assert np.all(q[r <= 1] == 1.0) and np.all(q[r >= 2] == 0.0)

    def test_partition_examples(self):
        system = build_psi0()
        assert partition_term(system, 1, 0.5) == 0.0
        total = sum(partition_term(system, j, 7.0) for j in range(6))
        assert total == pytest.approx(1.0, abs=1e-15)
        with pytest.raises(ValueError):
            partition_term(system, -1, 0.0)

    @given(x=st.floats(min_value=-32.0, max_value=32.0, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_partition_of_unity(self, x):
        """The sum of psi_0 .. psi_5 is 1 on |x| <= 32 and at most three terms are nonzero."""
        system = build_psi0(j_max=5)
        terms = [float(partition_term(system, j, x)) for j in range(6)]
        assert abs(sum(terms) - 1.0) <= 1e-12
        assert sum(1 for value in terms if value != 0.0) <= 3
        assert all(value >= 0.0 for value in terms)

    @given(j=st.integers(min_value=1, max_value=12), r=st.floats(min_value=0.0, max_value=1e5))
    @settings(max_examples=200, deadline=None)
    def test_partition_support(self, j, r):
        value = build_psi0().partition_term(j, r)
        if r <= 2.0 ** (j - 1) or r >= 2.0 ** (j + 1):
            assert value == 0.0

    def test_two_dimensional_points(self):
        system = build_psi0(dimension=2)
        points = np.array([[0.3, 0.4], [3.0, 4.0], [0.0, 1.5]])
        assert np.allclose(system.psi0(points), [1.0, 0.0, 0.5])
        with pytest.raises(ValueError):
            system.psi0(np.zeros((3, 3)))

    def test_default_truncation_level(self):
        assert default_j_max(64.0) == 5
        assert default_j_max(64.0, 2) == 6
        assert 2 ** (default_j_max(100.0) + 1) >= 100.0


class TestPhiProperties:
    """phi = inverse transform of psi0 and the scaled family phi_j."""

    def test_phi_constants_line(self, line_system):
        """
        **Feature: thin-set-uncertainty-lab, Property 10: Phi Normalization**

        int phi = psi0(0) = 1, phi(0) = int psi0 = 3 > 1, and the envelope decays faster than |x|^-2.
        """
        assert line_system.phi_integral == pytest.approx(1.0, abs=1e-8)
        assert float(line_system.phi(0.0)) == pytest.approx(3.0, rel=1e-8)
        assert float(line_system.phi(0.0)) > 1.0
        assert math.isfinite(line_system.phi_l1) and line_system.phi_l1 > 1.0
        assert line_system.envelope['slope'] <= -2 * 1 + 0.2
        assert line_system.tail_fraction <= 1e-8

    def test_phi_is_even(self, line_system):
        x = np.linspace(0.0, 20.0, 401)
        assert np.max(np.abs(line_system.phi(x) - line_system.phi(-x))) < 1e-10
        assert float(line_system.phi(500.0)) == 0.0

    def test_phi_constants_plane(self, plane_system):
        assert plane_system.phi_integral == pytest.approx(1.0, abs=1e-6)
        assert float(plane_system.phi(np.zeros(2))) > 1.0
        assert plane_system.envelope['slope'] <= -2 * 2 + 0.2

    def test_resolution_is_checked(self):
        with pytest.raises(ValueError, match="resolution"):
            build_phi(build_psi0(), 128)
        with pytest.raises(ValueError):
            build_phi(build_psi0(), 300)
        with pytest.raises(ValueError):
            build_psi0(dimension=3).build_phi()

    @pytest.mark.parametrize("j", [-1, 0, 1, 2, 3])
    def test_scaled_l1_norm(self, line_system, j):
        """||phi_j||_1 = ||phi||_1 on the scaled nodes."""
        s = line_system.scale(j)
        x = line_system.phi_nodes / s
        l1 = np.sum(np.abs(line_system.phi_j(j, x))) * (x[1] - x[0])
        assert l1 == pytest.approx(line_system.phi_l1, rel=1e-8)

    def test_export(self, line_system, tmp_path):
        path = str(tmp_path / "phi.npz")
        line_system.export_phi(path)
        with np.load(path) as data:
            assert np.array_equal(data['values'], line_system.phi_values)
            assert int(data['dimension']) == 1
            assert str(data['rho1']) == 'powerlaw:a=1'


class TestMultiplierProperties:
    """Closed-form phi_j^ and its agreement with the transform of phi_j."""

    def test_multiplier_examples(self):
        system = MollifierSystem.from_pair(wolff_pair())
        for j in (-1, 0, 3):
            s = system.scale(j)
            assert hat_phi_j(system, j, 0.0) == 1.0
            assert hat_phi_j(system, j, s) == 1.0
            assert hat_phi_j(system, j, 3 * s) == 0.0
        assert system.scale(-1) == 1.0
        assert system.scale(3) == pytest.approx(8.0, rel=1e-12)
        with pytest.raises(ValueError):
            system.scale(-2)

    @given(j=st.integers(min_value=-1, max_value=10), c1=st.floats(min_value=0.1, max_value=10.0))
    @settings(max_examples=50, deadline=None)
    def test_multiplier_monotone_and_nested(self, j, c1):
        """Non-increasing along rays, and phi_j^ - phi_(j-1)^ >= 0."""
        system = build_psi0(power_radius(0.5), c1=c1)
        y = np.linspace(0.0, 4 * system.scale(j), 2001)
        values = system.hat_phi_j(j, y)
        assert np.all(np.diff(values) <= 0)
        if j >= 0:
            assert np.all(values - system.hat_phi_j(j - 1, y) >= 0)

    @pytest.mark.parametrize("j", [-1, 0, 1, 2, 3, 4])
    def test_multiplier_matches_transform(self, line_system, j):
        """
        **Feature: thin-set-uncertainty-lab, Property 11: Closed-Form Multiplier**

        forward_transform(phi_j) agrees with psi0(rho1(2^j) y / C1) to 1e-6 on R = 64, N = 4096.
        """
        grid = GridSpec(4096, 64.0)
        f = GridFunction.sample(lambda x: line_system.phi_j(j, x), grid)
        F = forward_transform(f)
        expected = line_system.hat_phi_j(j, F.axes[0])
        assert np.max(np.abs(F.values - expected)) < 1e-6


class TestRadialProfileProperties:
    """p = transform of |phi| and the decay of p'."""

    def test_profile_decay(self, line_system):
        """
        **Feature: thin-set-uncertainty-lab, Property 12: Profile Derivative Decay**

        p(0) = ||phi||_1, |p'| decays like t^-2 and its integral converges.
        """
        profile = radial_profile_decay(line_system)
        assert profile.t[0] == 0.0
        assert profile.p[0] == pytest.approx(line_system.phi_l1, rel=1e-8)
        assert profile.slope <= -1.8
        head, tail = profile.partial_integrals[64.0], profile.partial_integrals[128.0]
        assert abs(tail - head) <= 0.05 * head
        assert profile.fit_window[0] == 4.0

    def test_profile_needs_line(self, plane_system):
        with pytest.raises(ValueError):
            plane_system.radial_profile_decay()


class TestDecayFitProperties:
    """Shared fitting statistics."""

    @given(slope=st.floats(min_value=-6.0, max_value=-0.5), scale=st.floats(min_value=0.1, max_value=10.0))
    @settings(max_examples=50, deadline=None)
    def test_power_law_is_recovered(self, slope, scale):
        x = np.linspace(2.0, 64.0, 200)
        fit = fit_loglog_slope(x, scale * x ** slope)
        assert fit['slope'] == pytest.approx(slope, abs=1e-9)
        assert fit['n_points'] == 200

    def test_floor_and_insufficient_points(self):
        fit = fit_loglog_slope([1.0, 2.0, 3.0], [1.0, 1e-20, 1e-20])
        assert 'error' in fit and fit['n_points'] == 1

    def test_window_maxima(self):
        t = np.linspace(0.0, 10.0, 1001)
        centers, maxima = window_maxima(t, -t, 0.0, 10.0, 2.0)
        assert len(centers) == 5
        assert np.allclose(maxima, [1.99, 3.99, 5.99, 7.99, 9.99])

    def test_spread_and_band(self):
        assert relative_spread([2.0, 2.1, 1.9]) == pytest.approx(0.1)
        assert band_factor([1.0, 2.0, 4.0]) == 4.0
        with pytest.raises(ValueError):
            band_factor([1.0, 0.0])
        summary = summarize('C_emp', [1.0, 1.5], reference=2.0)
        assert summary['max_over_reference'] == 0.75 and summary['band'] == 1.5


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
