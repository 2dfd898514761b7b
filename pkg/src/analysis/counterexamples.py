"""
Counterexamples for radius pairs that violate the compatibility condition.

With C1 = k / eps (and C2 = k^2 / eps in d = 1, C2 = k / eps in d >= 2) the
violation point t_k fixes n and a_n. In d = 1

    f_n(x) = sum_{|j| <= n-1} phi((x - j) / s),   s = eps rho1(n),
    f_n^(y) = D_{n-1}(y) s phi^(s y),

E_n is the lattice of intervals [j - s, j + s] and Sigma_n the lattice of
windows [l - w, l + w], |l| <= a_n - 1, w = eps rho2(a_n). The leakage past
Sigma_n is the Dirichlet part (|D_{n-1}|^2 outside |u| <= w per period)
combined with the envelope part (|phi^|^2 beyond s (a_n - 1/2)). In d = 2
f_n is a product of two bumps, E_n and Sigma_n are slabs and the leakage is
a product of two envelope captures. Both sets are certified eps-thin by the
sets module; materialize() samples f_n on a grid and measures the same
quantities with the FFT.
"""

from dataclasses import replace
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math
import warnings

import numpy as np
from joblib import Parallel, delayed
from scipy import integrate, special

from analysis.mollifier import cutoff_profile
from analysis.spectral import GridFunction, GridSpec, energy_split, forward_transform
from models.data_models import CounterexampleInstance
from models.radius import CompatiblePair, compatibility_log_lhs, incompatible_pair, probe_grid
from models.sets import BoxSet, PeriodicIntervalSet, ThinnessSampling, certify_thinness

logger = logging.getLogger(__name__)

DEFAULT_T_MAX = 1e12
DEFAULT_PROBES = 20_000
# rho1(n), rho2(a_n) must stay below this for the lattices to be thin.
NORMALIZED_RADIUS = 0.5
MAX_K_DOUBLINGS = 8
SAMPLES_PER_BUMP = 8

# phi = 1 on [-3/4, 3/4]; the ramp on [3/4, 1] is integrated by composite Gauss-Legendre.
PLATEAU = 0.75
RAMP_PANELS = 16
RAMP_NODES = 32
# |phi^|^2 is integrated on unit panels up to cutoff + TAIL_SPAN.
TAIL_SPAN = 128
TAIL_NODES = 24


def unit_bump(x) -> np.ndarray:
    """phi(x): 1 for |x| <= 3/4, 0 for |x| >= 1, smooth and even."""
    return cutoff_profile(4.0 * np.abs(np.asarray(x, dtype=float)) - 2.0)


def _panel_rule(lo: float, hi: float, panels: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    base_x, base_w = special.roots_legendre(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges)[:, None] / 2.0
    mid = (edges[:-1] + edges[1:])[:, None] / 2.0
    return (mid + half * base_x[None, :]).ravel(), (half * base_w[None, :]).ravel()


@lru_cache(maxsize=1)
def _ramp_rule() -> Tuple[np.ndarray, np.ndarray]:
    """Nodes on the ramp and the weights times phi."""
    x, w = _panel_rule(PLATEAU, 1.0, RAMP_PANELS, RAMP_NODES)
    return x, w * unit_bump(x)


def bump_transform(xi) -> np.ndarray:
    """
    phi^(xi) = 2 int_0^1 phi(x) cos(2 pi xi x) dx.

    The plateau contributes sin(3 pi xi / 2) / (pi xi) exactly.
    """
    xi = np.asarray(xi, dtype=float)
    flat = xi.reshape(-1)
    x, w = _ramp_rule()
    ramp = 2.0 * (np.cos(2.0 * math.pi * flat[:, None] * x[None, :]) @ w)
    return (2.0 * PLATEAU * np.sinc(2.0 * PLATEAU * flat) + ramp).reshape(xi.shape)[()]


@lru_cache(maxsize=1)
def bump_norm_sq() -> float:
    """||phi||_2^2."""
    x, w = _panel_rule(PLATEAU, 1.0, RAMP_PANELS, RAMP_NODES)
    return 2.0 * PLATEAU + 2.0 * float(np.sum(w * unit_bump(x) ** 2))


def envelope_tail(cutoff: float) -> float:
    """Fraction of ||phi^||^2 on |xi| > cutoff."""
    if not (cutoff >= 0 and math.isfinite(cutoff)):
        raise ValueError("Envelope cutoff must be non-negative and finite, got {}".format(cutoff))
    xi, w = _panel_rule(cutoff, cutoff + TAIL_SPAN, TAIL_SPAN, TAIL_NODES)
    tail = 2.0 * float(np.sum(w * bump_transform(xi) ** 2))
    return min(tail / bump_norm_sq(), 1.0)


def _sine_remainder(u: float) -> float:
    """1 / sin^2(pi u) - 1 / (pi u)^2, smooth on [0, 1/2]."""
    x = math.pi * u
    if x < 0.1:
        x2 = x * x
        return 1.0 / 3.0 + x2 / 15.0 + 2.0 * x2 * x2 / 189.0 + x2 ** 3 / 675.0
    return 1.0 / math.sin(x) ** 2 - 1.0 / (x * x)


def dirichlet_leakage(count: int, window: float) -> float:
    """
    Fraction of int_{-1/2}^{1/2} |D|^2 = count lying on window <= |u| <= 1/2.

    |D(u)|^2 = sin^2(count pi u) / sin^2(pi u) splits into
    (1 - cos(a u)) / (2 pi^2 u^2), integrated in closed form with the sine
    integral, plus (1 - cos(a u)) g(u) / 2 with g smooth, whose oscillatory
    half goes to QUADPACK's cosine-weighted rule (a = 2 pi count).

    Args:
        count: Number of terms 2n - 1 of D_{n-1}
        window: Half width w of the window around each integer, 0 < w < 1/2

    Returns:
        The leakage fraction in [0, 1]
    """
    if count < 1:
        raise ValueError("The Dirichlet kernel needs at least one term, got {}".format(count))
    if not (0 < window < 0.5):
        raise ValueError("Window half width must lie in (0, 1/2), got {}".format(window))
    a = 2.0 * math.pi * count

    def primitive(u):
        # antiderivative of (1 - cos(a u)) / u^2
        return -(1.0 - math.cos(a * u)) / u + a * special.sici(a * u)[0]

    singular = (primitive(0.5) - primitive(window)) / (2.0 * math.pi ** 2)
    smooth, _ = integrate.quad(_sine_remainder, window, 0.5, epsabs=1e-14, epsrel=1e-12)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always', integrate.IntegrationWarning)
        oscillating, _ = integrate.quad(_sine_remainder, window, 0.5, weight='cos', wvar=a, limit=200)
    for warning in caught:
        logger.warning("Dirichlet quadrature (count={}, window={:.3g}): {}".format(count, window, warning.message))

    one_sided = singular + 0.5 * smooth - 0.5 * oscillating
    return float(min(max(2.0 * one_sided / count, 0.0), 1.0))


def _constants(k: float, eps: float, dim: int) -> Tuple[float, float]:
    c1 = k / eps
    return c1, (k * k / eps if dim == 1 else k / eps)


def find_violation(pair: CompatiblePair, k: float, eps: float = 0.1, dim: int = 1,
                   t_max: float = DEFAULT_T_MAX, probes: int = DEFAULT_PROBES) -> Optional[float]:
    """
    Smallest probed t with C2 / rho2(C1 / rho1(t)) < t.

    The pair's own constants are replaced by C1 = k / eps and C2 = k^2 / eps
    (d = 1) or C2 = k / eps (d >= 2).

    Returns:
        t_k, or None when the inequality holds at every probe up to t_max
    """
    if k < 1:
        raise ValueError("k must be at least 1, got {}".format(k))
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1), got {}".format(eps))
    c1, c2 = _constants(k, eps, dim)
    t = probe_grid(t_max, probes)
    log_lhs = compatibility_log_lhs(pair.with_constants(c1, c2), t)
    with np.errstate(divide='ignore'):
        violated = np.flatnonzero(log_lhs < np.log(t))
    if violated.size == 0:
        logger.debug("No violation for {} at k={:g} up to t={:g}".format(pair.label, k, t_max))
        return None
    return float(t[violated[0]])


def _derive_counts(pair: CompatiblePair, eps: float, k: float, dim: int,
                   t_max: float, probes: int) -> Tuple[float, float, int, float]:
    """(k, t_k, n, a_n) from the violation point; k doubles while the counts are degenerate."""
    for _ in range(MAX_K_DOUBLINGS + 1):
        t_k = find_violation(pair, k, eps, dim, t_max, probes)
        if t_k is None:
            raise ValueError("No violation of C2 / rho2(C1 / rho1(t)) >= t for {} at k = {:g} up to t = {:g}; "
                             "the pair may be compatible".format(pair.label, k, t_max))
        c1 = k / eps
        if dim == 1:
            n = int(math.floor(t_k))
            a_n = float(math.floor(c1 / pair.rho1(float(n))))
            degenerate = n <= 1 or a_n <= 1
        else:
            n = max(int(math.ceil(t_k)), dim + 1)
            a_n = c1 / pair.rho1(float(n))
            degenerate = a_n <= dim
        degenerate = (degenerate or pair.rho1(float(n)) >= NORMALIZED_RADIUS
                      or pair.rho2(a_n) >= NORMALIZED_RADIUS)
        if not degenerate:
            return k, t_k, n, a_n
        logger.info("Degenerate counterexample at k={:g} (n={}, a_n={:g}); doubling k".format(k, n, a_n))
        k *= 2.0
    raise ValueError("Counterexample counts stayed degenerate after {} doublings of k for {}".format(
        MAX_K_DOUBLINGS, pair.label))


def _check_requirements(requirements: Dict[str, float], large: Sequence[str], small: Sequence[str],
                        label: str) -> bool:
    met = all(requirements[name] > 1.0 for name in large) and all(requirements[name] < 1.0 for name in small)
    if not met:
        logger.warning("Counterexample requirements not met for {}: {}".format(
            label, ", ".join("{} = {:.4g}".format(name, value) for name, value in requirements.items())))
    return met


def build_1d(pair: CompatiblePair, eps: float = 0.1, k: float = 2.0, n: Optional[int] = None,
             a_n: Optional[int] = None, t_max: float = DEFAULT_T_MAX,
             probes: int = DEFAULT_PROBES) -> CounterexampleInstance:
    """
    The spike-train counterexample on the line.

    Args:
        pair: Radius pair violating the compatibility condition
        eps: Thinness of both sets
        k: Scale parameter; doubled automatically while n or a_n are degenerate
        n, a_n: Explicit counts for small desk checks; both skip the search
        t_max, probes: Search range for t_k

    Returns:
        CounterexampleInstance with the semi-analytic ratio and both certificates

    Raises:
        ValueError: If no violation is found up to t_max
    """
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1), got {}".format(eps))
    t_k = None
    if n is None or a_n is None:
        k, t_k, n, a_n = _derive_counts(pair, eps, k, 1, t_max, probes)
    if n < 1 or a_n < 1:
        raise ValueError("n and a_n must be at least 1, got n={}, a_n={}".format(n, a_n))
    n, a_n = int(n), int(a_n)
    rho1_n, rho2_a = pair.rho1(float(n)), pair.rho2(float(a_n))
    s, w = eps * rho1_n, eps * rho2_a

    E = PeriodicIntervalSet(-(n - 1), n - 1, s)
    Sigma = PeriodicIntervalSet(-(a_n - 1), a_n - 1, w)
    sampling = ThinnessSampling(grid_extent=0.0, grid_spacing=0.0, use_analytic=True)
    thinness_E = certify_thinness(E, pair.rho1, sampling)
    thinness_Sigma = certify_thinness(Sigma, pair.rho2, sampling)

    out_dirichlet = dirichlet_leakage(2 * n - 1, w)
    out_envelope = envelope_tail(s * (a_n - 0.5))
    ratio = out_dirichlet + out_envelope - out_dirichlet * out_envelope

    requirements = {
        'a_n*eps*rho1(n)': a_n * s,
        'a_n*rho1(n)/(n*rho2(a_n))': a_n * rho1_n / (n * rho2_a),
    }
    met = _check_requirements(requirements, ['a_n*eps*rho1(n)'], ['a_n*rho1(n)/(n*rho2(a_n))'],
                              "k={:g}, n={}, a_n={}".format(k, n, a_n))
    instance = CounterexampleInstance(
        k=k, n=n, a_n=a_n, eps=eps, dim=1, E=E, Sigma=Sigma, ratio=ratio,
        thinness_E=thinness_E, thinness_Sigma=thinness_Sigma,
        norm_sq=(2 * n - 1) * s * bump_norm_sq(),
        requirements=requirements, requirements_met=met,
        leakage_parts=(out_dirichlet, out_envelope), t_k=t_k,
    )
    logger.debug("d=1 counterexample k={:g}: n={}, a_n={}, ratio={:.4g} (Dirichlet {:.4g}, envelope {:.4g})".format(
        k, n, a_n, ratio, out_dirichlet, out_envelope))
    return instance


def build_highdim(pair: CompatiblePair, eps: float = 0.1, k: float = 2.0, d: int = 2,
                  n: Optional[int] = None, a_n: Optional[float] = None,
                  t_max: float = DEFAULT_T_MAX, probes: int = DEFAULT_PROBES) -> CounterexampleInstance:
    """
    The slab counterexample in d = 2.

    f_n(x) = phi_h(x1 / (n - d)) phi_h(x2 / s) with phi_h(u) = phi(2u) supported
    in [-1/2, 1/2], E_n = [-(n-d), n-d] x [-s, s] and
    Sigma_n = [-w, w] x [-(a_n-d), a_n-d]. Thinness is certified with sup-norm
    balls. f_n^ is separable, so the captured energy is the product of the
    captures of each factor, and phi_h^ captures on [-K, K] what phi^ does on
    [-K/2, K/2].

    Raises:
        ValueError: For d != 2 or when no violation is found up to t_max
    """
    if d != 2:
        raise ValueError("The slab counterexample is built for d = 2, got d = {}".format(d))
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1), got {}".format(eps))
    t_k = None
    if n is None or a_n is None:
        k, t_k, n, a_n = _derive_counts(pair, eps, k, d, t_max, probes)
    if n <= d or a_n <= d:
        raise ValueError("The slab construction needs n > d and a_n > d, got n={}, a_n={}".format(n, a_n))
    n, a_n = int(n), float(a_n)
    rho1_n, rho2_a = pair.rho1(float(n)), pair.rho2(a_n)
    s, w = eps * rho1_n, eps * rho2_a
    length, width = float(n - d), a_n - d

    E = BoxSet([((-length, -s), (length, s))], dimension=2)
    Sigma = BoxSet([((-w, -width), (w, width))], dimension=2)
    sampling = ThinnessSampling(grid_extent=0.0, grid_spacing=0.0, metric='sup', use_analytic=True)
    thinness_E = certify_thinness(E, pair.rho1, sampling)
    thinness_Sigma = certify_thinness(Sigma, pair.rho2, sampling)

    out_long = envelope_tail(length * w / 2.0)
    out_across = envelope_tail(s * width / 2.0)
    ratio = out_long + out_across - out_long * out_across
    half_norm = bump_norm_sq() / 2.0

    requirements = {
        'eps*rho2(a_n)*n': w * n,
        'a_n*eps*rho1(n)': a_n * s,
    }
    met = _check_requirements(requirements, list(requirements), [],
                              "d={}, k={:g}, n={}, a_n={:.6g}".format(d, k, n, a_n))
    instance = CounterexampleInstance(
        k=k, n=n, a_n=a_n, eps=eps, dim=d, E=E, Sigma=Sigma, ratio=ratio,
        thinness_E=thinness_E, thinness_Sigma=thinness_Sigma,
        norm_sq=length * s * half_norm ** 2,
        requirements=requirements, requirements_met=met,
        leakage_parts=(out_long, out_across), t_k=t_k,
    )
    logger.debug("d={} counterexample k={:g}: n={}, a_n={:.6g}, ratio={:.4g}".format(d, k, n, a_n, ratio))
    return instance


def build(pair: CompatiblePair, eps: float = 0.1, k: float = 2.0, dim: int = 1,
          **kwargs) -> CounterexampleInstance:
    if dim == 1:
        return build_1d(pair, eps, k, **kwargs)
    return build_highdim(pair, eps, k, d=dim, **kwargs)


def _required_n(extent: float, spacing: float) -> int:
    """Smallest power of two N with extent / N <= spacing."""
    return 1 << max(0, int(math.ceil(math.log2(extent / spacing))))


def _check_resolution(instance: CounterexampleInstance, grid: GridSpec) -> None:
    h, R, N = grid.spacing, grid.extent, grid.n
    if instance.dim == 1:
        bump_width = 2.0 * instance.E.half_width
        space_reach = (instance.n - 1) + instance.E.half_width
        freq_reach = (instance.a_n - 1) + instance.Sigma.half_width
    else:
        bump_width = float(instance.E.highs[0][1] - instance.E.lows[0][1]) / 2.0
        space_reach = float(instance.E.highs[0][0])
        freq_reach = float(instance.Sigma.highs[0][1])
    if h > bump_width / SAMPLES_PER_BUMP:
        raise ValueError("Grid cannot resolve bumps of width {:.4g} with spacing {:.4g}: need N >= {} at R = {:g}".format(
            bump_width, h, _required_n(R, bump_width / SAMPLES_PER_BUMP), R))
    if space_reach > R / 2.0 - h:
        raise ValueError("Grid extent R = {:g} cannot hold E_n (reach {:.6g}): need R >= {:.6g}".format(
            R, space_reach, 2.0 * (space_reach + h)))
    if freq_reach > N / (2.0 * R) - 1.0 / R:
        raise ValueError("Frequency grid cannot hold Sigma_n (reach {:.6g}): need N >= {}".format(
            freq_reach, _required_n(2.0 * R * (freq_reach + 1.0 / R), 1.0)))


def materialize(instance: CounterexampleInstance, grid: GridSpec) -> CounterexampleInstance:
    """
    Sample f_n on the grid and measure it with the FFT.

    grid_checks receives the grid ratio, the relative mass of f_n outside
    E_n, the relative error of ||f_n||^2 against its closed form and, in
    d = 2, the distance between f_n^ and the product of one-dimensional
    transforms relative to max |f_n^|.

    Raises:
        ValueError: If the grid cannot resolve the bumps or hold E_n and
            Sigma_n; the message gives the required N or R
    """
    if grid.dimension != instance.dim:
        raise ValueError("Grid dimension {} does not match the instance dimension {}".format(
            grid.dimension, instance.dim))
    _check_resolution(instance, grid)
    axis = grid.axes()[0]
    checks = {}
    if instance.dim == 1:
        s = instance.E.half_width
        nearest = np.rint(axis)
        values = np.where(np.abs(nearest) <= instance.n - 1, unit_bump((axis - nearest) / s), 0.0)
        f = GridFunction(values, (grid.extent,))
        transform = forward_transform(f)
    else:
        length = float(instance.E.highs[0][0])
        s = float(instance.E.highs[0][1])
        long_factor = unit_bump(2.0 * axis / length)
        across_factor = unit_bump(2.0 * axis / s)
        f = GridFunction(np.multiply.outer(long_factor, across_factor), (grid.extent, grid.extent))
        transform = forward_transform(f)
        product = np.multiply.outer(forward_transform(GridFunction(long_factor, (grid.extent,))).values,
                                    forward_transform(GridFunction(across_factor, (grid.extent,))).values)
        scale = float(np.max(np.abs(transform.values)))
        checks['separable_error'] = float(np.max(np.abs(transform.values - product))) / scale

    total = f.norm_sq()
    checks['support_leak'] = energy_split(f, instance.E).off_set / total
    checks['norm_error'] = abs(total - instance.norm_sq) / instance.norm_sq
    checks['ratio_grid'] = energy_split(transform, instance.Sigma).off_set / transform.norm_sq()
    logger.debug("Materialized counterexample k={:g} on N={}, R={:g}: {}".format(
        instance.k, grid.n, grid.extent, checks))
    return replace(instance, f_n=f, grid_checks=checks)


def instance_row(instance: CounterexampleInstance) -> Dict:
    """Report row (without config_hash) for one instance."""
    return {
        'dim': instance.dim,
        'k': instance.k,
        'n': instance.n,
        'a_n': instance.a_n,
        'ratio': instance.ratio,
        'thinness_E': instance.thinness_E.epsilon_measured,
        'thinness_Sigma': instance.thinness_Sigma.epsilon_measured,
        'defect': instance.defect,
    }


def counterexample_ladder(pair: Optional[CompatiblePair] = None, eps: float = 0.1,
                          ks: Sequence[float] = (2, 4, 8, 16), dim: int = 1,
                          n_jobs: int = 1) -> List[CounterexampleInstance]:
    """
    Instances for every k, built in parallel and returned in k order.

    A ladder whose ratio fails to decrease is logged as a warning; the
    caller decides whether that fails the run.
    """
    if pair is None:
        pair = incompatible_pair()
    if not ks:
        raise ValueError("The k ladder is empty")
    instances = Parallel(n_jobs=n_jobs)(delayed(build)(pair, eps, float(k), dim) for k in ks)
    ratios = [inst.ratio for inst in instances]
    if any(b >= a for a, b in zip(ratios, ratios[1:])):
        logger.warning("Counterexample ratios are not strictly decreasing over k = {}: {}".format(
            list(ks), ["{:.4g}".format(r) for r in ratios]))
    if not all(inst.certified for inst in instances):
        logger.warning("Some counterexample sets are not certified {:g}-thin".format(eps))
    logger.info("Built {} counterexamples in d={} for {}; ratio {:.4g} -> {:.4g}".format(
        len(instances), dim, pair.label, ratios[0], ratios[-1]))
    return instances


def test_counterexamples():
    """Print the k ladder for the incompatible pair in d = 1 and d = 2."""
    print("Testing Counterexamples Module")
    print("=" * 50)

    pair = incompatible_pair()
    for dim in (1, 2):
        print("\nd = {}".format(dim))
        for inst in counterexample_ladder(pair, eps=0.1, ks=(2, 4, 8, 16), dim=dim):
            print("k={:>4g} n={:>12d} a_n={:>14.6g} ratio={:.4e} eps_E={:.4f} eps_Sigma={:.4f}".format(
                inst.k, inst.n, inst.a_n, inst.ratio, inst.thinness_E.epsilon_measured,
                inst.thinness_Sigma.epsilon_measured))

    small = materialize(build_1d(pair, eps=0.25, k=1.0, n=3, a_n=12), GridSpec(131072, 128.0))
    print("\nGrid check n=3, a_n=12: ratio {:.4f} vs grid {:.4f}".format(
        small.ratio, small.grid_checks['ratio_grid']))

    print("\nCounterexamples module test completed successfully!")


if __name__ == "__main__":
    test_counterexamples()
