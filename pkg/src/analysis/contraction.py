"""
Contraction pairs T_H T_G built from characteristic functions of measures.

For symbols G, H with |G|, |H| <= 1 the operator T_G f = (G f)^ has norm at
most 1. When |G(x)| <= |mu1^(Q1(x))| and |H(y)| <= |mu2^(Q2(y))| with
Q1 = |x|^p, Q2 = |y|^p' and mu1, mu2 not point masses, the level sets
{|G| > 1 - delta} and {|H| > 1 - delta} are thin for the radii
min(t^-(p-1), 1) and min(t^-(p'-1), 1), and ||T_H T_G|| stays below 1.

Symbols here are mu^(Q(x)) times a smooth window of radius W, so they live on
the truncated grid without aliasing. Measures are finite sums of atoms, which
keeps mu^ exact.
"""

from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize

from analysis.mollifier import cutoff_profile
from analysis.spectral import GridFunction, GridSpec, forward_transform, inverse_transform, uncertainty_defect
from data.corpus import sample_corpus
from models.data_models import ContractionResult, PullbackReport, ThinnessCertificate
from models.radius import RadiusFunction, power_radius
from models.sets import GridMaskSet, IntervalSet, MeasurableSet, ThinnessSampling, certify_thinness

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-9
SYMBOL_TOL = 1e-12
SAMPLES_PER_CYCLE = 64
MAX_LEVEL_SAMPLES = 4_000_000
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1000
# Gradient ratios are reported for discs centered at |x| >= GRADIENT_FLOOR.
GRADIENT_FLOOR = 2.0
STENCIL = 5


@dataclass(frozen=True)
class AtomicMeasure:
    """A probability measure sum_j w_j delta_(x_j) with at least two atoms."""
    locations: Tuple[float, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        """Validate the atoms after initialization."""
        if len(self.locations) != len(self.weights):
            raise ValueError("Need one weight per atom: {} locations, {} weights".format(
                len(self.locations), len(self.weights)))
        if len(set(self.locations)) != len(self.locations):
            raise ValueError("Atom locations must be distinct")
        if len(self.locations) < 2:
            raise ValueError("A point mass has |mu^| = 1 everywhere; give at least two atoms")
        if not all(math.isfinite(x) for x in self.locations):
            raise ValueError("Atom locations must be finite")
        if any(not (w > 0 and math.isfinite(w)) for w in self.weights):
            raise ValueError("Atom weights must be positive and finite")
        if abs(sum(self.weights) - 1.0) > WEIGHT_TOL:
            raise ValueError("Atom weights must sum to 1, got {}".format(sum(self.weights)))

    @property
    def spread(self) -> float:
        """max x_j - min x_j, the fastest frequency in |mu^|^2."""
        return max(self.locations) - min(self.locations)

    @property
    def label(self) -> str:
        return "atoms:" + ",".join("{:g}:{:g}".format(x, w) for x, w in zip(self.locations, self.weights))


def bernoulli_measure() -> AtomicMeasure:
    """(delta_0 + delta_1) / 2, with |mu^(xi)| = |cos(pi xi)|."""
    return AtomicMeasure((0.0, 1.0), (0.5, 0.5))


def parse_measure(spec: str) -> AtomicMeasure:
    """
    Parse a measure spec string.

    Accepted forms: 'atoms:0:0.5,1:0.5' (location:weight pairs) and 'bernoulli'.
    """
    kind, _, body = spec.partition(':')
    kind = kind.strip().lower()
    if kind == 'bernoulli':
        return bernoulli_measure()
    if kind != 'atoms':
        raise ValueError("Unknown measure kind '{}' in spec '{}'".format(kind, spec))
    try:
        pairs = [item.split(':') for item in body.replace(' ', '').split(',') if item]
        locations = tuple(float(loc) for loc, _ in pairs)
        weights = tuple(float(w) for _, w in pairs)
    except ValueError as e:
        raise ValueError("Invalid measure spec '{}': {}".format(spec, e))
    return AtomicMeasure(locations, weights)


def char_function(mu: AtomicMeasure, xi) -> np.ndarray:
    """mu^(xi) = sum_j w_j exp(-2 pi i xi x_j), elementwise in xi."""
    xi = np.asarray(xi, dtype=float)
    total = np.zeros(xi.shape, dtype=complex)
    for x, w in zip(mu.locations, mu.weights):
        total = total + w * np.exp(-2j * np.pi * np.mod(xi * x, 1.0))
    return total[()] if total.ndim == 0 else total


def _level_intervals(mu: AtomicMeasure, threshold: float, v_max: float) -> IntervalSet:
    """{v in [0, v_max]: |mu^(v)| > threshold}, endpoints refined with brentq."""
    step = 1.0 / (SAMPLES_PER_CYCLE * max(mu.spread, 1e-12))
    count = int(math.ceil(v_max / step)) + 1
    if count > MAX_LEVEL_SAMPLES:
        raise ValueError("Level set on [0, {:g}] needs {} samples; shrink the window".format(v_max, count))
    v = np.linspace(0.0, v_max, max(count, 2))

    def excess(u):
        return abs(complex(char_function(mu, u))) - threshold

    inside = np.abs(char_function(mu, v)) > threshold
    edges = np.diff(np.concatenate([[0], inside.astype(np.int8), [0]]))
    starts, stops = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1
    pieces = []
    for i0, i1 in zip(starts, stops):
        lo = 0.0 if i0 == 0 else optimize.brentq(excess, v[i0 - 1], v[i0], xtol=1e-14)
        hi = v_max if i1 == v.size - 1 else optimize.brentq(excess, v[i1], v[i1 + 1], xtol=1e-14)
        if hi > lo:
            pieces.append((lo, hi))
    return IntervalSet.from_intervals(pieces)


def level_set_density(mu: AtomicMeasure, delta: float, window_count: int = 64) -> float:
    """
    max over x in [0, window_count - 1] of |F cap [x, x + 1]|, F = {|mu^| > 1 - delta}.

    |mu^| is even for real atoms, so windows on the positive axis suffice.
    The maximum of the window measure is attained where a window edge meets
    an endpoint of F, so only those offsets are probed.
    """
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1), got {}".format(delta))
    if window_count < 1:
        raise ValueError("window_count must be at least 1")
    level = _level_intervals(mu, 1.0 - delta, float(window_count))
    if len(level) == 0:
        return 0.0
    offsets = np.clip(np.concatenate([[0.0], level.lower, level.upper - 1.0]), 0.0, window_count - 1.0)
    density = float(np.max(level.cumulative(offsets + 1.0) - level.cumulative(offsets)))
    logger.debug("Level-set density of {} at delta={:g}: {:.6g}".format(mu.label, delta, density))
    return min(max(density, 0.0), 1.0)


def _form(mesh: Sequence[np.ndarray], exponent: float,
          coefficients: Optional[Tuple[float, ...]]) -> np.ndarray:
    """|x|^e, or sum_i a_i |x_i|^e with per-axis coefficients."""
    if coefficients is None:
        return sum(np.asarray(x, dtype=float) ** 2 for x in mesh) ** (exponent / 2.0)
    return sum(a * np.abs(x) ** exponent for a, x in zip(coefficients, mesh))


@dataclass(frozen=True)
class SymbolPair:
    """
    G(x) = mu1^(Q1(x)) w(x) on the space side and H(y) = mu2^(Q2(y)) w(y) on
    the frequency side, with Q1 = |x|^p, Q2 = |y|^p' (or per-axis forms) and
    w(x) = q(2|x| / W) a smooth window equal to 1 on |x| <= W/2.
    """
    mu1: AtomicMeasure
    mu2: AtomicMeasure
    p: float = 2.0
    delta: float = 0.05
    dimension: int = 1
    window: float = 8.0
    space_coefficients: Optional[Tuple[float, ...]] = None
    frequency_coefficients: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        """Validate exponents, level and coefficients."""
        if not (1 < self.p < math.inf):
            raise ValueError("p must lie in (1, inf), got {}".format(self.p))
        if not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1), got {}".format(self.delta))
        if self.dimension < 1:
            raise ValueError("dimension must be at least 1")
        if not (self.window > 0 and math.isfinite(self.window)):
            raise ValueError("window must be positive and finite")
        for name in ('space_coefficients', 'frequency_coefficients'):
            coefficients = getattr(self, name)
            if coefficients is None:
                continue
            if len(coefficients) != self.dimension:
                raise ValueError("{} needs {} entries, got {}".format(name, self.dimension, len(coefficients)))
            if any(a == 0 or not math.isfinite(a) for a in coefficients):
                raise ValueError("{} must be non-zero and finite".format(name))

    @property
    def p_conjugate(self) -> float:
        """p' with 1/p + 1/p' = 1, so (p - 1)(p' - 1) = 1."""
        return self.p / (self.p - 1.0)

    @property
    def rho1(self) -> RadiusFunction:
        return power_radius(self.p - 1.0)

    @property
    def rho2(self) -> RadiusFunction:
        return power_radius(self.p_conjugate - 1.0)

    def with_delta(self, delta: float) -> 'SymbolPair':
        return replace(self, delta=delta)

    def _window(self, mesh: Sequence[np.ndarray]) -> np.ndarray:
        radius = np.sqrt(sum(np.asarray(x, dtype=float) ** 2 for x in mesh))
        return cutoff_profile(2.0 * radius / self.window)

    def q1(self, *mesh: np.ndarray) -> np.ndarray:
        return _form(mesh, self.p, self.space_coefficients)

    def q2(self, *mesh: np.ndarray) -> np.ndarray:
        return _form(mesh, self.p_conjugate, self.frequency_coefficients)

    def G(self, *mesh: np.ndarray) -> np.ndarray:
        return char_function(self.mu1, self.q1(*mesh)) * self._window(mesh)

    def H(self, *mesh: np.ndarray) -> np.ndarray:
        return char_function(self.mu2, self.q2(*mesh)) * self._window(mesh)


def _symbol_values(symbol: Callable, template: GridFunction, label: str) -> np.ndarray:
    values = np.array(np.broadcast_to(np.asarray(symbol(*template.mesh()), dtype=complex), template.shape))
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak > 1.0 + SYMBOL_TOL:
        raise ValueError("Symbol {} must be bounded by 1, got sup |{}| = {:.12g}".format(label, label, peak))
    return values


def _templates(grid: GridSpec) -> Tuple[GridFunction, GridFunction]:
    """Zero functions on the space grid and on its dual frequency grid."""
    space = GridFunction(np.zeros((grid.n,) * grid.dimension), (grid.extent,) * grid.dimension)
    return space, forward_transform(space)


def apply_space_symbol(sym: SymbolPair, f: GridFunction) -> GridFunction:
    """T_G f = (G f)^."""
    return forward_transform(f.with_values(_symbol_values(sym.G, f, 'G') * f.values))


def apply_composition(sym: SymbolPair, f: GridFunction) -> GridFunction:
    """T_H T_G f = (H (G f)^)^, back on a grid with the extent of f."""
    g = apply_space_symbol(sym, f)
    return forward_transform(g.with_values(_symbol_values(sym.H, g, 'H') * g.values))


def operator_norm(space_symbol: Callable, frequency_symbol: Callable, grid: GridSpec,
                  tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                  seed: int = 0) -> Tuple[ContractionResult, GridFunction]:
    """
    Power iteration for ||H F G|| on the grid, F the grid transform.

    The last transform of T_H T_G is unitary, so ||T_H T_G|| = ||H F G||
    and the iteration runs on (H F G)* (H F G) = conj(G) F* |H|^2 F G.

    Args:
        space_symbol: G, called with one coordinate array per axis
        frequency_symbol: H, called on the dual grid
        grid: Space grid
        tol: Stop once the Rayleigh quotient changes by less than tol relative
        max_iter: Iteration cap
        seed: Seed of the random start vector

    Returns:
        (ContractionResult, unit vector of the last iteration)

    Raises:
        ValueError: If a symbol exceeds 1 in modulus
    """
    space, frequency = _templates(grid)
    g = _symbol_values(space_symbol, space, 'G')
    h = _symbol_values(frequency_symbol, frequency, 'H')
    weight = np.abs(h) ** 2

    rng = np.random.default_rng(seed)
    v = space.with_values(rng.normal(size=space.shape) + 1j * rng.normal(size=space.shape))
    v = v.with_values(v.values / math.sqrt(v.norm_sq()))

    history: List[float] = []
    lam, residual, converged = 0.0, 0.0, False
    for iteration in range(1, max_iter + 1):
        bv = forward_transform(v.with_values(g * v.values))
        lam = float(np.sum(weight * np.abs(bv.values) ** 2) * bv.cell_volume)
        history.append(lam)
        w = inverse_transform(bv.with_values(weight * bv.values), origin=space.origin)
        w = w.with_values(np.conj(g) * w.values)
        w_norm_sq = w.norm_sq()
        # ||M v - lam v||^2 = ||M v||^2 - lam^2 for unit v
        residual = math.sqrt(max(w_norm_sq - lam * lam, 0.0))
        if w_norm_sq == 0.0:
            converged = True
            break
        if len(history) > 1 and abs(lam - history[-2]) <= tol * lam:
            converged = True
            break
        v = w.with_values(w.values / math.sqrt(w_norm_sq))

    if not converged:
        logger.warning("Power iteration did not converge in {} iterations; beta^2 in [{:.8g}, {:.8g}]".format(
            max_iter, lam, min(1.0, lam + residual)))
    beta = math.sqrt(min(lam, 1.0))
    result = ContractionResult(
        beta=beta,
        beta_interval=(beta, math.sqrt(min(1.0, lam + residual))),
        iterations=len(history),
        converged=converged,
        rayleigh_history=tuple(history),
    )
    logger.debug("Operator norm {:.10g} after {} iterations".format(beta, len(history)))
    return result, v


def level_set_masks(sym: SymbolPair, grid: GridSpec) -> Tuple[GridMaskSet, GridMaskSet]:
    """E = {|G| > 1 - delta} on the space grid and Sigma = {|H| > 1 - delta} on the dual grid."""
    masks = []
    for template, symbol, label in zip(_templates(grid), (sym.G, sym.H), ('G', 'H')):
        values = _symbol_values(symbol, template, label)
        masks.append(GridMaskSet(np.abs(values) > 1.0 - sym.delta, template.origin, template.spacing))
    return masks[0], masks[1]


def bound_chain_value(delta: float, c: float) -> float:
    """1 - (1 - (1 - delta)^2) / max(1, C): the bound on ||T_H T_G||^2 from the UP with constant C."""
    if math.isinf(c):
        return 1.0
    return 1.0 - (1.0 - (1.0 - delta) ** 2) / max(1.0, c)


def _bound_chain(sym: SymbolPair, grid: GridSpec, top: GridFunction,
                 corpus: Sequence[Tuple[str, GridFunction]]) -> Tuple[float, float]:
    """
    Measure C_emp on the level sets and return (C_emp, chain value).

    G v for the top vector v joins the corpus, so the chain bounds the
    reported beta^2 exactly on the grid.
    """
    E, Sigma = level_set_masks(sym, grid)
    g = _symbol_values(sym.G, top, 'G')
    candidates = list(corpus) + [('G v', top.with_values(g * top.values))]
    c_emp = 0.0
    for function_id, f in candidates:
        if f.norm_sq() == 0.0:
            continue
        c_emp = max(c_emp, uncertainty_defect(f, E, Sigma))
    return c_emp, bound_chain_value(sym.delta, c_emp)


def composition_norm(sym: SymbolPair, grid: GridSpec, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER, seed: int = 0,
                     corpus_count: int = 8) -> ContractionResult:
    """
    Estimate ||T_H T_G|| and the bound chain value for one symbol pair.

    Args:
        sym: Symbol pair (its dimension must match the grid)
        grid: Space grid
        tol: Relative tolerance on the Rayleigh quotient
        max_iter: Iteration cap; at the cap a warning reports the bracket
        seed: Seed for the start vector and the corpus
        corpus_count: Corpus functions used to measure C_emp

    Returns:
        ContractionResult with c_emp, bound_chain_value and delta filled in
    """
    if sym.dimension != grid.dimension:
        raise ValueError("Symbol dimension {} does not match grid dimension {}".format(
            sym.dimension, grid.dimension))
    result, top = operator_norm(sym.G, sym.H, grid, tol, max_iter, seed)
    c_emp, chain = _bound_chain(sym, grid, top, sample_corpus(grid, corpus_count, seed))
    result = replace(result, c_emp=c_emp, bound_chain_value=chain, delta=sym.delta)
    logger.info("||T_H T_G|| = {:.8f} for p={:g}, delta={:g}; chain bound on beta^2 {:.8f} (C_emp {:.4g})".format(
        result.beta, sym.p, sym.delta, chain, c_emp))
    return result


def _pullback_set(mu: AtomicMeasure, exponent: float, coefficients: Optional[Tuple[float, ...]],
                  window: float, threshold: float, d: int, spacing: float) -> MeasurableSet:
    """Q^-1({|mu^| > threshold}) inside the cube [-W, W]^d."""
    if d == 1:
        scale = abs(coefficients[0]) if coefficients is not None else 1.0
        level = _level_intervals(mu, threshold, scale * window ** exponent)
        pieces = []
        for lo, hi in level.intervals:
            x_lo, x_hi = (lo / scale) ** (1.0 / exponent), (hi / scale) ** (1.0 / exponent)
            pieces += [(-x_hi, -x_lo), (x_lo, x_hi)]
        return IntervalSet.from_intervals(pieces)
    count = int(math.ceil(2.0 * window / spacing)) + 1
    axis = -window + spacing * np.arange(count)
    mesh = np.meshgrid(*([axis] * d), indexing='ij')
    mask = np.abs(char_function(mu, _form(mesh, exponent, coefficients))) > threshold
    return GridMaskSet(mask, [axis[0]] * d, [spacing] * d)


def _gradient_ratio(centers: np.ndarray, rho: RadiusFunction, exponent: float,
                    coefficients: Optional[Tuple[float, ...]], metric: str) -> float:
    """max over the balls D(x, rho(|x|)), |x| >= GRADIENT_FLOOR, of max |grad Q| / min |grad Q|."""
    norms = np.linalg.norm(centers, axis=1)
    keep = norms >= GRADIENT_FLOOR
    if not np.any(keep):
        return math.nan
    centers, norms = centers[keep], norms[keep]
    radii = rho(norms)
    d = centers.shape[1]
    if coefficients is None:
        reach = radii * (math.sqrt(d) if metric == 'sup' else 1.0)
        inner = norms - reach
        if np.any(inner <= 0):
            return math.inf
        return float(np.max(((norms + reach) / inner) ** (exponent - 1.0)))
    offsets = np.stack([m.ravel() for m in np.meshgrid(*([np.linspace(-1.0, 1.0, STENCIL)] * d),
                                                      indexing='ij')], axis=1)
    points = centers[:, None, :] + radii[:, None, None] * offsets[None, :, :]
    a = np.asarray(coefficients, dtype=float)
    gradient = exponent * np.sqrt(np.sum((a * np.abs(points) ** (exponent - 1.0)) ** 2, axis=2))
    low = gradient.min(axis=1)
    if np.any(low == 0):
        return math.inf
    return float(np.max(gradient.max(axis=1) / low))


def _certify_side(mu: AtomicMeasure, exponent: float, coefficients: Optional[Tuple[float, ...]],
                  rho: RadiusFunction, sym: SymbolPair, cells_per_radius: int,
                  n_jobs: int) -> Tuple[ThinnessCertificate, float]:
    d, window = sym.dimension, sym.window
    reach = window * math.sqrt(d)
    center_spacing = rho(reach) / (8.0 if d == 1 else 2.0)
    target = _pullback_set(mu, exponent, coefficients, window, 1.0 - sym.delta, d,
                           rho(reach) / cells_per_radius)
    extras: Tuple[Tuple[float, ...], ...] = ()
    if d == 1 and len(target):
        ends = np.concatenate([target.lower, target.upper])
        radii = rho(np.abs(ends))
        extras = tuple((float(c),) for c in np.concatenate([ends, ends - radii, ends + radii]))
    metric = 'euclidean' if d == 1 else 'sup'
    sampling = ThinnessSampling(grid_extent=window, grid_spacing=center_spacing, extra_centers=extras,
                                metric=metric, use_analytic=False, n_jobs=n_jobs)
    certificate = certify_thinness(target, rho, sampling)
    axis = np.arange(-window, window + center_spacing / 2.0, center_spacing)
    centers = np.stack([m.ravel() for m in np.meshgrid(*([axis] * d), indexing='ij')], axis=1)
    return certificate, _gradient_ratio(centers, rho, exponent, coefficients, metric)


def pullback_thinness(sym: SymbolPair, eps_target: Optional[float] = None,
                      cells_per_radius: int = 16, n_jobs: int = 1) -> PullbackReport:
    """
    Certify E = Q1^-1(F1) and Sigma = Q2^-1(F2) inside the window cube by direct measurement.

    Both sets contain the level sets {|G| > 1 - delta}, {|H| > 1 - delta}.
    Away from the origin Q maps each adapted ball onto an interval of length
    about 1, so the measured thinness tracks the level-set density; near the
    origin it may reach eps^(d/e) for exponent e, which sets the allowance
    max(eps^(d/e), eps).

    Args:
        sym: Symbol pair
        eps_target: Target thinness; defaults to the larger level-set density
        cells_per_radius: Mask resolution in d >= 2
        n_jobs: joblib workers for the center sweep

    Returns:
        PullbackReport; a failed allowance is logged with the offending center
    """
    density1 = level_set_density(sym.mu1, sym.delta)
    density2 = level_set_density(sym.mu2, sym.delta)
    if eps_target is None:
        eps_target = max(density1, density2)
    if not (0 < eps_target <= 1):
        raise ValueError("eps_target must lie in (0, 1], got {}".format(eps_target))
    if max(density1, density2) > eps_target:
        logger.warning("delta={:g} gives level-set densities {:.4g}, {:.4g} above eps_target {:g}".format(
            sym.delta, density1, density2, eps_target))

    d = sym.dimension
    cert_E, ratio_E = _certify_side(sym.mu1, sym.p, sym.space_coefficients, sym.rho1, sym,
                                    cells_per_radius, n_jobs)
    cert_S, ratio_S = _certify_side(sym.mu2, sym.p_conjugate, sym.frequency_coefficients, sym.rho2, sym,
                                    cells_per_radius, n_jobs)
    report = PullbackReport(
        thinness_E=cert_E,
        thinness_Sigma=cert_S,
        density_mu1=density1,
        density_mu2=density2,
        allowance_E=min(1.0, max(eps_target ** (d / sym.p), eps_target)),
        allowance_Sigma=min(1.0, max(eps_target ** (d / sym.p_conjugate), eps_target)),
        gradient_ratio_E=ratio_E,
        gradient_ratio_Sigma=ratio_S,
    )
    for label, cert, allowance in (("E", cert_E, report.allowance_E), ("Sigma", cert_S, report.allowance_Sigma)):
        if cert.epsilon_measured > allowance:
            logger.warning("{} is {:.4g}-thin at worst center {}, above the allowance {:.4g}".format(
                label, cert.epsilon_measured, cert.worst_center, allowance))
    return report


def _sweep_row(sym: SymbolPair, grid: GridSpec, top: GridFunction, beta: float,
               corpus: Sequence[Tuple[str, GridFunction]], eps_target: Optional[float]) -> Dict:
    pullback = pullback_thinness(sym, eps_target)
    c_emp, chain = _bound_chain(sym, grid, top, corpus)
    if beta ** 2 > chain + 1e-9:
        logger.warning("beta^2 = {:.10g} exceeds the chain value {:.10g} at delta={:g}".format(
            beta ** 2, chain, sym.delta))
    return {
        'p': sym.p,
        'delta': sym.delta,
        'eps_E': pullback.thinness_E.epsilon_measured,
        'eps_Sigma': pullback.thinness_Sigma.epsilon_measured,
        'beta': beta,
        'bound_chain_value': chain,
    }


def contraction_sweep(sym: SymbolPair, grid: GridSpec, deltas: Sequence[float] = (0.2, 0.1, 0.05, 0.02),
                      eps_target: Optional[float] = None, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER, corpus_count: int = 8, seed: int = 0,
                      n_jobs: int = 1) -> List[Dict]:
    """
    Report rows over a list of level thresholds.

    beta depends on the symbols only, so the power iteration runs once; the
    level sets, their thinness and the chain value are measured per delta
    in parallel. Rows come back in the order of `deltas`.
    """
    if not deltas:
        raise ValueError("contraction_sweep needs at least one delta")
    result, top = operator_norm(sym.G, sym.H, grid, tol, max_iter, seed)
    corpus = sample_corpus(grid, corpus_count, seed)
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_sweep_row)(sym.with_delta(delta), grid, top, result.beta, corpus, eps_target)
        for delta in deltas)
    for row in rows:
        logger.info("delta={:g}: eps_E={:.4g} eps_Sigma={:.4g} beta={:.6f} chain={:.6f}".format(
            row['delta'], row['eps_E'], row['eps_Sigma'], row['beta'], row['bound_chain_value']))
    return rows


def refinement_check(sym: SymbolPair, grid: GridSpec, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> Dict:
    """beta on the grid and on the grid with twice the samples."""
    coarse, _ = operator_norm(sym.G, sym.H, grid, tol, max_iter)
    fine, _ = operator_norm(sym.G, sym.H, grid.refined(), tol, max_iter)
    change = abs(fine.beta - coarse.beta) / max(coarse.beta, 1e-300)
    logger.info("beta {:.8f} at N={}, {:.8f} at N={} (relative change {:.2e})".format(
        coarse.beta, grid.n, fine.beta, 2 * grid.n, change))
    return {'beta': coarse.beta, 'beta_refined': fine.beta, 'relative_change': change}


def test_contraction():
    """Print densities, thinness and the composition norm for the Bernoulli pair."""
    print("Testing Contraction Module")
    print("=" * 50)

    mu = bernoulli_measure()
    for delta in (0.2, 0.1, 0.05, 0.01):
        print("delta={:<5g} density={:.6f} closed form={:.6f}".format(
            delta, level_set_density(mu, delta), 2.0 * math.acos(1.0 - delta) / math.pi))

    sym = SymbolPair(mu, mu, p=2.0, delta=0.05)
    pullback = pullback_thinness(sym, eps_target=0.25)
    print("\neps_E={:.4f} eps_Sigma={:.4f} gradient ratio {:.3f} passed={}".format(
        pullback.thinness_E.epsilon_measured, pullback.thinness_Sigma.epsilon_measured,
        pullback.gradient_ratio_E, pullback.passed))

    result = composition_norm(sym, GridSpec(4096, 64.0))
    print("beta={:.6f} after {} iterations, beta^2 chain bound {:.6f}".format(
        result.beta, result.iterations, result.bound_chain_value))

    print("\nContraction module test completed successfully!")


if __name__ == "__main__":
    test_contraction()
