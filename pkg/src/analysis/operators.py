"""
The splitting operators S and T, their kernels, and the measured bounds.

    S f = sum_j psi_j * (phi_(j-1) conv f)        T f = sum_j psi_j * (f - phi_(j-1) conv f)

Convolutions run as the closed-form multipliers phi_(j-1)^ on the FFT grid.
The kernels

    K(x, y) = sum_j psi_j(x) phi_(j-1)(x - y)
    L(x, y) = sum_(j<J) Phi_j(x - y) (phi_j^(y) - phi_(j-1)^(y)) + Phi_J(x - y) (1 - phi_(J-1)^(y)),

with Phi_j(u) = 2^(jd) phi(2^j u), are only evaluated to measure the Schur
integrals and to cross-check the multiplier path. L is the exact kernel of
the truncated T on the frequency side: its top level absorbs the remainder.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from joblib import Parallel, delayed

from analysis.mollifier import MollifierSystem, MIN_RESOLUTION
from analysis.spectral import (
    GridFunction, GridSpec, forward_transform, inverse_transform, energy_split,
    set_weights, uncertainty_defect
)
from data.corpus import sample_corpus
from models.data_models import SchurReport
from models.radius import CompatiblePair, check_compatibility
from models.sets import MeasurableSet, periodic_thin_set

logger = logging.getLogger(__name__)

# phi(r) is below 1e-10 of phi(0) beyond this argument.
KERNEL_REACH = 48.0
CELLS_PER_WIDTH = 32
DEFAULT_PROBES = 256
LEAKAGE_BUDGET = 0.5


Region = Tuple[float, float, float]


def _segments(regions: Sequence[Region]) -> List[Tuple[np.ndarray, float]]:
    """
    Midpoint cells over the union of (lo, hi, scale) regions.

    Each elementary segment between region endpoints gets a uniform grid
    fine enough for the largest scale active on it.
    """
    regions = [r for r in regions if r[1] > r[0]]
    if not regions:
        return []
    edges = np.unique([v for lo, hi, _ in regions for v in (lo, hi)])
    cells = []
    for a, b in zip(edges[:-1], edges[1:]):
        active = [s for lo, hi, s in regions if lo <= a and hi >= b]
        if not active:
            continue
        m = max(2, int(math.ceil((b - a) * CELLS_PER_WIDTH * max(active))))
        width = (b - a) / m
        cells.append((a + width * (np.arange(m) + 0.5), width))
    return cells


def _line_integral(func: Callable, regions: Sequence[Region],
                   target: Optional[MeasurableSet] = None, absolute: bool = True) -> float:
    total = 0.0
    for axis, width in _segments(regions):
        values = func(axis)
        if absolute:
            values = np.abs(values)
        if target is not None:
            values = values * np.clip(target.cell_weights([axis]), 0.0, 1.0)
        total += width * float(np.sum(values))
    return total


def _annulus(j: int) -> List[Tuple[float, float]]:
    """Support of psi_j on the line."""
    if j == 0:
        return [(-2.0, 2.0)]
    inner, outer = 2.0 ** (j - 1), 2.0 ** (j + 1)
    return [(-outer, -inner), (inner, outer)]


@dataclass
class OperatorPair:
    """S and T for one mollifier system, compatible pair and grid."""
    system: MollifierSystem
    pair: CompatiblePair
    grid: GridSpec

    def __post_init__(self):
        """Validate that the system, pair and grid agree."""
        if self.system.dimension != self.grid.dimension:
            raise ValueError("Mollifier dimension {} does not match grid dimension {}".format(
                self.system.dimension, self.grid.dimension))
        if self.system.rho1 != self.pair.rho1 or self.system.c1 != self.pair.c1:
            raise ValueError("Mollifier system was built for a different rho1 or C1")

    @classmethod
    def build(cls, pair: CompatiblePair, grid: GridSpec, j_max: Optional[int] = None,
              resolution: int = MIN_RESOLUTION) -> 'OperatorPair':
        system = MollifierSystem.from_pair(pair, grid.dimension, grid.extent, j_max, resolution)
        return cls(system.build_phi(), pair, grid)

    @property
    def j_max(self) -> int:
        return self.system.j_max

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    def _check(self, f: GridFunction) -> None:
        expected = (self.grid.n,) * self.dimension
        if f.domain != 'space' or f.shape != expected or not np.allclose(f.extent, self.grid.extent, rtol=1e-12):
            raise ValueError("Grid mismatch: expected space samples of shape {} and extent {}, got {} {} {}".format(
                expected, self.grid.extent, f.domain, f.shape, f.extent))

    def _points(self, f: GridFunction) -> np.ndarray:
        if self.dimension == 1:
            return f.axes[0]
        return np.stack(f.mesh(), axis=-1)

    def _apply(self, f: GridFunction, complementary: bool) -> GridFunction:
        self._check(f)
        F = forward_transform(f)
        x, y = self._points(f), self._points(F)
        out = np.zeros(f.shape, dtype=complex)
        for j in range(self.j_max + 1):
            weight = self.system.partition_term(j, x)
            if not np.any(weight):
                continue
            multiplier = self.system.hat_phi_j(j - 1, y)
            if complementary:
                multiplier = 1.0 - multiplier
            out += weight * inverse_transform(F.with_values(F.values * multiplier)).values
        return f.with_values(out)

    def apply_S(self, f: GridFunction) -> GridFunction:
        """sum_j psi_j (phi_(j-1) conv f) through the multipliers phi_(j-1)^."""
        return self._apply(f, complementary=False)

    def apply_T(self, f: GridFunction) -> GridFunction:
        """sum_j psi_j (f - phi_(j-1) conv f); S f + T f = f on |x| <= 2^J."""
        return self._apply(f, complementary=True)

    def _pairs(self, x, y) -> Tuple[np.ndarray, np.ndarray, Tuple[int, ...]]:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        shape = x.shape if self.dimension == 1 else x.shape[:-1]
        return x, y, shape

    def kernel_K(self, x, y) -> np.ndarray:
        """K(x, y); at most three levels contribute at any x."""
        x, y, shape = self._pairs(x, y)
        diff = x - y
        out = np.zeros(shape)
        for j in range(self.j_max + 1):
            weight = self.system.partition_term(j, x)
            active = weight != 0
            if np.any(active):
                out[active] += weight[active] * self.system.phi_j(j - 1, diff[active])
        return out

    def level_scale(self, j: int) -> float:
        """Scale 2^j of Phi_j in the frequency kernel."""
        return 2.0 ** j

    def _level_phi(self, j: int, u: np.ndarray) -> np.ndarray:
        s = self.level_scale(j)
        return s ** self.dimension * self.system.phi(s * u)

    def l_coefficient(self, j: int, y) -> np.ndarray:
        """phi_j^(y) - phi_(j-1)^(y) below the top level, 1 - phi_(J-1)^(y) at it."""
        if j == self.j_max:
            return 1.0 - self.system.hat_phi_j(j - 1, y)
        return self.system.hat_phi_j(j, y) - self.system.hat_phi_j(j - 1, y)

    def kernel_L(self, x, y) -> np.ndarray:
        """L(x, y) on the frequency side; zero at y = 0."""
        x, y, shape = self._pairs(x, y)
        diff = x - y
        out = np.zeros(shape)
        for j in range(self.j_max + 1):
            coefficient = self.l_coefficient(j, y)
            active = coefficient != 0
            if np.any(active):
                out[active] += coefficient[active] * self._level_phi(j, diff[active])
        return out

    def kernel_apply_S(self, f: GridFunction, points) -> np.ndarray:
        """S f at the given points by quadrature of K against the samples of f."""
        self._check(f)
        y = self._points(f).reshape(-1) if self.dimension == 1 else self._points(f).reshape(-1, self.dimension)
        points = np.asarray(points, dtype=float)
        values = f.values.reshape(-1)
        if self.dimension == 1:
            kernel = self.kernel_K(points[:, None], y[None, :])
        else:
            kernel = self.kernel_K(points[:, None, :], y[None, :, :])
        return kernel @ values * f.cell_volume

    def kernel_transform_T(self, f: GridFunction, frequencies) -> np.ndarray:
        """(T f)^ at the given frequencies by quadrature of L against f^."""
        F = forward_transform(f)
        y = self._points(F).reshape(-1) if self.dimension == 1 else self._points(F).reshape(-1, self.dimension)
        frequencies = np.asarray(frequencies, dtype=float)
        values = F.values.reshape(-1)
        if self.dimension == 1:
            kernel = self.kernel_L(frequencies[:, None], y[None, :])
        else:
            kernel = self.kernel_L(frequencies[:, None, :], y[None, :, :])
        return kernel @ values * F.cell_volume

    def space_probes(self, count: int = DEFAULT_PROBES) -> np.ndarray:
        """Log-spaced |x| plus annulus midpoints 3 * 2^(j-1) / 2, both signs, inside the domain."""
        reach = self.grid.extent * math.sqrt(self.dimension) / 2.0
        radii = np.concatenate([[0.0], np.logspace(-2, math.log10(reach), count),
                                0.75 * 2.0 ** np.arange(self.j_max + 1)])
        return self._signed(np.unique(radii[radii <= reach]))

    def frequency_probes(self, count: int = DEFAULT_PROBES) -> np.ndarray:
        """Log-spaced |y| up to the top multiplier edge plus the plateau edges 1.5 s_j."""
        scales = np.array([self.system.scale(j) for j in range(-1, self.j_max + 1)])
        reach = 2.0 * scales.max()
        if self.dimension > 1:
            reach = min(reach, self.grid.n / (2.0 * self.grid.extent))
        radii = np.concatenate([[0.0], np.logspace(-2, math.log10(reach), count), 1.5 * scales])
        return self._signed(np.unique(radii[radii <= reach]))

    def _signed(self, radii: np.ndarray) -> np.ndarray:
        radii = np.concatenate([-radii[radii > 0][::-1], radii])
        if self.dimension == 1:
            return radii
        points = np.zeros((radii.size, self.dimension))
        points[:, 0] = radii
        return points

    def row_integral(self, x, target: Optional[MeasurableSet] = None, absolute: bool = True) -> float:
        """int |K(x, y)| dy, over target when given."""
        if self.dimension > 1:
            return self._grid_integral(lambda ys: self.kernel_K(np.asarray(x)[None, :], ys), 'space',
                                       target, absolute)
        x = float(x)
        regions = []
        for j in range(self.j_max + 1):
            if self.system.partition_term(j, x) > 0:
                s = self.system.scale(j - 1)
                regions.append((x - KERNEL_REACH / s, x + KERNEL_REACH / s, s))
        return _line_integral(lambda ys: self.kernel_K(x, ys), regions, target, absolute)

    def column_integral(self, y, target: Optional[MeasurableSet] = None) -> float:
        """int |K(x, y)| dx, over target when given."""
        if self.dimension > 1:
            return self._grid_integral(lambda xs: self.kernel_K(xs, np.asarray(y)[None, :]), 'space', target)
        y = float(y)
        regions = []
        for j in range(self.j_max + 1):
            s = self.system.scale(j - 1)
            for lo, hi in _annulus(j):
                regions.append((max(lo, y - KERNEL_REACH / s), min(hi, y + KERNEL_REACH / s), s))
        return _line_integral(lambda xs: self.kernel_K(xs, y), regions, target)

    def l_column_integral(self, y, target: Optional[MeasurableSet] = None) -> float:
        """int |L(x, y)| dx over frequencies x, over target when given."""
        if self.dimension > 1:
            return self._grid_integral(lambda xs: self.kernel_L(xs, np.asarray(y)[None, :]), 'frequency', target)
        y = float(y)
        regions = []
        for j in range(self.j_max + 1):
            if self.l_coefficient(j, y) != 0:
                s = self.level_scale(j)
                regions.append((y - KERNEL_REACH / s, y + KERNEL_REACH / s, s))
        return _line_integral(lambda xs: self.kernel_L(xs, y), regions, target)

    def _grid_integral(self, func: Callable, side: str, target: Optional[MeasurableSet],
                       absolute: bool = True) -> float:
        # d >= 2: Riemann sums on the operator grid (or its dual).
        space = GridFunction.sample(lambda *mesh: np.zeros(mesh[0].shape), self.grid)
        grid = space if side == 'space' else forward_transform(space)
        points = np.stack(grid.mesh(), axis=-1).reshape(-1, self.dimension)
        values = func(points)
        if absolute:
            values = np.abs(values)
        if target is not None:
            values = values * set_weights(grid, target).reshape(-1)
        return float(np.sum(values) * grid.cell_volume)


def _max_over(func: Callable, probes: np.ndarray, n_jobs: int) -> float:
    values = Parallel(n_jobs=n_jobs)(delayed(func)(p) for p in probes)
    return float(max(values)) if values else 0.0


def leakages(op: OperatorPair, E: MeasurableSet, Sigma: MeasurableSet,
             corpus: Sequence[Tuple[str, GridFunction]]) -> Tuple[float, float]:
    """
    Worst-case leakage coefficients over a corpus.

    alpha = ||S(chi_E f)||^2 / ||f||^2 and beta = ||chi_Sigma (T f)^||^2 / ||f||^2,
    with chi_E applied through the cell coverage of E on the space grid.
    """
    alpha = beta = 0.0
    for function_id, f in corpus:
        norm = f.norm_sq()
        if norm == 0:
            raise ValueError("Corpus function {} is zero".format(function_id))
        restricted = f.with_values(set_weights(f, E, "E") * f.values)
        alpha = max(alpha, op.apply_S(restricted).norm_sq() / norm)
        beta = max(beta, energy_split(forward_transform(op.apply_T(f)), Sigma).on_set / norm)
    return alpha, beta


def schur_bounds(op: OperatorPair, E: MeasurableSet, Sigma: MeasurableSet,
                 probes: int = DEFAULT_PROBES, corpus: Optional[Sequence[Tuple[str, GridFunction]]] = None,
                 epsilon: float = 0.0, n_jobs: int = 1) -> SchurReport:
    """
    Measure the Schur integrals of K and L and the leakage coefficients.

    Args:
        op: Operator pair
        E: Space-side set, thin for rho1
        Sigma: Frequency-side set, thin for rho2
        probes: Log-spaced probe count per side
        corpus: (id, function) pairs for the leakages; 16 seeded corpus
            functions when omitted
        epsilon: Nominal thinness of the sets, recorded in the report
        n_jobs: joblib workers for the probe sweeps

    Returns:
        SchurReport

    Raises:
        ValueError: If the probe set is empty or the sets have the wrong dimension
    """
    if probes < 1:
        raise ValueError("schur_bounds needs at least one probe")
    for label, target in (("E", E), ("Sigma", Sigma)):
        if target.dimension != op.dimension:
            raise ValueError("{} has dimension {} but the operators act in d = {}".format(
                label, target.dimension, op.dimension))
    if corpus is None:
        corpus = sample_corpus(op.grid, count=16, seed=0)

    xs, ys = op.space_probes(probes), op.frequency_probes(probes)
    sup_row = _max_over(op.row_integral, xs, n_jobs)
    sup_col = _max_over(op.column_integral, xs, n_jobs)
    sup_l_col = _max_over(op.l_column_integral, ys, n_jobs)
    thin_row = 0.0 if E.is_empty() else _max_over(lambda x: op.row_integral(x, E), xs, n_jobs)
    thin_col = 0.0 if Sigma.is_empty() else _max_over(lambda y: op.l_column_integral(y, Sigma), ys, n_jobs)
    alpha, beta = leakages(op, E, Sigma, corpus)
    report = SchurReport(sup_row=sup_row, sup_col=sup_col, sup_l_col=sup_l_col, thin_row_sup=thin_row,
                         thin_col_sup=thin_col, epsilon=epsilon, leakage_alpha=alpha, leakage_beta=beta)
    logger.debug("Schur bounds at eps={:g}: row {:.4g}, col {:.4g}, L col {:.4g}, alpha {:.3g}, beta {:.3g}".format(
        epsilon, sup_row, sup_col, sup_l_col, alpha, beta))
    return report


def bound_constant(report: SchurReport) -> float:
    """C = 2 max(1, 4 sup_row sup_col) when 4(alpha + beta) <= 1/2, else inf."""
    if report.leakage_budget > LEAKAGE_BUDGET:
        return math.inf
    return 2.0 * max(1.0, 4.0 * report.sup_row * report.sup_col)


def verify_up_inequality(op: OperatorPair, E: MeasurableSet, Sigma: MeasurableSet,
                         corpus: Sequence[Tuple[str, GridFunction]],
                         report: Optional[SchurReport] = None) -> Dict:
    """
    Empirical constant of the uncertainty inequality for E, Sigma over a corpus.

    Args:
        op: Operator pair (its pair is checked for compatibility)
        E: Space-side set
        Sigma: Frequency-side set
        corpus: (id, function) pairs
        report: Schur report whose leakages to use; measured on the corpus when omitted

    Returns:
        Dictionary with C_emp, worst_function, the leakages, their budget
        4(alpha + beta), whether it is at most 1/2, and the pair's compatibility
    """
    if not corpus:
        raise ValueError("verify_up_inequality needs a non-empty corpus")
    compatibility = check_compatibility(op.pair)
    if not compatibility.holds:
        logger.warning("Pair {} is not compatible (worst margin {:.3g} at t={:.3g}); computing anyway".format(
            op.pair.label, compatibility.worst_margin, compatibility.worst_t))

    c_emp, worst = -math.inf, None
    for function_id, f in corpus:
        value = uncertainty_defect(f, E, Sigma)
        if value > c_emp:
            c_emp, worst = value, function_id

    if report is not None:
        alpha, beta = report.leakage_alpha, report.leakage_beta
    else:
        alpha, beta = leakages(op, E, Sigma, corpus)
    budget = 4.0 * (alpha + beta)
    return {
        'C_emp': c_emp,
        'worst_function': worst,
        'leakage_alpha': alpha,
        'leakage_beta': beta,
        'leakage_budget': budget,
        'sufficient': budget <= LEAKAGE_BUDGET,
        'compatible': compatibility.holds,
    }


def epsilon_sweep(op: OperatorPair, epsilons: Sequence[float] = (0.02, 0.05, 0.1, 0.2),
                  lattice: int = 8, probes: int = 64,
                  corpus: Optional[Sequence[Tuple[str, GridFunction]]] = None,
                  n_jobs: int = 1) -> List[SchurReport]:
    """
    Schur reports on lattice sets of density eps (half width eps / 2 at unit spacing).

    The same lattice serves as E and as Sigma.
    """
    if corpus is None:
        corpus = sample_corpus(op.grid, count=8, seed=0)
    reports = []
    for eps in epsilons:
        target = periodic_thin_set(op.dimension, lattice, eps / 2.0)
        reports.append(schur_bounds(op, target, target, probes=probes, corpus=corpus,
                                    epsilon=eps, n_jobs=n_jobs))
        logger.info("eps={:g}: thin_row_sup={:.4g}, alpha={:.3g}, beta={:.3g}".format(
            eps, reports[-1].thin_row_sup, reports[-1].leakage_alpha, reports[-1].leakage_beta))
    return reports


def apply_S(op: OperatorPair, f: GridFunction) -> GridFunction:
    return op.apply_S(f)


def apply_T(op: OperatorPair, f: GridFunction) -> GridFunction:
    return op.apply_T(f)


def kernel_K(op: OperatorPair, x, y) -> np.ndarray:
    return op.kernel_K(x, y)


def kernel_L(op: OperatorPair, x, y) -> np.ndarray:
    return op.kernel_L(x, y)
