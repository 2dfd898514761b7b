"""
Adaptive covering of a disc by rho-adapted balls.

A closed disc D(x, r) with r >= rho(|x|) is covered by third-radius balls
D(c, rho(|c|)/3) centered on a grid of the disc. Grid points whose radius
exceeds 3r are moved along the segment from x until rho equals 3r. A greedy
Vitali pass then keeps a pairwise disjoint subfamily whose full-radius balls
still cover the disc, and the overlap constant sum |D(x_i, rho(|x_i|))| / |D(x, r)|
is at most 6^d.
"""

from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize

from models.data_models import CoverResult
from models.radius import RadiusFunction, constant_radius, power_radius
from models.sets import MeasurableSet, ball_measure

logger = logging.getLogger(__name__)

# Third-radius balls need grid points within rho_min / 3 of every point.
PITCH_DIVISOR = 6.0
DEFAULT_PROBES = 10_000
MAX_REFINEMENTS = 3
MAX_CANDIDATES = 250_000
# Rows per block in pairwise distance checks.
CHUNK = 1024


def _as_center(x) -> np.ndarray:
    center = np.atleast_1d(np.asarray(x, dtype=float))
    if center.ndim != 1 or not np.all(np.isfinite(center)):
        raise ValueError("Center must be a finite point, got {}".format(x))
    return center


def _check_regime(center: np.ndarray, r: float, rho1: RadiusFunction) -> float:
    """Return rho1(|x|) or refuse when r < rho1(|x|)."""
    if not (r > 0 and math.isfinite(r)):
        raise ValueError("Radius r must be positive and finite, got {}".format(r))
    rho_x = rho1(float(np.linalg.norm(center)))
    if r < rho_x:
        raise ValueError(
            "Covering needs r >= rho1(|x|): r = {:.6g} but rho1({:.6g}) = {:.6g}".format(
                r, float(np.linalg.norm(center)), rho_x))
    return rho_x


def _candidate_grid(center: np.ndarray, r: float, pitch: float) -> np.ndarray:
    """Grid points x + pitch * k inside the closed disc."""
    d = center.size
    m = int(math.floor(r / pitch))
    offsets = np.arange(-m, m + 1, dtype=float)
    mesh = np.meshgrid(*([offsets] * d), indexing='ij')
    steps = np.stack([g.ravel() for g in mesh], axis=1) * pitch
    inside = np.linalg.norm(steps, axis=1) <= r
    return center + steps[inside]


def _project_oversized(center: np.ndarray, points: np.ndarray, rho1: RadiusFunction,
                       r: float) -> np.ndarray:
    """
    Move every point with rho1(|y|) > 3r to the point z of [x, y] where rho1(|z|) = 3r.

    rho1(|x|) <= r < 3r so the root exists by continuity, and y stays in
    D(z, rho1(|z|) / 3) because |y - z| <= |y - x| <= r.
    """
    radii = rho1(np.linalg.norm(points, axis=1))
    oversized = np.flatnonzero(radii > 3.0 * r)
    if oversized.size == 0:
        return points
    moved = points.copy()
    for i in oversized:
        y = points[i]

        def excess(t, y=y):
            return rho1(float(np.linalg.norm((1.0 - t) * center + t * y))) - 3.0 * r

        t = optimize.brentq(excess, 0.0, 1.0, xtol=1e-14)
        moved[i] = (1.0 - t) * center + t * y
    logger.debug("Moved {} candidates with rho1 > 3r onto the level set rho1 = 3r".format(oversized.size))
    return moved


def vitali_select(centers: np.ndarray, radii: np.ndarray, target: np.ndarray) -> List[int]:
    """
    Greedy disjoint selection of the balls D(c, rho / 3).

    Candidates are visited by decreasing radius, then by distance to the
    target center, then lexicographically. A candidate is kept when its open
    third-radius ball misses every kept one.

    Args:
        centers: Candidate centers, shape (n, d)
        radii: Full radii rho(|c|), shape (n,)
        target: Center of the covered disc

    Returns:
        Indices of the kept candidates in selection order
    """
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    n, d = centers.shape
    distance = np.linalg.norm(centers - target, axis=1)
    keys = tuple(centers[:, k] for k in reversed(range(d))) + (distance, -radii)
    order = np.lexsort(keys)

    kept_centers = np.empty((n, d))
    kept_radii = np.empty(n)
    kept: List[int] = []
    for i in order:
        m = len(kept)
        if m:
            gaps = np.linalg.norm(kept_centers[:m] - centers[i], axis=1)
            if np.any(gaps < (kept_radii[:m] + radii[i]) / 3.0):
                continue
        kept_centers[m] = centers[i]
        kept_radii[m] = radii[i]
        kept.append(int(i))
    return kept


def third_balls_disjoint(centers: np.ndarray, radii: np.ndarray) -> bool:
    """Whether the open balls D(c_i, rho_i / 3) are pairwise disjoint."""
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    n = len(radii)
    for start in range(0, n, CHUNK):
        block = centers[start:start + CHUNK]
        gaps = np.linalg.norm(block[:, None, :] - centers[None, :, :], axis=2)
        limits = (radii[start:start + CHUNK, None] + radii[None, :]) / 3.0
        rows = np.arange(start, start + len(block))
        later = np.arange(n)[None, :] > rows[:, None]
        if np.any((gaps < limits) & later):
            return False
    return True


def probe_points(center: np.ndarray, r: float, probes: int = DEFAULT_PROBES) -> np.ndarray:
    """
    Deterministic probes of the closed disc D(x, r).

    d=1 uses an even grid including both ends; d>=2 uses the cube grid
    restricted to the disc plus the boundary points x +- r e_i (and, in d=2,
    points on the circle).
    """
    center = _as_center(center)
    d = center.size
    if probes < 2:
        raise ValueError("Coverage check needs at least 2 probes")
    if d == 1:
        return np.linspace(center[0] - r, center[0] + r, probes)[:, None]
    per_axis = max(2, int(math.ceil(probes ** (1.0 / d))))
    axis = np.linspace(-r, r, per_axis)
    mesh = np.meshgrid(*([axis] * d), indexing='ij')
    steps = np.stack([g.ravel() for g in mesh], axis=1)
    steps = steps[np.linalg.norm(steps, axis=1) <= r]
    boundary = np.concatenate([np.eye(d) * r, -np.eye(d) * r])
    if d == 2:
        angles = np.linspace(0.0, 2.0 * math.pi, per_axis, endpoint=False)
        boundary = np.concatenate([boundary, r * np.stack([np.cos(angles), np.sin(angles)], axis=1)])
    return center + np.concatenate([steps, boundary])


def covers(points: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> bool:
    """Whether every point lies in some closed ball D(c_i, rho_i), up to rounding."""
    points = np.asarray(points, dtype=float)
    for start in range(0, len(points), CHUNK):
        block = points[start:start + CHUNK]
        gaps = np.linalg.norm(block[:, None, :] - centers[None, :, :], axis=2)
        if not np.all(np.any(gaps <= radii[None, :] * (1 + 1e-12), axis=1)):
            return False
    return True


def _cover_at_pitch(center: np.ndarray, r: float, rho1: RadiusFunction, pitch: float,
                    probes: np.ndarray) -> CoverResult:
    d = center.size
    candidates = _project_oversized(center, _candidate_grid(center, r, pitch), rho1, r)
    cand_radii = rho1(np.linalg.norm(candidates, axis=1))
    kept = vitali_select(candidates, cand_radii, center)
    sel_centers = candidates[kept]
    sel_radii = cand_radii[kept]

    overlap_sum = float(sum(ball_measure(d, float(rho)) for rho in sel_radii))
    target_measure = ball_measure(d, r)
    return CoverResult(
        centers=[tuple(float(v) for v in c) for c in sel_centers],
        radii=[float(rho) for rho in sel_radii],
        overlap_sum=overlap_sum,
        target_measure=target_measure,
        constant=overlap_sum / target_measure,
        covered=covers(probes, sel_centers, sel_radii),
        disjoint=third_balls_disjoint(sel_centers, sel_radii),
        candidate_count=len(candidates),
        pitch=pitch,
        probe_count=len(probes),
        candidate_centers=candidates,
        candidate_radii=cand_radii,
        selected_index=tuple(kept),
    )


def greedy_cover(x, r: float, rho1: RadiusFunction, pitch: Optional[float] = None,
                 probes: int = DEFAULT_PROBES, max_refinements: int = MAX_REFINEMENTS,
                 max_candidates: int = MAX_CANDIDATES) -> CoverResult:
    """
    Cover D(x, r) by rho1-adapted balls and keep a Vitali-disjoint subfamily.

    Args:
        x: Center of the target disc (scalar in d=1)
        r: Radius of the target disc, r >= rho1(|x|)
        rho1: Radius function
        pitch: Candidate grid pitch; defaults to rho1(|x| + r) / 6, the
            smallest radius on the disc over 6
        probes: Number of coverage probes
        max_refinements: Pitch halvings tried when a probe is left uncovered
        max_candidates: Refuse grids with more candidates than this

    Returns:
        CoverResult with the selected centers, their radii and the overlap constant

    Raises:
        ValueError: If r < rho1(|x|) or the initial grid is too large
    """
    center = _as_center(x)
    d = center.size
    _check_regime(center, r, rho1)
    if pitch is None:
        pitch = rho1(float(np.linalg.norm(center)) + r) / PITCH_DIVISOR
    if not (pitch > 0 and math.isfinite(pitch)):
        raise ValueError("Pitch must be positive and finite, got {}".format(pitch))

    def grid_size(p: float) -> int:
        return (2 * int(math.floor(r / p)) + 1) ** d

    if grid_size(pitch) > max_candidates:
        raise ValueError("Cover of D({}, {:g}) needs about {} candidates at pitch {:.6g}; max_candidates is {}".format(
            tuple(center), r, grid_size(pitch), pitch, max_candidates))

    probe_set = probe_points(center, r, probes)
    result = _cover_at_pitch(center, r, rho1, pitch, probe_set)
    refinements = 0
    while not result.covered and refinements < max_refinements:
        if grid_size(pitch / 2.0) > max_candidates:
            logger.warning("Cover of D({}, {:g}) left probes uncovered; refinement would exceed {} candidates".format(
                tuple(center), r, max_candidates))
            break
        pitch /= 2.0
        refinements += 1
        logger.info("Refining cover pitch to {:.6g} (refinement {})".format(pitch, refinements))
        result = _cover_at_pitch(center, r, rho1, pitch, probe_set)

    if not result.covered:
        logger.warning("Cover of D({}, {:g}) w.r.t. {} leaves probes uncovered at pitch {:.6g}".format(
            tuple(center), r, rho1.label, pitch))
    logger.debug("Cover of D({}, {:g}): {} of {} candidates kept, constant {:.4f}".format(
        tuple(center), r, len(result.radii), result.candidate_count, result.constant))
    return result


def thin_ball_bound(target: MeasurableSet, x, r: float, rho1: RadiusFunction, eps: float,
                    cover: Optional[CoverResult] = None) -> float:
    """
    |D(x, r) cap E| / (eps |D(x, r)|), checked against the cover constant.

    Through the cover, |D(x, r) cap E| <= sum_i |D(x_i, rho1(|x_i|)) cap E|
    <= eps * constant * |D(x, r)| whenever E is eps-thin at the selected centers.

    Args:
        target: The set E, eps-thin with respect to rho1
        x: Center of the disc
        r: Radius, r >= rho1(|x|)
        rho1: Radius function
        eps: Thinness of E
        cover: Precomputed greedy_cover(x, r, rho1)

    Returns:
        The ratio, at most the cover constant

    Raises:
        ValueError: If r < rho1(|x|), eps <= 0, or E is not eps-thin at the
            selected centers so the bound does not apply
    """
    center = _as_center(x)
    if center.size != target.dimension:
        raise ValueError("Center has dimension {} but the set has dimension {}".format(
            center.size, target.dimension))
    if not (eps > 0 and math.isfinite(eps)):
        raise ValueError("eps must be positive and finite, got {}".format(eps))
    _check_regime(center, r, rho1)
    if cover is None:
        cover = greedy_cover(center, r, rho1)

    scale = eps * ball_measure(target.dimension, r)
    ratio = target.intersect_ball_measure(center, r) / scale
    through_cover = float(np.sum(target.ball_measures(
        np.asarray(cover.centers), np.asarray(cover.radii)))) / scale
    logger.debug("Thin ball ratio {:.6g}, through the cover {:.6g}, constant {:.4f}".format(
        ratio, through_cover, cover.constant))
    if through_cover > cover.constant * (1 + 1e-9) or ratio > cover.constant * (1 + 1e-9):
        raise ValueError(
            "E is not {:g}-thin w.r.t. {} at the selected centers: ratio {:.6g} exceeds constant {:.6g}".format(
                eps, rho1.label, max(ratio, through_cover), cover.constant))
    return float(ratio)


def random_instance(rng: np.random.Generator, d: int) -> Tuple[np.ndarray, float, RadiusFunction]:
    """One randomized (x, r, rho1) with r in [rho1(|x|), 3 rho1(|x|)]."""
    if rng.random() < 0.25:
        rho = constant_radius(float(rng.uniform(0.5, 2.0)))
    else:
        rho = power_radius(float(rng.uniform(0.25, 1.0)))
    x = rng.uniform(-8.0, 8.0, size=d)
    r = rho(float(np.linalg.norm(x))) * float(rng.uniform(1.0, 3.0))
    return x, r, rho


def _instance_row(x: np.ndarray, r: float, rho: RadiusFunction, probes: int) -> Dict:
    result = greedy_cover(x, r, rho, probes=probes)
    return {
        'd': int(x.size),
        'x': ';'.join('{:.12g}'.format(v) for v in x),
        'r': r,
        'rho1': rho.label,
        'selected': len(result.radii),
        'constant': result.constant,
        'bound': result.bound,
        'covered': result.covered,
        'disjoint': result.disjoint,
    }


def cover_sweep(dimensions: Sequence[int] = (1, 2), count: int = 100, seed: int = 0,
                probes: int = 2_500, n_jobs: int = 1) -> List[Dict]:
    """
    Greedy covers of randomized instances, one report row per instance.

    Instances are drawn sequentially from one generator so the rows do not
    depend on n_jobs.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    instances = [random_instance(rng, d) for d in dimensions for _ in range(count)]
    rows = Parallel(n_jobs=n_jobs)(delayed(_instance_row)(x, r, rho, probes) for x, r, rho in instances)
    worst = max(row['constant'] / row['bound'] for row in rows)
    logger.info("Covered {} instances; largest constant / 6^d = {:.4f}".format(len(rows), worst))
    return rows


def test_covering():
    """Run the worked cover examples."""
    print("Testing Covering Module")
    print("=" * 50)

    try:
        greedy_cover(0.0, 1.0, constant_radius(3.0))
    except ValueError as e:
        print("rho = 3r refused: {}".format(e))

    line = greedy_cover(0.0, 1.0, constant_radius(1.0))
    print("d=1, rho = 1: {} balls, constant {:.3f} (bound 6)".format(len(line.radii), line.constant))

    plane = greedy_cover((4.0, 0.0), 2.0, power_radius(1.0))
    print("d=2, rho = min(1/t, 1): {} of {} candidates, constant {:.3f} (bound 36), covered {}".format(
        len(plane.radii), plane.candidate_count, plane.constant, plane.covered))

    print("\nCovering module test completed successfully!")


if __name__ == "__main__":
    test_covering()
