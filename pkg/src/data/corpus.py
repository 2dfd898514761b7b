"""
Seeded test-function corpus.

Three families, cycled in order: Gaussians with random centers and widths,
modulated Gaussian bumps, and random packet sums that are effectively
band-limited. Centers stay within R/8 of the origin, modulations within a
quarter of the dual half width, and widths between about 8R/N and R/8. On
any grid with N >= 128 samples per axis that keeps every Gaussian term and
its transform below 1e-12 of its peak at the edges of their grids. Coarser
grids get the closest widths available and a warning.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import logging
import math

import numpy as np

from analysis.spectral import GridFunction, GridSpec

logger = logging.getLogger(__name__)

CORPUS_KINDS = ['gaussian', 'modulated', 'packets']

WIDTH_RANGE = (0.5, 3.0)
PACKETS_PER_FUNCTION = 6
# exp(-pi * 3^2) ~ 5e-13 at three widths from the center
TAIL_WIDTHS = 3.0


@dataclass
class CorpusFunction:
    """One corpus member: an id, its family and per-axis parameters."""
    function_id: str
    kind: str
    params: Dict[str, list] = field(default_factory=dict)

    def __post_init__(self):
        """Validate the family after initialization."""
        if self.kind not in CORPUS_KINDS:
            raise ValueError("Corpus kind must be one of: {}".format(", ".join(CORPUS_KINDS)))

    def evaluate(self, *mesh: np.ndarray) -> np.ndarray:
        """Evaluate on coordinate arrays (one per axis); separable across axes."""
        value = np.ones(mesh[0].shape, dtype=complex)
        if self.kind in ('gaussian', 'modulated'):
            for axis, x in enumerate(mesh):
                c, w, xi = self.params['center'][axis], self.params['width'][axis], self.params['freq'][axis]
                value = value * np.exp(-math.pi * ((x - c) / w) ** 2) * np.exp(2j * math.pi * xi * x)
            return value
        total = np.zeros(mesh[0].shape, dtype=complex)
        for packet in self.params['packets']:
            term = complex(packet['coef'])
            for axis, x in enumerate(mesh):
                c, w, xi = packet['center'][axis], packet['width'][axis], packet['freq'][axis]
                term = term * np.exp(-math.pi * ((x - c) / w) ** 2) * np.exp(2j * math.pi * xi * x)
            total = total + term
        return total


def corpus_bounds(grid: GridSpec) -> Tuple[float, float, Tuple[float, float]]:
    """
    Center offset, modulation and width range keeping tails below 1e-12 on both grids.

    A width w puts the last space sample (R/2 - h - span) / w widths from the
    farthest center and the last dual sample w (N / 2R - 1/R - band) widths
    from the farthest modulation; both must be at least TAIL_WIDTHS.
    """
    center_span = grid.extent / 8.0
    dual_half = grid.n / (2.0 * grid.extent)
    band = min(4.0, dual_half / 4.0)
    space_reach = grid.extent / 2.0 - grid.spacing - center_span
    dual_reach = dual_half - 1.0 / grid.extent - band
    if space_reach <= 0 or dual_reach <= 0:
        raise ValueError("Grid N={}, R={:g} is too coarse for a corpus".format(grid.n, grid.extent))
    widest = min(WIDTH_RANGE[1], space_reach / TAIL_WIDTHS)
    narrowest = max(min(WIDTH_RANGE[0], widest), TAIL_WIDTHS / dual_reach)
    if narrowest > widest:
        logger.warning("Grid N={}, R={:g} cannot keep corpus tails below 1e-12 on both sides; "
                       "using width {:.4g}".format(grid.n, grid.extent, widest))
        narrowest = widest
    return center_span, band, (narrowest, widest)


def generate_corpus(grid: GridSpec, count: int = 50, seed: int = 0) -> List[CorpusFunction]:
    """
    Draw `count` corpus members from a seeded generator.

    Args:
        grid: Grid the functions will be sampled on (bounds centers and bands)
        count: Number of functions
        seed: Seed for numpy's default_rng

    Returns:
        List of CorpusFunction, ids 'f000', 'f001', ...
    """
    if count < 1:
        raise ValueError("Corpus size must be at least 1")
    rng = np.random.default_rng(seed)
    span, band, widths = corpus_bounds(grid)
    d = grid.dimension
    members = []
    for index in range(count):
        kind = CORPUS_KINDS[index % len(CORPUS_KINDS)]
        if kind == 'packets':
            packets = []
            for _ in range(PACKETS_PER_FUNCTION):
                packets.append({
                    'coef': complex(rng.normal(), rng.normal()),
                    'center': rng.uniform(-span, span, d).tolist(),
                    'width': rng.uniform(*widths, d).tolist(),
                    'freq': rng.uniform(-band, band, d).tolist(),
                })
            params = {'packets': packets}
        else:
            params = {
                'center': rng.uniform(-span, span, d).tolist(),
                'width': rng.uniform(*widths, d).tolist(),
                'freq': (rng.uniform(-band, band, d) if kind == 'modulated' else np.zeros(d)).tolist(),
            }
        members.append(CorpusFunction('f{:03d}'.format(index), kind, params))
    logger.debug("Generated corpus of {} functions (seed {})".format(count, seed))
    return members


def sample_corpus(grid: GridSpec, count: int = 50, seed: int = 0,
                  drawn_for: Optional[GridSpec] = None) -> List[Tuple[str, GridFunction]]:
    """
    Sample the corpus on a grid, each member normalized to unit L2 norm.

    drawn_for fixes the grid the parameters are drawn for, so the same
    functions can be resampled on a refined grid.
    """
    sampled = []
    for member in generate_corpus(drawn_for or grid, count, seed):
        f = GridFunction.sample(member.evaluate, grid)
        norm = math.sqrt(f.norm_sq())
        sampled.append((member.function_id, f.with_values(f.values / norm)))
    return sampled


def gaussian(grid: GridSpec, center: float = 0.0, width: float = 1.0) -> GridFunction:
    """exp(-pi |x - c|^2 / w^2) on the grid (not normalized)."""
    def evaluate(*mesh):
        return np.prod([np.exp(-math.pi * ((x - center) / width) ** 2) for x in mesh], axis=0)
    return GridFunction.sample(evaluate, grid)
