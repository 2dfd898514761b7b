"""
Experiment configuration.

An ExperimentConfig is assembled from three sources, lowest precedence
first: the defaults below, a JSON file given with --config (keys are the
long flag names, with '-' or '_'), and the command-line flags. The worker
count can also come from the UPLAB_WORKERS environment variable, which
overrides the file but not --workers.
"""

from dataclasses import dataclass, asdict, fields, replace
from typing import Dict, Optional, Tuple
import hashlib
import json
import logging
import math
import os

from analysis.contraction import parse_measure
from analysis.spectral import GridSpec, parse_grid
from models.radius import CompatiblePair, parse_pair, parse_radius
from models.sets import BoxSet, IntervalSet, MeasurableSet, parse_set, periodic_thin_set

logger = logging.getLogger(__name__)

EXPERIMENTS = [
    'verify-condition', 'thinness', 'schur', 'up', 'cover',
    'counterexample', 'contraction', 'profile'
]

WORKERS_ENV = 'UPLAB_WORKERS'

HASH_EXCLUDED = ('output', 'workers')

DEFAULT_PAIRS = {'counterexample': 'incompatible'}

# Truncation per dimension
DEFAULT_GRIDS = {1: 'N=4096,R=64', 2: 'N=512,R=32,d=2'}

# W = 2 keeps four samples per cycle of mu^(|x|^2) at the window edge when h = 1/16
DEFAULT_WINDOWS = {1: 8.0, 2: 2.0}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one run depends on.

    Attributes:
        experiment: Experiment name, one of EXPERIMENTS
        grid: Grid spec 'N=4096,R=64[,d=1]'; from DEFAULT_GRIDS by dim when omitted
        pair: Pair spec; defaults to 'wolff' ('incompatible' for counterexample)
        rho1: Radius spec replacing the pair's space-side radius
        rho2: Radius spec replacing the pair's frequency-side radius
        set_e: Space-side set spec; a lattice of density eps when omitted
        set_sigma: Frequency-side set spec; a lattice of density eps when omitted
        eps: Nominal thinness
        eps_list: Thinness values swept by the schur experiment
        lattice: Lattice count n of the default sets
        k: Scale ladder (counterexample) or scale factors (verify-condition)
        dim: Dimension of counterexample and contraction runs
        dims: Dimensions of the cover sweep
        count: Instances per dimension in the cover sweep
        probes: Probe count (compatibility, Schur, cover); the experiment's own default when omitted
        corpus_size: Corpus functions for leakages and C_emp
        t_max: Largest probed t in the compatibility check
        center_extent: Half width of the thinness center grid
        j_max: Partition truncation level; from the grid when omitted
        phi_resolution: Frequency samples per unit for phi
        p: Exponent of the space-side form
        delta: Level threshold
        deltas: Thresholds swept by the contraction experiment
        mu1: Space-side measure spec
        mu2: Frequency-side measure spec
        window: Symbol window W; from DEFAULT_WINDOWS by dim when omitted
        refine: Repeat on a doubled grid (contraction, up) and a doubled corpus (up) and check stability
        seed: Seed for every random choice
        output: Output directory
        workers: joblib workers
    """
    experiment: str
    grid: Optional[str] = None
    pair: Optional[str] = None
    rho1: Optional[str] = None
    rho2: Optional[str] = None
    set_e: Optional[str] = None
    set_sigma: Optional[str] = None
    eps: float = 0.1
    eps_list: Tuple[float, ...] = (0.02, 0.05, 0.1, 0.2)
    lattice: int = 8
    k: Tuple[float, ...] = (2.0, 4.0, 8.0, 16.0)
    dim: int = 1
    dims: Tuple[int, ...] = (1, 2)
    count: int = 100
    probes: Optional[int] = None
    corpus_size: int = 50
    t_max: float = 1e8
    center_extent: float = 8.0
    j_max: Optional[int] = None
    phi_resolution: int = 256
    p: float = 2.0
    delta: float = 0.05
    deltas: Tuple[float, ...] = ()
    mu1: str = 'bernoulli'
    mu2: str = 'bernoulli'
    window: Optional[float] = None
    refine: bool = False
    seed: int = 0
    output: str = 'reports'
    workers: int = 1

    def __post_init__(self):
        """Normalize sequences, fill per-experiment defaults and check every spec parses."""
        if self.experiment not in EXPERIMENTS:
            raise ValueError("Invalid config field 'experiment': expected one of {}, got '{}'".format(
                ", ".join(EXPERIMENTS), self.experiment))
        for name in ('eps_list', 'k', 'deltas'):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, 'dims', tuple(int(v) for v in self.dims))
        if self.pair is None:
            object.__setattr__(self, 'pair', DEFAULT_PAIRS.get(self.experiment, 'wolff'))

        self._check_range('eps', 0 < self.eps < 1)
        self._check_range('eps_list', bool(self.eps_list) and all(0 < e < 1 for e in self.eps_list))
        self._check_range('k', bool(self.k) and all(v > 0 and math.isfinite(v) for v in self.k))
        self._check_range('deltas', all(0 < v < 1 for v in self.deltas))
        self._check_range('delta', 0 < self.delta < 1)
        self._check_range('dims', bool(self.dims) and all(d in (1, 2) for d in self.dims))
        self._check_range('dim', self.dim >= 1)
        if self.grid is None:
            object.__setattr__(self, 'grid', DEFAULT_GRIDS.get(self.dim, DEFAULT_GRIDS[1]))
        if self.window is None:
            object.__setattr__(self, 'window', DEFAULT_WINDOWS.get(self.dim, DEFAULT_WINDOWS[1]))
        for name in ('lattice', 'count', 'corpus_size', 'phi_resolution', 'workers'):
            self._check_range(name, getattr(self, name) >= 1)
        self._check_range('probes', self.probes is None or self.probes >= 2)
        self._check_range('t_max', self.t_max > 0)
        self._check_range('center_extent', self.center_extent > 0)
        self._check_range('p', 1 < self.p < math.inf)
        self._check_range('window', self.window > 0)
        self._check_range('j_max', self.j_max is None or self.j_max >= 0)

        self._parse_field('grid', parse_grid)
        self._parse_field('pair', parse_pair)
        for name in ('rho1', 'rho2'):
            if getattr(self, name) is not None:
                self._parse_field(name, parse_radius)
        for name in ('mu1', 'mu2'):
            self._parse_field(name, parse_measure)
        for name in ('set_e', 'set_sigma'):
            if getattr(self, name) is not None and getattr(self, name) != 'domain':
                self._parse_field(name, lambda spec: parse_set(spec, self.grid_spec.dimension))

    def _check_range(self, name: str, condition: bool) -> None:
        if not condition:
            raise ValueError("Invalid config field '{}': value {!r} is out of range".format(
                name, getattr(self, name)))

    def _parse_field(self, name: str, parser):
        try:
            return parser(getattr(self, name))
        except FileNotFoundError:
            raise
        except (ValueError, KeyError, TypeError) as e:
            raise ValueError("Invalid config field '{}': {}".format(name, e))

    @property
    def grid_spec(self) -> GridSpec:
        return parse_grid(self.grid)

    @property
    def pair_spec(self) -> CompatiblePair:
        """The configured pair with rho1, rho2 overrides applied."""
        pair = parse_pair(self.pair)
        if self.rho1 is not None:
            pair = replace(pair, rho1=parse_radius(self.rho1), compatible=None)
        if self.rho2 is not None:
            pair = replace(pair, rho2=parse_radius(self.rho2), compatible=None)
        return pair

    @property
    def config_hash(self) -> str:
        return config_hash(self)

    def set_for(self, name: str, d: Optional[int] = None) -> MeasurableSet:
        """
        Resolve set_e or set_sigma.

        'domain' is the whole grid box; an omitted spec is the lattice with
        density eps (half width eps / 2 at unit spacing).
        """
        d = d if d is not None else self.grid_spec.dimension
        spec = getattr(self, name)
        if spec is None:
            return periodic_thin_set(d, self.lattice, self.eps / 2.0)
        if spec == 'domain':
            half = self.grid_spec.extent / 2.0
            if d == 1:
                return IntervalSet([(-half, half)])
            return BoxSet([([-half] * d, [half] * d)], dimension=d)
        return parse_set(spec, d)

    def to_dict(self) -> Dict:
        return asdict(self)


def config_hash(config: ExperimentConfig) -> str:
    """First 12 hex digits of SHA-256 over the sorted JSON of the config, output and workers excluded."""
    payload = {key: value for key, value in asdict(config).items() if key not in HASH_EXCLUDED}
    canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:12]


FIELD_NAMES = [f.name for f in fields(ExperimentConfig)]


def _normalize_keys(values: Dict, source: str) -> Dict:
    normalized = {}
    for key, value in values.items():
        name = key.lstrip('-').replace('-', '_')
        if name not in FIELD_NAMES:
            raise ValueError("Unknown config field '{}' in {}".format(key, source))
        normalized[name] = value
    return normalized


def load_config_file(file_path: str) -> Dict:
    """
    Read a JSON config file.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If it is not a JSON object or names an unknown field
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError("Config file not found: {}".format(file_path))
    try:
        with open(file_path, 'r', encoding='utf-8') as handle:
            values = json.load(handle)
    except json.JSONDecodeError as e:
        raise ValueError("Config file {} is not valid JSON: {}".format(file_path, e))
    if not isinstance(values, dict):
        raise ValueError("Config file {} must hold a JSON object".format(file_path))
    return _normalize_keys(values, file_path)


def workers_from_env(environ: Optional[Dict[str, str]] = None) -> Optional[int]:
    """Worker count from UPLAB_WORKERS, or None when unset."""
    environ = os.environ if environ is None else environ
    raw = environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == '':
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValueError("Invalid config field 'workers': {}={!r} is not an integer".format(WORKERS_ENV, raw))


def build_config(experiment: str, flags: Optional[Dict] = None, config_file: Optional[str] = None,
                 environ: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """
    Merge defaults, the config file, UPLAB_WORKERS and flags into one config.

    Args:
        experiment: Experiment name
        flags: Flag values; None entries mean "not given"
        config_file: Optional JSON config path
        environ: Environment to read UPLAB_WORKERS from (os.environ by default)

    Returns:
        Validated ExperimentConfig

    Raises:
        ValueError: If a field is unknown or invalid
        FileNotFoundError: If the config file or a referenced input file is missing
    """
    values: Dict = {}
    if config_file is not None:
        values.update(load_config_file(config_file))
        values.pop('experiment', None)
        logger.info("Loaded {} config fields from {}".format(len(values), config_file))
    env_workers = workers_from_env(environ)
    if env_workers is not None:
        values['workers'] = env_workers
    if flags:
        values.update({k: v for k, v in _normalize_keys(flags, 'flags').items() if v is not None})
    values.pop('experiment', None)
    config = ExperimentConfig(experiment=experiment, **values)
    logger.debug("Config {}: {}".format(config.config_hash, config.to_dict()))
    return config


def test_config():
    """Build a few configs and print their hashes."""
    print("Testing Config Module")
    print("=" * 50)

    base = build_config('contraction', {'p': 2.0, 'delta': 0.05}, environ={})
    moved = build_config('contraction', {'p': 2.0, 'delta': 0.05, 'output': '/tmp/elsewhere'}, environ={})
    print("contraction hash: {} (output ignored: {})".format(base.config_hash, base.config_hash == moved.config_hash))
    print("counterexample pair default: {}".format(build_config('counterexample', environ={}).pair))
    try:
        build_config('contraction', {'p': 1.0}, environ={})
    except ValueError as e:
        print("refused: {}".format(e))

    print("\nConfig module test completed successfully!")


if __name__ == "__main__":
    test_config()
