# -*- coding: utf-8 -*-
"""
Thin-Set Uncertainty Laboratory

Command-line entry point: runs one named experiment and writes its CSV
reports, plot-ready arrays and a summary into the output directory.

    python app.py contraction --mu1 atoms:0:0.5,1:0.5 --p 2 --delta 0.05
    python app.py counterexample --pair incompatible --eps 0.1 --k 2,4,8,16 --dim 1

Exit status: 0 when every invariant holds, 1 when an invariant fails,
2 for an invalid configuration or refused input.
"""

import argparse
import logging
import sys
import os

# Add src directory to path for imports
sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from experiments.config import EXPERIMENTS, build_config
from experiments.runner import run

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def _float_list(text):
    try:
        return tuple(float(item) for item in text.split(',') if item.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got '{}'".format(text))


def _int_list(text):
    try:
        return tuple(int(item) for item in text.split(',') if item.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers, got '{}'".format(text))


def _common_flags():
    """Flags shared by every experiment; None means 'not given' so the config file can fill it."""
    common = argparse.ArgumentParser(add_help=False)
    io = common.add_argument_group('run')
    io.add_argument('--config', help='JSON config file; keys are long flag names')
    io.add_argument('--output', help='output directory (default: reports)')
    io.add_argument('--seed', type=int, help='seed for every random choice (default: 0)')
    io.add_argument('--workers', type=int, help='joblib workers (default: $UPLAB_WORKERS or 1)')
    io.add_argument('--verbose', action='store_true', help='log at DEBUG level')
    io.add_argument('--quiet', action='store_true', help='log warnings and errors only')

    setup = common.add_argument_group('setup')
    setup.add_argument('--grid', help="grid spec 'N=4096,R=64[,d=1]' "
                                      "(default: N=4096,R=64; N=512,R=32,d=2 with --dim 2)")
    setup.add_argument('--pair', help="pair spec: wolff, powerlaw:a=2, interp:n=4, incompatible[,c1=..,c2=..]")
    setup.add_argument('--rho1', help="space-side radius spec, e.g. powerlaw:a=2")
    setup.add_argument('--rho2', help="frequency-side radius spec")
    setup.add_argument('--set', dest='set_both', help="set spec for both E and Sigma")
    setup.add_argument('--set-e', help="E: periodic:n=8,h=0.1[,spacing=1], empty, domain or a CSV path")
    setup.add_argument('--set-sigma', help="Sigma: same forms as --set-e")
    setup.add_argument('--eps', type=float, help='nominal thinness (default: 0.1)')
    setup.add_argument('--lattice', type=int, help='lattice count of the default sets (default: 8)')
    setup.add_argument('--probes', type=int, help="probe count (default: the experiment's own)")
    setup.add_argument('--corpus-size', type=int, help='corpus functions (default: 50)')
    setup.add_argument('--jmax', dest='j_max', type=int, help='partition truncation level')
    setup.add_argument('--phi-resolution', type=int, help='frequency samples per unit for phi (default: 256)')

    sweep = common.add_argument_group('sweeps')
    sweep.add_argument('--eps-list', type=_float_list, help='thinness values for schur (default: 0.02,0.05,0.1,0.2)')
    sweep.add_argument('--k', type=_float_list, help='scale ladder (default: 2,4,8,16)')
    sweep.add_argument('--dim', type=int, help='dimension for counterexample and contraction (default: 1)')
    sweep.add_argument('--dims', type=_int_list, help='dimensions for cover (default: 1,2)')
    sweep.add_argument('--count', type=int, help='cover instances per dimension (default: 100)')
    sweep.add_argument('--t-max', type=float, help='largest probed t for verify-condition (default: 1e8)')
    sweep.add_argument('--center-extent', type=float, help='half width of the thinness center grid (default: 8)')
    sweep.add_argument('--refine', action='store_true', default=None,
                       help='repeat on a doubled grid (and corpus for up) and check stability')

    symbols = common.add_argument_group('contraction')
    symbols.add_argument('--mu1', help="space-side measure: atoms:0:0.5,1:0.5 or bernoulli")
    symbols.add_argument('--mu2', help="frequency-side measure (default: bernoulli)")
    symbols.add_argument('--p', type=float, help='exponent p in (1, inf) (default: 2)')
    symbols.add_argument('--delta', type=float, help='level threshold (default: 0.05)')
    symbols.add_argument('--deltas', type=_float_list, help='level thresholds to sweep')
    symbols.add_argument('--window', type=float, help='symbol window W (default: 8; 2 with --dim 2)')
    return common


def build_parser():
    parser = argparse.ArgumentParser(
        prog='app.py',
        description='Numerical experiments on uncertainty principles for thin sets.')
    subparsers = parser.add_subparsers(dest='experiment', metavar='EXPERIMENT')
    subparsers.required = True
    common = _common_flags()
    helps = {
        'verify-condition': 'check the compatibility condition of a radius pair and its rescalings',
        'thinness': 'measure the thinness of E and Sigma',
        'schur': 'Schur integrals and leakages over a thinness sweep',
        'up': 'empirical uncertainty constant against the reduction-chain constant',
        'cover': 'randomized adapted coverings',
        'counterexample': 'counterexample ladder for an incompatible pair',
        'contraction': 'norm of the composed symbol operators',
        'profile': 'decay of the transform of |phi| along a ray',
    }
    for name in EXPERIMENTS:
        subparsers.add_parser(name, parents=[common], help=helps[name])
    return parser


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else (logging.WARNING if quiet else logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def main(argv=None):
    """
    Parse flags, build the configuration and run the experiment.

    Returns:
        Process exit status
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    flags = vars(args).copy()
    experiment = flags.pop('experiment')
    config_file = flags.pop('config')
    set_both = flags.pop('set_both')
    for name in ('verbose', 'quiet'):
        flags.pop(name)
    if set_both is not None:
        flags['set_e'] = flags['set_e'] or set_both
        flags['set_sigma'] = flags['set_sigma'] or set_both

    try:
        config = build_config(experiment, flags, config_file)
    except (ValueError, FileNotFoundError) as e:
        parser.print_usage(sys.stderr)
        print("{}: error: {}".format(parser.prog, e), file=sys.stderr)
        return 2

    try:
        return run(config)
    except (ValueError, FileNotFoundError) as e:
        logger.error("{} refused its input: {}".format(experiment, e))
        return 2


if __name__ == "__main__":
    sys.exit(main())
