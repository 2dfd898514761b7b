"""
The run operation: one experiment from config to report files and exit status.

Every experiment returns report rows, the schema they follow, the context its
invariant checks compare against, and the stability checks it asks for. The
rows are written through a ReportWriter, validated, and the run ends with a
summary.json next to the reports.

Exit status: 0 when every invariant holds, 1 when one fails. Configuration
and refusal errors propagate to the caller, which maps them to status 2.
"""

from typing import Dict, List, Sequence, Tuple
import json
import logging
import math
import os

import numpy as np

from analysis.contraction import SymbolPair, contraction_sweep, parse_measure, refinement_check
from analysis.counterexamples import counterexample_ladder, instance_row
from analysis.covering import cover_sweep, greedy_cover, random_instance
from analysis.invariant_checks import validate_experiment
from analysis.mollifier import MollifierSystem
from analysis.operators import OperatorPair, bound_constant, epsilon_sweep, schur_bounds, verify_up_inequality
from data.corpus import sample_corpus
from data.report_io import ReportWriter
from experiments.config import ExperimentConfig
from experiments.sweep_manager import SweepManager
from models.data_models import (
    CONDITION_SCHEMA, THINNESS_SCHEMA, OPERATORS_SCHEMA, COVER_SCHEMA,
    COUNTEREXAMPLE_SCHEMA, CONTRACTION_SCHEMA, PROFILE_SCHEMA, SchurReport
)
from models.radius import CompatiblePair, check_compatibility, scale_pair
from models.sets import ThinnessSampling, certify_thinness, periodic_thin_set

logger = logging.getLogger(__name__)

BETA_STABILITY = 1e-3
C_EMP_STABILITY = 0.1

Outcome = Tuple[List[Dict], Sequence[str], Dict, List[Tuple[str, List[float], float]]]


def _format_point(point) -> str:
    return ';'.join('{:.12g}'.format(v) for v in np.atleast_1d(point))


def _probes(config: ExperimentConfig, default: int) -> int:
    return config.probes if config.probes is not None else default


def _operators_row(pair: CompatiblePair, report: SchurReport, c_emp: float) -> Dict:
    return {
        'rho1': pair.rho1.label, 'rho2': pair.rho2.label, 'C1': pair.c1, 'C2': pair.c2,
        'eps': report.epsilon, 'sup_row': report.sup_row, 'sup_col': report.sup_col,
        'sup_l_col': report.sup_l_col, 'thin_row_sup': report.thin_row_sup, 'thin_col_sup': report.thin_col_sup,
        'alpha': report.leakage_alpha, 'beta': report.leakage_beta, 'C_emp': c_emp,
    }


def _build_operators(config: ExperimentConfig, writer: ReportWriter) -> OperatorPair:
    op = OperatorPair.build(config.pair_spec, config.grid_spec, config.j_max, config.phi_resolution)
    writer.write_phi('phi', op.system)
    return op


def run_verify_condition(config: ExperimentConfig, writer: ReportWriter, sweeps: SweepManager) -> Outcome:
    """The compatibility check of the pair and of its scaled versions rho1 -> k rho1(t/k), rho2 -> rho2(kt)/k."""
    pair = config.pair_spec
    scales = sorted(set((1.0,) + config.k))
    probes = _probes(config, 10_000)

    def check(k: float) -> Dict:
        report = check_compatibility(scale_pair(pair, k), config.t_max, probes)
        return {
            'rho1': pair.rho1.label, 'rho2': pair.rho2.label, 'C1': pair.c1, 'C2': pair.c2, 'k': k,
            't_max': report.t_max, 'holds': report.holds, 'worst_margin': report.worst_margin,
            'worst_t': report.worst_t,
        }

    return sweeps.run('verify-condition', check, scales), CONDITION_SCHEMA, {}, []


def run_thinness(config: ExperimentConfig, writer: ReportWriter, sweeps: SweepManager) -> Outcome:
    """Certify E against rho1 and Sigma against rho2 on a center grid fine enough for each."""
    pair = config.pair_spec
    d = config.grid_spec.dimension
    targets = [('E', config.set_for('set_e'), pair.rho1), ('Sigma', config.set_for('set_sigma'), pair.rho2)]
    for label, target, _ in targets:
        writer.write_set('set_{}'.format(label), target)

    def certify(item) -> Dict:
        label, target, rho = item
        sampling = ThinnessSampling(
            grid_extent=config.center_extent,
            grid_spacing=rho(config.center_extent * math.sqrt(d)) / 2.0,
            metric='euclidean' if d == 1 else 'sup',
        )
        certificate = certify_thinness(target, rho, sampling)
        return {
            'set': label, 'rho': rho.label, 'metric': certificate.metric,
            'epsilon_measured': certificate.epsilon_measured,
            'worst_center': _format_point(certificate.worst_center),
            'center_count': certificate.center_count, 'note': certificate.note,
        }

    return sweeps.run('thinness', certify, targets), THINNESS_SCHEMA, {'eps': config.eps}, []


def run_schur(config: ExperimentConfig, writer: ReportWriter, sweeps: SweepManager) -> Outcome:
    """Schur integrals and leakages over the eps list on lattice sets, with C_emp per point."""
    op = _build_operators(config, writer)
    corpus = sample_corpus(op.grid, config.corpus_size, config.seed)
    reports = epsilon_sweep(op, config.eps_list, config.lattice, _probes(config, 64), corpus, sweeps.n_jobs)
    rows = []
    for report in reports:
        target = periodic_thin_set(op.dimension, config.lattice, report.epsilon / 2.0)
        result = verify_up_inequality(op, target, target, corpus, report)
        rows.append(_operators_row(op.pair, report, result['C_emp']))
    return rows, OPERATORS_SCHEMA, {'phi_l1': op.system.phi_l1}, []


def run_up(config: ExperimentConfig, writer: ReportWriter, sweeps: SweepManager) -> Outcome:
    """C_emp for E, Sigma over the corpus, against the constant of the reduction chain."""
    op = _build_operators(config, writer)
    E, Sigma = config.set_for('set_e'), config.set_for('set_sigma')
    corpus = sample_corpus(op.grid, config.corpus_size, config.seed)
    report = schur_bounds(op, E, Sigma, _probes(config, 256), corpus, config.eps, sweeps.n_jobs)
    result = verify_up_inequality(op, E, Sigma, corpus, report)
    stability = []
    if config.refine:
        doubled = sample_corpus(op.grid, 2 * config.corpus_size, config.seed)
        again = verify_up_inequality(op, E, Sigma, doubled, report)
        stability.append(('C_emp', [result['C_emp'], again['C_emp']], C_EMP_STABILITY))
        fine = sample_corpus(op.grid.refined(), config.corpus_size, config.seed, drawn_for=op.grid)
        finer = verify_up_inequality(op, E, Sigma, fine, report)
        stability.append(('C_emp_grid', [result['C_emp'], finer['C_emp']], C_EMP_STABILITY))
    context = {'bound_constant': bound_constant(report)}
    logger.info("C_emp = {:.6g} (worst {}), chain constant {:.6g}, budget {:.4g}".format(
        result['C_emp'], result['worst_function'], context['bound_constant'], result['leakage_budget']))
    return [_operators_row(op.pair, report, result['C_emp'])], OPERATORS_SCHEMA, context, stability


def run_cover(config: ExperimentConfig, writer: ReportWriter, sweeps: SweepManager) -> Outcome:
    """Randomized covers in every configured dimension, plus a dump of the first instance."""
    probes = _probes(config, 2_500)
    rows = cover_sweep(config.dims, config.count, config.seed, probes, sweeps.n_jobs)
    x, r, rho = random_instance(np.random.default_rng(config.seed), config.dims[0])
    writer.write_cover('cover_dump', greedy_cover(x, r, rho, probes=probes))
    return rows, COVER_SCHEMA, {}, []


def run_counterexample(config: ExperimentConfig, writer: ReportWriter, sweeps: SweepManager) -> Outcome:
    """The k ladder of counterexamples for an incompatible pair."""
    instances = counterexample_ladder(config.pair_spec, config.eps, config.k, config.dim, sweeps.n_jobs)
    for instance in instances:
        if not instance.requirements_met:
            logger.warning("k={:g}: construction requirements not met: {}".format(
                instance.k, {name: '{:.3g}'.format(v) for name, v in instance.requirements.items()}))
    return [instance_row(instance) for instance in instances], COUNTEREXAMPLE_SCHEMA, {'eps': config.eps}, []


def run_contraction(config: ExperimentConfig, writer: ReportWriter, sweeps: SweepManager) -> Outcome:
    """||T_H T_G|| for the configured measures and the bound chain at every delta."""
    grid = config.grid_spec
    if grid.dimension != config.dim:
        raise ValueError("Invalid config field 'dim': contraction in d={} needs a grid with d={}, got '{}'".format(
            config.dim, config.dim, config.grid))
    sym = SymbolPair(parse_measure(config.mu1), parse_measure(config.mu2), config.p, config.delta,
                     config.dim, config.window)
    deltas = config.deltas or (config.delta,)
    rows = contraction_sweep(sym, grid, deltas, seed=config.seed, n_jobs=sweeps.n_jobs)
    stability = []
    if config.refine:
        check = refinement_check(sym, grid)
        stability.append(('beta', [check['beta'], check['beta_refined']], BETA_STABILITY))
    return rows, CONTRACTION_SCHEMA, {}, stability


def run_profile(config: ExperimentConfig, writer: ReportWriter, sweeps: SweepManager) -> Outcome:
    """Decay of the transform of |phi| along a ray in d = 1."""
    system = MollifierSystem.from_pair(config.pair_spec, 1, config.grid_spec.extent, config.j_max,
                                       config.phi_resolution).build_phi()
    profile = system.radial_profile_decay()
    writer.write_phi('phi', system)
    writer.write_array('profile_curve', t=profile.t, p=profile.p, dp=profile.dp)
    row = {
        'd': 1, 'phi_l1': system.phi_l1, 'slope': profile.slope,
        'fit_lo': profile.fit_window[0], 'fit_hi': profile.fit_window[1],
        'integral_64': profile.partial_integrals[64.0], 'integral_128': profile.partial_integrals[128.0],
    }
    return [row], PROFILE_SCHEMA, {}, []


RUNNERS = {
    'verify-condition': run_verify_condition,
    'thinness': run_thinness,
    'schur': run_schur,
    'up': run_up,
    'cover': run_cover,
    'counterexample': run_counterexample,
    'contraction': run_contraction,
    'profile': run_profile,
}


def run(config: ExperimentConfig) -> int:
    """
    Run one experiment and write its reports.

    Args:
        config: Validated configuration

    Returns:
        0 if every invariant holds, 1 otherwise

    Raises:
        ValueError: If a computation refuses its inputs
        FileNotFoundError: If an input file is missing
    """
    config_hash = config.config_hash
    logger.info("Starting {} (config {}) with {} worker(s)".format(config.experiment, config_hash, config.workers))
    writer = ReportWriter(config.output, config_hash)
    sweeps = SweepManager(config.workers)

    try:
        rows, schema, context, stability = RUNNERS[config.experiment](config, writer, sweeps)
        df = writer.write_rows(config.experiment, rows, schema)
    except Exception as e:
        logger.error("Experiment {} failed: {}".format(config.experiment, str(e)))
        raise

    validator = validate_experiment(config.experiment, df, schema, context)
    for name, values, tolerance in stability:
        validator.check_stability(name, values, tolerance)

    summary = dict(validator.result(), config_hash=config_hash, config=config.to_dict(),
                   files=[os.path.basename(path) for path in writer.written])
    summary_path = os.path.join(config.output, 'summary.json')
    with open(summary_path, 'w', encoding='utf-8') as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)

    status = 0 if validator.result()['is_valid'] else 1
    logger.info("Finished {}: {} ({} files, exit status {})".format(
        config.experiment, validator.get_summary(), len(writer.written) + 1, status))
    return status
