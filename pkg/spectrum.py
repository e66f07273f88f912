#!/usr/bin/env python
# -*- coding:utf-8 -*-
import sys
import argparse
import numpy as np
from tensorboardX import SummaryWriter

from config import get_config, lattice_families, ENGINES, FORMATS
from modules.models import MODELS, build_model
from modules.quantizer import check_dichotomy, semiclassical_spectrum
from modules.quantum_ref import build_operator, eigenvalues, match_spectra
from utils import timer
from utils.common_utils import console_progress, make_table, parallel_map
from utils.errors import ConfigError, OrbitraceError
from utils.output_utils import (PY_SWEEP_COLUMNS, QUANTUM_COLUMNS, SPECTRUM_COLUMNS, print_error, py_sweep_rows,
                                quantum_rows, spectrum_rows, write_json, write_table)

parser = argparse.ArgumentParser(description='Semiclassical and quantum spectra of a pseudo-Hermitian model.')
parser.add_argument('--config', default=None, type=str, help='The experiment TOML file.')
parser.add_argument('--engine', default=None, choices=ENGINES, help='Which spectra to compute.')
parser.add_argument('--out', default=None, type=str, help='The output folder.')
parser.add_argument('--format', default=None, choices=FORMATS, help='The format of the data files.')
parser.add_argument('--tensorboard', default=False, action='store_true', help='Log residuals with tensorboardX.')
parser.add_argument('--quiet', default=False, action='store_true', help='Do not print the configuration.')


def run_semiclassical(cfg, writer=None, progress=None):
    if cfg.model_id not in MODELS:
        raise ConfigError('engine', f'model {cfg.model_id} has no semiclassical families')

    model = build_model(cfg.model_id, **cfg.params)
    records = semiclassical_spectrum(model, cfg.families, scan_points=tuple(cfg.scan_points), tol=cfg.newton_tol,
                                     max_iter=cfg.newton_max_iter, dedup_tol=cfg.dedup_tol,
                                     classify_tol=cfg.classify_tol, count=cfg.orbit_samples, progress=progress)
    if writer:
        for record in records:
            for it, residual in enumerate(record.residual_history):
                writer.add_scalar(f'newton/{record.family_label}_{record.n}', residual, it)
    return records


def run_py_sweep(cfg, progress=None):
    """
    The lattice spectrum at every p_y of cfg.py_values, each with the families of its own potential. The values
    run on the thread pool, the families of one value in series.
    Return:
        a list of (p_y, records).
    """
    def one(p_y):
        params = {**cfg.params, 'p_y': p_y}
        model = build_model(cfg.model_id, **params)
        return p_y, semiclassical_spectrum(model, lattice_families(params), scan_points=tuple(cfg.scan_points),
                                           tol=cfg.newton_tol, max_iter=cfg.newton_max_iter, dedup_tol=cfg.dedup_tol,
                                           classify_tol=cfg.classify_tol, count=cfg.orbit_samples, workers=1)

    return parallel_map(one, [float(aa) for aa in cfg.py_values], progress=progress)


def summarize(records, unmatched, reality_tol):
    errors = [aa.match_error for aa in records if aa.match_error is not None]
    violations = check_dichotomy(records, reality_tol)
    statuses = {}
    for record in records:
        statuses[record.status] = statuses.get(record.status, 0) + 1

    return {'levels': len(records), 'status_counts': statuses, 'matched': len(errors), 'unmatched_quantum': unmatched,
            'max_match_error': max(errors) if errors else None,
            'median_match_error': float(np.median(errors)) if errors else None,
            'dichotomy': 'pass' if not violations else 'fail',
            'dichotomy_violations': [{'index': i, 'reason': reason} for i, reason in violations]}


def main(argv=None):
    args = parser.parse_args(argv)
    try:
        cfg = get_config(args, mode='spectrum')
    except ConfigError as e:
        print_error(e)
        return 1

    name = cfg.__class__.__name__
    writer = SummaryWriter(f'tensorboard_log/{name}') if cfg.tensorboard else None
    timer.reset()
    timer.start()
    records, values, unmatched, sweep, failure = None, None, None, None, None

    try:
        if cfg.engine in ('semiclassical', 'both'):
            with timer.counter('semiclassical'):
                records = run_semiclassical(cfg, writer, None if args.quiet else console_progress('classify'))
        if cfg.engine in ('quantum', 'both'):
            with timer.counter('quantum'):
                values = eigenvalues(build_operator(cfg.model_id, cfg.params, **cfg.quantum))
        if records is not None and values is not None:
            unmatched = match_spectra(records, values)
        if cfg.engine in ('semiclassical', 'both') and getattr(cfg, 'py_values', None):
            with timer.counter('py sweep'):
                sweep = run_py_sweep(cfg, None if args.quiet else console_progress('p_y sweep'))
    except OrbitraceError as e:
        failure = e

    # partial results are written before reporting a failure
    if records is not None:
        write_table(f'{cfg.out}/spectrum_semiclassical', SPECTRUM_COLUMNS, spectrum_rows(records),
                    f'{name} semiclassical levels, E = E_re + i E_im, partner is a row index', cfg.format)
    if values is not None:
        write_table(f'{cfg.out}/spectrum_quantum', QUANTUM_COLUMNS, quantum_rows(values),
                    f'{name} eigenvalues of the discretized operator ordered by (Re, Im)', cfg.format)
    if sweep is not None:
        write_table(f'{cfg.out}/py_sweep', PY_SWEEP_COLUMNS, py_sweep_rows(sweep),
                    f'{name} semiclassical levels against the transverse momentum p_y', cfg.format)
    if unmatched is not None:
        summary = summarize(records, unmatched, cfg.reality_tol)
        write_json(f'{cfg.out}/match_report.json', {'config': name, 'summary': summary,
                                                     'levels': [dict(zip(SPECTRUM_COLUMNS, aa))
                                                                for aa in spectrum_rows(records)]})
        if writer:
            for i, record in enumerate(records):
                if record.match_error is not None:
                    writer.add_scalar('match_error', record.match_error, i)

        print(make_table(('family', 'n', 'E semiclassical', 'E quantum', 'match error', 'class'),
                         [(aa.family_label, aa.n, aa.E_semiclassical, aa.E_quantum_match, aa.match_error,
                           aa.orbit_class) for aa in records if aa.converged]))
        print(f'\nmax match error: {summary["max_match_error"]}, median: {summary["median_match_error"]}, '
              f'dichotomy: {summary["dichotomy"]}')
    elif records is not None:
        print(make_table(('family', 'n', 'E semiclassical', 'class', 'status'),
                         [(aa.family_label, aa.n, aa.E_semiclassical, aa.orbit_class, aa.status) for aa in records]))
    elif values is not None:
        print(f'{len(values)} eigenvalues, lowest: {values[0]:.6f}, highest: {values[-1]:.6f}')

    if writer:
        writer.close()
    print('\n' + timer.line())

    if failure is not None:
        print_error(failure)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
