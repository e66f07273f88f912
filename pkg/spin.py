#!/usr/bin/env python
# -*- coding:utf-8 -*-
import sys
import argparse
from tensorboardX import SummaryWriter

from config import get_config, FORMATS
from modules.spin import SpinModel, bloch_integrate, pt_sweep, spin_image
from utils import timer
from utils.common_utils import console_progress, make_table
from utils.errors import ConfigError, OrbitraceError
from utils.output_utils import SPIN_COLUMNS, SWEEP_COLUMNS, print_error, spin_rows, sweep_rows, write_json, write_table

parser = argparse.ArgumentParser(description='PT transition of the two-level system and its Bloch orbits.')
parser.add_argument('--config', default=None, type=str, help='The experiment TOML file, cfg = "two_level".')
parser.add_argument('--out', default=None, type=str, help='The output folder.')
parser.add_argument('--format', default=None, choices=FORMATS, help='The format of the data files.')
parser.add_argument('--tensorboard', default=False, action='store_true', help='Log the swept eigenvalues.')
parser.add_argument('--quiet', default=False, action='store_true', help='Do not print the configuration.')


def dump_trajectories(cfg):
    """Representative orbit and its image at the first and last δ1 away from the transition."""
    written = []
    t1 = cfg.params['t1']
    for delta1 in (cfg.deltas[0], cfg.deltas[-1]):
        model = SpinModel(t1, delta1)
        if model.divergent():
            continue
        trajectory = bloch_integrate(model, model.representative(cfg.epsilon), steps=cfg.steps, bound=cfg.bound)
        tag = f'spin_delta{delta1:g}'
        write_table(f'{cfg.out}/{tag}', SPIN_COLUMNS, spin_rows(trajectory),
                    f'Bloch orbit about M at t1 = {t1:g}, delta1 = {delta1:g}', cfg.format)
        write_table(f'{cfg.out}/{tag}_image', SPIN_COLUMNS, spin_rows(spin_image(trajectory)),
                    f'image (nx*, ny*, -nz*)(-t*) of the orbit at delta1 = {delta1:g}', cfg.format)
        written.append(tag)

    generic = SpinModel(t1, cfg.deltas[0])
    if not generic.divergent():
        trajectory = bloch_integrate(generic, cfg.generic_n0, steps=cfg.steps, bound=cfg.bound)
        write_table(f'{cfg.out}/spin_generic', SPIN_COLUMNS, spin_rows(trajectory),
                    f'Bloch orbit from n0 = {cfg.generic_n0} at delta1 = {cfg.deltas[0]:g}', cfg.format)
        written.append('spin_generic')
    return written


def main(argv=None):
    args = parser.parse_args(argv)
    try:
        cfg = get_config(args, mode='spin')
        if not hasattr(cfg, 'deltas'):
            raise ConfigError('cfg', f'the spin command needs the two_level experiment, got {cfg.__class__.__name__}')
    except ConfigError as e:
        print_error(e)
        return 1

    timer.reset()
    timer.start()
    try:
        with timer.counter('sweep'):
            rows = pt_sweep(cfg.params['t1'], cfg.deltas, cfg.epsilon, cfg.steps, cfg.classify_tol,
                            progress=None if args.quiet else console_progress('sweep'))
        with timer.counter('trajectories'):
            written = dump_trajectories(cfg)
    except OrbitraceError as e:
        print_error(e)
        return 1

    write_table(f'{cfg.out}/pt_sweep', SWEEP_COLUMNS, sweep_rows(rows),
                f'two-level sweep at t1 = {cfg.params["t1"]:g}, E = ±½√(t1² - δ1²)', cfg.format)
    write_json(f'{cfg.out}/pt_sweep_summary.json', {'t1': cfg.params['t1'], 'rows': len(rows), 'trajectories': written,
                                                    'divergent': [aa['delta1'] for aa in rows
                                                                  if aa['alignment'] == 'Divergent']})
    if cfg.tensorboard:
        writer = SummaryWriter(f'tensorboard_log/{cfg.__class__.__name__}')
        for i, row in enumerate(rows):
            writer.add_scalar('E_plus/re', row['E_plus'].real, i)
            writer.add_scalar('E_plus/im', row['E_plus'].imag, i)
        writer.close()

    print(make_table(('δ1', 'E+', 'E-', 'alignment', 'orbit', 'status'),
                     [(aa['delta1'], aa['E_plus'], aa['E_minus'], aa['alignment'], aa['orbit_class'], aa['status'])
                      for aa in rows]))
    print('\n' + timer.line())
    return 0


if __name__ == '__main__':
    sys.exit(main())
