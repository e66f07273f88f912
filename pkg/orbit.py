#!/usr/bin/env python
# -*- coding:utf-8 -*-
import sys
import argparse
import numpy as np

from config import get_config, FORMATS
from modules.action import action_and_period, orbit_on_path, orbit_start
from modules.integrator import TimeContour, integrate, orbit_action, orbit_distance, orbit_image
from modules.models import MODELS, build_model
from modules.quantizer import quantize_family
from utils import timer
from utils.errors import ConfigError, OrbitraceError
from utils.output_utils import ORBIT_COLUMNS, orbit_rows, print_error, write_json, write_table

parser = argparse.ArgumentParser(description='A periodic orbit of one family and its symmetry image.')
parser.add_argument('--config', default=None, type=str, help='The experiment TOML file.')
parser.add_argument('--family', default=None, type=str, help='The label of the orbit family.')
parser.add_argument('--n', default=None, type=int, help='Quantum number of the level whose orbit is traced.')
parser.add_argument('--E', default=None, type=complex, help='Energy of the orbit, e.g. 3.5+0.2j.')
parser.add_argument('--out', default=None, type=str, help='The output folder.')
parser.add_argument('--format', default=None, choices=FORMATS, help='The format of the data files.')
parser.add_argument('--ode', default=False, action='store_true',
                    help='Also integrate the Hamilton equations over one period.')
parser.add_argument('--quiet', default=False, action='store_true', help='Do not print the configuration.')


def level_energy(cfg, model, family):
    if cfg.E is not None:
        return complex(cfg.E), None

    record = quantize_family(model, family, (cfg.n, cfg.n), tuple(cfg.scan_points), cfg.newton_tol,
                             cfg.newton_max_iter)[0]
    if not record.converged:
        raise OrbitraceError(f'Level {cfg.n} of family {family.label} did not converge: {record.message}',
                             family=family.label, n=cfg.n, status=record.status)
    return record.E_semiclassical, record


def main(argv=None):
    args = parser.parse_args(argv)
    try:
        cfg = get_config(args, mode='orbit')
        if cfg.model_id not in MODELS:
            raise ConfigError('cfg', f'model {cfg.model_id} has no orbit families, use spin.py')
    except ConfigError as e:
        print_error(e)
        return 1

    timer.reset()
    timer.start()
    model = build_model(cfg.model_id, **cfg.params)
    family = cfg.family_by_label(cfg.family)
    tag = f'{family.label}_n{cfg.n}' if cfg.n is not None else f'{family.label}_E'

    try:
        with timer.counter('orbit'):
            E, record = level_energy(cfg, model, family)
            W, T = action_and_period(model, family, E)
            orbit = orbit_on_path(model, family, E, cfg.orbit_samples)
            image = orbit_image(model, orbit)
            distance = orbit_distance(orbit, image)
    except OrbitraceError as e:
        print_error(e)
        return 1

    write_table(f'{cfg.out}/orbit_{tag}', ORBIT_COLUMNS, orbit_rows(orbit),
                f'{family.label} orbit at E = {E:.12g}, samples along the quadrature path', cfg.format)
    write_table(f'{cfg.out}/orbit_{tag}_image', ORBIT_COLUMNS, orbit_rows(image),
                f'symmetry image of the {family.label} orbit, E* = {np.conj(E):.12g}', cfg.format)

    report = {'family': family.label, 'n': cfg.n, 'energy': E, 'action': W, 'period': T, 'distance': distance,
              'closure': orbit.closure_error(), 'self_symmetric': distance < cfg.classify_tol}
    if record is not None:
        report['newton_residuals'] = record.residual_history

    if args.ode:
        try:
            with timer.counter('ode'):
                ode = integrate(model, orbit_start(model, family, E), TimeContour(T), cfg.steps, cfg.bound)
            report['ode'] = {'closure': ode.closure_error(), 'energy_drift': ode.drift, 'action': orbit_action(ode)}
            write_table(f'{cfg.out}/orbit_{tag}_ode', ORBIT_COLUMNS, orbit_rows(ode),
                        f'RK4 orbit from the turning point or path start over T = {T:.12g}', cfg.format)
        except OrbitraceError as e:
            report['ode'] = e.record()

    write_json(f'{cfg.out}/orbit_{tag}.json', report)
    print(f'{family.label}: E = {E:.10g}, W = {W:.10g}, T = {T:.10g}')
    print(f'distance to the symmetry image: {distance:.3e} '
          f'({"self-symmetric" if report["self_symmetric"] else "not self-symmetric"})')
    print('\n' + timer.line())
    return 0


if __name__ == '__main__':
    sys.exit(main())
