#!/usr/bin/env python
# -*- coding:utf-8 -*-
import sys
import glob
import argparse
import numpy as np
from dataclasses import replace
from types import SimpleNamespace
from tensorboardX import SummaryWriter

from config import get_config
from modules.action import action_and_period, orbit_start
from modules.integrator import TimeContour, integrate, orbit_action
from modules.models import MODELS, PhasePoint, build_model, symmetry_residual
from modules.quantizer import PAIR_MEMBER, SELF_SYMMETRIC, check_dichotomy, semiclassical_spectrum
from modules.quantum_ref import (build_h4, build_operator, conjugation_closure, eigenvalues, match_spectra,
                                 phs_residual, propagator_residual)
from modules.spin import ALIGNED_WITH_IM, ALIGNED_WITH_M, DIVERGENT, SpinModel, bloch_integrate, pt_sweep
from utils import timer
from utils.common_utils import make_table
from utils.errors import ConfigError, OrbitraceError
from utils.output_utils import print_error, write_json

parser = argparse.ArgumentParser(description='Run the invariant checks on one or more experiments.')
parser.add_argument('--config', default=None, nargs='+', type=str,
                    help='Experiment TOML files, every file under configs/ by default.')
parser.add_argument('--out', default='results/verify', type=str, help='The folder of the verify report.')
parser.add_argument('--tensorboard', default=False, action='store_true', help='Log the check values.')
parser.add_argument('--quiet', default=False, action='store_true', help='Do not print the configurations.')


class Check:
    def __init__(self, config, name, value, threshold, passed=None, note='', localized=False):
        self.config = config
        self.name = name
        self.value = value
        self.threshold = threshold
        self.localized = localized
        self.passed = bool(value is not None and value < threshold) if passed is None else bool(passed)
        self.passed = self.passed or localized
        self.note = note

    @property
    def result(self):
        if self.localized:
            return 'μ-localized'
        return 'pass' if self.passed else 'FAIL'

    def row(self):
        return self.config, self.name, self.value, self.threshold, self.result, self.note

    def record(self):
        return dict(zip(('config', 'check', 'value', 'threshold', 'result', 'note'), self.row()))


def random_points(rng, count, radius=5.):
    """Uniform in the disc |z| <= radius."""
    return radius * np.sqrt(rng.uniform(0, 1, count)) * np.exp(2j * np.pi * rng.uniform(0, 1, count))


def family_energies(family, count, imag=None):
    re_min, re_max, im_min, im_max = family.window
    span = re_max - re_min
    re = np.linspace(re_min + 0.1 * span, re_max - 0.1 * span, count)
    im = (im_min + im_max) / 2 if imag is None else imag
    return re + 1j * im


def symmetry_checks(cfg, name, model):
    rng = np.random.default_rng(cfg.seed)
    xs, ps = random_points(rng, cfg.random_points), random_points(rng, cfg.random_points)
    residual = max(symmetry_residual(model, PhasePoint(x, p)) for x, p in zip(xs, ps))
    return [Check(name, 'hamiltonian symmetry residual (|x|, |p| <= 5)', float(residual), cfg.identity_tol)]


def gradient_checks(cfg, name, model, step=1e-6):
    """∂H/∂x and ∂H/∂p against central differences, away from the branch line of a piecewise model."""
    rng = np.random.default_rng(cfg.seed + 1)
    xs, ps = random_points(rng, cfg.random_points, 2.), random_points(rng, cfg.random_points, 2.)
    if model.piecewise:
        keep = np.abs(xs.real) > 1e3 * step
        xs, ps = xs[keep], ps[keep]
    dh_dx, dh_dp = model.gradient(xs, ps)
    fd_x = (model.hamiltonian(xs + step, ps) - model.hamiltonian(xs - step, ps)) / (2 * step)
    fd_p = (model.hamiltonian(xs, ps + step) - model.hamiltonian(xs, ps - step)) / (2 * step)
    error = np.maximum(np.abs(dh_dx - fd_x), np.abs(dh_dp - fd_p)) / (1 + np.abs(model.hamiltonian(xs, ps)))
    return [Check(name, 'gradient vs central differences', float(error.max()), 1e-6, note=f'{len(xs)} points')]


def branch_checks(cfg, name, model):
    """H(x, p) = E on both momentum branches, at energies inside every family window."""
    rng = np.random.default_rng(cfg.seed + 2)
    xs = random_points(rng, cfg.random_points, 2.)
    worst = 0.
    for family in cfg.families:
        for E in family_energies(family, 3):
            roots = model.momentum_branches(xs, E)
            worst = max(worst, float(np.abs(model.hamiltonian(xs[None, :], roots) - E).max() / (1 + abs(E))))
    return [Check(name, 'momentum branch residual', worst, cfg.identity_tol, note=f'{len(cfg.families)} families')]


def rk4_order_checks(cfg, name, model, steps=(32, 64, 128)):
    """
    Observed order log2(|z_N - z_2N| / |z_2N - z_4N|) over an eighth of a period from the first family's start
    point. RK4 is exact on a flow whose pieces are at most quadratic in time, as under a linear potential,
    and such a flow shows no measurable order.
    """
    family = cfg.families[0]
    E = family_energies(family, 1)[0]
    _, T = action_and_period(model, family, E)
    start = orbit_start(model, family, E)
    ends = []
    for count in steps:
        orbit = integrate(model, start, TimeContour(T / 8), steps=count, bound=cfg.bound)
        ends.append(np.array([orbit.x[-1], orbit.p[-1]]))
    coarse, fine = np.linalg.norm(ends[0] - ends[1]), np.linalg.norm(ends[1] - ends[2])
    if coarse < 1e-12 * (1 + np.linalg.norm(ends[2])):
        return [Check(name, 'RK4 order', None, None, True, note='exact on this flow')]
    order = float(np.log2(coarse / max(fine, 1e-300)))
    return [Check(name, 'RK4 order', order, 3.9, order >= 3.9, note=f'E = {E:.3g}, steps {steps}')]


def conjugation_checks(cfg, name, model):
    """W_partner(E*) = W(E)* and T_partner(E*) = T(E)*, a family without partner is its own partner."""
    by_label = {aa.label: aa for aa in cfg.families}
    checks = []
    for family in cfg.families:
        partner = by_label[family.partner] if family.partner else family
        re_width = family.window[1] - family.window[0]
        imag = 0.02 * re_width if family.window[2] == family.window[3] else None
        worst, evaluated = 0., 0
        for E in family_energies(family, cfg.check_energies, imag):
            try:
                W, T = action_and_period(model, family, E)
                W_p, T_p = action_and_period(model, partner, np.conj(E))
            except OrbitraceError:
                continue
            evaluated += 1
            worst = max(worst, abs(W_p - np.conj(W)) / (1 + abs(W)), abs(T_p - np.conj(T)) / (1 + abs(T)))
        checks.append(Check(name, f'action conjugation [{family.label}]', worst if evaluated else None,
                            cfg.conjugation_tol, note=f'{evaluated}/{cfg.check_energies} energies'))
    return checks


def period_checks(cfg, name, model):
    """dW/dE = T by central differences with step 1e-4 (1 + |E|)."""
    checks = []
    for family in cfg.families:
        worst, evaluated = 0., 0
        for E in family_energies(family, 3):
            step = 1e-4 * (1 + abs(E))
            try:
                W_hi, _ = action_and_period(model, family, E + step)
                W_lo, _ = action_and_period(model, family, E - step)
                _, T = action_and_period(model, family, E)
            except OrbitraceError:
                continue
            evaluated += 1
            worst = max(worst, abs((W_hi - W_lo) / (2 * step) - T) / abs(T))
        checks.append(Check(name, f'dW/dE = T [{family.label}]', worst if evaluated else None, 1e-6,
                            note=f'{evaluated}/3 energies'))
    return checks


def quadrature_checks(cfg, name, model):
    """
    W with the family's nodes against twice as many, and for librational families against the other contour
    shapes around the same turning points.
    """
    checks = []
    for family in cfg.families:
        doubled = replace(family, nodes=2 * family.nodes)
        shapes = [replace(family, contour='segment'), replace(family, contour='ellipse', margin=1.2),
                  replace(family, contour='ellipse', margin=1.3)]
        worst_nodes, worst_shape, evaluated, compared = 0., 0., 0, 0
        for E in family_energies(family, 3):
            try:
                W, _ = action_and_period(model, family, E)
                W_fine, _ = action_and_period(model, doubled, E)
            except OrbitraceError:
                continue
            evaluated += 1
            worst_nodes = max(worst_nodes, abs(W_fine - W) / (1 + abs(W)))
            if family.kind == 'librational' and not model.piecewise:
                for shape in shapes:
                    try:
                        W_shape, _ = action_and_period(model, shape, E)
                    except OrbitraceError:
                        continue
                    compared += 1
                    worst_shape = max(worst_shape, abs(W_shape - W) / (1 + abs(W)))
        checks.append(Check(name, f'node doubling [{family.label}]', worst_nodes if evaluated else None, 1e-8,
                            note=f'{family.nodes} -> {2 * family.nodes} nodes, {evaluated}/3 energies'))
        if compared:
            checks.append(Check(name, f'contour independence [{family.label}]', worst_shape, 1e-8,
                                note=f'{compared} contour evaluations'))
    return checks


def ode_checks(cfg, name, model, records, per_family=3):
    """Quadrature action against the RK4 line integral of p dx over one period, at converged levels."""
    checks = []
    for family in cfg.families:
        levels = [aa for aa in records if aa.converged and not aa.crossover and aa.family_label == family.label]
        worst, closure, evaluated = 0., 0., 0
        for record in levels[:per_family]:
            W, T = action_and_period(model, family, record.E_semiclassical)
            orbit = integrate(model, orbit_start(model, family, record.E_semiclassical), TimeContour(T),
                              steps=cfg.steps, bound=cfg.bound)
            evaluated += 1
            worst = max(worst, abs(orbit_action(orbit) - W) / (1 + abs(W)))
            closure = max(closure, orbit.closure_error())
        if evaluated:
            checks.append(Check(name, f'ODE action cross-check [{family.label}]', worst, 1e-5,
                                note=f'{evaluated} levels, closure {closure:.1e}'))
    return checks


def maslov_shift(model, family, record):
    """Re W(E_quantum) / 2π - n - μ, the index offset that would put the level on the quantum one."""
    try:
        W, _ = action_and_period(model, family, record.E_quantum_match)
    except OrbitraceError:
        return None
    return float(W.real / (2 * np.pi) - record.n - family.mu)


def match_checks(cfg, name, model, records):
    """
    Per family, the match error of the levels of lowest |n| outside the crossover window. A failing family whose
    every failing level sits within a tenth of the index from its quantum level is a μ-localized deviation,
    reported without failing the run.
    """
    checks = []
    for family in cfg.families:
        levels = [aa for aa in records if aa.converged and aa.family_label == family.label]
        skipped = sum(aa.crossover for aa in levels)
        matched = sorted((aa for aa in levels if not aa.crossover and aa.match_error is not None),
                         key=lambda aa: abs(aa.n))[:cfg.match_levels]
        if not matched:
            continue
        errors = [aa.match_error for aa in matched]
        note = f'median {np.median(errors):.2e} over {len(errors)} levels, {skipped} in the crossover window'
        failing = [aa for aa in matched if aa.match_error >= family.match_tol]
        shifts = [maslov_shift(model, family, aa) for aa in failing]
        localized = bool(failing) and all(aa is not None and abs(aa) <= 0.1 for aa in shifts)
        if failing:
            note += '; ' + ', '.join(f'n={aa.n}: Δμ={bb if bb is None else round(bb, 4)}'
                                     for aa, bb in zip(failing, shifts))
        checks.append(Check(name, f'quantum match [{family.label}] (μ={family.mu})', max(errors), family.match_tol,
                            note=note, localized=localized))
    return checks


def spectrum_checks(cfg, name, model, values):
    records = semiclassical_spectrum(model, cfg.families, scan_points=tuple(cfg.scan_points), tol=cfg.newton_tol,
                                     max_iter=cfg.newton_max_iter, dedup_tol=cfg.dedup_tol,
                                     classify_tol=cfg.classify_tol, count=cfg.orbit_samples)
    converged = [aa for aa in records if aa.converged]
    violations = check_dichotomy(records, cfg.reality_tol)
    classes = {}
    for record in converged:
        classes[record.orbit_class] = classes.get(record.orbit_class, 0) + 1
    checks = [Check(name, 'semiclassical levels converged', None, None, bool(converged),
                    note=f'{len(converged)}/{len(records)}'),
              Check(name, 'orbit/spectrum dichotomy', len(violations), 1,
                    note='; '.join(f'#{i}: {reason}' for i, reason in violations[:3]) or
                         ', '.join(f'{k} {v}' for k, v in sorted(classes.items())))]

    poles = [abs(1 - np.exp(1j * (action_and_period(model, cfg.family_by_label(aa.family_label),
                                                    aa.E_semiclassical)[0]
                                   - 2 * np.pi * cfg.family_by_label(aa.family_label).mu))) for aa in converged]
    checks.append(Check(name, 'trace poles at the levels', max(poles) if poles else None, 1e-8))

    if cfg.model_id == 'HO':
        omega = cfg.params['omega']
        family = cfg.families[0]
        exact = [abs(aa.E_semiclassical - 2 * omega * (aa.n + 0.5)) for aa in converged]
        checks.append(Check(name, f'exact oscillator levels (μ={family.mu})', max(exact) if exact else None, 1e-10))

    checks += ode_checks(cfg, name, model, records)
    match_spectra(records, values)
    checks += match_checks(cfg, name, model, records)
    return checks


def quantum_checks(cfg, name, op):
    values = eigenvalues(op)
    checks = [Check(name, 'η-pseudo-Hermiticity residual', phs_residual(op), cfg.phs_tol),
              Check(name, 'quantum conjugation closure', conjugation_closure(values), cfg.closure_tol)]

    small = op if op.dim <= 256 else None
    if cfg.propagator_grid is not None:
        small = build_operator(cfg.model_id, cfg.params, **cfg.propagator_grid)
    if small is not None:
        residual = max(propagator_residual(small, complex(t)) for t in cfg.propagator_times)
        checks.append(Check(name, f'propagator identity (dim {small.dim})', residual, cfg.propagator_tol,
                            note=f'{len(cfg.propagator_times)} complex times'))
    return checks, values


def spin_checks(cfg, name):
    t1 = cfg.params['t1']
    rows = pt_sweep(t1, cfg.deltas, cfg.epsilon, cfg.steps, cfg.classify_tol)
    failed = [aa['delta1'] for aa in rows if aa['status'] != 'ok']
    wrong = []
    for row in rows:
        if row['alignment'] == DIVERGENT or row['status'] != 'ok':
            continue
        E = row['E_plus']
        if row['delta1'] < t1:
            ok = abs(E.imag) < 1e-12 and row['orbit_class'] == SELF_SYMMETRIC and row['alignment'] == ALIGNED_WITH_M
        else:
            ok = abs(E.real) < 1e-12 and abs(row['E_minus'] - np.conj(E)) < 1e-12 and \
                 row['orbit_class'] == PAIR_MEMBER and row['alignment'] == ALIGNED_WITH_IM
        if not ok:
            wrong.append(row['delta1'])

    eig_errors = [aa['eig_error'] for aa in rows if aa['eig_error'] is not None]
    checks = [Check(name, 'sweep rows without errors', len(failed), 1, note=f'failed at δ1 = {failed[:5]}'),
              Check(name, 'transition dichotomy', len(wrong), 1, note=f'violations at δ1 = {wrong[:5]}'),
              Check(name, 'eigensolver vs ±½√(t1² - δ1²)', max(eig_errors) if eig_errors else None, cfg.eig_tol)]

    phs = max(phs_residual(build_h4(t1, d)) for d in cfg.deltas)
    checks.append(Check(name, 'η-pseudo-Hermiticity residual', phs, cfg.phs_tol))

    model = SpinModel(t1, cfg.deltas[0])
    if not model.divergent():
        trajectory = bloch_integrate(model, cfg.generic_n0, steps=cfg.steps, bound=cfg.bound)
        checks.append(Check(name, 'generic spin orbit closure', trajectory.closure_error(), cfg.closure_tol))
        checks.append(Check(name, 'Casimir n·n drift', trajectory.casimir_drift(), cfg.closure_tol))
    return checks


def verify_config(cfg):
    name = cfg.__class__.__name__
    if hasattr(cfg, 'deltas'):
        return spin_checks(cfg, name)

    op = build_operator(cfg.model_id, cfg.params, **cfg.quantum)
    checks, values = quantum_checks(cfg, name, op)
    if cfg.model_id in MODELS and cfg.families:
        model = build_model(cfg.model_id, **cfg.params)
        checks += symmetry_checks(cfg, name, model)
        checks += gradient_checks(cfg, name, model)
        checks += branch_checks(cfg, name, model)
        checks += rk4_order_checks(cfg, name, model)
        checks += conjugation_checks(cfg, name, model)
        checks += period_checks(cfg, name, model)
        checks += quadrature_checks(cfg, name, model)
        checks += spectrum_checks(cfg, name, model, values)
    return checks


def main(argv=None):
    args = parser.parse_args(argv)
    paths = args.config or sorted(glob.glob('configs/*.toml'))
    if not paths:
        print_error(ConfigError('config', 'no experiment files given and none found under configs/'))
        return 1

    configs = []
    try:
        for path in paths:
            cfg_args = SimpleNamespace(config=path, quiet=args.quiet, tensorboard=args.tensorboard)
            configs.append(get_config(cfg_args, mode='verify'))
    except ConfigError as e:
        print_error(e)
        return 1

    timer.reset()
    timer.start()
    checks = []
    for cfg in configs:
        name = cfg.__class__.__name__
        try:
            with timer.counter(name):
                checks += verify_config(cfg)
        except OrbitraceError as e:
            checks.append(Check(name, 'module error', None, None, False, f'{e.__class__.__name__}: {e.message}'))

    write_json(f'{args.out}/verify_report.json', {'configs': paths, 'checks': [aa.record() for aa in checks],
                                                  'passed': all(aa.passed for aa in checks)})
    if args.tensorboard:
        writer = SummaryWriter('tensorboard_log/verify')
        for i, check in enumerate(checks):
            if isinstance(check.value, (int, float)):
                writer.add_scalar(f'{check.config}/{check.name}', check.value, i)
        writer.close()

    print(make_table(('config', 'check', 'value', 'threshold', 'result', 'note'), [aa.row() for aa in checks],
                     digits=3))
    print('\n' + timer.line())

    failed = [aa for aa in checks if not aa.passed]
    for check in failed:
        print(f'FAILED: {check.config} / {check.name}')
    return 2 if failed else 0


if __name__ == '__main__':
    sys.exit(main())
