import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import numpy as np
from dataclasses import fields

from modules.action import OrbitFamily
from modules.models import MODELS, build_model
from modules.quantizer import crossover_energy
from utils.errors import ConfigError, OrbitraceError

os.makedirs('results/', exist_ok=True)
os.makedirs('tensorboard_log/', exist_ok=True)

MODES = ('spectrum', 'orbit', 'spin', 'verify')
ENGINES = ('quantum', 'semiclassical', 'both')
FORMATS = ('csv', 'json')
TOLERANCES = ('newton_tol', 'dedup_tol', 'classify_tol', 'reality_tol', 'phs_tol', 'closure_tol', 'propagator_tol',
              'identity_tol', 'conjugation_tol', 'eig_tol')


class harmonic:
    model_id = 'HO'

    def __init__(self, args):
        self.mode = args.mode
        self.params = {'omega': 1.}
        self.quantum = {'scheme': 'sinc', 'X': 10., 'N': 128}
        # None until get_config: the [[family]] tables, else default_families() of the final params
        self.families = None

        self.engine = 'both'
        self.out = f'results/{self.__class__.__name__}'
        self.format = 'csv'
        self.tensorboard = False

        self.steps = 2048
        self.bound = 1e6
        self.orbit_samples = 128
        self.scan_points = (48, 12)
        self.newton_tol = 1e-10
        self.newton_max_iter = 50
        self.dedup_tol = 1e-6
        self.classify_tol = 1e-4
        self.reality_tol = 1e-8

        # verify
        self.match_levels = 10
        self.phs_tol = 1e-12
        self.closure_tol = 1e-8
        self.conjugation_tol = 1e-8
        self.identity_tol = 1e-10
        self.propagator_tol = 1e-10
        self.propagator_times = [0.3, 1.0, 0.3 + 0.1j, 0.5 - 0.05j, 0.2j]
        self.propagator_grid = None
        self.random_points = 1000
        self.check_energies = 6
        self.seed = 0
        self.eig_tol = 1e-12

        # set from the command line in orbit mode
        self.family = None
        self.n = None
        self.E = None

    def default_families(self):
        return [OrbitFamily('oscillator', 'librational', turning_pair=(0, 1), contour='segment',
                            window=(0.5, 20.5, 0., 0.), n_range=(0, 9))]

    def family_by_label(self, label):
        for family in self.families:
            if family.label == label:
                return family
        raise ConfigError('family', f'no family \'{label}\', expected one of {[aa.label for aa in self.families]}')

    def print_cfg(self):
        print()
        print('-' * 30 + self.__class__.__name__ + '-' * 30)
        for k, v in vars(self).items():
            if k == 'families':
                for family in v:
                    print(f'family: {family.label} ({family.kind}, μ={family.mu}, window={family.window}, '
                          f'n={family.n_range})')
            elif k not in ('mode', 'cfg'):
                print(f'{k}: {v}')
        print()


class skin_effect(harmonic):
    model_id = 'H1'

    def __init__(self, args):
        super().__init__(args)
        self.params = {'gamma': 0.5, 'V0': 1., 'L': 15.}
        self.quantum = {'N': 512}
        self.propagator_grid = {'N': 126}

    def default_families(self):
        """
        Real levels of the |x| well up to the energy where the traversing action turns real, conjugate pairs of the
        two directions of travel around the ring above it.
        """
        model = build_model(self.model_id, **self.params)
        rim = self.params['V0'] * self.params['L'] / 2
        E_c = crossover_energy(model, OrbitFamily('traversing+', 'traversing'), 0.05 * rim, 0.99 * rim, eta=0.02)
        return [OrbitFamily('confined', 'librational', turning_pair=(0, 1), contour='segment',
                            window=(0., E_c, 0., 0.), transition=E_c),
                OrbitFamily('traversing+', 'traversing', direction=1, window=(E_c, 8 * rim, 0.05, 2 * rim),
                            transition=E_c, partner='traversing-'),
                OrbitFamily('traversing-', 'traversing', direction=-1, window=(E_c, 8 * rim, -2 * rim, -0.05),
                            transition=E_c, partner='traversing+')]


def lattice_families(params):
    """
    Band-edge wells below and above the crossover energies ±E_c where the mid-band traversing action turns real,
    and the two mid-band directions of travel between them. The wells sit at the potential extrema, which move
    with p_y.
    """
    model = build_model('H2', **params)
    t0, delta, p_y = params['t0'], params['delta'], params['p_y']
    edge = 2 * abs(t0) + 2 * np.sqrt(t0 ** 2 - delta ** 2)
    mid = OrbitFamily('mid-band+', 'traversing', direction=1, nodes=2048)
    upper = crossover_energy(model, mid, 0.05 * edge, 0.98 * edge, eta=0.02)
    lower = crossover_energy(model, mid, -0.98 * edge, -0.05 * edge, eta=0.02)

    # -2 t0 cos(p_y - Bx) peaks at p_y / B for t0 < 0
    top = p_y / model.B if t0 < 0 else (np.pi + p_y) / model.B
    bottom = top + model.spatial_period / 2
    return [OrbitFamily('band-bottom', 'librational', anchor=bottom, contour='segment',
                        window=(-edge, lower, 0., 0.), transition=lower),
            OrbitFamily('band-top', 'librational', anchor=top, contour='segment',
                        window=(upper, edge, 0., 0.), transition=upper),
            OrbitFamily('mid-band+', 'traversing', direction=1, nodes=2048,
                        window=(lower, upper, 0.005 * edge, 0.4 * edge), transition=(lower, upper),
                        partner='mid-band-'),
            OrbitFamily('mid-band-', 'traversing', direction=-1, nodes=2048,
                        window=(lower, upper, -0.4 * edge, -0.005 * edge), transition=(lower, upper),
                        partner='mid-band+')]


class nonreciprocal_lattice(harmonic):
    model_id = 'H2'

    def __init__(self, args):
        super().__init__(args)
        self.params = {'t0': -1., 'delta': 0.35, 'q': 1, 'L': 32, 'p_y': 0.}
        self.quantum = {}
        # p_y values of the sweep, each one quantized with its own families
        self.py_values = []

    def default_families(self):
        return lattice_families(self.params)


class double_well(harmonic):
    model_id = 'H3'

    def __init__(self, args):
        super().__init__(args)
        self.params = {'g': 0.5, 'a': 2., 'Gamma': 4.}
        self.quantum = {'scheme': 'fd2', 'X': 6., 'N': 1024}
        self.propagator_grid = {'scheme': 'fd2', 'X': 6., 'N': 256}

    def default_families(self):
        """
        The wells at ∓a carry conjugate pairs until the well action turns real, above that energy a single orbit
        spans both wells.
        """
        model = build_model(self.model_id, **self.params)
        g, a, Gamma = self.params['g'], self.params['a'], self.params['Gamma']
        barrier = g * a ** 4
        E_c = crossover_energy(model, OrbitFamily('left-well', 'librational', anchor=-a), 1.05 * barrier,
                               5 * barrier, points=32)
        height = 1.25 * Gamma * a
        return [OrbitFamily('left-well', 'librational', anchor=-a, window=(0., E_c, -height, 0.),
                            transition=E_c, partner='right-well'),
                OrbitFamily('right-well', 'librational', anchor=a, window=(0., E_c, 0., height),
                            transition=E_c, partner='left-well'),
                OrbitFamily('above-barrier', 'librational', turning_pair=(0, 3), contour='segment',
                            window=(E_c, 5 * barrier, 0., 0.), transition=E_c)]


class two_level(harmonic):
    model_id = 'H4'

    def __init__(self, args):
        super().__init__(args)
        self.params = {'t1': 2.}
        self.quantum = {}
        self.deltas = [round(0.1 * aa, 10) for aa in range(41)]
        self.epsilon = 0.3
        # generic point for the closure and Casimir checks
        self.generic_n0 = [0.3, 0.5 + 0.01j, 0.8]

    def default_families(self):
        return []


def _complex(value, key):
    if isinstance(value, list):
        if len(value) != 2 or not all(isinstance(aa, (int, float)) for aa in value):
            raise ConfigError(key, f'a complex number is written [re, im], got {value}')
        return complex(*value)
    if isinstance(value, (int, float)):
        return value
    raise ConfigError(key, f'expected a number, got {value!r}')


def _coerce(key, value, current):
    if isinstance(current, bool) or current is None or isinstance(current, str):
        if isinstance(current, bool) and not isinstance(value, bool):
            raise ConfigError(key, f'expected true or false, got {value!r}')
        if isinstance(current, str) and not isinstance(value, str):
            raise ConfigError(key, f'expected a string, got {value!r}')
        return value
    if isinstance(current, (int, float, complex)):
        value = _complex(value, key)
        return float(value) if isinstance(current, float) and not isinstance(value, complex) else value
    if isinstance(current, (list, tuple)):
        if not isinstance(value, list):
            raise ConfigError(key, f'expected a list, got {value!r}')
        return type(current)(_complex(aa, key) if isinstance(aa, list) else aa for aa in value)
    return value


def _family(table, idx):
    known = {aa.name for aa in fields(OrbitFamily)}
    for k in table:
        if k not in known:
            raise ConfigError(f'family[{idx}].{k}', 'unknown key')
    if 'label' not in table or 'kind' not in table:
        raise ConfigError(f'family[{idx}]', 'a family needs a label and a kind')

    table = dict(table)
    for k in ('window', 'turning_pair', 'transition'):
        if isinstance(table.get(k), list):
            table[k] = tuple(table[k])
    if isinstance(table.get('n_range'), list):
        if len(table['n_range']) != 2 or table['n_range'][1] < table['n_range'][0]:
            raise ConfigError(f'family[{idx}].n_range', f'expected a nonempty [first, last], got {table["n_range"]}')
        table['n_range'] = tuple(table['n_range'])
    elif table.get('n_range', 'auto') != 'auto':
        raise ConfigError(f'family[{idx}].n_range', f'expected "auto" or [first, last], got {table["n_range"]!r}')

    try:
        return OrbitFamily(**table)
    except (AssertionError, TypeError) as e:
        raise ConfigError(f'family[{idx}]', str(e))


def apply_overrides(cfg, data):
    for key, value in data.items():
        if key == 'cfg':
            continue
        elif key == 'params':
            allowed = MODELS[cfg.model_id].param_names if cfg.model_id in MODELS else tuple(cfg.params)
            for k, v in value.items():
                if k not in allowed:
                    raise ConfigError(f'params.{k}', f'unknown parameter, expected one of {list(allowed)}')
                if not isinstance(v, (int, float)) or isinstance(v, bool) or not np.isfinite(v):
                    raise ConfigError(f'params.{k}', f'expected a finite number, got {v!r}')
                cfg.params[k] = v
        elif key == 'quantum':
            for k, v in value.items():
                if k not in ('scheme', 'X', 'N'):
                    raise ConfigError(f'quantum.{k}', 'unknown discretization key')
                cfg.quantum[k] = v
        elif key == 'family':
            cfg.families = [_family(table, idx) for idx, table in enumerate(value)]
        elif hasattr(cfg, key) and key not in ('mode', 'model_id'):
            setattr(cfg, key, _coerce(key, value, getattr(cfg, key)))
        else:
            raise ConfigError(key, 'unknown key')


def validate(cfg):
    for key in TOLERANCES:
        if not getattr(cfg, key) > 0:
            raise ConfigError(key, f'tolerances must be positive, got {getattr(cfg, key)}')
    if cfg.engine not in ENGINES:
        raise ConfigError('engine', f'expected one of {ENGINES}, got {cfg.engine!r}')
    if cfg.format not in FORMATS:
        raise ConfigError('format', f'expected one of {FORMATS}, got {cfg.format!r}')
    if cfg.quantum.get('scheme', 'fd2') not in ('fd2', 'sinc'):
        raise ConfigError('quantum.scheme', f'expected fd2 or sinc, got {cfg.quantum["scheme"]!r}')
    if not (isinstance(cfg.steps, int) and cfg.steps >= 16):
        raise ConfigError('steps', f'at least 16 steps are needed, got {cfg.steps}')
    if cfg.orbit_samples % 2:
        raise ConfigError('orbit_samples', 'the sample count must be even')
    labels = [aa.label for aa in cfg.families]
    if len(set(labels)) != len(labels):
        raise ConfigError('family', f'duplicate family labels in {labels}')
    for family in cfg.families:
        if family.partner is not None and family.partner not in labels:
            raise ConfigError(f'family.{family.label}.partner', f'no family \'{family.partner}\'')
    if any(isinstance(aa, bool) or not isinstance(aa, (int, float)) or not np.isfinite(aa)
           for aa in getattr(cfg, 'py_values', ())):
        raise ConfigError('py_values', f'expected finite numbers, got {cfg.py_values}')
    if hasattr(cfg, 'deltas'):
        if not cfg.deltas:
            raise ConfigError('deltas', 'the δ1 list is empty')
        if list(cfg.deltas) != sorted(cfg.deltas) or min(cfg.deltas) < 0:
            raise ConfigError('deltas', 'the δ1 values must be non negative and sorted')


def load_toml(path):
    try:
        with open(path, 'rb') as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError('config', f'no such file \'{path}\'')
    except tomllib.TOMLDecodeError as e:
        raise ConfigError('config', f'malformed TOML: {e}')


def get_config(args, mode):
    assert mode in MODES, f'Unknown mode {mode}.'
    args.mode = mode

    data = load_toml(args.config) if getattr(args, 'config', None) else {}
    name = data.get('cfg', getattr(args, 'cfg', None) or 'harmonic')
    if name not in CONFIGS:
        raise ConfigError('cfg', f'unknown experiment \'{name}\', expected one of {list(CONFIGS)}')

    cfg = CONFIGS[name](args)
    apply_overrides(cfg, data)
    if cfg.families is None:
        try:
            cfg.families = cfg.default_families()
        except OrbitraceError as e:
            raise ConfigError('params', f'no default families for these parameters: {e.message}')

    for key in ('engine', 'out', 'format', 'family', 'n', 'E'):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, 'tensorboard', False):
        cfg.tensorboard = True

    validate(cfg)
    if mode == 'orbit':
        if cfg.family is None:
            raise ConfigError('family', 'the orbit command needs --family')
        cfg.family_by_label(cfg.family)
        if (cfg.n is None) == (cfg.E is None):
            raise ConfigError('n', 'give exactly one of --n and --E')

    os.makedirs(cfg.out, exist_ok=True)
    if not getattr(args, 'quiet', False):
        cfg.print_cfg()

    return cfg


CONFIGS = {aa.__name__: aa for aa in (harmonic, skin_effect, nonreciprocal_lattice, double_well, two_level)}
