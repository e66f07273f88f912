from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from config import CONFIGS, get_config
from utils.errors import ConfigError, RootFindingFailed

CONFIG_DIR = Path(__file__).resolve().parents[1] / 'configs'


def load(path=None, mode='spectrum', **kwargs):
    return get_config(SimpleNamespace(config=None if path is None else str(path), quiet=True, **kwargs), mode)


def write(tmp_path, text):
    path = tmp_path / 'experiment.toml'
    path.write_text(text)
    return path


@pytest.mark.parametrize('path', sorted(CONFIG_DIR.glob('*.toml')), ids=lambda p: p.stem)
def test_shipped_configs_load(workdir, path):
    cfg = load(path, mode='verify')
    assert cfg.__class__.__name__ == path.stem
    assert cfg.__class__ in CONFIGS.values()


def test_default_is_harmonic(workdir):
    cfg = load()
    assert cfg.model_id == 'HO'
    assert [aa.label for aa in cfg.families] == ['oscillator']


def test_overrides(workdir):
    path = write(workdir, 'cfg = "skin_effect"\nnewton_tol = 1e-9\n[params]\ngamma = 0.25\n[quantum]\nN = 64\n')
    cfg = load(path, engine='quantum', out=str(workdir / 'out'))
    assert cfg.params['gamma'] == 0.25 and cfg.params['V0'] == 1.
    assert cfg.quantum['N'] == 64
    assert cfg.newton_tol == 1e-9
    assert cfg.engine == 'quantum'
    assert (workdir / 'out').is_dir()


def test_families_from_tables(workdir):
    path = write(workdir, 'cfg = "harmonic"\n[[family]]\nlabel = "shifted"\nkind = "librational"\nmu = 0.3\n'
                          'turning_pair = [0, 1]\nwindow = [0.5, 10.0, 0.0, 0.0]\nn_range = [0, 3]\n')
    family = load(path).family_by_label('shifted')
    assert family.mu == 0.3 and family.window == (0.5, 10., 0., 0.) and family.n_range == (0, 3)


@pytest.mark.parametrize('text, key', [('colour = "red"\n', 'colour'),
                                       ('[params]\nbeta = 1.0\n', 'params.beta'),
                                       ('[params]\nomega = "fast"\n', 'params.omega'),
                                       ('[quantum]\nM = 12\n', 'quantum.M'),
                                       ('[[family]]\nlabel = "a"\nkind = "librational"\nspin = 1\n', 'family[0].spin'),
                                       ('[[family]]\nlabel = "a"\nkind = "spiral"\nturning_pair = [0, 1]\n',
                                        'family[0]'),
                                       ('newton_tol = -1.0\n', 'newton_tol'),
                                       ('engine = "magic"\n', 'engine'),
                                       ('orbit_samples = 255\n', 'orbit_samples'),
                                       ('cfg = "lattice"\n', 'cfg'),
                                       ('cfg = "two_level"\ndeltas = []\n', 'deltas'),
                                       ('cfg = "two_level"\ndeltas = [1.0, 0.5]\n', 'deltas'),
                                       ('cfg = "nonreciprocal_lattice"\npy_values = [0.0, true]\n', 'py_values')])
def test_invalid_configs(workdir, text, key):
    with pytest.raises(ConfigError) as error:
        load(write(workdir, text))
    assert error.value.diagnostics['key'] == key


def test_malformed_toml(workdir):
    with pytest.raises(ConfigError) as error:
        load(write(workdir, 'cfg = \n'))
    assert error.value.diagnostics['key'] == 'config'
    with pytest.raises(ConfigError):
        load(workdir / 'missing.toml')


def test_orbit_mode_selection(workdir):
    with pytest.raises(ConfigError):
        load(mode='orbit', n=0)
    with pytest.raises(ConfigError):
        load(mode='orbit', family='oscillator')
    with pytest.raises(ConfigError):
        load(mode='orbit', family='oscillator', n=0, E=1.)
    with pytest.raises(ConfigError):
        load(mode='orbit', family='vibrating', n=0)
    cfg = load(mode='orbit', family='oscillator', n=2)
    assert cfg.n == 2


def test_complex_values(workdir):
    path = write(workdir, 'propagator_times = [0.5, [0.3, 0.1]]\n')
    assert load(path).propagator_times == [0.5, 0.3 + 0.1j]


def test_skin_families_follow_the_crossover(workdir):
    families = {aa.label: aa for aa in load(CONFIG_DIR / 'skin_effect.toml').families}
    E_c = families['confined'].window[1]
    assert E_c == pytest.approx(7.5 - (3 * 0.5 * 15 / 4) ** (2 / 3), abs=1e-3)
    assert families['traversing+'].window[0] == E_c and families['traversing+'].partner == 'traversing-'
    assert all(aa.match_tol == 0.02 for aa in families.values())


def test_lattice_families_follow_p_y(workdir):
    path = write(workdir, 'cfg = "nonreciprocal_lattice"\n[params]\np_y = 0.6\n')
    families = {aa.label: aa for aa in load(path).families}
    B = 2 * np.pi / 32
    assert families['band-top'].anchor == pytest.approx(0.6 / B)
    assert families['band-bottom'].anchor == pytest.approx(0.6 / B + 16)
    lower, upper = families['mid-band+'].transition
    assert families['band-bottom'].window[1] == lower and families['band-top'].window[0] == upper
    assert families['mid-band+'].offset == 0 and families['mid-band+'].nodes == 2048


def test_tables_replace_default_families(workdir):
    path = write(workdir, 'cfg = "double_well"\n[[family]]\nlabel = "left"\nkind = "librational"\nanchor = -2.0\n'
                          'window = [0.0, 16.0, -10.0, 0.0]\n')
    assert [aa.label for aa in load(path).families] == ['left']


def test_missing_default_families(workdir, monkeypatch):
    def fail(self):
        raise RootFindingFailed('Im W keeps its sign on the scan.')

    monkeypatch.setattr(CONFIGS['double_well'], 'default_families', fail)
    with pytest.raises(ConfigError) as error:
        load(CONFIG_DIR / 'double_well.toml')
    assert error.value.diagnostics['key'] == 'params'
