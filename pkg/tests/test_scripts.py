import json
from pathlib import Path

import numpy as np
import pytest

import orbit
import spectrum
import spin
import verify
from utils.output_utils import read_csv, read_json

CONFIG_DIR = Path(__file__).resolve().parents[1] / 'configs'

HARMONIC = '''cfg = "harmonic"
[[family]]
label = "oscillator"
kind = "librational"
mu = {mu}
turning_pair = [0, 1]
contour = "segment"
window = [0.5, 20.5, 0.0, 0.0]
n_range = [0, 9]
'''

TWO_LEVEL = '''cfg = "two_level"
deltas = {deltas}
[params]
t1 = 2.0
'''


@pytest.fixture
def harmonic_toml(workdir):
    path = workdir / 'harmonic.toml'
    path.write_text(HARMONIC.format(mu=0.5))
    return str(path)


def two_level_toml(workdir, deltas):
    path = workdir / 'two_level.toml'
    path.write_text(TWO_LEVEL.format(deltas=json.dumps(deltas)))
    return str(path)


def last_json_line(capsys):
    lines = [aa for aa in capsys.readouterr().out.splitlines() if aa.startswith('{')]
    return json.loads(lines[-1])


def test_spectrum_both_engines(workdir, harmonic_toml):
    out = workdir / 'out'
    assert spectrum.main(['--config', harmonic_toml, '--out', str(out), '--quiet']) == 0

    comment, rows = read_csv(out / 'spectrum_semiclassical.csv')
    assert 'harmonic' in comment
    assert [int(aa['n']) for aa in rows] == list(range(10))
    np.testing.assert_allclose([float(aa['E_re']) for aa in rows], 2 * np.arange(10) + 1, atol=1e-10)
    assert {aa['orbit_class'] for aa in rows} == {'SelfSymmetric'}

    _, quantum = read_csv(out / 'spectrum_quantum.csv')
    assert len(quantum) == 128

    report = read_json(out / 'match_report.json')
    assert report['summary']['dichotomy'] == 'pass'
    assert report['summary']['matched'] == 10
    assert report['summary']['max_match_error'] < 1e-4


def test_spectrum_is_deterministic(workdir, harmonic_toml):
    for name in ('a', 'b'):
        assert spectrum.main(['--config', harmonic_toml, '--out', str(workdir / name), '--engine', 'semiclassical',
                              '--quiet']) == 0
    first = (workdir / 'a' / 'spectrum_semiclassical.csv').read_bytes()
    assert first == (workdir / 'b' / 'spectrum_semiclassical.csv').read_bytes()


def test_spectrum_json_format(workdir, harmonic_toml):
    out = workdir / 'out'
    assert spectrum.main(['--config', harmonic_toml, '--out', str(out), '--engine', 'quantum', '--format', 'json',
                          '--quiet']) == 0
    table = read_json(out / 'spectrum_quantum.json')
    assert len(table['rows']) == 128
    assert table['rows'][0]['E_re'] == pytest.approx(1., abs=1e-4)


def test_spectrum_rejects_bad_config(workdir, capsys):
    path = workdir / 'bad.toml'
    path.write_text('cfg = "harmonic"\nnewton_tolerance = 1e-9\n')
    assert spectrum.main(['--config', str(path), '--quiet']) == 1
    error = last_json_line(capsys)
    assert error['error'] == 'ConfigError' and error['key'] == 'newton_tolerance'


def test_orbit_of_a_level(workdir, harmonic_toml):
    out = workdir / 'out'
    assert orbit.main(['--config', harmonic_toml, '--family', 'oscillator', '--n', '0', '--out', str(out), '--ode',
                       '--quiet']) == 0
    report = read_json(out / 'orbit_oscillator_n0.json')
    assert report['distance'] < 1e-10 and report['self_symmetric']
    assert report['energy'] == pytest.approx([1., 0.], abs=1e-10)
    assert report['ode']['closure'] < 1e-6

    _, rows = read_csv(out / 'orbit_oscillator_n0.csv')
    radius = [float(aa['x_re']) ** 2 + float(aa['p_re']) ** 2 for aa in rows]
    np.testing.assert_allclose(radius, 1., atol=1e-9)
    assert (out / 'orbit_oscillator_n0_image.csv').exists()


def test_orbit_at_an_energy(workdir, harmonic_toml):
    out = workdir / 'out'
    assert orbit.main(['--config', harmonic_toml, '--family', 'oscillator', '--E', '2+0.5j', '--out', str(out),
                       '--quiet']) == 0
    report = read_json(out / 'orbit_oscillator_E.json')
    assert report['action'] == pytest.approx([2 * np.pi, 0.5 * np.pi], abs=1e-9)


def test_orbit_needs_a_family(workdir, harmonic_toml, capsys):
    assert orbit.main(['--config', harmonic_toml, '--n', '0', '--quiet']) == 1
    assert last_json_line(capsys)['key'] == 'family'


def test_spin_sweep(workdir):
    out = workdir / 'out'
    assert spin.main(['--config', two_level_toml(workdir, [0.0, 1.0, 2.0, 3.0]), '--out', str(out), '--quiet']) == 0
    _, rows = read_csv(out / 'pt_sweep.csv')
    assert [aa['alignment'] for aa in rows] == ['AlignedWithM', 'AlignedWithM', 'Divergent', 'AlignedWithIM']
    assert float(rows[3]['Ep_im']) == pytest.approx(np.sqrt(5) / 2)
    summary = read_json(out / 'pt_sweep_summary.json')
    assert summary['divergent'] == [2.0]
    assert (out / 'spin_delta0.csv').exists() and (out / 'spin_delta3_image.csv').exists()


def test_spin_rejects_empty_sweep(workdir, capsys):
    assert spin.main(['--config', two_level_toml(workdir, []), '--quiet']) == 1
    assert last_json_line(capsys)['key'] == 'deltas'


def test_spin_needs_two_level(workdir, harmonic_toml, capsys):
    assert spin.main(['--config', harmonic_toml, '--quiet']) == 1
    assert last_json_line(capsys)['key'] == 'cfg'


def test_verify_passes(workdir, harmonic_toml):
    out = workdir / 'verify'
    assert verify.main(['--config', harmonic_toml, two_level_toml(workdir, [1.0, 2.0, 3.0]), '--out', str(out),
                        '--quiet']) == 0
    report = read_json(out / 'verify_report.json')
    assert report['passed']
    assert {aa['config'] for aa in report['checks']} == {'harmonic', 'two_level'}


def test_verify_flags_wrong_index(workdir):
    path = workdir / 'shifted.toml'
    path.write_text(HARMONIC.format(mu=0.3))
    out = workdir / 'verify'
    assert verify.main(['--config', str(path), '--out', str(out), '--quiet']) == 2
    failed = [aa['check'] for aa in read_json(out / 'verify_report.json')['checks'] if aa['result'] == 'FAIL']
    assert any(aa.startswith('exact oscillator levels') for aa in failed)


def test_verify_reports_maslov_shift(workdir):
    path = workdir / 'shifted.toml'
    path.write_text(HARMONIC.format(mu=0.3))
    out = workdir / 'verify'
    verify.main(['--config', str(path), '--out', str(out), '--quiet'])
    match = next(aa for aa in read_json(out / 'verify_report.json')['checks']
                 if aa['check'].startswith('quantum match'))
    # a fifth of the index off is too far to be a localized deviation
    assert match['result'] == 'FAIL' and 'Δμ=0.2' in match['note']


def test_verify_shipped_configs(workdir):
    out = workdir / 'verify'
    paths = [str(aa) for aa in sorted(CONFIG_DIR.glob('*.toml'))]
    assert verify.main(['--config', *paths, '--out', str(out), '--quiet']) == 0
    report = read_json(out / 'verify_report.json')
    names = {aa['check'].split(' [')[0] for aa in report['checks']}
    for check in ('gradient vs central differences', 'momentum branch residual', 'RK4 order', 'node doubling',
                  'ODE action cross-check', 'dW/dE = T', 'contour independence'):
        assert check in names
    skin = [aa for aa in report['checks'] if aa['config'] == 'skin_effect' and aa['check'].startswith('quantum')]
    assert {aa['result'] for aa in skin} <= {'pass', 'μ-localized'}


def test_lattice_py_sweep(workdir):
    path = workdir / 'lattice.toml'
    path.write_text('cfg = "nonreciprocal_lattice"\npy_values = [0.0, 0.3]\n')
    out = workdir / 'out'
    assert spectrum.main(['--config', str(path), '--engine', 'semiclassical', '--out', str(out), '--quiet']) == 0
    _, rows = read_csv(out / 'py_sweep.csv')
    assert {float(aa['p_y']) for aa in rows} == {0.0, 0.3}

    # p_y only translates the potential, the band-top levels stay put
    top = {}
    for row in rows:
        if row['family'] == 'band-top' and row['status'] == 'ok':
            top.setdefault(int(row['n']), []).append(float(row['E_re']))
    assert top[0][0] == pytest.approx(3.685785, abs=1e-5)
    for energies in top.values():
        assert len(energies) == 2 and energies[0] == pytest.approx(energies[1], abs=1e-8)
