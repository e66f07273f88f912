import numpy as np
import pytest
import torch

from modules.quantizer import SpectrumRecord
from modules.quantum_ref import (QuantumOperator, build_h1, build_h2, build_h3, build_h4, build_ho, build_operator,
                                 conjugation_closure, eigenvalues, kinetic, match_spectra, phs_residual,
                                 potential_coefficients, propagator, propagator_residual, quantum_trace, witness)

TIMES = [0., 0.3, 1.0, 0.3 + 0.1j, 0.5 - 0.05j, 0.2j]


def same_set(values, expected, tol):
    """Every value has a partner in the other set within tol relative to 1 + |value|."""
    values, expected = np.asarray(values, dtype=complex), np.asarray(expected, dtype=complex)
    assert len(values) == len(expected)
    for v in values:
        assert np.abs(expected - v).min() < tol * (1 + abs(v))
    for v in expected:
        assert np.abs(values - v).min() < tol * (1 + abs(v))


def test_oscillator_grid_levels():
    values = eigenvalues(build_ho(omega=1., X=10., N=128, scheme='sinc'))
    np.testing.assert_allclose(values[:10].real, 2 * np.arange(10) + 1, atol=1e-4)
    assert np.abs(values.imag).max() < 1e-8


def test_kinetic_schemes_agree_on_smooth_states():
    x = np.linspace(-6, 6, 201)[1:-1]
    h = x[1] - x[0]
    psi = np.exp(-x ** 2 / 2)
    exact = (1 - x ** 2) * psi
    for scheme, tol in (('fd2', 5e-3), ('sinc', 1e-4)):
        np.testing.assert_allclose(kinetic(len(x), h, scheme) @ psi, exact, atol=tol)
    with pytest.raises(AssertionError):
        kinetic(10, 0.1, 'spectral')


@pytest.mark.parametrize('op', [build_h1(N=64), build_h2(), build_h2(p_y=0.3), build_h3(N=256), build_h4(2., 1.),
                                build_h4(2., 3.)], ids=['H1', 'H2', 'H2-py', 'H3', 'H4-below', 'H4-above'])
def test_pseudo_hermiticity(op):
    assert phs_residual(op) < 1e-12


@pytest.mark.parametrize('op', [build_h2(), build_h3(X=6., N=256)], ids=['H2', 'H3'])
def test_spectrum_closed_under_conjugation(op):
    assert conjugation_closure(eigenvalues(op)) < 1e-8


def test_free_ring_spectrum():
    # q = 0: plane waves with E = -2t0 cos k - 2iδ sin k - 2t0 cos p_y
    t0, delta, L, p_y = -1., 0.35, 32, 0.4
    k = 2 * np.pi * np.arange(L) / L
    expected = -2 * t0 * np.cos(k) - 2j * delta * np.sin(k) - 2 * t0 * np.cos(p_y)
    same_set(eigenvalues(build_h2(t0, delta, 0, L, p_y)), expected, 1e-10)


def test_flat_skin_spectrum():
    # V0 = 0: (k + iγ)² for k = 2πm/L
    m = np.arange(-16, 17)
    same_set(eigenvalues(build_h1(gamma=0.5, V0=0., L=15., N=32)), (2 * np.pi * m / 15 + 0.5j) ** 2, 1e-10)


def test_ring_potential_coefficients():
    # |x| on [-L/2, L/2) has mean L/4 and no even harmonics
    assert potential_coefficients(15., 0) == pytest.approx(15 / 4)
    assert potential_coefficients(15., 2) == 0
    assert potential_coefficients(15., 3) == pytest.approx(-15 / (np.pi ** 2 * 9))


@pytest.mark.parametrize('delta1', [0., 1., 1.9, 2.5, 4.])
def test_two_level_eigenvalues(delta1):
    expected = 0.5 * np.sqrt(complex(4. - delta1 ** 2))
    same_set(eigenvalues(build_h4(2., delta1)), [expected, -expected], 1e-12)


def test_eigenvalues_against_torch():
    op = build_h3(X=6., N=256)
    expected = torch.linalg.eigvals(torch.from_numpy(op.entries)).numpy()
    same_set(eigenvalues(op), expected, 1e-8)


def test_propagator():
    op = build_h4(2., 1.)
    np.testing.assert_allclose(propagator(op, 0.), np.eye(2), atol=1e-15)
    U = propagator(op, 0.7)
    np.testing.assert_allclose(propagator(op, -0.7) @ U, np.eye(2), atol=1e-12)


@pytest.mark.parametrize('op', [build_h3(X=6., N=256), build_h1(N=126), build_h2(), build_h4(2., 3.)],
                         ids=['H3', 'H1', 'H2', 'H4'])
def test_propagator_identity(op):
    assert max(propagator_residual(op, t) for t in TIMES) < 1e-10


def test_propagator_dimension_cap():
    with pytest.raises(AssertionError):
        propagator_residual(build_ho(N=300), 0.1)


def test_eta_must_be_hermitian():
    with pytest.raises(AssertionError):
        QuantumOperator(np.eye(2), np.array([[1., 1.], [0., 1.]]), 'H4')


def test_build_operator():
    op = build_operator('H3', {'g': 0.5, 'a': 2., 'Gamma': 4.}, scheme='fd2', X=6., N=256)
    assert op.dim == 256 and op.discretization['scheme'] == 'fd2'
    with pytest.raises(AssertionError):
        build_operator('H9', {})
    with pytest.raises(AssertionError):
        build_h3(X=3.)
    with pytest.raises(AssertionError):
        build_h3(N=128)


def test_quantum_trace_is_resolvent_sum():
    op = build_h2()
    values = eigenvalues(op)
    E = 0.3 + 0.2j
    assert quantum_trace(op, E) == pytest.approx(np.sum(1 / (E - values)), abs=1e-9)


def test_witness():
    op = build_h2()
    value = eigenvalues(op)[5]
    assert witness(op, value) < 1e-10


def test_match_spectra():
    records = [SpectrumRecord('a', 0, E_semiclassical=1. + 0j), SpectrumRecord('a', 1, E_semiclassical=3. + 0j),
               SpectrumRecord('a', 2, status='NoConvergence')]
    unmatched = match_spectra(records, [1.001, 2.9, 10.])
    assert unmatched == [10.]
    assert records[0].E_quantum_match == pytest.approx(1.001)
    assert records[0].match_error == pytest.approx(0.001 / 2)
    assert records[1].E_quantum_match == pytest.approx(2.9)
    assert records[2].E_quantum_match is None


def test_match_spectra_prefers_closest_pair():
    records = [SpectrumRecord('a', 0, E_semiclassical=1. + 0j), SpectrumRecord('a', 1, E_semiclassical=1.2 + 0j)]
    unmatched = match_spectra(records, [1.15])
    assert records[1].E_quantum_match == pytest.approx(1.15)
    assert records[0].E_quantum_match is None
    assert unmatched == []


def test_conjugation_closure():
    assert conjugation_closure([1 + 1j, 1 - 1j, 2.]) == 0.
    assert conjugation_closure([1 + 1j, 2.]) > 0.5
