import numpy as np
import pytest
import torch
from hypothesis import given, strategies as st

from utils.linalg import balance, eigen_witness, eigvals, givens, hessenberg
from utils.errors import NoConvergenceQR


def random_matrix(seed, n):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def assert_same_spectrum(values, expected, tol):
    expected = np.asarray(expected, dtype=complex)
    assert len(values) == len(expected)
    scale = 1 + np.abs(expected).max()
    for v in values:
        assert np.abs(expected - v).min() < tol * scale
    for v in expected:
        assert np.abs(values - v).min() < tol * scale


@given(seed=st.integers(0, 2 ** 31 - 1), n=st.integers(1, 12))
def test_eigvals_match_torch(seed, n):
    a = random_matrix(seed, n)
    expected = torch.linalg.eigvals(torch.from_numpy(a)).numpy()
    assert_same_spectrum(eigvals(a), expected, 1e-9)


def test_eigvals_ordering():
    a = np.diag([3., 1. + 1j, 1. - 1j, -2.])
    values = eigvals(a)
    np.testing.assert_allclose(values, [-2., 1 - 1j, 1 + 1j, 3.], atol=1e-14)


def test_eigvals_two_by_two():
    values = sorted(eigvals([[0., 1.], [-1., 0.]]), key=lambda z: z.imag)
    np.testing.assert_allclose(values, [-1j, 1j], atol=1e-14)


def test_eigvals_non_normal():
    a = np.triu(random_matrix(7, 6))
    np.testing.assert_allclose(eigvals(a), np.sort_complex(np.diag(a)), atol=1e-10)


def test_hessenberg_similarity():
    a = random_matrix(3, 8)
    h = hessenberg(a)
    assert np.abs(np.tril(h, -2)).max() == 0
    # unitary similarity keeps the trace and the Frobenius norm
    assert abs(np.trace(h) - np.trace(a)) < 1e-12
    assert abs(np.linalg.norm(h) - np.linalg.norm(a)) < 1e-12


def test_balance_keeps_spectrum():
    a = random_matrix(5, 6) * np.logspace(-4, 4, 6)[None, :]
    expected = torch.linalg.eigvals(torch.from_numpy(a)).numpy()
    assert_same_spectrum(eigvals(balance(a)), expected, 1e-9)


finite = st.complex_numbers(max_magnitude=10., allow_nan=False, allow_infinity=False)


@given(a=finite, b=finite)
def test_givens_zeroes_second(a, b):
    c, s = givens(a, b)
    assert abs(-np.conj(s) * a + c * b) < 1e-12 * (1 + abs(a) + abs(b))
    assert abs(c ** 2 + abs(s) ** 2 - 1) < 1e-12


def test_qr_iteration_cap():
    with pytest.raises(NoConvergenceQR):
        eigvals([[1., 2.], [3., 4.]], max_iter=0)


def test_eigen_witness():
    a = random_matrix(11, 10)
    value = eigvals(a)[4]
    assert eigen_witness(a, value) < 1e-10
    assert eigen_witness(a, value + 0.5) > 1e-4
