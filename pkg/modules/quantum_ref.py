import numpy as np
import torch
from dataclasses import dataclass, field

from utils.linalg import eigvals, eigen_witness

MAX_DIM = 4096
MAX_PROPAGATOR_DIM = 256


@dataclass
class QuantumOperator:
    """
    A finite matrix H with its pseudo-Hermiticity operator η. In transpose form the symmetry reads
    η Hᵀ η⁻¹ = H†, otherwise η H η⁻¹ = H†.
    """
    entries: np.ndarray
    eta: np.ndarray
    model_id: str
    transpose: bool = True
    discretization: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        self.eta = np.asarray(self.eta, dtype=complex)
        assert self.entries.ndim == 2 and self.entries.shape[0] == self.entries.shape[1], 'H must be square.'
        assert self.eta.shape == self.entries.shape, 'η and H must have the same shape.'
        assert np.abs(self.eta - self.eta.conj().T).max() < 1e-12, 'η must be Hermitian.'

    @property
    def dim(self):
        return self.entries.shape[0]

    def eta_inverse(self):
        return np.linalg.inv(self.eta)

    def eta_condition(self):
        return float(np.linalg.cond(self.eta))

    def mapped(self, matrix):
        """η Mᵀ η⁻¹ in transpose form, η M η⁻¹ otherwise."""
        matrix = matrix.T if self.transpose else matrix
        return self.eta @ matrix @ self.eta_inverse()


def _grid(X, N):
    """N interior points of [-X, X] with Dirichlet ends, symmetric about zero."""
    h = 2 * X / (N + 1)
    return -X + h * np.arange(1, N + 1), h


def kinetic(N, h, scheme):
    """Matrix of p² = -d²/dx² on a uniform grid."""
    if scheme == 'fd2':
        return (np.diag(np.full(N, 2.)) - np.diag(np.ones(N - 1), 1) - np.diag(np.ones(N - 1), -1)) / h ** 2
    if scheme == 'sinc':
        diff = np.arange(N)[:, None] - np.arange(N)[None, :]
        with np.errstate(divide='ignore'):
            off = 2. * (-1.) ** diff / np.where(diff == 0, 1, diff) ** 2
        return np.where(diff == 0, np.pi ** 2 / 3, off) / h ** 2
    raise AssertionError(f'Unknown discretization scheme \'{scheme}\', expected \'fd2\' or \'sinc\'.')


def parity(N):
    return np.eye(N)[::-1]


def build_ho(omega=1., X=10., N=128, scheme='sinc'):
    """p² + ω²x² on a grid, η = I."""
    assert omega > 0 and X > 0 and N >= 16, 'Invalid harmonic grid.'
    x, h = _grid(X, N)
    H = kinetic(N, h, scheme) + np.diag(omega ** 2 * x ** 2)
    return QuantumOperator(H, np.eye(N), 'HO', True, {'scheme': scheme, 'X': X, 'N': N, 'h': h})


def potential_coefficients(L, j):
    """Plane-wave matrix elements of |x| on [-L/2, L/2): c_0 = L/4, c_j = L((-1)^j - 1) / (2π²j²)."""
    j = np.asarray(j)
    safe = np.where(j == 0, 1, j)
    return np.where(j == 0, L / 4, L * ((-1.) ** safe - 1) / (2 * np.pi ** 2 * safe ** 2))


def build_h1(gamma=0.5, V0=1., L=15., N=512):
    """
    (p + iγ)² + V0|x| on the ring of length L in the plane-wave basis m = -N/2 .. N/2.
    η is the reflection m <-> -m.
    """
    assert N % 2 == 0 and N >= 16, f'N must be even and at least 16, got {N}.'
    m = np.arange(-N // 2, N // 2 + 1)
    k = 2 * np.pi * m / L
    H = np.diag((k + 1j * gamma) ** 2) + V0 * potential_coefficients(L, m[:, None] - m[None, :])
    return QuantumOperator(H, parity(len(m)), 'H1', True, {'basis': 'plane-wave', 'N': N, 'L': L})


def build_h2(t0=-1., delta=0.35, q=1, L=32, p_y=0.):
    """
    Periodic chain of L sites with hoppings -(t0 ± δ) and on-site -2t0 cos(Bj - p_y), B = 2πq/L.
    The matrix is real, η = I.
    """
    L = int(L)
    assert L >= 8, f'The lattice needs at least 8 sites, got {L}.'
    B = 2 * np.pi * q / L
    H = np.diag(-2 * t0 * np.cos(B * np.arange(L) - p_y)).astype(complex)
    right = np.roll(np.eye(L), 1, axis=1)  # H[j, j+1]
    H += -(t0 + delta) * right - (t0 - delta) * right.T
    return QuantumOperator(H, np.eye(L), 'H2', True, {'sites': L, 'B': B})


def build_h3(g=0.5, a=2., Gamma=4., X=6., N=1024, scheme='fd2'):
    """p² + g(x² - a²)² + iΓx on a grid of [-X, X], η = parity."""
    assert X > 2 * a, f'The box half width {X} must exceed 2a = {2 * a}.'
    assert N >= 256, f'At least 256 grid points are needed, got {N}.'
    x, h = _grid(X, N)
    H = kinetic(N, h, scheme) + np.diag(g * (x ** 2 - a ** 2) ** 2 + 1j * Gamma * x)
    return QuantumOperator(H, parity(N), 'H3', True, {'scheme': scheme, 'X': X, 'N': N, 'h': h})


def build_h4(t1=2., delta1=0.):
    """½[[iδ1, t1], [t1, -iδ1]] with η = σx."""
    H = 0.5 * np.array([[1j * delta1, t1], [t1, -1j * delta1]])
    return QuantumOperator(H, np.array([[0., 1.], [1., 0.]]), 'H4', True, {'dim': 2})


def build_operator(model_id, params, **discretization):
    builders = {'HO': build_ho, 'H1': build_h1, 'H2': build_h2, 'H3': build_h3, 'H4': build_h4}
    assert model_id in builders, f'No quantum operator for model \'{model_id}\'.'
    return builders[model_id](**params, **discretization)


def eigenvalues(op, **kwargs):
    assert op.dim <= MAX_DIM, f'Dense eigenvalues are limited to dimension {MAX_DIM}, got {op.dim}.'
    return eigvals(op.entries, **kwargs)


def witness(op, value):
    return eigen_witness(op.entries, value)


def phs_residual(op):
    H = op.entries
    return float(np.linalg.norm(op.mapped(H) - H.conj().T) / np.linalg.norm(H))


def propagator(op, t):
    """U(t) = exp(-iHt) for complex t."""
    H = torch.from_numpy(op.entries)
    return torch.linalg.matrix_exp(-1j * complex(t) * H).numpy()


def propagator_residual(op, t):
    """‖η U(t)ᵀ η⁻¹ - U(-t*)†‖ / ‖U(t)‖ in Frobenius norm, U(t) untransposed when η acts without transpose."""
    assert op.dim <= MAX_PROPAGATOR_DIM, f'Propagators are limited to dimension {MAX_PROPAGATOR_DIM}, got {op.dim}.'
    U = propagator(op, t)
    reverse = propagator(op, -np.conj(t))
    return float(np.linalg.norm(op.mapped(U) - reverse.conj().T) / np.linalg.norm(U))


def conjugation_closure(values):
    """
    max over λ of the distance from λ* to the nearest value relative to 1 + |λ|, zero for a spectrum closed under
    conjugation.
    """
    values = np.asarray(values, dtype=complex)
    if not len(values):
        return 0.
    distance = np.abs(values[:, None] - values.conj()[None, :]).min(axis=1)
    return float((distance / (1 + np.abs(values))).max())


def quantum_trace(op, E):
    """Tr (E - H)⁻¹."""
    shifted = complex(E) * np.eye(op.dim) - op.entries
    return complex(np.trace(np.linalg.solve(shifted, np.eye(op.dim))))


def match_spectra(records, values):
    """
    Greedy nearest neighbour matching of converged semiclassical levels to quantum eigenvalues, closest pairs first,
    ties broken by the smaller |E|. Matched records get E_quantum_match and the relative match_error.
    Return:
        the quantum eigenvalues left unmatched.
    """
    values = np.asarray(values, dtype=complex)
    levels = [aa for aa in records if aa.converged]
    if not levels or not len(values):
        return list(values)

    energies = np.array([aa.E_semiclassical for aa in levels])
    distance = np.abs(energies[:, None] - values[None, :])
    order = sorted(np.ndindex(distance.shape), key=lambda ij: (distance[ij], abs(energies[ij[0]])))

    used_levels, used_values = set(), set()
    for i, j in order:
        if i in used_levels or j in used_values:
            continue
        used_levels.add(i)
        used_values.add(j)
        levels[i].E_quantum_match = complex(values[j])
        levels[i].match_error = float(distance[i, j] / (1 + abs(energies[i])))
    return [complex(values[j]) for j in range(len(values)) if j not in used_values]
