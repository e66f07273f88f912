import numpy as np
from dataclasses import dataclass, field
from typing import NamedTuple

from modules.integrator import TimeContour, cyclic_shifts
from modules.quantizer import PAIR_MEMBER, SELF_SYMMETRIC
from modules.quantum_ref import build_h4, eigenvalues
from utils.common_utils import parallel_map
from utils.errors import BlowUp, OrbitraceError, SampleMismatch, Unaligned, UnpairedAsymmetricOrbit

ALIGNED_WITH_M = 'AlignedWithM'
ALIGNED_WITH_IM = 'AlignedWithIM'
DIVERGENT = 'Divergent'

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


class SpinVector(NamedTuple):
    n_x: complex
    n_y: complex
    n_z: complex

    @property
    def array(self):
        return np.array(self, dtype=complex)


@dataclass(frozen=True)
class SpinModel:
    """Two-level system ½[[iδ1, t1], [t1, -iδ1]], its Bloch vector precesses about M = (t1, 0, iδ1)."""
    t1: float = 2.
    delta1: float = 0.

    def __post_init__(self):
        assert self.t1 > 0 and self.delta1 >= 0, f'Need t1 > 0 and δ1 >= 0, got {self.t1}, {self.delta1}.'

    @property
    def M(self):
        return np.array([self.t1, 0., 1j * self.delta1])

    @property
    def omega(self):
        """Principal √(M·M) = √(t1² - δ1²), imaginary above the transition."""
        return np.sqrt(complex(self.t1 ** 2 - self.delta1 ** 2))

    @property
    def period(self):
        return 2 * np.pi / self.omega

    def divergent(self, rel=1e-3):
        return abs(self.delta1 - self.t1) < rel * self.t1

    def axis(self):
        """M / √(M·M), the unit precession axis in the bilinear sense."""
        return self.M / self.omega

    def representative(self, epsilon=0.3):
        return SpinVector(*(self.axis() + np.array([0., epsilon, 0.])))


def analytic_eigenvalues(model):
    half = model.omega / 2
    return complex(half), complex(-half)


def eigen_configuration(model, E):
    """
    Bloch vector ψᵀσψ / ψᵀψ of the H4 eigenvector whose eigenvalue is nearest E. H4 is symmetric, so the bilinear
    product is the pseudo-Hermitian expectation.
    """
    values, vectors = np.linalg.eig(build_h4(model.t1, model.delta1).entries)
    psi = vectors[:, np.argmin(np.abs(values - E))]
    return np.einsum('i,kij,j->k', psi, PAULI, psi) / (psi @ psi)


@dataclass
class SpinTrajectory:
    s: np.ndarray
    t: np.ndarray
    n: np.ndarray
    contour: TimeContour
    model: SpinModel
    extra: dict = field(default_factory=dict)

    def closure_error(self):
        return float(np.linalg.norm(self.n[-1] - self.n[0]))

    def casimir_drift(self):
        casimir = np.einsum('ij,ij->i', self.n, self.n)
        return float(np.abs(casimir - casimir[0]).max())


def _precession(M, n):
    return np.cross(M, n)


def bloch_integrate(model, n0, contour=None, steps=2048, bound=1e6):
    """
    RK4 for ṅ = M × n along a TimeContour. A bare complex number is the straight contour to it, None the natural
    period.
    Raise:
        BlowUp: a component exceeded bound.
    """
    assert steps >= 16, f'At least 16 steps are needed, got {steps}.'
    if model.divergent():
        raise BlowUp('The precession axis is null at the transition.', delta1=model.delta1, t1=model.t1)

    if not isinstance(contour, TimeContour):
        contour = TimeContour(complex(model.period if contour is None else contour))
    times = contour.times(steps)
    M = model.M
    n = np.empty((len(times), 3), dtype=complex)
    n[0] = SpinVector(*n0).array

    for k in range(len(times) - 1):
        dt = times[k + 1] - times[k]
        v = n[k]
        k1 = _precession(M, v)
        k2 = _precession(M, v + 0.5 * dt * k1)
        k3 = _precession(M, v + 0.5 * dt * k2)
        k4 = _precession(M, v + dt * k3)
        n[k + 1] = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.abs(n[k + 1]).max() <= bound:
            raise BlowUp('The Bloch vector diverged.', step=k + 1, t=complex(times[k + 1]), bound=bound)

    return SpinTrajectory(np.linspace(0., 1., len(times)), times, n, contour, model)


def spin_image(trajectory):
    """Image under (n_x, n_y, n_z)(t) -> (n_x*, n_y*, -n_z*)(-t*), sample order reversed."""
    T = trajectory.contour.T
    n = trajectory.n[::-1].conj() * np.array([1., 1., -1.])
    return SpinTrajectory(trajectory.s.copy(), np.conj(T - trajectory.t[::-1]), n, trajectory.contour.conjugate(),
                          trajectory.model, {'image': True})


def spin_distance(a, b):
    if len(a.n) != len(b.n):
        raise SampleMismatch('Trajectories are sampled on different numbers of points.', left=len(a.n), right=len(b.n))
    na, nb = a.n[:-1], b.n[:-1]
    return min(float(np.linalg.norm(na[None] - nb[index], axis=2).max(axis=1).min())
               for index in cyclic_shifts(len(na)))


def classify_spin_orbit(trajectory, candidates=(), tol=1e-4):
    """
    Return:
        (SelfSymmetric, None) or (PairMember, index of the candidate carrying the image).
    """
    image = spin_image(trajectory)
    if spin_distance(trajectory, image) < tol:
        return SELF_SYMMETRIC, None
    for idx, other in enumerate(candidates):
        if spin_distance(other, image) < tol:
            return PAIR_MEMBER, idx
    raise UnpairedAsymmetricOrbit('The spin orbit is neither self-symmetric nor paired.',
                                  delta1=trajectory.model.delta1)


def average_spin(trajectory):
    """Time average over a closed orbit, uniform samples so the periodic trapezoid is the plain mean."""
    return trajectory.n[:-1].mean(axis=0)


def average_spin_alignment(model, trajectory=None, tol=1e-6):
    """
    AlignedWithM if n̄/√(n̄·n̄) is a real multiple of M, AlignedWithIM if an imaginary one, Divergent at the transition
    or when no trajectory could be integrated.
    """
    if trajectory is None or model.divergent():
        return DIVERGENT

    average = average_spin(trajectory)
    square = np.dot(average, average)
    if abs(square) < tol:
        raise Unaligned('The average spin is null.', delta1=model.delta1)
    unit = average / np.sqrt(square)

    M = model.M
    ratio = np.vdot(M, unit) / np.vdot(M, M)
    if np.linalg.norm(unit - ratio * M) > tol * np.linalg.norm(unit):
        raise Unaligned('The average spin is not parallel to M.', delta1=model.delta1,
                        residual=float(np.linalg.norm(unit - ratio * M)))
    if abs(ratio.imag) <= tol * abs(ratio):
        return ALIGNED_WITH_M
    if abs(ratio.real) <= tol * abs(ratio):
        return ALIGNED_WITH_IM
    raise Unaligned('The average spin is a complex multiple of M.', delta1=model.delta1, ratio=complex(ratio))


def sweep_point(t1, delta1, epsilon=0.3, steps=2048, tol=1e-4):
    """One row of the PT sweep: eigenvalues, orbit of the representative spin and its partner, alignment."""
    model = SpinModel(t1, delta1)
    E_plus, E_minus = analytic_eigenvalues(model)
    row = {'delta1': delta1, 'E_plus': E_plus, 'E_minus': E_minus, 'alignment': DIVERGENT, 'orbit_class': DIVERGENT,
           'eig_error': None, 'closure': None, 'casimir_drift': None, 'status': 'ok', 'message': ''}
    if model.divergent():
        return row

    numeric = eigenvalues(build_h4(t1, delta1))
    # nearest match, above the transition the real parts are rounding noise
    row['eig_error'] = float(np.abs(numeric[:, None] - np.array([E_plus, E_minus])[None, :]).min(axis=0).max())
    try:
        trajectory = bloch_integrate(model, model.representative(epsilon), steps=steps)
        # candidate partner: the same offset from the eigen-configuration of E*, run on the conjugate contour
        start = SpinVector(*(eigen_configuration(model, np.conj(E_plus)) + np.array([0., epsilon, 0.])))
        partner = bloch_integrate(model, start, trajectory.contour.conjugate(), steps=steps)
        row['orbit_class'], _ = classify_spin_orbit(trajectory, [partner], tol)
        row['alignment'] = average_spin_alignment(model, trajectory)
        row['closure'] = trajectory.closure_error()
        row['casimir_drift'] = trajectory.casimir_drift()
    except OrbitraceError as e:
        row['status'], row['message'] = e.__class__.__name__, e.message
    return row


def pt_sweep(t1, deltas, epsilon=0.3, steps=2048, tol=1e-4, workers=None, progress=None):
    deltas = [float(aa) for aa in deltas]
    assert deltas == sorted(deltas), 'The δ1 values of a sweep must be sorted.'
    return parallel_map(lambda d: sweep_point(t1, d, epsilon, steps, tol), deltas, workers, progress)
