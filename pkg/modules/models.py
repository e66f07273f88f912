import numpy as np
from typing import NamedTuple

from utils.errors import DegenerateBranch, RootFindingFailed


class PhasePoint(NamedTuple):
    x: complex
    p: complex


class SymmetryMap(NamedTuple):
    """
    The S_η map. coord_map is the affine map (x, p) -> (x_scale * x + x_shift, p_scale * p + p_shift) that appears
    on the left side of H(x_η, p_η) = H*(x*, p*), the image of a phase point applies it to the conjugated point.
    time_sign is -1 when the η operation involves a transpose (the partner orbit runs backwards in time).
    """
    x_scale: float = 1.
    x_shift: complex = 0j
    p_scale: float = 1.
    p_shift: complex = 0j
    time_sign: int = -1
    conjugates: bool = True

    def coord_map(self, x, p):
        return self.x_scale * x + self.x_shift, self.p_scale * p + self.p_shift

    def image(self, x, p):
        if self.conjugates:
            x, p = np.conj(x), np.conj(p)
        return self.coord_map(x, p)


def _sorted_roots(roots):
    roots = np.asarray(roots, dtype=complex).ravel()
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def track_pairs(a, b):
    """
    Relabel two root arrays node by node so that each output array is continuous along the nodes.
    Args:
        a, b: (ndarray) the two roots at every node, in arbitrary order.
    Return:
        (first, second): the continuity-tracked branches, first[0] == a[0].
    """
    same = (np.abs(a[1:] - a[:-1]) + np.abs(b[1:] - b[:-1])) <= (np.abs(a[1:] - b[:-1]) + np.abs(b[1:] - a[:-1]))
    parity = np.concatenate(([False], np.cumsum(~same) % 2 == 1))
    return np.where(parity, b, a), np.where(parity, a, b)


class ModelSpec:
    """
    A complexified classical Hamiltonian H(x, p). All methods accept numpy arrays and broadcast.
    """
    id = None
    piecewise = False  # the potential is continued piecewise, branch line Re x = 0
    momentum_period = None
    param_names = ()

    def __init__(self, **params):
        unknown = set(params) - set(self.param_names)
        assert not unknown, f'Unknown parameters for {self.id}: {sorted(unknown)}.'
        self.params = {k: float(params[k]) for k in self.param_names if k in params}
        for k, v in self.params.items():
            assert np.isfinite(v), f'Parameter {k} of {self.id} must be finite, got {v}.'
        self.symmetry = SymmetryMap()

    @property
    def spatial_period(self):
        return None

    @property
    def period_origin(self):
        return None

    def fold(self, x):
        return np.asarray(x, dtype=complex)

    def hamiltonian(self, x, p, branch=None):
        raise NotImplementedError

    def gradient(self, x, p, branch=None):
        raise NotImplementedError

    def momentum_branches(self, x, E):
        raise NotImplementedError

    def turning_points(self, E):
        raise NotImplementedError

    def branch_side(self, x):
        return np.where(np.real(x) >= 0, 1., -1.)

    def track_branches(self, x, E):
        roots = self.momentum_branches(np.asarray(x, dtype=complex), E)
        return track_pairs(roots[0], roots[1])

    def describe(self):
        return f'{self.id}(' + ', '.join(f'{k}={v:g}' for k, v in self.params.items()) + ')'

    def _polish(self, x, E, p_stationary, max_iter=8):
        """Newton refinement of a turning point on H(x, p_s) = E at the stationary momentum p_s."""
        x = complex(x)
        for _ in range(max_iter):
            f = complex(self.hamiltonian(x, p_stationary)) - E
            dfdx = complex(self.gradient(x, p_stationary)[0])
            if abs(f) < 1e-14 * (1 + abs(E)) or dfdx == 0:
                break
            x -= f / dfdx

        residual = abs(complex(self.hamiltonian(x, p_stationary)) - E)
        velocity = abs(complex(self.gradient(x, p_stationary)[1]))
        if residual > 1e-10 * (1 + abs(E)) or velocity > 1e-10 * (1 + abs(E)):
            raise RootFindingFailed(f'Turning point of {self.id} did not converge.',
                                    x=x, energy=E, residual=residual, velocity=velocity)
        return x


class HarmonicOscillator(ModelSpec):
    id = 'HO'
    param_names = ('omega',)

    def __init__(self, omega=1., **params):
        super().__init__(omega=omega, **params)
        self.omega = self.params['omega']
        self.symmetry = SymmetryMap(p_scale=-1.)

    def hamiltonian(self, x, p, branch=None):
        return p ** 2 + self.omega ** 2 * x ** 2

    def gradient(self, x, p, branch=None):
        return 2 * self.omega ** 2 * x, 2 * p

    def momentum_branches(self, x, E):
        root = np.sqrt(E - self.omega ** 2 * np.asarray(x, dtype=complex) ** 2)
        return np.stack([root, -root])

    def turning_points(self, E):
        root = np.sqrt(complex(E)) / self.omega
        return _sorted_roots([self._polish(root, E, 0j), self._polish(-root, E, 0j)])


class SkinEffect(ModelSpec):
    """H1 = (p + iγ)² + V0 |x| on a ring of circumference L, |x| continued piecewise by the sign of Re x."""
    id = 'H1'
    piecewise = True
    param_names = ('gamma', 'V0', 'L')

    def __init__(self, gamma=0.5, V0=1., L=15., **params):
        super().__init__(gamma=gamma, V0=V0, L=L, **params)
        self.gamma, self.V0, self.L = self.params['gamma'], self.params['V0'], self.params['L']
        self.symmetry = SymmetryMap(p_scale=-1.)

    @property
    def spatial_period(self):
        return self.L

    @property
    def cusps(self):
        return -self.L / 2, 0., self.L / 2

    @property
    def period_origin(self):
        return -self.L / 2

    def fold(self, x):
        x = np.asarray(x, dtype=complex)
        return x - self.L * np.round(x.real / self.L)

    def potential(self, x, branch=None):
        x = self.fold(x)
        side = self.branch_side(x) if branch is None else branch
        return self.V0 * side * x

    def hamiltonian(self, x, p, branch=None):
        return (p + 1j * self.gamma) ** 2 + self.potential(x, branch)

    def gradient(self, x, p, branch=None):
        side = self.branch_side(self.fold(x)) if branch is None else branch
        return self.V0 * side * np.ones_like(np.asarray(x, dtype=complex)), 2 * (p + 1j * self.gamma)

    def momentum_branches(self, x, E):
        root = np.sqrt(E - self.potential(x))
        return np.stack([root - 1j * self.gamma, -root - 1j * self.gamma])

    def turning_points(self, E):
        E = complex(E)
        roots = []
        for side in (1., -1.):
            x = side * E / self.V0
            # each candidate must sit on the half plane whose continuation it solves
            if abs(x.real) <= self.L / 2 and self.branch_side(x) == side:
                roots.append(self._polish(x, E, -1j * self.gamma))
        return _sorted_roots(roots)


class NonreciprocalLattice(ModelSpec):
    """H2 = -2[t0 cos p + iδ sin p + t0 cos(p_y - Bx)], B = 2πq/L."""
    id = 'H2'
    momentum_period = 2 * np.pi
    param_names = ('t0', 'delta', 'q', 'L', 'p_y')

    def __init__(self, t0=-1., delta=0.35, q=1, L=32., p_y=0., **params):
        super().__init__(t0=t0, delta=delta, q=q, L=L, p_y=p_y, **params)
        self.t0, self.delta, self.L, self.p_y = (self.params[k] for k in ('t0', 'delta', 'L', 'p_y'))
        self.q = int(round(self.params['q']))
        assert self.q == self.params['q'], 'The flux number q must be an integer.'
        self.B = 2 * np.pi * self.q / self.L
        # shift by p_y / B, conjugate, flip p, shift back
        shift = self.p_y / self.B if self.B != 0 else 0.
        self.symmetry = SymmetryMap(x_shift=shift - np.conj(shift), p_scale=-1.)

    @property
    def spatial_period(self):
        return 2 * np.pi / self.B if self.B != 0 else self.L

    @property
    def period_origin(self):
        # one potential period starting a quarter period before the band-top anchor p_y / B
        return (self.p_y - np.pi / 2) / self.B if self.B != 0 else 0.

    def hamiltonian(self, x, p, branch=None):
        return -2 * (self.t0 * np.cos(p) + 1j * self.delta * np.sin(p) + self.t0 * np.cos(self.p_y - self.B * x))

    def gradient(self, x, p, branch=None):
        dh_dx = -2 * self.t0 * self.B * np.sin(self.p_y - self.B * x)
        dh_dp = 2 * self.t0 * np.sin(p) - 2j * self.delta * np.cos(p)
        return dh_dx, dh_dp

    def _u_roots(self, x, E):
        """Roots u = e^{ip} of (t0+δ)u² + (E + 2t0 cos(Bx - p_y))u + (t0-δ) = 0."""
        a = self.t0 + self.delta
        b = E + 2 * self.t0 * np.cos(self.B * np.asarray(x, dtype=complex) - self.p_y)
        c = self.t0 - self.delta
        s = np.sqrt(b * b - 4 * a * c)
        s = np.where(np.real(np.conj(b) * s) >= 0, s, -s)
        q = -(b + s) / 2
        return np.stack([q / a, c / q])

    def momentum_branches(self, x, E):
        return -1j * np.log(self._u_roots(x, E))

    def track_branches(self, x, E):
        u = self._u_roots(x, E)
        u1, u2 = track_pairs(u[0], u[1])
        return tuple(np.unwrap(np.angle(uu)) - 1j * np.log(np.abs(uu)) for uu in (u1, u2))

    def stationary_momenta(self):
        rho = np.sqrt(complex((self.t0 - self.delta) / (self.t0 + self.delta)))
        return [-1j * np.log(rho), -1j * np.log(-rho)]

    def turning_points(self, E):
        E = complex(E)
        roots = []
        for p_s in self.stationary_momenta():
            kinetic = -2 * (self.t0 * np.cos(p_s) + 1j * self.delta * np.sin(p_s))
            theta0 = np.arccos((E - kinetic) / (-2 * self.t0))
            for theta in (theta0, -theta0):
                # one potential period, Re θ in [-π/2, 3π/2)
                theta = theta - 2 * np.pi * np.floor((theta.real + np.pi / 2) / (2 * np.pi))
                x = (self.p_y + theta) / self.B
                roots.append(self._polish(x, E, p_s))
        return _sorted_roots(roots)


class DoubleWell(ModelSpec):
    """H3 = p² + g(x² - a²)² + iΓx."""
    id = 'H3'
    param_names = ('g', 'a', 'Gamma')

    def __init__(self, g=0.5, a=2., Gamma=4., **params):
        super().__init__(g=g, a=a, Gamma=Gamma, **params)
        self.g, self.a, self.Gamma = self.params['g'], self.params['a'], self.params['Gamma']
        self.symmetry = SymmetryMap(x_scale=-1.)

    def potential(self, x):
        return self.g * (x ** 2 - self.a ** 2) ** 2 + 1j * self.Gamma * x

    def hamiltonian(self, x, p, branch=None):
        return p ** 2 + self.potential(x)

    def gradient(self, x, p, branch=None):
        return 4 * self.g * x * (x ** 2 - self.a ** 2) + 1j * self.Gamma, 2 * p

    def momentum_branches(self, x, E):
        root = np.sqrt(E - self.potential(np.asarray(x, dtype=complex)))
        return np.stack([root, -root])

    def turning_points(self, E):
        E = complex(E)
        coefficients = [self.g, 0., -2 * self.g * self.a ** 2, 1j * self.Gamma, self.g * self.a ** 4 - E]
        return _sorted_roots([self._polish(x, E, 0j) for x in np.roots(coefficients)])


MODELS = {aa.id: aa for aa in (HarmonicOscillator, SkinEffect, NonreciprocalLattice, DoubleWell)}


def build_model(model_id, **params):
    assert model_id in MODELS, f'Unknown model {model_id}, expected one of {sorted(MODELS)}.'
    return MODELS[model_id](**params)


def hamiltonian(model, z):
    return complex(model.hamiltonian(z.x, z.p))


def gradient(model, z):
    dh_dx, dh_dp = model.gradient(z.x, z.p)
    return complex(dh_dx), complex(dh_dp)


def momentum_branches(model, x, E, tol=1e-10):
    roots = model.momentum_branches(complex(x), complex(E))
    if abs(roots[0] - roots[1]) < tol * (1 + abs(roots[0])):
        raise DegenerateBranch('The momentum branches coalesce, x is a turning point.', x=x, energy=E)
    return [complex(aa) for aa in roots]


def turning_points(model, E):
    return [complex(aa) for aa in model.turning_points(complex(E))]


def symmetry_image(model, z):
    x, p = model.symmetry.image(z.x, z.p)
    return PhasePoint(complex(x), complex(p))


def symmetry_residual(model, z):
    """|H(x_η, p_η) - H*(x*, p*)| at the phase point z."""
    x_eta, p_eta = model.symmetry.coord_map(z.x, z.p)
    return abs(complex(model.hamiltonian(x_eta, p_eta)) - np.conj(complex(model.hamiltonian(np.conj(z.x),
                                                                                           np.conj(z.p)))))
