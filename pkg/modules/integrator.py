import numpy as np
from dataclasses import dataclass, field, replace

from modules.models import PhasePoint
from utils.errors import BlowUp, SampleMismatch


@dataclass(frozen=True)
class TimeContour:
    """
    A polyline in complex time from 0 to T through the optional vertices, parameterized by s in [0, 1]
    proportionally to arc length. With no vertices this is the straight contour t(s) = sT.
    """
    T: complex
    vertices: tuple = ()

    def __post_init__(self):
        assert abs(self.T) > 0, 'The complex period must be nonzero.'

    @property
    def corners(self):
        return np.array([0j, *self.vertices, self.T], dtype=complex)

    def times(self, steps):
        """Node times for a fixed number of steps, every vertex is a node."""
        corners = self.corners
        lengths = np.abs(np.diff(corners))
        counts = np.maximum(1, np.round(steps * lengths / lengths.sum()).astype(int))
        counts[-1] = max(1, steps - counts[:-1].sum())

        pieces = [corners[:1]]
        for start, end, count in zip(corners[:-1], corners[1:], counts):
            pieces.append(start + (end - start) * np.arange(1, count + 1) / count)
        return np.concatenate(pieces)

    def conjugate(self):
        """The contour run by the image orbit: T*, vertices reflected and reversed."""
        return TimeContour(np.conj(self.T), tuple(np.conj(self.T - v) for v in reversed(self.vertices)))


@dataclass
class Orbit:
    s: np.ndarray
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    contour: TimeContour
    energy: complex
    model_id: str
    action: complex = None
    family_label: str = ''
    classification: str = 'Unclassified'
    partner: int = None
    drift: float = 0.
    x_period: float = None
    p_period: float = None
    extra: dict = field(default_factory=dict)

    @property
    def samples(self):
        return [(float(s), PhasePoint(complex(x), complex(p))) for s, x, p in zip(self.s, self.x, self.p)]

    def closure_error(self):
        dx, dp = self.x[-1] - self.x[0], self.p[-1] - self.p[0]
        return float(np.hypot(abs(_wrap(dx, self.x_period)), abs(_wrap(dp, self.p_period))))


def _wrap(delta, period):
    if not period:
        return delta
    return delta - period * np.round(np.real(delta) / period)


def _rk4_step(model, x, p, dt, branch):
    """One RK4 step of (x, p, w) with dw/dt = p ∂H/∂p carried along for the orbit action."""

    def flow(xx, pp):
        dh_dx, dh_dp = model.gradient(xx, pp, branch)
        return dh_dp, -dh_dx, pp * dh_dp

    k1 = flow(x, p)
    k2 = flow(x + 0.5 * dt * k1[0], p + 0.5 * dt * k1[1])
    k3 = flow(x + 0.5 * dt * k2[0], p + 0.5 * dt * k2[1])
    k4 = flow(x + dt * k3[0], p + dt * k3[1])
    return tuple(dt / 6 * (a + 2 * b + 2 * c + d) for a, b, c, d in zip(k1, k2, k3, k4))


def _side(model, x):
    return float(model.branch_side(model.fold(x)))


def _advance(model, x, p, dt, bisections=60):
    """
    Advance one step. For piecewise models the step is split where Re x crosses a branch line, each part keeping
    the analytic piece it started on.
    """
    if not model.piecewise:
        dx, dp, dw = _rk4_step(model, x, p, dt, None)
        return x + dx, p + dp, dw

    side = _side(model, x)
    dx, dp, dw = _rk4_step(model, x, p, dt, side)
    if _side(model, x + dx) == side:
        return x + dx, p + dp, dw

    lo, hi = 0., 1.
    for _ in range(bisections):
        mid = (lo + hi) / 2
        if _side(model, x + _rk4_step(model, x, p, mid * dt, side)[0]) == side:
            lo = mid
        else:
            hi = mid

    dx, dp, dw = _rk4_step(model, x, p, hi * dt, side)
    x, p = x + dx, p + dp
    rest = _rk4_step(model, x, p, (1 - hi) * dt, _side(model, x))
    return x + rest[0], p + rest[1], dw + rest[2]


def integrate(model, z0, contour, steps=2048, bound=1e6):
    """
    Integrate the complex Hamilton equations ẋ = ∂H/∂p, ṗ = -∂H/∂x with fixed-step RK4 along the time contour.
    Args:
        model: a ModelSpec.
        z0: the initial PhasePoint.
        contour: the TimeContour.
        steps: the number of RK4 steps, every step is sampled.
        bound: |x| or |p| above this raises BlowUp.
    Return:
        an Orbit, its action is the ODE line integral of p dx.
    """
    assert steps >= 16, f'At least 16 steps are needed, got {steps}.'
    x, p = complex(z0.x), complex(z0.p)
    assert np.isfinite([x, p]).all(), 'The initial point must be finite.'

    times = contour.times(steps)
    xs = np.empty(len(times), dtype=complex)
    ps = np.empty(len(times), dtype=complex)
    xs[0], ps[0] = x, p
    action = 0j

    for k in range(len(times) - 1):
        x, p, dw = _advance(model, x, p, times[k + 1] - times[k])
        action += dw
        if not (abs(x) <= bound and abs(p) <= bound):
            raise BlowUp('The trajectory diverged.', step=k + 1, t=complex(times[k + 1]), x=x, p=p, bound=bound)
        xs[k + 1], ps[k + 1] = x, p

    energy = complex(model.hamiltonian(z0.x, z0.p))
    drift = float(np.max(np.abs(model.hamiltonian(xs, ps) - energy)))
    s = np.linspace(0., 1., len(times))
    return Orbit(s=s, t=times, x=xs, p=ps, contour=contour, energy=energy, model_id=model.id, action=action,
                 drift=drift, x_period=model.spatial_period, p_period=model.momentum_period, extra={'source': 'ode'})


def orbit_image(model, orbit):
    """
    The S_η partner of an orbit: phase points conjugated and mapped by the model's symmetry map, sample order
    reversed when the η operation involves a transpose, period and energy conjugated.
    """
    symmetry = model.symmetry
    x, p, t = orbit.x, orbit.p, orbit.t
    T = orbit.contour.T
    if symmetry.time_sign < 0:
        x, p = x[::-1], p[::-1]
        t = np.conj(T - t[::-1])
        contour = orbit.contour.conjugate()
    else:
        t = np.conj(t)
        contour = TimeContour(np.conj(T), tuple(np.conj(v) for v in orbit.contour.vertices))

    x_img, p_img = symmetry.image(x, p)
    action = None if orbit.action is None else np.conj(orbit.action)
    return replace(orbit, s=orbit.s.copy(), t=t, x=np.asarray(x_img), p=np.asarray(p_img), contour=contour,
                   energy=np.conj(orbit.energy), action=action, classification='Unclassified', partner=None,
                   extra={**orbit.extra, 'image_of': orbit.family_label})


def orbit_distance(a, b):
    """
    Minimum over cyclic sample shifts of the maximum pointwise phase-space distance. The closing sample is dropped,
    coordinates that live on a circle (lattice x, Bloch p) are compared modulo their period.
    """
    if len(a.x) != len(b.x):
        raise SampleMismatch('Orbits are sampled on different numbers of points.', left=len(a.x), right=len(b.x))

    xa, pa, xb, pb = a.x[:-1], a.p[:-1], b.x[:-1], b.p[:-1]
    best = np.inf
    for index in cyclic_shifts(len(xa)):
        dx = _wrap(xa[None, :] - xb[index], a.x_period)
        dp = _wrap(pa[None, :] - pb[index], a.p_period)
        best = min(best, float(np.hypot(np.abs(dx), np.abs(dp)).max(axis=1).min()))
    return best


def cyclic_shifts(count, block=64):
    """Index blocks for every cyclic shift: row j of a block picks np.roll(values, -shift_j)."""
    columns = np.arange(count)
    for start in range(0, count, block):
        shifts = np.arange(start, min(start + block, count))
        yield (columns[None, :] + shifts[:, None]) % count


def subsample(orbit, stride):
    """Every stride-th sample, the closing sample stays when stride divides the step count."""
    return replace(orbit, s=orbit.s[::stride], t=orbit.t[::stride], x=orbit.x[::stride], p=orbit.p[::stride])


def orbit_action(orbit):
    """∫ p dx along an orbit: the value carried through RK4 for integrated orbits, the trapezoid rule otherwise."""
    if orbit.extra.get('source') == 'ode':
        return complex(orbit.action)
    dx = np.diff(orbit.x)
    dx = _wrap(dx, orbit.x_period) if orbit.x_period else dx
    return complex(np.sum((orbit.p[1:] + orbit.p[:-1]) / 2 * dx))
