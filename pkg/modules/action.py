import numpy as np
from dataclasses import dataclass
from typing import NamedTuple

from modules.integrator import Orbit, TimeContour
from modules.models import PhasePoint
from utils.errors import BranchTrackingFailed, ContourCollision, DegenerateBranch, RootFindingFailed, TurningPointOnPath

KINDS = ('librational', 'traversing')
CONTOURS = ('ellipse', 'segment')


@dataclass(frozen=True)
class OrbitFamily:
    """
    One family of periodic orbits of a model. A librational family oscillates between two turning points selected
    either by their indices in the sorted turning point list or as the nearest on each side of an anchor. A
    traversing family crosses one spatial period in the given direction.
    """
    label: str
    kind: str
    mu: float = None
    turning_pair: tuple = None
    anchor: float = None
    direction: int = 1
    contour: str = 'ellipse'
    margin: float = 1.2
    nodes: int = 512
    offset: float = 0.
    window: tuple = (-np.inf, np.inf, 0., 0.)  # Re E min, Re E max, Im E min, Im E max
    n_range: object = 'auto'
    transition: float = None
    partner: str = None
    match_tol: float = 0.02

    def __post_init__(self):
        assert self.kind in KINDS, f'Unknown family kind {self.kind}, expected one of {KINDS}.'
        assert self.contour in CONTOURS, f'Unknown contour shape {self.contour}, expected one of {CONTOURS}.'
        assert self.direction in (1, -1), 'The direction of a traversing family must be +1 or -1.'
        assert self.margin > 1, 'The contour margin must be above 1.'
        assert self.nodes >= 16 and self.nodes % 2 == 0, 'The node count must be even and at least 16.'
        if self.kind == 'librational':
            assert (self.turning_pair is None) != (self.anchor is None), \
                f'Family {self.label} needs exactly one of turning_pair and anchor.'
        if self.mu is None:
            object.__setattr__(self, 'mu', 0.5 if self.kind == 'librational' else 0.)
        object.__setattr__(self, 'window', tuple(float(aa) for aa in self.window))


class _Quadrature(NamedTuple):
    x: np.ndarray
    dx: np.ndarray  # quadrature weight times dx/dparameter
    p: np.ndarray
    p_other: np.ndarray


def select_turning_pair(model, family, E):
    """The family's two turning points at energy E in lexicographic (Re, Im) order."""
    points = model.turning_points(complex(E))
    if family.turning_pair is not None:
        i, j = family.turning_pair
        if max(i, j) >= len(points):
            raise RootFindingFailed(f'Family {family.label} selects turning points {i}, {j}, only {len(points)} exist.',
                                    family=family.label, energy=E)
        pair = [points[i], points[j]]
    else:
        pair = _bracketing_pair(_periodic_copies(model, points), family.anchor)
        if pair is None:
            raise RootFindingFailed(f'No pair of turning points of family {family.label} brackets {family.anchor}.',
                                    family=family.label, energy=E, found=len(points))

    pair.sort(key=lambda z: (z.real, z.imag))
    if abs(pair[1] - pair[0]) < 1e-6:
        raise DegenerateBranch('The two turning points of the family coalesce.', family=family.label, energy=E,
                               separation=abs(pair[1] - pair[0]))
    return pair[0], pair[1], points


def _periodic_copies(model, points):
    """On a lattice the turning points repeat with the potential period, an orbit may straddle the list window."""
    period = model.spatial_period
    if period and model.momentum_period:
        return np.concatenate([points + k * period for k in (-1, 0, 1)])
    return np.asarray(points, dtype=complex)


def _bracketing_pair(candidates, anchor, tol=1e-9):
    """The turning point nearest the anchor on each side of it along Re x, None if one side is empty."""
    left = candidates[candidates.real < anchor - tol]
    right = candidates[candidates.real > anchor + tol]
    if not len(left) or not len(right):
        return None
    a = left[np.argmin(np.abs(left - anchor))]
    b = right[np.argmin(np.abs(right - anchor))]
    return [a, b]


def _other_points(model, points, a, b):
    return np.array([z for z in _periodic_copies(model, points) if abs(z - a) > 1e-9 and abs(z - b) > 1e-9],
                    dtype=complex)


def _check_continuity(p, q, cyclic, family, skip=None):
    """Refuse a branch labelling in which a node jumps by more than half the local branch separation."""
    if cyclic:
        jumps = np.abs(p - np.roll(p, 1))
        separation = np.abs(p - q)
    else:
        jumps = np.abs(np.diff(p))
        separation = np.abs(p[1:] - q[1:])
        skip = None if skip is None else skip[1:]
    bad = jumps >= 0.5 * separation
    if skip is not None:
        bad &= ~skip
    if bad.any():
        k = int(np.argmax(bad))
        raise BranchTrackingFailed('The momentum branch jumps between adjacent nodes, increase the node count.',
                                   family=family.label, node=k, jump=float(jumps[k]), separation=float(separation[k]))


def _ellipse(model, family, E):
    a, b, points = select_turning_pair(model, family, E)
    center, half = (a + b) / 2, (b - a) / 2
    rho = np.arccosh(family.margin)

    others = _other_points(model, points, a, b)
    inside = np.abs(others - a) + np.abs(others - b) < 2 * family.margin * abs(half)
    if inside.any():
        raise ContourCollision('A third turning point lies inside the contour.', family=family.label, energy=E,
                               turning_point=complex(others[np.argmax(inside)]))

    theta = 2 * np.pi * np.arange(family.nodes) / family.nodes
    x = center + half * np.cos(theta - 1j * rho)
    dx = -half * np.sin(theta - 1j * rho) * (2 * np.pi / family.nodes)
    p1, p2 = model.track_branches(x, E)
    _check_continuity(p1, p2, True, family)
    return _Quadrature(x, dx, p1, p2)


def _align(values, index, reference, period):
    """Shift a branch by the multiple of the momentum period that brings values[index] nearest the reference."""
    if not period:
        return values
    return values - period * np.round((values[index] - reference).real / period)


def _gap(p, q, period):
    return abs(_align(np.atleast_1d(p), 0, q, period)[0] - q)


def _segment(model, family, E):
    """
    Both sheets of the cut joining the two turning points. Each half segment is mapped to u in [0, 1] by
    x = tp + (xm - tp)u², which makes the square root endpoint behaviour smooth for Gauss-Legendre.
    """
    a, b, points = select_turning_pair(model, family, E)
    others = _other_points(model, points, a, b)
    if len(others):
        direction = (b - a) / abs(b - a)
        along = np.clip(((others - a) / direction).real, 0, abs(b - a))
        if (np.abs(others - (a + along * direction)) < 1e-6).any():
            raise ContourCollision('A third turning point lies on the cut.', family=family.label, energy=E)

    # split where the segment crosses the branch line Re x = 0, else at the middle
    if model.piecewise and a.real < 0 < b.real:
        xm = a + (b - a) * (-a.real / (b.real - a.real))
    else:
        xm = (a + b) / 2

    xi, w = np.polynomial.legendre.leggauss(family.nodes // 2)
    u, w = ((xi + 1) / 2)[::-1], (w / 2)[::-1]

    period = model.momentum_period
    halves = []
    for tp, sign in ((a, 1), (b, -1)):
        x = tp + (xm - tp) * u ** 2
        q1, q2 = model.track_branches(x, E)
        # the two sheets meet at the turning point, not only modulo the momentum period
        q2 = _align(q2, -1, q1[-1], period)
        _check_continuity(q1, q2, False, family, skip=u < 0.25)
        halves.append((x, sign * 2 * (xm - tp) * u * w, q1, q2))

    (xa, dxa, qa1, qa2), (xb, dxb, qb1, qb2) = halves
    if _gap(qa1[0], qb1[0], period) + _gap(qa2[0], qb2[0], period) > \
            _gap(qa1[0], qb2[0], period) + _gap(qa2[0], qb1[0], period):
        qb1, qb2 = qb2, qb1
    qb1, qb2 = _align(qb1, 0, qa1[0], period), _align(qb2, 0, qa2[0], period)

    x = np.concatenate([xa, xb, xa, xb])
    dx = np.concatenate([dxa, dxb, -dxa, -dxb])
    p1 = np.concatenate([qa1, qb1, qa2, qb2])
    p2 = np.concatenate([qa2, qb2, qa1, qb1])
    return _Quadrature(x, dx, p1, p2)


def _traversing_path(model, family, E):
    period = model.spatial_period
    assert period, f'Model {model.id} has no spatial period, it has no traversing orbits.'
    assert not (model.piecewise and family.offset), 'Piecewise models only support traversing paths on the real axis.'
    origin = model.period_origin
    sigma = family.offset * family.direction

    others = model.turning_points(complex(E))
    others = np.concatenate([others + k * period for k in (-1, 0, 1)]) if len(others) else others
    near = (others.real >= origin - 1e-3) & (others.real <= origin + period + 1e-3) & \
           (np.abs(others.imag - sigma) < 1e-3)
    if near.any():
        raise TurningPointOnPath('A turning point lies on the traversing path.', family=family.label, energy=E,
                                 turning_point=complex(others[np.argmax(near)]), offset=sigma)

    if model.piecewise:
        cusps = np.array(model.cusps)
        xi, w = np.polynomial.legendre.leggauss(max(family.nodes // (len(cusps) - 1), 8))
        pieces = [(lo + (hi - lo) * (xi + 1) / 2, (hi - lo) * w / 2) for lo, hi in zip(cusps[:-1], cusps[1:])]
        x = np.concatenate([aa[0] for aa in pieces]).astype(complex)
        dx = np.concatenate([aa[1] for aa in pieces]).astype(complex)
    else:
        x = origin + period * np.arange(family.nodes) / family.nodes + 1j * sigma
        dx = np.full(family.nodes, period / family.nodes, dtype=complex)
    return x, dx


def _traversing(model, family, E):
    x, dx = _traversing_path(model, family, E)
    p1, p2 = model.track_branches(x, E)
    _check_continuity(p1, p2, False, family)

    velocity = np.real([model.gradient(x[0], p1[0])[1], model.gradient(x[0], p2[0])[1]]) * family.direction
    if velocity[1] > velocity[0]:
        p1, p2 = p2, p1
    return x, dx, p1, p2


def _winding_correction(model, x, dx, p):
    """For a momentum defined modulo 2π, remove the linear drift 2πk(x - x0)/P so the trapezoid rule stays exact."""
    if model.piecewise or not model.momentum_period:
        return np.sum(p * dx)
    period = model.spatial_period
    k = np.round((p[-1] + (p[-1] - p[-2]) - p[0]).real / model.momentum_period)
    drift = model.momentum_period * k * (x - x[0]) / period
    return np.sum((p - drift) * dx) + np.pi * k * period


def action_and_period(model, family, E):
    """
    Complex action W(E) = ∮p dx and period T(E) = ∮dx/(∂H/∂p) of a family, both on the same branch and path.
    """
    E = complex(E)
    if family.kind == 'traversing':
        x, dx, p, _ = _traversing(model, family, E)
        W = _winding_correction(model, x, dx, p)
        T = np.sum(dx / model.gradient(x, p)[1])
        return complex(family.direction * W), complex(family.direction * T)

    shape = 'segment' if model.piecewise else family.contour
    quad = _ellipse(model, family, E) if shape == 'ellipse' else _segment(model, family, E)
    # orientation: the branch with Re W > 0
    p = quad.p if np.sum(quad.p * quad.dx).real >= 0 else quad.p_other
    W = np.sum(p * quad.dx)
    T = np.sum(quad.dx / model.gradient(quad.x, p)[1])
    return complex(W), complex(T)


def action_librational(model, family, E):
    assert family.kind == 'librational', f'Family {family.label} is not librational.'
    return action_and_period(model, family, E)[0]


def action_traversing(model, family, E):
    assert family.kind == 'traversing', f'Family {family.label} is not traversing.'
    return action_and_period(model, family, E)[0]


def period(model, family, E):
    return action_and_period(model, family, E)[1]


def _orient(p1, p2, weight):
    return (p1, p2) if np.sum((p1 - p2) * weight).real >= 0 else (p2, p1)


def _librational_samples(model, family, E, count):
    """
    Phase points and times on a 2 * count fine grid in the contour angle, the odd nodes only feed the midpoint
    rule for the times. Segment mode runs along the cut (zero eccentricity), one sheet per half turn.
    """
    a, b, _ = select_turning_pair(model, family, E)
    center, half = (a + b) / 2, (b - a) / 2
    segment = model.piecewise or family.contour == 'segment'
    rho = 0. if segment else np.arccosh(family.margin)
    theta = np.pi * np.arange(2 * count + 1) / count
    x = center + half * np.cos(theta - 1j * rho)
    dx_dtheta = -half * np.sin(theta - 1j * rho)

    if segment:
        # a -> b on (count, 2 count), b -> a mirrors it on (0, count)
        forward = slice(count + 1, 2 * count)
        period = model.momentum_period
        q1, q2 = model.track_branches(x[forward], E)
        q2 = _align(q2, 0, q1[0], period)
        q1, q2 = _orient(q1, q2, dx_dtheta[forward])
        p = np.empty_like(x)
        p[forward] = q1
        p[1:count] = q2[::-1]
        for k in (0, count, 2 * count):
            near = p[1] if k == 0 else p[k - 1]
            p[k] = np.mean([_align(np.atleast_1d(aa), 0, near, period)[0]
                            for aa in model.momentum_branches(x[k], E)])
    else:
        p1, p2 = model.track_branches(x[:-1], E)
        p1, _ = _orient(p1, p2, dx_dtheta[:-1])
        p = np.append(p1, p1[0])

    rate = dx_dtheta[1::2] / model.gradient(x[1::2], p[1::2])[1]
    t = np.concatenate([[0j], np.cumsum(rate) * (2 * np.pi / count)])
    return x[::2], p[::2], t


def _traversing_samples(model, family, E, count):
    x = model.period_origin + model.spatial_period * np.arange(count + 1) / count + \
        1j * family.offset * family.direction
    p1, p2 = model.track_branches(x, E)
    _check_continuity(p1, p2, False, family)
    # same rule as the quadrature path: the branch moving along the direction
    velocity = np.real(model.gradient(x[0], np.array([p1[0], p2[0]]))[1]) * family.direction
    p = p1 if velocity[0] >= velocity[1] else p2

    rate = model.spatial_period / count / model.gradient(x, p)[1]
    t = np.concatenate([[0j], np.cumsum((rate[1:] + rate[:-1]) / 2)])
    if family.direction < 0:
        x, p = x[::-1], p[::-1]
        t = t[-1] - t[::-1]
    return x, p, t


def orbit_on_path(model, family, E, count=None):
    """
    The periodic orbit of a family at energy E sampled along the quadrature path: x follows the contour in the
    complex x-plane and t is accumulated from dt = dx/(∂H/∂p). count + 1 samples including both ends.
    """
    count = family.nodes if count is None else count
    assert count % 2 == 0, 'The sample count must be even so the symmetry maps the grid onto itself.'
    W, T = action_and_period(model, family, E)
    if family.kind == 'traversing':
        x, p, t = _traversing_samples(model, family, complex(E), count)
    else:
        x, p, t = _librational_samples(model, family, complex(E), count)

    return Orbit(s=np.linspace(0., 1., count + 1), t=t, x=x, p=p, contour=TimeContour(T), energy=complex(E),
                 model_id=model.id, action=W, family_label=family.label, x_period=model.spatial_period,
                 p_period=model.momentum_period, extra={'source': 'path'})


def orbit_start(model, family, E):
    """
    Initial phase point for integrating the family's orbit at E: the upper turning point of a librational pair,
    the first path point of a traversing orbit. Both sit where the symmetry map sends the orbit onto its partner's
    start, or half a period further along it.
    """
    E = complex(E)
    if family.kind == 'traversing':
        x, p, _ = _traversing_samples(model, family, E, 16)
        return PhasePoint(complex(x[0]), complex(p[0]))
    _, b, _ = select_turning_pair(model, family, E)
    return PhasePoint(complex(b), complex(model.momentum_branches(b, E)[0]))
