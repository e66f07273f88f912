import numpy as np
from dataclasses import dataclass, field, replace

from modules.action import action_and_period, orbit_start
from modules.integrator import TimeContour, integrate, orbit_distance, orbit_image, subsample
from utils.common_utils import parallel_map
from utils.errors import (LeftValidityWindow, NoConvergence, OrbitraceError, PoleProximity, RootFindingFailed,
                          UnpairedAsymmetricOrbit)

SELF_SYMMETRIC = 'SelfSymmetric'
PAIR_MEMBER = 'PairMember'
UNCLASSIFIED = 'Unclassified'
DEGENERATE = 'Degenerate'
UNPAIRED = 'Unpaired'


@dataclass
class SpectrumRecord:
    family_label: str
    n: int
    E_semiclassical: complex = None
    W_residual: float = None
    orbit_class: str = UNCLASSIFIED
    partner: int = None
    families: tuple = ()
    status: str = 'ok'
    message: str = ''
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    crossover: bool = False
    E_quantum_match: complex = None
    match_error: float = None
    match_tol: float = 0.02

    @property
    def converged(self):
        return self.status == 'ok'


def window_slack(window):
    re_min, re_max, im_min, im_max = window
    widths = [aa for aa in (re_max - re_min, im_max - im_min) if np.isfinite(aa)]
    return 0.1 * max(widths) if widths else 0.


def in_window(family, E, slack=None):
    re_min, re_max, im_min, im_max = family.window
    slack = window_slack(family.window) if slack is None else slack
    return re_min - slack <= E.real <= re_max + slack and im_min - slack <= E.imag <= im_max + slack


def quantize_level(model, family, n, E_seed, tol=1e-10, max_iter=50):
    """
    Solve ∮p dx = 2π(n + μ) for the complex energy by Newton iteration E <- E + (2π(n + μ) - W)/T.
    Raise:
        LeftValidityWindow: the seed or an iterate left the family's energy window.
        NoConvergence: the residual is still above tol after max_iter iterations.
    """
    target = 2 * np.pi * (n + family.mu)
    E = complex(E_seed)
    if not in_window(family, E):
        raise LeftValidityWindow('The seed is outside the family window.', family=family.label, n=n, energy=E)

    history = []
    for it in range(1, max_iter + 1):
        W, T = action_and_period(model, family, E)
        residual = abs(W - target)
        history.append(residual)
        if residual < tol:
            return SpectrumRecord(family_label=family.label, n=n, E_semiclassical=E, W_residual=residual,
                                  families=(family.label,), iterations=it, residual_history=history,
                                  match_tol=family.match_tol)

        E = E + (target - W) / T
        if not np.isfinite(E) or not in_window(family, E):
            raise LeftValidityWindow('Newton left the family window.', family=family.label, n=n, energy=E,
                                     iteration=it)

    raise NoConvergence('Newton did not converge.', family=family.label, n=n, energy=E, residual=history[-1])


class SeedScan:
    """Action values of a family on a coarse grid over its window, the source of first seeds and auto n-ranges."""

    def __init__(self, model, family, re_points=48, im_points=12):
        re_min, re_max, im_min, im_max = family.window
        assert np.isfinite([re_min, re_max]).all(), f'Family {family.label} needs a finite window to scan.'
        self.family = family
        self.re = np.linspace(re_min, re_max, re_points)
        self.im = np.linspace(im_min, im_max, im_points) if im_max > im_min else np.array([im_min])
        self.energies = self.re[None, :] + 1j * self.im[:, None]
        self.actions = np.full(self.energies.shape, np.nan + 0j)
        for idx in np.ndindex(self.energies.shape):
            try:
                self.actions[idx] = action_and_period(model, family, self.energies[idx])[0]
            except OrbitraceError:
                pass

    def seed(self, n):
        mismatch = np.abs(self.actions - 2 * np.pi * (n + self.family.mu))
        if np.isnan(mismatch).all():
            return None
        return complex(self.energies[np.unravel_index(np.nanargmin(mismatch), mismatch.shape)])

    def auto_n_range(self):
        """
        The integers n with 2π(n + μ) inside the range of Re W along the grid row closest to the real axis on which
        the action could be evaluated. n may be negative, a traversing action has the sign of its direction.
        """
        finite = np.isfinite(self.actions).any(axis=1)
        if not finite.any():
            return range(0)
        rows = np.flatnonzero(finite)
        row = self.actions[rows[np.argmin(np.abs(self.im[rows]))]].real
        row = row[np.isfinite(row)]
        lo = int(np.ceil(row.min() / (2 * np.pi) - self.family.mu))
        hi = int(np.floor(row.max() / (2 * np.pi) - self.family.mu))
        return range(lo, hi + 1)


def quantize_family(model, family, n_range=None, scan_points=(48, 12), tol=1e-10, max_iter=50):
    """
    Levels of one family. The first two seeds come from the grid scan, later ones are extrapolated linearly from
    the previous two converged levels, falling back to the scan when the extrapolated seed fails.
    """
    scan = SeedScan(model, family, *scan_points)
    if n_range is None:
        n_range = family.n_range
    if n_range == 'auto':
        n_range = scan.auto_n_range()
    elif not isinstance(n_range, range):
        n_range = range(n_range[0], n_range[1] + 1)

    records, found = [], []
    for n in n_range:
        seeds = []
        if len(found) >= 2:
            seeds.append(2 * found[-1] - found[-2])
        grid_seed = scan.seed(n)
        if grid_seed is not None:
            seeds.append(grid_seed)

        record, error = None, None
        for seed in seeds:
            try:
                record = quantize_level(model, family, n, seed, tol, max_iter)
                break
            except OrbitraceError as e:
                error = e

        if record is None:
            if error is None:
                error = NoConvergence('No seed available in the family window.', family=family.label, n=n)
            record = SpectrumRecord(family_label=family.label, n=n, families=(family.label,),
                                    status=error.__class__.__name__, message=error.message, match_tol=family.match_tol)
        else:
            found.append(record.E_semiclassical)
        records.append(record)
    return records


def periodic_orbit(model, family, E, count=256, refine=4, bound=1e6):
    """
    The family's orbit at E integrated by RK4 from orbit_start over one period T(E) on the straight time contour,
    every refine-th step kept so that count + 1 samples remain.
    """
    _, T = action_and_period(model, family, E)
    orbit = integrate(model, orbit_start(model, family, E), TimeContour(T), steps=count * refine, bound=bound)
    return replace(subsample(orbit, refine), family_label=family.label)


def classify_orbit(model, record, siblings, families, tol=1e-4, count=256, partner_tol=1e-6):
    """
    SelfSymmetric if the integrated orbit coincides with its S_η image, PairMember(partner index into siblings) if
    the orbit integrated at a sibling level near E* coincides with the image.
    Return:
        (orbit_class, partner)
    """
    family = families[record.family_label]
    E = record.E_semiclassical
    orbit = periodic_orbit(model, family, E, count)
    image = orbit_image(model, orbit)
    self_distance = orbit_distance(orbit, image)
    if self_distance < tol:
        return SELF_SYMMETRIC, None

    for idx, other in enumerate(siblings):
        if other is record or not other.converged:
            continue
        if abs(other.E_semiclassical - np.conj(E)) > partner_tol * (1 + abs(E)):
            continue
        other_orbit = periodic_orbit(model, families[other.family_label], other.E_semiclassical, count)
        if orbit_distance(other_orbit, image) < tol:
            return PAIR_MEMBER, idx

    raise UnpairedAsymmetricOrbit('The orbit is neither self-symmetric nor paired.', family=record.family_label,
                                  n=record.n, energy=E, self_distance=self_distance)


def deduplicate(records, tol=1e-6):
    """Merge converged levels of different families closer than tol, the survivor carries every family tag."""
    kept = []
    for record in records:
        if record.converged:
            twin = next((aa for aa in kept if aa.converged and
                         abs(aa.E_semiclassical - record.E_semiclassical) < tol), None)
            if twin is not None and record.family_label not in twin.families:
                twin.families = twin.families + (record.family_label,)
                twin.orbit_class = DEGENERATE
                continue
        kept.append(record)
    return kept


def transitions(family):
    """The family's transition energies as a tuple, a family may border the crossover on both sides."""
    if family.transition is None:
        return ()
    if np.ndim(family.transition):
        return tuple(float(aa) for aa in family.transition)
    return (float(family.transition),)


def flag_crossover(records, families, fraction=0.02, edge=1e-8):
    """
    A level sits in the crossover window when Re E lies within fraction * |E_t| of a transition energy E_t of its
    family, or when Newton only converged in the slack margin outside the family window.
    """
    for record in records:
        family = families[record.family_label]
        if not record.converged:
            continue
        E = record.E_semiclassical
        near = any(abs(E.real - aa) <= fraction * abs(aa) for aa in transitions(family))
        record.crossover = near or not in_window(family, E, edge)


def crossover_energy(model, family, lo, hi, eta=0., points=24, tol=1e-10, max_iter=100):
    """
    The real energy in [lo, hi] where the action of a family turns real: the root of Im W(E + iη) - η Re T(E + iη).
    The η term cancels the first order shift of an action evaluated just off the real axis, for families whose
    path meets a turning point at real E.
    Raise:
        RootFindingFailed: no sign change on the scan grid.
    """
    def imag_action(E):
        W, T = action_and_period(model, family, E + 1j * eta)
        return W.imag - eta * T.real

    grid = np.linspace(lo, hi, points)
    values = np.full(points, np.nan)
    for i, E in enumerate(grid):
        try:
            values[i] = imag_action(E)
        except OrbitraceError:
            pass

    change = np.flatnonzero(np.isfinite(values[:-1]) & np.isfinite(values[1:]) & (values[:-1] * values[1:] <= 0))
    if not len(change):
        raise RootFindingFailed('Im W keeps its sign on the scan.', family=family.label, lo=lo, hi=hi,
                                evaluated=int(np.isfinite(values).sum()))

    a, b, f_a = grid[change[0]], grid[change[0] + 1], values[change[0]]
    for _ in range(max_iter):
        if b - a < tol * (1 + abs(a)):
            break
        mid = (a + b) / 2
        f_mid = imag_action(mid)
        if f_a * f_mid <= 0:
            b = mid
        else:
            a, f_a = mid, f_mid
    return float((a + b) / 2)


def sort_records(records):
    converged = sorted((aa for aa in records if aa.converged),
                       key=lambda aa: (aa.E_semiclassical.real, aa.E_semiclassical.imag))
    failed = [aa for aa in records if not aa.converged]
    return converged + failed


def semiclassical_spectrum(model, families, n_ranges=None, scan_points=(48, 12), tol=1e-10, max_iter=50,
                           dedup_tol=1e-6, classify_tol=1e-4, count=256, workers=None, progress=None):
    """
    Quantize every family, merge degenerate levels, flag the crossover window, sort by (Re E, Im E) and classify
    each level by the symmetry of its orbit. Per-level failures become the record status.
    """
    n_ranges = n_ranges or {}
    by_label = {aa.label: aa for aa in families}
    per_family = parallel_map(lambda f: quantize_family(model, f, n_ranges.get(f.label), scan_points, tol, max_iter),
                              families, workers)

    records = sort_records(deduplicate([aa for bb in per_family for aa in bb], dedup_tol))
    flag_crossover(records, by_label)

    def classify(idx):
        record = records[idx]
        if not record.converged or record.orbit_class == DEGENERATE:
            return record.orbit_class, None, record.message
        try:
            return (*classify_orbit(model, record, records, by_label, classify_tol, count), '')
        except OrbitraceError as e:
            return UNPAIRED, None, e.message

    for idx, (orbit_class, partner, message) in enumerate(parallel_map(classify, range(len(records)), workers,
                                                                       progress)):
        records[idx].orbit_class, records[idx].partner = orbit_class, partner
        if message and records[idx].converged:
            records[idx].message = message
    return records


def greens_trace(model, family, E, pole_tol=1e-12):
    """Single-family trace G(E) = iT e^{iφ} / (1 - e^{iφ}) with φ = W(E) - 2πμ."""
    W, T = action_and_period(model, family, E)
    phase = np.exp(1j * (W - 2 * np.pi * family.mu))
    denominator = 1 - phase
    if abs(denominator) < pole_tol:
        raise PoleProximity('The energy sits on a pole of the trace.', family=family.label, energy=complex(E),
                            denominator=abs(denominator))
    return complex(1j * T * phase / denominator)


def check_dichotomy(records, reality_tol=1e-8):
    """
    Every converged, non-degenerate level outside the crossover window is either self-symmetric and real, or has a
    conjugate partner. Return the list of violations as (record index, reason).
    """
    violations = []
    for idx, record in enumerate(records):
        if not record.converged or record.crossover or record.orbit_class == DEGENERATE:
            continue
        E = record.E_semiclassical
        if record.orbit_class == SELF_SYMMETRIC:
            if abs(E.imag) >= reality_tol:
                violations.append((idx, f'self-symmetric level with Im E = {E.imag:.3e}'))
        elif record.orbit_class == PAIR_MEMBER:
            partner = records[record.partner]
            if abs(E - np.conj(partner.E_semiclassical)) >= reality_tol:
                violations.append((idx, 'partner energy is not conjugate'))
        else:
            violations.append((idx, f'orbit class {record.orbit_class}'))
    return violations
