import numpy as np
import pytest

from modules.integrator import (TimeContour, cyclic_shifts, integrate, orbit_action, orbit_distance, orbit_image,
                                subsample)
from modules.models import PhasePoint, build_model
from utils.errors import BlowUp, SampleMismatch


def test_contour_times():
    contour = TimeContour(np.pi, (np.pi / 2 + 0.3j,))
    times = contour.times(100)
    assert len(times) == 101
    assert times[0] == 0 and times[-1] == pytest.approx(np.pi)
    assert np.isclose(times, np.pi / 2 + 0.3j).any()


def test_conjugate_contour():
    contour = TimeContour(2 + 1j, (0.5 + 1j, 1.5 + 1j))
    conjugate = contour.conjugate()
    assert conjugate.T == 2 - 1j
    np.testing.assert_allclose(conjugate.vertices, [0.5 + 0j, 1.5 + 0j])


def test_oscillator_half_period(oscillator):
    orbit = integrate(oscillator, PhasePoint(1., 0.), TimeContour(np.pi / 2), steps=1024)
    # x = cos 2t
    assert orbit.x[-1] == pytest.approx(-1., abs=1e-9)
    assert orbit.drift < 1e-10


@pytest.mark.parametrize('vertices', [(), (np.pi / 2 + 0.3j,), (0.4j, np.pi + 0.4j)])
def test_oscillator_closes_on_deformed_contours(oscillator, vertices):
    orbit = integrate(oscillator, PhasePoint(1., 0.), TimeContour(np.pi, vertices), steps=2048)
    assert orbit.closure_error() < 1e-8
    assert orbit.drift < 1e-9
    # ∮p dx = πE/ω
    assert orbit_action(orbit) == pytest.approx(np.pi, abs=1e-8)


def test_skin_orbit_crosses_cusp(skin):
    # (p + iγ)² + |x| = 3, the confined orbit reaches x = ±3 and has T = 4√E / V0
    E = 3.
    orbit = integrate(skin, PhasePoint(0., np.sqrt(E) - 0.5j), TimeContour(4 * np.sqrt(E)), steps=2048)
    assert orbit.closure_error() < 1e-6
    assert np.abs(orbit.x).max() == pytest.approx(3., abs=1e-4)
    assert orbit.drift < 1e-9


def test_blow_up(oscillator):
    with pytest.raises(BlowUp) as error:
        integrate(oscillator, PhasePoint(1., 0.), TimeContour(np.pi), steps=64, bound=0.5)
    assert error.value.diagnostics['step'] == 1


def test_too_few_steps(oscillator):
    with pytest.raises(AssertionError):
        integrate(oscillator, PhasePoint(1., 0.), TimeContour(np.pi), steps=8)


def test_real_orbit_is_its_own_image(oscillator):
    orbit = integrate(oscillator, PhasePoint(1., 0.), TimeContour(np.pi), steps=512)
    image = orbit_image(oscillator, orbit)
    assert image.energy == pytest.approx(np.conj(orbit.energy))
    assert orbit_distance(orbit, image) < 1e-8


def test_image_is_an_involution(double_well):
    orbit = integrate(double_well, PhasePoint(-2. + 0.3j, 0.5), TimeContour(0.7 - 0.1j), steps=256)
    twice = orbit_image(double_well, orbit_image(double_well, orbit))
    np.testing.assert_allclose(twice.x, orbit.x)
    np.testing.assert_allclose(twice.p, orbit.p)
    np.testing.assert_allclose(twice.t, orbit.t, atol=1e-14)


def test_distance_needs_equal_sampling(oscillator):
    a = integrate(oscillator, PhasePoint(1., 0.), TimeContour(np.pi), steps=64)
    b = integrate(oscillator, PhasePoint(1., 0.), TimeContour(np.pi), steps=128)
    with pytest.raises(SampleMismatch):
        orbit_distance(a, b)


def test_distance_ignores_phase(oscillator):
    a = integrate(oscillator, PhasePoint(1., 0.), TimeContour(np.pi), steps=1024)
    b = integrate(oscillator, PhasePoint(a.x[256], a.p[256]), TimeContour(np.pi), steps=1024)
    assert orbit_distance(a, b) < 1e-9


@pytest.mark.parametrize('model_id, params, start', [('HO', {'omega': 1.3}, PhasePoint(1. + 0.2j, 0.5j)),
                                                     ('H3', {'g': 0.5, 'a': 2., 'Gamma': 4.},
                                                      PhasePoint(-2. + 0.1j, 1. - 0.5j))])
def test_rk4_is_fourth_order(model_id, params, start):
    model = build_model(model_id, **params)
    ends = []
    for steps in (32, 64, 128):
        orbit = integrate(model, start, TimeContour(0.4 + 0.1j), steps=steps)
        ends.append(np.array([orbit.x[-1], orbit.p[-1]]))
    order = np.log2(np.linalg.norm(ends[0] - ends[1]) / np.linalg.norm(ends[1] - ends[2]))
    assert order >= 3.9


def test_distance_matches_shifted_loop(double_well):
    orbit = integrate(double_well, PhasePoint(-2. + 0.1j, 1. - 0.5j), TimeContour(0.8), steps=200)
    other = orbit_image(double_well, orbit)
    looped = min(np.hypot(np.abs(orbit.x[:-1] - np.roll(other.x[:-1], -k)),
                          np.abs(orbit.p[:-1] - np.roll(other.p[:-1], -k))).max() for k in range(200))
    assert orbit_distance(orbit, other) == pytest.approx(looped, rel=1e-12)


def test_cyclic_shifts_cover_every_shift():
    rows = np.concatenate(list(cyclic_shifts(150, block=64)))
    values = np.arange(150) ** 2
    assert rows.shape == (150, 150)
    for k in (0, 63, 64, 149):
        np.testing.assert_array_equal(values[rows[k]], np.roll(values, -k))


def test_subsample_keeps_the_closing_sample(oscillator):
    orbit = integrate(oscillator, PhasePoint(1., 0.), TimeContour(np.pi), steps=1024)
    coarse = subsample(orbit, 4)
    assert len(coarse.x) == 257
    assert coarse.x[-1] == orbit.x[-1] and coarse.t[-1] == orbit.t[-1]
