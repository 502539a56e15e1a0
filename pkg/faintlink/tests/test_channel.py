import math

import numpy as np
import pytest

from faintlink.channel import (UNITARIZE_EVERY, FiberLink,
                               PerturbationSchedule, drift, drift_step,
                               propagate)
from faintlink.exceptions import ConfigurationError, DomainError
from faintlink.polarization import (H, identity, overlap_probability,
                                    random_unitary, rotation_angle,
                                    to_stokes)


@pytest.fixture(scope='function')
def link():
    return FiberLink(length=8.5)


def test_transmission(link):
    assert link.transmission == pytest.approx(0.676, abs=1e-3)
    assert FiberLink(length=8.5, attenuation=0.0).transmission == 1.0


def test_delay(link):
    assert link.delay == pytest.approx(41.6e-6, rel=1e-3)


@pytest.mark.parametrize('kwargs',
                         ({'length': 0.0}, {'length': 1.0, 'attenuation': -1},
                          {'length': 1.0, 'drift_rate': -0.1}),
                         ids=('length', 'attenuation', 'drift_rate'))
def test_link_validation(kwargs):
    with pytest.raises(ConfigurationError):
        FiberLink(**kwargs)


def test_propagate(link, rng):
    lossless = FiberLink(length=1.0, attenuation=0.0)
    sop, mu = propagate(lossless, H, 0.3)
    assert overlap_probability(sop, H) == pytest.approx(1.0)
    assert mu == 0.3
    twisted = drift_step(link, 1.0, 10.0, rng)
    sop, mu = propagate(twisted, H, 1.0)
    assert mu == pytest.approx(link.transmission)
    assert sop.norm == pytest.approx(1.0)
    with pytest.raises(DomainError):
        propagate(link, H, -1.0)


def test_zero_level_leaves_link_alone(link, rng):
    state = rng.bit_generator.state
    assert drift_step(link, 0.01, 0.0, rng) is link
    assert rng.bit_generator.state == state


def test_drift_step_returns_new_link(link, rng):
    moved = drift_step(link, 0.01, 1.0, rng)
    assert moved is not link
    assert link.birefringence.allclose(identity(), tol=0.0)
    assert not moved.birefringence.allclose(identity(), tol=1e-6)


def test_drift_step_domain(link, rng):
    with pytest.raises(DomainError):
        drift_step(link, 0.0, 1.0, rng)
    with pytest.raises(DomainError):
        drift_step(link, 0.01, -1.0, rng)


def test_drift_stays_unitary(link, rng):
    for _ in range(10_000):
        link = drift_step(link, 0.01, 1.0, rng)
    assert link.birefringence.is_unitary(1e-8)


def test_drift_counts_steps(link, rng):
    for _ in range(UNITARIZE_EVERY + 3):
        link = drift_step(link, 0.01, 1.0, rng)
    assert link.drift_steps == UNITARIZE_EVERY + 3
    assert link.birefringence.is_unitary(1e-12)
    assert link == FiberLink(length=8.5, birefringence=link.birefringence)


@pytest.mark.parametrize('dt', (0.0, -0.5), ids=('zero', 'negative'))
def test_drift_rejects_bad_step(link, rng, dt):
    with pytest.raises(DomainError):
        drift(link, 10.0, dt, PerturbationSchedule.constant(), rng)


@pytest.mark.parametrize('n_steps', (4, 16))
def test_drift_spreads_as_sqrt_time(n_steps, rng):
    dt = 0.01
    link = FiberLink(length=1.0, drift_rate=0.1)
    angles = []
    for _ in range(1000):
        moved = link
        for _ in range(n_steps):
            moved = drift_step(moved, dt, 1.0, rng)
        angles.append(rotation_angle(moved.birefringence))
    rms = math.sqrt(np.mean(np.square(angles)))
    assert rms == pytest.approx(0.1 * math.sqrt(n_steps * dt), rel=0.05)


def test_long_drift_randomizes_polarization(rng):
    link = FiberLink(length=1.0, drift_rate=1.0)
    stokes = []
    for _ in range(500):
        moved = drift(link, 30.0, 1.0, PerturbationSchedule.constant(), rng)
        stokes.append(to_stokes(moved.birefringence @ H).as_array())
    stokes = np.array(stokes)
    assert np.all(np.abs(stokes.mean(axis=0)) < 0.1)
    overlaps = (1 + stokes[:, 0]) / 2
    assert overlaps.mean() == pytest.approx(0.5, abs=0.05)


def test_drift_follows_schedule(link, rng):
    quiet = PerturbationSchedule(((0.0, 0.0), (10.0, 1.0)))
    assert drift(link, 5.0, 0.5, quiet, rng) is link
    moved = drift(link, 5.0, 0.5, quiet, rng, t0=8.0)
    assert moved is not link


def test_schedule_levels():
    schedule = PerturbationSchedule(((0.0, 1.0), (60.0, 0.0), (120.0, 3.0)))
    assert schedule.level_at(-1.0) == 1.0
    assert schedule.level_at(30.0) == 1.0
    assert schedule.level_at(60.0) == 0.0
    assert schedule.level_at(500.0) == 3.0
    assert PerturbationSchedule.constant(2.0).level_at(1e6) == 2.0


@pytest.mark.parametrize('breakpoints',
                         ((), ((10.0, 1.0), (0.0, 1.0)), ((0.0, -1.0),)),
                         ids=('empty', 'unsorted', 'negative'))
def test_schedule_validation(breakpoints):
    with pytest.raises(ConfigurationError):
        PerturbationSchedule(breakpoints)


def test_wavelength_dependent_rotation(rng):
    birefringence = random_unitary(rng, 1.0)
    link = FiberLink(length=1.0, birefringence=birefringence,
                     differential_rotation=0.1)
    assert link.matrix_at(1546.12) is birefringence
    detuned = link.matrix_at(1545.32)
    assert detuned.is_unitary(1e-10)
    assert not detuned.allclose(birefringence, tol=1e-3)
    flat = FiberLink(length=1.0, birefringence=birefringence)
    assert flat.matrix_at(1545.32) is birefringence


def test_snapshot_is_independent(link, rng):
    copy = link.snapshot()
    copy.drift_rate = 1.0
    assert link.drift_rate != 1.0
