import math

import numpy as np
import pytest

from faintlink.channel import FiberLink, drift_step
from faintlink.control import (COMPENSATOR_AXES, CompensatorState,
                               PolarizationTracker, ReferenceChannel,
                               apply_compensator, check_reference_pair,
                               compensator_matrix, control_step,
                               default_references, error_signal,
                               quantum_overlap, wrap_angle)
from faintlink.exceptions import ConfigurationError, DomainError
from faintlink.polarization import (A, D, H, RCP, V, JonesVector, compose,
                                    identity, linear, overlap_probability,
                                    random_unitary, rotation)

START = (0.7, 1.1, -0.4, 0.9)


def aligned_link(comp):
    """Link whose birefringence the compensator ``comp`` exactly undoes."""
    return FiberLink(length=8.5,
                     birefringence=compensator_matrix(comp).dagger)


def converge(link, comp, refs, rng, steps=500):
    for _ in range(steps):
        comp = control_step(comp,
                            lambda c: error_signal(link, c, refs), rng)
    return comp


@pytest.mark.parametrize('angle,expected',
                         ((0.0, 0.0), (7.0, 7.0 - 2 * math.pi),
                          (-math.pi, math.pi), (-3.0, -3.0)),
                         ids=('zero', 'above_pi', 'minus_pi', 'inside'))
def test_wrap_angle(angle, expected):
    assert wrap_angle(angle) == pytest.approx(expected)


def test_compensator_state_wraps_and_validates():
    comp = CompensatorState((4 * math.pi, 0.0, 0.0, 0.0))
    assert comp.angles[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigurationError):
        CompensatorState((0.0, 0.0))


def test_compensator_order():
    comp = CompensatorState((math.pi / 2, math.pi / 2, 0.0, 0.0))
    expected = compose(rotation((0, 0, 1), math.pi / 2),
                       rotation((1, 0, 0), math.pi / 2))
    assert compensator_matrix(comp).allclose(expected)


def test_compensator_matches_rotation_cascade(rng):
    for _ in range(20):
        comp = CompensatorState.random(rng)
        expected = identity()
        for axis, angle in zip(COMPENSATOR_AXES, comp.angles):
            expected = compose(rotation(axis, angle), expected)
        assert compensator_matrix(comp).allclose(expected, tol=1e-12)
        assert compensator_matrix(comp).is_unitary(1e-12)


def test_error_signal_sums_reference_misalignment(rng):
    refs = default_references()
    for _ in range(20):
        comp = CompensatorState.random(rng)
        link = random_unitary(rng, math.pi)
        expected = sum(
            1 - overlap_probability(
                apply_compensator(comp, link @ ref.launched_sop),
                ref.target_sop)
            for ref in refs)
        assert error_signal(link, comp, refs) == pytest.approx(expected,
                                                               abs=1e-12)


def test_zero_compensator_is_identity(rng):
    assert compensator_matrix(CompensatorState()).allclose(identity())
    out = apply_compensator(CompensatorState(), D)
    assert overlap_probability(out, D) == pytest.approx(1.0)


def test_error_signal_vanishes_when_aligned():
    comp = CompensatorState(START)
    link = aligned_link(comp)
    assert error_signal(link, comp, default_references()) == pytest.approx(
        0.0, abs=1e-10)
    assert error_signal(identity(), CompensatorState(),
                        default_references()) == pytest.approx(0.0,
                                                               abs=1e-12)


def test_error_signal_sees_rotation():
    twisted = rotation((0, 0, 1), math.pi / 2)
    assert error_signal(twisted, CompensatorState(),
                        default_references()) > 0.5


@pytest.mark.parametrize('pair', ((H, V), (H, H), (D, A)),
                         ids=('orthogonal', 'parallel', 'diagonal_pair'))
def test_degenerate_references(pair):
    refs = (ReferenceChannel(1545.32, pair[0]),
            ReferenceChannel(1546.92, pair[1]))
    with pytest.raises(ConfigurationError):
        check_reference_pair(refs)
    with pytest.raises(ConfigurationError):
        error_signal(identity(), CompensatorState(), refs)


def test_unreachable_setpoints():
    refs = (ReferenceChannel(1545.32, H),
            ReferenceChannel(1546.92, D, target_sop=linear(0.1)))
    with pytest.raises(ConfigurationError):
        check_reference_pair(refs)


def test_circular_reference_pair_is_valid():
    check_reference_pair((ReferenceChannel(1545.32, H),
                          ReferenceChannel(1546.92, RCP)))


def test_measurement_noise_requires_rng():
    with pytest.raises(DomainError):
        error_signal(identity(), CompensatorState(), default_references(),
                     measurement_noise=0.01)


def test_measurement_noise_is_clipped(rng):
    for _ in range(100):
        value = error_signal(identity(), CompensatorState(),
                             default_references(), rng=rng,
                             measurement_noise=0.1)
        assert value >= 0.0


def test_control_step_evaluates_twice(rng):
    calls = []

    def error_fn(comp):
        calls.append(comp)
        return 0.0

    comp = CompensatorState(START)
    out = control_step(comp, error_fn, rng)
    assert len(calls) == 2
    assert out.angles == pytest.approx(comp.angles)
    offsets = np.subtract(calls[0].angles, comp.angles)
    assert np.allclose(np.abs(offsets), comp.dither_amplitude)


def test_control_step_at_optimum_barely_moves(rng):
    comp = CompensatorState(START)
    link = aligned_link(comp)
    refs = default_references()
    out = control_step(comp, lambda c: error_signal(link, c, refs), rng)
    moved = np.abs(np.subtract(out.angles, comp.angles))
    assert np.all(moved <= comp.dither_amplitude)


@pytest.mark.parametrize('kwargs', ({'gain': 0.0},
                                    {'dither_amplitude': 0.0}),
                         ids=('gain', 'dither'))
def test_control_step_domain(kwargs, rng):
    comp = CompensatorState(**kwargs)
    with pytest.raises(DomainError):
        control_step(comp, lambda c: 0.0, rng)


def _convergence_fraction(rng, trials):
    refs = default_references()
    converged = 0
    for _ in range(trials):
        link = FiberLink(length=8.5,
                         birefringence=random_unitary(rng, math.pi))
        comp = converge(link, CompensatorState.random(rng), refs, rng)
        converged += error_signal(link, comp, refs) < 1e-3
    return converged / trials


def test_spgd_converges(rng):
    assert _convergence_fraction(rng, 20) >= 0.9


@pytest.mark.slow
def test_spgd_converges_reliably(rng):
    assert _convergence_fraction(rng, 100) >= 0.95


def test_converged_references_restore_quantum_channel(rng):
    refs = default_references()
    for _ in range(3):
        link = FiberLink(length=8.5,
                         birefringence=random_unitary(rng, math.pi))
        comp = converge(link, CompensatorState.random(rng), refs, rng)
        if error_signal(link, comp, refs) < 1e-4:
            for sop in (H, V, D, RCP, linear(0.3)):
                assert quantum_overlap(link, comp, sop) > 0.999


def test_small_reference_error_bounds_any_sop(rng):
    refs = default_references()
    checked = 0
    for _ in range(1000):
        comp = CompensatorState.random(rng)
        residual = random_unitary(rng, 10 ** rng.uniform(-5, -2))
        link = compose(compensator_matrix(comp).dagger, residual)
        if error_signal(link, comp, refs) >= 1e-6:
            continue
        checked += 1
        for _ in range(20):
            vec = rng.normal(size=2) + 1j * rng.normal(size=2)
            sop = JonesVector.from_array(vec / np.linalg.norm(vec))
            assert quantum_overlap(link, comp, sop) >= 1 - 1e-5
    assert checked > 100


def test_tracker_follows_drift(rng):
    comp = CompensatorState(START)
    link = aligned_link(comp)
    tracker = PolarizationTracker(default_references(), rng, state=comp)
    overlaps = []
    for _ in range(3000):
        link = drift_step(link, 0.01, 1.0, rng)
        tracker.step(link)
        overlaps.append(quantum_overlap(link, tracker.state, H))
    assert np.mean(overlaps) >= 0.98


def test_disabled_tracker_leaves_drift_untouched():
    drift_rng = np.random.default_rng(5)
    reference_rng = np.random.default_rng(5)
    tracker = PolarizationTracker(default_references(),
                                  np.random.default_rng(9),
                                  state=CompensatorState(START),
                                  enabled=False)
    controlled = free = FiberLink(length=8.5)
    for _ in range(200):
        controlled = drift_step(controlled, 0.01, 1.0, drift_rng)
        assert tracker.step(controlled) == CompensatorState(START)
        free = drift_step(free, 0.01, 1.0, reference_rng)
    assert np.array_equal(controlled.birefringence.data,
                          free.birefringence.data)
    assert tracker.error(controlled) > 0


def test_tracker_matrix(rng):
    tracker = PolarizationTracker(default_references(), rng,
                                  state=CompensatorState(START))
    assert tracker.matrix.allclose(compensator_matrix(CompensatorState(START)))
