import math

import numpy as np
import pytest

from faintlink.exceptions import DomainError
from faintlink.polarization import (D, H, RCP, V, JonesVector, compose,
                                    from_stokes, identity, inverse, linear,
                                    overlap_probability, random_unitary,
                                    rotate, rotation, rotation_angle,
                                    to_stokes, unitarize)


def random_state(rng):
    vec = rng.normal(size=2) + 1j * rng.normal(size=2)
    return JonesVector.from_array(vec / np.linalg.norm(vec))


@pytest.mark.parametrize('a,b,expected',
                         ((H, H, 1.0), (H, V, 0.0), (H, D, 0.5),
                          (D, RCP, 0.5)),
                         ids=('parallel', 'orthogonal', 'diagonal',
                              'circular'))
def test_overlap_probability(a, b, expected):
    assert overlap_probability(a, b) == pytest.approx(expected, abs=1e-12)
    assert overlap_probability(b, a) == pytest.approx(expected, abs=1e-12)


def test_overlap_ignores_global_phase(rng):
    a, b = random_state(rng), random_state(rng)
    phase = complex(math.cos(1.234), math.sin(1.234))
    shifted = JonesVector(a.h * phase, a.v * phase)
    assert overlap_probability(shifted, b) == pytest.approx(
        overlap_probability(a, b), abs=1e-12)


def test_overlap_rejects_unnormalized():
    with pytest.raises(DomainError):
        overlap_probability(JonesVector(1.0, 1.0), H)


def test_rotate_identity(rng):
    s = random_state(rng)
    out = rotate(identity(), s)
    assert abs(out.h - s.h) < 1e-12 and abs(out.v - s.v) < 1e-12


def test_quarter_turn_twice_maps_h_to_v():
    quarter = rotation((0, 0, 1), math.pi / 2)
    out = rotate(quarter, rotate(quarter, H))
    assert overlap_probability(out, V) == pytest.approx(1.0, abs=1e-12)


def test_overlap_preserved_by_common_unitary(rng):
    for _ in range(200):
        a, b = random_state(rng), random_state(rng)
        u = random_unitary(rng, 2.0)
        assert overlap_probability(u @ a, u @ b) == pytest.approx(
            overlap_probability(a, b), abs=1e-10)


def test_stokes_overlap_identity(rng):
    for _ in range(200):
        a, b = random_state(rng), random_state(rng)
        expected = (1 + to_stokes(a).dot(to_stokes(b))) / 2
        assert overlap_probability(a, b) == pytest.approx(expected,
                                                          abs=1e-10)


@pytest.mark.parametrize('state,stokes',
                         ((H, (1, 0, 0)), (V, (-1, 0, 0)), (D, (0, 1, 0)),
                          (RCP, (0, 0, 1))),
                         ids=('H', 'V', 'D', 'RCP'))
def test_stokes_convention(state, stokes):
    assert np.allclose(to_stokes(state).as_array(), stokes, atol=1e-12)


def test_stokes_of_pure_states_are_unit(rng):
    for _ in range(100):
        assert to_stokes(random_state(rng)).norm == pytest.approx(
            1.0, abs=1e-10)


def test_from_stokes_inverts_to_stokes(rng):
    for _ in range(50):
        s = random_state(rng)
        back = from_stokes(to_stokes(s))
        assert overlap_probability(back, s) == pytest.approx(1.0, abs=1e-10)


def test_compose_with_inverse_is_identity(rng):
    m = random_unitary(rng, 1.5)
    assert compose(m, inverse(m)).allclose(identity(), tol=1e-10)


def test_compose_is_associative(rng):
    a, b, c = (random_unitary(rng, 1.0) for _ in range(3))
    assert compose(compose(a, b), c).allclose(compose(a, compose(b, c)),
                                              tol=1e-12)


def test_random_unitary_zero_scale_is_identity(rng):
    state = rng.bit_generator.state
    assert random_unitary(rng, 0.0).allclose(identity(), tol=0.0)
    # no random numbers were consumed
    assert rng.bit_generator.state == state


def test_random_unitary_negative_scale():
    with pytest.raises(DomainError):
        random_unitary(np.random.default_rng(0), -0.1)


def test_random_unitary_small_scale_is_close_to_identity(rng):
    for eps in (1e-2, 1e-4, 1e-6):
        m = random_unitary(rng, eps)
        assert np.max(np.abs(m.data - identity().data)) < 10 * eps


def test_random_unitary_is_unitary(rng):
    for scale in np.linspace(0.0, 2 * math.pi, 10_000):
        assert random_unitary(rng, scale).is_unitary(1e-10)


def test_random_unitary_covers_sphere(rng):
    total = np.zeros(3)
    n = 100_000
    for _ in range(n):
        total += to_stokes(random_unitary(rng, math.pi) @ H).as_array()
    assert np.linalg.norm(total / n) < 0.05


def test_linear_states():
    assert overlap_probability(linear(0.0), H) == pytest.approx(1.0)
    assert overlap_probability(linear(math.pi / 4), D) == pytest.approx(1.0)
    assert overlap_probability(linear(math.pi / 2), V) == pytest.approx(1.0)


def test_rotation_angle_and_unitarize(rng):
    m = rotation((0.3, -0.2, 0.9), 0.7)
    assert rotation_angle(m) == pytest.approx(0.7, abs=1e-10)
    noisy = type(m)(m.data * 1.001)
    assert not noisy.is_unitary(1e-6)
    assert unitarize(noisy).allclose(m, tol=1e-9)


def test_normalize_zero_vector():
    with pytest.raises(DomainError):
        JonesVector(0j, 0j).normalize()
