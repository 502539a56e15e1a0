"""
Full polarization control from two reference wavelengths.

Two CW references at adjacent DWDM channels travel with the quantum light.
At the receiver, a cascade of four rotations (fiber squeezers on alternating
s1 / s3 axes) is dithered until both references come back to their
setpoints. Two non-orthogonal, non-parallel references pin down the full
Jones matrix, so the quantum channel is restored as well.
"""
import dataclasses
import logging
import math

import numpy as np

from .exceptions import ConfigurationError, DomainError
from .optics import QUANTUM_CHANNEL_NM
from .polarization import (D, H, JonesMatrix, overlap_probability, rotate,
                           rotation_entries)

logger = logging.getLogger(__name__)

REFERENCE_1_NM = 1545.32
REFERENCE_2_NM = 1546.92
COMPENSATOR_AXES = ((1, 0, 0), (0, 0, 1), (1, 0, 0), (0, 0, 1))
DEGENERACY_TOLERANCE = 1e-6


def wrap_angle(angle):
    """Wrap ``angle`` into (-pi, pi]."""
    wrapped = math.remainder(angle, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@dataclasses.dataclass(frozen=True)
class ReferenceChannel:
    """Reference laser: its wavelength, launch SOP and receiver setpoint."""
    wavelength: float
    launched_sop: object = H
    target_sop: object = None

    def __post_init__(self):
        if self.target_sop is None:
            object.__setattr__(self, "target_sop", self.launched_sop)


def default_references():
    return (ReferenceChannel(REFERENCE_1_NM, H),
            ReferenceChannel(REFERENCE_2_NM, D))


def check_reference_pair(refs):
    """
    Raise ConfigurationError unless ``refs`` can fix a full Jones matrix.

    The launched pair must be neither parallel nor orthogonal, and the
    target pair must have the same mutual overlap so that a unitary can
    reach it.
    """
    if len(refs) != 2:
        raise ConfigurationError(
            f"Full control needs exactly two references, got {len(refs)}")
    first, second = refs
    launched = overlap_probability(first.launched_sop, second.launched_sop)
    if not DEGENERACY_TOLERANCE < launched < 1 - DEGENERACY_TOLERANCE:
        raise ConfigurationError(
            "Reference SOPs are parallel or orthogonal "
            f"(overlap {launched:.6g}); full control is underdetermined")
    target = overlap_probability(first.target_sop, second.target_sop)
    if abs(target - launched) > DEGENERACY_TOLERANCE:
        raise ConfigurationError(
            f"Reference setpoints have overlap {target:.6g} but launched "
            f"SOPs have {launched:.6g}; no unitary reaches them")


@dataclasses.dataclass(frozen=True)
class CompensatorState:
    """
    Four compensator angles plus the SPGD loop constants.

    Parameters
    ----------
    angles : tuple of 4 floats
        Rotation angles in radians, wrapped to (-pi, pi].
    gain : float, optional
        SPGD gain.
    dither_amplitude : float, optional
        Probe amplitude in radians.
    """
    angles: tuple = (0.0, 0.0, 0.0, 0.0)
    gain: float = 40.0
    dither_amplitude: float = 0.05

    def __post_init__(self):
        angles = tuple(wrap_angle(float(a)) for a in self.angles)
        if len(angles) != len(COMPENSATOR_AXES):
            raise ConfigurationError(
                f"Compensator needs {len(COMPENSATOR_AXES)} angles, "
                f"got {len(angles)}")
        object.__setattr__(self, "angles", angles)

    @classmethod
    def random(cls, rng, gain=40.0, dither_amplitude=0.05):
        angles = rng.uniform(-math.pi, math.pi, size=len(COMPENSATOR_AXES))
        return cls(tuple(angles), gain, dither_amplitude)

    def with_angles(self, angles):
        return dataclasses.replace(self, angles=tuple(angles))


def _cascade(angles):
    """Cascade product for ``angles``; the first factor acts first."""
    (a, b), (c, d) = (1 + 0j, 0j), (0j, 1 + 0j)
    for axis, angle in zip(COMPENSATOR_AXES, angles):
        (p, q), (r, s) = rotation_entries(axis, angle)
        (a, b), (c, d) = ((p * a + q * c, p * b + q * d),
                          (r * a + s * c, r * b + s * d))
    return (a, b), (c, d)


def compensator_matrix(comp):
    """Unitary of the cascade; the first angle acts first on the light."""
    return JonesMatrix(np.array(_cascade(comp.angles)))


def apply_compensator(comp, s):
    return rotate(compensator_matrix(comp), s)


def _link_matrix(link, wavelength):
    # FiberLink carries wavelength dependence; a bare Jones matrix does not
    if hasattr(link, "matrix_at"):
        return link.matrix_at(wavelength)
    return link


def _arrivals(link, refs):
    """Each reference as it reaches the compensator, with its setpoint."""
    return [(rotate(_link_matrix(link, ref.wavelength), ref.launched_sop),
             ref.target_sop) for ref in refs]


def _misalignment(arrivals, angles):
    (a, b), (c, d) = _cascade(angles)
    total = 0.0
    for s, target in arrivals:
        out_h = a * s.h + b * s.v
        out_v = c * s.h + d * s.v
        amplitude = (target.h.conjugate() * out_h
                     + target.v.conjugate() * out_v)
        total += 1.0 - min(1.0, abs(amplitude) ** 2)
    return total


def _measure(arrivals, angles, rng, measurement_noise):
    total = _misalignment(arrivals, angles)
    if measurement_noise > 0:
        if rng is None:
            raise DomainError("Measurement noise requires an rng")
        total += float(rng.normal(0.0, measurement_noise,
                                  size=len(arrivals)).sum())
    return max(0.0, total)


def error_signal(link_birefringence, comp, refs, rng=None,
                 measurement_noise=0.0):
    """
    Misalignment of both references after link and compensator.

    Parameters
    ----------
    link_birefringence : JonesMatrix or FiberLink
        The link transformation; a ``FiberLink`` is evaluated at each
        reference wavelength.
    comp : CompensatorState
    refs : pair of ReferenceChannel
    rng : numpy.random.Generator, optional
        Source of measurement noise.
    measurement_noise : float, optional
        Standard deviation of additive Gaussian noise per reference reading.

    Returns
    -------
    float
        ``sum(1 - |<target|C L launched>|^2)``, clipped at 0.
    """
    check_reference_pair(refs)
    return _measure(_arrivals(link_birefringence, refs), comp.angles, rng,
                    measurement_noise)


def control_step(comp, error_fn, rng):
    """
    One SPGD iteration on the compensator angles.

    A random sign pattern ``delta`` of size ``dither_amplitude`` probes the
    error at ``angles +/- delta`` and the angles move by
    ``-gain * (E+ - E-) * delta``. Exactly two calls to ``error_fn``.
    """
    if not comp.dither_amplitude > 0:
        raise DomainError(
            f"Dither amplitude must be > 0, got {comp.dither_amplitude}")
    if not comp.gain > 0:
        raise DomainError(f"Controller gain must be > 0, got {comp.gain}")
    angles = np.array(comp.angles)
    signs = rng.integers(0, 2, size=angles.size) * 2.0 - 1.0
    delta = comp.dither_amplitude * signs
    plus = error_fn(comp.with_angles(angles + delta))
    minus = error_fn(comp.with_angles(angles - delta))
    return comp.with_angles(angles - comp.gain * (plus - minus) * delta)


def quantum_overlap(link, comp, sop, wavelength=QUANTUM_CHANNEL_NM):
    """Overlap of quantum-channel ``sop`` with itself after link and compensator."""
    arriving = rotate(_link_matrix(link, wavelength), sop)
    return overlap_probability(apply_compensator(comp, arriving), sop)


class PolarizationTracker:
    """
    Closed-loop controller for one link.

    Parameters
    ----------
    refs : pair of ReferenceChannel
    rng : numpy.random.Generator
        Dedicated stream for dither patterns and measurement noise.
    state : CompensatorState, optional
    enabled : bool, optional
    measurement_noise : float, optional
    """
    def __init__(self, refs, rng, state=None, enabled=True,
                 measurement_noise=0.0):
        check_reference_pair(refs)
        self.refs = tuple(refs)
        self.rng = rng
        self.state = state or CompensatorState()
        self.enabled = enabled
        self.measurement_noise = measurement_noise

    @property
    def matrix(self):
        return compensator_matrix(self.state)

    def error(self, link):
        return error_signal(link, self.state, self.refs)

    def step(self, link):
        """One control period; a disabled tracker holds its last setting."""
        if not self.enabled:
            return self.state

        arrivals = _arrivals(link, self.refs)

        def measure(comp):
            return _measure(arrivals, comp.angles, self.rng,
                            self.measurement_noise)

        self.state = control_step(self.state, measure, self.rng)
        return self.state
