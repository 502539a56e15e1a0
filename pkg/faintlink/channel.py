"""
Fiber links between each laser and the beamsplitter.

A link attenuates, delays and rotates the polarization of the light it
carries. The rotation wanders as an isotropic random walk on the Poincare
sphere, scaled by a piecewise-constant perturbation level that stands in
for the forced temperature changes of the fiber spools.
"""
import bisect
import dataclasses
import logging
import math

from .exceptions import ConfigurationError, DomainError
from .optics import QUANTUM_CHANNEL_NM, SPEED_OF_LIGHT
from .polarization import (compose, identity, random_unitary, rotate,
                           rotation, unitarize)

logger = logging.getLogger(__name__)

DEFAULT_DRIFT_RATE = 0.13
DEFAULT_GROUP_INDEX = 1.468
UNITARIZE_EVERY = 256


@dataclasses.dataclass
class FiberLink:
    """
    Single-mode fiber spool with a drifting birefringence.

    Parameters
    ----------
    length : float
        Length in km.
    attenuation : float, optional
        Loss in dB/km.
    birefringence : JonesMatrix, optional
        Current Jones matrix of the link at the quantum wavelength.
    drift_rate : float, optional
        RMS Poincare rotation per sqrt(second) at perturbation level 1.
    refractive_group_index : float, optional
        Group index used for the propagation delay.
    differential_rotation : float, optional
        Extra rotation about s1 per nm of detuning from the quantum
        channel, in rad/nm. Zero makes the link wavelength independent.
    """
    length: float
    attenuation: float = 0.2
    birefringence: object = dataclasses.field(default_factory=identity)
    drift_rate: float = DEFAULT_DRIFT_RATE
    refractive_group_index: float = DEFAULT_GROUP_INDEX
    differential_rotation: float = 0.0
    drift_steps: int = dataclasses.field(default=0, repr=False, compare=False)

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigurationError(
                f"Fiber length must be > 0 km, got {self.length}")
        if self.attenuation < 0:
            raise ConfigurationError(
                f"Fiber attenuation must be >= 0 dB/km, got {self.attenuation}")
        if self.drift_rate < 0:
            raise ConfigurationError(
                f"Drift rate must be >= 0 rad/sqrt(s), got {self.drift_rate}")
        if not self.birefringence.is_unitary(1e-8):
            raise ConfigurationError("Link birefringence must be unitary")

    @property
    def transmission(self):
        """Power transmission 10^(-attenuation * length / 10)."""
        return 10 ** (-self.attenuation * self.length / 10)

    @property
    def delay(self):
        """One-way group delay in seconds."""
        return self.length * 1e3 * self.refractive_group_index / SPEED_OF_LIGHT

    def matrix_at(self, wavelength, reference=QUANTUM_CHANNEL_NM):
        """Jones matrix seen by light at ``wavelength`` nm."""
        detuning = wavelength - reference
        if self.differential_rotation == 0 or detuning == 0:
            return self.birefringence
        extra = rotation((1, 0, 0), self.differential_rotation * detuning)
        return compose(extra, self.birefringence)

    def snapshot(self):
        """Independent value copy of the link."""
        return dataclasses.replace(self)


@dataclasses.dataclass(frozen=True)
class PerturbationSchedule:
    """
    Piecewise-constant multiplier on the drift rate.

    ``breakpoints`` holds ``(start_time, level)`` pairs sorted by time; the
    level before the first breakpoint is that of the first one.
    """
    breakpoints: tuple = ((0.0, 1.0),)

    def __post_init__(self):
        points = tuple((float(t), float(level))
                       for t, level in self.breakpoints)
        if not points:
            raise ConfigurationError("Perturbation schedule is empty")
        times = [t for t, _ in points]
        if times != sorted(times):
            raise ConfigurationError(
                f"Perturbation breakpoints must be sorted, got {times}")
        for t, level in points:
            if level < 0:
                raise ConfigurationError(
                    f"Perturbation level at t={t} s must be >= 0, got {level}")
        object.__setattr__(self, "breakpoints", points)

    @classmethod
    def constant(cls, level=1.0):
        return cls(((0.0, level),))

    def level_at(self, t):
        times = [start for start, _ in self.breakpoints]
        index = max(0, bisect.bisect_right(times, t) - 1)
        return self.breakpoints[index][1]


def drift_step(link, dt, level, rng):
    """
    Advance the birefringence of ``link`` by one random rotation.

    The rotation has RMS angle ``drift_rate * level * sqrt(dt)``. Every
    ``UNITARIZE_EVERY`` steps the accumulated product is projected back
    onto the unitary group.

    Returns
    -------
    FiberLink
        A new link; ``link`` itself is untouched. ``level = 0`` returns
        ``link`` without drawing random numbers.
    """
    if not dt > 0:
        raise DomainError(f"Drift step must be > 0 s, got {dt}")
    if level < 0:
        raise DomainError(f"Perturbation level must be >= 0, got {level}")
    scale = link.drift_rate * level * math.sqrt(dt)
    if scale == 0:
        return link
    birefringence = compose(random_unitary(rng, scale), link.birefringence)
    steps = link.drift_steps + 1
    if steps % UNITARIZE_EVERY == 0:
        birefringence = unitarize(birefringence)
    return dataclasses.replace(link, birefringence=birefringence,
                               drift_steps=steps)


def drift(link, duration, dt, schedule, rng, t0=0.0):
    """Drift ``link`` for ``duration`` seconds in steps of ``dt``."""
    if not dt > 0:
        raise DomainError(f"Drift step must be > 0 s, got {dt}")
    if duration < 0:
        raise DomainError(f"Drift duration must be >= 0 s, got {duration}")
    n_steps = int(round(duration / dt))
    for i in range(n_steps):
        link = drift_step(link, dt, schedule.level_at(t0 + i * dt), rng)
    return link


def propagate(link, s, mu):
    """
    Send a state of polarization and mean photon number through ``link``.

    Returns
    -------
    (JonesVector, float)
        Rotated SOP and attenuated mean photon number.
    """
    if mu < 0:
        raise DomainError(f"Mean photon number must be >= 0, got {mu}")
    return rotate(link.birefringence, s), mu * link.transmission
