"""
Source models, beamsplitter interference and closed-form predictors.

Lasers are weak coherent states with Lorentzian lines: the optical phase is
a Wiener process whose increments over ``dt`` have variance
``2 pi linewidth dt``. Two independent lasers therefore have a mutual field
coherence ``exp(-pi (dnu1 + dnu2) |tau|)``, which is the weight that enters
the coincidence dip between gates separated by ``tau``.
"""
import dataclasses
import logging
import math

import numpy as np
import scipy.integrate
import scipy.special

from .exceptions import ConfigurationError, DomainError
from .polarization import H, JonesVector, overlap_probability

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0
QUANTUM_CHANNEL_NM = 1546.12


@dataclasses.dataclass(frozen=True)
class LaserSpec:
    """
    Faint CW laser feeding one input of the beamsplitter.

    Parameters
    ----------
    linewidth : float
        Lorentzian FWHM in Hz; strictly positive.
    wavelength : float, optional
        Vacuum wavelength in nm.
    fm_broadening : float, optional
        Extra effective Lorentzian width in Hz from FM modulation, 0 = off.
    mean_photons_per_gate : float, optional
        Mean photon number per detector gate at launch (mu).
    sop : JonesVector, optional
        Launch state of polarization.
    """
    linewidth: float
    wavelength: float = QUANTUM_CHANNEL_NM
    fm_broadening: float = 0.0
    mean_photons_per_gate: float = 1.0
    sop: JonesVector = H

    def __post_init__(self):
        if not self.linewidth > 0:
            raise ConfigurationError(
                f"Laser linewidth must be > 0 Hz, got {self.linewidth}")
        if self.fm_broadening < 0:
            raise ConfigurationError(
                f"FM broadening must be >= 0 Hz, got {self.fm_broadening}")
        if self.mean_photons_per_gate < 0:
            raise ConfigurationError(
                "Mean photons per gate must be >= 0, got "
                f"{self.mean_photons_per_gate}")
        if abs(self.sop.norm - 1.0) > 1e-6:
            object.__setattr__(self, "sop", self.sop.normalize())

    @property
    def effective_linewidth(self):
        return effective_linewidth(self)

    def check_grid(self, channel_nm, tolerance_nm):
        """Raise if the laser is not tuned to the DWDM ``channel_nm``."""
        if abs(self.wavelength - channel_nm) > tolerance_nm:
            raise ConfigurationError(
                f"Laser at {self.wavelength} nm is outside the "
                f"{channel_nm} nm channel (+/- {tolerance_nm} nm)")


@dataclasses.dataclass(frozen=True)
class FieldSample:
    """
    Semiclassical field of one laser at one instant.

    ``|amplitude|^2`` is the mean photon number delivered to the
    beamsplitter input in one gate; the optical phase is ``phase``.
    """
    amplitude: complex
    phase: float
    sop: JonesVector

    @property
    def intensity(self):
        return abs(self.amplitude) ** 2

    @property
    def jones(self):
        """Complex Jones field (h, v) including amplitude and phase."""
        factor = self.amplitude * complex(math.cos(self.phase),
                                          math.sin(self.phase))
        return factor * self.sop.as_array()

    @classmethod
    def from_jones(cls, field, fallback_sop=H):
        """
        Wrap a Jones field; its phase is folded into the SOP.

        A vanishing field keeps ``fallback_sop`` so the result stays valid.
        """
        field = np.asarray(field, dtype=complex)
        norm = float(np.linalg.norm(field))
        if norm == 0.0:
            return cls(0j, 0.0, fallback_sop)
        return cls(complex(norm), 0.0, JonesVector.from_array(field / norm))


@dataclasses.dataclass(frozen=True)
class OverlapFactors:
    """Polarization and temporal indistinguishability factors."""
    polarization: float
    temporal: float

    def __post_init__(self):
        for name in ("polarization", "temporal"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} overlap must be in [0, 1], "
                                  f"got {value}")

    @property
    def eta(self):
        return self.polarization * self.temporal


def effective_linewidth(laser):
    """Native plus FM-broadened Lorentzian width, in Hz."""
    return laser.linewidth + laser.fm_broadening


def coherence_time(linewidth_sum):
    """1/e time of the mutual field coherence, 1/(pi linewidth_sum)."""
    if linewidth_sum <= 0:
        return math.inf
    return 1.0 / (math.pi * linewidth_sum)


def visibility_from_ratio(R):
    """
    Two-source bunching visibility for an intensity ratio ``R``.

    Weak coherent states give ``2R / (R + 1)**2``, at most 0.5 at R = 1 and
    symmetric under R -> 1/R.
    """
    if R < 0:
        raise DomainError(f"Intensity ratio must be >= 0, got {R}")
    if math.isinf(R):
        return 0.0
    return 2.0 * R / (R + 1.0) ** 2


def visibility_from_counts(c_dist, c_ind):
    """Visibility (C_dist - C_ind) / C_dist from two coincidence ratios."""
    if not c_dist > 0:
        raise DomainError(
            f"Distinguishable coincidence ratio must be > 0, got {c_dist}")
    if c_ind < 0:
        raise DomainError(
            f"Indistinguishable coincidence ratio must be >= 0, got {c_ind}")
    return (c_dist - c_ind) / c_dist


def mutual_coherence(linewidth_sum, tau):
    """|gamma_12(tau)| = exp(-pi linewidth_sum |tau|) for Lorentzian lines."""
    if linewidth_sum < 0:
        raise DomainError(
            f"Linewidth sum must be >= 0 Hz, got {linewidth_sum}")
    return math.exp(-math.pi * linewidth_sum * abs(tau))


def mutual_coherence_sq(linewidth_sum, tau):
    """|gamma_12(tau)|^2 = exp(-2 pi linewidth_sum |tau|)."""
    return mutual_coherence(linewidth_sum, tau) ** 2


def gate_overlap(gate_width, linewidth_sum, tau):
    """
    Gate-averaged mutual coherence between two gates offset by ``tau``.

    Evaluates

        G(tau) = 1/g^2 int_gate1 int_gate2 |gamma_12(t2 - t1)| dt1 dt2

    as a single integral of the gates' triangular cross-correlation against
    the coherence, with ``scipy.integrate.quad``. G -> 1 when the coherence
    time is much longer than the gate, and G -> 0 once ``|tau|`` is many
    coherence times beyond the gate.
    """
    if not gate_width > 0:
        raise DomainError(f"Gate width must be > 0 s, got {gate_width}")
    if linewidth_sum < 0:
        raise DomainError(
            f"Linewidth sum must be >= 0 Hz, got {linewidth_sum}")
    g = float(gate_width)
    rate = math.pi * linewidth_sum

    def integrand(u):
        return (g - abs(u)) * math.exp(-rate * abs(tau - u))

    breaks = [p for p in (0.0, tau) if -g < p < g]
    value, _ = scipy.integrate.quad(integrand, -g, g, points=breaks or None,
                                    limit=200, epsabs=1e-14 * g * g,
                                    epsrel=1e-10)
    return min(1.0, max(0.0, value / (g * g)))


def overlap_factors(sop_a, sop_b, gate_width, linewidth_sum, tau=0.0):
    """Polarization and gate-averaged temporal overlap of two sources."""
    return OverlapFactors(
        polarization=overlap_probability(sop_a, sop_b),
        temporal=gate_overlap(gate_width, linewidth_sum, tau),
    )


def coincidence_ratio_analytic(mu1, mu2, eta):
    """
    Weak-detection coincidence ratio C_ind / C_dist.

    Returns ``1 - 2 mu1 mu2 eta / (mu1 + mu2)**2``; with ``eta = 1`` this is
    ``1 - visibility_from_ratio(mu2 / mu1)``.
    """
    if mu1 < 0 or mu2 < 0:
        raise DomainError(
            f"Mean photon numbers must be >= 0, got {mu1}, {mu2}")
    if mu1 + mu2 == 0:
        raise DomainError("At least one source must emit light")
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"Overlap eta must be in [0, 1], got {eta}")
    return 1.0 - 2.0 * mu1 * mu2 * eta / (mu1 + mu2) ** 2


def triggered_visibility(mu1, mu2, eta, efficiency=1.0):
    """
    Visibility of the triggered threshold-detector scheme, saturation included.

    With ``S`` the mean detected photon number per port and
    ``k = sqrt(eta x1 x2)`` the interference amplitude, phase averaging of
    Poissonian clicks gives

        p      = 1 - exp(-S) I0(k)                  (one port, any delay)
        P(c,d) = 1 - 2 exp(-S) I0(k) + exp(-2 S)    (matched gates)
        V      = 1 - P(c,d) / p^2

    which tends to ``2 R eta / (R + 1)**2`` as ``S -> 0``. Coherence is taken
    as much longer than the gate.
    """
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"Overlap eta must be in [0, 1], got {eta}")
    x1 = efficiency * mu1
    x2 = efficiency * mu2
    if x1 < 0 or x2 < 0 or x1 + x2 == 0:
        raise DomainError(
            f"Detected photon numbers must be >= 0, not both 0: {x1}, {x2}")
    s = (x1 + x2) / 2
    k = math.sqrt(eta * x1 * x2)
    excess = scipy.special.i0(k) - 1.0
    p = -math.expm1(-s) - math.exp(-s) * excess
    both = 2 * p + math.expm1(-2 * s)
    return 1.0 - both / (p * p)


def dip_profile(gate_width, linewidth_sum, tau_grid, eta_pol, R):
    """
    Closed-form coincidence dip C(tau) / C_dist.

    Parameters
    ----------
    gate_width : float
        Rectangular gate width in seconds (both detectors).
    linewidth_sum : float
        Combined effective linewidth of the two lasers in Hz.
    tau_grid : sequence of float
        Gate delays of SPD2 relative to SPD1, in seconds.
    eta_pol : float
        Polarization overlap |<p1|p2>|^2.
    R : float
        Intensity ratio of the sources at the beamsplitter.

    Returns
    -------
    list of (float, float)
        ``(tau, 1 - V0 G(tau))`` with ``V0 = 2 R eta_pol / (R + 1)**2`` and
        ``G`` from :func:`gate_overlap`.
    """
    taus = list(tau_grid)
    if not taus:
        raise DomainError("Delay grid must not be empty")
    if not 0.0 <= eta_pol <= 1.0:
        raise DomainError(f"Polarization overlap must be in [0, 1], "
                          f"got {eta_pol}")
    depth = eta_pol * visibility_from_ratio(R)
    return [(tau, 1.0 - depth * gate_overlap(gate_width, linewidth_sum, tau))
            for tau in taus]


def beamsplitter_fields(e_a, e_b):
    """
    Lossless 50/50 beamsplitter acting on Jones fields.

    Parameters
    ----------
    e_a, e_b : array_like, shape (..., 2)
        Complex Jones fields at the two inputs.

    Returns
    -------
    (ndarray, ndarray)
        Output fields ``(e_a + e_b)/sqrt(2)`` and ``(e_a - e_b)/sqrt(2)``.
    """
    e_a = np.asarray(e_a, dtype=complex)
    e_b = np.asarray(e_b, dtype=complex)
    return (e_a + e_b) / math.sqrt(2), (e_a - e_b) / math.sqrt(2)


def beamsplitter_outputs(a, b):
    """Beamsplitter on two :class:`FieldSample` inputs; flux is conserved."""
    c, d = beamsplitter_fields(a.jones, b.jones)
    return (FieldSample.from_jones(c, fallback_sop=a.sop),
            FieldSample.from_jones(d, fallback_sop=b.sop))


def phase_diffusion_step(state, dt, linewidth, rng):
    """
    Advance the laser phase of ``state`` by a Wiener increment.

    The increment is N(0, 2 pi linewidth dt), so ``<exp(i dphi)>`` over a
    lag ``tau`` decays as ``exp(-pi linewidth tau)``.
    """
    if not dt > 0:
        raise DomainError(f"Time step must be > 0 s, got {dt}")
    if linewidth == 0:
        return state
    step = rng.normal(0.0, math.sqrt(2 * math.pi * linewidth * dt))
    return dataclasses.replace(state, phase=state.phase + step)


def phase_walk(rng, linewidth, times, n):
    """
    Sample ``n`` independent laser phase trajectories on ``times``.

    Each trajectory starts from a uniform phase at ``times[0]`` and evolves
    with the same increments as :func:`phase_diffusion_step`.

    Returns
    -------
    ndarray, shape (n, len(times))
    """
    times = np.asarray(times, dtype=float)
    start = rng.uniform(0.0, 2 * math.pi, size=(n, 1))
    if times.size == 1:
        return start
    dt = np.diff(times)
    if np.any(dt < 0):
        raise DomainError("Phase-walk times must be sorted")
    scale = np.sqrt(2 * math.pi * linewidth * dt)
    steps = rng.standard_normal((n, dt.size)) * scale
    return np.concatenate([start, start + np.cumsum(steps, axis=1)], axis=1)
