"""
Gated single-photon detectors and the triggered coincidence scheme.

SPD1 watches beamsplitter output ``c`` during the gate ``[0, g]``. Each
SPD1 click arms SPD2, which watches output ``d`` during ``[tau, tau + g]``
after the optical delay line. The coincidence ratio is the number of SPD2
clicks divided by the number of SPD1 clicks. Consecutive gates are one
trigger period apart, far longer than the coherence time, so every gate
starts from fresh, independent laser phases.
"""
import dataclasses
import logging
import math

import numpy as np

from .control import compensator_matrix
from .exceptions import (ConfigurationError, DomainError,
                         InsufficientStatisticsError)
from .optics import (SPEED_OF_LIGHT, coherence_time, effective_linewidth,
                     phase_walk)
from .polarization import JonesMatrix, identity, rotate

logger = logging.getLogger(__name__)

ESTIMATORS = ("expected", "sampled")
DEFAULT_DELAY_LINE = 100.0 * 1.468 / SPEED_OF_LIGHT
DETUNED_DELAY = 1e-6
MIN_SLICES = 16


@dataclasses.dataclass(frozen=True)
class DetectorSpec:
    """
    Gated threshold detector.

    Parameters
    ----------
    efficiency : float, optional
        Detection efficiency including receiver losses.
    dark_count_prob : float, optional
        Dark-count probability per gate.
    gate_width : float, optional
        Rectangular gate width in seconds.

    Notes
    -----
    Dead time and afterpulsing are not modelled.
    """
    efficiency: float = 0.02
    dark_count_prob: float = 0.0
    gate_width: float = 1e-9

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigurationError(
                f"Detector efficiency must be in [0, 1], got {self.efficiency}")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ConfigurationError(
                "Dark-count probability must be in [0, 1), got "
                f"{self.dark_count_prob}")
        if not self.gate_width > 0:
            raise ConfigurationError(
                f"Gate width must be > 0 s, got {self.gate_width}")

    def click_probabilities(self, intensity):
        """Click probability for mean photon number(s) ``intensity``."""
        intensity = np.asarray(intensity, dtype=float)
        if np.any(intensity < 0):
            raise DomainError("Gate intensity must be >= 0")
        return 1.0 - (1.0 - self.dark_count_prob) * np.exp(
            -self.efficiency * intensity)


@dataclasses.dataclass(frozen=True)
class TriggerScheme:
    """
    Trigger geometry between SPD1 and SPD2.

    Parameters
    ----------
    delay_line : float, optional
        Optical delay before SPD2 in seconds; ~100 m of fiber by default.
        It bounds how early SPD2's gate can be placed.
    gate_delay_offset : float, optional
        Scanned gate delay tau of SPD2 relative to SPD1, in seconds.
    trigger_rate : float, optional
        SPD1 gate repetition rate in Hz.
    """
    delay_line: float = DEFAULT_DELAY_LINE
    gate_delay_offset: float = 0.0
    trigger_rate: float = 1e6

    def __post_init__(self):
        if not self.delay_line > 0:
            raise ConfigurationError(
                f"Delay line must be > 0 s, got {self.delay_line}")
        if not self.gate_delay_offset > -self.delay_line:
            raise ConfigurationError(
                f"Gate delay {self.gate_delay_offset} s is earlier than the "
                f"{self.delay_line} s delay line allows")
        if not self.trigger_rate > 0:
            raise ConfigurationError(
                f"Trigger rate must be > 0 Hz, got {self.trigger_rate}")

    @property
    def period(self):
        return 1.0 / self.trigger_rate

    def at(self, tau):
        return dataclasses.replace(self, gate_delay_offset=tau)


@dataclasses.dataclass
class CoincidenceTally:
    """
    SPD1 and SPD2 counts of one block.

    With the ``expected`` estimator the counts are sums of click
    probabilities and need not be integers. ``sum_w2``, ``sum_wy`` and
    ``sum_y2`` are per-gate second moments of the SPD1 weight ``w`` and
    coincidence weight ``y``, kept for the ratio's standard error.
    """
    n1: float = 0.0
    n2: float = 0.0
    n_gates: int = 0
    sum_w2: float = 0.0
    sum_wy: float = 0.0
    sum_y2: float = 0.0

    def add(self, w, y):
        self.n1 += float(w.sum())
        self.n2 += float(y.sum())
        self.n_gates += int(w.size)
        self.sum_w2 += float(np.dot(w, w))
        self.sum_wy += float(np.dot(w, y))
        self.sum_y2 += float(np.dot(y, y))

    def merge(self, other):
        return CoincidenceTally(*(a + b for a, b in zip(
            dataclasses.astuple(self), dataclasses.astuple(other))))

    @property
    def ratio(self):
        if self.n1 == 0:
            return math.nan
        return self.n2 / self.n1

    @property
    def stderr(self):
        """Delta-method standard error of :attr:`ratio`."""
        if self.n1 == 0:
            return math.nan
        r = self.ratio
        var = self.sum_y2 - 2 * r * self.sum_wy + r * r * self.sum_w2
        return math.sqrt(max(var, 0.0)) / self.n1

    @property
    def coincidences_per_gate(self):
        if self.n_gates == 0:
            return math.nan
        return self.n2 / self.n_gates

    @property
    def coincidences_per_gate_stderr(self):
        if self.n_gates < 2:
            return math.nan
        mean = self.coincidences_per_gate
        var = (self.sum_y2 / self.n_gates - mean * mean)
        return math.sqrt(max(var, 0.0) / (self.n_gates - 1))


def click_probability(intensity, spec, rng):
    """Draw one gate of ``spec`` at mean photon number ``intensity``."""
    if intensity < 0:
        raise DomainError(f"Gate intensity must be >= 0, got {intensity}")
    return bool(rng.random() < spec.click_probabilities(intensity))


def _compensator(controller):
    """Jones matrix of whatever stands in for a link's compensator."""
    if controller is None:
        return identity()
    if isinstance(controller, JonesMatrix):
        return controller
    if hasattr(controller, "matrix"):
        return controller.matrix
    return compensator_matrix(controller)


def slices_per_gate(gate_width, linewidth_sum, slices_per_coherence=MIN_SLICES):
    """Number of time slices that resolves the phase walk inside a gate."""
    scale = min(coherence_time(linewidth_sum), gate_width)
    return max(MIN_SLICES,
               math.ceil(slices_per_coherence * gate_width / scale))


def _gate_grid(spd1, spd2, tau, linewidth_sum, slices_per_coherence):
    m1 = slices_per_gate(spd1.gate_width, linewidth_sum, slices_per_coherence)
    m2 = slices_per_gate(spd2.gate_width, linewidth_sum, slices_per_coherence)
    mids1 = (np.arange(m1) + 0.5) * spd1.gate_width / m1
    mids2 = tau + (np.arange(m2) + 0.5) * spd2.gate_width / m2
    times, inverse = np.unique(np.concatenate([mids1, mids2]),
                               return_inverse=True)
    return times, inverse[:m1], inverse[m1:]


@dataclasses.dataclass
class Station:
    """
    Everything between the two lasers and the coincidence counter.

    Parameters
    ----------
    sources : pair of LaserSpec
    links : pair of FiberLink
    controllers : pair, optional
        Per-link compensators: ``None``, a ``JonesMatrix``, a
        ``CompensatorState`` or a ``PolarizationTracker``.
    detectors : pair of DetectorSpec, optional
        SPD1 then SPD2.
    """
    sources: tuple
    links: tuple
    controllers: tuple = (None, None)
    detectors: tuple = (DetectorSpec(), DetectorSpec())

    def input_fields(self):
        """
        Amplitudes and Jones vectors arriving at the beamsplitter.

        Returns
        -------
        list of (float, ndarray)
            ``(sqrt(mu * transmission), jones)`` per source.
        """
        fields = []
        for laser, link, controller in zip(self.sources, self.links,
                                           self.controllers):
            sop = rotate(link.matrix_at(laser.wavelength), laser.sop)
            sop = rotate(_compensator(controller), sop)
            amplitude = math.sqrt(laser.mean_photons_per_gate
                                  * link.transmission)
            fields.append((amplitude, sop.as_array()))
        return fields

    @property
    def eta_pol(self):
        (_, first), (_, second) = self.input_fields()
        return float(abs(np.vdot(first, second)) ** 2)

    @property
    def linewidth_sum(self):
        return sum(effective_linewidth(laser) for laser in self.sources)

    def run_block(self, scheme, n_gates, rng, **kwargs):
        return run_coincidence_block(self.sources, self.links,
                                     self.controllers, scheme, n_gates, rng,
                                     detectors=self.detectors, **kwargs)


def run_coincidence_block(sources, links, controller, scheme, n_gates, rng, *,
                          detectors=(DetectorSpec(), DetectorSpec()),
                          estimator="expected", chunk_size=4096,
                          slices_per_coherence=MIN_SLICES):
    """
    Simulate ``n_gates`` SPD1 gates end to end.

    Each laser field is propagated through its link and compensator (held
    fixed for the block). Only the relative phase of the two fields enters
    the port intensities, so a single walk with the summed linewidth is
    drawn over the slice times of both gates. The gate-averaged port
    intensities give click probabilities.

    Parameters
    ----------
    sources : pair of LaserSpec
    links : pair of FiberLink
    controller : pair
        Compensators, as accepted by :class:`Station`.
    scheme : TriggerScheme
    n_gates : int
    rng : numpy.random.Generator
    detectors : pair of DetectorSpec, optional
    estimator : {'expected', 'sampled'}, optional
        ``expected`` tallies click probabilities (SPD1 weight ``p1``,
        coincidence weight ``p1 * p2``); ``sampled`` draws clicks, SPD2
        only on gates where SPD1 fired.
    chunk_size : int, optional
        Gates simulated per vectorized batch.
    slices_per_coherence : int, optional
        Time slices per coherence time (or per gate, if shorter).

    Raises
    ------
    InsufficientStatisticsError
        If SPD1 accumulated no weight; the partial tally is attached.
    """
    if n_gates <= 0:
        raise DomainError(f"Number of gates must be > 0, got {n_gates}")
    if estimator not in ESTIMATORS:
        raise ConfigurationError(
            f"Unknown estimator {estimator!r}; expected one of {ESTIMATORS}")
    station = Station(tuple(sources), tuple(links),
                      tuple(controller or (None, None)), tuple(detectors))
    spd1, spd2 = station.detectors
    (amp_a, jones_a), (amp_b, jones_b) = station.input_fields()
    linewidth_sum = station.linewidth_sum
    times, gate1, gate2 = _gate_grid(spd1, spd2, scheme.gate_delay_offset,
                                     linewidth_sum, slices_per_coherence)
    logger.debug("Block: %d gates, tau=%.4g s, %d time slices, estimator=%s",
                 n_gates, scheme.gate_delay_offset, times.size, estimator)

    # |c|^2, |d|^2 = mean_flux +/- cross * cos(relative phase + offset)
    overlap = np.vdot(jones_a, jones_b)
    mean_flux = (amp_a ** 2 + amp_b ** 2) / 2
    cross = amp_a * amp_b * abs(overlap)
    offset = float(np.angle(overlap))

    tally = CoincidenceTally()
    done = 0
    while done < n_gates:
        n = min(chunk_size, n_gates - done)
        if cross > 0:
            relative = phase_walk(rng, linewidth_sum, times, n)
            beat = cross * np.cos(relative + offset)
            n_c = mean_flux + beat[:, gate1].mean(axis=-1)
            n_d = mean_flux - beat[:, gate2].mean(axis=-1)
        else:
            n_c = n_d = np.full(n, mean_flux)
        p1 = spd1.click_probabilities(n_c)
        p2 = spd2.click_probabilities(n_d)
        if estimator == "expected":
            w = p1
            y = p1 * p2
        else:
            first = rng.random(n) < p1
            second = np.zeros(n, dtype=bool)
            second[first] = rng.random(int(first.sum())) < p2[first]
            w = first.astype(float)
            y = second.astype(float)
        tally.add(w, y)
        done += n

    if tally.n1 == 0:
        raise InsufficientStatisticsError(
            f"No SPD1 clicks in {n_gates} gates at tau="
            f"{scheme.gate_delay_offset} s", tally=tally)
    return tally


def visibility_with_error(matched, detuned):
    """
    Visibility ``1 - R_matched / R_detuned`` and its standard error.

    Parameters
    ----------
    matched, detuned : CoincidenceTally

    Returns
    -------
    (float, float)
    """
    r_m, r_d = matched.ratio, detuned.ratio
    if not r_d > 0:
        raise InsufficientStatisticsError(
            "Detuned coincidence ratio is zero; visibility undefined",
            tally=detuned)
    quotient = r_m / r_d
    rel_d = detuned.stderr / r_d
    if r_m > 0:
        error = quotient * math.hypot(matched.stderr / r_m, rel_d)
    else:
        error = matched.stderr / r_d
    return 1.0 - quotient, error


@dataclasses.dataclass(frozen=True)
class DelayPoint:
    """One point of a gate-delay scan, normalized to the detuned baseline."""
    tau: float
    ratio: float
    stderr: float
    raw: CoincidenceTally

    def __iter__(self):
        yield self.tau
        yield self.ratio


def scan_gate_delay(station, scheme, tau_grid, n_gates, rng, *,
                    baseline_tau=DETUNED_DELAY, between=None, **kwargs):
    """
    Scan SPD2's gate delay and normalize to the far-detuned baseline.

    Parameters
    ----------
    station : Station
    scheme : TriggerScheme
    tau_grid : sequence of float
    n_gates : int
        Gates per point, baseline included.
    rng : numpy.random.Generator
    baseline_tau : float, optional
        Delay used for the distinguishable reference.
    between : callable, optional
        Called with the station after every block, to advance a live drift
        and controller trajectory shared by all points.
    **kwargs
        Forwarded to :func:`run_coincidence_block`.

    Returns
    -------
    list of DelayPoint
        Unpacks as ``(tau, normalized ratio)``.
    """
    taus = list(tau_grid)
    if not taus:
        raise DomainError("Delay grid must not be empty")
    baseline = station.run_block(scheme.at(baseline_tau), n_gates, rng,
                                 **kwargs)
    if between is not None:
        between(station)
    r_b = baseline.ratio
    if not r_b > 0:
        raise InsufficientStatisticsError(
            "Far-detuned baseline has no coincidences", tally=baseline)
    points = []
    for tau in taus:
        tally = station.run_block(scheme.at(tau), n_gates, rng, **kwargs)
        if between is not None:
            between(station)
        norm = tally.ratio / r_b
        rel = math.hypot(tally.stderr / tally.ratio if tally.ratio else 0.0,
                         baseline.stderr / r_b)
        points.append(DelayPoint(tau, norm, abs(norm) * rel, tally))
        logger.debug("tau=%.4g s ratio=%.6g +/- %.2g", tau, norm,
                     abs(norm) * rel)
    return points
