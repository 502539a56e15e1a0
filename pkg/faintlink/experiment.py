"""
Scenario harness.

Four scenarios are available:

* ``polarization_scan`` rotates one laser's launch polarization away from
  the other's and records the visibility against the mismatch angle.
* ``intensity_scan`` sweeps one laser's mean photon number around the other's.
* ``stability_run`` lets both links drift with the polarization control on,
  then off, and records the visibility per time bin.
* ``dip_scan`` scans SPD2's gate delay for a ladder of combined linewidths
  and estimates the dip width.

Independent scan points get their own RNG streams spawned from the seed, so
their results do not depend on the number of worker threads.
"""
import concurrent.futures
import dataclasses
import logging
import math
import time

import numpy as np

from .channel import drift_step
from .control import PolarizationTracker, quantum_overlap
from .detection import (DelayPoint, Station, scan_gate_delay,
                        visibility_with_error)
from .exceptions import ConfigurationError, DomainError
from .optics import (coincidence_ratio_analytic, dip_profile, gate_overlap,
                     triggered_visibility)
from .records import RunRecord
from .utils import FLOAT_FORMAT, partner_sop, spawn_generators
from .version import __version__

logger = logging.getLogger(__name__)


def _check_kind(cfg, kind):
    if cfg.scenario != kind:
        raise ConfigurationError(
            f'Expected a {kind} configuration, got {cfg.scenario}')


def _block_kwargs(cfg, slices_per_coherence=None):
    return {
        'estimator': cfg.simulation.estimator,
        'chunk_size': cfg.simulation.chunk_size,
        'slices_per_coherence': (slices_per_coherence
                                 or cfg.simulation.slices_per_coherence),
    }


def _map_points(func, items, threads):
    if threads <= 1:
        return [func(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _static_station(cfg, lasers):
    return Station(tuple(lasers), tuple(link.build() for link in cfg.links),
                   detectors=cfg.detectors)


def measure_visibility(station, cfg, n_gates, rng):
    """
    Matched and far-detuned blocks on a frozen ``station``.

    Returns
    -------
    dict
        ``ratio_matched``, ``ratio_detuned``, ``visibility`` and ``stderr``.
    """
    kwargs = _block_kwargs(cfg)
    matched = station.run_block(cfg.trigger.at(0.0), n_gates, rng, **kwargs)
    detuned = station.run_block(cfg.trigger.at(cfg.detuned_delay_s), n_gates,
                                rng, **kwargs)
    visibility, error = visibility_with_error(matched, detuned)
    return {'ratio_matched': matched.ratio, 'ratio_detuned': detuned.ratio,
            'visibility': visibility, 'stderr': error}


def analytic_visibilities(station):
    """Weak-limit and saturation-aware visibility predictions."""
    mu_a, mu_b = (laser.mean_photons_per_gate * link.transmission
                  for laser, link in zip(station.sources, station.links))
    spd1 = station.detectors[0]
    eta = station.eta_pol * gate_overlap(spd1.gate_width,
                                         station.linewidth_sum, 0.0)
    weak = 1.0 - coincidence_ratio_analytic(mu_a, mu_b, eta)
    if spd1.efficiency == 0:
        return weak, weak
    return weak, triggered_visibility(mu_a, mu_b, eta,
                                      efficiency=spd1.efficiency)


def _record(cfg, rows, summary):
    return RunRecord(scenario=cfg.scenario, rows=rows, seed=cfg.seed,
                     config=cfg.to_dict(), config_hash=cfg.config_hash,
                     version=str(__version__), summary=summary)


def run_polarization_scan(cfg):
    """Visibility against the launch-polarization mismatch of laser B."""
    _check_kind(cfg, 'polarization_scan')
    thetas = cfg.scan.theta_deg
    laser_a, laser_b = cfg.lasers

    def point(item):
        theta, rng = item
        rotated = dataclasses.replace(
            laser_b, sop=partner_sop(laser_a.sop, math.radians(theta)))
        station = _static_station(cfg, (laser_a, rotated))
        result = measure_visibility(station, cfg, cfg.simulation.n_gates, rng)
        weak, triggered = analytic_visibilities(station)
        logger.debug('theta=%g deg: V=%.4f +/- %.4f', theta,
                     result['visibility'], result['stderr'])
        return dict(theta_deg=theta, eta_pol=station.eta_pol,
                    analytic=weak, analytic_triggered=triggered, **result)

    rows = _map_points(point, zip(thetas, spawn_generators(cfg.seed,
                                                           len(thetas))),
                       cfg.simulation.threads)
    return _record(cfg, rows, _residual_summary(rows))


def run_intensity_scan(cfg):
    """Visibility against the intensity ratio R = mu_b / mu_a."""
    _check_kind(cfg, 'intensity_scan')
    ratios = cfg.scan.ratios
    fixed = cfg.scan.fixed_mu

    def point(item):
        ratio, rng = item
        lasers = (
            dataclasses.replace(cfg.lasers[0], mean_photons_per_gate=fixed),
            dataclasses.replace(cfg.lasers[1],
                                mean_photons_per_gate=ratio * fixed),
        )
        station = _static_station(cfg, lasers)
        result = measure_visibility(station, cfg, cfg.simulation.n_gates, rng)
        weak, triggered = analytic_visibilities(station)
        logger.debug('R=%g: V=%.4f +/- %.4f', ratio, result['visibility'],
                     result['stderr'])
        return dict(R=ratio, mu_a=fixed, mu_b=ratio * fixed, analytic=weak,
                    analytic_triggered=triggered, **result)

    rows = _map_points(point, zip(ratios, spawn_generators(cfg.seed,
                                                           len(ratios))),
                       cfg.simulation.threads)
    return _record(cfg, rows, _residual_summary(rows))


def _residual_summary(rows):
    residuals = [row['visibility'] - row['analytic_triggered'] for row in rows]
    return {
        'max_visibility': max(row['visibility'] for row in rows),
        'max_abs_residual': max(abs(r) for r in residuals),
        'max_abs_residual_weak': max(abs(row['visibility'] - row['analytic'])
                                     for row in rows),
    }


def run_stability(cfg):
    """
    Visibility time series under drifting links.

    Both links drift and, while the schedule has control on, each link's
    tracker runs one SPGD step per control period. Every bin ends with a
    matched and a detuned block on the frozen station. Drift, both
    controllers and the Monte Carlo each use their own RNG stream.
    """
    _check_kind(cfg, 'stability_run')
    scan = cfg.scan
    ctrl = cfg.controller
    streams = spawn_generators(cfg.seed, 5)
    drift_rngs, ctrl_rngs, mc_rng = streams[:2], streams[2:4], streams[4]
    links = [link.build() for link in cfg.links]
    trackers = [PolarizationTracker(cfg.references, rng,
                                    state=ctrl.initial_state(rng),
                                    measurement_noise=ctrl.measurement_noise)
                for rng in ctrl_rngs]
    dt = ctrl.period_s
    steps_per_bin = max(1, int(round(scan.bin_s / dt)))
    n_bins = max(1, int(round(scan.duration_s / scan.bin_s)))

    rows = []
    overlaps_on = []
    step = 0
    for _ in range(n_bins):
        for _ in range(steps_per_bin):
            t = step * dt
            level = cfg.perturbation.level_at(t)
            on = ctrl.enabled and cfg.schedule.is_on(t)
            for i, tracker in enumerate(trackers):
                links[i] = drift_step(links[i], dt, level, drift_rngs[i])
                tracker.enabled = on
                tracker.step(links[i])
            step += 1
        t = step * dt
        on = ctrl.enabled and cfg.schedule.is_on(t - dt)
        station = Station(cfg.lasers, tuple(links), tuple(trackers),
                          cfg.detectors)
        result = measure_visibility(station, cfg, scan.n_gates_per_bin,
                                    mc_rng)
        if on:
            overlaps_on.append(np.mean([
                quantum_overlap(link, tracker.state, laser.sop)
                for link, tracker, laser in zip(links, trackers, cfg.lasers)
            ]))
        rows.append(dict(t_s=t, control_on=on, eta_pol=station.eta_pol,
                         **result))
        logger.debug('t=%.1f s control=%s V=%.4f eta_pol=%.4f', t, on,
                     result['visibility'], station.eta_pol)

    return _record(cfg, rows, _stability_summary(rows, overlaps_on))


def _stability_summary(rows, overlaps_on):
    on = [row['visibility'] for row in rows if row['control_on']]
    off = [row['visibility'] for row in rows if not row['control_on']]
    return {
        'bins_on': len(on),
        'bins_off': len(off),
        'mean_visibility_on': float(np.mean(on)) if on else None,
        'min_visibility_off': min(off) if off else None,
        'max_visibility_off': max(off) if off else None,
        'mean_quantum_overlap_on': (float(np.mean(overlaps_on))
                                    if overlaps_on else None),
    }


def broadened_lasers(lasers, linewidth_sum):
    """
    Lasers whose combined effective linewidth is ``linewidth_sum``.

    The extra width is FM broadening on the laser with the wider native
    line.
    """
    native = sum(laser.linewidth for laser in lasers)
    extra = linewidth_sum - native
    if extra < 0:
        raise DomainError(f'Combined linewidth {linewidth_sum} Hz is below '
                          f'the native sum {native} Hz')
    wider = max(range(len(lasers)), key=lambda i: lasers[i].linewidth)
    return tuple(dataclasses.replace(laser, fm_broadening=extra if i == wider
                                     else 0.0)
                 for i, laser in enumerate(lasers))


def run_dip_scan(cfg):
    """Coincidence dip against gate delay for each ladder linewidth."""
    _check_kind(cfg, 'dip_scan')
    scan = cfg.scan
    taus = scan.tau_grid
    detectors = tuple(dataclasses.replace(spd, gate_width=scan.gate_width_s)
                      for spd in cfg.detectors)
    kwargs = _block_kwargs(cfg, scan.slices_per_coherence)

    def point(item):
        linewidth_sum, rng = item
        station = Station(broadened_lasers(cfg.lasers, linewidth_sum),
                          tuple(link.build() for link in cfg.links),
                          detectors=detectors)
        points = scan_gate_delay(station, cfg.trigger, taus,
                                 scan.n_gates_per_point, rng,
                                 baseline_tau=cfg.detuned_delay_s, **kwargs)
        mu_a, mu_b = (laser.mean_photons_per_gate * link.transmission
                      for laser, link in zip(station.sources, station.links))
        ratio = mu_b / mu_a if mu_a > 0 else math.inf
        analytic = dip_profile(scan.gate_width_s, linewidth_sum, taus,
                               station.eta_pol, ratio)
        logger.info('Dip at %.3g Hz combined linewidth done', linewidth_sum)
        return points, analytic

    results = _map_points(point, zip(scan.linewidth_sums_hz,
                                     spawn_generators(
                                         cfg.seed,
                                         len(scan.linewidth_sums_hz))),
                          cfg.simulation.threads)
    rows = []
    fwhm = {}
    fwhm_analytic = {}
    for linewidth_sum, (points, analytic) in zip(scan.linewidth_sums_hz,
                                                 results):
        for p, (_, model) in zip(points, analytic):
            rows.append(dict(linewidth_sum_hz=linewidth_sum, tau_s=p.tau,
                             ratio=p.raw.ratio, ratio_norm=p.ratio,
                             stderr=p.stderr, analytic_norm=model))
        key = format(linewidth_sum, FLOAT_FORMAT)
        fwhm[key] = estimate_fwhm(points)
        fwhm_analytic[key] = estimate_fwhm(analytic)
    widths = [fwhm[format(lw, FLOAT_FORMAT)] for lw in scan.linewidth_sums_hz]
    summary = {
        'fwhm_s': fwhm,
        'fwhm_analytic_s': fwhm_analytic,
        'fwhm_ratio': (widths[0] / widths[-1]
                       if widths[0] and widths[-1] else None),
        'fwhm_strictly_decreasing': (
            all(w is not None for w in widths)
            and all(a > b for a, b in zip(widths, widths[1:]))),
    }
    return _record(cfg, rows, summary)


def _as_points(record_or_points, linewidth_sum):
    if isinstance(record_or_points, RunRecord):
        rows = record_or_points.rows
        ladder = sorted({row['linewidth_sum_hz'] for row in rows})
        if linewidth_sum is None:
            if len(ladder) != 1:
                raise DomainError(
                    f'Record holds {len(ladder)} dips; pick a linewidth_sum')
            linewidth_sum = ladder[0]
        return [(row['tau_s'], row['ratio_norm'], row['stderr'])
                for row in rows if row['linewidth_sum_hz'] == linewidth_sum]
    points = []
    for item in record_or_points:
        if isinstance(item, DelayPoint):
            points.append((item.tau, item.ratio, item.stderr))
        elif len(item) == 2:
            points.append((item[0], item[1], 0.0))
        else:
            points.append(tuple(item[:3]))
    return points


def _crossing(inner, outer, half):
    (t_in, r_in), (t_out, r_out) = inner, outer
    if r_out == r_in:
        return t_out
    return t_in + (half - r_in) * (t_out - t_in) / (r_out - r_in)


def estimate_fwhm(record_or_points, linewidth_sum=None):
    """
    Full width at half depth of a normalized coincidence dip.

    Parameters
    ----------
    record_or_points : RunRecord or sequence
        A dip-scan record, a list of :class:`DelayPoint`, or
        ``(tau, ratio[, stderr])`` tuples.
    linewidth_sum : float, optional
        Ladder entry to use when the record holds several dips.

    Returns
    -------
    float or None
        Width in seconds from linear interpolation at half depth; None when
        the dip is shallower than 3 standard errors or a side never climbs
        back above half depth.
    """
    points = sorted(_as_points(record_or_points, linewidth_sum))
    if len(points) < 3:
        raise DomainError('At least three delay points are needed')
    ratios = [r for _, r, _ in points]
    i_min = int(np.argmin(ratios))
    depth = 1.0 - ratios[i_min]
    if depth <= 0 or depth <= 3 * points[i_min][2]:
        logger.warning('Dip depth %.3g is not significant; FWHM undefined',
                       depth)
        return None
    half = 1.0 - depth / 2

    left = right = None
    for j in range(i_min, 0, -1):
        if ratios[j - 1] >= half:
            left = _crossing(points[j][:2], points[j - 1][:2], half)
            break
    for j in range(i_min, len(points) - 1):
        if ratios[j + 1] >= half:
            right = _crossing(points[j][:2], points[j + 1][:2], half)
            break
    if left is None or right is None:
        logger.warning('Dip does not recover to half depth inside the grid; '
                       'FWHM undefined')
        return None
    width = right - left
    span = points[-1][0] - points[0][0]
    if span < 5 * width:
        logger.warning('Delay grid spans %.3g s, less than 5 FWHM (%.3g s)',
                       span, width)
    return width


SCENARIOS = {
    'dip_scan': run_dip_scan,
    'polarization_scan': run_polarization_scan,
    'intensity_scan': run_intensity_scan,
    'stability_run': run_stability,
}


def run_scenario(cfg):
    """Run the scenario ``cfg`` describes and time it."""
    logger.info('Running %s with seed %d', cfg.scenario, cfg.seed)
    start = time.perf_counter()
    record = SCENARIOS[cfg.scenario](cfg)
    record.wall_time_s = time.perf_counter() - start
    logger.info('Finished %s in %.1f s', cfg.scenario, record.wall_time_s)
    return record
