"""
Scenario configuration files.

A scenario is described by one YAML document. Sections mirror the model
types and every key has a default except ``seed``::

    scenario: polarization_scan
    seed: 1234
    lasers:
      - linewidth_hz: 8.0e+5
      - linewidth_hz: 6.0e+6
    polarization_scan:
      theta_deg: [0, 45, 90]

See ``docs/source/config.rst`` for the complete key reference.
"""
import copy
import dataclasses
import logging
import os

import numpy as np
import yaml

from .channel import FiberLink, PerturbationSchedule
from .control import CompensatorState, ReferenceChannel, check_reference_pair
from .detection import (DEFAULT_DELAY_LINE, DETUNED_DELAY, ESTIMATORS,
                        DetectorSpec, TriggerScheme)
from .exceptions import ConfigurationError
from .optics import QUANTUM_CHANNEL_NM, LaserSpec
from .utils import config_hash, parse_sop

logger = logging.getLogger(__name__)

SCENARIO_BLOCKS = {
    'dip_scan': 'dip_scan',
    'polarization_scan': 'polarization_scan',
    'intensity_scan': 'intensity_scan',
    'stability_run': 'stability',
}

LASER_DEFAULTS = (
    {'wavelength_nm': QUANTUM_CHANNEL_NM, 'linewidth_hz': 8.0e5,
     'fm_broadening_hz': 0.0, 'mean_photons_per_gate': 1.0, 'sop': 'H'},
    {'wavelength_nm': QUANTUM_CHANNEL_NM, 'linewidth_hz': 6.0e6,
     'fm_broadening_hz': 0.0, 'mean_photons_per_gate': 1.0, 'sop': 'H'},
)

LINK_DEFAULTS = {'length_km': 8.5, 'attenuation_db_per_km': 0.2,
                 'drift_rate': 0.13, 'group_index': 1.468,
                 'differential_rotation': 0.0}

DETECTOR_DEFAULTS = {'efficiency': 0.02, 'dark_count_prob': 0.0,
                     'gate_width_s': 1e-9}

SECTION_DEFAULTS = {
    'trigger': {'delay_line_s': DEFAULT_DELAY_LINE, 'trigger_rate_hz': 1e6,
                'detuned_delay_s': DETUNED_DELAY},
    'controller': {'enabled': True, 'gain': 40.0, 'dither': 0.05,
                   'period_s': 0.01, 'measurement_noise': 0.0,
                   'random_start': False},
    'schedule': {'control': [[0.0, True], [2520.0, False]]},
    'perturbation': {'levels': [[0.0, 1.0]]},
    'dwdm': {'enforce': False, 'channel_nm': QUANTUM_CHANNEL_NM,
             'tolerance_nm': 0.1},
    'simulation': {'n_gates': 1000000, 'estimator': 'expected',
                   'chunk_size': 4096, 'slices_per_coherence': 16,
                   'threads': 1},
    'output': {'dir': '.', 'stem': None},
}

REFERENCE_DEFAULTS = (
    {'wavelength_nm': 1545.32, 'launched': 'H', 'target': None},
    {'wavelength_nm': 1546.92, 'launched': 'D', 'target': None},
)

SCENARIO_DEFAULTS = {
    'polarization_scan': {'theta_deg': [0.0, 15.0, 30.0, 45.0, 60.0, 75.0,
                                        90.0]},
    'intensity_scan': {'ratios': [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0],
                       'fixed_mu': 1.0},
    'stability': {'duration_s': 4320.0, 'bin_s': 10.0,
                  'n_gates_per_bin': 100000},
    'dip_scan': {'linewidth_sums_hz': [6.8e6, 2.0e7, 5.0e7, 1.0e8],
                 'tau_start_s': -2.0e-7, 'tau_stop_s': 2.0e-7,
                 'tau_points': 81, 'gate_width_s': 15e-9,
                 'n_gates_per_point': 50000, 'slices_per_coherence': 4},
}


@dataclasses.dataclass(frozen=True)
class LinkConfig:
    length_km: float
    attenuation_db_per_km: float
    drift_rate: float
    group_index: float
    differential_rotation: float

    def build(self):
        """Fresh link with identity birefringence."""
        return FiberLink(self.length_km, self.attenuation_db_per_km,
                         drift_rate=self.drift_rate,
                         refractive_group_index=self.group_index,
                         differential_rotation=self.differential_rotation)


@dataclasses.dataclass(frozen=True)
class ControllerConfig:
    enabled: bool
    gain: float
    dither: float
    period_s: float
    measurement_noise: float
    random_start: bool

    def initial_state(self, rng):
        if self.random_start:
            return CompensatorState.random(rng, self.gain, self.dither)
        return CompensatorState(gain=self.gain, dither_amplitude=self.dither)


@dataclasses.dataclass(frozen=True)
class ControlSchedule:
    """Controller on/off switching times as ``(time_s, on)`` pairs."""
    changes: tuple

    def __post_init__(self):
        times = [t for t, _ in self.changes]
        if times != sorted(times):
            raise ConfigurationError(
                f'Control schedule times must be sorted, got {times}')

    def is_on(self, t):
        state = self.changes[0][1]
        for start, on in self.changes:
            if t >= start:
                state = on
        return state


@dataclasses.dataclass(frozen=True)
class SimulationConfig:
    n_gates: int
    estimator: str
    chunk_size: int
    slices_per_coherence: int
    threads: int


@dataclasses.dataclass(frozen=True)
class PolarizationScanConfig:
    theta_deg: tuple


@dataclasses.dataclass(frozen=True)
class IntensityScanConfig:
    ratios: tuple
    fixed_mu: float


@dataclasses.dataclass(frozen=True)
class StabilityConfig:
    duration_s: float
    bin_s: float
    n_gates_per_bin: int


@dataclasses.dataclass(frozen=True)
class DipScanConfig:
    linewidth_sums_hz: tuple
    tau_start_s: float
    tau_stop_s: float
    tau_points: int
    gate_width_s: float
    n_gates_per_point: int
    slices_per_coherence: int

    @property
    def tau_grid(self):
        return tuple(float(t) for t in np.linspace(
            self.tau_start_s, self.tau_stop_s, self.tau_points))


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
    """
    Validated description of one scenario run.

    Build it with :func:`load_config` or :func:`from_dict`; ``source`` holds
    the canonical dictionary with every default filled in.
    """
    scenario: str
    seed: int
    lasers: tuple
    links: tuple
    detectors: tuple
    trigger: TriggerScheme
    detuned_delay_s: float
    controller: ControllerConfig
    references: tuple
    schedule: ControlSchedule
    perturbation: PerturbationSchedule
    simulation: SimulationConfig
    output_dir: str
    output_stem: str
    scan: object
    source: dict = dataclasses.field(repr=False, compare=False)

    def to_dict(self):
        return copy.deepcopy(self.source)

    @property
    def config_hash(self):
        return config_hash(self.source)

    def with_overrides(self, seed=None, threads=None, out_dir=None):
        """Copy with command-line overrides applied and revalidated."""
        data = self.to_dict()
        if seed is not None:
            data['seed'] = seed
        if threads is not None:
            data['simulation']['threads'] = threads
        if out_dir is not None:
            data['output']['dir'] = str(out_dir)
        return from_dict(data)


def _section(given, defaults, path):
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise ConfigurationError(
            f'Section {path} must be a mapping, got {type(given).__name__}')
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigurationError(
            f'Unknown key(s) {unknown} in {path}; expected {sorted(defaults)}')
    merged = {}
    for key, default in defaults.items():
        merged[key] = _coerce(given.get(key, default), default,
                              f'{path}.{key}')
    return merged


def _coerce(value, default, path):
    """Cast ``value`` to the type of its default (YAML reads 1e6 as str)."""
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ValueError('expected true or false')
            return value
        if isinstance(default, int):
            as_float = float(value)
            if as_float != int(as_float):
                raise ValueError('expected an integer')
            return int(as_float)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, list):
            if not isinstance(value, (list, tuple)) or not value:
                raise ValueError('expected a non-empty list')
            if default and isinstance(default[0], list):
                return [[float(item[0]), _pair_value(item[1], default[0][1])]
                        for item in value]
            return [float(item) for item in value]
    except (TypeError, ValueError, IndexError) as ex:
        raise ConfigurationError(f'Invalid value {value!r} for {path}: {ex}') \
            from None
    return value


def _pair_value(value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValueError('expected true or false')
        return value
    return float(value)


def _pair(given, defaults, path):
    if given is None:
        given = [{}, {}]
    if not isinstance(given, list) or len(given) != 2:
        raise ConfigurationError(f'Section {path} must list exactly two '
                                 f'entries, got {given!r}')
    if isinstance(defaults, dict):
        defaults = (defaults, defaults)
    return [_section(entry, default, f'{path}[{i}]')
            for i, (entry, default) in enumerate(zip(given, defaults))]


def canonicalize(data, scenario=None):
    """
    Fill defaults into raw configuration ``data`` and check its keys.

    Returns
    -------
    dict
        Canonical configuration; JSON-serializable.
    """
    if not isinstance(data, dict):
        raise ConfigurationError('Configuration must be a YAML mapping')
    data = dict(data)
    kind = data.pop('scenario', None) or scenario
    if scenario is not None and kind != scenario:
        raise ConfigurationError(
            f'Configuration is for scenario {kind!r}, not {scenario!r}')
    if kind not in SCENARIO_BLOCKS:
        raise ConfigurationError(
            f'Invalid scenario ({kind}); expected one of '
            f'{sorted(SCENARIO_BLOCKS)}')
    if 'seed' not in data:
        raise ConfigurationError('A seed is mandatory')
    seed = data.pop('seed')
    if isinstance(seed, bool) or not isinstance(seed, int) \
            or not 0 <= seed < 2 ** 64:
        raise ConfigurationError(
            f'Seed must be an integer in [0, 2**64), got {seed!r}')
    block = SCENARIO_BLOCKS[kind]
    canonical = {'scenario': kind, 'seed': seed}
    canonical['lasers'] = _pair(data.pop('lasers', None), LASER_DEFAULTS,
                                'lasers')
    canonical['links'] = _pair(data.pop('links', None), LINK_DEFAULTS,
                               'links')
    detectors = data.pop('detectors', None) or {}
    canonical['detectors'] = _section(
        detectors, {'spd1': {}, 'spd2': {}}, 'detectors')
    for name in ('spd1', 'spd2'):
        canonical['detectors'][name] = _section(
            detectors.get(name), DETECTOR_DEFAULTS, f'detectors.{name}')
    canonical['references'] = _pair(data.pop('references', None),
                                    REFERENCE_DEFAULTS, 'references')
    for name, defaults in SECTION_DEFAULTS.items():
        canonical[name] = _section(data.pop(name, None), defaults, name)
    canonical[block] = _section(data.pop(block, None),
                                SCENARIO_DEFAULTS[block], block)
    if data:
        raise ConfigurationError(
            f'Unknown or inapplicable section(s) {sorted(data)} for '
            f'scenario {kind}')
    if canonical['output']['stem'] is None:
        canonical['output']['stem'] = block
    return canonical


def _build_scan(kind, block):
    if kind == 'polarization_scan':
        return PolarizationScanConfig(tuple(block['theta_deg']))
    if kind == 'intensity_scan':
        if min(block['ratios']) <= 0 or block['fixed_mu'] <= 0:
            raise ConfigurationError(
                'Intensity ratios and fixed_mu must be > 0')
        return IntensityScanConfig(tuple(block['ratios']), block['fixed_mu'])
    if kind == 'stability_run':
        config = StabilityConfig(**block)
        if config.duration_s <= 0 or config.bin_s <= 0 \
                or config.n_gates_per_bin <= 0:
            raise ConfigurationError(
                f'Stability durations and gate counts must be > 0: {block}')
        return config
    config = DipScanConfig(linewidth_sums_hz=tuple(block['linewidth_sums_hz']),
                           **{k: v for k, v in block.items()
                              if k != 'linewidth_sums_hz'})
    if config.tau_points < 2 or config.tau_stop_s <= config.tau_start_s:
        raise ConfigurationError(
            f'Dip scan needs an increasing delay grid, got {block}')
    if config.gate_width_s <= 0 or config.n_gates_per_point <= 0 \
            or config.slices_per_coherence < 1:
        raise ConfigurationError(f'Invalid dip scan settings: {block}')
    return config


def from_dict(data, scenario=None):
    """Validate configuration ``data`` into a :class:`ScenarioConfig`."""
    source = canonicalize(data, scenario)
    kind = source['scenario']
    lasers = tuple(
        LaserSpec(linewidth=entry['linewidth_hz'],
                  wavelength=entry['wavelength_nm'],
                  fm_broadening=entry['fm_broadening_hz'],
                  mean_photons_per_gate=entry['mean_photons_per_gate'],
                  sop=parse_sop(entry['sop']))
        for entry in source['lasers'])
    dwdm = source['dwdm']
    if dwdm['enforce']:
        for laser in lasers:
            laser.check_grid(dwdm['channel_nm'], dwdm['tolerance_nm'])
    links = tuple(LinkConfig(**entry) for entry in source['links'])
    for link in links:
        link.build()
    detectors = tuple(
        DetectorSpec(efficiency=entry['efficiency'],
                     dark_count_prob=entry['dark_count_prob'],
                     gate_width=entry['gate_width_s'])
        for entry in source['detectors'].values())
    trigger = source['trigger']
    scheme = TriggerScheme(delay_line=trigger['delay_line_s'],
                           trigger_rate=trigger['trigger_rate_hz'])
    if trigger['detuned_delay_s'] <= max(d.gate_width for d in detectors):
        raise ConfigurationError(
            'The detuned delay must exceed the gate width, got '
            f"{trigger['detuned_delay_s']} s")
    controller = ControllerConfig(**source['controller'])
    if controller.gain <= 0 or controller.dither <= 0 \
            or controller.period_s <= 0 or controller.measurement_noise < 0:
        raise ConfigurationError(
            f"Invalid controller settings: {source['controller']}")
    references = tuple(
        ReferenceChannel(entry['wavelength_nm'],
                         parse_sop(entry['launched']),
                         None if entry['target'] is None
                         else parse_sop(entry['target']))
        for entry in source['references'])
    check_reference_pair(references)
    simulation = SimulationConfig(**source['simulation'])
    if simulation.n_gates <= 0 or simulation.chunk_size <= 0 \
            or simulation.slices_per_coherence < 1 or simulation.threads < 1:
        raise ConfigurationError(
            f"Invalid simulation settings: {source['simulation']}")
    if simulation.estimator not in ESTIMATORS:
        raise ConfigurationError(
            f'Invalid estimator ({simulation.estimator}); expected one of '
            f'{ESTIMATORS}')
    scan = _build_scan(kind, source[SCENARIO_BLOCKS[kind]])
    if kind == 'dip_scan':
        native = sum(laser.linewidth for laser in lasers)
        narrowest = min(scan.linewidth_sums_hz)
        if narrowest < native:
            raise ConfigurationError(
                f'Dip ladder entry {narrowest} Hz is below the native '
                f'linewidth sum {native} Hz')
    if kind == 'stability_run' and scan.bin_s < controller.period_s:
        raise ConfigurationError(
            f'Stability bin {scan.bin_s} s is shorter than the control '
            f'period {controller.period_s} s')
    return ScenarioConfig(
        scenario=kind,
        seed=source['seed'],
        lasers=lasers,
        links=links,
        detectors=detectors,
        trigger=scheme,
        detuned_delay_s=trigger['detuned_delay_s'],
        controller=controller,
        references=references,
        schedule=ControlSchedule(tuple(
            (t, on) for t, on in source['schedule']['control'])),
        perturbation=PerturbationSchedule(tuple(
            (t, level) for t, level in source['perturbation']['levels'])),
        simulation=simulation,
        output_dir=source['output']['dir'],
        output_stem=source['output']['stem'],
        scan=scan,
        source=source,
    )


def load_config(path_or_file, scenario=None):
    """
    Load and validate a scenario YAML file.

    Parameters
    ----------
    path_or_file : str, os.PathLike or file-like
        Path to the YAML file, or an open file.
    scenario : str, optional
        Expected scenario kind; fills in a missing ``scenario`` key.

    Raises
    ------
    ConfigurationError
        On YAML syntax errors and invalid or unknown settings.
    """
    try:
        if isinstance(path_or_file, (str, bytes, os.PathLike)):
            with open(path_or_file) as cfg_file:
                data = yaml.full_load(cfg_file)
        else:
            data = yaml.full_load(path_or_file)
    except yaml.YAMLError as ex:
        raise ConfigurationError(f'Invalid YAML configuration: {ex}') from ex
    except OSError as ex:
        raise ConfigurationError(
            f'Unable to read configuration {path_or_file}: {ex}') from ex
    config = from_dict(data, scenario)
    logger.debug('Loaded %s configuration with hash %s', config.scenario,
                 config.config_hash)
    return config
