"""Scenario results and their CSV / JSON files."""
import dataclasses
import json
import logging
import math
import pathlib

import pandas as pd

from .utils import FLOAT_FORMAT

logger = logging.getLogger(__name__)

COLUMNS = {
    'dip_scan': ('linewidth_sum_hz', 'tau_s', 'ratio', 'ratio_norm',
                 'stderr', 'analytic_norm'),
    'polarization_scan': ('theta_deg', 'eta_pol', 'ratio_matched',
                          'ratio_detuned', 'visibility', 'stderr',
                          'analytic', 'analytic_triggered'),
    'intensity_scan': ('R', 'mu_a', 'mu_b', 'ratio_matched', 'ratio_detuned',
                       'visibility', 'stderr', 'analytic',
                       'analytic_triggered'),
    'stability_run': ('t_s', 'ratio_matched', 'ratio_detuned', 'visibility',
                      'stderr', 'control_on', 'eta_pol'),
}


@dataclasses.dataclass
class RunRecord:
    """
    Rows and metadata of one scenario run.

    Parameters
    ----------
    scenario : str
    rows : list of dict
        One mapping per point, keyed by the scenario's columns, ordered by
        abscissa or time.
    seed : int
    config : dict
        Canonical configuration echo.
    config_hash : str
    version : str
    summary : dict, optional
    wall_time_s : float, optional
    """
    scenario: str
    rows: list
    seed: int
    config: dict
    config_hash: str
    version: str
    summary: dict = dataclasses.field(default_factory=dict)
    wall_time_s: float = math.nan

    @property
    def columns(self):
        return COLUMNS[self.scenario]

    def column(self, name):
        return [row[name] for row in self.rows]

    def to_frame(self):
        """Rows as a DataFrame; boolean columns become 0/1."""
        frame = pd.DataFrame(self.rows, columns=list(self.columns))
        for name in frame.select_dtypes(include='bool').columns:
            frame[name] = frame[name].astype(int)
        return frame

    def to_csv(self, file):
        self.to_frame().to_csv(file, index=False, na_rep='nan',
                               float_format='%' + FLOAT_FORMAT,
                               lineterminator='\n')

    def sidecar(self):
        return {
            'scenario': self.scenario,
            'version': str(self.version),
            'seed': self.seed,
            'config_hash': self.config_hash,
            'config': self.config,
            'wall_time_s': _finite(self.wall_time_s),
            'rows': len(self.rows),
            'summary': _finite(self.summary),
        }

    def write(self, out_dir, stem):
        """
        Write ``<stem>.csv`` and ``<stem>.json`` into ``out_dir``.

        Returns
        -------
        (pathlib.Path, pathlib.Path)
        """
        out_dir = pathlib.Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f'{stem}.csv'
        json_path = out_dir / f'{stem}.json'
        with open(csv_path, 'w', newline='') as csv_file:
            self.to_csv(csv_file)
        with open(json_path, 'w') as json_file:
            json.dump(self.sidecar(), json_file, indent=2, sort_keys=True,
                      allow_nan=False, default=_json_default)
            json_file.write('\n')
        logger.info('Wrote %d rows to %s', len(self.rows), csv_path)
        return csv_path, json_path


def _finite(value):
    """Replace NaN and infinities by None, recursively."""
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _json_default(value):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise TypeError(f'Cannot serialize {value!r}') from None
