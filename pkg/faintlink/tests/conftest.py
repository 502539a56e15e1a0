import copy

import numpy as np
import pytest

from faintlink.config import from_dict


def _deep_update(base, updates):
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


@pytest.fixture(scope='function')
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope='function')
def scenario_data():
    """Raw configuration dictionaries with small gate counts."""
    def factory(scenario, **sections):
        data = {'scenario': scenario, 'seed': 1234,
                'simulation': {'n_gates': 20000}}
        return _deep_update(copy.deepcopy(data), sections)
    return factory


@pytest.fixture(scope='function')
def scenario_config(scenario_data):
    def factory(scenario, **sections):
        return from_dict(scenario_data(scenario, **sections))
    return factory
