import json
import logging
import sys

import pytest

from faintlink import experiment
from faintlink.exceptions import DomainError
from faintlink.launcher import (EXIT_CONFIGURATION, EXIT_DOMAIN, EXIT_OK,
                                EXIT_STATISTICS, EXIT_UNEXPECTED,
                                configure_logging, get_parser, launch, main,
                                parse_arguments)

SMALL_POLSCAN = """
scenario: polarization_scan
seed: 7
simulation:
  n_gates: 2000
polarization_scan:
  theta_deg: [0, 90]
"""


@pytest.fixture(scope='function')
def config_path(tmp_path):
    def factory(text=SMALL_POLSCAN, name='config.yml'):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return factory


def test_parse_arguments(config_path):
    args = parse_arguments(['polscan', '--config', config_path(),
                            '--seed', '9', '--threads', '2', '--quiet'])
    args.config.close()
    assert args.command == 'polscan'
    assert args.seed == 9
    assert args.threads == 2
    assert args.quiet
    assert args.log_level == 'INFO'
    assert args.out is None


@pytest.mark.parametrize('argv', ([], ['polscan'], ['shuffle', '--config',
                                                     'x.yml']),
                         ids=('no_command', 'no_config', 'bad_command'))
def test_parser_rejects(argv):
    with pytest.raises(SystemExit):
        get_parser().parse_args(argv)


def test_version_flag(capsys):
    with pytest.raises(SystemExit):
        parse_arguments(['--version'])
    assert 'faintlink' in capsys.readouterr().out


def test_launch_writes_outputs(config_path, tmp_path):
    out = tmp_path / 'results'
    code = launch('polscan', config=config_path(), out=str(out), seed=3,
                  quiet=True)
    assert code == EXIT_OK
    csv_text = (out / 'polarization_scan.csv').read_text()
    assert csv_text.splitlines()[0].startswith('theta_deg,eta_pol')
    assert len(csv_text.splitlines()) == 3
    sidecar = json.loads((out / 'polarization_scan.json').read_text())
    assert sidecar['seed'] == 3
    assert sidecar['scenario'] == 'polarization_scan'
    assert sidecar['config']['seed'] == 3
    assert len(sidecar['config_hash']) == 64


def test_launch_is_reproducible(config_path, tmp_path):
    outputs = []
    for name in ('first', 'second'):
        out = tmp_path / name
        assert launch('polscan', config=config_path(), out=str(out),
                      quiet=True) == EXIT_OK
        outputs.append((out / 'polarization_scan.csv').read_bytes())
    assert outputs[0] == outputs[1]


def test_launch_closes_open_file(config_path, tmp_path):
    handle = open(config_path())
    launch('polscan', config=handle, out=str(tmp_path), quiet=True)
    assert handle.closed


@pytest.mark.parametrize('text,command',
                         (('scenario: polarization_scan\n', 'polscan'),
                          (SMALL_POLSCAN, 'dip'),
                          ('scenario: [', 'polscan')),
                         ids=('no_seed', 'wrong_command', 'bad_yaml'))
def test_configuration_errors(config_path, tmp_path, text, command):
    code = launch(command, config=config_path(text), out=str(tmp_path),
                  quiet=True)
    assert code == EXIT_CONFIGURATION


def test_insufficient_statistics(config_path, tmp_path):
    dark = SMALL_POLSCAN + ('detectors:\n  spd1:\n    efficiency: 0.0\n')
    code = launch('polscan', config=config_path(dark), out=str(tmp_path),
                  quiet=True)
    assert code == EXIT_STATISTICS
    assert not (tmp_path / 'polarization_scan.csv').exists()


@pytest.mark.parametrize('error,expected',
                         ((DomainError('bad tau'), EXIT_DOMAIN),
                          (RuntimeError('boom'), EXIT_UNEXPECTED)),
                         ids=('domain', 'unexpected'))
def test_runtime_errors(config_path, tmp_path, monkeypatch, error, expected):
    def fail(cfg):
        raise error

    monkeypatch.setattr(experiment, 'run_scenario', fail)
    code = launch('polscan', config=config_path(), out=str(tmp_path),
                  quiet=True)
    assert code == expected


def test_main_exit_code(config_path, tmp_path, monkeypatch):
    monkeypatch.setattr(sys, 'argv', ['faintlink', 'polscan', '--config',
                                      config_path(), '--out', str(tmp_path),
                                      '--quiet'])
    with pytest.raises(SystemExit) as info:
        main()
    assert info.value.code == EXIT_OK


def test_configure_logging_keeps_one_handler():
    root = logging.getLogger('')
    configure_logging('DEBUG')
    count = len(root.handlers)
    configure_logging('INFO', quiet=True)
    assert len(root.handlers) == count
    assert root.level == logging.WARNING


def test_configure_logging_leaves_other_loggers_alone():
    before = dict(logging.root.manager.loggerDict)
    configure_logging('INFO')
    assert set(logging.root.manager.loggerDict) == set(before)
