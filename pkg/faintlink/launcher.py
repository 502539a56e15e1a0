import logging

from . import experiment
from .config import load_config
from .exceptions import (ConfigurationError, DomainError,
                         InsufficientStatisticsError)

logger = logging.getLogger(__name__)

COMMANDS = {
    'dip': 'dip_scan',
    'polscan': 'polarization_scan',
    'intensityscan': 'intensity_scan',
    'stability': 'stability_run',
}

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIGURATION = 2
EXIT_DOMAIN = 3
EXIT_STATISTICS = 4

_handler = None


def get_parser():
    import argparse

    from . import __version__

    proj_desc = ("faintlink - two-photon interference of independent faint "
                 "lasers over drifting fiber links")
    parser = argparse.ArgumentParser(prog='faintlink', description=proj_desc)
    parser.add_argument('--version', action='version',
                        version=f'faintlink {__version__}',
                        help="Show faintlink's version number and exit.")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--config',
        help='Path to the YAML file describing the scenario.',
        required=True,
        type=argparse.FileType('r', encoding='UTF-8')
    )
    common.add_argument(
        '--seed',
        help='Master seed; overrides the seed in the configuration.',
        default=None,
        type=int
    )
    common.add_argument(
        '--out',
        help='Output directory for the CSV and JSON files.',
        default=None
    )
    common.add_argument(
        '--threads',
        help='Worker threads for independent scan points; 1 is sequential.',
        default=None,
        type=int
    )
    common.add_argument(
        '--quiet',
        help='Only report warnings and errors.',
        action='store_true',
        default=False
    )
    common.add_argument(
        '--log_level',
        help='Configure level of log display',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
        default='INFO'
    )

    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True
    helps = {
        'dip': 'Coincidence dip against gate delay for a linewidth ladder.',
        'polscan': 'Visibility against polarization mismatch.',
        'intensityscan': 'Visibility against intensity ratio.',
        'stability': 'Visibility time series with control on, then off.',
    }
    for command, help_text in helps.items():
        subparsers.add_parser(command, parents=[common], help=help_text,
                              description=help_text)
    return parser


def parse_arguments(*args, **kwargs):
    parser = get_parser()
    return parser.parse_args(*args, **kwargs)


def configure_logging(log_level='INFO', quiet=False):
    """Attach one stream handler to the root logger."""
    global _handler
    level = 'WARNING' if quiet else log_level

    root_logger = logging.getLogger('')
    if _handler is not None:
        root_logger.removeHandler(_handler)
    _handler = logging.StreamHandler()
    formatter = logging.Formatter(
        '[%(asctime)s] [%(levelname)-8s] - %(message)s')
    _handler.setFormatter(formatter)
    root_logger.addHandler(_handler)
    root_logger.setLevel(level)
    _handler.setLevel(level)


def launch(command, *, config, seed=None, out=None, threads=None,
           quiet=False, log_level='INFO'):
    """
    Run one scenario and write its CSV and JSON files.

    Returns
    -------
    int
        Process exit code: 0 success, 1 unexpected error, 2 configuration
        error, 3 domain error, 4 insufficient statistics.
    """
    configure_logging(log_level, quiet)
    try:
        try:
            cfg = load_config(config, scenario=COMMANDS[command])
        finally:
            if hasattr(config, 'close'):
                config.close()
        cfg = cfg.with_overrides(seed=seed, threads=threads, out_dir=out)
        record = experiment.run_scenario(cfg)
        csv_path, json_path = record.write(cfg.output_dir, cfg.output_stem)
    except ConfigurationError as ex:
        logger.error('Configuration error: %s', ex)
        return EXIT_CONFIGURATION
    except DomainError as ex:
        logger.error('Domain error: %s', ex)
        return EXIT_DOMAIN
    except InsufficientStatisticsError as ex:
        logger.error('Insufficient statistics: %s', ex)
        return EXIT_STATISTICS
    except Exception:
        logger.exception('Scenario %s failed', command)
        return EXIT_UNEXPECTED
    logger.info('Results written to %s and %s', csv_path, json_path)
    return EXIT_OK


def main():
    args = parse_arguments()
    kwargs = vars(args)
    raise SystemExit(launch(**kwargs))


if __name__ == "__main__":
    main()
