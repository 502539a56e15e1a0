from . import (channel, config, control, detection, experiment, fock, optics,
               polarization, records)
from .version import __version__  # noqa: F401

__all__ = ['channel', 'config', 'control', 'detection', 'experiment',
           'fock', 'optics', 'polarization', 'records']
