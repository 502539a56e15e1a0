import functools
import hashlib
import json
import logging
import math

import numpy as np

from . import polarization
from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = ".12g"


@functools.lru_cache(maxsize=None)
def named_states():
    """Named states of polarization accepted in configuration files."""
    return {
        "H": polarization.H,
        "V": polarization.V,
        "D": polarization.D,
        "A": polarization.A,
        "RCP": polarization.RCP,
        "LCP": polarization.LCP,
    }


def parse_sop(value):
    """
    Build a normalized JonesVector from its configuration form.

    Parameters
    ----------
    value : str or dict
        A name from :func:`named_states`, ``{'linear_deg': angle}`` for a
        linear state at a Jones-space angle, ``{'stokes': [s1, s2, s3]}`` or
        ``{'jones': [[h_re, h_im], [v_re, v_im]]}``.

    Returns
    -------
    JonesVector
    """
    if isinstance(value, str):
        try:
            return named_states()[value.upper()]
        except KeyError:
            raise ConfigurationError(
                f'Invalid SOP name ({value}); expected one of '
                f'{sorted(named_states())}.') from None
    if not isinstance(value, dict) or len(value) != 1:
        raise ConfigurationError(f'Invalid SOP specification: {value!r}')
    (kind, data), = value.items()
    try:
        if kind == 'linear_deg':
            return polarization.linear(math.radians(float(data)))
        if kind == 'stokes':
            return polarization.from_stokes(
                polarization.StokesVector(*map(float, data)))
        if kind == 'jones':
            (h_re, h_im), (v_re, v_im) = data
            return polarization.JonesVector(complex(h_re, h_im),
                                            complex(v_re, v_im)).normalize()
    except (TypeError, ValueError) as ex:
        raise ConfigurationError(f'Invalid SOP {kind}: {data!r} ({ex})') \
            from ex
    raise ConfigurationError(f'Unknown SOP kind ({kind}) in {value!r}')


def partner_sop(sop, theta):
    """
    State at Jones-space angle ``theta`` from ``sop``.

    Returns ``cos(theta) |sop> + sin(theta) |sop_perp>`` so that the overlap
    with ``sop`` is ``cos(theta)**2``.
    """
    perp = polarization.JonesVector(-sop.v.conjugate(), sop.h.conjugate())
    return polarization.JonesVector(
        math.cos(theta) * sop.h + math.sin(theta) * perp.h,
        math.cos(theta) * sop.v + math.sin(theta) * perp.v,
    ).normalize()


def spawn_generators(seed, n):
    """``n`` independent generators derived from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.default_rng(child) for child in children]


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def config_hash(obj):
    """SHA-256 hex digest of the canonical JSON form of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode('utf-8')).hexdigest()
