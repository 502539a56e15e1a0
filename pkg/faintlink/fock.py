"""
Truncated Fock-space oracle for two coherent states on a beamsplitter.

Each input port carries two submodes: ``A``, shared by both lasers, and
``B``, orthogonal to it. Laser 1 lives entirely in ``A``; laser 2 puts an
amplitude fraction ``sqrt(eta)`` into ``A`` and ``sqrt(1 - eta)`` into ``B``,
so ``eta`` is the total indistinguishability. Coherent states are expanded
photon by photon, every Fock term is sent through the exact 50/50
transformation and the relative laser phase is averaged exactly on a
uniform grid. Nothing here shares code with the semiclassical engine.
"""
import functools
import logging
import math

import numpy as np
import scipy.special
import scipy.stats

from .exceptions import DomainError

logger = logging.getLogger(__name__)

TRUNCATION_TOLERANCE = 1e-9
DEFAULT_N_MAX = 16


@functools.lru_cache(maxsize=8)
def beamsplitter_tensor(n_max):
    """
    Fock amplitudes of the 50/50 beamsplitter.

    ``T[n, m, p]`` is the amplitude of ``|p, n + m - p>`` at the outputs for
    ``|n, m>`` at the inputs, with a -> (c + d)/sqrt(2) and
    b -> (c - d)/sqrt(2).
    """
    fact = scipy.special.factorial(np.arange(2 * n_max + 1))
    tensor = np.zeros((n_max + 1, n_max + 1, 2 * n_max + 1))
    for n in range(n_max + 1):
        for m in range(n_max + 1):
            norm = 2.0 ** (-(n + m) / 2) / math.sqrt(fact[n] * fact[m])
            for i in range(n + 1):
                for j in range(m + 1):
                    p = i + j
                    q = n + m - p
                    tensor[n, m, p] += (math.comb(n, i) * math.comb(m, j)
                                        * (-1) ** (m - j)
                                        * math.sqrt(fact[p] * fact[q])
                                        * norm)
    tensor.setflags(write=False)
    return tensor


def coherent_amplitudes(mu, n_max):
    """Fock amplitudes of a coherent state with real amplitude sqrt(mu)."""
    if mu == 0:
        amps = np.zeros(n_max + 1)
        amps[0] = 1.0
        return amps
    n = np.arange(n_max + 1)
    return np.exp(-mu / 2 + 0.5 * n * math.log(mu)
                  - 0.5 * scipy.special.gammaln(n + 1))


def _output_distribution(amps_a, amps_b, tensor, phases):
    """
    Output photon-number distribution, averaged over the relative phase.

    Returns
    -------
    ndarray
        ``prob[total, p]``: probability of ``p`` photons in port c and
        ``total - p`` in port d.
    """
    n_max = amps_a.size - 1
    idx = np.arange(n_max + 1)
    totals = np.add.outer(idx, idx)
    prob = np.zeros((2 * n_max + 1, 2 * n_max + 1))
    for phi in phases:
        joint = np.outer(amps_a, amps_b * np.exp(1j * idx * phi))
        psi = np.zeros((2 * n_max + 1, 2 * n_max + 1), dtype=complex)
        np.add.at(psi, totals, joint[:, :, None] * tensor)
        prob += np.abs(psi) ** 2
    return prob / len(phases)


def _check_truncation(mu1, mu2, n_max):
    if mu1 < 0 or mu2 < 0:
        raise DomainError(
            f"Mean photon numbers must be >= 0, got {mu1}, {mu2}")
    if mu1 + mu2 == 0:
        raise DomainError("At least one source must emit light")
    if n_max < 2:
        raise DomainError(f"Fock cutoff must be >= 2, got {n_max}")
    tail = scipy.stats.poisson.sf(n_max, mu1 + mu2)
    if tail >= TRUNCATION_TOLERANCE:
        raise DomainError(
            f"Poisson weight above n_max={n_max} is {tail:.3g} for "
            f"mu1 + mu2 = {mu1 + mu2}; raise n_max")


def fock_oracle_coincidence_probability(mu1, mu2, eta, n_max=DEFAULT_N_MAX):
    """
    Probability of at least one photon in each beamsplitter output.

    Unit detection efficiency and no dark counts. Truncation loss is
    renormalized away.

    Parameters
    ----------
    mu1, mu2 : float
        Mean photon numbers of the two coherent states.
    eta : float
        Indistinguishability in [0, 1].
    n_max : int, optional
        Photon-number cutoff per mode.

    Raises
    ------
    DomainError
        If the Poisson weight above ``n_max`` is not below 1e-9, or for
        arguments outside their domain.
    """
    _check_truncation(mu1, mu2, n_max)
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"Overlap eta must be in [0, 1], got {eta}")
    tensor = beamsplitter_tensor(n_max)
    vacuum = coherent_amplitudes(0.0, n_max)
    n_phases = 2 * n_max + 2
    phases = 2 * math.pi * np.arange(n_phases) / n_phases

    shared = _output_distribution(coherent_amplitudes(mu1, n_max),
                                  coherent_amplitudes(eta * mu2, n_max),
                                  tensor, phases)
    private = _output_distribution(vacuum,
                                   coherent_amplitudes((1 - eta) * mu2, n_max),
                                   tensor, [0.0])
    marginals = []
    for prob in (shared, private):
        total = prob.sum()
        marginals.append((prob[:, 0].sum() / total,
                          np.trace(prob) / total,
                          prob[0, 0] / total))
    (c0_a, d0_a, both0_a), (c0_b, d0_b, both0_b) = marginals
    probability = 1.0 - c0_a * c0_b - d0_a * d0_b + both0_a * both0_b
    logger.debug("Fock oracle mu=(%g, %g) eta=%g n_max=%d -> %.12g",
                 mu1, mu2, eta, n_max, probability)
    return float(probability)


def fock_oracle_coincidence(mu1, mu2, eta, n_max=DEFAULT_N_MAX):
    """
    Coincidence ratio C_ind / C_dist computed in the Fock basis.

    The distinguishable baseline is the same calculation at ``eta = 0``,
    so ``eta = 0`` returns exactly 1.
    """
    baseline = fock_oracle_coincidence_probability(mu1, mu2, 0.0, n_max)
    if eta == 0:
        return 1.0
    return fock_oracle_coincidence_probability(mu1, mu2, eta, n_max) / baseline
