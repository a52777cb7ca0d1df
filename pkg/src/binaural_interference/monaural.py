"""Monaural pathway: energy of the on-frequency channel."""
from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateInputError, ParameterError


def channel_power(channels) -> float:
    """Half the mean squared envelope of the left on-frequency channel."""
    left, _ = channels.steady()
    u0 = left[channels.grid.on_frequency_index]
    return float(np.mean(np.abs(u0) ** 2) / 2)


def dprime_monaural(p_ns, p_n, sigma_m: float) -> float:
    """Relative power change between ensembles divided by ``sigma_m``.

    The reference power is the arithmetic mean of the two ensemble means.
    A decrease in power gives a negative value.
    """
    p_ns = np.ravel(np.asarray(p_ns, dtype=float))
    p_n = np.ravel(np.asarray(p_n, dtype=float))
    if p_ns.size < 2 or p_n.size < 2:
        raise ValueError("need at least two tokens per ensemble")
    if sigma_m <= 0:
        raise ParameterError("sigma_m must be positive")
    m_ns = math.fsum(p_ns) / p_ns.size
    m_n = math.fsum(p_n) / p_n.size
    p_avg = (m_ns + m_n) / 2
    if p_avg <= 0:
        raise DegenerateInputError("both ensembles have zero power")
    return (m_ns - m_n) / p_avg / sigma_m
