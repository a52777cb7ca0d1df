"""Binaural pathway: complex interaural correlation per channel, across-channel
incoherence interference, Fisher-z decision variable and binaural d'.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelCorrelations:
    """Complex correlation coefficients; the last axis indexes channels."""

    gamma: np.ndarray
    on_frequency_index: int

    @property
    def on_frequency(self):
        return self.gamma[..., self.on_frequency_index]


@dataclass(frozen=True)
class InterferenceParams:
    sigma_w: float
    filters_per_erb: float = 5.0

    def __post_init__(self):
        if not self.sigma_w > 0:
            raise ParameterError("sigma_w must be positive")


@dataclass(frozen=True)
class BinauralDecision:
    zeta: complex | np.ndarray


def correlation_from_moments(cross, power_l, power_r) -> np.ndarray:
    """``cross / sqrt(power_l * power_r)``; channels without power get 0."""
    cross = np.asarray(cross)
    denom = np.sqrt(np.asarray(power_l, dtype=float) * np.asarray(power_r, dtype=float))
    dead = denom <= 0
    if np.any(dead):
        log.warning("%d channel(s) without power treated as incoherent", int(dead.sum()))
    with np.errstate(invalid="ignore", divide="ignore"):
        gamma = np.where(dead, 0.0, cross / np.where(dead, 1.0, denom))
    return gamma


def channel_correlation(channels) -> ChannelCorrelations:
    """Temporal-mean complex correlation of the steady-state filter outputs."""
    left, right = channels.steady()
    cross = np.mean(np.conj(left) * right, axis=-1)
    gamma = correlation_from_moments(cross, np.mean(np.abs(left) ** 2, axis=-1),
                                     np.mean(np.abs(right) ** 2, axis=-1))
    return ChannelCorrelations(gamma, channels.grid.on_frequency_index)


def interference_weights(offsets, params: InterferenceParams) -> np.ndarray:
    """Normalised double-exponential window over relative channel numbers ``offsets``."""
    k = np.abs(np.asarray(offsets, dtype=float))
    w = np.exp(-k / (params.filters_per_erb * params.sigma_w))
    return w / w.sum()


def interfere(corr: ChannelCorrelations, params: InterferenceParams | None) -> np.ndarray:
    """Interference-weighted correlation ``gamma_w``.

    Channel coherences are capped at the on-frequency coherence, averaged
    with the normalised window and given the on-frequency phase.  With
    ``params=None`` the on-frequency correlation is returned unchanged
    (single-channel model).
    """
    gamma = np.asarray(corr.gamma)
    g0 = gamma[..., corr.on_frequency_index]
    if params is None:
        return g0
    offsets = np.arange(gamma.shape[-1]) - corr.on_frequency_index
    w = interference_weights(offsets, params)
    mag0 = np.abs(g0)
    limited = np.minimum(np.abs(gamma), mag0[..., None])
    mag_w = limited @ w
    return mag_w * np.exp(1j * np.angle(g0))


def decision_variable(gamma_w, rho_hat: float) -> BinauralDecision:
    """Fisher-z of ``rho_hat * |gamma_w|`` keeping the phase of ``gamma_w``."""
    if not 0 < rho_hat < 1:
        raise ParameterError("rho_hat must lie in (0, 1)")
    g = np.asarray(gamma_w)
    zeta = np.arctanh(rho_hat * np.abs(g)) * np.exp(1j * np.angle(g))
    return BinauralDecision(zeta if zeta.ndim else complex(zeta))


def dprime_binaural(zeta_ns, zeta_n, sigma_b: float) -> float:
    """``|mean(zeta_ns) - mean(zeta_n)| / sigma_b``."""
    zeta_ns = np.ravel(zeta_ns)
    zeta_n = np.ravel(zeta_n)
    if zeta_ns.size < 2 or zeta_n.size < 2:
        raise ValueError("need at least two tokens per ensemble")
    if sigma_b <= 0:
        raise ParameterError("sigma_b must be positive")
    return float(np.abs(_mean(zeta_ns) - _mean(zeta_n)) / sigma_b)


def _mean(z):
    # fsum is exact, so token order cannot change the result
    z = np.asarray(z, dtype=complex)
    return complex(math.fsum(z.real), math.fsum(z.imag)) / z.size
