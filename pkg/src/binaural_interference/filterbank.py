"""Complex fourth-order Gammatone filterbank on an ERB-spaced grid.

Each channel is an all-pole complex filter (a cascade of identical
first-order sections with a single complex pole), which yields an analytic
output whose modulus is the Hilbert envelope of the band.  Filters are
normalised so that a real sinusoid of amplitude ``A`` at the centre frequency
produces an output of modulus ``A``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigurationError

DEFAULT_SAMPLE_RATE = 48000.0
DEFAULT_TRANSIENT = 0.05
ORDER = 4


def erb_of(frequency):
    """Equivalent rectangular bandwidth (Hz) of the auditory filter at ``frequency``.

    Glasberg & Moore (1990): ``24.7 * (4.37 * f / 1000 + 1)``.
    """
    f = np.asarray(frequency, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    erb = 24.7 * (4.37e-3 * f + 1.0)
    return float(erb) if erb.ndim == 0 else erb


def erb_number(frequency):
    """Position of ``frequency`` on the ERB-number scale (Cams)."""
    f = np.asarray(frequency, dtype=float)
    e = 21.4 * np.log10(4.37e-3 * f + 1.0)
    return float(e) if e.ndim == 0 else e


def erb_number_to_hz(number):
    e = np.asarray(number, dtype=float)
    f = (10.0 ** (e / 21.4) - 1.0) / 4.37e-3
    return float(f) if f.ndim == 0 else f


@dataclass(frozen=True)
class ErbGrid:
    """Centre frequencies spaced ``1/filters_per_erb`` apart on the ERB-number scale.

    ``on_frequency_index`` points at the anchor channel; relative channel
    numbers ``k`` (negative below the anchor) are given by :attr:`offsets`.
    """

    center_frequencies: np.ndarray
    on_frequency_index: int
    filters_per_erb: float = 5.0

    def __post_init__(self):
        fc = np.asarray(self.center_frequencies, dtype=float)
        object.__setattr__(self, "center_frequencies", fc)
        if fc.ndim != 1 or fc.size == 0:
            raise ConfigurationError("grid must contain at least one channel")
        if not 0 <= self.on_frequency_index < fc.size:
            raise ConfigurationError("on-frequency index outside grid")
        if fc.size > 1 and np.any(np.diff(fc) <= 0):
            raise ConfigurationError("centre frequencies must increase")

    def __len__(self):
        return self.center_frequencies.size

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(len(self)) - self.on_frequency_index

    @property
    def on_frequency(self) -> float:
        return float(self.center_frequencies[self.on_frequency_index])


def build_grid(anchor: float = 500.0, filters_per_erb: float = 5.0,
               frange: tuple[float, float] = (67.0, 1000.0)) -> ErbGrid:
    """Step ``1/filters_per_erb`` ERB up and down from ``anchor`` while inside ``frange``."""
    lo, hi = frange
    if not (0 < lo <= hi):
        raise ConfigurationError(f"empty frequency range {frange!r}")
    if not lo <= anchor <= hi:
        raise ConfigurationError("anchor must lie inside the frequency range")
    if filters_per_erb < 1:
        raise ConfigurationError("filters_per_erb must be >= 1")
    step = 1.0 / filters_per_erb
    e0, elo, ehi = erb_number(anchor), erb_number(lo), erb_number(hi)
    # small slack so range edges that land exactly on a grid point are kept
    n_below = int(np.floor((e0 - elo) / step + 1e-9))
    n_above = int(np.floor((ehi - e0) / step + 1e-9))
    numbers = e0 + step * np.arange(-n_below, n_above + 1)
    fc = erb_number_to_hz(numbers)
    fc = np.atleast_1d(fc)
    fc[n_below] = anchor
    return ErbGrid(fc, n_below, float(filters_per_erb))


def _bandwidth_factor(order: int) -> float:
    # ratio ERB / b for a gammatone of the given order
    n = order
    return np.pi * factorial(2 * n - 2) * 2.0 ** (-(2 * n - 2)) / factorial(n - 1) ** 2


@dataclass(frozen=True)
class GammatoneFilter:
    """All-pole complex Gammatone channel (Hohmann 2002 design)."""

    center_frequency: float
    sample_rate: float = DEFAULT_SAMPLE_RATE
    order: int = ORDER
    erb: float = field(default=None)

    def __post_init__(self):
        if self.erb is None:
            object.__setattr__(self, "erb", erb_of(self.center_frequency))
        if self.center_frequency >= self.sample_rate / 2:
            raise ConfigurationError("centre frequency must be below Nyquist")

    @property
    def pole(self) -> complex:
        b = self.erb / _bandwidth_factor(self.order)
        lam = np.exp(-2 * np.pi * b / self.sample_rate)
        return complex(lam * np.exp(2j * np.pi * self.center_frequency / self.sample_rate))

    @property
    def gain(self) -> float:
        # factor 2 restores the amplitude of a real input folded onto one side
        return 2.0 * (1.0 - abs(self.pole)) ** self.order

    def frequency_response(self, frequencies) -> np.ndarray:
        """Exact transfer function ``H(e^{i 2 pi f / fs})`` at ``frequencies`` (Hz)."""
        f = np.asarray(frequencies, dtype=float)
        zinv = np.exp(-2j * np.pi * f / self.sample_rate)
        return self.gain / (1.0 - self.pole * zinv) ** self.order

    def filter(self, x, axis=-1) -> np.ndarray:
        """Run the cascade on ``x`` from a zero initial state."""
        y = np.asarray(x)
        a = [1.0, -self.pole]
        y = lfilter([self.gain], a, y, axis=axis)
        for _ in range(self.order - 1):
            y = lfilter([1.0], a, y, axis=axis)
        return y

    def noise_bandwidth(self, resolution: float = 0.05) -> float:
        """Numerically integrated equivalent rectangular bandwidth of ``|H|^2`` (Hz).

        Integrates over the whole band ``[-fs/2, fs/2)``, normalised by the
        squared response at the centre frequency.
        """
        n = int(np.ceil(self.sample_rate / resolution))
        f = (np.arange(n) / n - 0.5) * self.sample_rate
        h2 = np.abs(self.frequency_response(f)) ** 2
        peak = np.abs(self.frequency_response(self.center_frequency)) ** 2
        return float(h2.sum() * (self.sample_rate / n) / peak)


def make_filters(grid: ErbGrid, sample_rate: float = DEFAULT_SAMPLE_RATE) -> list[GammatoneFilter]:
    if sample_rate <= 2 * grid.center_frequencies.max():
        raise ConfigurationError(
            f"sample rate {sample_rate} Hz too low for a {grid.center_frequencies.max():.1f} Hz channel")
    return [GammatoneFilter(float(fc), sample_rate) for fc in grid.center_frequencies]


def response_matrix(filters, frequencies) -> np.ndarray:
    """Stack of channel transfer functions, shape ``(channels, len(frequencies))``."""
    return np.stack([flt.frequency_response(frequencies) for flt in filters])


@dataclass
class AnalyticChannels:
    """Complex filter outputs per channel, shape ``(channels, samples)`` per ear."""

    left: np.ndarray
    right: np.ndarray
    sample_rate: float
    grid: ErbGrid
    transient: float = DEFAULT_TRANSIENT

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ValueError("left and right outputs differ in shape")
        if self.left.shape[0] != len(self.grid):
            raise ValueError("channel count does not match the grid")

    def steady(self) -> tuple[np.ndarray, np.ndarray]:
        """Outputs with the onset transient removed."""
        start = int(round(self.transient * self.sample_rate))
        if start >= self.left.shape[1]:
            raise ValueError("signal shorter than the transient to discard")
        return self.left[:, start:], self.right[:, start:]


def filter_stereo(signal, grid: ErbGrid, transient: float = DEFAULT_TRANSIENT,
                  filters=None) -> AnalyticChannels:
    """Pass both ears of ``signal`` through every channel of ``grid``."""
    fs = signal.sample_rate
    filters = make_filters(grid, fs) if filters is None else filters
    x = np.stack([signal.left, signal.right])
    out = np.stack([flt.filter(x, axis=-1) for flt in filters])
    return AnalyticChannels(out[:, 0], out[:, 1], fs, grid, transient)
