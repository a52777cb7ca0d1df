"""Seedable synthesis of the masker and target stimuli.

Maskers are built in the frequency domain: independent complex Gaussian
coefficients on every DFT bin inside the masker band, with interaural delays
and phase shifts applied to the right-ear coefficients.  Delays therefore
need not be integer samples and band edges and phase transitions are exact.
A token is periodic in its own duration.

Sign convention: a positive ITD delays the right ear, and a positive IPD
makes the right ear lag, i.e. right = left * exp(-i * IPD) per bin.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .filterbank import DEFAULT_SAMPLE_RATE, GammatoneFilter

DEFAULT_DURATION = 0.5


class MaskerKind(str, enum.Enum):
    SDN = "SDN"
    ODN = "ODN"
    DIOTIC = "Diotic"
    FLANKED = "FlankedComposite"


@dataclass(frozen=True)
class StereoSignal:
    left: np.ndarray
    right: np.ndarray
    sample_rate: float

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ValueError("left and right channels differ in length")
        if not (np.all(np.isfinite(self.left)) and np.all(np.isfinite(self.right))):
            raise ValueError("non-finite samples")

    @property
    def duration(self) -> float:
        return self.left.size / self.sample_rate

    def __len__(self):
        return self.left.size


@dataclass(frozen=True)
class MaskerSpec:
    """Masker description.

    For ``FLANKED`` maskers ``inner_kind`` fills ``inner_band`` (using
    ``itd`` for SDN/ODN) and the remainder of ``band`` carries the constant
    IPDs ``flank_ipds = (lower, upper)``.
    """

    kind: MaskerKind = MaskerKind.SDN
    band: tuple[float, float] = (50.0, 950.0)
    itd: float = 0.0
    inner_band: tuple[float, float] | None = None
    flank_ipds: tuple[float, float] = (0.0, 0.0)
    inner_kind: MaskerKind = MaskerKind.DIOTIC
    spectrum_level: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MaskerKind(self.kind))
        object.__setattr__(self, "inner_kind", MaskerKind(self.inner_kind))
        lo, hi = self.band
        if not 0 < lo < hi:
            raise ConfigurationError(f"invalid masker band {self.band!r}")
        if self.kind is MaskerKind.FLANKED:
            if self.inner_band is None:
                raise ConfigurationError("flanked masker needs an inner band")
            ilo, ihi = self.inner_band
            if not lo <= ilo <= ihi <= hi:
                raise ConfigurationError("inner band must lie inside the masker band")
            if self.inner_kind is MaskerKind.FLANKED:
                raise ConfigurationError("inner band cannot itself be flanked")
            if max(abs(p) for p in self.flank_ipds) > np.pi + 1e-12:
                raise ConfigurationError("flank IPDs must lie in [-pi, pi]")


@dataclass(frozen=True)
class TargetSpec:
    frequency: float = 500.0
    ipd: float = 0.0
    level: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.level):
            raise ConfigurationError("target level must be finite")


def n_samples(duration: float, sample_rate: float) -> int:
    if duration <= 0:
        raise ConfigurationError("duration must be positive")
    return int(round(duration * sample_rate))


def _gaussian_bins(rng, size):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def masker_spectra(spec: MaskerSpec, n: int, sample_rate: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """One-sided DFT spectra ``(L, R)`` of a masker token of ``n`` samples.

    Two independent noises are always drawn so that tokens with the same
    seed share their first noise across masker kinds.
    """
    lo, hi = spec.band
    if hi >= sample_rate / 2:
        raise ConfigurationError(f"masker band {spec.band!r} reaches Nyquist")
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    rng = np.random.default_rng(seed)
    z1 = _gaussian_bins(rng, freqs.size)
    z2 = _gaussian_bins(rng, freqs.size)
    # one-sided spectral density N0 per Hz on every in-band bin
    n0 = 10.0 ** (spec.spectrum_level / 10.0)
    scale = np.sqrt(n0 * sample_rate * n / 4.0)

    in_band = (freqs >= lo) & (freqs <= hi)
    left = np.zeros(freqs.size, complex)
    right = np.zeros(freqs.size, complex)

    def fill(mask, kind, itd):
        delay = np.exp(-2j * np.pi * freqs[mask] * itd)
        a = z1[mask]
        if kind is MaskerKind.ODN:
            b = z2[mask]
            left[mask] = (a + b) / np.sqrt(2)
            right[mask] = (a * delay + b * np.conj(delay)) / np.sqrt(2)
        elif kind is MaskerKind.SDN:
            left[mask] = a
            right[mask] = a * delay
        else:
            left[mask] = a
            right[mask] = a

    if spec.kind is MaskerKind.FLANKED:
        ilo, ihi = spec.inner_band
        inner = in_band & (freqs >= ilo) & (freqs <= ihi) if ihi > ilo else np.zeros_like(in_band)
        lower = in_band & (freqs < ilo)
        upper = in_band & ~inner & ~lower
        fill(inner, spec.inner_kind, spec.itd)
        for mask, ipd in ((lower, spec.flank_ipds[0]), (upper, spec.flank_ipds[1])):
            left[mask] = z1[mask]
            right[mask] = z1[mask] * np.exp(-1j * ipd)
    else:
        fill(in_band, spec.kind, spec.itd)
    return left * scale, right * scale


def gen_masker(spec: MaskerSpec, duration: float = DEFAULT_DURATION,
               sample_rate: float = DEFAULT_SAMPLE_RATE, seed=0) -> StereoSignal:
    n = n_samples(duration, sample_rate)
    left, right = masker_spectra(spec, n, sample_rate, seed)
    return StereoSignal(np.fft.irfft(left, n), np.fft.irfft(right, n), sample_rate)


def reference_power(spectrum_level: float = 0.0, sample_rate: float = DEFAULT_SAMPLE_RATE,
                    frequency: float = 500.0) -> float:
    """Expected masker power in the on-frequency channel.

    Spectral density times the noise bandwidth of the channel at
    ``frequency``; target levels are expressed in dB re this power.
    """
    n0 = 10.0 ** (spectrum_level / 10.0)
    return n0 * GammatoneFilter(frequency, sample_rate).noise_bandwidth()


def tone_amplitude(level: float, ref_power: float) -> float:
    # channel power of a unit-gain tone is A^2 / 2
    return float(np.sqrt(2.0 * ref_power * 10.0 ** (level / 10.0)))


def tone(frequency: float, ipd: float, amplitude: float, duration: float = DEFAULT_DURATION,
         sample_rate: float = DEFAULT_SAMPLE_RATE) -> StereoSignal:
    if frequency >= sample_rate / 2:
        raise ConfigurationError("target frequency above Nyquist")
    t = np.arange(n_samples(duration, sample_rate)) / sample_rate
    phase = 2 * np.pi * frequency * t
    left = amplitude * np.cos(phase)
    if ipd == 0:
        right = left.copy()
    elif ipd == np.pi:
        right = -left
    else:
        right = amplitude * np.cos(phase - ipd)
    return StereoSignal(left, right, sample_rate)


def gen_target(spec: TargetSpec, duration: float = DEFAULT_DURATION,
               sample_rate: float = DEFAULT_SAMPLE_RATE, ref_power: float | None = None) -> StereoSignal:
    """Pure tone, right ear lagging by ``spec.ipd``, at ``spec.level`` dB re ``ref_power``.

    ``ref_power`` defaults to the on-frequency masker power of a 0-dB
    spectrum-level masker (see :func:`reference_power`).
    """
    if ref_power is None:
        ref_power = reference_power(sample_rate=sample_rate, frequency=spec.frequency)
    amp = tone_amplitude(spec.level, ref_power)
    return tone(spec.frequency, spec.ipd, amp, duration, sample_rate)


def mix(masker: StereoSignal, target: StereoSignal) -> StereoSignal:
    if masker.sample_rate != target.sample_rate or len(masker) != len(target):
        raise ValueError("masker and target differ in sample rate or length")
    return StereoSignal(masker.left + target.left, masker.right + target.right, masker.sample_rate)


def analytic_coherence_odn(frequency, itd):
    """Coherence of opposingly delayed noises at ``frequency``: ``|cos(2 pi f ITD)|``."""
    return np.abs(np.cos(2 * np.pi * np.asarray(frequency, dtype=float) * itd))


def narrowband_coherence(signals, frequency: float, bandwidth: float = 10.0) -> float:
    """Interaural coherence in a rectangular band around ``frequency``.

    Cross- and auto-spectra are pooled over all DFT bins in the band and
    over all signals before normalising.
    """
    if isinstance(signals, StereoSignal):
        signals = [signals]
    cross = pl = pr = 0.0
    for sig in signals:
        freqs = np.fft.rfftfreq(len(sig), 1.0 / sig.sample_rate)
        sel = np.abs(freqs - frequency) <= bandwidth / 2
        if not sel.any():
            raise ValueError("analysis band contains no DFT bin")
        L = np.fft.rfft(sig.left)[sel]
        R = np.fft.rfft(sig.right)[sel]
        cross = cross + np.sum(np.conj(L) * R)
        pl += np.sum(np.abs(L) ** 2)
        pr += np.sum(np.abs(R) ** 2)
    return float(np.abs(cross) / np.sqrt(pl * pr))


def write_wav(path, signal: StereoSignal) -> None:
    """Two-channel 32-bit float WAV, for listening checks."""
    from scipy.io import wavfile

    data = np.stack([signal.left, signal.right], axis=1).astype(np.float32)
    wavfile.write(path, int(round(signal.sample_rate)), data)
