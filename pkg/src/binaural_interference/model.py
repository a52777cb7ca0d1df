"""Full detection model for one masker/target condition.

For every token the filterbank outputs enter the model only through
second-order temporal means (cross power and the two auto powers per
channel).  Because the filterbank is linear, those means for masker plus a
target of amplitude ``a`` are a quadratic polynomial in ``a`` whose
coefficients are computed once per token.  A whole level sweep then costs no
further filtering, and every level sees exactly the same noise tokens.

Two backends produce the coefficients:

``"spectral"``
    Steady-state response of the (periodic) token, evaluated on its DFT
    bins with the exact transfer function of each channel; temporal means
    follow from Parseval's theorem over one full period.
``"time"``
    Causal filtering from rest with :func:`filter_stereo` and temporal means
    over the output after the onset transient is discarded.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import binaural, monaural
from .decision import SweepResult, ThresholdEstimate, combine, find_threshold
from .errors import NoThresholdError, ParameterError
from .filterbank import (DEFAULT_SAMPLE_RATE, DEFAULT_TRANSIENT, ErbGrid, build_grid,
                         filter_stereo, make_filters, response_matrix)
from .stimuli import (DEFAULT_DURATION, MaskerSpec, StereoSignal, TargetSpec, masker_spectra,
                      n_samples, reference_power, tone, tone_amplitude)

NOISE_ONLY, SIGNAL_PLUS_NOISE = 0, 1
SWEEP_POINTS = 12
SWEEP_STEP = 2.0
SEARCH_RANGE = (-60.0, 40.0)


@dataclass(frozen=True)
class ModelParams:
    rho_hat: float
    sigma_b: float
    sigma_w: float
    sigma_m: float
    interference_enabled: bool = True

    def __post_init__(self):
        if not 0 < self.rho_hat < 1:
            raise ParameterError("rho_hat must lie in (0, 1)")
        if min(self.sigma_b, self.sigma_w, self.sigma_m) <= 0:
            raise ParameterError("all sigma parameters must be positive")

    def without_interference(self) -> "ModelParams":
        return replace(self, interference_enabled=False)


# fitted values per experiment and target phase
TABLE1 = {
    "vdh1999-spi": ModelParams(0.91, 0.20, 0.50, 0.40),
    "vdh1999-s0": ModelParams(0.86, 0.17, 0.65, 0.40),
    "marquardt2009": ModelParams(0.89, 0.24, 0.65, 0.40),
    "kolarik2010": ModelParams(0.91, 0.20, 0.50, 0.40),
}


@dataclass(frozen=True)
class Simulation:
    """Numerical settings shared by every condition of a run."""

    sample_rate: float = DEFAULT_SAMPLE_RATE
    duration: float = DEFAULT_DURATION
    tokens: int = 100
    seed: int = 0
    backend: str = "spectral"
    transient: float = DEFAULT_TRANSIENT
    paired: bool = True
    grid: ErbGrid = field(default_factory=build_grid)

    def __post_init__(self):
        if self.tokens < 2:
            raise ValueError("need at least two tokens per ensemble")
        if self.backend not in ("spectral", "time"):
            raise ValueError(f"unknown backend {self.backend!r}")


def token_seed(seed: int, interval: int, index: int) -> np.random.SeedSequence:
    """Seed of one noise token; independent of the condition so that all
    conditions of a run share their noise draws."""
    return np.random.SeedSequence(seed, spawn_key=(interval, index))


@dataclass
class Moments:
    """Quadratic-in-amplitude coefficients of the per-token channel means.

    ``lr``, ``ll``, ``rr`` are the masker-only means with shape
    ``(tokens, channels)``; ``x_*`` are masker x unit-target cross terms of the
    same shape (real parts for the auto powers, both orders for the cross
    power) and ``q_*`` the unit-target means, shape ``(channels,)``.
    """

    lr: np.ndarray
    ll: np.ndarray
    rr: np.ndarray
    x_lr: np.ndarray
    x_rl: np.ndarray
    x_ll: np.ndarray
    x_rr: np.ndarray
    q_lr: np.ndarray
    q_ll: np.ndarray
    q_rr: np.ndarray

    def at(self, amplitude: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a = amplitude
        lr = self.lr + a * (self.x_lr + self.x_rl) + a * a * self.q_lr
        ll = self.ll + 2 * a * self.x_ll + a * a * self.q_ll
        rr = self.rr + 2 * a * self.x_rr + a * a * self.q_rr
        return lr, ll, rr


def _weights(sim: Simulation, f: np.ndarray):
    filters = make_filters(sim.grid, sim.sample_rate)
    # a real input occupies +f and -f; the complex filter weighs them differently
    w_pos = np.abs(response_matrix(filters, f)) ** 2
    w_neg = np.abs(response_matrix(filters, -f)) ** 2
    edge = (f == 0) | np.isclose(f, sim.sample_rate / 2)
    w_neg[:, edge] = 0.0
    return w_pos, w_neg


def _cross_mean(x, y, w_pos, w_neg, n):
    # temporal mean of conj(filtered x) * filtered y per channel (Parseval)
    p = np.conj(x) * y
    return (p @ w_pos.T + np.conj(p) @ w_neg.T) / n ** 2


def _spectral_moments(spectra, target, sim: Simulation) -> Moments:
    n = n_samples(sim.duration, sim.sample_rate)
    freqs = np.fft.rfftfreq(n, 1.0 / sim.sample_rate)
    tl, tr = target
    L = np.stack([s[0] for s in spectra])
    R = np.stack([s[1] for s in spectra])
    tmax = max(np.abs(tl).max(), np.abs(tr).max())
    used = (np.any(L != 0, axis=0) | np.any(R != 0, axis=0)
            | (np.abs(tl) > 1e-9 * tmax) | (np.abs(tr) > 1e-9 * tmax))
    L, R, tl, tr = L[:, used], R[:, used], tl[None, used], tr[None, used]
    w = _weights(sim, freqs[used])

    def cm(x, y):
        return _cross_mean(x, y, *w, n)

    return Moments(
        lr=cm(L, R), ll=cm(L, L).real, rr=cm(R, R).real,
        x_lr=cm(L, tr), x_rl=cm(tl, R), x_ll=cm(L, tl).real, x_rr=cm(R, tr).real,
        q_lr=cm(tl, tr)[0], q_ll=cm(tl, tl)[0].real, q_rr=cm(tr, tr)[0].real,
    )


def _time_moments(signals, target: StereoSignal, sim: Simulation) -> Moments:
    filters = make_filters(sim.grid, sim.sample_rate)
    tgt = filter_stereo(target, sim.grid, sim.transient, filters)
    tl, tr = tgt.steady()
    out = {k: [] for k in ("lr", "ll", "rr", "x_lr", "x_rl", "x_ll", "x_rr")}
    for sig in signals:
        l, r = filter_stereo(sig, sim.grid, sim.transient, filters).steady()
        out["lr"].append(np.mean(np.conj(l) * r, axis=-1))
        out["ll"].append(np.mean(np.abs(l) ** 2, axis=-1))
        out["rr"].append(np.mean(np.abs(r) ** 2, axis=-1))
        out["x_lr"].append(np.mean(np.conj(l) * tr, axis=-1))
        out["x_rl"].append(np.mean(np.conj(tl) * r, axis=-1))
        out["x_ll"].append(np.mean(np.conj(l) * tl, axis=-1).real)
        out["x_rr"].append(np.mean(np.conj(r) * tr, axis=-1).real)
    arrays = {k: np.stack(v) for k, v in out.items()}
    return Moments(
        **arrays,
        q_lr=np.mean(np.conj(tl) * tr, axis=-1),
        q_ll=np.mean(np.abs(tl) ** 2, axis=-1),
        q_rr=np.mean(np.abs(tr) ** 2, axis=-1),
    )


def interval_moments(masker: MaskerSpec, target: TargetSpec, sim: Simulation, interval: int) -> Moments:
    """Channel-mean coefficients for the ``sim.tokens`` tokens of one interval class."""
    n = n_samples(sim.duration, sim.sample_rate)
    unit = tone(target.frequency, target.ipd, 1.0, sim.duration, sim.sample_rate)
    spectra = [masker_spectra(masker, n, sim.sample_rate, token_seed(sim.seed, interval, i))
               for i in range(sim.tokens)]
    if sim.backend == "spectral":
        return _spectral_moments(spectra, (np.fft.rfft(unit.left), np.fft.rfft(unit.right)), sim)
    signals = (StereoSignal(np.fft.irfft(l, n), np.fft.irfft(r, n), sim.sample_rate) for l, r in spectra)
    return _time_moments(signals, unit, sim)


@dataclass
class ConditionModel:
    """Noise-alone and noise-plus-signal ensembles of one condition."""

    masker: MaskerSpec
    target: TargetSpec
    sim: Simulation
    noise: Moments = None
    signal: Moments = None

    def __post_init__(self):
        if self.noise is None:
            self.noise = interval_moments(self.masker, self.target, self.sim, NOISE_ONLY)
        if self.signal is None:
            if self.sim.paired:
                self.signal = self.noise
            else:
                self.signal = interval_moments(self.masker, self.target, self.sim, SIGNAL_PLUS_NOISE)
        self.ref_power = reference_power(self.masker.spectrum_level, self.sim.sample_rate,
                                         self.target.frequency)
        self._k0 = self.sim.grid.on_frequency_index
        self._noise_stats = self._stats(self.noise, 0.0)

    def _stats(self, moments: Moments, amplitude: float):
        lr, ll, rr = moments.at(amplitude)
        gamma = binaural.ChannelCorrelations(binaural.correlation_from_moments(lr, ll, rr), self._k0)
        power = ll[:, self._k0] / 2
        return gamma, power

    def correlations(self, level: float | None = None) -> binaural.ChannelCorrelations:
        """Per-token channel correlations of the masker alone or masker plus target at ``level``."""
        if level is None:
            return self._noise_stats[0]
        return self._stats(self.signal, tone_amplitude(level, self.ref_power))[0]

    def _zeta(self, gamma, params: ModelParams):
        interference = binaural.InterferenceParams(params.sigma_w, self.sim.grid.filters_per_erb)
        gw = binaural.interfere(gamma, interference if params.interference_enabled else None)
        return binaural.decision_variable(gw, params.rho_hat).zeta

    def dprimes(self, level: float, params: ModelParams) -> tuple[float, float]:
        """Binaural and monaural d' at target ``level`` (dB re on-frequency masker power)."""
        g_n, p_n = self._noise_stats
        g_s, p_s = self._stats(self.signal, tone_amplitude(level, self.ref_power))
        d_b = binaural.dprime_binaural(self._zeta(g_s, params), self._zeta(g_n, params), params.sigma_b)
        # an energy decrease carries no evidence for the signal interval
        d_m = max(monaural.dprime_monaural(p_s, p_n, params.sigma_m), 0.0)
        return d_b, d_m

    def dprime(self, level: float, params: ModelParams) -> float:
        return combine(*self.dprimes(level, params))

    def sweep(self, params: ModelParams, target_dprime: float) -> SweepResult:
        """Twelve 2-dB-spaced levels centred on a bisection estimate of threshold."""
        lo, hi = SEARCH_RANGE
        if self.dprime(hi, params) < target_dprime:
            raise NoThresholdError(f"d' stays below {target_dprime} up to {hi} dB")
        if self.dprime(lo, params) >= target_dprime:
            raise NoThresholdError(f"d' already exceeds {target_dprime} at {lo} dB")
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            if self.dprime(mid, params) < target_dprime:
                lo = mid
            else:
                hi = mid
            if hi - lo < 0.05:
                break
        centre = 0.5 * (lo + hi)
        levels = centre + SWEEP_STEP * (np.arange(SWEEP_POINTS) - (SWEEP_POINTS - 1) / 2)
        return SweepResult(levels, [self.dprime(L, params) for L in levels])

    def threshold(self, params: ModelParams, target_dprime: float) -> ThresholdEstimate:
        return find_threshold(self.sweep(params, target_dprime), target_dprime)


def masker_correlations(masker: MaskerSpec, sim: Simulation) -> np.ndarray:
    """Per-channel masker correlation with cross and auto powers pooled over tokens.

    Always uses the steady-state spectral evaluation.
    """
    n = n_samples(sim.duration, sim.sample_rate)
    freqs = np.fft.rfftfreq(n, 1.0 / sim.sample_rate)
    spectra = [masker_spectra(masker, n, sim.sample_rate, token_seed(sim.seed, NOISE_ONLY, i))
               for i in range(sim.tokens)]
    L = np.stack([s[0] for s in spectra])
    R = np.stack([s[1] for s in spectra])
    used = np.any(L != 0, axis=0)
    L, R = L[:, used], R[:, used]
    w = _weights(sim, freqs[used])
    lr = _cross_mean(L, R, *w, n).sum(axis=0)
    ll = _cross_mean(L, L, *w, n).real.sum(axis=0)
    rr = _cross_mean(R, R, *w, n).real.sum(axis=0)
    return binaural.correlation_from_moments(lr, ll, rr)
