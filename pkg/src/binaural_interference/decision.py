"""Detector stage: pathway combination, task d' and threshold estimation."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, stats

from .errors import NoThresholdError

log = logging.getLogger(__name__)

MIN_FIT_DPRIME = 0.05


def combine(d_b: float, d_m: float) -> float:
    """Optimal combination of two independent sensitivities."""
    if d_b < 0 or d_m < 0:
        raise ValueError("sensitivities must be non-negative")
    return math.hypot(d_b, d_m)


@dataclass(frozen=True)
class TaskSpec:
    n_alternatives: int = 2
    percent_correct: float = 0.707

    def __post_init__(self):
        if self.n_alternatives < 2:
            raise ValueError("a forced-choice task needs at least two alternatives")
        if not 0 < self.percent_correct < 1:
            raise ValueError("percent correct must be a fraction in (0, 1)")


def mafc_percent_correct(dprime: float, m: int = 2) -> float:
    """Proportion correct of an unbiased observer in ``m``-alternative forced choice."""
    def integrand(x):
        return stats.norm.pdf(x - dprime) * stats.norm.cdf(x) ** (m - 1)

    val, _ = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12)
    return float(val)


def mafc_dprime(percent_correct: float, m: int = 2, tol: float = 1e-6) -> float:
    """Invert :func:`mafc_percent_correct` by bracketed root finding."""
    chance = 1.0 / m
    if percent_correct < chance - 1e-12:
        raise ValueError(f"{percent_correct} is below chance for {m} alternatives")
    if percent_correct >= 1:
        raise ValueError("percent correct must be below 1")
    if abs(percent_correct - chance) <= 1e-12:
        return 0.0
    hi = 1.0
    while mafc_percent_correct(hi, m) < percent_correct:
        hi *= 2
    return optimize.brentq(lambda d: mafc_percent_correct(d, m) - percent_correct, 0.0, hi, xtol=tol)


def dprime_at_threshold(task: TaskSpec, table_step: float | None = 0.01) -> float:
    """d' at the percent-correct level tracked by the task's staircase.

    Emulates a printed m-AFC table: the percent correct is rounded to the
    table resolution ``table_step`` before inversion (``None`` inverts the
    exact value).  70.7 % thus reads the 71 % row and 79.4 % the 79 % row.
    """
    pc = task.percent_correct
    if table_step:
        pc = round(pc / table_step) * table_step
    return mafc_dprime(pc, task.n_alternatives)


@dataclass
class SweepResult:
    """Combined d' at each target level (dB) of a sweep, with a line through log10 d'."""

    levels: np.ndarray
    dprimes: np.ndarray
    slope: float = field(init=False, default=float("nan"))
    intercept: float = field(init=False, default=float("nan"))

    def __post_init__(self):
        self.levels = np.asarray(self.levels, dtype=float)
        self.dprimes = np.asarray(self.dprimes, dtype=float)
        if self.levels.shape != self.dprimes.shape:
            raise ValueError("levels and d' differ in length")
        order = np.argsort(self.levels, kind="stable")
        self.levels, self.dprimes = self.levels[order], self.dprimes[order]
        if np.any(np.diff(self.levels) <= 0):
            raise ValueError("levels must be distinct")
        if np.any(self.dprimes < 0):
            raise ValueError("d' must be non-negative")
        valid = self.valid
        if valid.sum() >= 2:
            self.slope, self.intercept = np.polyfit(self.levels[valid], np.log10(self.dprimes[valid]), 1)

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.dprimes) & (self.dprimes >= MIN_FIT_DPRIME)


@dataclass(frozen=True)
class ThresholdEstimate:
    level: float
    extrapolated: bool = False

    def __float__(self):
        return self.level


def find_threshold(sweep: SweepResult, target_dprime: float) -> ThresholdEstimate:
    """Level at which the fitted line reaches ``log10(target_dprime)``."""
    valid = sweep.valid
    if valid.sum() < 2 or not np.isfinite(sweep.slope):
        raise NoThresholdError("fewer than two usable points in the sweep")
    if sweep.slope <= 0:
        raise NoThresholdError("d' does not grow with level")
    level = (math.log10(target_dprime) - sweep.intercept) / sweep.slope
    d = sweep.dprimes[valid]
    extrapolated = not (d.min() <= target_dprime <= d.max())
    if extrapolated:
        log.warning("threshold %.2f dB extrapolated outside the sweep", level)
    return ThresholdEstimate(float(level), extrapolated)
