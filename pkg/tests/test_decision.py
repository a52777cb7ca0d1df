import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binaural_interference.decision import (SweepResult, TaskSpec, combine, dprime_at_threshold,
                                            find_threshold, mafc_dprime, mafc_percent_correct)
from binaural_interference.errors import NoThresholdError
from binaural_interference.model import ConditionModel, ModelParams, Simulation
from binaural_interference.stimuli import MaskerSpec, TargetSpec


def test_combine():
    assert combine(0.78, 0.0) == 0.78
    assert combine(3.0, 4.0) == 5.0
    assert combine(0.78, 0.78) == pytest.approx(1.1030865786510142, abs=1e-12)
    with pytest.raises(ValueError):
        combine(-1.0, 0.0)


@given(st.floats(0, 100), st.floats(0, 100))
def test_combine_lower_bound(a, b):
    assert combine(a, b) >= max(a, b)


def test_threshold_dprime_values():
    assert dprime_at_threshold(TaskSpec(2, 0.707)) == pytest.approx(0.78, abs=0.01)
    assert dprime_at_threshold(TaskSpec(2, 0.794)) == pytest.approx(1.14, abs=0.01)
    assert mafc_dprime(0.5, 2) == 0.0


def test_exact_inversion_reference_values():
    # 2AFC closed form: Pc = Phi(d / sqrt(2))
    from scipy.stats import norm

    for pc in (0.707, 0.71, 0.79, 0.794):
        assert mafc_dprime(pc, 2) == pytest.approx(math.sqrt(2) * norm.ppf(pc), abs=1e-5)
    assert dprime_at_threshold(TaskSpec(2, 0.707), table_step=None) == pytest.approx(0.77024, abs=1e-4)
    assert dprime_at_threshold(TaskSpec(2, 0.794), table_step=None) == pytest.approx(1.16019, abs=1e-4)


def test_below_chance():
    with pytest.raises(ValueError):
        mafc_dprime(0.4, 2)
    with pytest.raises(ValueError):
        TaskSpec(2, 1.2)
    with pytest.raises(ValueError):
        TaskSpec(1, 0.7)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 4.0), st.integers(2, 4))
def test_round_trip(d, m):
    assert mafc_dprime(mafc_percent_correct(d, m), m) == pytest.approx(d, abs=1e-3)


def test_monotone_in_percent_correct():
    pcs = np.linspace(0.55, 0.95, 9)
    ds = [mafc_dprime(p, 3) for p in pcs]
    assert np.all(np.diff(ds) > 0)


def test_constructed_line():
    levels = np.arange(-10.0, 12.0, 2.0)
    target = 0.78
    d = target * 2.0 ** (levels / 6.0)
    est = find_threshold(SweepResult(levels, d), target)
    assert est.level == pytest.approx(0.0, abs=1e-9)
    assert not est.extrapolated
    assert float(est) == est.level


@settings(max_examples=30, deadline=None)
@given(st.floats(-30, 30), st.randoms(use_true_random=False))
def test_shift_and_reorder(shift, rnd):
    levels = np.arange(-11.0, 13.0, 2.0)
    d = 0.3 * 10 ** (levels / 15.0) * (1 + 0.05 * np.sin(levels))
    base = find_threshold(SweepResult(levels, d), 1.0).level
    order = list(range(len(levels)))
    rnd.shuffle(order)
    moved = find_threshold(SweepResult(levels[order] + shift, d[order]), 1.0).level
    assert moved == pytest.approx(base + shift, abs=1e-9)


def test_low_points_excluded_from_fit():
    levels = np.arange(0.0, 12.0, 2.0)
    d = 10 ** (levels / 10.0) / 10
    d[0] = 0.01
    sweep = SweepResult(levels, d)
    assert not sweep.valid[0]
    assert find_threshold(sweep, 1.0).level == pytest.approx(10.0)


def test_extrapolation_flag(caplog):
    levels = np.arange(0.0, 10.0, 2.0)
    est = find_threshold(SweepResult(levels, 0.1 * 10 ** (levels / 20)), 10.0)
    assert est.extrapolated and est.level == pytest.approx(40.0)
    assert "extrapolated" in caplog.text


def test_no_threshold():
    with pytest.raises(NoThresholdError):
        find_threshold(SweepResult([0.0, 2.0, 4.0], [0.0, 0.0, 0.0]), 0.78)
    with pytest.raises(NoThresholdError):
        find_threshold(SweepResult([0.0, 2.0, 4.0], [1.0, 0.5, 0.2]), 0.78)


def test_sweep_validation():
    with pytest.raises(ValueError):
        SweepResult([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        SweepResult([0.0, 1.0], [-1.0, 2.0])
    with pytest.raises(ValueError):
        SweepResult([0.0, 1.0], [1.0])


def test_monaural_n0s0_threshold_closed_form():
    # N0S0: binaural path silent; threshold where s / (1 + s / 2) = sigma_m * d'
    sim = Simulation(tokens=100, seed=0)
    params = ModelParams(0.9, 0.2, 0.5, 0.4)
    model = ConditionModel(MaskerSpec("SDN", itd=0.0), TargetSpec(500.0, 0.0), sim)
    target = 0.78
    r = params.sigma_m * target
    s = r / (1 - r / 2)
    assert 10 * math.log10(s) == pytest.approx(-4.32, abs=0.01)
    assert model.dprimes(-5.0, params)[0] == pytest.approx(0.0, abs=1e-9)
    assert model.dprime(10 * math.log10(s), params) == pytest.approx(target, rel=0.02)
    # the log-line fit over the 22-dB sweep sees the saturation of s / (1 + s / 2)
    sweep = model.sweep(params, target)
    levels = sweep.levels
    closed = 10 ** (levels / 10) / (1 + 10 ** (levels / 10) / 2) / params.sigma_m
    expected = find_threshold(SweepResult(levels, closed), target).level
    assert model.threshold(params, target).level == pytest.approx(expected, abs=0.1)
    assert model.threshold(params, target).level == pytest.approx(10 * math.log10(s), abs=1.5)
