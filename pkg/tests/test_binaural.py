import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binaural_interference.binaural import (ChannelCorrelations, InterferenceParams, channel_correlation,
                                            correlation_from_moments, decision_variable, dprime_binaural,
                                            interfere, interference_weights)
from binaural_interference.errors import ParameterError
from binaural_interference.filterbank import build_grid, filter_stereo
from binaural_interference.model import Simulation, masker_correlations
from binaural_interference.stimuli import MaskerSpec, StereoSignal, gen_masker

FS = 48000.0

# |integral of |H|^2 exp(i 2 pi f tau)| / integral of |H|^2 over 50-950 Hz, 500-Hz channel
SDN_COHERENCE = {0.0: 1.0, 1.0: 0.97517, 2.0: 0.90623, 3.0: 0.80657, 4.0: 0.69145}


@pytest.fixture(scope="module")
def small_grid():
    return build_grid(500, 5, (300, 800))


def test_diotic_noise_is_fully_coherent(small_grid, rng):
    x = rng.standard_normal(24000)
    corr = channel_correlation(filter_stereo(StereoSignal(x, x, FS), small_grid))
    np.testing.assert_allclose(corr.gamma, 1.0, atol=1e-6)


def test_antiphasic_noise(small_grid, rng):
    x = rng.standard_normal(24000)
    corr = channel_correlation(filter_stereo(StereoSignal(x, -x, FS), small_grid))
    np.testing.assert_allclose(corr.gamma, -1.0, atol=1e-6)


@pytest.mark.parametrize("itd_ms", [1.0, 2.0, 4.0])
def test_sdn_on_frequency_coherence_time_domain(itd_ms):
    grid = build_grid(500, 5, (500, 500))
    gammas = []
    for seed in range(30):
        sig = gen_masker(MaskerSpec("SDN", itd=itd_ms * 1e-3), 0.5, FS, seed=seed)
        gammas.append(channel_correlation(filter_stereo(sig, grid)).on_frequency)
    assert np.mean(np.abs(gammas)) == pytest.approx(SDN_COHERENCE[itd_ms], abs=0.02)


@pytest.mark.parametrize("itd_ms", sorted(SDN_COHERENCE))
def test_sdn_on_frequency_coherence_pooled(itd_ms):
    sim = Simulation(tokens=50, seed=0)
    gamma = masker_correlations(MaskerSpec("SDN", itd=itd_ms * 1e-3), sim)
    assert abs(gamma[sim.grid.on_frequency_index]) == pytest.approx(SDN_COHERENCE[itd_ms], abs=0.02)


def test_zero_power_channel_counts_as_incoherent(caplog):
    g = correlation_from_moments(np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    assert g.tolist() == [1.0, 0.0]
    assert "without power" in caplog.text


def test_weights_symmetric_and_normalised():
    w = interference_weights(np.arange(-10, 11), InterferenceParams(0.5))
    assert math.fsum(w) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(w, w[::-1])
    assert np.all(np.diff(w[10:]) < 0)
    # e^{-|k| / (b sigma_w)} with b = 5, sigma_w = 0.5: ratio e^{-0.4} per channel
    assert w[11] / w[10] == pytest.approx(math.exp(-0.4))


def _corr(mags, phase0=0.0, k0=None):
    mags = np.asarray(mags, dtype=float)
    k0 = len(mags) // 2 if k0 is None else k0
    g = mags.astype(complex)
    g[k0] = mags[k0] * np.exp(1j * phase0)
    return ChannelCorrelations(g, k0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(-np.pi, np.pi), st.floats(0.05, 3.0))
def test_flat_coherence_is_a_no_op(c, phi, sigma_w):
    corr = _corr([c] * 11, phi)
    gw = interfere(corr, InterferenceParams(sigma_w))
    assert abs(gw - corr.on_frequency) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=31), st.floats(-np.pi, np.pi), st.floats(0.05, 3.0))
def test_detriment_only(mags, phi, sigma_w):
    corr = _corr(mags, phi)
    gw = interfere(corr, InterferenceParams(sigma_w))
    assert abs(gw) <= abs(corr.on_frequency) + 1e-12
    if abs(corr.on_frequency) > 0:
        assert np.angle(gw) == pytest.approx(np.angle(corr.on_frequency), abs=1e-12)


def test_more_coherent_neighbours_do_not_help():
    corr = _corr([1.0, 1.0, 0.6, 1.0, 1.0])
    assert interfere(corr, InterferenceParams(0.5)) == pytest.approx(0.6)


def test_hand_computed_weighted_sum():
    mags = np.array([0.2, 0.9, 0.9, 0.9, 0.5])
    corr = _corr(mags, 0.3, k0=2)
    w = np.exp(-np.abs(np.arange(5) - 2) / 2.5)
    expected = np.dot(np.minimum(mags, 0.9), w) / w.sum() * np.exp(0.3j)
    assert interfere(corr, InterferenceParams(0.5)) == pytest.approx(expected, abs=1e-12)


def test_single_channel_limit():
    corr = _corr([0.1, 0.3, 0.8, 0.4, 0.0], 1.0)
    assert interfere(corr, InterferenceParams(1e-4)) == pytest.approx(corr.on_frequency, abs=1e-12)
    assert interfere(corr, None) == corr.on_frequency


def test_odn_pipeline_interference_strictly_lowers_coherence():
    sim = Simulation(tokens=20, seed=0)
    gamma = masker_correlations(MaskerSpec("ODN", itd=1e-3), sim)
    k0 = sim.grid.on_frequency_index
    corr = ChannelCorrelations(gamma, k0)
    gw = interfere(corr, InterferenceParams(0.5))
    assert abs(gw) < abs(gamma[k0]) - 0.05
    # channels near 750 Hz are the incoherent ones
    fc = sim.grid.center_frequencies
    assert abs(gamma[np.argmin(np.abs(fc - 750))]) < 0.3


def test_decision_variable_values():
    assert decision_variable(0.0, 0.91).zeta == 0
    assert decision_variable(1.0, 0.91).zeta == pytest.approx(1.5275244253552054, abs=1e-12)
    assert decision_variable(-1.0, 0.91).zeta == pytest.approx(-1.5275244253552054, abs=1e-12)
    z = decision_variable(0.5j, 0.91).zeta
    assert np.angle(z) == pytest.approx(np.pi / 2)


@pytest.mark.parametrize("rho", [0.0, 1.0, 1.2, -0.5])
def test_rho_hat_guard(rho):
    with pytest.raises(ParameterError):
        decision_variable(0.5, rho)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.999), st.floats(0.0, 0.999))
def test_fisher_z_monotone(a, b):
    za, zb = abs(decision_variable(a, 0.9).zeta), abs(decision_variable(b, 0.9).zeta)
    if a < b:
        assert za < zb
    elif a == b:
        assert za == zb


def test_dprime_binaural_arithmetic():
    z = np.full(10, 1.0 + 0.5j)
    assert dprime_binaural(z, z, 0.2) == 0.0
    assert dprime_binaural(z + 0.1, z, 0.2) == pytest.approx(0.5)
    assert dprime_binaural(z + 0.06 + 0.08j, z, 0.2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        dprime_binaural(z[:1], z, 0.2)
    with pytest.raises(ParameterError):
        dprime_binaural(z, z, 0.0)


def test_dprime_binaural_order_insensitive(rng):
    a = rng.standard_normal(101) + 1j * rng.standard_normal(101)
    b = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    assert dprime_binaural(a, b, 0.2) == dprime_binaural(rng.permutation(a), rng.permutation(b), 0.2)


def test_sigma_w_must_be_positive():
    with pytest.raises(ParameterError):
        InterferenceParams(0.0)
