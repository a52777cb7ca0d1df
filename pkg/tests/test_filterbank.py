import numpy as np
import pytest
from scipy import integrate

from binaural_interference.errors import ConfigurationError
from binaural_interference.filterbank import (ErbGrid, GammatoneFilter, build_grid, erb_number, erb_of,
                                              filter_stereo, make_filters)
from binaural_interference.stimuli import StereoSignal

FS = 48000.0


def test_erb_values():
    assert erb_of(500) == pytest.approx(78.6695, abs=1e-4)
    assert round(erb_of(500)) == 79
    assert erb_of(1000) == pytest.approx(132.639, abs=1e-3)
    assert erb_of(1e-9) == pytest.approx(24.7, abs=1e-6)


@pytest.mark.parametrize("f", [0.0, -10.0])
def test_erb_rejects_non_positive(f):
    with pytest.raises(ValueError):
        erb_of(f)


def test_grid_matches_erb_number_integral(grid):
    # oracle: integrate 1/ERB(f) and count 1/5-ERB steps either side of 500 Hz
    def cams(f):
        return integrate.quad(lambda x: 1.0 / erb_of(x), 1e-6, f)[0]

    e0 = cams(500)
    expected = int((e0 - cams(67)) * 5) + int((cams(1000) - e0) * 5) + 1
    assert expected == 66
    assert len(grid) == expected
    assert grid.on_frequency == 500.0
    assert grid.center_frequencies[grid.on_frequency_index] == 500.0
    assert grid.center_frequencies.min() >= 67 and grid.center_frequencies.max() <= 1000
    steps = np.diff(erb_number(grid.center_frequencies))
    np.testing.assert_allclose(steps, 0.2, atol=1e-9)
    assert np.count_nonzero(grid.center_frequencies == 500.0) == 1


def test_degenerate_grid():
    g = build_grid(500, 5, (500, 500))
    assert len(g) == 1 and g.on_frequency_index == 0 and g.offsets.tolist() == [0]


@pytest.mark.parametrize("frange", [(1000, 67), (0, 100), (600, 900)])
def test_bad_grid_ranges(frange):
    with pytest.raises(ConfigurationError):
        build_grid(500, 5, frange)


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        ErbGrid(np.array([]), 0)
    with pytest.raises(ConfigurationError):
        ErbGrid(np.array([500.0, 400.0]), 0)


@pytest.mark.parametrize("fc", [72.78, 250.0, 500.0, 992.76])
def test_measured_erb_matches_design(fc):
    flt = GammatoneFilter(fc, FS)
    # independent route: energy of the time-domain impulse response (Parseval)
    x = np.zeros(int(FS))
    x[0] = 1.0
    h = flt.filter(x)
    peak = np.abs(flt.frequency_response(fc)) ** 2
    measured = FS * np.sum(np.abs(h) ** 2) / peak
    assert measured == pytest.approx(erb_of(fc), rel=0.02)
    assert flt.noise_bandwidth() == pytest.approx(measured, rel=1e-4)


def test_every_channel_erb(grid):
    for flt in make_filters(grid, FS):
        assert flt.noise_bandwidth(resolution=0.5) == pytest.approx(flt.erb, rel=0.02)


def test_peak_at_center_frequency():
    flt = GammatoneFilter(500.0, FS)
    f = np.arange(300.0, 700.0, 0.5)
    mag = np.abs(flt.frequency_response(f))
    assert abs(f[np.argmax(mag)] - 500.0) <= 0.5
    assert mag.max() == pytest.approx(2.0, rel=1e-6)


def _sig(left, right=None):
    return StereoSignal(left, left if right is None else right, FS)


def test_tone_envelope_is_constant(grid):
    t = np.arange(int(0.5 * FS)) / FS
    tone = np.cos(2 * np.pi * 500 * t)
    ch = filter_stereo(_sig(tone), grid)
    env = np.abs(ch.steady()[0][grid.on_frequency_index])
    assert np.std(env) / np.mean(env) < 0.01
    assert np.mean(env) == pytest.approx(1.0, rel=0.01)


def test_linearity(grid, rng):
    x = rng.standard_normal((2, 4800))
    y = rng.standard_normal((2, 4800))
    a, b = 0.7, -2.3
    fx = filter_stereo(_sig(*x), grid)
    fy = filter_stereo(_sig(*y), grid)
    fz = filter_stereo(_sig(*(a * x + b * y)), grid)
    np.testing.assert_allclose(fz.left, a * fx.left + b * fy.left, atol=1e-10)
    np.testing.assert_allclose(fz.right, a * fx.right + b * fy.right, atol=1e-10)


def test_white_noise_power_equals_noise_bandwidth(rng):
    # flat-magnitude random-phase noise, periodic in 1 s; one-sided density 2 / fs
    n = int(FS)
    spec = np.exp(2j * np.pi * rng.random(n // 2 + 1))
    spec[0] = spec[-1] = 0
    x = np.fft.irfft(spec, n)
    x /= np.std(x)
    grid = build_grid(500, 5, (500, 500))
    ch = filter_stereo(_sig(np.tile(x, 2)), grid, transient=0.0)
    power = np.mean(np.abs(ch.left[0][n:]) ** 2) / 2
    nbw = power / (2.0 / FS)
    assert nbw == pytest.approx(GammatoneFilter(500.0, FS).noise_bandwidth(), rel=0.03)


def test_sample_rate_guard(grid):
    with pytest.raises(ConfigurationError):
        make_filters(grid, 1800.0)
    with pytest.raises(ConfigurationError):
        filter_stereo(StereoSignal(np.zeros(100), np.zeros(100), 1500.0), grid)


def test_channel_layout(grid, rng):
    x = rng.standard_normal(2400)
    ch = filter_stereo(_sig(x), grid)
    assert ch.left.shape == ch.right.shape == (len(grid), 2400)
    with pytest.raises(ValueError):
        ch.__class__(ch.left, ch.right[:3], FS, grid)
