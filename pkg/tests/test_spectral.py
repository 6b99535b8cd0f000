import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neurowave.errors import DataError
from neurowave.recording import Epoch
from neurowave.spectral import (
    BAND_PRESETS_HZ,
    band_power,
    fft_magnitude,
    log_magnitude,
    preset_band_powers,
)


def _epoch(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, np.newaxis]
    return Epoch(window=x, origin_time_s=0.0)


def test_constant_signal_dc_bin():
    spec = fft_magnitude(_epoch(np.ones(128)), 256.0)
    assert spec.n_bins == 65
    assert spec.bin_hz == 2.0
    assert np.isclose(spec.magnitudes[0, 0], 128.0)
    assert np.all(spec.magnitudes[1:, 0] < 1e-9)


def test_integral_bin_sine_peak():
    # Closed form: a unit sine at exactly bin k has |X_k| = L/2.
    t = np.arange(128) / 256.0
    spec = fft_magnitude(_epoch(np.sin(2 * np.pi * 20.0 * t)), 256.0)
    assert np.isclose(spec.magnitudes[10, 0], 64.0, atol=1e-9)
    others = np.delete(spec.magnitudes[:, 0], 10)
    assert np.all(others < 1e-9)


def test_parseval_identity():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(128)
    spec = fft_magnitude(_epoch(x), 256.0)
    m = spec.magnitudes[:, 0]
    rhs = (m[0] ** 2 + 2 * np.sum(m[1:-1] ** 2) + m[-1] ** 2) / 128.0
    lhs = np.sum(x**2)
    assert abs(lhs - rhs) / lhs < 1e-6


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), log_len=st.integers(3, 9))
def test_parseval_property(seed, log_len):
    n = 2**log_len
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 3))
    spec = fft_magnitude(Epoch(window=x, origin_time_s=0.0), float(n))
    m = spec.magnitudes
    rhs = (m[0] ** 2 + 2 * np.sum(m[1:-1] ** 2, axis=0) + m[-1] ** 2) / n
    lhs = np.sum(x**2, axis=0)
    assert np.allclose(lhs, rhs, rtol=1e-6)


def test_transform_linearity():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(128)
    y = rng.standard_normal(128)
    fx = np.fft.rfft(x)
    fy = np.fft.rfft(y)
    combo = fft_magnitude(_epoch(3.0 * x + 0.5 * y), 256.0).magnitudes[:, 0]
    assert np.allclose(combo, np.abs(3.0 * fx + 0.5 * fy), rtol=1e-9)


def test_non_power_of_two_rejected():
    with pytest.raises(DataError):
        fft_magnitude(_epoch(np.ones(100)), 256.0)


def test_hann_taper_option():
    t = np.arange(128) / 256.0
    x = np.sin(2 * np.pi * 21.0 * t)  # off-bin tone leaks without a taper
    plain = fft_magnitude(_epoch(x), 256.0).magnitudes[:, 0]
    tapered = fft_magnitude(_epoch(x), 256.0, taper="hann").magnitudes[:, 0]
    # tapering concentrates leakage: far-away bins lose energy
    assert tapered[40:].sum() < plain[40:].sum()
    with pytest.raises(DataError):
        fft_magnitude(_epoch(x), 256.0, taper="blackman")


def test_alpha_tone_band_dominance():
    t = np.arange(128) / 256.0
    spec = fft_magnitude(_epoch(np.sin(2 * np.pi * 10.0 * t)), 256.0)
    alpha = band_power(spec, *BAND_PRESETS_HZ["alpha"])[0]
    gamma = band_power(spec, *BAND_PRESETS_HZ["gamma"])[0]
    assert alpha > 100.0 * max(gamma, 1e-30)


def test_white_noise_band_power_tracks_width():
    # Monte-Carlo oracle: for white noise, expected band power is
    # proportional to the number of bins (hence bandwidth).
    rng = np.random.default_rng(2)
    ratio_snapshots = []
    lo = np.zeros(100)
    hi = np.zeros(100)
    for trial in range(100):
        x = rng.standard_normal(128)
        spec = fft_magnitude(_epoch(x), 256.0)
        lo[trial] = band_power(spec, 20.0, 40.0)[0]  # 10 bins
        hi[trial] = band_power(spec, 40.0, 80.0)[0]  # 20 bins
    ratio = hi.mean() / lo.mean()
    assert 2.0 * 0.8 <= ratio <= 2.0 * 1.25


def test_empty_band_power_zero():
    spec = fft_magnitude(_epoch(np.ones(128)), 256.0)
    assert band_power(spec, 3.0, 3.5)[0] == 0.0  # no bin center in [3, 3.5)


def test_band_power_validation():
    spec = fft_magnitude(_epoch(np.ones(128)), 256.0)
    with pytest.raises(DataError):
        band_power(spec, 40.0, 20.0)
    with pytest.raises(DataError):
        band_power(spec, -1.0, 20.0)
    with pytest.raises(DataError):
        band_power(spec, 0.0, 300.0)


def test_preset_band_sum_below_total():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((128, 4))
    spec = fft_magnitude(Epoch(window=x, origin_time_s=0.0), 256.0)
    presets = preset_band_powers(spec)
    total = np.sum(spec.magnitudes**2, axis=0)
    band_sum = sum(presets.values())
    assert np.all(band_sum <= total + 1e-9)


def test_log_magnitude():
    spec = fft_magnitude(_epoch(np.ones(128)), 256.0)
    lm = log_magnitude(spec)
    assert np.isclose(lm[0, 0], np.log1p(128.0))
    assert np.all(lm >= 0.0)
