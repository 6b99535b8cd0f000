"""Frequency-domain features for epochs.

One-sided unnormalized FFT magnitudes (DC bin of a constant-1 window of
length L equals L) and band-power aggregation with the usual named bands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .recording import Epoch

BAND_PRESETS_HZ = {
    "delta": (0.5, 4.0),
    "theta": (4.0, 8.0),
    "alpha": (8.0, 12.0),
    "beta": (12.0, 30.0),
    "gamma": (30.0, 80.0),
}


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum, shape (bins, channels)."""

    magnitudes: np.ndarray
    bin_hz: float

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        object.__setattr__(self, "magnitudes", mags)
        if mags.ndim != 2:
            raise DataError(f"spectrum must be 2-D (bins x channels), got {mags.shape}")
        if np.any(mags < 0):
            raise DataError("spectrum magnitudes must be non-negative")
        if not self.bin_hz > 0:
            raise DataError(f"bin_hz must be positive, got {self.bin_hz}")

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_hz


def fft_magnitude(epoch: Epoch, sample_rate_hz: float, taper: str | None = None) -> Spectrum:
    """One-sided magnitude spectrum per channel of an epoch window.

    The window length must be a power of two. No taper is applied by
    default; pass taper="hann" to pre-multiply with a Hann window.
    """
    length = epoch.n_samples
    if length < 2 or length & (length - 1) != 0:
        raise DataError(f"epoch length {length} is not a power of two")
    if not sample_rate_hz > 0:
        raise DataError(f"sample_rate_hz must be positive, got {sample_rate_hz}")
    window = epoch.window
    if taper == "hann":
        window = window * np.hanning(length)[:, np.newaxis]
    elif taper is not None:
        raise DataError(f"unknown taper {taper!r}")
    mags = np.abs(np.fft.rfft(window, axis=0))
    return Spectrum(magnitudes=mags, bin_hz=sample_rate_hz / length)


def band_power(spec: Spectrum, low_hz: float, high_hz: float) -> np.ndarray:
    """Per-channel sum of squared magnitudes over bins with center in [low, high).

    An empty band (no bin centers inside it) yields zeros.
    """
    nyquist = (spec.n_bins - 1) * spec.bin_hz
    if not (0 <= low_hz < high_hz <= nyquist + 1e-9):
        raise DataError(f"invalid band [{low_hz}, {high_hz}) Hz for Nyquist {nyquist} Hz")
    freqs = spec.bin_frequencies
    mask = (freqs >= low_hz) & (freqs < high_hz)
    return np.sum(spec.magnitudes[mask] ** 2, axis=0)


def preset_band_powers(spec: Spectrum) -> dict[str, np.ndarray]:
    """Band power for each named preset, clipped to the available Nyquist."""
    nyquist = (spec.n_bins - 1) * spec.bin_hz
    out = {}
    for name, (low, high) in BAND_PRESETS_HZ.items():
        out[name] = band_power(spec, low, min(high, nyquist))
    return out


def log_magnitude(spec: Spectrum) -> np.ndarray:
    """log(1 + magnitude), the scale-stabilized view fed to the classifier."""
    return np.log1p(spec.magnitudes)
