"""Deterministic preprocessing chain for multichannel recordings.

Baseline correction, zero-phase bandpass filtering, re-referencing,
rational-ratio resampling, overlapping-window segmentation, and epoch
labeling. Every function is pure: it returns a new object and leaves
its inputs untouched.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy import signal

from .errors import DataError
from .recording import Epoch, EpochSet, LabelTrack, Recording

MAX_RESAMPLE_DENOMINATOR = 10_000


def baseline_correct(rec: Recording, track: LabelTrack) -> Recording:
    """Subtract each channel's mean over the baseline interval from the whole channel.

    Raises DataError("no baseline ...") if the track's baseline interval is
    not fully inside the recording.
    """
    baseline = track.baseline
    if baseline.start_s < rec.start_time_s - 1e-9 or baseline.end_s > rec.end_time_s + 1e-9:
        raise DataError(
            f"no baseline: interval [{baseline.start_s}, {baseline.end_s}) s "
            f"is outside the recording span [{rec.start_time_s}, {rec.end_time_s}) s"
        )
    i0 = int(round((baseline.start_s - rec.start_time_s) * rec.sample_rate_hz))
    i1 = int(round((baseline.end_s - rec.start_time_s) * rec.sample_rate_hz))
    i0 = max(i0, 0)
    i1 = min(i1, rec.n_samples)
    if i1 <= i0:
        raise DataError("no baseline: interval contains no samples")
    means = rec.data[:, i0:i1].mean(axis=1, keepdims=True)
    return rec.with_data(rec.data - means)


def bandpass_filter(rec: Recording, low_hz: float, high_hz: float, order: int = 4) -> Recording:
    """Zero-phase Butterworth bandpass (applied forward and backward).

    The stated order is the order of the underlying one-pass filter; the
    forward-backward application doubles the effective attenuation and
    cancels phase distortion.
    """
    nyquist = rec.sample_rate_hz / 2.0
    if not (0 < low_hz < high_hz < nyquist):
        raise DataError(
            f"invalid band edges ({low_hz}, {high_hz}) Hz for sample rate {rec.sample_rate_hz} Hz"
        )
    sos = signal.butter(order, [low_hz, high_hz], btype="bandpass", output="sos", fs=rec.sample_rate_hz)
    filtered = signal.sosfiltfilt(sos, rec.data, axis=1)
    return rec.with_data(filtered)


def rereference_common_average(rec: Recording) -> Recording:
    """Subtract the instantaneous cross-channel mean from every channel."""
    if rec.n_channels < 2:
        raise DataError("common average reference needs at least 2 channels")
    return rec.with_data(rec.data - rec.data.mean(axis=0, keepdims=True))


def rereference_mastoid(rec: Recording, left_name: str, right_name: str) -> Recording:
    """Subtract the average of the two named mastoid channels from every channel."""
    left = rec.channel_index(left_name)
    right = rec.channel_index(right_name)
    reference = 0.5 * (rec.data[left] + rec.data[right])
    return rec.with_data(rec.data - reference[np.newaxis, :])


def resample_ratio(source_hz: float, target_hz: float) -> tuple[int, int]:
    """Reduced (up, down) integers with target/source = up/down.

    Raises DataError when the exact ratio of the two rates cannot be
    expressed with a denominator <= 10^4 (e.g. 5000 -> 256 reduces to 32/625).
    """
    if not target_hz > 0:
        raise DataError(f"target rate must be positive, got {target_hz}")
    ratio = Fraction(target_hz) / Fraction(source_hz)
    if ratio.denominator > MAX_RESAMPLE_DENOMINATOR:
        raise DataError(
            f"resampling ratio {target_hz}/{source_hz} needs denominator "
            f"{ratio.denominator} > {MAX_RESAMPLE_DENOMINATOR}"
        )
    return ratio.numerator, ratio.denominator


def resample(rec: Recording, target_hz: float) -> Recording:
    """Rational polyphase resampling with a Kaiser-windowed anti-alias low-pass."""
    up, down = resample_ratio(rec.sample_rate_hz, target_hz)
    if up == down:
        return rec.with_data(rec.data.copy(), sample_rate_hz=target_hz)
    out = signal.resample_poly(rec.data, up, down, axis=1, window=("kaiser", 5.0))
    return rec.with_data(out, sample_rate_hz=target_hz)


def segment(rec: Recording, window_s: float, overlap_fraction: float) -> EpochSet:
    """Cut the recording into overlapping unlabeled windows.

    Windows start at multiples of hop = window * (1 - overlap); a trailing
    partial window is dropped. A recording shorter than one window yields
    an empty set.
    """
    if not 0.0 <= overlap_fraction < 1.0:
        raise DataError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    window_len_f = window_s * rec.sample_rate_hz
    window_len = int(round(window_len_f))
    if window_len <= 0 or abs(window_len_f - window_len) > 1e-9:
        raise DataError(f"window of {window_s} s is not an integral number of samples")
    hop_f = window_len * (1.0 - overlap_fraction)
    hop = int(round(hop_f))
    if hop <= 0 or abs(hop_f - hop) > 1e-9:
        raise DataError(f"hop of {hop_f} samples is not integral")

    n = rec.n_samples
    count = (n - window_len) // hop + 1 if n >= window_len else 0
    epochs = []
    for i in range(count):
        start = i * hop
        win = rec.data[:, start : start + window_len].T.copy()
        epochs.append(Epoch(window=win, origin_time_s=rec.start_time_s + start / rec.sample_rate_hz))
    return EpochSet(
        epochs=tuple(epochs),
        window_s=window_len / rec.sample_rate_hz,
        overlap_fraction=overlap_fraction,
        sample_rate_hz=rec.sample_rate_hz,
    )


def label_epochs(epoch_set: EpochSet, track: LabelTrack) -> EpochSet:
    """Label epochs by majority time-overlap with real/fake intervals.

    Epochs overlapping a silence or baseline interval by any amount are
    dropped. Exact real/fake overlap ties resolve to fake. An epoch whose
    span is not fully covered by the track raises DataError.
    """
    kept = []
    window_s = epoch_set.window_s
    for epoch in epoch_set:
        t0 = epoch.origin_time_s
        t1 = t0 + window_s
        overlaps = {"real": 0.0, "fake": 0.0, "silence": 0.0, "baseline": 0.0}
        for iv in track.intervals:
            ov = iv.overlap_s(t0, t1)
            if ov > 0:
                overlaps[iv.tag] += ov
        covered = sum(overlaps.values())
        if covered < window_s - 1e-9:
            raise DataError(
                f"unlabeled region: epoch [{t0:.6f}, {t1:.6f}) s only covered for {covered:.6f} s"
            )
        if overlaps["silence"] > 1e-12 or overlaps["baseline"] > 1e-12:
            continue
        label = "real" if overlaps["real"] > overlaps["fake"] else "fake"
        kept.append(Epoch(window=epoch.window, origin_time_s=t0, label=label))
    return EpochSet(
        epochs=tuple(kept),
        window_s=epoch_set.window_s,
        overlap_fraction=epoch_set.overlap_fraction,
        sample_rate_hz=epoch_set.sample_rate_hz,
    )
