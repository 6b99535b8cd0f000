"""Synthetic stimulus schedules and EEG-like recordings.

Stands in for unavailable human data: a seeded generator producing a
baseline-then-stimulus label track and a multichannel recording with
pink-noise background, class-dependent narrowband bursts, and injectable
artifacts (mains hum, muscle bursts, heartbeat, slow drift). Amplitudes
are in microvolts. None of this claims physiological realism; class
signatures are band-limited power differences chosen to be learnable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as sps

from .errors import DataError
from .recording import Interval, LabelTrack, Recording

INSERTION_POLICIES = ("after_first_minute", "mid_second_minute", "end")
QUALITY_TAGS = ("high", "medium", "low")

POLICY_OFFSET_S = {"after_first_minute": 60.0, "mid_second_minute": 90.0}
ANCHOR_JITTER_S = 5.0


@dataclass(frozen=True)
class SessionSpec:
    """Layout of one synthetic listening session."""

    duration_s: float
    n_fake_segments: int
    insertion_policy: str = "after_first_minute"
    baseline_s: float = 180.0
    min_fake_words: int = 5
    words_per_second: float = 2.5
    silence_gap_s: float = 0.0
    quality_tag: str = "high"
    seed: int = 0

    def __post_init__(self):
        if self.insertion_policy not in INSERTION_POLICIES:
            raise DataError(f"unknown insertion_policy {self.insertion_policy!r}")
        if self.quality_tag not in QUALITY_TAGS:
            raise DataError(f"unknown quality_tag {self.quality_tag!r}")
        if self.baseline_s <= 0 or self.duration_s <= self.baseline_s:
            raise DataError("session must contain a baseline followed by stimulus time")
        if self.n_fake_segments < 0:
            raise DataError("n_fake_segments must be >= 0")
        if self.min_fake_words < 1 or self.words_per_second <= 0:
            raise DataError("fake segment length parameters must be positive")
        if self.silence_gap_s < 0:
            raise DataError("silence_gap_s must be >= 0")

    @property
    def min_fake_duration_s(self) -> float:
        return self.min_fake_words / self.words_per_second


@dataclass(frozen=True)
class BandSignature:
    """Narrowband burst signature: center/bandwidth in Hz, amplitude in uV RMS."""

    center_hz: float
    bandwidth_hz: float
    amplitude_uv: float

    def __post_init__(self):
        if self.amplitude_uv < 0:
            raise DataError("signature amplitude must be >= 0")
        if self.center_hz <= 0 or self.bandwidth_hz <= 0:
            raise DataError("signature band must have positive center and bandwidth")


@dataclass(frozen=True)
class ArtifactSpec:
    """Injectable artifact amplitudes; zero disables an artifact."""

    line_noise_hz: float = 50.0
    line_noise_uv: float = 0.0
    muscle_rate_per_min: float = 0.0
    muscle_uv: float = 0.0
    heartbeat_bpm: float = 72.0
    heartbeat_uv: float = 0.0
    drift_uv: float = 0.0

    def __post_init__(self):
        for name in ("line_noise_uv", "muscle_uv", "heartbeat_uv", "drift_uv", "muscle_rate_per_min"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be >= 0")
        if self.line_noise_hz <= 0 or self.heartbeat_bpm <= 0:
            raise DataError("artifact frequencies must be positive")


@dataclass(frozen=True)
class DriftSpec:
    """Linear drift of the fake signature across the stimulus span.

    Models a non-stationary session: the band center and/or amplitude of
    the fake response interpolates from its nominal value to the given
    end value by session end. Unset fields stay constant.
    """

    fake_center_end_hz: float | None = None
    fake_amplitude_end_uv: float | None = None
    real_center_end_hz: float | None = None


@dataclass(frozen=True)
class SignatureSpec:
    """Spectral make-up of the synthetic recording."""

    real: BandSignature = field(default_factory=lambda: BandSignature(10.0, 4.0, 5.0))
    fake: BandSignature = field(default_factory=lambda: BandSignature(36.0, 4.0, 5.0))
    noise_rms_uv: float = 10.0
    noise_modulation_depth: float = 0.5
    artifacts: ArtifactSpec = field(default_factory=ArtifactSpec)
    drift: DriftSpec | None = None

    def __post_init__(self):
        if self.noise_rms_uv < 0:
            raise DataError("noise_rms_uv must be >= 0")
        if self.noise_modulation_depth < 0:
            raise DataError("noise_modulation_depth must be >= 0")


DEFAULT_SIGNATURE = SignatureSpec(
    artifacts=ArtifactSpec(
        line_noise_uv=8.0,
        muscle_rate_per_min=4.0,
        muscle_uv=10.0,
        heartbeat_uv=5.0,
        drift_uv=15.0,
    )
)


def gen_schedule(spec: SessionSpec) -> LabelTrack:
    """Deterministic label track: baseline, then real audio with fake insertions.

    Fake segments are placed according to the insertion policy with a
    seeded jitter below 5 s; each fake segment is followed by a silence
    gap when silence_gap_s > 0. The intervals tile [0, duration_s] with
    no gaps. Raises DataError when the fake segments do not fit.
    """
    rng = np.random.default_rng(spec.seed)
    stim_start = spec.baseline_s
    stim_end = spec.duration_s
    min_dur = spec.min_fake_duration_s

    durations = [min_dur * (1.0 + 0.5 * rng.random()) for _ in range(spec.n_fake_segments)]
    blocks: list[tuple[float, float]] = []  # fake (start, end)

    if spec.n_fake_segments > 0:
        block_lens = [d + spec.silence_gap_s for d in durations]
        if spec.insertion_policy == "end":
            # Pack fakes against the session end, separated by short real gaps.
            gap = 5.0
            cursor = stim_end
            for d, b in zip(reversed(durations), reversed(block_lens)):
                start = cursor - b
                blocks.append((start, start + d))
                cursor = start - gap
            blocks.reverse()
            if blocks[0][0] < stim_start + 1.0:
                raise DataError("fake segments do not fit before the session end")
        else:
            anchor = stim_start + POLICY_OFFSET_S[spec.insertion_policy]
            anchor += rng.uniform(0.0, ANCHOR_JITTER_S)
            span = stim_end - anchor
            spacing = span / spec.n_fake_segments
            for i, (d, b) in enumerate(zip(durations, block_lens)):
                if b + 1.0 > spacing:
                    raise DataError(
                        f"fake segments do not fit: block of {b:.1f} s exceeds spacing {spacing:.1f} s"
                    )
                start = anchor + i * spacing
                blocks.append((start, start + d))
            if blocks and blocks[0][0] - stim_start < 1.0:
                raise DataError("fake segments do not fit after the policy anchor")

    intervals = [Interval(0.0, spec.baseline_s, "baseline")]
    cursor = stim_start
    for start, end in blocks:
        if start > cursor + 1e-9:
            intervals.append(Interval(cursor, start, "real"))
        intervals.append(Interval(start, end, "fake"))
        cursor = end
        if spec.silence_gap_s > 0:
            intervals.append(Interval(cursor, cursor + spec.silence_gap_s, "silence"))
            cursor += spec.silence_gap_s
    if cursor < stim_end - 1e-9:
        intervals.append(Interval(cursor, stim_end, "real"))
    return LabelTrack(intervals=tuple(intervals))


def _shape_white(white: np.ndarray, rate_hz: float, shape_fn) -> np.ndarray:
    """Filter white noise rows to spectral amplitude shape_fn(f), unit RMS per row."""
    n = white.shape[-1]
    spec = np.fft.rfft(white, axis=-1)
    freqs = np.fft.rfftfreq(n, d=1.0 / rate_hz)
    spec *= shape_fn(freqs)
    out = np.fft.irfft(spec, n=n, axis=-1)
    rms = np.sqrt(np.mean(out**2, axis=-1, keepdims=True))
    rms[rms == 0] = 1.0
    return out / rms


def _shaped_noise(rng: np.random.Generator, n_channels: int, n: int, rate_hz: float,
                  shape_fn) -> np.ndarray:
    """Gaussian noise with spectral amplitude shape_fn(f), unit RMS per channel."""
    return _shape_white(rng.standard_normal((n_channels, n)), rate_hz, shape_fn)


def _pink_gain(freqs: np.ndarray) -> np.ndarray:
    gains = np.zeros_like(freqs)
    nonzero = freqs > 0
    gains[nonzero] = 1.0 / np.sqrt(freqs[nonzero])
    return gains


def _slow_gain(cutoff_hz: float):
    def fn(freqs: np.ndarray) -> np.ndarray:
        return ((freqs > 0) & (freqs <= cutoff_hz)).astype(float)

    return fn


SLOW_RATE_HZ = 50.0


def _slow_noise_upsampled(rngs, n: int, rate_hz: float, cutoff_hz: float) -> np.ndarray:
    """Band-limited (<= cutoff) noise rows, generated at a low rate and
    linearly interpolated up to the target rate."""
    n_slow = max(int(np.ceil(n * SLOW_RATE_HZ / rate_hz)), 16)
    white = np.stack([rng.standard_normal(n_slow) for rng in rngs])
    slow = _shape_white(white, SLOW_RATE_HZ, _slow_gain(cutoff_hz))
    t_slow = np.arange(n_slow) * (rate_hz / SLOW_RATE_HZ)
    t_full = np.arange(n)
    return np.stack([np.interp(t_full, t_slow, row) for row in slow])


def _unit_pattern(rng: np.random.Generator, n_channels: int) -> np.ndarray:
    """Random spatial pattern with unit RMS across channels."""
    v = rng.standard_normal(n_channels)
    return v / np.sqrt(np.mean(v**2))


def _band_burst(rng: np.random.Generator, n: int, rate_hz: float, center_hz: float,
                bandwidth_hz: float) -> np.ndarray:
    """Unit-RMS band-limited noise burst with cosine on/off ramps."""
    nyquist = rate_hz / 2.0
    low = max(center_hz - bandwidth_hz / 2.0, 0.1)
    high = min(center_hz + bandwidth_hz / 2.0, 0.95 * nyquist)
    if not low < high:
        raise DataError(f"burst band [{low}, {high}] Hz is empty at rate {rate_hz} Hz")
    sos = sps.butter(4, [low, high], btype="bandpass", output="sos", fs=rate_hz)
    burst = sps.sosfilt(sos, rng.standard_normal(n))
    rms = np.sqrt(np.mean(burst**2))
    if rms > 0:
        burst /= rms
    ramp = min(int(0.1 * rate_hz), n // 4)
    if ramp > 0:
        env = 0.5 * (1 - np.cos(np.linspace(0, np.pi, ramp)))
        burst[:ramp] *= env
        burst[-ramp:] *= env[::-1]
    return burst


def _heartbeat_pulse_train(n: int, rate_hz: float, bpm: float) -> np.ndarray:
    """Periodic smooth pulses with unit peak amplitude."""
    out = np.zeros(n)
    if n == 0:
        return out
    period = 60.0 / bpm
    sigma = 0.03
    half_width = int(4 * sigma * rate_hz)
    local_t = np.arange(-half_width, half_width + 1) / rate_hz
    pulse = np.exp(-0.5 * (local_t / sigma) ** 2)
    beat = period / 2.0
    while beat * rate_hz < n:
        center = int(round(beat * rate_hz))
        lo = max(center - half_width, 0)
        hi = min(center + half_width + 1, n)
        out[lo:hi] += pulse[lo - (center - half_width) : hi - (center - half_width)]
        beat += period
    return out


def channel_names_for(n_channels: int) -> tuple[str, ...]:
    """Generic montage names; the last two channels are the mastoids M1/M2."""
    if n_channels >= 4:
        return tuple(f"EEG{i + 1:03d}" for i in range(n_channels - 2)) + ("M1", "M2")
    return tuple(f"EEG{i + 1:03d}" for i in range(n_channels))


def gen_recording(track: LabelTrack, sig: SignatureSpec, channels: int, rate_hz: float,
                  seed: int) -> Recording:
    """Synthetic recording following the label track.

    Per-channel pink noise (amplitude-modulated by a slow envelope, which
    keeps marginals non-Gaussian the way real biosignals are) runs for the
    whole session. Class-signature bursts are added only inside real/fake
    intervals; artifacts run over the stimulus portion, so the baseline
    contains background noise only. Deterministic given the seed;
    channels use independent sub-seeds.
    """
    if channels < 1:
        raise DataError("need at least one channel")
    nyquist = rate_hz / 2.0
    for band in (sig.real, sig.fake):
        if band.center_hz >= nyquist:
            raise DataError(f"band center {band.center_hz} Hz is not below Nyquist {nyquist} Hz")

    duration = track.end_s - track.start_s
    n = int(round(duration * rate_hz))
    seq = np.random.SeedSequence(seed)
    child = seq.spawn(channels + 6)
    channel_rngs = [np.random.default_rng(s) for s in child[:channels]]
    pattern_rng = np.random.default_rng(child[channels])
    burst_rng = np.random.default_rng(child[channels + 1])
    line_rng = np.random.default_rng(child[channels + 2])
    muscle_rng = np.random.default_rng(child[channels + 3])
    heart_rng = np.random.default_rng(child[channels + 4])
    drift_rng = np.random.default_rng(child[channels + 5])

    # One seeded white draw per channel, one batched FFT pass for shaping;
    # the slow amplitude envelopes are generated at a low rate and
    # interpolated, which keeps the marginals non-Gaussian at a fraction
    # of the cost.
    white = np.stack([rng.standard_normal(n) for rng in channel_rngs])
    data = _shape_white(white, rate_hz, _pink_gain)
    if sig.noise_modulation_depth > 0:
        slow = _slow_noise_upsampled(channel_rngs, n, rate_hz, cutoff_hz=0.15)
        envelopes = np.exp(sig.noise_modulation_depth * slow)
        envelopes /= np.sqrt(np.mean(envelopes**2, axis=1, keepdims=True))
        data *= envelopes
    data *= sig.noise_rms_uv

    stim_start = track.baseline.end_s - track.start_s
    stim_end = duration
    # One shared response pattern: the class difference is purely spectral,
    # so a drift that converges the fake band onto the real band leaves no
    # other cue behind.
    response_pattern = _unit_pattern(pattern_rng, channels)
    patterns = {"real": response_pattern, "fake": response_pattern}

    for iv in track.intervals:
        if iv.tag not in ("real", "fake"):
            continue
        i0 = int(round((iv.start_s - track.start_s) * rate_hz))
        i1 = min(int(round((iv.end_s - track.start_s) * rate_hz)), n)
        if i1 <= i0:
            continue
        band = sig.real if iv.tag == "real" else sig.fake
        center = band.center_hz
        amplitude = band.amplitude_uv
        if sig.drift is not None and stim_end > stim_start:
            mid = 0.5 * (iv.start_s + iv.end_s) - track.start_s
            frac = float(np.clip((mid - stim_start) / (stim_end - stim_start), 0.0, 1.0))
            if iv.tag == "fake":
                if sig.drift.fake_center_end_hz is not None:
                    center = center + frac * (sig.drift.fake_center_end_hz - center)
                if sig.drift.fake_amplitude_end_uv is not None:
                    amplitude = amplitude + frac * (sig.drift.fake_amplitude_end_uv - amplitude)
            elif sig.drift.real_center_end_hz is not None:
                center = center + frac * (sig.drift.real_center_end_hz - center)
        if amplitude <= 0:
            continue
        burst = _band_burst(burst_rng, i1 - i0, rate_hz, center, band.bandwidth_hz)
        data[:, i0:i1] += amplitude * np.outer(patterns[iv.tag], burst)

    art = sig.artifacts
    s0 = int(round(stim_start * rate_hz))
    stim_n = n - s0
    if stim_n > 0:
        t = np.arange(stim_n) / rate_hz
        if art.line_noise_uv > 0:
            pattern = _unit_pattern(line_rng, channels)
            phase = line_rng.uniform(0, 2 * np.pi)
            wave = np.sin(2 * np.pi * art.line_noise_hz * t + phase)
            data[:, s0:] += art.line_noise_uv * np.outer(pattern, wave)
        if art.muscle_uv > 0 and art.muscle_rate_per_min > 0:
            n_events = muscle_rng.poisson(art.muscle_rate_per_min * (stim_n / rate_hz) / 60.0)
            burst_len = int(0.3 * rate_hz)
            low = min(55.0, 0.35 * rate_hz)
            high = min(110.0, 0.45 * rate_hz)
            n_active = max(2, channels // 8)
            for _ in range(n_events):
                start = muscle_rng.integers(0, max(stim_n - burst_len, 1))
                active = muscle_rng.choice(channels, size=min(n_active, channels), replace=False)
                pattern = np.zeros(channels)
                pattern[active] = muscle_rng.standard_normal(len(active))
                rms = np.sqrt(np.mean(pattern**2))
                if rms > 0:
                    pattern /= rms
                burst = _band_burst(muscle_rng, burst_len, rate_hz, (low + high) / 2, high - low)
                data[:, s0 + start : s0 + start + burst_len] += art.muscle_uv * np.outer(
                    pattern, burst[: stim_n - start]
                )
        if art.heartbeat_uv > 0:
            pattern = _unit_pattern(heart_rng, channels)
            pulses = _heartbeat_pulse_train(stim_n, rate_hz, art.heartbeat_bpm)
            data[:, s0:] += art.heartbeat_uv * np.outer(pattern, pulses)
        if art.drift_uv > 0:
            slow = _slow_noise_upsampled([drift_rng] * channels, stim_n, rate_hz, cutoff_hz=0.2)
            rms = np.sqrt(np.mean(slow**2, axis=1, keepdims=True))
            rms[rms == 0] = 1.0
            data[:, s0:] += art.drift_uv * slow / rms

    return Recording(
        data=data,
        sample_rate_hz=rate_hz,
        channel_names=channel_names_for(channels),
        start_time_s=track.start_s,
    )


def with_drift(
    sig: SignatureSpec,
    fake_center_end_hz: float | None = None,
    fake_amplitude_end_uv: float | None = None,
) -> SignatureSpec:
    """Copy of a signature whose fake band drifts to the given end values."""
    return replace(
        sig,
        drift=DriftSpec(
            fake_center_end_hz=fake_center_end_hz,
            fake_amplitude_end_uv=fake_amplitude_end_uv,
        ),
    )
