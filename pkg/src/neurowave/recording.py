"""Core data model: recordings, label tracks, and windowed epochs.

All signal values are in microvolts. Recordings are channel-major
(channels x samples); epoch windows are time-major (samples x channels).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

VALID_TAGS = ("real", "fake", "silence", "baseline")
STIMULUS_TAGS = ("real", "fake")


@dataclass(frozen=True)
class Recording:
    """Uniformly sampled multichannel signal.

    Attributes:
        data: signal matrix, shape (n_channels, n_samples), microvolts.
        sample_rate_hz: sampling rate, > 0.
        channel_names: one name per row of ``data``.
        start_time_s: time of the first sample.
    """

    data: np.ndarray
    sample_rate_hz: float
    channel_names: tuple[str, ...]
    start_time_s: float = 0.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DataError(f"recording data must be 2-D (channels x samples), got shape {data.shape}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if len(self.channel_names) != data.shape[0]:
            raise DataError(
                f"{len(self.channel_names)} channel names for {data.shape[0]} data rows"
            )
        if not self.sample_rate_hz > 0:
            raise DataError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(data)):
            raise DataError("recording contains non-finite samples")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    @property
    def end_time_s(self) -> float:
        return self.start_time_s + self.duration_s

    def times(self) -> np.ndarray:
        """Sample timestamps in seconds."""
        return self.start_time_s + np.arange(self.n_samples) / self.sample_rate_hz

    def with_data(self, data: np.ndarray, sample_rate_hz: float | None = None) -> Recording:
        """New recording with replaced samples, keeping names and start time."""
        return Recording(
            data=data,
            sample_rate_hz=self.sample_rate_hz if sample_rate_hz is None else sample_rate_hz,
            channel_names=self.channel_names,
            start_time_s=self.start_time_s,
        )

    def channel_index(self, name: str) -> int:
        try:
            return self.channel_names.index(name)
        except ValueError:
            raise DataError(f"no channel named {name!r}") from None


@dataclass(frozen=True)
class Interval:
    start_s: float
    end_s: float
    tag: str

    def __post_init__(self):
        if self.tag not in VALID_TAGS:
            raise DataError(f"unknown interval tag {self.tag!r}, expected one of {VALID_TAGS}")
        if not self.start_s < self.end_s:
            raise DataError(f"interval must have start < end, got [{self.start_s}, {self.end_s}]")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def overlap_s(self, start_s: float, end_s: float) -> float:
        """Length of the intersection with [start_s, end_s)."""
        return max(0.0, min(self.end_s, end_s) - max(self.start_s, start_s))


@dataclass(frozen=True)
class LabelTrack:
    """Timeline of non-overlapping tagged intervals.

    Exactly one baseline interval is required and it must precede every
    real/fake stimulus interval.
    """

    intervals: tuple[Interval, ...]

    def __post_init__(self):
        intervals = tuple(self.intervals)
        object.__setattr__(self, "intervals", intervals)
        if not intervals:
            raise DataError("label track has no intervals")
        for prev, cur in zip(intervals, intervals[1:]):
            if cur.start_s < prev.start_s:
                raise DataError("intervals must be sorted by start time")
            if cur.start_s < prev.end_s - 1e-12:
                raise DataError(
                    f"intervals overlap: [{prev.start_s}, {prev.end_s}) and [{cur.start_s}, {cur.end_s})"
                )
        baselines = [iv for iv in intervals if iv.tag == "baseline"]
        if len(baselines) != 1:
            raise DataError(f"expected exactly one baseline interval, found {len(baselines)}")
        baseline = baselines[0]
        for iv in intervals:
            if iv.tag in STIMULUS_TAGS and iv.start_s < baseline.end_s - 1e-12:
                raise DataError("baseline interval must precede all stimulus intervals")

    @property
    def baseline(self) -> Interval:
        return next(iv for iv in self.intervals if iv.tag == "baseline")

    @property
    def end_s(self) -> float:
        return max(iv.end_s for iv in self.intervals)

    @property
    def start_s(self) -> float:
        return min(iv.start_s for iv in self.intervals)

    def by_tag(self, tag: str) -> tuple[Interval, ...]:
        return tuple(iv for iv in self.intervals if iv.tag == tag)


@dataclass(frozen=True)
class Epoch:
    """Fixed-length window cut from a recording.

    ``window`` is time-major: shape (n_samples, n_channels).
    ``label`` is None for unlabeled epochs, else "real" or "fake".
    """

    window: np.ndarray
    origin_time_s: float
    label: str | None = None

    def __post_init__(self):
        window = np.asarray(self.window, dtype=np.float64)
        if window.ndim != 2:
            raise DataError(f"epoch window must be 2-D (samples x channels), got {window.shape}")
        if not np.all(np.isfinite(window)):
            raise DataError("epoch window contains non-finite values")
        object.__setattr__(self, "window", window)
        if self.label is not None and self.label not in STIMULUS_TAGS:
            raise DataError(f"epoch label must be real/fake/None, got {self.label!r}")

    @property
    def n_samples(self) -> int:
        return self.window.shape[0]

    @property
    def n_channels(self) -> int:
        return self.window.shape[1]


@dataclass(frozen=True)
class EpochSet:
    """Ordered collection of equally shaped epochs."""

    epochs: tuple[Epoch, ...]
    window_s: float
    overlap_fraction: float
    sample_rate_hz: float = field(default=0.0)

    def __post_init__(self):
        epochs = tuple(self.epochs)
        object.__setattr__(self, "epochs", epochs)
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise DataError(f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}")
        times = [e.origin_time_s for e in epochs]
        if any(b < a for a, b in zip(times, times[1:])):
            raise DataError("epochs must be ordered by origin_time_s")
        shapes = {e.window.shape for e in epochs}
        if len(shapes) > 1:
            raise DataError(f"epochs have inconsistent shapes: {sorted(shapes)}")
        if self.sample_rate_hz == 0.0 and epochs and self.window_s > 0:
            object.__setattr__(self, "sample_rate_hz", epochs[0].n_samples / self.window_s)

    def __len__(self) -> int:
        return len(self.epochs)

    def __iter__(self):
        return iter(self.epochs)

    def __getitem__(self, i: int) -> Epoch:
        return self.epochs[i]

    @property
    def labels(self) -> tuple[str | None, ...]:
        return tuple(e.label for e in self.epochs)

    @property
    def window_shape(self) -> tuple[int, int]:
        if not self.epochs:
            return (0, 0)
        return self.epochs[0].window.shape

    def windows_array(self) -> np.ndarray:
        """Stacked windows, shape (n_epochs, n_samples, n_channels)."""
        if not self.epochs:
            return np.zeros((0, 0, 0))
        return np.stack([e.window for e in self.epochs])

    def subset(self, indices) -> EpochSet:
        """New set restricted to the given epoch indices (re-sorted by time)."""
        ordered = sorted(int(i) for i in indices)
        return EpochSet(
            epochs=tuple(self.epochs[i] for i in ordered),
            window_s=self.window_s,
            overlap_fraction=self.overlap_fraction,
            sample_rate_hz=self.sample_rate_hz,
        )
