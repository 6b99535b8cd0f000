import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_epoch_labels, make_recording, make_track, measure_tone_amplitude
from neurowave.errors import DataError
from neurowave.preprocess import (
    bandpass_filter,
    baseline_correct,
    label_epochs,
    rereference_common_average,
    rereference_mastoid,
    resample,
    resample_ratio,
    segment,
)
from neurowave.recording import Epoch, EpochSet


# -- baseline correction ---------------------------------------------------------


def test_baseline_constant_channel_becomes_zero():
    rec = make_recording(np.full((1, 512), 5.0), rate=256.0)
    track = make_track((0.0, 1.0, "baseline"), (1.0, 2.0, "real"))
    out = baseline_correct(rec, track)
    assert np.allclose(out.data, 0.0)


def test_baseline_removes_offset_preserves_sine():
    # Oracle: over a whole number of periods the baseline mean equals the
    # offset exactly, so subtraction leaves the pure sine.
    rate = 256.0
    t = np.arange(int(4 * rate)) / rate
    sine = np.sin(2 * np.pi * 4.0 * t)  # 4 Hz, integer periods in 1 s
    rec = make_recording((sine + 2.0)[np.newaxis, :], rate=rate)
    track = make_track((0.0, 1.0, "baseline"), (1.0, 4.0, "real"))
    out = baseline_correct(rec, track)
    assert np.allclose(out.data[0], sine, atol=1e-9)


def test_baseline_per_channel_independence():
    data = np.vstack([np.full(256, 1.0), np.full(256, -3.0)])
    rec = make_recording(data, rate=256.0)
    track = make_track((0.0, 0.5, "baseline"), (0.5, 1.0, "real"))
    out = baseline_correct(rec, track)
    assert np.allclose(out.data, 0.0)
    # cross-channel contamination would show up as a nonzero difference
    assert np.allclose(out.data[0] - out.data[1], 0.0)


def test_baseline_interval_mean_is_zero_relative_to_rms():
    rng = np.random.default_rng(0)
    rec = make_recording(rng.standard_normal((4, 1024)) + 7.5, rate=256.0)
    track = make_track((0.0, 2.0, "baseline"), (2.0, 4.0, "real"))
    out = baseline_correct(rec, track)
    segment_mean = np.abs(out.data[:, :512].mean(axis=1))
    rms = np.sqrt(np.mean(out.data**2, axis=1))
    assert np.all(segment_mean <= 1e-9 * np.maximum(rms, 1e-12))


def test_baseline_idempotent():
    rng = np.random.default_rng(1)
    rec = make_recording(rng.standard_normal((3, 1024)) + 4.0, rate=256.0)
    track = make_track((0.5, 2.5, "baseline"), (2.5, 4.0, "fake"))
    once = baseline_correct(rec, track)
    twice = baseline_correct(once, track)
    assert np.allclose(once.data, twice.data, atol=1e-12)


def test_baseline_missing_interval_errors():
    rec = make_recording(np.zeros((1, 256)), rate=256.0)
    track = make_track((0.0, 2.0, "baseline"), (2.0, 3.0, "real"))  # beyond 1 s recording
    with pytest.raises(DataError, match="no baseline"):
        baseline_correct(rec, track)


# -- bandpass filter ---------------------------------------------------------


def test_bandpass_passband_gain_near_unity():
    rate = 5000.0
    t = np.arange(int(5 * rate)) / rate
    rec = make_recording(np.sin(2 * np.pi * 10.0 * t)[np.newaxis, :], rate=rate)
    out = bandpass_filter(rec, 0.5, 80.0)
    amp = measure_tone_amplitude(out.data[0], rate, 10.0, skip_s=1.0)
    assert 0.95 <= amp <= 1.05


def test_bandpass_stopband_attenuation():
    rate = 5000.0
    t = np.arange(int(5 * rate)) / rate
    rec = make_recording(np.sin(2 * np.pi * 500.0 * t)[np.newaxis, :], rate=rate)
    out = bandpass_filter(rec, 0.5, 80.0)
    core = out.data[0][int(rate) : -int(rate)]
    assert np.sqrt(np.mean(core**2)) < 0.05


def test_bandpass_suppresses_slow_drift():
    rate = 256.0
    n = int(60 * rate)
    ramp = np.linspace(-1.0, 1.0, n)
    rec = make_recording(ramp[np.newaxis, :], rate=rate)
    out = bandpass_filter(rec, 0.5, 80.0)
    in_rms = np.sqrt(np.mean(ramp**2))
    out_rms = np.sqrt(np.mean(out.data[0] ** 2))
    assert out_rms < 0.1 * in_rms


def test_bandpass_is_linear():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((2, 2048))
    y = rng.standard_normal((2, 2048))
    rate = 256.0
    fx = bandpass_filter(make_recording(x, rate=rate), 1.0, 40.0).data
    fy = bandpass_filter(make_recording(y, rate=rate), 1.0, 40.0).data
    combo = bandpass_filter(make_recording(2.5 * x - 1.25 * y, rate=rate), 1.0, 40.0).data
    expected = 2.5 * fx - 1.25 * fy
    scale = np.max(np.abs(expected)) + 1e-12
    assert np.max(np.abs(combo - expected)) / scale < 1e-9


def test_bandpass_invalid_edges():
    rec = make_recording(np.zeros((1, 256)), rate=256.0)
    for low, high in [(0.0, 40.0), (40.0, 10.0), (1.0, 128.0), (-1.0, 10.0)]:
        with pytest.raises(DataError):
            bandpass_filter(rec, low, high)


# -- re-referencing ---------------------------------------------------------


def test_common_average_two_channels():
    rec = make_recording(np.array([[3.0], [1.0]]), rate=1.0)
    out = rereference_common_average(rec)
    assert np.allclose(out.data, [[1.0], [-1.0]])


def test_common_average_identical_channels_zero():
    rec = make_recording(np.ones((4, 16)) * 2.5, rate=16.0)
    assert np.allclose(rereference_common_average(rec).data, 0.0)


def test_common_average_idempotent_and_zero_mean():
    rng = np.random.default_rng(3)
    rec = make_recording(rng.standard_normal((6, 128)), rate=64.0)
    once = rereference_common_average(rec)
    assert np.allclose(once.data.mean(axis=0), 0.0, atol=1e-12)
    twice = rereference_common_average(once)
    assert np.allclose(once.data, twice.data, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(1, 64), st.integers(0, 2**31 - 1))
def test_common_average_zero_mean_property(channels, samples, seed):
    rng = np.random.default_rng(seed)
    rec = make_recording(rng.standard_normal((channels, samples)) * 10.0, rate=100.0)
    out = rereference_common_average(rec)
    assert np.allclose(out.data.mean(axis=0), 0.0, atol=1e-10)


def test_common_average_single_channel_errors():
    with pytest.raises(DataError):
        rereference_common_average(make_recording(np.zeros((1, 8)), rate=8.0))


def test_mastoid_reference_examples():
    data = np.array([[5.0], [2.0], [2.0]])
    rec = make_recording(data, rate=1.0, names=["Cz", "M1", "M2"])
    out = rereference_mastoid(rec, "M1", "M2")
    assert np.allclose(out.data[0], 3.0)

    data = np.array([[2.0], [1.0], [3.0]])
    rec = make_recording(data, rate=1.0, names=["Cz", "M1", "M2"])
    assert np.allclose(rereference_mastoid(rec, "M1", "M2").data[0], 0.0)

    data = np.array([[4.0], [0.0], [0.0]])
    rec = make_recording(data, rate=1.0, names=["Cz", "M1", "M2"])
    assert np.array_equal(rereference_mastoid(rec, "M1", "M2").data[0], [4.0])


def test_mastoid_missing_channel_errors():
    rec = make_recording(np.zeros((2, 4)), rate=4.0, names=["Cz", "M1"])
    with pytest.raises(DataError):
        rereference_mastoid(rec, "M1", "M2")


# -- resampling ---------------------------------------------------------


def test_resample_one_second_stays_one_second():
    rec = make_recording(np.zeros((2, 5000)), rate=5000.0)
    out = resample(rec, 256.0)
    assert out.sample_rate_hz == 256.0
    assert abs(out.n_samples - 256) <= 1


def test_resample_ratio_reduces():
    assert resample_ratio(5000.0, 256.0) == (32, 625)
    with pytest.raises(DataError):
        resample_ratio(5000.0, 256.3)


def test_resample_preserves_tone():
    # Oracle: directly synthesized 256 Hz sine at the same instants.
    rate = 5000.0
    t = np.arange(int(4 * rate)) / rate
    rec = make_recording(np.sin(2 * np.pi * 10.0 * t)[np.newaxis, :], rate=rate)
    out = resample(rec, 256.0)
    amp = measure_tone_amplitude(out.data[0], 256.0, 10.0, skip_s=0.5)
    assert abs(amp - 1.0) <= 0.02
    t256 = np.arange(out.n_samples) / 256.0
    reference = np.sin(2 * np.pi * 10.0 * t256)
    core = slice(128, out.n_samples - 128)
    assert np.max(np.abs(out.data[0][core] - reference[core])) < 0.02


def test_resample_suppresses_aliases():
    rate = 5000.0
    t = np.arange(int(4 * rate)) / rate
    rec = make_recording(np.sin(2 * np.pi * 200.0 * t)[np.newaxis, :], rate=rate)
    out = resample(rec, 256.0)
    core = out.data[0][64:-64]
    assert np.sqrt(np.mean(core**2)) < 0.05


# -- segmentation ---------------------------------------------------------


def test_segment_counts_fixture():
    rec = make_recording(np.zeros((3, 2560)), rate=256.0)
    es = segment(rec, 0.5, 0.5)
    assert len(es) == 39
    assert es.window_shape == (128, 3)


def test_segment_single_and_zero_window():
    rec = make_recording(np.zeros((2, 128)), rate=256.0)
    assert len(segment(rec, 0.5, 0.5)) == 1
    rec = make_recording(np.zeros((2, 127)), rate=256.0)
    assert len(segment(rec, 0.5, 0.5)) == 0


def test_segment_origin_times_and_content():
    rng = np.random.default_rng(4)
    data = rng.standard_normal((2, 300))
    rec = make_recording(data, rate=100.0, start=10.0)
    es = segment(rec, 1.0, 0.5)
    assert len(es) == 5
    assert [e.origin_time_s for e in es] == [10.0, 10.5, 11.0, 11.5, 12.0]
    assert np.array_equal(es[2].window, data[:, 100:200].T)


@settings(max_examples=120, deadline=None)
@given(
    n_samples=st.integers(0, 5000),
    window_len=st.integers(1, 256),
    overlap_num=st.integers(0, 3),
)
def test_segment_count_formula_property(n_samples, window_len, overlap_num):
    # overlap in {0, 1/4, 1/2, 3/4} keeps the hop integral for window_len % 4 == 0
    window_len *= 4
    overlap = overlap_num / 4.0
    hop = int(window_len * (1 - overlap))
    rec = make_recording(np.zeros((1, n_samples)), rate=float(window_len))
    es = segment(rec, 1.0, overlap)
    expected = (n_samples - window_len) // hop + 1 if n_samples >= window_len else 0
    assert len(es) == expected


def test_segment_rejects_fractional_window_or_hop():
    rec = make_recording(np.zeros((1, 1000)), rate=250.0)
    with pytest.raises(DataError):
        segment(rec, 0.333, 0.5)  # 83.25 samples per window
    rec = make_recording(np.zeros((1, 1000)), rate=100.0)
    with pytest.raises(DataError):
        segment(rec, 0.1, 0.25)  # 10-sample window, hop 7.5


# -- epoch labeling ---------------------------------------------------------


def _epochs_at(origins, window_s, rate=10.0, channels=1):
    win = int(round(window_s * rate))
    epochs = tuple(
        Epoch(window=np.zeros((win, channels)), origin_time_s=t) for t in sorted(origins)
    )
    return EpochSet(epochs=epochs, window_s=window_s, overlap_fraction=0.0, sample_rate_hz=rate)


def test_label_epoch_inside_fake():
    track = make_track((0.0, 1.0, "baseline"), (1.0, 5.0, "fake"))
    es = _epochs_at([2.0], 1.0)
    out = label_epochs(es, track)
    assert [e.label for e in out] == ["fake"]


def test_label_majority_rule():
    track = make_track((0.0, 1.0, "baseline"), (1.0, 1.7, "real"), (1.7, 3.0, "fake"))
    es = _epochs_at([1.0], 1.0)  # 0.7 s real / 0.3 s fake
    out = label_epochs(es, track)
    assert [e.label for e in out] == ["real"]


def test_label_tie_goes_to_fake():
    track = make_track((0.0, 1.0, "baseline"), (1.0, 1.5, "real"), (1.5, 3.0, "fake"))
    es = _epochs_at([1.0], 1.0)
    out = label_epochs(es, track)
    assert [e.label for e in out] == ["fake"]


def test_label_silence_overlap_drops_epoch():
    track = make_track(
        (0.0, 1.0, "baseline"), (1.0, 2.95, "real"), (2.95, 4.0, "silence"), (4.0, 6.0, "fake")
    )
    es = _epochs_at([2.0, 4.5], 1.0)
    out = label_epochs(es, track)
    assert len(out) == 1
    assert out[0].label == "fake"


def test_label_uncovered_region_errors():
    track = make_track((0.0, 1.0, "baseline"), (1.0, 2.0, "real"))
    es = _epochs_at([1.5], 1.0)
    with pytest.raises(DataError, match="unlabeled region"):
        label_epochs(es, track)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_label_epochs_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    # random track tiling [0, total] with baseline first
    bounds = np.cumsum(rng.uniform(0.5, 2.0, size=8))
    tags = ["baseline"] + [rng.choice(["real", "fake", "silence"]).item() for _ in range(7)]
    intervals = [(0.0, float(bounds[0]), "baseline")]
    intervals += [
        (float(bounds[i]), float(bounds[i + 1]), tags[i + 1]) for i in range(7)
    ]
    track = make_track(*intervals)
    window = 0.5
    origins = [t for t in np.arange(0.0, bounds[-1] - window, 0.25)]
    es = _epochs_at(origins, window, rate=8.0)
    out = label_epochs(es, track)
    expected = brute_force_epoch_labels(track, origins, window)
    kept = [(t, lab) for t, lab in zip(origins, expected) if lab is not None]
    assert [(e.origin_time_s, e.label) for e in out] == kept
    assert all(e.label in ("real", "fake") for e in out)


def test_pipeline_chain_is_deterministic():
    rng = np.random.default_rng(9)
    data = rng.standard_normal((4, 4000)) + 3.0
    track = make_track((0.0, 4.0, "baseline"), (4.0, 8.0, "real"), (8.0, 10.0, "fake"))

    def run():
        rec = make_recording(data.copy(), rate=400.0, names=["a", "b", "M1", "M2"])
        rec = baseline_correct(rec, track)
        rec = bandpass_filter(rec, 0.5, 80.0)
        rec = rereference_mastoid(rec, "M1", "M2")
        rec = rereference_common_average(rec)
        rec = resample(rec, 100.0)
        es = segment(rec, 0.5, 0.5)
        return label_epochs(es, track)

    first = run()
    second = run()
    assert len(first) == len(second)
    for e1, e2 in zip(first, second):
        assert e1.label == e2.label
        assert np.array_equal(e1.window, e2.window)
