import numpy as np
import pytest

from conftest import make_recording, make_track
from neurowave.errors import DataError
from neurowave.recording import Epoch, EpochSet, Interval, LabelTrack


def test_recording_channel_name_mismatch():
    with pytest.raises(DataError):
        make_recording(np.zeros((3, 10)), names=["a", "b"])


def test_recording_rejects_nonfinite():
    data = np.zeros((2, 5))
    data[1, 3] = np.nan
    with pytest.raises(DataError):
        make_recording(data)


def test_recording_rejects_bad_rate():
    with pytest.raises(DataError):
        make_recording(np.zeros((1, 5)), rate=0.0)


def test_recording_properties():
    rec = make_recording(np.zeros((2, 512)), rate=256.0, start=3.0)
    assert rec.n_channels == 2
    assert rec.n_samples == 512
    assert rec.duration_s == 2.0
    assert rec.end_time_s == 5.0
    assert rec.channel_index("C1") == 1
    with pytest.raises(DataError):
        rec.channel_index("Cz")


def test_track_requires_exactly_one_baseline():
    with pytest.raises(DataError):
        make_track((0.0, 1.0, "real"))
    with pytest.raises(DataError):
        make_track((0.0, 1.0, "baseline"), (1.0, 2.0, "baseline"))


def test_track_baseline_must_precede_stimulus():
    with pytest.raises(DataError):
        make_track((0.0, 1.0, "real"), (1.0, 2.0, "baseline"))


def test_track_rejects_overlap_and_disorder():
    with pytest.raises(DataError):
        make_track((0.0, 2.0, "baseline"), (1.5, 3.0, "real"))
    with pytest.raises(DataError):
        LabelTrack(intervals=(Interval(2.0, 3.0, "real"), Interval(0.0, 1.0, "baseline")))


def test_track_accessors():
    track = make_track((0.0, 2.0, "baseline"), (2.0, 4.0, "real"), (4.0, 5.0, "fake"))
    assert track.baseline.end_s == 2.0
    assert track.start_s == 0.0
    assert track.end_s == 5.0
    assert [iv.tag for iv in track.by_tag("real")] == ["real"]


def test_interval_validation():
    with pytest.raises(DataError):
        Interval(1.0, 1.0, "real")
    with pytest.raises(DataError):
        Interval(0.0, 1.0, "bogus")
    assert Interval(0.0, 2.0, "real").overlap_s(1.0, 5.0) == 1.0


def test_epoch_label_validation():
    with pytest.raises(DataError):
        Epoch(window=np.zeros((4, 2)), origin_time_s=0.0, label="silence")
    epoch = Epoch(window=np.zeros((4, 2)), origin_time_s=0.0)
    assert epoch.label is None
    assert epoch.n_samples == 4 and epoch.n_channels == 2


def test_epoch_set_ordering_and_shapes():
    a = Epoch(window=np.zeros((4, 2)), origin_time_s=0.0)
    b = Epoch(window=np.zeros((4, 2)), origin_time_s=1.0)
    with pytest.raises(DataError):
        EpochSet(epochs=(b, a), window_s=1.0, overlap_fraction=0.0)
    with pytest.raises(DataError):
        EpochSet(
            epochs=(a, Epoch(window=np.zeros((8, 2)), origin_time_s=2.0)),
            window_s=1.0,
            overlap_fraction=0.0,
        )
    es = EpochSet(epochs=(a, b), window_s=1.0, overlap_fraction=0.5)
    assert es.window_shape == (4, 2)
    assert es.sample_rate_hz == 4.0
    assert len(es.subset([1])) == 1


def test_epoch_set_subset_restores_time_order():
    epochs = tuple(
        Epoch(window=np.full((4, 2), float(i)), origin_time_s=float(i)) for i in range(5)
    )
    es = EpochSet(epochs=epochs, window_s=1.0, overlap_fraction=0.0)
    sub = es.subset([4, 0, 2])
    assert [e.origin_time_s for e in sub] == [0.0, 2.0, 4.0]
