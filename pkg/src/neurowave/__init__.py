"""neurowave: biosignal preprocessing, classification, and mapper visualisation.

A pipeline library plus CLI covering multichannel signal preprocessing,
ICA-based artifact removal, overlapping-window segmentation, a two-tower
time/frequency classifier for real-vs-fake discrimination, and mapper
graph visualisation with highest-density-region filtering, validated on a
built-in synthetic session generator.
"""

__version__ = "0.1.0"

from .recording import Epoch, EpochSet, Interval, LabelTrack, Recording
from .preprocess import (
    bandpass_filter,
    baseline_correct,
    label_epochs,
    rereference_common_average,
    rereference_mastoid,
    resample,
    segment,
)
from .spectral import Spectrum, band_power, fft_magnitude
from .ica import IcaModel, LabelerConfig, fit_ica, label_components, remove_and_reconstruct
from .classifier import ModelConfig, ModelParams, forward, init_params, loss_and_grad, predict
from .training import TrainConfig, TrainReport, train
from .evaluation import ClassMetrics, Split, compute_metrics, split_ordered, split_random
from .mapper import MapperGraph, PointCloud, build_mapper, hdr_filter, lens, separation_score
from .synth import SessionSpec, SignatureSpec, gen_recording, gen_schedule
from .config import PipelineConfig, load_config, save_config
from .errors import ConfigError, DataError, FormatError, NeurowaveError, NumericalError

__all__ = [
    "Epoch",
    "EpochSet",
    "Interval",
    "LabelTrack",
    "Recording",
    "bandpass_filter",
    "baseline_correct",
    "label_epochs",
    "rereference_common_average",
    "rereference_mastoid",
    "resample",
    "segment",
    "Spectrum",
    "band_power",
    "fft_magnitude",
    "IcaModel",
    "LabelerConfig",
    "fit_ica",
    "label_components",
    "remove_and_reconstruct",
    "ModelConfig",
    "ModelParams",
    "forward",
    "init_params",
    "loss_and_grad",
    "predict",
    "TrainConfig",
    "TrainReport",
    "train",
    "ClassMetrics",
    "Split",
    "compute_metrics",
    "split_ordered",
    "split_random",
    "MapperGraph",
    "PointCloud",
    "build_mapper",
    "hdr_filter",
    "lens",
    "separation_score",
    "SessionSpec",
    "SignatureSpec",
    "gen_recording",
    "gen_schedule",
    "PipelineConfig",
    "load_config",
    "save_config",
    "ConfigError",
    "DataError",
    "FormatError",
    "NeurowaveError",
    "NumericalError",
]
