"""End-to-end orchestration: preprocessing chain and train/evaluate runs."""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass

from .classifier import ModelParams, predict
from .config import PipelineConfig
from .errors import DataError
from .evaluation import ClassMetrics, Split, compute_metrics, split_ordered, split_random
from .ica import IcaModel, fit_ica, label_components, remove_and_reconstruct
from .preprocess import (
    bandpass_filter,
    baseline_correct,
    label_epochs,
    rereference_common_average,
    rereference_mastoid,
    resample,
    segment,
)
from .recording import EpochSet, LabelTrack, Recording
from .training import TrainReport, train

log = logging.getLogger("neurowave.pipeline")


@dataclass
class PreprocessResult:
    epoch_set: EpochSet
    ica_model: IcaModel | None
    stages: list[dict]

    def stage_names(self) -> list[str]:
        return [s["stage"] for s in self.stages]


def _reference_chain(rec: Recording, cfg: PipelineConfig) -> tuple[Recording, list[str]]:
    mode = cfg.reference.mode
    left, right = cfg.reference.left_mastoid, cfg.reference.right_mastoid
    applied = []
    if mode == "none":
        return rec, applied
    if mode in ("mastoid", "mastoid_then_common_average"):
        rec = rereference_mastoid(rec, left, right)
        applied.append("rereference_mastoid")
    if mode == "common_average_then_mastoid":
        rec = rereference_common_average(rec)
        applied.append("rereference_common_average")
        rec = rereference_mastoid(rec, left, right)
        applied.append("rereference_mastoid")
    elif mode in ("common_average", "mastoid_then_common_average"):
        rec = rereference_common_average(rec)
        applied.append("rereference_common_average")
    return rec, applied


def run_preprocess(
    rec: Recording,
    track: LabelTrack,
    cfg: PipelineConfig,
    skip_ica: bool = False,
) -> PreprocessResult:
    """Baseline -> filter -> re-reference -> ICA -> resample -> segment -> label.

    ICA runs at the incoming sample rate, before resampling. Stage timings
    are collected for the run report.
    """
    stages: list[dict] = []

    def _record(stage: str, start: float):
        stages.append({"stage": stage, "seconds": time.perf_counter() - start})
        log.info("stage %s done in %.2fs", stage, stages[-1]["seconds"])

    t0 = time.perf_counter()
    rec = baseline_correct(rec, track)
    _record("baseline_correct", t0)

    t0 = time.perf_counter()
    rec = bandpass_filter(rec, cfg.filter.low_hz, cfg.filter.high_hz, cfg.filter.order)
    _record("bandpass_filter", t0)

    t0 = time.perf_counter()
    rec, applied = _reference_chain(rec, cfg)
    if applied:
        stages.append({"stage": "+".join(applied), "seconds": time.perf_counter() - t0})

    ica_model = None
    if cfg.ica.enabled and not skip_ica:
        t0 = time.perf_counter()
        ica_model = fit_ica(
            rec,
            k=min(cfg.ica.k, rec.n_channels),
            seed=cfg.ica.seed,
            tolerance=cfg.ica.tolerance,
            max_iterations=cfg.ica.max_iterations,
            fit_max_samples=cfg.ica.fit_max_samples,
        )
        ica_model = label_components(ica_model, rec, cfg.ica.labeler)
        rec = remove_and_reconstruct(
            ica_model,
            rec,
            remove=set(cfg.ica.remove_categories),
            threshold=cfg.ica.removal_threshold,
            add_back_remainder=cfg.ica.add_back_remainder,
        )
        _record("ica", t0)

    t0 = time.perf_counter()
    rec = resample(rec, cfg.segmentation.target_rate_hz)
    _record("resample", t0)

    t0 = time.perf_counter()
    epoch_set = segment(rec, cfg.segmentation.window_s, cfg.segmentation.overlap_fraction)
    epoch_set = label_epochs(epoch_set, track)
    _record("segment+label", t0)

    return PreprocessResult(epoch_set=epoch_set, ica_model=ica_model, stages=stages)


@dataclass
class TrainEvalResult:
    params: ModelParams
    train_report: TrainReport
    split: Split
    metrics: dict[str, ClassMetrics]
    split_kind: str

    def summary(self) -> dict:
        return {
            "split_kind": self.split_kind,
            "n_train": len(self.split.train_indices),
            "n_test": len(self.split.test_indices),
            "train_final_loss": self.train_report.epoch_losses[-1],
            "train_final_accuracy": self.train_report.epoch_accuracies[-1],
        }


def make_split(epoch_set: EpochSet, cfg: PipelineConfig, split_kind: str | None = None) -> Split:
    kind = split_kind or cfg.split.kind
    if kind == "random":
        return split_random(epoch_set, cfg.split.test_fraction, cfg.split.seed)
    if kind == "ordered":
        return split_ordered(epoch_set, cfg.split.train_fraction, cfg.split.drop_boundary)
    raise DataError(f"unknown split kind {kind!r}")


def run_train_eval(
    epoch_set: EpochSet,
    cfg: PipelineConfig,
    split_kind: str | None = None,
) -> TrainEvalResult:
    """Split, train on the train side, report per-class metrics on the test side."""
    if not len(epoch_set):
        raise DataError("no labeled epochs to train on")
    split = make_split(epoch_set, cfg, split_kind)
    train_set = epoch_set.subset(split.train_indices)
    test_set = epoch_set.subset(split.test_indices)

    shape = epoch_set.window_shape
    model_cfg = dataclasses.replace(cfg.model, window_len=shape[0], n_channels=shape[1])
    params, report = train(model_cfg, train_set, cfg.training)

    predictions = predict(params, test_set)
    predicted = [p["label"] for p in predictions]
    actual = [e.label for e in test_set]
    metrics = compute_metrics(predicted, actual)
    return TrainEvalResult(
        params=params,
        train_report=report,
        split=split,
        metrics=metrics,
        split_kind=split_kind or cfg.split.kind,
    )
