"""Training loop for the two-tower classifier: Adam, shuffling, reporting."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .classifier import (
    LABELS,
    ModelConfig,
    ModelParams,
    init_params,
    labels_to_indices,
    loss_and_grad,
)
from .errors import ConfigError, DataError
from .recording import EpochSet


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters (Adam with a constant learning rate)."""

    learning_rate: float = 1e-3
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    class_weighting: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


@dataclass
class TrainReport:
    """Per-pass loss/accuracy trace plus a checksum of the final parameters."""

    epoch_losses: list[float] = field(default_factory=list)
    epoch_accuracies: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    final_checksum: str = ""
    n_samples: int = 0
    class_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "epoch_losses": self.epoch_losses,
            "epoch_accuracies": self.epoch_accuracies,
            "epoch_seconds": self.epoch_seconds,
            "final_checksum": self.final_checksum,
            "n_samples": self.n_samples,
            "class_counts": self.class_counts,
        }


class AdamState:
    """First/second moment accumulators per parameter block."""

    def __init__(self, params: ModelParams):
        self.m = {name: np.zeros_like(b) for name, b in params.blocks.items()}
        self.v = {name: np.zeros_like(b) for name, b in params.blocks.items()}
        self.t = 0

    def step(self, params: ModelParams, grads: dict[str, np.ndarray], cfg: TrainConfig) -> None:
        self.t += 1
        lr_t = cfg.learning_rate * np.sqrt(1 - cfg.beta2**self.t) / (1 - cfg.beta1**self.t)
        for name, block in params.blocks.items():
            g = grads[name]
            self.m[name] = cfg.beta1 * self.m[name] + (1 - cfg.beta1) * g
            self.v[name] = cfg.beta2 * self.v[name] + (1 - cfg.beta2) * g**2
            block -= lr_t * self.m[name] / (np.sqrt(self.v[name]) + cfg.adam_eps)


def class_weight_vector(label_indices: np.ndarray, n_classes: int) -> np.ndarray:
    """Inverse-frequency weights normalized so the weighted sample mean is 1."""
    counts = np.bincount(label_indices, minlength=n_classes).astype(float)
    weights = np.zeros(n_classes)
    present = counts > 0
    weights[present] = len(label_indices) / (present.sum() * counts[present])
    return weights


def train(
    config: ModelConfig,
    train_set: EpochSet,
    hyper: TrainConfig | None = None,
) -> tuple[ModelParams, TrainReport]:
    """Train from a fresh initialization on a labeled epoch set.

    Deterministic given the seeds in `config` and `hyper` (wall-clock
    timings in the report aside). Raises DataError when the training set
    does not contain both classes.
    """
    hyper = hyper or TrainConfig()
    labels = [e.label for e in train_set]
    if any(label is None for label in labels):
        raise DataError("training set contains unlabeled epochs")
    y = labels_to_indices(labels)
    present = np.unique(y)
    if len(present) < 2:
        only = LABELS[present[0]] if len(present) else "none"
        raise DataError(f"training set is single-class ({only}); need both classes")

    windows = train_set.windows_array()
    n = windows.shape[0]
    params = init_params(config)
    adam = AdamState(params)
    rng = np.random.default_rng(hyper.seed)
    weights = class_weight_vector(y, config.classes) if hyper.class_weighting else None

    report = TrainReport(
        n_samples=n,
        class_counts={LABELS[c]: int((y == c).sum()) for c in present},
    )
    for _ in range(hyper.epochs):
        start = time.perf_counter()
        order = rng.permutation(n)
        total_loss = 0.0
        total_correct = 0
        for lo in range(0, n, hyper.batch_size):
            idx = order[lo : lo + hyper.batch_size]
            loss, grads, logits = loss_and_grad(
                params,
                windows[idx],
                y[idx],
                class_weights=weights,
                training=True,
                dropout_rng=rng,
                return_logits=True,
            )
            adam.step(params, grads, hyper)
            total_loss += loss * len(idx)
            total_correct += int((np.argmax(logits, axis=1) == y[idx]).sum())
        report.epoch_losses.append(total_loss / n)
        report.epoch_accuracies.append(total_correct / n)
        report.epoch_seconds.append(time.perf_counter() - start)
    report.final_checksum = params.checksum()
    return params, report
