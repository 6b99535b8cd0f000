"""Train/test split protocols and per-class classification metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .recording import EpochSet


@dataclass(frozen=True)
class Split:
    """Disjoint train/test index lists into an epoch set."""

    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]

    def __post_init__(self):
        train = tuple(int(i) for i in self.train_indices)
        test = tuple(int(i) for i in self.test_indices)
        object.__setattr__(self, "train_indices", train)
        object.__setattr__(self, "test_indices", test)
        if not train or not test:
            raise DataError("both split sides must be non-empty")
        if set(train) & set(test):
            raise DataError("train and test indices overlap")


def split_random(epoch_set: EpochSet, test_fraction: float, seed: int) -> Split:
    """Uniformly shuffled split with |test| = round(test_fraction * N)."""
    n = len(epoch_set)
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = int(round(test_fraction * n))
    if n_test < 1 or n_test >= n:
        raise DataError(f"degenerate split: {n_test} test epochs out of {n}")
    perm = np.random.default_rng(seed).permutation(n)
    return Split(
        train_indices=tuple(sorted(int(i) for i in perm[n_test:])),
        test_indices=tuple(sorted(int(i) for i in perm[:n_test])),
    )


def split_ordered(epoch_set: EpochSet, train_fraction: float, drop_boundary: bool = False) -> Split:
    """First round(train_fraction * N) epochs train, the rest test.

    Epochs must be time-ordered. With drop_boundary, the first test epoch
    is discarded when it overlaps the last train epoch in time (removes
    the information leak that overlapping windows create at the cut).
    """
    n = len(epoch_set)
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    origins = [e.origin_time_s for e in epoch_set]
    if any(b < a for a, b in zip(origins, origins[1:])):
        raise DataError("epoch set is not ordered by origin time")
    n_train = int(round(train_fraction * n))
    if n_train < 1 or n_train >= n:
        raise DataError(f"degenerate split: {n_train} train epochs out of {n}")
    test = list(range(n_train, n))
    if drop_boundary and len(test) > 1:
        if origins[test[0]] < origins[n_train - 1] + epoch_set.window_s:
            test = test[1:]
    return Split(train_indices=tuple(range(n_train)), test_indices=tuple(test))


@dataclass(frozen=True)
class ClassMetrics:
    """One-vs-rest metrics for a single class.

    ``degenerate`` flags that a zero denominator forced precision,
    recall, or f1 to 0.
    """

    label: str
    precision: float
    recall: float
    f1: float
    support: int
    tp: int
    fp: int
    fn: int
    tn: int
    degenerate: bool = False


def metrics_from_counts(label: str, tp: int, fp: int, fn: int, tn: int) -> ClassMetrics:
    degenerate = False
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision, degenerate = 0.0, True
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall, degenerate = 0.0, True
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1, degenerate = 0.0, True
    return ClassMetrics(
        label=label,
        precision=precision,
        recall=recall,
        f1=f1,
        support=tp + fn,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        degenerate=degenerate,
    )


def compute_metrics(predicted, actual, classes: tuple[str, ...] = ("real", "fake")) -> dict[str, ClassMetrics]:
    """Per-class precision/recall/f1 with confusion counts.

    Values are kept at full precision; rounding to 3 decimals happens only
    in the rendered report.
    """
    predicted = list(predicted)
    actual = list(actual)
    if len(predicted) != len(actual):
        raise DataError(f"{len(predicted)} predictions for {len(actual)} labels")
    if not actual:
        raise DataError("cannot compute metrics on empty inputs")
    out = {}
    for cls in classes:
        tp = sum(1 for p, a in zip(predicted, actual) if p == cls and a == cls)
        fp = sum(1 for p, a in zip(predicted, actual) if p == cls and a != cls)
        fn = sum(1 for p, a in zip(predicted, actual) if p != cls and a == cls)
        tn = len(actual) - tp - fp - fn
        out[cls] = metrics_from_counts(cls, tp, fp, fn, tn)
    return out


def metrics_to_dict(metrics: dict[str, ClassMetrics]) -> dict:
    """JSON-ready view with both full-precision and 3-decimal fields."""
    out = {}
    for cls, m in metrics.items():
        out[cls] = {
            "precision": m.precision,
            "recall": m.recall,
            "f1": m.f1,
            "precision_3dp": round(m.precision, 3),
            "recall_3dp": round(m.recall, 3),
            "f1_3dp": round(m.f1, 3),
            "support": m.support,
            "confusion": {"tp": m.tp, "fp": m.fp, "fn": m.fn, "tn": m.tn},
            "degenerate": m.degenerate,
        }
    return out


def metrics_table(metrics: dict[str, ClassMetrics]) -> str:
    """Plain-text class rows x precision/recall/f1 table, 3 decimals."""
    lines = [f"{'Class':<12} {'Precision':>9} {'Recall':>9} {'F1-score':>9} {'Support':>9}"]
    lines.append("-" * len(lines[0]))
    for cls, m in metrics.items():
        lines.append(
            f"{cls:<12} {m.precision:>9.3f} {m.recall:>9.3f} {m.f1:>9.3f} {m.support:>9d}"
        )
    return "\n".join(lines)
