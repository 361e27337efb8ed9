"""Classification metrics for the positive (selected) class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, UndefinedMetricError

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "roc_auc")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}

    @classmethod
    def from_predictions(cls, labels, predictions) -> "ConfusionMatrix":
        y = np.asarray(labels, dtype=np.int64)
        p = np.asarray(predictions, dtype=np.int64)
        return cls(
            int(((y == 1) & (p == 1)).sum()),
            int(((y == 0) & (p == 1)).sum()),
            int(((y == 1) & (p == 0)).sum()),
            int(((y == 0) & (p == 0)).sum()),
        )


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: float  # NaN when the labels hold a single class
    degenerate: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def _ratio(num: int, den: int, name: str, flags: list) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def metrics_from_confusion(cm: ConfusionMatrix, roc_auc_value: float) -> MetricSet:
    """Derive the threshold metrics from counts; 0/0 yields 0 and a flag."""
    flags: list[str] = []
    accuracy = _ratio(cm.tp + cm.tn, cm.total, "accuracy", flags)
    precision = _ratio(cm.tp, cm.tp + cm.fp, "precision", flags)
    recall = _ratio(cm.tp, cm.tp + cm.fn, "recall", flags)
    if precision + recall == 0:
        flags.append("f1")
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    if np.isnan(roc_auc_value):
        flags.append("roc_auc")
    return MetricSet(accuracy, precision, recall, f1, roc_auc_value, tuple(flags))


def compute_metrics(labels, predictions, scores) -> tuple[MetricSet, ConfusionMatrix]:
    y = np.asarray(labels)
    p = np.asarray(predictions)
    s = np.asarray(scores, dtype=float)
    if not (len(y) == len(p) == len(s)):
        raise DataError(f"length mismatch: {len(y)} labels, {len(p)} predictions, {len(s)} scores")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 or 1")
    cm = ConfusionMatrix.from_predictions(y, p)
    try:
        auc = roc_auc(y, s)
    except UndefinedMetricError:
        auc = float("nan")
    return metrics_from_confusion(cm, auc), cm


def roc_auc(labels, scores) -> float:
    """Area under the ROC curve as the normalized Mann-Whitney statistic.

    Scores are sorted once; each run of tied scores contributes its
    positives times the negatives strictly below, plus half the
    positive-negative pairs inside the run.
    """
    y = np.asarray(labels, dtype=np.int64)
    s = np.asarray(scores, dtype=float)
    if len(y) != len(s):
        raise DataError(f"{len(y)} labels but {len(s)} scores")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC-AUC needs at least one positive and one negative label")
    order = np.argsort(s, kind="mergesort")
    s_sorted, y_sorted = s[order], y[order]
    boundaries = np.flatnonzero(np.diff(s_sorted)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [len(s_sorted)]))
    wins = 0.0
    neg_below = 0
    for a, b in zip(starts, ends):
        pos_here = int(y_sorted[a:b].sum())
        neg_here = (b - a) - pos_here
        wins += pos_here * neg_below + 0.5 * pos_here * neg_here
        neg_below += neg_here
    return wins / (n_pos * n_neg)


def roc_points(labels, scores) -> list[tuple[float, float, float]]:
    """(false positive rate, true positive rate, threshold) at each distinct score,
    from the strictest threshold down; the first point is (0, 0, inf)."""
    y = np.asarray(labels, dtype=np.int64)
    s = np.asarray(scores, dtype=float)
    n_pos = max(int((y == 1).sum()), 1)
    n_neg = max(int((y == 0).sum()), 1)
    order = np.argsort(-s, kind="mergesort")
    s_sorted, y_sorted = s[order], y[order]
    points = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    for i in range(len(s_sorted)):
        tp += y_sorted[i]
        fp += 1 - y_sorted[i]
        if i + 1 == len(s_sorted) or s_sorted[i + 1] != s_sorted[i]:
            points.append((fp / n_neg, tp / n_pos, float(s_sorted[i])))
    return points
