"""Confusion matrices, the three headline metrics, and Venn overlap counts.

Abnormal is the positive class throughout. Percentages are reported to
two decimals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch, UndefinedMetric


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    sensitivity: float
    specificity: float


def confusion(y_true, y_prob, threshold: float = 0.5) -> ConfusionMatrix:
    """Count TP/TN/FP/FN at a probability threshold (>= means abnormal)."""
    y = np.asarray(y_true)
    p = np.asarray(y_prob, dtype=np.float64)
    if y.shape != p.shape or y.ndim != 1:
        raise LengthMismatch(f"labels shape {y.shape} vs probabilities shape {p.shape}")
    if y.size == 0:
        raise EmptyInput("nothing to evaluate")
    if not (0 < threshold < 1):
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    pred = p >= threshold
    actual = y.astype(bool)
    return ConfusionMatrix(
        tp=int(np.sum(pred & actual)),
        tn=int(np.sum(~pred & ~actual)),
        fp=int(np.sum(pred & ~actual)),
        fn=int(np.sum(~pred & actual)),
    )


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, sensitivity and specificity as percentages."""
    if cm.total == 0:
        raise EmptyInput("empty confusion matrix")
    if cm.positives == 0 or cm.negatives == 0:
        raise UndefinedMetric("sensitivity/specificity need both classes present")
    return MetricsReport(
        accuracy=100.0 * (cm.tp + cm.tn) / cm.total,
        sensitivity=100.0 * cm.tp / cm.positives,
        specificity=100.0 * cm.tn / cm.negatives,
    )


def overlap(set_a, set_b, set_c) -> dict:
    """Counts of the seven Venn regions of three id sets.

    Keys: 'a', 'b', 'c' (exclusive), 'ab', 'ac', 'bc' (pairwise only),
    'abc' (all three).
    """
    a, b, c = set(set_a), set(set_b), set(set_c)
    abc = a & b & c
    ab = (a & b) - abc
    ac = (a & c) - abc
    bc = (b & c) - abc
    return {
        "a": len(a - b - c),
        "b": len(b - a - c),
        "c": len(c - a - b),
        "ab": len(ab),
        "ac": len(ac),
        "bc": len(bc),
        "abc": len(abc),
    }


def format_metrics_text(cm: ConfusionMatrix, report: MetricsReport) -> str:
    lines = [
        f"accuracy:    {report.accuracy:.2f}",
        f"sensitivity: {report.sensitivity:.2f}",
        f"specificity: {report.specificity:.2f}",
        f"tp: {cm.tp}",
        f"tn: {cm.tn}",
        f"fp: {cm.fp}",
        f"fn: {cm.fn}",
        f"evaluated: {cm.total}",
    ]
    return "\n".join(lines) + "\n"


def format_metrics_csv(cm: ConfusionMatrix, report: MetricsReport) -> str:
    head = "accuracy,sensitivity,specificity,tp,tn,fp,fn"
    row = (
        f"{report.accuracy:.2f},{report.sensitivity:.2f},{report.specificity:.2f},"
        f"{cm.tp},{cm.tn},{cm.fp},{cm.fn}"
    )
    return f"{head}\n{row}\n"
