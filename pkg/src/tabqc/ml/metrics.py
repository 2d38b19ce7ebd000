"""Binary classification metrics in the layout of a per-class report table.

Class 1 is the anomaly class. Macro averages weight classes equally;
weighted averages weight by support. FPR = FP / (FP + TN). A cell whose
denominator is zero (for example precision with no predicted positives)
reports 0.0 and the metric name lands in zero_division_flags.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import LengthMismatch


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    false_positive_rate: float
    n: int
    zero_division_flags: tuple = ()


def _safe_div(num: float, den: float, flag: str, flags: list) -> float:
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def evaluate(y_true, y_pred) -> MetricsReport:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"y_true has {y_true.shape}, y_pred has {y_pred.shape}")
    bad = (set(np.unique(y_true)) | set(np.unique(y_pred))) - {0, 1}
    if bad:
        raise ValueError(f"labels must be 0/1, found {sorted(bad)}")

    n = int(y_true.size)
    flags: list = []
    per_class = {}
    for cls in (0, 1):
        tp = int(np.sum((y_pred == cls) & (y_true == cls)))
        predicted = int(np.sum(y_pred == cls))
        support = int(np.sum(y_true == cls))
        precision = _safe_div(tp, predicted, f"precision[{cls}]", flags)
        recall = _safe_div(tp, support, f"recall[{cls}]", flags)
        f1 = _safe_div(2 * precision * recall, precision + recall, f"f1[{cls}]", flags)
        per_class[cls] = ClassMetrics(precision=precision, recall=recall,
                                      f1=f1, support=support)

    accuracy = _safe_div(int(np.sum(y_true == y_pred)), n, "accuracy", flags)
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    tn = int(np.sum((y_pred == 0) & (y_true == 0)))
    fpr = _safe_div(fp, fp + tn, "false_positive_rate", flags)

    def macro(attr):
        return (getattr(per_class[0], attr) + getattr(per_class[1], attr)) / 2

    def weighted(attr):
        total = per_class[0].support + per_class[1].support
        if total == 0:
            flags.append(f"weighted_{attr}")
            return 0.0
        return sum(getattr(per_class[c], attr) * per_class[c].support
                   for c in (0, 1)) / total

    return MetricsReport(
        per_class=per_class,
        accuracy=accuracy,
        macro_precision=macro("precision"),
        macro_recall=macro("recall"),
        macro_f1=macro("f1"),
        weighted_precision=weighted("precision"),
        weighted_recall=weighted("recall"),
        weighted_f1=weighted("f1"),
        false_positive_rate=fpr,
        n=n,
        zero_division_flags=tuple(flags),
    )
