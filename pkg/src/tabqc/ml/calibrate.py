"""Threshold calibration for anomaly scores.

The decision rule everywhere is: anomaly iff score >= threshold. Three
strategies: a fixed value, the (1 - contamination_rate) score quantile, and
an F1 scan over midpoints of consecutive unique scores (ties resolve to the
lowest threshold).
"""

from __future__ import annotations

import numpy as np

from .. import stats
from ..errors import EmptyScores, MissingLabels
from .metrics import evaluate


def calibrate_threshold(scores, strategy: str, t: float | None = None,
                        rate: float | None = None, labels=None) -> float:
    scores = np.asarray([s for s in scores], dtype=float)
    if scores.size == 0:
        raise EmptyScores("no scores to calibrate on")

    if strategy == "fixed":
        if t is None:
            raise ValueError("fixed strategy needs t")
        return float(t)

    if strategy == "contamination":
        if rate is None or not 0 < rate < 1:
            raise ValueError(f"contamination needs a rate in (0, 1), got {rate}")
        return float(stats.linear_quantile(scores.tolist(), 1.0 - rate))

    if strategy == "max_f1":
        if labels is None:
            raise MissingLabels("max_f1 calibration needs validation labels")
        y = np.asarray(labels, dtype=int)
        if y.shape != scores.shape:
            raise MissingLabels("labels and scores must align")
        uniq = np.unique(scores)
        if uniq.size < 2:
            return float(uniq[0])
        best_t, best_f1 = None, -1.0
        for mid in (uniq[:-1] + uniq[1:]) / 2.0:  # ascending: first max = lowest tie
            pred = (scores >= mid).astype(int)
            f1 = evaluate(y, pred).per_class[1].f1
            if f1 > best_f1 + 1e-12:
                best_t, best_f1 = float(mid), f1
        return best_t

    raise ValueError(f"unknown calibration strategy {strategy!r}")
