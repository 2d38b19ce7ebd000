"""Post-imputation residual and uncertainty checks.

For each target column a small bootstrap ensemble of linear predictors
estimates the expected value (ensemble mean) and its uncertainty (ensemble
spread). A row is flagged only when its residual is large AND the ensemble
is confident: |actual - predicted| > residual_limit * scale while
uncertainty < uncertainty_ceiling * scale, where scale is the ensemble-mean
residual standard deviation on training rows. A target with no predictive
signal therefore produces wide uncertainty and no flags.
"""

from __future__ import annotations

import numpy as np

from ..dataset import DTYPE_NUMERIC, Dataset
from ..errors import TooFewRows
from .profile import QcThresholds

MIN_ROWS = 30
ENSEMBLE_SIZE = 10


def _predictors(ds: Dataset, target: str) -> list:
    return [c for c in ds.columns if c.name != target]


def _design_rows(ds: Dataset, target: str):
    """(usable row indices, design matrix with intercept, target vector)."""
    others = _predictors(ds, target)
    t_col = ds.column(target)
    rows = [i for i in range(ds.row_count)
            if t_col.values[i] is not None
            and all(c.values[i] is not None for c in others)]
    blocks = [np.ones(len(rows))]
    for col in others:
        if col.dtype == DTYPE_NUMERIC:
            blocks.append(np.asarray([col.values[i] for i in rows], dtype=float))
        else:
            cats = sorted({str(col.values[i]) for i in rows})
            for c in cats[1:]:
                blocks.append(np.asarray(
                    [1.0 if str(col.values[i]) == c else 0.0 for i in rows]))
    X = np.column_stack(blocks)
    y = np.asarray([t_col.values[i] for i in rows], dtype=float)
    return rows, X, y


def residual_uncertainty_check(ds: Dataset, target_columns,
                               thresholds: QcThresholds = QcThresholds(),
                               seed: int = 0,
                               ensemble_size: int = ENSEMBLE_SIZE) -> list:
    """Returns (row, column, residual, uncertainty) tuples for flagged cells."""
    if ds.row_count < MIN_ROWS:
        raise TooFewRows(f"residual check needs >= {MIN_ROWS} rows, got {ds.row_count}")
    flags = []
    rng = np.random.default_rng(seed)
    for target in target_columns:
        if ds.column(target).dtype != DTYPE_NUMERIC:
            raise ValueError(f"residual check target {target!r} must be numeric")
        rows, X, y = _design_rows(ds, target)
        if len(rows) < MIN_ROWS:
            continue
        n = len(rows)
        member_preds = np.empty((ensemble_size, n))
        train_residual_stds = []
        for m in range(ensemble_size):
            idx = rng.choice(n, size=n, replace=True)
            beta, *_ = np.linalg.lstsq(X[idx], y[idx], rcond=None)
            member_preds[m] = X @ beta
            train_residual_stds.append(float(np.std(y[idx] - X[idx] @ beta)))
        prediction = member_preds.mean(axis=0)
        uncertainty = member_preds.std(axis=0)
        scale = max(float(np.mean(train_residual_stds)), 1e-12)
        residual = y - prediction
        for pos in range(n):
            if (abs(residual[pos]) > thresholds.residual_limit * scale
                    and uncertainty[pos] < thresholds.uncertainty_ceiling * scale):
                flags.append((rows[pos], target, float(residual[pos]),
                              float(uncertainty[pos])))
    return flags
