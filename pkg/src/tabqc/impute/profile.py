"""Missingness profiling and classification.

For each column with nulls, a logistic model of the missingness indicator
on the other columns' observed values is compared against the
intercept-only model with a likelihood-ratio test: rejection at alpha means
the missingness is explainable by observed data (MAR), non-rejection means
MCAR. MNAR can never be inferred from observed data alone, so MNAR_suspect
is applied only from config-declared domain hints. Columns with fewer than
20 usable rows, no nulls at all, or degenerate indicators come back
undetermined.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from ..dataset import DTYPE_NUMERIC, Dataset

MIN_USABLE_ROWS = 20

MCAR = "MCAR"
MAR = "MAR"
MNAR_SUSPECT = "MNAR_suspect"
UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class QcThresholds:
    """residual_limit and uncertainty_ceiling are in units of the residual
    scale; alpha is the significance level of the missingness tests."""

    residual_limit: float = 4.0
    uncertainty_ceiling: float = 1.0
    alpha: float = 0.05

    def __post_init__(self):
        if self.residual_limit <= 0 or self.uncertainty_ceiling <= 0:
            raise ValueError("residual_limit and uncertainty_ceiling must be > 0")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class ColumnMissingness:
    column: str
    null_rate: float
    delta_null: float | None  # percentage points vs the prior run
    classification: str
    test_p_value: float | None


@dataclass(frozen=True)
class MissingnessProfile:
    columns: dict
    alpha: float

    def classification(self, column: str) -> str:
        return self.columns[column].classification

    def any_mar(self) -> bool:
        return any(c.classification == MAR for c in self.columns.values())


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def _log_likelihood(X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    z = X @ beta
    return float(np.sum(y * z - np.logaddexp(0, z)))


def _fit_logistic(X: np.ndarray, y: np.ndarray, ridge: float = 1e-3,
                  max_iter: int = 50, tol: float = 1e-8) -> np.ndarray:
    """Newton iterations with a small ridge so perfect separation stays finite."""
    beta = np.zeros(X.shape[1])
    eye = np.eye(X.shape[1])
    for _ in range(max_iter):
        p = _sigmoid(X @ beta)
        w = np.maximum(p * (1.0 - p), 1e-12)
        grad = X.T @ (y - p) - ridge * beta
        hess = (X.T * w) @ X + ridge * eye
        step = np.linalg.solve(hess, grad)
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            break
    return beta


def _predictor_matrix(ds: Dataset, target: str, rows: np.ndarray) -> np.ndarray | None:
    """Observed values of the other columns on the given rows, one-hot for
    categoricals, z-scored numerics, zero-variance blocks dropped."""
    blocks = []
    for col in ds.columns:
        if col.name == target:
            continue
        vals = [col.values[i] for i in rows]
        if col.dtype == DTYPE_NUMERIC:
            arr = np.asarray(vals, dtype=float)
            sd = arr.std()
            if sd > 0:
                blocks.append((arr - arr.mean()) / sd)
        else:
            cats = sorted({str(v) for v in vals})
            if len(cats) < 2:
                continue
            for c in cats[1:]:  # drop-first coding keeps the design full rank
                blocks.append(np.asarray([1.0 if str(v) == c else 0.0 for v in vals]))
    if not blocks:
        return None
    return np.column_stack(blocks)


def _classify_column(ds: Dataset, target: str, alpha: float) -> tuple:
    """(classification, p_value) from the likelihood-ratio test."""
    col = ds.column(target)
    others = [c for c in ds.columns if c.name != target]
    if not others:
        return UNDETERMINED, None
    usable = np.asarray([i for i in range(ds.row_count)
                         if all(c.values[i] is not None for c in others)], dtype=int)
    if usable.size < MIN_USABLE_ROWS:
        return UNDETERMINED, None
    y = np.asarray([1.0 if col.values[i] is None else 0.0 for i in usable])
    if y.min() == y.max():
        return UNDETERMINED, None
    X = _predictor_matrix(ds, target, usable)
    if X is None:
        return UNDETERMINED, None

    p_bar = y.mean()
    ll0 = float(y.size * (p_bar * np.log(p_bar) + (1 - p_bar) * np.log(1 - p_bar)))
    design = np.column_stack([np.ones(usable.size), X])
    beta = _fit_logistic(design, y)
    ll1 = _log_likelihood(design, y, beta)
    lr = max(0.0, 2.0 * (ll1 - ll0))
    p_value = float(chi2.sf(lr, df=X.shape[1]))
    return (MAR if p_value < alpha else MCAR), p_value


def profile_missingness(ds: Dataset, previous_profile: MissingnessProfile | None = None,
                        alpha: float = 0.05,
                        mnar_hints: tuple = ()) -> MissingnessProfile:
    columns = {}
    for col in ds.columns:
        null_rate = col.null_count / ds.row_count if ds.row_count else 0.0
        delta = None
        if previous_profile and col.name in previous_profile.columns:
            delta = (null_rate - previous_profile.columns[col.name].null_rate) * 100
        if col.name in mnar_hints:
            classification, p_value = MNAR_SUSPECT, None
        elif col.null_count == 0:
            classification, p_value = UNDETERMINED, None
        else:
            classification, p_value = _classify_column(ds, col.name, alpha)
        columns[col.name] = ColumnMissingness(
            column=col.name, null_rate=null_rate, delta_null=delta,
            classification=classification, test_p_value=p_value)
    return MissingnessProfile(columns=columns, alpha=alpha)
