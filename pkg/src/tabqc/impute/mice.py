"""Chained-equations imputation with least-squares column models.

Single imputation: after a mean/mode initialization, columns are revisited
in name order, each regressed on all the others (categoricals one-hot) and
its missing cells re-predicted, until the largest absolute change across
imputed numeric cells drops below tol or max_iter passes. One governed
completion, not multiple draws, so the procedure is fully deterministic;
the seed is recorded for report compatibility only.
"""

from __future__ import annotations

import numpy as np

from ..dataset import DTYPE_NUMERIC, Column, Dataset
from ..errors import TooFewObserved
from .report import ImputationReport
from .simple import impute_simple

MIN_OBSERVED = 10


def _design(ds_columns, working: dict, target: str, rows: range) -> np.ndarray:
    blocks = [np.ones(len(rows))]
    for col in ds_columns:
        if col.name == target:
            continue
        vals = working[col.name]
        if col.dtype == DTYPE_NUMERIC:
            blocks.append(np.asarray(vals, dtype=float))
        else:
            cats = sorted({str(v) for v in vals})
            for c in cats[1:]:
                blocks.append(np.asarray([1.0 if str(v) == c else 0.0 for v in vals]))
    return np.column_stack(blocks)


def impute_mice(ds: Dataset, max_iter: int = 10, seed: int = 0,
                columns=None, tol: float = 1e-4) -> tuple:
    if len(ds.columns) < 2:
        raise TooFewObserved("chained imputation needs >= 2 columns")
    treated = [n for n in (columns or ds.column_names)
               if ds.column(n).null_count > 0]
    for name in treated:
        observed = ds.row_count - ds.column(name).null_count
        if observed < MIN_OBSERVED:
            raise TooFewObserved(
                f"column {name!r} has {observed} observed rows, needs {MIN_OBSERVED}")
    if not treated:
        return ds, ImputationReport(method_used={}, cells_imputed=0, iterations=0)

    initialized, _ = impute_simple(ds, strategy="mean")
    working = {c.name: list(c.values) for c in initialized.columns}
    missing_rows = {n: [i for i, is_null in enumerate(ds.column(n).null_mask) if is_null]
                    for n in treated}

    iterations = 0
    delta = None
    for _ in range(max_iter):
        iterations += 1
        max_change = 0.0
        for name in sorted(treated):
            col = ds.column(name)
            X = _design(ds.columns, working, name, range(ds.row_count))
            obs = [i for i in range(ds.row_count) if not ds.column(name).null_mask[i]]
            mis = missing_rows[name]
            if col.dtype == DTYPE_NUMERIC:
                y = np.asarray([working[name][i] for i in obs], dtype=float)
                beta, *_ = np.linalg.lstsq(X[obs], y, rcond=None)
                pred = X[mis] @ beta
                for i, v in zip(mis, pred):
                    max_change = max(max_change, abs(float(v) - working[name][i]))
                    working[name][i] = float(v)
            else:
                cats = sorted({str(working[name][i]) for i in obs})
                targets = np.asarray([[1.0 if str(working[name][i]) == c else 0.0
                                       for c in cats] for i in obs])
                beta, *_ = np.linalg.lstsq(X[obs], targets, rcond=None)
                pred = X[mis] @ beta
                for row_pos, i in enumerate(mis):
                    working[name][i] = cats[int(np.argmax(pred[row_pos]))]
        delta = max_change
        if max_change < tol:
            break

    replacements = {n: Column.of(n, ds.column(n).dtype, working[n]) for n in treated}
    cells = sum(ds.column(n).null_count for n in treated)
    return ds.with_columns(replacements), ImputationReport(
        method_used={n: "mice" for n in treated},
        cells_imputed=cells, iterations=iterations, convergence_delta=delta)
