"""Iterative random-forest imputation for mixed-type tables.

Columns are revisited in ascending null count, each predicted from all the
others by a random forest (regressor for numerics, classifier for
categoricals) fitted on the rows where the column was observed. Iteration
stops when the normalized change in imputed values first increases, and the
previous pass's values are returned, or at max_iter. The inner forests come
from scikit-learn; the surrounding loop, stopping rule, and reporting are
local.
"""

from __future__ import annotations

import numpy as np
from sklearn.ensemble import RandomForestClassifier, RandomForestRegressor

from ..dataset import DTYPE_NUMERIC, Column, Dataset
from ..errors import TooFewObserved
from .report import ImputationReport
from .simple import impute_simple

MIN_OBSERVED = 10


def _design(ds_columns, working: dict, target: str) -> np.ndarray:
    blocks = []
    for col in ds_columns:
        if col.name == target:
            continue
        vals = working[col.name]
        if col.dtype == DTYPE_NUMERIC:
            blocks.append(np.asarray(vals, dtype=float))
        else:
            cats = sorted({str(v) for v in vals})
            for c in cats:
                blocks.append(np.asarray([1.0 if str(v) == c else 0.0 for v in vals]))
    return np.column_stack(blocks)


def _normalized_change(ds: Dataset, treated, old: dict, new: dict) -> float:
    num_delta = num_norm = 0.0
    cat_changed = cat_total = 0
    for name in treated:
        col = ds.column(name)
        rows = [i for i, is_null in enumerate(col.null_mask) if is_null]
        if col.dtype == DTYPE_NUMERIC:
            for i in rows:
                num_delta += (new[name][i] - old[name][i]) ** 2
                num_norm += new[name][i] ** 2
        else:
            cat_total += len(rows)
            cat_changed += sum(1 for i in rows if new[name][i] != old[name][i])
    gamma = 0.0
    if num_norm > 0:
        gamma += num_delta / num_norm
    if cat_total > 0:
        gamma += cat_changed / cat_total
    return gamma


def impute_missforest(ds: Dataset, trees: int = 50, max_iter: int = 5,
                      seed: int = 0, columns=None) -> tuple:
    treated = [n for n in (columns or ds.column_names)
               if ds.column(n).null_count > 0]
    for name in treated:
        observed = ds.row_count - ds.column(name).null_count
        if observed < MIN_OBSERVED:
            raise TooFewObserved(
                f"column {name!r} has {observed} observed rows, needs {MIN_OBSERVED}")
    if not treated:
        return ds, ImputationReport(method_used={}, cells_imputed=0, iterations=0)

    # ascending null count so the best-informed columns stabilize first
    treated.sort(key=lambda n: (ds.column(n).null_count, n))
    initialized, _ = impute_simple(ds, strategy="mean")
    working = {c.name: list(c.values) for c in initialized.columns}

    previous_gamma = None
    iterations = 0
    gamma = 0.0
    for it in range(max_iter):
        snapshot = {n: list(working[n]) for n in treated}
        for ci, name in enumerate(treated):
            col = ds.column(name)
            X = _design(ds.columns, working, name)
            obs = [i for i in range(ds.row_count) if not col.null_mask[i]]
            mis = [i for i in range(ds.row_count) if col.null_mask[i]]
            state = seed + it * 1000 + ci
            if col.dtype == DTYPE_NUMERIC:
                model = RandomForestRegressor(n_estimators=trees, random_state=state)
                model.fit(X[obs], [working[name][i] for i in obs])
                for i, v in zip(mis, model.predict(X[mis])):
                    working[name][i] = float(v)
            else:
                model = RandomForestClassifier(n_estimators=trees, random_state=state)
                model.fit(X[obs], [str(working[name][i]) for i in obs])
                for i, v in zip(mis, model.predict(X[mis])):
                    working[name][i] = str(v)
        gamma = _normalized_change(ds, treated, snapshot, working)
        if previous_gamma is not None and gamma > previous_gamma:
            working = snapshot  # the change grew: the previous pass was better
            break
        previous_gamma = gamma
        iterations = it + 1

    replacements = {n: Column.of(n, ds.column(n).dtype, working[n]) for n in treated}
    cells = sum(ds.column(n).null_count for n in treated)
    return ds.with_columns(replacements), ImputationReport(
        method_used={n: "missforest" for n in treated},
        cells_imputed=cells, iterations=iterations,
        convergence_delta=previous_gamma if previous_gamma is not None else gamma)
