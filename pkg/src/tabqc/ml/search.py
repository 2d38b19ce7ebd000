"""Deterministic train/test splitting and grid search.

The split shuffles by seed, takes floor(n * test_fraction) rows for test,
and the two sides partition the input exactly. Grid search carves a
validation split out of the provided data, evaluates the Cartesian product
of the grid in insertion order, and returns the parameters with the best
validation F1 on the anomaly class (ties keep the earliest combination).
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from ..errors import EmptyGrid, SingleClassLabels
from .matrix import FeatureMatrix
from .metrics import evaluate
from .model import AnomalyModel, predict


def train_test_split(X: FeatureMatrix, test_fraction: float = 0.2,
                     seed: int = 0) -> tuple:
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(X.n)
    n_test = math.floor(X.n * test_fraction)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return X.take(train_idx), X.take(test_idx)


def grid_search(fit_fn, grid: dict, X: FeatureMatrix,
                validation_fraction: float = 0.25, seed: int = 0) -> dict:
    """fit_fn(train: FeatureMatrix, **params) must return an AnomalyModel
    with its threshold already set; returns {best_params, best_f1, table}."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise EmptyGrid("grid is empty")
    if X.labels is None or len(set(X.labels.tolist())) < 2:
        raise SingleClassLabels("grid search needs both classes present")

    train, validation = train_test_split(X, test_fraction=validation_fraction,
                                         seed=seed)
    keys = list(grid.keys())
    table = []
    best = None  # (f1, params)
    for combo in product(*(grid[k] for k in keys)):
        params = dict(zip(keys, combo))
        model = fit_fn(train, **params)
        report = evaluate(validation.labels, predict(model, validation))
        f1 = report.per_class[1].f1
        table.append({"params": params, "f1": f1, "accuracy": report.accuracy})
        if best is None or f1 > best[0] + 1e-12:
            best = (f1, params)
    return {"best_params": best[1], "best_f1": best[0], "table": table}
