"""Isolation forest built from scratch.

Trees partition a subsample with uniformly random (feature, split) choices;
anomalies isolate in few cuts, so short average path length means high
score. Score s(x) = 2^(-E[h(x)] / c(psi)) where c(psi) = 2H(psi-1) -
2(psi-1)/psi normalizes by the expected path length of an unsuccessful
BST search, H(i) = ln(i) + Euler-Mascheroni. Unexpanded leaves add c(size)
to the path, and tree depth caps at ceil(log2(psi)).
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import TooFewRows
from .matrix import FeatureMatrix
from .model import AnomalyModel

EULER_GAMMA = 0.5772156649015329


def _harmonic(i: float) -> float:
    return math.log(i) + EULER_GAMMA


def c_factor(size: int) -> float:
    """Average unsuccessful-search path length in a BST of `size` points."""
    if size <= 1:
        return 0.0
    if size == 2:
        return 1.0  # exact: H(1) = 1, the ln approximation is poor there
    return 2.0 * _harmonic(size - 1) - 2.0 * (size - 1) / size


def _grow(X: np.ndarray, depth: int, cap: int, rng: np.random.Generator) -> dict:
    n = X.shape[0]
    if depth >= cap or n <= 1:
        return {"size": n}
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    splittable = np.flatnonzero(hi > lo)
    if splittable.size == 0:
        return {"size": n}
    feature = int(rng.choice(splittable))
    split = float(rng.uniform(lo[feature], hi[feature]))
    mask = X[:, feature] < split
    return {
        "feature": feature,
        "split": split,
        "left": _grow(X[mask], depth + 1, cap, rng),
        "right": _grow(X[~mask], depth + 1, cap, rng),
    }


def _path_length(x: np.ndarray, node: dict, depth: int = 0) -> float:
    while "feature" in node:
        node = node["left"] if x[node["feature"]] < node["split"] else node["right"]
        depth += 1
    return depth + c_factor(node["size"])


def fit_isolation_forest(X: FeatureMatrix, trees: int = 100, subsample: int = 256,
                         seed: int = 0) -> AnomalyModel:
    if X.n < 2:
        raise TooFewRows(f"isolation forest needs >= 2 rows, got {X.n}")
    rng = np.random.default_rng(seed)
    psi = min(subsample, X.n)
    cap = math.ceil(math.log2(psi)) if psi > 1 else 0
    grown = []
    for _ in range(trees):
        idx = rng.choice(X.n, size=psi, replace=False)
        grown.append(_grow(X.values[idx], 0, cap, rng))
    return AnomalyModel(
        kind="iforest",
        payload={"trees": grown, "psi": psi},
        n_features=X.d,
        train_seed=seed,
    )


def score_iforest(model: AnomalyModel, X: FeatureMatrix) -> np.ndarray:
    trees = model.payload["trees"]
    psi = model.payload["psi"]
    norm = c_factor(psi)
    out = np.empty(X.n)
    for i in range(X.n):
        mean_path = sum(_path_length(X.values[i], t) for t in trees) / len(trees)
        out[i] = 2.0 ** (-mean_path / norm) if norm > 0 else 0.5
    return out
