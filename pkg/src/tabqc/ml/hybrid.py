"""Score-augmented supervised detection.

Hybrid of unsupervised and supervised learning: a battery of unsupervised
detectors is fitted on the features, each detector's anomaly score joins
the matrix as a new column, and a gradient-boosted classifier with logistic
loss trains on the augmented matrix. Model output is the predicted anomaly
probability in [0, 1]; a constant battery column simply carries zero split
gain and the classifier degrades to raw-feature boosting.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyBattery, SingleClassLabels
from .boosting import fit_gbdt, predict_proba_gbdt
from .matrix import FeatureMatrix
from .model import AnomalyModel


def _fit_battery_member(spec: dict, X: FeatureMatrix, seed: int) -> AnomalyModel:
    kind = spec.get("kind")
    if kind == "iforest":
        from .iforest import fit_isolation_forest
        return fit_isolation_forest(
            X, trees=spec.get("trees", 100),
            subsample=spec.get("subsample", 256),
            seed=spec.get("seed", seed))
    if kind == "pca":
        from .pca import fit_pca_detector
        return fit_pca_detector(X, k=spec.get("k", min(3, X.d - 1) or 1))
    raise EmptyBattery(f"unknown battery detector kind {kind!r}")


def _augment(X: FeatureMatrix, members: list) -> FeatureMatrix:
    from .model import score as score_model
    cols = [score_model(m, X) for m in members]
    names = [f"battery_{i}_{m.kind}" for i, m in enumerate(members)]
    return X.augment(np.column_stack(cols), names) if cols else X


def fit_score_augmented_classifier(X: FeatureMatrix, battery: list,
                                   rounds: int = 50, depth: int = 3,
                                   seed: int = 0,
                                   learning_rate: float = 0.1) -> AnomalyModel:
    if X.labels is None or len(set(X.labels.tolist())) < 2:
        raise SingleClassLabels("supervised fitting needs both classes present")
    if not battery:
        raise EmptyBattery("battery of unsupervised detectors is empty")
    members = [_fit_battery_member(spec, X, seed) for spec in battery]
    augmented = _augment(X, members)
    ensemble = fit_gbdt(augmented.values, X.labels.astype(float),
                        rounds=rounds, depth=depth, learning_rate=learning_rate)
    return AnomalyModel(
        kind="score_augmented",
        payload={
            "battery": [{"kind": m.kind, "payload": m.payload,
                         "n_features": m.n_features, "train_seed": m.train_seed}
                        for m in members],
            "ensemble": ensemble,
        },
        n_features=X.d,
        train_seed=seed,
    )


def score_hybrid(model: AnomalyModel, X: FeatureMatrix) -> np.ndarray:
    members = [AnomalyModel(kind=m["kind"], payload=m["payload"],
                            n_features=m["n_features"], train_seed=m.get("train_seed"))
               for m in model.payload["battery"]]
    augmented = _augment(X, members)
    return predict_proba_gbdt(model.payload["ensemble"], augmented.values)
