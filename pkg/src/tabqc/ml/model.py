"""Trained detector container, score dispatch, and JSON serialization.

A model is immutable once fitted; the threshold slot is filled only by
calibration. Serialized form is a versioned JSON document so a scored run
can be reproduced from its audit artifacts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from ..errors import ShapeMismatch
from .matrix import FeatureMatrix

MODEL_FORMAT_VERSION = 1

KINDS = ("iforest", "score_augmented", "pca", "kl_reference")


@dataclass(frozen=True)
class AnomalyModel:
    kind: str
    payload: dict
    n_features: int
    train_seed: int | None = None
    threshold: float | None = None

    def with_threshold(self, threshold: float) -> "AnomalyModel":
        return replace(self, threshold=float(threshold))


def score(model: AnomalyModel, X: FeatureMatrix | np.ndarray) -> np.ndarray:
    """Anomaly scores for each row; deterministic in (model, X)."""
    if not isinstance(X, FeatureMatrix):
        X = FeatureMatrix.of(X)
    X.require_d(model.n_features)
    if model.kind == "iforest":
        from .iforest import score_iforest
        return score_iforest(model, X)
    if model.kind == "pca":
        from .pca import score_pca
        return score_pca(model, X)
    if model.kind == "score_augmented":
        from .hybrid import score_hybrid
        return score_hybrid(model, X)
    if model.kind == "kl_reference":
        raise ShapeMismatch(
            "kl_reference compares batch distributions, not rows; "
            "use drift.kl_from_reference")
    raise ValueError(f"unknown model kind {model.kind!r}")


def predict(model: AnomalyModel, X: FeatureMatrix | np.ndarray) -> np.ndarray:
    """Binary labels via the calibrated threshold: anomaly iff score >= threshold."""
    if model.threshold is None:
        raise ValueError("model has no calibrated threshold")
    return (score(model, X) >= model.threshold).astype(int)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def model_to_json(model: AnomalyModel) -> str:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "n_features": model.n_features,
        "train_seed": model.train_seed,
        "threshold": model.threshold,
        "payload": _jsonable(model.payload),
    }
    return json.dumps(doc, sort_keys=True)


def model_from_json(text: str) -> AnomalyModel:
    doc = json.loads(text)
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')!r}")
    return AnomalyModel(
        kind=doc["kind"],
        payload=doc["payload"],
        n_features=int(doc["n_features"]),
        train_seed=doc["train_seed"],
        threshold=doc["threshold"],
    )
