"""PCA reconstruction-error detector.

Columns are centered, the top-k eigenvectors of the covariance matrix form
the component basis, and a row's anomaly score is the squared error of
reconstructing its centered form from that basis: points near the learned
subspace score ~0, orthogonal displacement by distance d scores ~d^2.
"""

from __future__ import annotations

import numpy as np

from ..errors import RankTooLarge
from .matrix import FeatureMatrix
from .model import AnomalyModel


def fit_pca_detector(X: FeatureMatrix, k: int) -> AnomalyModel:
    if not 1 <= k < X.d:
        raise RankTooLarge(f"need 1 <= k < {X.d} features, got k={k}")
    if X.n <= k:
        raise RankTooLarge(f"need more rows than components, got n={X.n}, k={k}")
    center = X.values.mean(axis=0)
    centered = X.values - center
    cov = centered.T @ centered / X.n
    eigenvalues, eigenvectors = np.linalg.eigh(cov)  # ascending eigenvalues
    components = eigenvectors[:, ::-1][:, :k]  # top-k, largest variance first
    return AnomalyModel(
        kind="pca",
        payload={"center": center.tolist(), "components": components.tolist(), "k": k},
        n_features=X.d,
    )


def score_pca(model: AnomalyModel, X: FeatureMatrix) -> np.ndarray:
    center = np.asarray(model.payload["center"], dtype=float)
    components = np.asarray(model.payload["components"], dtype=float)
    centered = X.values - center
    projected = centered @ components @ components.T
    residual = centered - projected
    return np.sum(residual * residual, axis=1)
