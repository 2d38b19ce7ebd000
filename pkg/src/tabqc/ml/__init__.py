"""Model-based QC: anomaly detectors, drift monitoring, calibration,
splitting, grid search, and evaluation metrics."""

from .calibrate import calibrate_threshold
from .drift import fit_kl_reference, kl_divergence_drift, kl_from_reference
from .hybrid import fit_score_augmented_classifier
from .iforest import fit_isolation_forest
from .matrix import Encoder, FeatureMatrix
from .metrics import ClassMetrics, MetricsReport, evaluate
from .model import AnomalyModel, model_from_json, model_to_json, predict, score
from .pca import fit_pca_detector
from .search import grid_search, train_test_split

__all__ = [
    "AnomalyModel", "ClassMetrics", "Encoder", "FeatureMatrix", "MetricsReport",
    "calibrate_threshold", "evaluate", "fit_isolation_forest", "fit_kl_reference",
    "fit_pca_detector", "fit_score_augmented_classifier", "grid_search",
    "kl_divergence_drift", "kl_from_reference", "model_from_json", "model_to_json",
    "predict", "score", "train_test_split",
]
