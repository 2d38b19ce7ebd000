"""Distribution drift via KL divergence over a shared histogram.

Reference and current series are binned on equal-width edges spanning their
combined range; both probability vectors are epsilon-smoothed and
renormalized, so disjoint supports give a large finite divergence, never an
infinity. KL(ref || cur) is reported in nats and is always >= 0.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import EmptySequence
from .model import AnomalyModel

DEFAULT_DRIFT_THRESHOLD = 0.1  # nats


def _clean(seq) -> np.ndarray:
    vals = np.asarray([v for v in seq if v is not None], dtype=float)
    if vals.size == 0:
        raise EmptySequence("sequence has no non-null values")
    return vals


def _smoothed_probs(values: np.ndarray, edges: np.ndarray, epsilon: float) -> np.ndarray:
    counts, _ = np.histogram(values, bins=edges)
    p = counts.astype(float) / counts.sum()
    p = p + epsilon
    return p / p.sum()


def kl_divergence_drift(reference, current, bins: int, epsilon: float = 1e-9,
                        drift_threshold: float = DEFAULT_DRIFT_THRESHOLD) -> dict:
    if bins < 2:
        raise ValueError(f"need >= 2 bins, got {bins}")
    ref = _clean(reference)
    cur = _clean(current)
    lo = min(ref.min(), cur.min())
    hi = max(ref.max(), cur.max())
    if hi == lo:  # all mass in one point: identical distributions
        edges = np.linspace(lo - 0.5, hi + 0.5, bins + 1)
    else:
        edges = np.linspace(lo, hi, bins + 1)
    p = _smoothed_probs(ref, edges, epsilon)
    q = _smoothed_probs(cur, edges, epsilon)
    kl = float(np.sum(p * np.log(p / q)))
    kl = max(kl, 0.0)  # guard the tiny negative from smoothing round-off
    return {
        "kl_nats": kl,
        "bin_edges": edges.tolist(),
        "drifted": kl > drift_threshold,
    }


def fit_kl_reference(reference, bins: int, epsilon: float = 1e-9,
                     drift_threshold: float = DEFAULT_DRIFT_THRESHOLD) -> AnomalyModel:
    """Persist a reference histogram for later batch comparisons."""
    if bins < 2:
        raise ValueError(f"need >= 2 bins, got {bins}")
    ref = _clean(reference)
    return AnomalyModel(
        kind="kl_reference",
        payload={"values": ref.tolist(), "bins": bins, "epsilon": epsilon,
                 "drift_threshold": drift_threshold},
        n_features=1,
    )


def kl_from_reference(model: AnomalyModel, current) -> dict:
    p = model.payload
    return kl_divergence_drift(p["values"], current, bins=p["bins"],
                               epsilon=p["epsilon"],
                               drift_threshold=p["drift_threshold"])
