"""Gradient-boosted regression trees with logistic loss, from scratch.

Second-order boosting: each round fits a depth-limited regression tree to
the gradient/hessian of the logistic loss, leaves take value -G/(H+lambda),
and the ensemble output is a logit. Split candidates are midpoints of
consecutive sorted unique feature values; gains tie-break to the first
feature and lowest threshold, so a constant column can never win a split.
"""

from __future__ import annotations

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


class LogisticLoss:
    """g = p - y, h = p(1 - p) for p = sigmoid(raw)."""

    @staticmethod
    def gradient(y: np.ndarray, raw: np.ndarray) -> np.ndarray:
        return sigmoid(raw) - y

    @staticmethod
    def hessian(y: np.ndarray, raw: np.ndarray) -> np.ndarray:
        p = sigmoid(raw)
        return p * (1.0 - p)


def _leaf_value(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    return -g_sum / (h_sum + reg_lambda)


def _build_tree(X, g, h, depth, max_depth, reg_lambda, min_gain=1e-12):
    node_value = _leaf_value(g.sum(), h.sum(), reg_lambda)
    if depth >= max_depth or X.shape[0] < 2:
        return {"value": node_value}

    G, H = g.sum(), h.sum()
    parent_score = G * G / (H + reg_lambda)
    best = None  # (gain, feature, threshold)
    for j in range(X.shape[1]):
        col = X[:, j]
        order = np.argsort(col, kind="stable")
        cs = col[order]
        if cs[0] == cs[-1]:
            continue
        gl = np.cumsum(g[order])[:-1]
        hl = np.cumsum(h[order])[:-1]
        gr, hr = G - gl, H - hl
        gains = 0.5 * (gl * gl / (hl + reg_lambda)
                       + gr * gr / (hr + reg_lambda) - parent_score)
        # splits only between distinct neighbours; duplicates stay together
        gains[cs[1:] <= cs[:-1]] = -np.inf
        k = int(np.argmax(gains))  # equal gains: argmax takes the lowest threshold
        if gains[k] > min_gain and (best is None or gains[k] > best[0] + 1e-12):
            best = (float(gains[k]), j, float((cs[k] + cs[k + 1]) / 2.0))

    if best is None:
        return {"value": node_value}
    _, j, t = best
    mask = X[:, j] < t
    return {
        "feature": j,
        "threshold": t,
        "left": _build_tree(X[mask], g[mask], h[mask], depth + 1, max_depth, reg_lambda),
        "right": _build_tree(X[~mask], g[~mask], h[~mask], depth + 1, max_depth, reg_lambda),
    }


def _tree_predict(tree: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0])
    for i, row in enumerate(X):
        node = tree
        while "feature" in node:
            node = node["left"] if row[node["feature"]] < node["threshold"] else node["right"]
        out[i] = node["value"]
    return out


def fit_gbdt(X: np.ndarray, y: np.ndarray, rounds: int = 50, depth: int = 3,
             learning_rate: float = 0.1, reg_lambda: float = 1.0) -> dict:
    """Returns the ensemble as a plain dict (JSON-able payload)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    raw = np.zeros(X.shape[0])
    trees = []
    for _ in range(rounds):
        g = LogisticLoss.gradient(y, raw)
        h = LogisticLoss.hessian(y, raw)
        tree = _build_tree(X, g, h, 0, depth, reg_lambda)
        trees.append(tree)
        raw += learning_rate * _tree_predict(tree, X)
    return {"trees": trees, "learning_rate": learning_rate}


def predict_proba_gbdt(ensemble: dict, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    raw = np.zeros(X.shape[0])
    for tree in ensemble["trees"]:
        raw += ensemble["learning_rate"] * _tree_predict(tree, X)
    return sigmoid(raw)
