"""Dense feature matrices for the model-based checks.

Imputation runs upstream, so a FeatureMatrix never holds nulls; the
constructor rejects non-finite cells outright. The Encoder turns a Dataset
into model-ready columns: numerics are z-scored with training-set
statistics, categoricals one-hot encoded with an explicit unknown bucket
for unseen values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import DTYPE_NUMERIC, Dataset
from ..errors import ShapeMismatch


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    feature_names: tuple
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError(f"expected 2-d matrix, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix holds non-finite cells; impute first")
        if len(self.feature_names) != self.values.shape[1]:
            raise ValueError(f"{len(self.feature_names)} names for "
                             f"{self.values.shape[1]} columns")
        if self.labels is not None:
            if self.labels.shape != (self.values.shape[0],):
                raise ValueError("labels must be one per row")
            bad = set(np.unique(self.labels)) - {0, 1}
            if bad:
                raise ValueError(f"labels must be 0/1, found {sorted(bad)}")

    @classmethod
    def of(cls, values, feature_names=None, labels=None) -> "FeatureMatrix":
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        arr = arr.copy()
        arr.setflags(write=False)
        names = tuple(feature_names) if feature_names is not None else tuple(
            f"f{i}" for i in range(arr.shape[1]))
        y = None
        if labels is not None:
            y = np.asarray(labels, dtype=int).copy()
            y.setflags(write=False)
        return cls(values=arr, feature_names=names, labels=y)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def take(self, indices) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=int)
        return FeatureMatrix.of(
            self.values[idx], self.feature_names,
            None if self.labels is None else self.labels[idx])

    def augment(self, extra: np.ndarray, names) -> "FeatureMatrix":
        extra = np.asarray(extra, dtype=float)
        if extra.ndim == 1:
            extra = extra.reshape(-1, 1)
        if extra.shape[0] != self.n:
            raise ShapeMismatch(f"augment rows {extra.shape[0]} != {self.n}")
        return FeatureMatrix.of(np.hstack([self.values, extra]),
                                self.feature_names + tuple(names), self.labels)

    def require_d(self, expected: int) -> None:
        if self.d != expected:
            raise ShapeMismatch(f"model trained on {expected} features, input has {self.d}")


UNKNOWN_BUCKET = "__unknown__"


class Encoder:
    """Dataset -> FeatureMatrix with train-set statistics frozen at fit."""

    def __init__(self):
        self.numeric_stats: dict = {}
        self.categories: dict = {}
        self.feature_names: tuple = ()
        self.columns: tuple = ()

    def fit(self, ds: Dataset, columns=None, label_column=None) -> "Encoder":
        self.columns = tuple(c for c in (columns or ds.column_names) if c != label_column)
        names = []
        for name in self.columns:
            col = ds.column(name)
            observed = col.non_null()
            if col.dtype == DTYPE_NUMERIC:
                if observed:
                    mu = float(np.mean(observed))
                    sigma = float(np.std(observed))
                else:
                    mu, sigma = 0.0, 0.0
                self.numeric_stats[name] = (mu, sigma)
                names.append(name)
            else:
                cats = sorted({str(v) for v in observed})
                self.categories[name] = cats
                names.extend(f"{name}={c}" for c in cats)
                names.append(f"{name}={UNKNOWN_BUCKET}")
        self.feature_names = tuple(names)
        return self

    def transform(self, ds: Dataset, label_column=None) -> FeatureMatrix:
        cols = []
        for name in self.columns:
            col = ds.column(name)
            if name in self.numeric_stats:
                mu, sigma = self.numeric_stats[name]
                raw = []
                for v in col.values:
                    if v is None:
                        raise ValueError(f"column {name!r} still holds nulls; impute first")
                    raw.append((v - mu) / sigma if sigma > 0 else 0.0)
                cols.append(np.asarray(raw, dtype=float))
            else:
                cats = self.categories[name]
                block = np.zeros((ds.row_count, len(cats) + 1))
                index = {c: j for j, c in enumerate(cats)}
                for i, v in enumerate(col.values):
                    if v is None:
                        raise ValueError(f"column {name!r} still holds nulls; impute first")
                    block[i, index.get(str(v), len(cats))] = 1.0
                cols.extend(block[:, j] for j in range(block.shape[1]))
        matrix = np.column_stack(cols) if cols else np.zeros((ds.row_count, 0))
        labels = None
        if label_column is not None:
            labels = np.asarray([int(v) for v in ds.column(label_column).values], dtype=int)
        return FeatureMatrix.of(matrix, self.feature_names, labels)
