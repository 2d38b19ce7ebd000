"""Deterministic single-value fills: the baseline every fancier imputer is
measured against."""

from __future__ import annotations

from collections import Counter

from .. import stats
from ..dataset import DTYPE_NUMERIC, Column, Dataset
from ..errors import AllNullColumn
from .report import ImputationReport


def _fill_value(col: Column, strategy: str):
    observed = col.non_null()
    if not observed:
        raise AllNullColumn(f"column {col.name!r} has no observed values to fill from")
    if col.dtype == DTYPE_NUMERIC:
        if strategy == "mean":
            return stats.mean(observed)
        if strategy == "median":
            return stats.median(observed)
        # mode on numerics: most frequent, ties to the smallest value
        counts = Counter(observed)
        return min(v for v, c in counts.items() if c == max(counts.values()))
    # categoricals always take the mode, ties broken lexicographically
    counts = Counter(observed)
    top = max(counts.values())
    return min((v for v, c in counts.items() if c == top))


def impute_simple(ds: Dataset, strategy: str = "median",
                  columns=None) -> tuple:
    """Fill nulls column by column; numeric columns use the strategy,
    categorical columns use the mode."""
    if strategy not in ("mean", "median", "mode"):
        raise ValueError(f"unknown strategy {strategy!r}")
    treated = columns if columns is not None else [
        c.name for c in ds.columns if c.null_count > 0]
    replacements = {}
    method_used = {}
    imputed = 0
    for name in treated:
        col = ds.column(name)
        if col.null_count == 0:
            continue
        fill = _fill_value(col, strategy)
        values = [fill if v is None else v for v in col.values]
        replacements[name] = Column.of(name, col.dtype, values)
        method_used[name] = f"simple({strategy})" if col.dtype == DTYPE_NUMERIC \
            else "simple(mode)"
        imputed += col.null_count
    return ds.with_columns(replacements), ImputationReport(
        method_used=method_used, cells_imputed=imputed)
