"""Method routing: pick an imputer from the missingness profile and the
table's shape, then apply it.

Routing order: mixed-type data with a MAR column goes to the forest
imputer; an all-numeric table with at least 5 columns is treated as
plausibly low-rank and goes to matrix completion; approximately linear
pairwise structure (max |corr| >= 0.5) goes to chained equations;
everything else takes the median fill. Config overrides win over routing,
per column or via the "*" wildcard.
"""

from __future__ import annotations

import numpy as np

from .. import stats
from ..dataset import DTYPE_NUMERIC, Column, Dataset
from .mice import impute_mice
from .missforest import impute_missforest
from .profile import MissingnessProfile, profile_missingness
from .report import ImputationReport
from .simple import impute_simple
from .softimpute import impute_softimpute

LOW_RANK_MIN_COLUMNS = 5
LINEAR_CORR_MIN = 0.5

METHOD_NAMES = ("simple(mean)", "simple(median)", "simple(mode)",
                "mice", "softimpute", "missforest")


def _max_abs_correlation(ds: Dataset) -> float:
    names = ds.numeric_columns()
    best = 0.0
    for i in range(len(names)):
        a = ds.column(names[i])
        for j in range(i + 1, len(names)):
            b = ds.column(names[j])
            xs, ys = [], []
            for va, vb in zip(a.values, b.values):
                if va is not None and vb is not None:
                    xs.append(va)
                    ys.append(vb)
            if len(xs) < 3:
                continue
            r = stats.pearson(xs, ys)
            if r is not None:
                best = max(best, abs(r))
    return best


def select_method(profile: MissingnessProfile, ds: Dataset,
                  overrides: dict | None = None) -> dict:
    """Per-column method map for every column that has nulls."""
    null_cols = [c.name for c in ds.columns if c.null_count > 0]
    if not null_cols:
        return {}
    dtypes = {c.dtype for c in ds.columns}
    mixed = DTYPE_NUMERIC in dtypes and len(dtypes) > 1
    all_numeric = dtypes == {DTYPE_NUMERIC}

    if mixed and profile.any_mar():
        routed = "missforest"
    elif all_numeric and len(ds.columns) >= LOW_RANK_MIN_COLUMNS:
        routed = "softimpute"
    elif _max_abs_correlation(ds) >= LINEAR_CORR_MIN:
        routed = "mice"
    else:
        routed = "simple(median)"

    result = {name: routed for name in null_cols}
    overrides = overrides or {}
    if "*" in overrides:
        result = {name: overrides["*"] for name in null_cols}
    for name, method in overrides.items():
        if name != "*" and name in result:
            result[name] = method
    return result


def _softimpute_dataset(ds: Dataset, columns, lam: float, max_rank: int,
                        seed: int) -> tuple:
    numeric = ds.numeric_columns()
    matrix = np.full((ds.row_count, len(numeric)), np.nan)
    for j, name in enumerate(numeric):
        for i, v in enumerate(ds.column(name).values):
            if v is not None:
                matrix[i, j] = v
    completed, report = impute_softimpute(matrix, lam=lam, max_rank=max_rank)
    replacements = {}
    treated = [n for n in columns if n in numeric]
    for name in treated:
        j = numeric.index(name)
        col = ds.column(name)
        values = [col.values[i] if col.values[i] is not None else float(completed[i, j])
                  for i in range(ds.row_count)]
        replacements[name] = Column.of(name, DTYPE_NUMERIC, values)
    out = ds.with_columns(replacements)
    # categorical leftovers under a matrix method fall back to the mode fill
    leftover = [n for n in columns if n not in numeric]
    extra_used = {}
    if leftover:
        out, simple_report = impute_simple(out, strategy="median", columns=leftover)
        extra_used = simple_report.method_used
    cells = sum(ds.column(n).null_count for n in columns)
    return out, ImputationReport(
        method_used={**{n: "softimpute" for n in treated}, **extra_used},
        cells_imputed=cells, iterations=report.iterations,
        convergence_delta=report.convergence_delta, details=report.details)


def impute_dataset(ds: Dataset, profile: MissingnessProfile | None = None,
                   method: str | None = None, overrides: dict | None = None,
                   seed: int = 0, lam: float = 0.1,
                   max_rank: int | None = None) -> tuple:
    """Route and apply; returns (imputed dataset, merged report)."""
    if profile is None:
        profile = profile_missingness(ds)
    if method is not None:
        routing = {c.name: method for c in ds.columns if c.null_count > 0}
    else:
        routing = select_method(profile, ds, overrides)
    if not routing:
        return ds, ImputationReport(method_used={}, cells_imputed=0)

    by_method: dict = {}
    for name, m in routing.items():
        by_method.setdefault(m, []).append(name)

    out = ds
    merged_used: dict = {}
    cells = 0
    iterations = 0
    delta = None
    details: dict = {}
    for m in sorted(by_method):
        cols = sorted(by_method[m])
        if m.startswith("simple"):
            strategy = m[len("simple("):-1] if "(" in m else "median"
            out, rep = impute_simple(out, strategy=strategy, columns=cols)
        elif m == "mice":
            out, rep = impute_mice(out, seed=seed, columns=cols)
        elif m == "missforest":
            out, rep = impute_missforest(out, seed=seed, columns=cols)
        elif m == "softimpute":
            rank = max_rank or max(1, min(len(out.numeric_columns()) - 1, 10))
            out, rep = _softimpute_dataset(out, cols, lam=lam, max_rank=rank, seed=seed)
        else:
            raise ValueError(f"unknown imputation method {m!r}")
        merged_used.update(rep.method_used)
        cells += rep.cells_imputed
        iterations = max(iterations, rep.iterations)
        delta = rep.convergence_delta if rep.convergence_delta is not None else delta
        details.update(rep.details)
    return out, ImputationReport(method_used=merged_used, cells_imputed=cells,
                                 iterations=iterations, convergence_delta=delta,
                                 details=details)
