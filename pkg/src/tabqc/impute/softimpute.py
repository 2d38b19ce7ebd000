"""Matrix completion by iterative soft-thresholded SVD.

Missing entries start at zero; each pass takes the SVD of the current
completion, shrinks singular values by lambda, truncates to max_rank, and
refills only the missing cells, stopping when the relative Frobenius change
drops below tol. Observed entries are never modified; the report carries
the reconstruction RMSE on observed cells instead.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyRowOrColumn
from .report import ImputationReport


def impute_softimpute(X, lam: float, max_rank: int, tol: float = 1e-5,
                      max_iter: int = 200) -> tuple:
    """X is a numeric matrix with NaN marking the missing entries."""
    X = np.asarray(X, dtype=float)
    observed = ~np.isnan(X)
    if not observed.any(axis=1).all():
        raise EmptyRowOrColumn("a row has no observed entries")
    if not observed.any(axis=0).all():
        raise EmptyRowOrColumn("a column has no observed entries")
    if max_rank < 1:
        raise ValueError(f"max_rank must be >= 1, got {max_rank}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")

    Z = np.where(observed, X, 0.0)
    iterations = 0
    delta = 0.0
    for _ in range(max_iter):
        iterations += 1
        U, s, Vt = np.linalg.svd(Z, full_matrices=False)
        s = np.maximum(s - lam, 0.0)
        s[max_rank:] = 0.0
        low_rank = (U * s) @ Vt
        Z_next = np.where(observed, X, low_rank)
        denom = max(float(np.linalg.norm(Z)), 1e-12)
        delta = float(np.linalg.norm(Z_next - Z)) / denom
        Z = Z_next
        if delta < tol:
            break

    # observed cells of Z are X by construction; RMSE measures the shrunken
    # low-rank fit against them instead
    fit_diff = (low_rank - X)[observed]
    rmse = float(np.sqrt(np.mean(fit_diff ** 2))) if fit_diff.size else 0.0
    report = ImputationReport(
        method_used={"matrix": "softimpute"},
        cells_imputed=int((~observed).sum()),
        iterations=iterations,
        convergence_delta=delta,
        details={"observed_rmse": rmse, "lambda": lam, "max_rank": max_rank},
    )
    return Z, report
