"""Statistical outlier detectors over one numeric series.

Five methods share one report shape: historical min-max window, percentile
bounds, modified Z-score, Tukey's fences, and a mean/std band. All bounds
here are violated STRICTLY (a value sitting exactly on a bound is not an
outlier), the opposite convention from rule thresholds, which pass
inclusively at the stated bound; each report records its bounds so the two
conventions cannot be confused downstream.

Nulls are ignored, never flagged, and never shift reported row indices:
flagged entries carry the index the value had in the input sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from . import stats
from .errors import EmptyHistory, TooFewValues

# scaling constants for the modified Z-score: 0.6745 relates MAD to sigma
# under normality, 1.253314 does the same for mean absolute deviation
MAD_CONSISTENCY = 0.6745
MEAN_AD_CONSISTENCY = 1.253314
DEFAULT_MODIFIED_Z_THRESHOLD = 3.5


@dataclass(frozen=True)
class OutlierReport:
    """Flagged entries are (row index, value, score or violated bound),
    with indices strictly increasing."""

    method: str
    flagged: tuple
    bounds_used: tuple | None = None
    window_size: int | None = None
    degenerate: bool = False

    @property
    def flagged_indices(self) -> list[int]:
        return [i for i, _, _ in self.flagged]


def _observed(series: Sequence) -> list[tuple[int, float]]:
    out = []
    for i, v in enumerate(series):
        if v is None:
            continue
        out.append((i, float(v)))
    return out


def _flag_outside(cells: list[tuple[int, float]], lower: float, upper: float) -> tuple:
    flagged = []
    for i, v in cells:
        if v < lower:
            flagged.append((i, v, lower))
        elif v > upper:
            flagged.append((i, v, upper))
    return tuple(flagged)


def outliers_minmax(series: Sequence, history: Sequence, window: int = 10) -> OutlierReport:
    """Flag values strictly outside the min/max of the last `window`
    non-null history observations."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    hist = [float(v) for v in history if v is not None]
    if not hist:
        raise EmptyHistory("history has no non-null values")
    tail = hist[-window:]
    lower, upper = min(tail), max(tail)
    return OutlierReport(
        method="minmax_history",
        flagged=_flag_outside(_observed(series), lower, upper),
        bounds_used=(lower, upper),
        window_size=min(window, len(hist)),
    )


def outliers_percentile(series: Sequence, p_low: float, p_high: float) -> OutlierReport:
    """Bounds are the linear-interpolation quantiles of the series itself."""
    if not (0 <= p_low < p_high <= 1):
        raise ValueError(f"need 0 <= p_low < p_high <= 1, got ({p_low}, {p_high})")
    cells = _observed(series)
    if len(cells) < 2:
        raise TooFewValues(f"percentile bounds need >= 2 values, got {len(cells)}")
    values = [v for _, v in cells]
    lower = stats.linear_quantile(values, p_low)
    upper = stats.linear_quantile(values, p_high)
    return OutlierReport(
        method="percentile",
        flagged=_flag_outside(cells, lower, upper),
        bounds_used=(lower, upper),
    )


def outliers_modified_z(series: Sequence,
                        threshold: float = DEFAULT_MODIFIED_Z_THRESHOLD) -> OutlierReport:
    """Modified Z-score about the median.

    M_i = 0.6745 (x_i - median) / MAD. When MAD is zero the mean absolute
    deviation about the median takes its place with the 1.253314 consistency
    constant; when both are zero the series has no usable dispersion and the
    report is marked degenerate with nothing flagged.
    """
    cells = _observed(series)
    if len(cells) < 3:
        raise TooFewValues(f"modified Z needs >= 3 values, got {len(cells)}")
    values = [v for _, v in cells]
    med = stats.median(values)
    abs_dev = [abs(v - med) for v in values]
    mad = stats.median(abs_dev)
    if mad > 0:
        scores = [MAD_CONSISTENCY * (v - med) / mad for _, v in cells]
    else:
        mean_ad = stats.mean(abs_dev)
        if mean_ad == 0:
            return OutlierReport(method="modified_z", flagged=(), degenerate=True)
        scores = [(v - med) / (MEAN_AD_CONSISTENCY * mean_ad) for _, v in cells]
    flagged = tuple((i, v, m) for (i, v), m in zip(cells, scores) if abs(m) > threshold)
    return OutlierReport(method="modified_z", flagged=flagged)


def outliers_tukey(series: Sequence, k: float = 1.5) -> OutlierReport:
    """Tukey's fences at Q1 - k*IQR and Q3 + k*IQR."""
    cells = _observed(series)
    if len(cells) < 4:
        raise TooFewValues(f"Tukey fences need >= 4 values, got {len(cells)}")
    values = [v for _, v in cells]
    q1 = stats.linear_quantile(values, 0.25)
    q3 = stats.linear_quantile(values, 0.75)
    iqr = q3 - q1
    lower, upper = q1 - k * iqr, q3 + k * iqr
    return OutlierReport(
        method="tukey",
        flagged=_flag_outside(cells, lower, upper),
        bounds_used=(lower, upper),
    )


def outliers_stddev(series: Sequence, n_sigma: float = 3.0) -> OutlierReport:
    """Flag |x - mean| > n_sigma * population std; a zero-variance series
    flags nothing."""
    cells = _observed(series)
    if len(cells) < 2:
        raise TooFewValues(f"std band needs >= 2 values, got {len(cells)}")
    values = [v for _, v in cells]
    mu = stats.mean(values)
    sigma = stats.population_std(values)
    if sigma == 0:
        return OutlierReport(method="stddev_band", flagged=(),
                             bounds_used=(mu, mu), degenerate=True)
    lower, upper = mu - n_sigma * sigma, mu + n_sigma * sigma
    return OutlierReport(
        method="stddev_band",
        flagged=_flag_outside(cells, lower, upper),
        bounds_used=(lower, upper),
    )


METHODS = {
    "minmax_history": outliers_minmax,
    "percentile": outliers_percentile,
    "modified_z": outliers_modified_z,
    "tukey": outliers_tukey,
    "stddev_band": outliers_stddev,
}
