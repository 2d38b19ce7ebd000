"""Shared numeric conventions.

One quantile and one standard-deviation convention are fixed system-wide so
that medians, percentile bounds, Tukey fences, and contamination thresholds
all agree: linear interpolation between order statistics, and the population
(divisor n) standard deviation.
"""

from __future__ import annotations

import math
from typing import Sequence


def linear_quantile(values: Sequence[float], q: float) -> float:
    """Quantile by linear interpolation between order statistics.

    For sorted x of length n the quantile sits at position (n - 1) * q and
    interpolates between the neighbouring order statistics.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile fraction out of range: {q}")
    xs = sorted(values)
    if not xs:
        raise ValueError("quantile of empty sequence")
    if len(xs) == 1:
        return float(xs[0])
    pos = (len(xs) - 1) * q
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return float(xs[lo])
    frac = pos - lo
    return float(xs[lo] + frac * (xs[hi] - xs[lo]))


def median(values: Sequence[float]) -> float:
    return linear_quantile(values, 0.5)


def mean(values: Sequence[float]) -> float:
    if not values:
        raise ValueError("mean of empty sequence")
    return float(sum(values) / len(values))


def population_std(values: Sequence[float]) -> float:
    """Standard deviation with divisor n (population convention)."""
    m = mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / len(values))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Pearson correlation; None when either side has zero variance."""
    if len(xs) != len(ys):
        raise ValueError("pearson needs equal-length sequences")
    mx, my = mean(xs), mean(ys)
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return None
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return float(sxy / math.sqrt(sxx * syy))
