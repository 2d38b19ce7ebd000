"""Declarative rule catalog evaluated against a current dataset and,
for day-over-day kinds, the prior-day dataset.

Threshold convention: every rule bound passes INCLUSIVELY at the stated
value ("below 15%" passes at exactly 15%, "between a and b" includes both
ends, "r >= min_corr" passes at equality). Statistical outlier bounds use
the opposite, strict convention; each CheckResult echoes its assertion so
reports stay unambiguous. Percentages over integer counts are computed as
count * 100 / total so boundary cases are exact in floating point.

Row locators in sample_invalid: plain row index (0-based, original order)
for single-column row scans, "column:row" for multi-column scans,
"key=<value>" for keyed day-over-day kinds, and "current_only:<col>" /
"previous_only:<col>" for schema comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Mapping, Sequence

from . import stats
from .dataset import DTYPE_NUMERIC, Column, Dataset
from .errors import (DegenerateBaseline, DegenerateCorrelation, EmptySuite,
                     MissingPreviousDay, QcError, UnknownColumn, UnknownRule)
from .storage import LocalStorage, Storage

SAMPLE_CAP = 20
NUMERIC_CHANGE_TOLERANCE = 1e-9

RULE_KINDS = (
    "row_count", "null_rate", "null_rate_delta", "mean_delta",
    "correlation_min", "common_key_value_change", "schema_match",
    "no_nulls", "unique", "value_range", "ratio_max",
    "constant_across_days", "file_present", "positive_only",
)

NEEDS_PREVIOUS = frozenset({
    "null_rate_delta", "mean_delta", "correlation_min",
    "common_key_value_change", "schema_match", "constant_across_days",
})

# column-scan kinds accept `column` (one name), `columns` (list), or the
# sentinels "all" / "all_numeric" resolved against the current dataset
COLUMN_SCAN_KINDS = frozenset({"null_rate", "no_nulls", "unique",
                               "value_range", "positive_only"})

# required/optional params per kind; config loading validates against this
REQUIRED_PARAMS = {
    "row_count": {"min", "max"},
    "null_rate": {"max_pct"},
    "null_rate_delta": {"column", "max_pct_change"},
    "mean_delta": {"column", "max_pct_change"},
    "correlation_min": {"key", "column", "min_corr"},
    "common_key_value_change": {"key", "column", "max_pct"},
    "schema_match": set(),
    "no_nulls": set(),
    "unique": set(),
    "value_range": set(),
    "ratio_max": {"num_column", "den_column", "max_pct"},
    "constant_across_days": {"key", "column", "direction"},
    "file_present": {"path"},
    "positive_only": set(),
}
OPTIONAL_PARAMS = {
    "row_count": set(),
    "null_rate": {"column", "columns"},
    "null_rate_delta": set(),
    "mean_delta": set(),
    "correlation_min": set(),
    "common_key_value_change": set(),
    "schema_match": set(),
    "no_nulls": {"column", "columns"},
    "unique": {"column", "columns"},
    "value_range": {"column", "columns", "min", "max"},
    "ratio_max": set(),
    "constant_across_days": set(),
    "file_present": {"format"},
    "positive_only": {"column", "columns"},
}

TIERS = ("centralized", "model_level")


def validate_params(kind: str, params: Mapping) -> list[str]:
    """Structural validation; returns a list of violation messages."""
    problems = []
    if kind not in REQUIRED_PARAMS:
        return [f"unknown rule kind {kind!r}"]
    missing = REQUIRED_PARAMS[kind] - set(params)
    for p in sorted(missing):
        problems.append(f"kind {kind!r} requires param {p!r}")
    allowed = REQUIRED_PARAMS[kind] | OPTIONAL_PARAMS[kind]
    for p in sorted(set(params) - allowed):
        problems.append(f"kind {kind!r} does not accept param {p!r}")
    if kind in COLUMN_SCAN_KINDS and not ({"column", "columns"} & set(params)):
        problems.append(f"kind {kind!r} needs 'column' or 'columns'")
    if kind == "value_range" and not ({"min", "max"} & set(params)):
        problems.append("kind 'value_range' needs 'min' and/or 'max'")
    for pct_key in ("max_pct", "max_pct_change"):
        if pct_key in params and not (0 <= params[pct_key] <= 100):
            problems.append(f"{pct_key} must be in [0, 100], got {params[pct_key]}")
    if "min_corr" in params and not (-1 <= params["min_corr"] <= 1):
        problems.append(f"min_corr must be in [-1, 1], got {params['min_corr']}")
    if kind == "constant_across_days" and params.get("direction") not in (
            "must_change", "must_not_be_zero_sum", None):
        problems.append(f"direction must be must_change or must_not_be_zero_sum, "
                        f"got {params.get('direction')!r}")
    return problems


def default_assertion(kind: str, params: Mapping) -> str:
    """Human-readable assertion text used when the config gives none."""
    p = dict(params)
    if kind == "row_count":
        return f"Row count should be between {p['min']} and {p['max']} (inclusive)"
    if kind == "null_rate":
        return f"Null rate of {_cols_label(p)} should be at most {p['max_pct']}%"
    if kind == "null_rate_delta":
        return (f"Day-over-day null-rate change of {p['column']} should be at most "
                f"{p['max_pct_change']} percentage points")
    if kind == "mean_delta":
        return (f"Day-over-day mean change of {p['column']} should be at most "
                f"{p['max_pct_change']}%")
    if kind == "correlation_min":
        return (f"Correlation Threshold is defined at {p['min_corr']} for {p['column']} "
                f"joined on {p['key']}")
    if kind == "common_key_value_change":
        return (f"At most {p['max_pct']}% of common {p['key']} values may change "
                f"in {p['column']}")
    if kind == "schema_match":
        return "Column sets should match the previous day exactly"
    if kind == "no_nulls":
        return f"{_cols_label(p)} should contain no nulls"
    if kind == "unique":
        return f"{_cols_label(p)} should contain no duplicate values"
    if kind == "value_range":
        lo, hi = p.get("min"), p.get("max")
        if lo is not None and hi is not None:
            return f"{_cols_label(p)} values should lie in [{lo}, {hi}]"
        if lo is not None:
            return f"{_cols_label(p)} values should be at least {lo}"
        return f"{_cols_label(p)} values should be at most {hi}"
    if kind == "ratio_max":
        return (f"{p['num_column']}/{p['den_column']} should be at most "
                f"{p['max_pct']}% per row")
    if kind == "constant_across_days":
        if p.get("direction") == "must_not_be_zero_sum":
            return (f"Keyed two-day sum of {p['column']} should not be zero "
                    f"(joined on {p['key']})")
        return f"{p['column']} should change day over day for every {p['key']}"
    if kind == "file_present":
        return f"File for the current date should not be empty or missing: {p['path']}"
    if kind == "positive_only":
        return f"All numerical entries of {_cols_label(p)} should be non-negative"
    raise UnknownRule(f"unknown rule kind {kind!r}")


def _cols_label(params: Mapping) -> str:
    if "column" in params:
        return params["column"]
    cols = params.get("columns")
    return cols if isinstance(cols, str) else ", ".join(cols)


@dataclass(frozen=True)
class Rule:
    name: str
    kind: str
    params: Mapping
    break_the_process: bool = False
    tier: str = "centralized"
    assertion: str = ""

    @classmethod
    def of(cls, name: str, kind: str, params: Mapping | None = None,
           break_the_process: bool = False, tier: str = "centralized",
           assertion: str | None = None) -> "Rule":
        params = dict(params or {})
        problems = validate_params(kind, params)
        if problems:
            raise UnknownRule("; ".join(problems))
        if tier not in TIERS:
            raise UnknownRule(f"tier must be one of {TIERS}, got {tier!r}")
        return cls(name=name, kind=kind, params=params,
                   break_the_process=break_the_process, tier=tier,
                   assertion=assertion or default_assertion(kind, params))


@dataclass(frozen=True)
class CheckResult:
    rule_name: str
    status: str  # pass | breach | error
    threshold_echo: str
    evaluated_at: str
    metric_value: float | None = None
    sample_invalid: tuple = ()
    row_errors: tuple = ()
    error: str | None = None


def _now_iso(now: datetime | None) -> str:
    return (now or datetime.now(timezone.utc)).isoformat(timespec="seconds")


def _scan_columns(rule: Rule, ds: Dataset) -> list[str]:
    p = rule.params
    if "column" in p:
        return [p["column"]]
    cols = p["columns"]
    if cols == "all":
        return ds.column_names
    if cols == "all_numeric":
        return ds.numeric_columns()
    return list(cols)


def _cap(samples: list) -> tuple:
    return tuple(samples[:SAMPLE_CAP])


def _null_pct(col: Column, rows: int) -> float:
    return (col.null_count * 100) / rows if rows else 0.0


def _column_mean(ds: Dataset, name: str) -> float:
    observed = ds.column(name).non_null()
    if not observed:
        raise DegenerateBaseline(f"column {name!r} has no observed values")
    return stats.mean(observed)


def _keyed(ds: Dataset, key: str, column: str) -> dict:
    """key value -> cell value, first occurrence wins on duplicate keys."""
    keys = ds.column(key).values
    vals = ds.column(column).values
    out: dict = {}
    for k, v in zip(keys, vals):
        if k is None or k in out:
            continue
        out[k] = v
    return out


def _values_differ(a, b) -> bool:
    if a is None and b is None:
        return False
    if a is None or b is None:
        return True
    if isinstance(a, float) and isinstance(b, float):
        denom = max(abs(a), abs(b))
        if denom == 0:
            return False
        return abs(a - b) / denom > NUMERIC_CHANGE_TOLERANCE
    return a != b


def evaluate_rule(current: Dataset | None, previous: Dataset | None, rule: Rule,
                  storage: Storage | None = None,
                  now: datetime | None = None) -> CheckResult:
    """Evaluate one rule; pure in (current, previous, rule) apart from the
    injectable clock and the file probe of the file_present kind."""
    ts = _now_iso(now)
    echo = rule.assertion or default_assertion(rule.kind, rule.params)

    def done(status, metric=None, samples=(), row_errors=(), error=None):
        return CheckResult(rule_name=rule.name, status=status, threshold_echo=echo,
                           evaluated_at=ts, metric_value=metric,
                           sample_invalid=tuple(samples), row_errors=tuple(row_errors),
                           error=error)

    if rule.kind == "file_present":
        return _eval_file_present(rule, done, storage)
    if current is None:
        raise UnknownRule(f"rule {rule.name!r} requires a current dataset")
    if rule.kind in NEEDS_PREVIOUS and previous is None:
        raise MissingPreviousDay(
            f"rule {rule.name!r} ({rule.kind}) needs the previous-day dataset")

    p = rule.params
    if rule.kind == "row_count":
        rows = current.row_count
        ok = p["min"] <= rows <= p["max"]
        return done("pass" if ok else "breach", metric=float(rows))

    if rule.kind == "null_rate":
        samples = []
        worst = 0.0
        for name in _scan_columns(rule, current):
            pct = _null_pct(current.column(name), current.row_count)
            worst = max(worst, pct)
            if pct > p["max_pct"]:
                samples.append((name, pct))
        return done("breach" if samples else "pass", metric=worst, samples=_cap(samples))

    if rule.kind == "null_rate_delta":
        cur = _null_pct(current.column(p["column"]), current.row_count)
        prev = _null_pct(previous.column(p["column"]), previous.row_count)
        delta = abs(cur - prev)
        return done("breach" if delta > p["max_pct_change"] else "pass", metric=delta)

    if rule.kind == "mean_delta":
        prev_mean = _column_mean(previous, p["column"])
        if prev_mean == 0:
            raise DegenerateBaseline(
                f"previous-day mean of {p['column']!r} is zero; percent change undefined")
        cur_mean = _column_mean(current, p["column"])
        pct = abs(cur_mean - prev_mean) / abs(prev_mean) * 100
        return done("breach" if pct > p["max_pct_change"] else "pass", metric=pct)

    if rule.kind == "correlation_min":
        cur_map = _keyed(current, p["key"], p["column"])
        prev_map = _keyed(previous, p["key"], p["column"])
        pairs = [(cur_map[k], prev_map[k]) for k in cur_map
                 if k in prev_map and cur_map[k] is not None and prev_map[k] is not None]
        if len(pairs) < 3:
            raise DegenerateCorrelation(
                f"only {len(pairs)} jointly observed key pairs; need >= 3")
        xs = [float(a) for a, _ in pairs]
        ys = [float(b) for _, b in pairs]
        r = stats.pearson(xs, ys)
        if r is None:
            raise DegenerateCorrelation("zero variance on one side of the join")
        return done("breach" if r < p["min_corr"] else "pass", metric=r)

    if rule.kind == "common_key_value_change":
        cur_map = _keyed(current, p["key"], p["column"])
        prev_map = _keyed(previous, p["key"], p["column"])
        common = [k for k in cur_map if k in prev_map]
        if not common:
            return done("pass", metric=0.0)
        changed = [k for k in common if _values_differ(cur_map[k], prev_map[k])]
        pct = (len(changed) * 100) / len(common)
        samples = [(f"key={k}", cur_map[k]) for k in changed]
        return done("breach" if pct > p["max_pct"] else "pass",
                    metric=pct, samples=_cap(samples))

    if rule.kind == "schema_match":
        cur_set, prev_set = set(current.column_names), set(previous.column_names)
        extra = sorted(cur_set - prev_set)
        gone = sorted(prev_set - cur_set)
        samples = [(f"current_only:{c}", c) for c in extra]
        samples += [(f"previous_only:{c}", c) for c in gone]
        return done("breach" if samples else "pass",
                    metric=float(len(extra) + len(gone)), samples=_cap(samples))

    if rule.kind in ("no_nulls", "unique", "value_range", "positive_only"):
        return _eval_row_scan(rule, current, done)

    if rule.kind == "ratio_max":
        return _eval_ratio_max(rule, current, done)

    if rule.kind == "constant_across_days":
        return _eval_constant(rule, current, previous, done)

    raise UnknownRule(f"unknown rule kind {rule.kind!r}")


def _eval_file_present(rule: Rule, done, storage: Storage | None) -> CheckResult:
    from .dataset import read_table  # deferred: avoids import cycle at module load
    p = rule.params
    try:
        ds = read_table(p["path"], format=p.get("format", "csv"),
                        storage=storage or LocalStorage())
    except QcError as exc:
        return done("breach", samples=[(p["path"], str(exc))])
    if ds.row_count == 0:
        return done("breach", metric=0.0, samples=[(p["path"], "0 rows")])
    return done("pass", metric=float(ds.row_count))


def _eval_row_scan(rule: Rule, current: Dataset, done) -> CheckResult:
    kind, p = rule.kind, rule.params
    names = _scan_columns(rule, current)
    multi = len(names) > 1
    samples: list = []
    offending = 0

    for name in names:
        col = current.column(name)

        def locator(row: int) -> object:
            return f"{name}:{row}" if multi else row

        if kind == "no_nulls":
            for row, is_null in enumerate(col.null_mask):
                if is_null:
                    offending += 1
                    samples.append((locator(row), None))
            continue

        if kind == "unique":
            counts: dict = {}
            for _, v in col.items():
                counts[v] = counts.get(v, 0) + 1
            for row, v in col.items():
                if counts[v] > 1:
                    offending += 1
                    samples.append((locator(row), v))
            continue

        if kind == "value_range":
            lo, hi = p.get("min"), p.get("max")
            for row, v in col.items():
                if (lo is not None and v < lo) or (hi is not None and v > hi):
                    offending += 1
                    samples.append((locator(row), v))
            continue

        # positive_only: non-negative passes, strictly negative breaches
        for row, v in col.items():
            if v < 0:
                offending += 1
                samples.append((locator(row), v))

    return done("breach" if offending else "pass",
                metric=float(offending), samples=_cap(samples))


def _eval_ratio_max(rule: Rule, current: Dataset, done) -> CheckResult:
    """Per-row num/den as a percentage; zero denominators are surfaced as
    row errors in the result (status error when nothing breaches outright)."""
    p = rule.params
    num = current.column(p["num_column"]).values
    den = current.column(p["den_column"]).values
    samples: list = []
    row_errors: list = []
    offending = 0
    for row, (a, b) in enumerate(zip(num, den)):
        if a is None or b is None:
            continue
        if b == 0:
            row_errors.append((row, "denominator is zero"))
            continue
        ratio_pct = (a * 100) / b
        if ratio_pct > p["max_pct"]:
            offending += 1
            samples.append((row, ratio_pct))
    if offending:
        return done("breach", metric=float(offending), samples=_cap(samples),
                    row_errors=_cap(row_errors))
    if row_errors:
        return done("error", metric=0.0, row_errors=_cap(row_errors),
                    error=f"{len(row_errors)} rows with zero denominator")
    return done("pass", metric=0.0)


def _eval_constant(rule: Rule, current: Dataset, previous: Dataset, done) -> CheckResult:
    p = rule.params
    cur_map = _keyed(current, p["key"], p["column"])
    prev_map = _keyed(previous, p["key"], p["column"])
    common = [k for k in cur_map if k in prev_map]
    samples: list = []
    if p["direction"] == "must_change":
        for k in common:
            if not _values_differ(cur_map[k], prev_map[k]):
                samples.append((f"key={k}", cur_map[k]))
    else:  # must_not_be_zero_sum
        for k in common:
            a, b = cur_map[k], prev_map[k]
            if a is None or b is None:
                continue
            total = float(a) + float(b)
            if abs(total) <= NUMERIC_CHANGE_TOLERANCE * max(1.0, abs(float(a)), abs(float(b))):
                samples.append((f"key={k}", total))
    return done("breach" if samples else "pass",
                metric=float(len(samples)), samples=_cap(samples))


def evaluate_suite(current: Dataset | None, previous: Dataset | None,
                   suite: Sequence[Rule], storage: Storage | None = None,
                   now: datetime | None = None) -> list[CheckResult]:
    """One CheckResult per rule, in suite order. A rule whose evaluation
    raises is recorded as status=error; the suite never aborts mid-way."""
    if not suite:
        raise EmptySuite("check suite is empty")
    results = []
    for rule in suite:
        try:
            results.append(evaluate_rule(current, previous, rule,
                                         storage=storage, now=now))
        except Exception as exc:
            results.append(CheckResult(
                rule_name=rule.name, status="error",
                threshold_echo=rule.assertion or default_assertion(rule.kind, rule.params),
                evaluated_at=_now_iso(now), error=f"{type(exc).__name__}: {exc}"))
    return results
