"""End-to-end orchestration: ingest -> profile -> impute -> rule QC ->
statistical QC -> ml QC -> governance, per source, with worker-pool
parallelism, retries, and per-source checkpointing.

Workers compute pure, picklable SourceOutcome values; the parent merges
them in source_id order and performs every ledger write and artifact
emission itself, so persisted status files and reports are byte-identical
whatever the worker count or completion order. All timestamps in artifacts
derive from one clock stamp taken at run start (injectable for tests).
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import date as Date, datetime, timedelta, timezone

from . import outliers
from .config import ResourceConfig
from .dataset import Dataset, read_table
from .errors import CorruptCheckpoint, FileMissing, QcError, UnknownRun
from .governance import Ledger, RUN_DATE_FORMAT, SEVERITY_RED
from .impute import (impute_dataset, profile_missingness,
                     residual_uncertainty_check)
from .notify import dispatch_notifications
from .report import (render_breach_report, render_profile_figures,
                     render_profile_report, render_status_file)
from .rules import CheckResult, NEEDS_PREVIOUS, evaluate_suite
from .specs import MODE_LONGITUDINAL, QcSpec, effective_spec
from .storage import LocalStorage, resolve_path

SOURCE_CHECK_NAME = "Source Execution"
SOURCE_CHECK_ASSERTION = "Source must ingest and evaluate without errors"


@dataclass(frozen=True)
class CheckDef:
    """Just enough of a rule for governance: identity, severity flag, text."""
    name: str
    break_the_process: bool = False
    assertion: str = ""


@dataclass
class SourceOutcome:
    """Pure result of one source's pipeline; computed in a worker."""
    source_id: str
    series: str
    results: list = field(default_factory=list)
    check_defs: list = field(default_factory=list)
    current_path: str | None = None
    previous_path: str | None = None
    profile_path: str | None = None
    imputation_json: str | None = None
    timings: dict = field(default_factory=dict)
    error: str | None = None
    attempts: int = 1


def _parse_date(date) -> Date:
    if isinstance(date, Date):
        return date
    return datetime.strptime(str(date), "%Y%m%d").date()


def _columns_of(cfg: dict, ds: Dataset) -> list:
    if "column" in cfg:
        return [cfg["column"]]
    cols = cfg.get("columns", "all_numeric")
    if cols == "all":
        return ds.column_names
    if cols == "all_numeric":
        return ds.numeric_columns()
    return list(cols)


def _stat_assertion(cfg: dict) -> str:
    method = cfg["method"]
    params = cfg.get("params", {})
    target = cfg.get("column") or cfg.get("columns", "all_numeric")
    if method == "minmax_history":
        return (f"Values must stay within the min-max range of the last "
                f"{params.get('window', 10)} observations ({target})")
    if method == "stddev_band":
        return (f"Values must stay within {params.get('n_sigma', 3)} standard "
                f"deviations of the mean ({target})")
    if method == "percentile":
        return (f"Values must stay within the [{params.get('p_low')}, "
                f"{params.get('p_high')}] quantile band ({target})")
    if method == "modified_z":
        return (f"Modified Z-scores must stay within "
                f"{params.get('threshold', 3.5)} ({target})")
    if method == "tukey":
        return (f"Values must stay within Tukey fences, k="
                f"{params.get('k', 1.5)} ({target})")
    if method == "last_value_delta":
        return f"The latest value must differ from the previous one ({target})"
    return f"{method} ({target})"


def _eval_stat_check(cfg: dict, ds: Dataset, previous: Dataset | None,
                     mode: str, now_iso: str) -> CheckResult:
    method = cfg["method"]
    params = dict(cfg.get("params", {}))
    names = _columns_of(cfg, ds)
    samples: list = []
    row_errors: list = []
    flagged_total = 0
    evaluated_any = False

    for name in names:
        try:
            col = ds.column(name)
            if method == "last_value_delta":
                observed = col.non_null()
                if len(observed) < 2:
                    raise QcError(f"{name}: needs 2 observed values")
                a, b = observed[-2], observed[-1]
                scale = max(abs(a), abs(b))
                if scale == 0 or abs(a - b) / scale <= 1e-9:
                    flagged_total += 1
                    samples.append((f"{name}[last]", b))
                evaluated_any = True
                continue

            if method == "minmax_history":
                window = params.get("window", 10)
                if mode == MODE_LONGITUDINAL:
                    history = list(col.values[:-1])
                    if col.values[-1] is None:
                        raise QcError(f"{name}: latest observation is null")
                    series = [col.values[-1]]
                    offset = ds.row_count - 1
                else:
                    if previous is None:
                        raise QcError(f"{name}: previous day required")
                    history = list(previous.column(name).values)
                    series = list(col.values)
                    offset = 0
                report = outliers.outliers_minmax(series, history, window=window)
                for idx, value, bound in report.flagged:
                    samples.append((f"{name}[{offset + idx}]", value))
                flagged_total += len(report.flagged)
                evaluated_any = True
                continue

            series = list(col.values)
            if method == "percentile":
                report = outliers.outliers_percentile(
                    series, params.get("p_low", 0.01), params.get("p_high", 0.99))
            elif method == "modified_z":
                report = outliers.outliers_modified_z(
                    series, threshold=params.get("threshold", 3.5))
            elif method == "tukey":
                report = outliers.outliers_tukey(series, k=params.get("k", 1.5))
            elif method == "stddev_band":
                report = outliers.outliers_stddev(
                    series, n_sigma=params.get("n_sigma", 3))
            else:
                raise QcError(f"unknown statistical method {method!r}")
            for idx, value, bound in report.flagged:
                samples.append((f"{name}[{idx}]", value))
            flagged_total += len(report.flagged)
            evaluated_any = True
        except QcError as exc:
            row_errors.append((name, str(exc)))

    echo = cfg.get("assertion") or _stat_assertion(cfg)
    if flagged_total:
        status = "breach"
    elif not evaluated_any and row_errors:
        status = "error"
    else:
        status = "pass"
    return CheckResult(
        rule_name=cfg["name"], status=status, threshold_echo=echo,
        evaluated_at=now_iso, metric_value=float(flagged_total),
        sample_invalid=tuple(samples[:20]), row_errors=tuple(row_errors[:20]),
        error="; ".join(f"{n}: {m}" for n, m in row_errors) if status == "error" else None)


def _eval_ml_check(cfg: dict, ds: Dataset, previous: Dataset | None,
                   mode: str, seed: int, now_iso: str) -> CheckResult:
    from .ml import Encoder, calibrate_threshold, fit_isolation_forest, score
    from .ml.drift import kl_divergence_drift

    method = cfg["method"]
    params = dict(cfg.get("params", {}))
    echo = cfg.get("assertion") or f"{method} check must not flag ({cfg.get('column') or cfg.get('columns', 'all_numeric')})"

    def done(status, metric=None, samples=(), error=None):
        return CheckResult(rule_name=cfg["name"], status=status, threshold_echo=echo,
                           evaluated_at=now_iso, metric_value=metric,
                           sample_invalid=tuple(samples), error=error)

    try:
        if method == "kl_drift":
            name = cfg["column"]
            values = list(ds.column(name).values)
            if mode == MODE_LONGITUDINAL:
                half = len(values) // 2
                reference, current = values[:half], values[half:]
            else:
                if previous is None:
                    raise QcError(f"{name}: previous day required for drift")
                reference = list(previous.column(name).values)
                current = values
            outcome = kl_divergence_drift(
                reference, current, bins=params.get("bins", 10),
                epsilon=params.get("epsilon", 1e-9),
                drift_threshold=params.get("drift_threshold", 0.1))
            status = "breach" if outcome["drifted"] else "pass"
            return done(status, metric=outcome["kl_nats"],
                        samples=((name, outcome["kl_nats"]),) if outcome["drifted"] else ())

        if method == "iforest":
            numeric = _columns_of(cfg, ds)
            encoder = Encoder().fit(ds, columns=numeric)
            X = encoder.transform(ds)
            model = fit_isolation_forest(
                X, trees=params.get("trees", 100),
                subsample=params.get("subsample", 256),
                seed=params.get("seed", seed))
            scores = score(model, X)
            if "score_threshold" in params:
                threshold = params["score_threshold"]
            elif "contamination" in params:
                threshold = calibrate_threshold(scores, "contamination",
                                                rate=params["contamination"])
            else:
                threshold = 0.7
            flagged = [(f"row {i}", float(s)) for i, s in enumerate(scores)
                       if s >= threshold]
            status = "breach" if flagged else "pass"
            return done(status, metric=float(len(flagged)), samples=tuple(flagged[:20]))

        raise QcError(f"unknown ml method {method!r}")
    except Exception as exc:
        return done("error", error=f"{type(exc).__name__}: {exc}")


def _inject_paths(rules: tuple, current_path: str) -> tuple:
    """file_present rules may use the placeholder path {current}."""
    out = []
    for rule in rules:
        if rule.kind == "file_present" and rule.params.get("path") == "{current}":
            params = dict(rule.params)
            params["path"] = current_path
            out.append(replace(rule, params=params))
        else:
            out.append(rule)
    return tuple(out)


def _needs_previous(spec: QcSpec) -> bool:
    if any(r.kind in NEEDS_PREVIOUS for r in spec.checks):
        return True
    if spec.mode != MODE_LONGITUDINAL:
        if any(c["method"] == "minmax_history" for c in spec.statistical):
            return True
        if any(c["method"] == "kl_drift" for c in spec.ml):
            return True
    return False


def _execute_source(config: ResourceConfig, spec: QcSpec, source, date: Date,
                    run_id: str, series: str, now: datetime) -> SourceOutcome:
    """The full single-source pipeline; pure apart from reading inputs and
    writing this source's own profile artifacts."""
    timings: dict = {}
    outcome = SourceOutcome(source_id=source.source_id, series=series)
    now_iso = now.isoformat(timespec="seconds")
    bindings = dict(config.bindings)
    bindings.setdefault("source", source.source_id)

    t0 = time.perf_counter()
    current_path = resolve_path(source.current_path, date, bindings).resolved
    outcome.current_path = current_path
    previous = None
    previous_path = None
    if source.previous_path:
        previous_path = resolve_path(source.previous_path, date - timedelta(days=1),
                                     bindings).resolved
        outcome.previous_path = previous_path

    rules = _inject_paths(spec.checks, current_path)
    check_defs = [CheckDef(r.name, r.break_the_process, r.assertion) for r in rules]
    check_defs += [CheckDef(c["name"], c.get("break_the_process", False),
                            c.get("assertion") or _stat_assertion(c))
                   for c in spec.statistical]
    check_defs += [CheckDef(c["name"], c.get("break_the_process", False),
                            c.get("assertion", f"{c['method']} must not flag"))
                   for c in spec.ml]
    outcome.check_defs = check_defs

    try:
        ds = read_table(current_path, format=source.format,
                        schema=config.schema_overrides, name=source.source_id)
    except FileMissing:
        # the file-present path: evaluate any file_present rules (they breach),
        # everything else becomes an explicit error entry
        results = []
        for rule in rules:
            if rule.kind == "file_present":
                results.extend(evaluate_suite(None, None, [rule], now=now))
            else:
                results.append(CheckResult(
                    rule_name=rule.name, status="error",
                    threshold_echo=rule.assertion, evaluated_at=now_iso,
                    error="current file missing"))
        for c in spec.statistical:
            results.append(CheckResult(
                rule_name=c["name"], status="error",
                threshold_echo=c.get("assertion") or _stat_assertion(c),
                evaluated_at=now_iso, error="current file missing"))
        for c in spec.ml:
            results.append(CheckResult(
                rule_name=c["name"], status="error",
                threshold_echo=c.get("assertion", ""),
                evaluated_at=now_iso, error="current file missing"))
        outcome.results = results
        timings["ingest"] = time.perf_counter() - t0
        outcome.timings = timings
        return outcome
    timings["ingest"] = time.perf_counter() - t0

    if _needs_previous(spec) and previous_path:
        try:
            previous = read_table(previous_path, format=source.format,
                                  schema=config.schema_overrides,
                                  name=f"{source.source_id}_prev")
        except FileMissing:
            previous = None

    # profile: figures beside the report, stats embedded in the HTML
    t0 = time.perf_counter()
    profile_dir = f"{config.output['profile_dir']}/{run_id}/{source.source_id}"
    figures = render_profile_figures(ds, profile_dir)
    html = render_profile_report(ds, figures)
    LocalStorage().write_text(f"{profile_dir}/profile.html", html)
    outcome.profile_path = f"{profile_dir}/profile.html"
    timings["profile"] = time.perf_counter() - t0

    # impute before any QC runs
    t0 = time.perf_counter()
    imputation = spec.imputation
    if imputation.get("enabled"):
        miss_profile = profile_missingness(
            ds, alpha=imputation.get("alpha", 0.05),
            mnar_hints=tuple(imputation.get("mnar_hints", ())))
        ds, imp_report = impute_dataset(
            ds, profile=miss_profile, method=imputation.get("method"),
            overrides=imputation.get("overrides"), seed=config.seed,
            lam=imputation.get("lam", 0.1),
            max_rank=imputation.get("max_rank"))
        flags = ()
        if ds.row_count >= 30 and len(ds.numeric_columns()) >= 2:
            targets = [c for c in imp_report.method_used
                       if c in ds.numeric_columns()]
            if targets:
                flags = tuple(residual_uncertainty_check(
                    ds, targets, thresholds=config.thresholds, seed=config.seed))
        outcome.imputation_json = replace(imp_report,
                                          residual_flags=flags).to_json()
    timings["impute"] = time.perf_counter() - t0

    results = []
    t0 = time.perf_counter()
    if rules:
        results.extend(evaluate_suite(ds, previous, rules, now=now))
    timings["rules"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for cfg in spec.statistical:
        results.append(_eval_stat_check(cfg, ds, previous, spec.mode, now_iso))
    timings["statistical"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for cfg in spec.ml:
        results.append(_eval_ml_check(cfg, ds, previous, spec.mode,
                                      config.seed, now_iso))
    timings["ml"] = time.perf_counter() - t0

    outcome.results = results
    outcome.timings = timings
    return outcome


def _execute_with_retries(args) -> SourceOutcome:
    config, spec, source, date, run_id, series, now, should_fail = args
    attempts = 0
    last_error = None
    while attempts <= config.retries:
        attempts += 1
        try:
            if should_fail:
                raise RuntimeError(f"fault injection: {source.source_id}")
            outcome = _execute_source(config, spec, source, date, run_id,
                                      series, now)
            outcome.attempts = attempts
            return outcome
        except Exception as exc:
            last_error = f"{type(exc).__name__}: {exc}"
    return SourceOutcome(source_id=source.source_id, series=series,
                         error=last_error, attempts=attempts)


def _series_for(source_id: str, date_key: str, multi: bool) -> str:
    return f"{date_key}-{source_id}" if multi else date_key


def run_pipeline(config: ResourceConfig, date, workers: int | None = None,
                 now: datetime | None = None,
                 fail_after_source: int | None = None,
                 fail_sources: frozenset | None = None) -> dict:
    """Execute one dated run end to end and return the run record.

    ``now`` freezes every artifact timestamp (tests). ``fail_after_source``
    raises after N sources complete; ``fail_sources`` makes the named
    sources fail every attempt. Both exist for the crash/retry harnesses
    and default off.
    """
    date = _parse_date(date)
    now = now or datetime.now(timezone.utc)
    workers = workers or config.workers
    spec = effective_spec(config)
    date_key = date.strftime("%Y%m%d")
    run_id = f"{spec.name}_{date_key}"
    ledger = Ledger(root=config.output["breach_dir"])
    ledger.ensure_run(run_id, date_key)

    sources = sorted(config.sources, key=lambda s: s.source_id)
    multi = len(sources) > 1
    total_start = time.perf_counter()
    fail_sources = fail_sources or frozenset()

    tasks = [(config, spec, s, date, run_id,
              _series_for(s.source_id, date_key, multi), now,
              s.source_id in fail_sources)
             for s in sources]

    outcomes: dict = {}
    if workers <= 1 or len(sources) <= 1:
        completed = 0
        for task in tasks:
            outcome = _execute_with_retries(task)
            outcomes[outcome.source_id] = outcome
            _record_outcome(ledger, run_id, outcome, now, config)
            completed += 1
            if fail_after_source is not None and completed >= fail_after_source:
                raise RuntimeError(
                    f"fault injection: crash after {completed} sources")
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for outcome in pool.map(_execute_with_retries, tasks):
                outcomes[outcome.source_id] = outcome
        for sid in sorted(outcomes):  # merge in source_id order
            _record_outcome(ledger, run_id, outcomes[sid], now, config)

    return _finalize(ledger, run_id, config, now,
                     wall_clock=time.perf_counter() - total_start)


def _record_outcome(ledger: Ledger, run_id: str, outcome: SourceOutcome,
                    now: datetime, config: ResourceConfig) -> None:
    """Persist one source's results and advance the checkpoint cursor."""
    run_date = now.strftime(RUN_DATE_FORMAT)
    if outcome.error is None:
        paths = {"breach_path": config.output["breach_dir"],
                 "current_path": outcome.current_path,
                 "previous_path": outcome.previous_path}
        ledger.record_results(run_id, outcome.series, outcome.results,
                              outcome.check_defs, run_date=run_date,
                              paths=paths, now=now)
    else:
        failed = CheckResult(rule_name=SOURCE_CHECK_NAME, status="error",
                             threshold_echo=SOURCE_CHECK_ASSERTION,
                             evaluated_at=now.isoformat(timespec="seconds"),
                             error=outcome.error)
        ledger.record_results(run_id, outcome.series, [failed],
                              [CheckDef(SOURCE_CHECK_NAME, False,
                                        SOURCE_CHECK_ASSERTION)],
                              run_date=run_date, now=now)

    run = ledger.get_run(run_id)
    sources = run.get("sources", {})
    sources[outcome.source_id] = {
        "series": outcome.series,
        "error": outcome.error,
        "attempts": outcome.attempts,
        "timings": outcome.timings,
        "profile_path": outcome.profile_path,
    }
    checkpoint = run.get("checkpoint", {})
    completed = checkpoint.get("completed", [])
    if outcome.source_id not in completed:
        completed.append(outcome.source_id)
    checkpoint["completed"] = completed
    checkpoint["finalized"] = False
    ledger.update_run(run_id, sources=sources, checkpoint=checkpoint)

    if outcome.imputation_json:
        report_dir = config.output["report_dir"]
        LocalStorage().write_text(
            f"{report_dir}/{run_id}/imputation_{outcome.source_id}.json",
            outcome.imputation_json)

    # execution evidence for the resume harness: content is unique per
    # execution, so a re-executed source is detectable
    marker_dir = f"{config.output['report_dir']}/{run_id}/exec"
    LocalStorage().write_text(f"{marker_dir}/{outcome.source_id}.token",
                              os.urandom(8).hex())


def _finalize(ledger: Ledger, run_id: str, config: ResourceConfig,
              now: datetime, wall_clock: float) -> dict:
    """Emit the run-level artifacts from ledger state; idempotent."""
    entries = ledger.entries_for_run(run_id)
    storage = LocalStorage()
    storage.write_text(config.output["status_file"], render_status_file(entries))

    run = ledger.get_run(run_id)
    breaches = [ledger.get_breach(bid) for bid in run["breach_ids"]]
    report_html = render_breach_report(breaches)
    report_path = f"{config.output['report_dir']}/{run_id}_breach_report.html"
    storage.write_text(report_path, report_html)

    severity_counts = {"red": sum(1 for b in breaches if b.severity == SEVERITY_RED),
                       "yellow": sum(1 for b in breaches
                                     if b.severity != SEVERITY_RED)}
    delivery_log = dispatch_notifications(
        report_html, config.notifications.get("sinks", []), run_id,
        severity_counts, report_path=report_path,
        notify_on_success=config.notifications.get("notify_on_success", False))

    gate = ledger.gate_decision(run_id)
    released_path = f"{config.output['report_dir']}/{run_id}.released"
    if gate.verdict == "proceed":
        storage.write_text(released_path,
                           f"released {run_id} at {now.isoformat(timespec='seconds')}\n")

    timings = dict(run.get("timings", {}))
    timings["total_wall_clock"] = wall_clock
    source_errors = sum(1 for s in run.get("sources", {}).values()
                        if s.get("error"))
    checkpoint = run.get("checkpoint", {})
    checkpoint["finalized"] = True
    record = ledger.update_run(
        run_id,
        timings=timings,
        gate=gate.verdict,
        blocking_breach_ids=list(gate.blocking_breach_ids),
        source_errors=source_errors,
        status_file=config.output["status_file"],
        report_path=report_path,
        released_path=released_path if gate.verdict == "proceed" else None,
        delivery_log=delivery_log,
        checkpoint=checkpoint,
    )
    return record


def run_parallel(config: ResourceConfig, date, workers: int) -> dict:
    """run_pipeline on a pool of the given size, with the timing table in
    the run record; artifacts are byte-identical to a sequential run."""
    return run_pipeline(config, date, workers=workers)


def checkpoint_resume(run_id: str, config: ResourceConfig,
                      now: datetime | None = None) -> dict:
    """Re-enter an interrupted run: completed sources are skipped, the rest
    execute, and final artifacts match an uninterrupted run's."""
    now = now or datetime.now(timezone.utc)
    ledger = Ledger(root=config.output["breach_dir"])
    try:
        run = ledger.get_run(run_id)
    except UnknownRun:
        raise
    checkpoint = run.get("checkpoint")
    if not isinstance(checkpoint, dict) or "completed" not in checkpoint:
        raise CorruptCheckpoint(f"run {run_id!r} has no usable checkpoint cursor")
    if checkpoint.get("finalized"):
        return run  # completed run: resume is a no-op

    spec = effective_spec(config)
    date = _parse_date(run["date"])
    date_key = run["date"]
    completed = set(checkpoint["completed"])
    sources = sorted(config.sources, key=lambda s: s.source_id)
    multi = len(sources) > 1

    total_start = time.perf_counter()
    for source in sources:
        if source.source_id in completed:
            continue
        task = (config, spec, source, date, run_id,
                _series_for(source.source_id, date_key, multi), now, False)
        outcome = _execute_with_retries(task)
        _record_outcome(ledger, run_id, outcome, now, config)

    return _finalize(ledger, run_id, config, now,
                     wall_clock=time.perf_counter() - total_start)


def profile_report(ds: Dataset, out_path: str, with_figures: bool = True) -> str:
    """Render the per-column profile HTML (and figures beside it) to
    out_path; returns the HTML."""
    out_dir = os.path.dirname(out_path) or "."
    figures = render_profile_figures(ds, out_dir) if with_figures else {}
    html = render_profile_report(ds, figures)
    LocalStorage().write_text(out_path, html)
    return html


def profile_sources(config: ResourceConfig, date) -> list:
    """Profile every configured source's current table, no QC; returns the
    written HTML paths."""
    date = _parse_date(date)
    date_key = date.strftime("%Y%m%d")
    out = []
    for source in sorted(config.sources, key=lambda s: s.source_id):
        bindings = dict(config.bindings)
        bindings.setdefault("source", source.source_id)
        current = resolve_path(source.current_path, date, bindings).resolved
        ds = read_table(current, format=source.format,
                        schema=config.schema_overrides, name=source.source_id)
        path = (f"{config.output['profile_dir']}/{date_key}/"
                f"{source.source_id}/profile.html")
        profile_report(ds, path)
        out.append(path)
    return out
