"""Resource-file loading and validation.

YAML or JSON, auto-detected by extension. Validation is structural and
total: every violation in the file is collected and reported in a single
SchemaError rather than failing one key at a time, and unknown keys are
rejected so typos cannot silently disable a check. Thresholds, paths, and
stage definitions are all data, so behavior is retunable between runs with
no code change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import yaml

from .errors import ParseError, SchemaError
from .impute.profile import QcThresholds
from .outliers import METHODS as STAT_METHODS
from .rules import TIERS, validate_params
from .storage import LocalStorage, Storage

TOP_LEVEL_KEYS = {
    "spec", "sources", "bindings", "schema_overrides", "checks", "statistical",
    "ml", "imputation", "thresholds", "notifications", "output", "workers",
    "retries", "seed", "specs",
}
SOURCE_KEYS = {"source_id", "current_path", "previous_path", "format"}
OUTPUT_KEYS = {"status_file", "breach_dir", "report_dir", "profile_dir"}
CHECK_KEYS = {"name", "kind", "params", "break_the_process", "tier", "assertion"}
STAT_KEYS = {"name", "method", "column", "columns", "params", "break_the_process"}
ML_KEYS = {"name", "method", "column", "columns", "params", "break_the_process"}
IMPUTATION_KEYS = {"enabled", "method", "overrides", "mnar_hints", "alpha",
                   "lam", "max_rank"}
NOTIFICATION_KEYS = {"notify_on_success", "sinks"}
SPEC_KEYS = {"mode", "checks", "statistical", "ml", "imputation"}

# extra statistical method handled by the runner on longitudinal data
RUNNER_STAT_METHODS = set(STAT_METHODS) | {"last_value_delta"}
STAT_PARAM_KEYS = {
    "minmax_history": {"window"},
    "percentile": {"p_low", "p_high"},
    "modified_z": {"threshold"},
    "tukey": {"k"},
    "stddev_band": {"n_sigma"},
    "last_value_delta": set(),
}
ML_METHODS = {"kl_drift", "iforest"}
ML_PARAM_KEYS = {
    "kl_drift": {"bins", "epsilon", "drift_threshold"},
    "iforest": {"trees", "subsample", "contamination", "seed"},
}
SINK_KINDS = {"file_sink", "webhook"}


@dataclass(frozen=True)
class SourceConfig:
    source_id: str
    current_path: str
    previous_path: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class ResourceConfig:
    spec_name: str
    sources: tuple
    output: dict
    bindings: dict = field(default_factory=dict)
    schema_overrides: dict = field(default_factory=dict)
    checks: tuple = ()
    statistical: tuple = ()
    ml: tuple = ()
    imputation: dict = field(default_factory=dict)
    thresholds: QcThresholds = QcThresholds()
    notifications: dict = field(default_factory=lambda: {"notify_on_success": False,
                                                         "sinks": []})
    workers: int = 1
    retries: int = 1
    seed: int = 0
    specs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "spec": self.spec_name,
            "sources": [{k: v for k, v in [("source_id", s.source_id),
                                           ("current_path", s.current_path),
                                           ("previous_path", s.previous_path),
                                           ("format", s.format)] if v is not None}
                        for s in self.sources],
            "output": dict(self.output),
            "workers": self.workers,
            "retries": self.retries,
            "seed": self.seed,
        }
        if self.bindings:
            doc["bindings"] = dict(self.bindings)
        if self.schema_overrides:
            doc["schema_overrides"] = dict(self.schema_overrides)
        if self.checks:
            doc["checks"] = [dict(c) for c in self.checks]
        if self.statistical:
            doc["statistical"] = [dict(c) for c in self.statistical]
        if self.ml:
            doc["ml"] = [dict(c) for c in self.ml]
        if self.imputation:
            doc["imputation"] = dict(self.imputation)
        doc["thresholds"] = {"residual_limit": self.thresholds.residual_limit,
                             "uncertainty_ceiling": self.thresholds.uncertainty_ceiling,
                             "alpha": self.thresholds.alpha}
        doc["notifications"] = dict(self.notifications)
        if self.specs:
            doc["specs"] = dict(self.specs)
        return doc


def _check_unknown(container: dict, allowed: set, where: str, problems: list) -> None:
    for key in sorted(set(container) - allowed):
        problems.append(f"{where}: unknown key {key!r}")


def _validate_check(c: dict, where: str, problems: list) -> None:
    if not isinstance(c, dict):
        problems.append(f"{where}: each check must be a mapping")
        return
    _check_unknown(c, CHECK_KEYS, where, problems)
    if "name" not in c:
        problems.append(f"{where}: check needs a name")
    if "kind" not in c:
        problems.append(f"{where}: check needs a kind")
        return
    for msg in validate_params(c["kind"], c.get("params", {})):
        problems.append(f"{where} ({c.get('name', '?')}): {msg}")
    if "tier" in c and c["tier"] not in TIERS:
        problems.append(f"{where}: tier must be one of {sorted(TIERS)}")


def _validate_stat(c: dict, where: str, problems: list) -> None:
    if not isinstance(c, dict):
        problems.append(f"{where}: each statistical check must be a mapping")
        return
    _check_unknown(c, STAT_KEYS, where, problems)
    if "name" not in c:
        problems.append(f"{where}: statistical check needs a name")
    method = c.get("method")
    if method not in RUNNER_STAT_METHODS:
        problems.append(f"{where}: unknown statistical method {method!r}")
        return
    if not ({"column", "columns"} & set(c)):
        problems.append(f"{where}: statistical check needs 'column' or 'columns'")
    _check_unknown(c.get("params", {}), STAT_PARAM_KEYS[method],
                   f"{where} params", problems)


def _validate_ml(c: dict, where: str, problems: list) -> None:
    if not isinstance(c, dict):
        problems.append(f"{where}: each ml check must be a mapping")
        return
    _check_unknown(c, ML_KEYS, where, problems)
    if "name" not in c:
        problems.append(f"{where}: ml check needs a name")
    method = c.get("method")
    if method not in ML_METHODS:
        problems.append(f"{where}: unknown ml method {method!r}")
        return
    if method == "kl_drift" and "column" not in c:
        problems.append(f"{where}: kl_drift needs 'column'")
    _check_unknown(c.get("params", {}), ML_PARAM_KEYS[method],
                   f"{where} params", problems)


def _validate_stage_block(doc: dict, where: str, problems: list) -> None:
    for i, c in enumerate(doc.get("checks", []) or []):
        _validate_check(c, f"{where}checks[{i}]", problems)
    for i, c in enumerate(doc.get("statistical", []) or []):
        _validate_stat(c, f"{where}statistical[{i}]", problems)
    for i, c in enumerate(doc.get("ml", []) or []):
        _validate_ml(c, f"{where}ml[{i}]", problems)
    imp = doc.get("imputation", {}) or {}
    _check_unknown(imp, IMPUTATION_KEYS, f"{where}imputation", problems)


def parse_config(doc: dict) -> ResourceConfig:
    """Validate a parsed mapping; raises SchemaError listing every violation."""
    problems: list = []
    if not isinstance(doc, dict):
        raise SchemaError(["config root must be a mapping"])
    _check_unknown(doc, TOP_LEVEL_KEYS, "config", problems)

    if not doc.get("spec"):
        problems.append("config: 'spec' is required")

    sources = []
    raw_sources = doc.get("sources")
    if not raw_sources:
        problems.append("config: at least one source is required")
    else:
        seen = set()
        for i, s in enumerate(raw_sources):
            where = f"sources[{i}]"
            if not isinstance(s, dict):
                problems.append(f"{where}: must be a mapping")
                continue
            _check_unknown(s, SOURCE_KEYS, where, problems)
            sid = s.get("source_id")
            if not sid:
                problems.append(f"{where}: source_id is required")
            elif sid in seen:
                problems.append(f"{where}: duplicate source_id {sid!r}")
            else:
                seen.add(sid)
            if not s.get("current_path"):
                problems.append(f"{where}: current_path is required")
            fmt = s.get("format", "csv")
            if fmt not in ("csv", "jsonl"):
                problems.append(f"{where}: format must be csv or jsonl, got {fmt!r}")
            sources.append(SourceConfig(source_id=sid or f"source_{i}",
                                        current_path=s.get("current_path", ""),
                                        previous_path=s.get("previous_path"),
                                        format=fmt))

    output = doc.get("output")
    if not isinstance(output, dict):
        problems.append("config: 'output' mapping with "
                        f"{sorted(OUTPUT_KEYS)} is required")
        output = {}
    else:
        _check_unknown(output, OUTPUT_KEYS, "output", problems)
        for key in sorted(OUTPUT_KEYS - set(output)):
            problems.append(f"output: {key!r} is required")

    workers = doc.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        problems.append(f"config: workers must be an integer >= 1, got {workers!r}")
    retries = doc.get("retries", 1)
    if not isinstance(retries, int) or retries < 0:
        problems.append(f"config: retries must be an integer >= 0, got {retries!r}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        problems.append(f"config: seed must be an integer, got {seed!r}")

    _validate_stage_block(doc, "", problems)

    thresholds = QcThresholds()
    raw_thresholds = doc.get("thresholds", {}) or {}
    _check_unknown(raw_thresholds, {"residual_limit", "uncertainty_ceiling", "alpha"},
                   "thresholds", problems)
    try:
        thresholds = QcThresholds(
            residual_limit=raw_thresholds.get("residual_limit", 4.0),
            uncertainty_ceiling=raw_thresholds.get("uncertainty_ceiling", 1.0),
            alpha=raw_thresholds.get("alpha", 0.05))
    except ValueError as exc:
        problems.append(f"thresholds: {exc}")

    notifications = doc.get("notifications", {}) or {}
    _check_unknown(notifications, NOTIFICATION_KEYS, "notifications", problems)
    for i, sink in enumerate(notifications.get("sinks", []) or []):
        if sink.get("kind") not in SINK_KINDS:
            problems.append(f"notifications.sinks[{i}]: kind must be one of "
                            f"{sorted(SINK_KINDS)}")
        elif sink["kind"] == "file_sink" and not sink.get("dir"):
            problems.append(f"notifications.sinks[{i}]: file_sink needs 'dir'")
        elif sink["kind"] == "webhook" and not sink.get("url"):
            problems.append(f"notifications.sinks[{i}]: webhook needs 'url'")
    notifications.setdefault("notify_on_success", False)
    notifications.setdefault("sinks", [])

    for name, spec_doc in (doc.get("specs", {}) or {}).items():
        if not isinstance(spec_doc, dict):
            problems.append(f"specs.{name}: must be a mapping")
            continue
        _check_unknown(spec_doc, SPEC_KEYS, f"specs.{name}", problems)
        if spec_doc.get("mode", "cross_sectional") not in ("cross_sectional",
                                                           "longitudinal"):
            problems.append(f"specs.{name}: mode must be cross_sectional "
                            f"or longitudinal")
        _validate_stage_block(spec_doc, f"specs.{name}.", problems)

    dtypes = {"numeric", "categorical", "date"}
    for col, dtype in (doc.get("schema_overrides", {}) or {}).items():
        if dtype not in dtypes:
            problems.append(f"schema_overrides.{col}: dtype must be one of "
                            f"{sorted(dtypes)}, got {dtype!r}")

    if problems:
        raise SchemaError(problems)

    return ResourceConfig(
        spec_name=doc["spec"],
        sources=tuple(sources),
        output=dict(output),
        bindings=dict(doc.get("bindings", {}) or {}),
        schema_overrides=dict(doc.get("schema_overrides", {}) or {}),
        checks=tuple(doc.get("checks", []) or []),
        statistical=tuple(doc.get("statistical", []) or []),
        ml=tuple(doc.get("ml", []) or []),
        imputation=dict(doc.get("imputation", {}) or {}),
        thresholds=thresholds,
        notifications=notifications,
        workers=workers if isinstance(workers, int) else 1,
        retries=retries if isinstance(retries, int) else 1,
        seed=seed if isinstance(seed, int) else 0,
        specs=dict(doc.get("specs", {}) or {}),
    )


def load_config(path: str, storage: Storage | None = None) -> ResourceConfig:
    storage = storage or LocalStorage()
    text = storage.read_text(path)
    lower = path.lower()
    try:
        if lower.endswith(".json"):
            doc = json.loads(text)
        elif lower.endswith((".yaml", ".yml")):
            doc = yaml.safe_load(text)
        else:
            doc = yaml.safe_load(text)  # YAML is a JSON superset
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ParseError(f"config {path}: {exc}") from exc
    return parse_config(doc)
