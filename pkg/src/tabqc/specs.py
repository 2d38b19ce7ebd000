"""Named QC specs: a spec bundles the default checks for one data domain.

Two modes. cross_sectional treats each dated file as a snapshot and
compares it against the previous day's file. longitudinal treats the file
as one series ordered oldest to newest: historical checks read the trailing
rows as history and the last row as the current observation.

A spec defined inline in the config under ``specs:`` shadows the built-in
with the same name; config-level check lists override the spec defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownSpec
from .rules import Rule

MODE_CROSS = "cross_sectional"
MODE_LONGITUDINAL = "longitudinal"


@dataclass(frozen=True)
class QcSpec:
    name: str
    mode: str = MODE_CROSS
    checks: tuple = ()
    statistical: tuple = ()
    ml: tuple = ()
    imputation: dict = field(default_factory=dict)


def _corporate_bonds() -> QcSpec:
    """Longitudinal bond-index monitoring: five checks over every numeric
    column of the series."""
    return QcSpec(
        name="corporate_bonds",
        mode=MODE_LONGITUDINAL,
        checks=(
            Rule.of("Missing Value Check", "null_rate",
                    {"columns": "all", "max_pct": 0.0}),
            Rule.of("Positive Values Only", "positive_only",
                    {"columns": "all_numeric"}),
        ),
        statistical=(
            {"name": "Outlier Check - Std-Dev Range", "method": "stddev_band",
             "columns": "all_numeric", "params": {"n_sigma": 3},
             "break_the_process": False},
            {"name": "Outlier Check - Min-Max Range", "method": "minmax_history",
             "columns": "all_numeric", "params": {"window": 10},
             "break_the_process": False},
            {"name": "Value Delta Change Check", "method": "last_value_delta",
             "columns": "all_numeric", "params": {},
             "break_the_process": False},
        ),
    )


def _equities() -> QcSpec:
    """Cross-sectional day-over-day checks keyed on the cusip identifier."""
    return QcSpec(
        name="equities",
        mode=MODE_CROSS,
        checks=(
            Rule.of("File Present Check", "file_present", {"path": "{current}"}),
            Rule.of("Schema Match Check", "schema_match", {}),
            Rule.of("Unique Identifier Check", "unique", {"column": "cusip"}),
            Rule.of("Missing Value Check", "null_rate",
                    {"columns": "all", "max_pct": 5.0}),
            Rule.of("Volume Correlation Check", "correlation_min",
                    {"key": "cusip", "column": "volume", "min_corr": 0.8}),
            Rule.of("Volume Ratio Check", "ratio_max",
                    {"num_column": "volume", "den_column": "amount_issued",
                     "max_pct": 10.0}),
        ),
    )


BUILTIN_SPECS = {
    "corporate_bonds": _corporate_bonds,
    "equities": _equities,
}


def _spec_from_doc(name: str, doc: dict) -> QcSpec:
    checks = tuple(
        Rule.of(c["name"], c["kind"], c.get("params", {}),
                break_the_process=c.get("break_the_process", False),
                tier=c.get("tier", "centralized"),
                assertion=c.get("assertion"))
        for c in doc.get("checks", []) or [])
    return QcSpec(
        name=name,
        mode=doc.get("mode", MODE_CROSS),
        checks=checks,
        statistical=tuple(doc.get("statistical", []) or []),
        ml=tuple(doc.get("ml", []) or []),
        imputation=dict(doc.get("imputation", {}) or {}),
    )


def resolve_spec(name: str, config=None) -> QcSpec:
    """Inline config definitions shadow built-ins; lookup is deterministic."""
    inline = getattr(config, "specs", None) or {}
    if name in inline:
        return _spec_from_doc(name, inline[name])
    if name in BUILTIN_SPECS:
        return BUILTIN_SPECS[name]()
    raise UnknownSpec(f"no spec named {name!r}; built-ins: "
                      f"{sorted(BUILTIN_SPECS)}")


def effective_spec(config) -> QcSpec:
    """The spec with config-level stage lists applied over its defaults."""
    spec = resolve_spec(config.spec_name, config)
    checks = spec.checks
    if config.checks:
        checks = tuple(
            Rule.of(c["name"], c["kind"], c.get("params", {}),
                    break_the_process=c.get("break_the_process", False),
                    tier=c.get("tier", "centralized"),
                    assertion=c.get("assertion"))
            for c in config.checks)
    return QcSpec(
        name=spec.name,
        mode=spec.mode,
        checks=checks,
        statistical=tuple(config.statistical) or spec.statistical,
        ml=tuple(config.ml) or spec.ml,
        imputation=dict(config.imputation) or spec.imputation,
    )
