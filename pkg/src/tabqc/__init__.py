"""tabqc: data quality control for day-over-day tabular batches.

Rule checks, statistical outlier detection, model-based anomaly and drift
detection, missing-data handling, and a breach ledger with sign-off gating,
behind one pipeline runner, CLI, and HTTP service.
"""

from .config import ResourceConfig, SourceConfig, load_config, parse_config
from .dataset import Column, Dataset, profile_dataset, read_table, write_table
from .governance import Breach, GateDecision, Ledger, StatusEntry
from .rules import CheckResult, Rule, evaluate_rule, evaluate_suite
from .specs import QcSpec, resolve_spec

__version__ = "0.1.0"

__all__ = [
    "Breach", "CheckResult", "Column", "Dataset", "GateDecision", "Ledger",
    "QcSpec", "ResourceConfig", "Rule", "SourceConfig", "StatusEntry",
    "__version__", "evaluate_rule", "evaluate_suite", "load_config",
    "parse_config", "profile_dataset", "read_table", "resolve_spec",
    "write_table",
]
