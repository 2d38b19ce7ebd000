#!/usr/bin/env python3
"""Boot a disposable qc service seeded with one bond-index run.

Runs the corporate_bonds pipeline over a synthetic 60-row index whose last
px_000 value lands outside the trailing 10-observation min-max window (a
yellow breach), then appends one red row-count breach so the run's gate
halts. Intended for console development and the console test suite.

Usage: seed_serve.py [PORT] [ROOT]
"""

import sys
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import uvicorn

from tabqc.config import parse_config
from tabqc.dataset import Column, Dataset, write_table
from tabqc.governance import Ledger
from tabqc.rules import CheckResult
from tabqc.runner import run_pipeline
from tabqc.service import create_app

DATE = "20111220"
RUN_ID = f"corporate_bonds_{DATE}"
NOW = datetime(2011, 12, 20, 9, 30, tzinfo=timezone.utc)


def bond_frame(rows=60, numeric_cols=21):
    columns = []
    for c in range(numeric_cols):
        base = 100.0 + 7.0 * c
        amp = 4.0 + 0.25 * c
        pattern = (0.0, amp, -amp, amp / 2)
        values = [base + pattern[i % 4] for i in range(rows)]
        if c == 0:  # outside the min-max window, inside the 3-sigma band
            values[-1] = base + 1.5 * amp
        columns.append(Column.of(f"px_{c:03d}", "numeric", values))
    columns.append(Column.of("index_name", "categorical", ["IG_CORP"] * rows))
    return Dataset.of("bond_index", columns)


@dataclass(frozen=True)
class RedRule:
    name: str = "Row Count Minimum"
    break_the_process: bool = True
    assertion: str = "daily file must carry at least 1000 rows"


def seed(root: Path):
    data_dir = root / "in" / DATE
    data_dir.mkdir(parents=True, exist_ok=True)
    write_table(bond_frame(), str(data_dir / "bond.csv"), format="csv")

    config = parse_config({
        "spec": "corporate_bonds",
        "sources": [{"source_id": "bond",
                     "current_path": str(root / "in" / "{date}" / "bond.csv")}],
        "output": {"status_file": str(root / "out" / "status.csv"),
                   "breach_dir": str(root / "out" / "ledger"),
                   "report_dir": str(root / "out" / "reports"),
                   "profile_dir": str(root / "out" / "profiles")},
    })
    run_pipeline(config, DATE, now=NOW)

    ledger = Ledger(root=config.output["breach_dir"])
    ledger.record_results(
        RUN_ID, DATE,
        [CheckResult(rule_name="Row Count Minimum", status="breach",
                     threshold_echo="row_count >= 1000",
                     evaluated_at=NOW.isoformat(timespec="seconds"),
                     sample_invalid=(("row_count", 60.0),))],
        [RedRule()], run_date="20/12/2011", now=NOW)
    return config


def main():
    port = int(sys.argv[1]) if len(sys.argv) > 1 else 8000
    root = (Path(sys.argv[2]) if len(sys.argv) > 2
            else Path(tempfile.mkdtemp(prefix="qc-console-")))
    config = seed(root)
    print(f"seeded run {RUN_ID} under {root}", flush=True)
    app = create_app(root=config.output["breach_dir"])
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


if __name__ == "__main__":
    main()
