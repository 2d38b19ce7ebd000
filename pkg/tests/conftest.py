import json
from dataclasses import dataclass
from datetime import datetime, timezone

import pytest

from tabqc.dataset import Column, Dataset

FROZEN_NOW = datetime(2011, 12, 20, 9, 30, tzinfo=timezone.utc)


def num_col(name, values):
    return Column.of(name, "numeric", values)


def cat_col(name, values):
    return Column.of(name, "categorical", values)


def make_ds(name="t", **columns):
    """make_ds(a=[1,2], b=["x","y"]) with dtype inferred from first non-null."""
    cols = []
    for cname, values in columns.items():
        first = next((v for v in values if v is not None), None)
        if isinstance(first, str):
            cols.append(cat_col(cname, values))
        else:
            cols.append(num_col(cname, values))
    return Dataset.of(name, cols)


def bond_frame(rows=60, numeric_cols=21, spike_column="px_000",
               spike_scale=1.5):
    """Longitudinal bond-index style frame: the named column's last value
    jumps to spike_scale * its cycle amplitude, landing outside the prior
    10-observation min-max window but well inside the 3-sigma band."""
    columns = []
    for c in range(numeric_cols):
        base = 100.0 + 7.0 * c
        amp = 4.0 + 0.25 * c
        pattern = (0.0, amp, -amp, amp / 2)
        values = [base + pattern[i % 4] for i in range(rows)]
        name = f"px_{c:03d}"
        if name == spike_column:
            values[-1] = base + spike_scale * amp
        columns.append(num_col(name, values))
    columns.append(cat_col("index_name", ["IG_CORP"] * rows))
    return Dataset.of("bond_index", columns)


def write_csv(path, ds):
    from tabqc.dataset import write_table
    write_table(ds, str(path), format="csv")


@pytest.fixture
def frozen_now():
    return FROZEN_NOW


@pytest.fixture
def out_layout(tmp_path):
    """Standard output path block for runner configs."""
    return {
        "status_file": str(tmp_path / "out" / "status.csv"),
        "breach_dir": str(tmp_path / "out" / "ledger"),
        "report_dir": str(tmp_path / "out" / "reports"),
        "profile_dir": str(tmp_path / "out" / "profiles"),
    }


def write_config(path, doc):
    path.write_text(json.dumps(doc, indent=1))
    return str(path)


@dataclass(frozen=True)
class GateRule:
    name: str
    break_the_process: bool = False
    assertion: str = ""


def drive_gate_machine(seed, steps=12):
    """One random event sequence against an in-memory ledger, asserting the
    gate, acknowledgment idempotence, and append-only invariants after every
    event. Raises AssertionError on any violation."""
    import random

    from tabqc.errors import AlreadyResolvedConflict
    from tabqc.governance import (Ledger, RESOLUTION_TO_STATE, STATE_OPEN,
                                  SEVERITY_RED)
    from tabqc.rules import CheckResult

    rng = random.Random(seed)
    ledger = Ledger()
    run_id = f"run-{seed}"
    ledger.ensure_run(run_id, "20240101")
    recorded = {}    # check name -> (rule, status) as first recorded
    states = {}      # breach id -> expected state
    severities = {}  # breach id -> expected severity
    n_checks = 0

    def assert_invariants():
        run = ledger.get_run(run_id)
        open_red = {bid for bid, state in states.items()
                    if severities[bid] == SEVERITY_RED and state == STATE_OPEN}
        decision = ledger.gate_decision(run_id)
        assert (decision.verdict == "halt") == bool(open_red)
        assert set(decision.blocking_breach_ids) == open_red
        assert len(run["entries"]) == len(recorded)  # append-only, no dupes
        assert set(run["breach_ids"]) == set(states)
        for bid, expected in states.items():
            assert ledger.get_breach(bid).state == expected

    def record(name, rule, status):
        results = [CheckResult(rule_name=name, status=status,
                               threshold_echo="echo",
                               evaluated_at=FROZEN_NOW.isoformat(
                                   timespec="seconds"))]
        _, breaches = ledger.record_results(run_id, "series", results, [rule],
                                            now=FROZEN_NOW)
        for b in breaches:
            states.setdefault(b.id, STATE_OPEN)
            severities[b.id] = b.severity

    for _ in range(steps):
        roll = rng.random()
        if roll < 0.45 or not recorded:
            name = f"check-{n_checks}"
            n_checks += 1
            rule = GateRule(name, break_the_process=rng.random() < 0.5)
            status = rng.choice(["pass", "breach", "breach", "error"])
            record(name, rule, status)
            recorded[name] = (rule, status)
        elif roll < 0.6:
            name = rng.choice(sorted(recorded))
            record(name, *recorded[name])  # identical re-record: no-op
        elif states:
            bid = rng.choice(sorted(states))
            resolution = rng.choice(["false_alarm", "data_fix"])
            target = RESOLUTION_TO_STATE[resolution]
            if states[bid] == STATE_OPEN:
                ledger.acknowledge_breach(bid, resolution, "prop", "note",
                                          now=FROZEN_NOW)
                states[bid] = target
            elif states[bid] == target:
                before = ledger.get_breach(bid)
                after = ledger.acknowledge_breach(bid, resolution, "other",
                                                  "late", now=FROZEN_NOW)
                assert after == before
            else:
                raised = False
                try:
                    ledger.acknowledge_breach(bid, resolution, "other", "late",
                                              now=FROZEN_NOW)
                except AlreadyResolvedConflict:
                    raised = True
                assert raised
        assert_invariants()
