"""Breach records, status entries, sign-off, and the gate state machine.

The ledger is append-only: status entries and breaches are written once,
keyed on (run_id, series, check), so re-recording the same results is a
no-op; the only permitted mutation is a breach's single terminal state
transition via acknowledgment. The gate is a pure function of ledger state:
halt exactly when the run has at least one open red breach. All mutations
serialize through one writer lock.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import asdict, dataclass, replace
from datetime import datetime, timezone

from .errors import AlreadyResolvedConflict, UnknownBreach, UnknownRule, UnknownRun
from .storage import LocalStorage, Storage

SEVERITY_RED = "red"
SEVERITY_YELLOW = "yellow"

STATE_OPEN = "open"
STATE_FALSE_ALARM = "acknowledged_false_alarm"
STATE_DATA_FIX = "resolved_data_fix"
RESOLUTION_TO_STATE = {"false_alarm": STATE_FALSE_ALARM, "data_fix": STATE_DATA_FIX}

STATUS_PASS = "Success - No Breach Detected"
STATUS_BREACH = "Success - Breach Detected"
STATUS_ERROR = "Error"

STATUS_TIMESTAMP_FORMAT = "%d/%m/%Y %H:%M"
RUN_DATE_FORMAT = "%d/%m/%Y"


@dataclass(frozen=True)
class StatusEntry:
    series: str
    run_date: str
    check: str
    status_update_timestamp: str
    status: str


@dataclass(frozen=True)
class Breach:
    id: str
    run_id: str
    series: str
    check: str
    severity: str
    assertion_query: str
    assertion_description: str
    sample_invalid: tuple
    paths: dict
    state: str
    created_at: str
    actor: str | None = None
    note: str | None = None
    resolved_at: str | None = None

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["sample_invalid"] = [list(s) for s in self.sample_invalid]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "Breach":
        doc = dict(doc)
        doc["sample_invalid"] = tuple(tuple(s) for s in doc["sample_invalid"])
        return cls(**doc)


@dataclass(frozen=True)
class GateDecision:
    verdict: str  # proceed | halt
    blocking_breach_ids: tuple


def breach_id(run_id: str, check: str, series: str) -> str:
    """Deterministic so re-runs re-derive the same identity."""
    digest = hashlib.sha256(f"{run_id}|{check}|{series}".encode()).hexdigest()
    return f"br-{digest[:16]}"


class Ledger:
    """Single-writer store over runs and breaches.

    With a root directory every mutation persists runs/<run_id>.json,
    breaches/<id>.json, and an index.json snapshot atomically; with
    root=None the ledger lives purely in memory (property tests).
    """

    def __init__(self, root: str | None = None, storage: Storage | None = None):
        self.root = root.rstrip("/") if root else None
        self.storage = storage or (LocalStorage() if root else None)
        self._lock = threading.Lock()
        self._runs: dict = {}
        self._run_order: list = []
        self._breaches: dict = {}
        self._breach_order: list = []
        self._entry_keys: set = set()
        if self.root and self.storage.exists(f"{self.root}/index.json"):
            self._load()

    # --- persistence ---------------------------------------------------------

    def _load(self) -> None:
        index = json.loads(self.storage.read_text(f"{self.root}/index.json"))
        for run_id in index["runs"]:
            doc = json.loads(self.storage.read_text(f"{self.root}/runs/{run_id}.json"))
            self._runs[run_id] = doc
            self._run_order.append(run_id)
            for e in doc.get("entries", []):
                self._entry_keys.add((run_id, e["series"], e["check"]))
        for bid in index["breaches"]:
            doc = json.loads(self.storage.read_text(f"{self.root}/breaches/{bid}.json"))
            self._breaches[bid] = Breach.from_dict(doc)
            self._breach_order.append(bid)

    def _persist_run(self, run_id: str) -> None:
        if not self.root:
            return
        self.storage.write_text(f"{self.root}/runs/{run_id}.json",
                                json.dumps(self._runs[run_id], sort_keys=True, indent=1))
        self._persist_index()

    def _persist_breach(self, breach: Breach) -> None:
        if not self.root:
            return
        self.storage.write_text(f"{self.root}/breaches/{breach.id}.json",
                                json.dumps(breach.to_dict(), sort_keys=True, indent=1))
        self._persist_index()

    def _persist_index(self) -> None:
        doc = {"runs": self._run_order, "breaches": self._breach_order}
        self.storage.write_text(f"{self.root}/index.json", json.dumps(doc, indent=1))

    # --- recording -----------------------------------------------------------

    def ensure_run(self, run_id: str, date: str) -> dict:
        with self._lock:
            if run_id not in self._runs:
                self._runs[run_id] = {
                    "run_id": run_id, "date": date, "entries": [],
                    "breach_ids": [], "overall_status": "green",
                    "sources": {}, "timings": {}, "checkpoint": {},
                }
                self._run_order.append(run_id)
                self._persist_run(run_id)
            return self._runs[run_id]

    def update_run(self, run_id: str, **fields) -> dict:
        with self._lock:
            run = self._require_run(run_id)
            run.update(fields)
            self._persist_run(run_id)
            return run

    def record_results(self, run_id: str, series: str, results, rules,
                       run_date: str | None = None,
                       paths: dict | None = None,
                       now: datetime | None = None) -> tuple:
        """One StatusEntry per result plus a Breach per breach result.

        Idempotent under re-recording: entries and breaches keyed on
        (run_id, series, check) are written once and never duplicated.
        """
        by_name = {r.name: r for r in rules}
        for result in results:
            if result.rule_name not in by_name:
                raise UnknownRule(f"no rule named {result.rule_name!r} for result")
        stamp = (now or datetime.now(timezone.utc))
        ts = stamp.strftime(STATUS_TIMESTAMP_FORMAT)
        run_date = run_date or stamp.strftime(RUN_DATE_FORMAT)

        entries, breaches = [], []
        with self._lock:
            run = self._runs.get(run_id)
            if run is None:
                raise UnknownRun(f"run {run_id!r} not recorded; call ensure_run first")
            for result in results:
                status = {"pass": STATUS_PASS, "breach": STATUS_BREACH,
                          "error": STATUS_ERROR}[result.status]
                entry = StatusEntry(series=series, run_date=run_date,
                                    check=result.rule_name,
                                    status_update_timestamp=ts, status=status)
                key = (run_id, series, result.rule_name)
                if key not in self._entry_keys:
                    self._entry_keys.add(key)
                    run["entries"].append(asdict(entry))
                entries.append(entry)

                if result.status != "breach":
                    continue
                rule = by_name[result.rule_name]
                bid = breach_id(run_id, result.rule_name, series)
                if bid in self._breaches:
                    breaches.append(self._breaches[bid])
                    continue
                breach = Breach(
                    id=bid, run_id=run_id, series=series, check=result.rule_name,
                    severity=SEVERITY_RED if rule.break_the_process else SEVERITY_YELLOW,
                    assertion_query=result.threshold_echo,
                    assertion_description=rule.assertion,
                    sample_invalid=tuple(result.sample_invalid),
                    paths=dict(paths or {}),
                    state=STATE_OPEN,
                    created_at=stamp.isoformat(timespec="seconds"),
                )
                self._breaches[bid] = breach
                self._breach_order.append(bid)
                run["breach_ids"].append(bid)
                breaches.append(breach)
                self._persist_breach(breach)
            run["overall_status"] = self._roll_up(run_id)
            self._persist_run(run_id)
        return entries, breaches

    # --- sign-off and gating ---------------------------------------------------

    def acknowledge_breach(self, bid: str, resolution: str, actor: str,
                           note: str, now: datetime | None = None) -> Breach:
        if resolution not in RESOLUTION_TO_STATE:
            raise ValueError(f"resolution must be one of "
                             f"{sorted(RESOLUTION_TO_STATE)}, got {resolution!r}")
        target = RESOLUTION_TO_STATE[resolution]
        with self._lock:
            breach = self._breaches.get(bid)
            if breach is None:
                raise UnknownBreach(f"no breach with id {bid!r}")
            if breach.state != STATE_OPEN:
                if breach.state == target:
                    return breach  # idempotent re-acknowledgment
                raise AlreadyResolvedConflict(
                    f"breach {bid} already {breach.state}; cannot set {target}")
            updated = replace(
                breach, state=target, actor=actor, note=note,
                resolved_at=(now or datetime.now(timezone.utc)).isoformat(timespec="seconds"))
            self._breaches[bid] = updated
            self._persist_breach(updated)
            return updated

    def gate_decision(self, run_id: str) -> GateDecision:
        with self._lock:
            self._require_run(run_id)
            blocking = tuple(
                bid for bid in self._runs[run_id]["breach_ids"]
                if self._breaches[bid].severity == SEVERITY_RED
                and self._breaches[bid].state == STATE_OPEN)
        return GateDecision(verdict="halt" if blocking else "proceed",
                            blocking_breach_ids=blocking)

    # --- reads -----------------------------------------------------------------

    def _require_run(self, run_id: str) -> dict:
        run = self._runs.get(run_id)
        if run is None:
            raise UnknownRun(f"no run with id {run_id!r}")
        return run

    def _roll_up(self, run_id: str) -> str:
        """Max severity over the run's breaches; acknowledgment does not
        rewrite history (the gate, not the roll-up, reacts to sign-off)."""
        severities = {self._breaches[bid].severity
                      for bid in self._runs[run_id]["breach_ids"]}
        if SEVERITY_RED in severities:
            return "red"
        if severities:
            return "yellow"
        return "green"

    def get_run(self, run_id: str) -> dict:
        with self._lock:
            return dict(self._require_run(run_id))

    def list_runs(self) -> list:
        with self._lock:
            return [dict(self._runs[r]) for r in self._run_order]

    def get_breach(self, bid: str) -> Breach:
        with self._lock:
            breach = self._breaches.get(bid)
            if breach is None:
                raise UnknownBreach(f"no breach with id {bid!r}")
            return breach

    def list_breaches(self, state: str | None = None) -> list:
        """Newest first; optional state filter."""
        with self._lock:
            out = [self._breaches[bid] for bid in reversed(self._breach_order)]
        if state is not None:
            out = [b for b in out if b.state == state]
        return out

    def entries_for_run(self, run_id: str) -> list:
        with self._lock:
            run = self._require_run(run_id)
            return [StatusEntry(**e) for e in run["entries"]]
