"""Notification dispatch to file and webhook sinks.

Each sink succeeds or fails on its own; a delivery failure is captured in
the returned log and never aborts the run. File sinks write atomically,
webhooks post a small JSON summary (the HTML document itself stays on
disk at report_path).
"""

from __future__ import annotations

import requests

from .storage import LocalStorage, Storage

WEBHOOK_TIMEOUT_SECONDS = 5.0


def dispatch_notifications(report_html: str, sinks, run_id: str,
                           severity_counts: dict, report_path: str | None = None,
                           notify_on_success: bool = False,
                           storage: Storage | None = None) -> list:
    """Returns one log entry per sink: {sink, target, ok, detail}."""
    total = sum(severity_counts.values())
    if total == 0 and not notify_on_success:
        return []
    storage = storage or LocalStorage()
    log = []
    for sink in sinks:
        kind = sink.get("kind")
        if kind == "file_sink":
            target = f"{sink['dir'].rstrip('/')}/qc_failure_report_{run_id}.html"
            try:
                storage.write_text(target, report_html)
                log.append({"sink": "file_sink", "target": target,
                            "ok": True, "detail": "written"})
            except Exception as exc:
                log.append({"sink": "file_sink", "target": target,
                            "ok": False, "detail": str(exc)})
        elif kind == "webhook":
            url = sink["url"]
            payload = {"run_id": run_id, "severity_counts": severity_counts,
                       "report_path": report_path}
            try:
                resp = requests.post(url, json=payload,
                                     timeout=sink.get("timeout", WEBHOOK_TIMEOUT_SECONDS))
                ok = 200 <= resp.status_code < 300
                log.append({"sink": "webhook", "target": url, "ok": ok,
                            "detail": f"HTTP {resp.status_code}"})
            except Exception as exc:
                log.append({"sink": "webhook", "target": url,
                            "ok": False, "detail": str(exc)})
        else:
            log.append({"sink": str(kind), "target": "", "ok": False,
                        "detail": f"unknown sink kind {kind!r}"})
    return log
