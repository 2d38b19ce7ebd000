"""HTTP facade over the breach ledger and runner.

The app is a factory so tests and the CLI can bind it to any ledger root.
When constructed with a root path a fresh Ledger view is opened per
request, so results written by a concurrently running pipeline process are
visible without restarting the service. Breach and run timestamps in JSON
payloads are ISO-8601; status entries keep their exact file formats.
"""

from __future__ import annotations

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import ResourceConfig
from .errors import (AlreadyResolvedConflict, CorruptCheckpoint, UnknownBreach,
                     UnknownRun)
from .governance import Ledger, RESOLUTION_TO_STATE


class AckBody(BaseModel):
    resolution: str
    actor: str
    note: str = ""


def _breach_payload(breach) -> dict:
    doc = breach.to_dict()
    doc["sample_invalid"] = [list(pair) for pair in breach.sample_invalid]
    return doc


def _run_summary(run: dict) -> dict:
    return {
        "run_id": run["run_id"],
        "date": run["date"],
        "overall_status": run["overall_status"],
        "breach_count": len(run.get("breach_ids", [])),
        "entry_count": len(run.get("entries", [])),
        "gate": run.get("gate"),
        "source_errors": run.get("source_errors", 0),
    }


def create_app(root: str | None = None, ledger: Ledger | None = None,
               config: ResourceConfig | None = None) -> FastAPI:
    """Serve one ledger: a live instance, or a root directory re-read per
    request. ``config`` enables the resume endpoint."""
    if ledger is None and root is None:
        raise ValueError("create_app needs a ledger instance or a root path")

    app = FastAPI(title="qc-service")

    _ERROR_NAMES = {400: "bad_request", 404: "not_found", 409: "conflict",
                    422: "invalid_body"}

    @app.exception_handler(HTTPException)
    async def http_error(request: Request, exc: HTTPException):
        name = _ERROR_NAMES.get(exc.status_code, "error")
        return JSONResponse(status_code=exc.status_code,
                            content={"error": name, "detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def body_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"error": "invalid_body",
                                     "detail": str(exc.errors())})

    def get_ledger() -> Ledger:
        return ledger if ledger is not None else Ledger(root=root)

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/runs")
    def runs(led: Ledger = Depends(get_ledger)):
        return [_run_summary(r) for r in led.list_runs()]

    @app.get("/api/runs/{run_id}")
    def run_detail(run_id: str, led: Ledger = Depends(get_ledger)):
        try:
            run = led.get_run(run_id)
            gate = led.gate_decision(run_id)
        except UnknownRun:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        doc = dict(run)
        doc["gate"] = gate.verdict
        doc["blocking_breach_ids"] = list(gate.blocking_breach_ids)
        doc["breaches"] = [_breach_payload(led.get_breach(b))
                           for b in run.get("breach_ids", [])]
        return doc

    @app.get("/api/breaches")
    def breaches(state: str | None = None, led: Ledger = Depends(get_ledger)):
        return [_breach_payload(b) for b in led.list_breaches(state=state)]

    @app.get("/api/breaches/{bid}")
    def breach_detail(bid: str, led: Ledger = Depends(get_ledger)):
        try:
            return _breach_payload(led.get_breach(bid))
        except UnknownBreach:
            raise HTTPException(status_code=404, detail=f"unknown breach {bid!r}")

    @app.post("/api/breaches/{bid}/ack")
    def ack(bid: str, body: AckBody, led: Ledger = Depends(get_ledger)):
        if body.resolution not in RESOLUTION_TO_STATE:
            raise HTTPException(
                status_code=422,
                detail=f"resolution must be one of {sorted(RESOLUTION_TO_STATE)}")
        if not body.note.strip():
            raise HTTPException(status_code=422,
                                detail="note must not be empty")
        try:
            breach = led.acknowledge_breach(bid, body.resolution, body.actor,
                                            body.note)
        except UnknownBreach:
            raise HTTPException(status_code=404, detail=f"unknown breach {bid!r}")
        except AlreadyResolvedConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        gate = led.gate_decision(breach.run_id)
        return {"breach": _breach_payload(breach), "gate": gate.verdict,
                "blocking_breach_ids": list(gate.blocking_breach_ids)}

    @app.post("/api/runs/{run_id}/resume")
    def resume(run_id: str):
        if config is None:
            raise HTTPException(status_code=400,
                                detail="service started without a runner config")
        from .runner import checkpoint_resume
        try:
            record = checkpoint_resume(run_id, config)
        except UnknownRun:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        except CorruptCheckpoint as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return _run_summary(record)

    return app
