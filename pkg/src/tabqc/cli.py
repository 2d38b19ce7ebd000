"""Command line entry points.

Exit codes for run/resume:
  0  clean run, nothing breached
  1  breaches recorded but the gate proceeds (yellow, or red signed off)
  2  gate halt: an open break-the-process breach blocks the hand-off
  3  execution errors (a source failed after retries) without a halt
"""

from __future__ import annotations

import sys
from dataclasses import replace as dc_replace
from datetime import datetime, timezone

import click

from .config import load_config
from .errors import QcError
from .governance import Ledger

EXIT_GREEN, EXIT_YELLOW, EXIT_HALT, EXIT_ERROR = 0, 1, 2, 3


def _exit_code(record: dict) -> int:
    if record.get("gate") == "halt":
        return EXIT_HALT
    if record.get("source_errors"):
        return EXIT_ERROR
    if record.get("breach_ids"):
        return EXIT_YELLOW
    return EXIT_GREEN


def _echo_outcome(record: dict) -> None:
    click.echo(f"run {record['run_id']}: status={record['overall_status']} "
               f"gate={record.get('gate')} breaches={len(record.get('breach_ids', []))} "
               f"errors={record.get('source_errors', 0)}")
    click.echo(f"status file: {record.get('status_file')}")
    click.echo(f"breach report: {record.get('report_path')}")
    if record.get("released_path"):
        click.echo(f"released marker: {record['released_path']}")


@click.group()
def main():
    """Day-over-day batch QC: rules, outliers, model checks, imputation,
    and breach governance."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True), help="JSON or YAML run config.")
@click.option("--date", "run_date", required=True,
              help="Business date of the current batch, YYYYMMDD.")
@click.option("--spec", "spec_name", default=None,
              help="Override the config's spec for this run.")
@click.option("--workers", type=int, default=None,
              help="Worker processes; defaults to the config value.")
def run(config_path, run_date, spec_name, workers):
    """Execute the full pipeline for one dated batch."""
    from .runner import run_pipeline
    try:
        config = load_config(config_path)
        if spec_name:
            config = dc_replace(config, spec_name=spec_name)
        record = run_pipeline(config, run_date, workers=workers)
    except QcError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    _echo_outcome(record)
    sys.exit(_exit_code(record))


@main.command()
@click.option("--run", "run_id", required=True, help="Run id to re-enter.")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
def resume(run_id, config_path):
    """Re-enter an interrupted run; completed sources are skipped."""
    from .runner import checkpoint_resume
    try:
        config = load_config(config_path)
        record = checkpoint_resume(run_id, config)
    except QcError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    _echo_outcome(record)
    sys.exit(_exit_code(record))


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--date", "run_date", required=True,
              help="Business date whose current tables to profile, YYYYMMDD.")
def profile(config_path, run_date):
    """Profile each configured source's current table, without running QC."""
    from .runner import profile_sources
    try:
        config = load_config(config_path)
        paths = profile_sources(config, run_date)
    except QcError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    for path in paths:
        click.echo(f"profile: {path}")


@main.command()
@click.argument("breach_id")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--resolution", required=True,
              type=click.Choice(["false_alarm", "data_fix"]))
@click.option("--actor", required=True, help="Who is signing off.")
@click.option("--note", default="", help="Free-form resolution note.")
def ack(breach_id, config_path, resolution, actor, note):
    """Sign off one breach; an already-resolved conflict exits 3."""
    try:
        config = load_config(config_path)
        ledger = Ledger(root=config.output["breach_dir"])
        breach = ledger.acknowledge_breach(breach_id, resolution, actor, note,
                                           now=datetime.now(timezone.utc))
    except QcError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo(f"breach {breach.id}: state={breach.state} by {breach.actor}")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(config_path, host, port):
    """Serve the breach ledger over HTTP (consumed by the web console)."""
    import uvicorn

    from .service import create_app
    config = load_config(config_path)
    app = create_app(root=config.output["breach_dir"], config=config)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
