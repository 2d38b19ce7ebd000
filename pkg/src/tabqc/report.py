"""Artifact rendering: the status CSV, the QC failure report, and the
per-dataset profile report with one figure per column.

Every renderer is a pure function of its inputs and re-renders
byte-identically; file placement belongs to the runner.
"""

from __future__ import annotations

import html
import io
import re
from csv import writer as csv_writer

import matplotlib

matplotlib.use("Agg")  # headless rendering, no display server
import matplotlib.pyplot as plt

from .dataset import DTYPE_NUMERIC, Dataset, FeatureProfile, column_stats, profile_dataset
from .governance import Breach, SEVERITY_RED

STATUS_HEADER = ["Series", "Run Date", "Check", "Status Update Timestamp", "Status"]


def render_status_file(entries) -> str:
    buf = io.StringIO()
    w = csv_writer(buf, lineterminator="\n")
    w.writerow(STATUS_HEADER)
    for e in entries:
        w.writerow([e.series, e.run_date, e.check,
                    e.status_update_timestamp, e.status])
    return buf.getvalue()


_PAGE = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>{title}</title>
<style>
body {{ font-family: sans-serif; margin: 2em; color: #222; }}
table {{ border-collapse: collapse; margin: 0.5em 0; }}
th, td {{ border: 1px solid #999; padding: 4px 10px; text-align: left; }}
th {{ background: #eee; }}
h2.red {{ color: #a00; }}
h2.yellow {{ color: #870; }}
.section {{ margin-bottom: 2em; }}
</style>
</head>
<body>
{body}
</body>
</html>
"""


def _esc(v) -> str:
    return html.escape("" if v is None else str(v))


def _breach_block(b: Breach) -> str:
    rows = [
        ("QC Breach Path", b.paths.get("breach_path")),
        ("Current Path", b.paths.get("current_path")),
        ("Previous Path", b.paths.get("previous_path")),
        ("Assertion Query", b.assertion_query),
        ("Assertion Description", b.assertion_description),
    ]
    meta = "\n".join(f"<tr><th>{_esc(k)}</th><td>{_esc(v)}</td></tr>" for k, v in rows)
    if b.sample_invalid:
        sample_rows = "\n".join(
            f"<tr><td>{_esc(loc)}</td><td>{_esc(val)}</td></tr>"
            for loc, val in b.sample_invalid)
        sample = (f"<h4>Sample Invalid</h4>\n<table>\n"
                  f"<tr><th>Row</th><th>Value</th></tr>\n{sample_rows}\n</table>")
    else:
        sample = "<h4>Sample Invalid</h4>\n<p>none recorded</p>"
    return (f'<div class="section">\n<h3>{_esc(b.check)} '
            f'[{_esc(b.series)}]</h3>\n<table>\n{meta}\n</table>\n{sample}\n</div>')


def render_breach_report(breaches) -> str:
    """Red breaches under BREAK THE PROCESS CHECKS, yellow under NOT BREAK
    THE PROCESS CHECKS, in that order."""
    red = [b for b in breaches if b.severity == SEVERITY_RED]
    yellow = [b for b in breaches if b.severity != SEVERITY_RED]
    parts = ["<h1>QC Failure Report</h1>"]
    if not breaches:
        parts.append("<p>No breaches detected.</p>")
    if red:
        parts.append('<h2 class="red">BREAK THE PROCESS CHECKS</h2>')
        parts.extend(_breach_block(b) for b in red)
    if yellow:
        parts.append('<h2 class="yellow">NOT BREAK THE PROCESS CHECKS</h2>')
        parts.extend(_breach_block(b) for b in yellow)
    return _PAGE.format(title="QC Failure Report", body="\n".join(parts))


# --- profile report -----------------------------------------------------------

def _fmt(v: float) -> str:
    return format(v, ".6g")


def _safe_name(column: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", column)


def render_profile_figures(ds: Dataset, out_dir: str) -> dict:
    """One PNG per column under out_dir/figures; returns column ->
    path relative to out_dir. Histograms for numerics, top-10 frequency
    bars otherwise. Figures need a real filesystem path."""
    import os
    os.makedirs(f"{out_dir}/figures", exist_ok=True)
    paths = {}
    for col in ds.columns:
        rel = f"figures/{_safe_name(col.name)}.png"
        fig, ax = plt.subplots(figsize=(4.5, 3))
        try:
            if col.dtype == DTYPE_NUMERIC:
                observed = col.non_null()
                if observed:
                    ax.hist(observed, bins=20, color="#4878a8", edgecolor="white")
                ax.set_ylabel("count")
            else:
                profile = column_stats(ds, col.name)
                if profile.categorical:
                    labels = [str(v) for v, _ in profile.categorical.top_k]
                    freqs = [f for _, f in profile.categorical.top_k]
                    ax.bar(range(len(labels)), freqs, color="#4878a8")
                    ax.set_xticks(range(len(labels)))
                    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
                ax.set_ylabel("frequency")
            ax.set_title(col.name, fontsize=9)
            fig.tight_layout()
            fig.savefig(f"{out_dir}/{rel}")
        finally:
            plt.close(fig)
        paths[col.name] = rel
    return paths


def _numeric_section(p: FeatureProfile) -> str:
    if p.numeric is None:
        return "<p>no observed values</p>"
    s = p.numeric
    rows = [("mean", s.mean), ("median", s.median), ("std_dev", s.std_dev),
            ("min", s.min), ("max", s.max)]
    body = "\n".join(f"<tr><th>{k}</th><td>{_fmt(v)}</td></tr>" for k, v in rows)
    return f"<table>\n{body}\n</table>"


def _categorical_section(p: FeatureProfile) -> str:
    if p.categorical is None:
        return "<p>no observed values</p>"
    s = p.categorical
    head = (f"<table>\n<tr><th>unique_count</th><td>{s.unique_count}</td></tr>\n"
            f"<tr><th>avg_string_length</th><td>{_fmt(s.avg_string_length)}</td></tr>\n"
            f"</table>")
    rows = "\n".join(f"<tr><td>{_esc(v)}</td><td>{f}</td></tr>" for v, f in s.top_k)
    top = (f"<h4>Top values</h4>\n<table>\n<tr><th>value</th><th>frequency</th></tr>\n"
           f"{rows}\n</table>")
    return f"{head}\n{top}"


def render_profile_report(ds: Dataset, figure_paths: dict | None = None) -> str:
    figure_paths = figure_paths or {}
    parts = [f"<h1>Profile: {_esc(ds.name)}</h1>",
             f"<p>{ds.row_count} rows, {len(ds.columns)} columns</p>"]
    if ds.row_count == 0:
        parts.append("<p>Dataset has zero rows.</p>")
    for profile in profile_dataset(ds):
        parts.append(f'<div class="section">\n<h2>{_esc(profile.column)} '
                     f'({profile.dtype})</h2>')
        parts.append(f"<p>count {profile.count}, null_count {profile.null_count}</p>")
        if profile.dtype == DTYPE_NUMERIC:
            parts.append(_numeric_section(profile))
        else:
            parts.append(_categorical_section(profile))
        if profile.column in figure_paths:
            parts.append(f'<img src="{_esc(figure_paths[profile.column])}" '
                         f'alt="{_esc(profile.column)}">')
        parts.append("</div>")
    return _PAGE.format(title=f"Profile: {ds.name}", body="\n".join(parts))
