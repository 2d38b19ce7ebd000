"""Renderers and notification sinks.

The status CSV is consumed by a downstream loader, so its bytes are pinned
exactly. HTML reports are checked structurally: section order, escaping,
and the per-breach audit fields.
"""

import pytest

from conftest import cat_col, make_ds, num_col
from tabqc.dataset import Dataset
from tabqc.errors import IoError
from tabqc.governance import (Breach, SEVERITY_RED, SEVERITY_YELLOW,
                              STATE_OPEN, StatusEntry)
from tabqc.notify import dispatch_notifications
from tabqc.report import (STATUS_HEADER, render_breach_report,
                          render_profile_figures, render_profile_report,
                          render_status_file)
from tabqc.storage import LocalStorage, MemoryStorage


def entry(series="bond_index", check="Missing Value Check",
          status="Success - No Breach Detected"):
    return StatusEntry(series=series, run_date="20/12/2011", check=check,
                       status_update_timestamp="20/12/2011 09:30", status=status)


def breach(check="Outlier Check - Min-Max Range", severity=SEVERITY_RED,
           sample_invalid=(), assertion_query="px_000 between 96.0 and 104.0",
           assertion_description="last value inside trailing min-max window",
           paths=None):
    return Breach(
        id=f"br-{check}", run_id="r1", series="bond_index", check=check,
        severity=severity, assertion_query=assertion_query,
        assertion_description=assertion_description,
        sample_invalid=tuple(sample_invalid),
        paths=paths or {"breach_path": "/qc/breach.csv",
                        "current_path": "/in/current.csv",
                        "previous_path": "/in/previous.csv"},
        state=STATE_OPEN, created_at="2011-12-20T09:30:00+00:00")


class TestStatusFile:
    def test_header_bytes(self):
        assert render_status_file([]) == (
            "Series,Run Date,Check,Status Update Timestamp,Status\n")

    def test_header_constant_matches_rendered_header(self):
        assert render_status_file([]).rstrip("\n").split(",") == STATUS_HEADER

    def test_single_row_bytes(self):
        text = render_status_file([entry()])
        assert text == (
            "Series,Run Date,Check,Status Update Timestamp,Status\n"
            "bond_index,20/12/2011,Missing Value Check,"
            "20/12/2011 09:30,Success - No Breach Detected\n")

    def test_five_standard_checks_in_insertion_order(self):
        checks = ["Missing Value Check", "Positive Values Only",
                  "Outlier Check - Std-Dev Range", "Outlier Check - Min-Max Range",
                  "Value Delta Change Check"]
        statuses = ["Success - No Breach Detected"] * 3 + [
            "Success - Breach Detected", "Success - No Breach Detected"]
        entries = [entry(check=c, status=s) for c, s in zip(checks, statuses)]
        lines = render_status_file(entries).splitlines()
        assert len(lines) == 6
        assert [ln.split(",")[2] for ln in lines[1:]] == checks
        assert lines[4].endswith("Success - Breach Detected")

    def test_error_status_renders_verbatim(self):
        text = render_status_file([entry(status="Error")])
        assert text.splitlines()[1].endswith(",Error")

    def test_rerender_is_byte_identical(self):
        entries = [entry(check=f"check-{i}") for i in range(4)]
        assert render_status_file(entries) == render_status_file(entries)

    def test_fields_with_commas_are_quoted(self):
        text = render_status_file([entry(series="a,b")])
        assert '"a,b"' in text.splitlines()[1]


class TestBreachReport:
    def test_no_breaches_page(self):
        doc = render_breach_report([])
        assert doc.startswith("<!DOCTYPE html>")
        assert "<p>No breaches detected.</p>" in doc
        assert "BREAK THE PROCESS CHECKS" not in doc

    def test_red_section_precedes_yellow(self):
        # passed yellow-first; the report must still lead with red
        docs = [breach(check="soft", severity=SEVERITY_YELLOW),
                breach(check="hard", severity=SEVERITY_RED)]
        doc = render_breach_report(docs)
        red_at = doc.index('<h2 class="red">BREAK THE PROCESS CHECKS</h2>')
        yellow_at = doc.index('<h2 class="yellow">NOT BREAK THE PROCESS CHECKS</h2>')
        assert red_at < yellow_at
        assert red_at < doc.index("hard") < yellow_at < doc.index("soft")

    def test_only_yellow_omits_red_header(self):
        doc = render_breach_report([breach(severity=SEVERITY_YELLOW)])
        assert 'class="red"' not in doc
        assert "NOT BREAK THE PROCESS CHECKS" in doc
        assert "No breaches detected" not in doc

    def test_audit_fields_render(self):
        doc = render_breach_report([breach()])
        for label in ["QC Breach Path", "Current Path", "Previous Path",
                      "Assertion Query", "Assertion Description"]:
            assert f"<th>{label}</th>" in doc
        assert "/qc/breach.csv" in doc
        assert "px_000 between 96.0 and 104.0" in doc
        assert "last value inside trailing min-max window" in doc

    def test_sample_invalid_table(self):
        doc = render_breach_report([breach(sample_invalid=((42, -1.5), (57, -9.0)))])
        assert "<h4>Sample Invalid</h4>" in doc
        assert "<tr><th>Row</th><th>Value</th></tr>" in doc
        assert "<tr><td>42</td><td>-1.5</td></tr>" in doc
        assert "none recorded" not in doc

    def test_empty_sample_says_none_recorded(self):
        assert "<p>none recorded</p>" in render_breach_report([breach()])

    def test_markup_in_values_is_escaped(self):
        b = breach(assertion_query='<script>alert("x")</script>',
                   assertion_description="a < b & c")
        doc = render_breach_report([b])
        assert "<script>" not in doc
        assert "&lt;script&gt;" in doc
        assert "a &lt; b &amp; c" in doc

    def test_missing_path_renders_empty_cell(self):
        doc = render_breach_report([breach(paths={"breach_path": "/qc/b.csv"})])
        assert "<tr><th>Current Path</th><td></td></tr>" in doc

    def test_rerender_is_byte_identical(self):
        docs = [breach(), breach(check="Nulls", severity=SEVERITY_YELLOW)]
        assert render_breach_report(docs) == render_breach_report(docs)


class TestProfileFigures:
    def test_one_png_per_column(self, tmp_path):
        ds = make_ds(px=[1.0, 2.0, 3.0, 4.0], sector=["fin", "fin", "utl", None])
        paths = render_profile_figures(ds, str(tmp_path))
        assert paths == {"px": "figures/px.png", "sector": "figures/sector.png"}
        for rel in paths.values():
            target = tmp_path / rel
            assert target.is_file()
            assert target.read_bytes()[:4] == b"\x89PNG"

    def test_hostile_column_name_is_sanitised(self, tmp_path):
        ds = Dataset.of("t", [num_col("px 0/1", [1.0, 2.0])])
        paths = render_profile_figures(ds, str(tmp_path))
        assert paths == {"px 0/1": "figures/px_0_1.png"}
        assert (tmp_path / "figures" / "px_0_1.png").is_file()

    def test_all_null_column_still_renders(self, tmp_path):
        ds = Dataset.of("t", [num_col("gap", [None, None, None])])
        paths = render_profile_figures(ds, str(tmp_path))
        assert (tmp_path / paths["gap"]).is_file()


class TestProfileReport:
    def test_numeric_stats_table(self):
        ds = make_ds(px=[1.0, 2.0, 3.0, 4.0])
        doc = render_profile_report(ds)
        assert "<h1>Profile: t</h1>" in doc
        assert "<p>4 rows, 1 columns</p>" in doc
        assert "<h2>px (numeric)</h2>" in doc
        assert "<p>count 4, null_count 0</p>" in doc
        assert "<tr><th>mean</th><td>2.5</td></tr>" in doc
        assert "<tr><th>median</th><td>2.5</td></tr>" in doc
        # population std dev: sqrt(1.25) to 6 significant digits
        assert "<tr><th>std_dev</th><td>1.11803</td></tr>" in doc
        assert "<tr><th>min</th><td>1</td></tr>" in doc
        assert "<tr><th>max</th><td>4</td></tr>" in doc

    def test_categorical_stats_and_top_values(self):
        ds = make_ds(sector=["b", "a", "a", None])
        doc = render_profile_report(ds)
        assert "<p>count 3, null_count 1</p>" in doc
        assert "<tr><th>unique_count</th><td>2</td></tr>" in doc
        assert "<tr><th>avg_string_length</th><td>1</td></tr>" in doc
        # ranked by descending frequency, ties alphabetical
        rows = doc.index("<tr><td>a</td><td>2</td></tr>")
        assert rows < doc.index("<tr><td>b</td><td>1</td></tr>")

    def test_figure_paths_embed_images(self):
        ds = make_ds(px=[1.0, 2.0])
        with_fig = render_profile_report(ds, {"px": "figures/px.png"})
        assert '<img src="figures/px.png" alt="px">' in with_fig
        assert "<img" not in render_profile_report(ds)

    def test_zero_rows_flagged(self):
        ds = Dataset.of("empty", [num_col("px", [])])
        doc = render_profile_report(ds)
        assert "<p>Dataset has zero rows.</p>" in doc
        assert "<p>no observed values</p>" in doc


class RaisingStorage:
    def write_text(self, path, text):
        raise IoError(f"cannot write {path}: disk full")


class TestNotify:
    def test_quiet_success_sends_nothing(self):
        store = MemoryStorage()
        log = dispatch_notifications(
            "<html></html>", [{"kind": "file_sink", "dir": "/out"}], "r1",
            severity_counts={}, storage=store)
        assert log == []
        assert not store.exists("/out/qc_failure_report_r1.html")

    def test_notify_on_success_opt_in(self):
        store = MemoryStorage()
        log = dispatch_notifications(
            "<html>ok</html>", [{"kind": "file_sink", "dir": "/out"}], "r1",
            severity_counts={}, notify_on_success=True, storage=store)
        assert log == [{"sink": "file_sink",
                        "target": "/out/qc_failure_report_r1.html",
                        "ok": True, "detail": "written"}]
        assert store.read_text("/out/qc_failure_report_r1.html") == "<html>ok</html>"

    def test_file_sink_strips_trailing_slash(self):
        store = MemoryStorage()
        log = dispatch_notifications(
            "x", [{"kind": "file_sink", "dir": "/out/"}], "r2",
            severity_counts={"red": 1}, storage=store)
        assert log[0]["target"] == "/out/qc_failure_report_r2.html"

    def test_local_write_is_atomic_no_temp_left_behind(self, tmp_path):
        dispatch_notifications(
            "<html>report</html>", [{"kind": "file_sink", "dir": str(tmp_path)}],
            "r3", severity_counts={"red": 2}, storage=LocalStorage())
        target = tmp_path / "qc_failure_report_r3.html"
        assert target.read_text() == "<html>report</html>"
        assert [p.name for p in tmp_path.iterdir()] == [target.name]

    def test_webhook_payload_and_timeout(self, monkeypatch):
        calls = []

        class Resp:
            status_code = 200

        def fake_post(url, json=None, timeout=None):
            calls.append({"url": url, "json": json, "timeout": timeout})
            return Resp()

        monkeypatch.setattr("tabqc.notify.requests.post", fake_post)
        counts = {"red": 1, "yellow": 2}
        log = dispatch_notifications(
            "<html></html>", [{"kind": "webhook", "url": "http://hook/qc"}],
            "r4", severity_counts=counts, report_path="/out/report.html")
        assert calls == [{"url": "http://hook/qc",
                          "json": {"run_id": "r4", "severity_counts": counts,
                                   "report_path": "/out/report.html"},
                          "timeout": 5.0}]
        assert log == [{"sink": "webhook", "target": "http://hook/qc",
                        "ok": True, "detail": "HTTP 200"}]

    def test_webhook_non_2xx_logged_as_failure(self, monkeypatch):
        class Resp:
            status_code = 503

        monkeypatch.setattr("tabqc.notify.requests.post",
                            lambda *a, **k: Resp())
        log = dispatch_notifications(
            "x", [{"kind": "webhook", "url": "http://hook/qc"}], "r5",
            severity_counts={"yellow": 1})
        assert log == [{"sink": "webhook", "target": "http://hook/qc",
                        "ok": False, "detail": "HTTP 503"}]

    def test_one_failure_never_blocks_the_next_sink(self, monkeypatch):
        def boom(*a, **k):
            raise ConnectionError("name or service not known")

        monkeypatch.setattr("tabqc.notify.requests.post", boom)
        store = MemoryStorage()
        log = dispatch_notifications(
            "x", [{"kind": "webhook", "url": "http://down/qc"},
                  {"kind": "file_sink", "dir": "/out"}],
            "r6", severity_counts={"red": 1}, storage=store)
        assert [e["ok"] for e in log] == [False, True]
        assert "name or service not known" in log[0]["detail"]
        assert store.exists("/out/qc_failure_report_r6.html")

    def test_file_sink_failure_is_captured(self):
        log = dispatch_notifications(
            "x", [{"kind": "file_sink", "dir": "/out"}], "r7",
            severity_counts={"red": 1}, storage=RaisingStorage())
        assert log[0]["ok"] is False
        assert "disk full" in log[0]["detail"]

    def test_unknown_sink_kind_logged(self):
        log = dispatch_notifications(
            "x", [{"kind": "pager"}], "r8", severity_counts={"red": 1})
        assert log == [{"sink": "pager", "target": "", "ok": False,
                        "detail": "unknown sink kind 'pager'"}]
