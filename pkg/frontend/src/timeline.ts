/** Run timeline: the status ledger table, the roll-up chip, and the link
 * to the rendered breach report artifact. */

import type { RunDetail } from "./api";

export type TimelineState =
  | { kind: "run"; detail: RunDetail }
  | { kind: "not-found"; runId: string };

const COLUMNS: Array<[keyof RunDetail["entries"][number], string]> = [
  ["series", "Series"],
  ["run_date", "Run Date"],
  ["check", "Check"],
  ["status_update_timestamp", "Status Update Timestamp"],
  ["status", "Status"],
];

export function renderTimeline(el: Element, state: TimelineState): void {
  const doc = el.ownerDocument;
  el.textContent = "";

  if (state.kind === "not-found") {
    const missing = doc.createElement("p");
    missing.className = "not-found";
    missing.textContent = `run ${state.runId} not found`;
    el.appendChild(missing);
    return;
  }

  const { detail } = state;
  const heading = doc.createElement("h2");
  heading.textContent = `run ${detail.run_id}`;
  const chip = doc.createElement("span");
  chip.className = `chip chip-${detail.overall_status}`;
  chip.textContent = detail.overall_status;
  heading.appendChild(chip);
  el.appendChild(heading);

  if (detail.report_path) {
    const link = doc.createElement("a");
    link.className = "report-link";
    link.href = detail.report_path.startsWith("/")
      ? `file://${detail.report_path}`
      : detail.report_path;
    link.textContent = "breach report";
    el.appendChild(link);
  }

  const table = doc.createElement("table");
  table.className = "timeline";
  const head = doc.createElement("tr");
  for (const [, label] of COLUMNS) {
    const th = doc.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  table.appendChild(head);

  for (const entry of detail.entries) {
    const tr = doc.createElement("tr");
    if (entry.status === "Success - Breach Detected") {
      tr.className = "breach-row";
    } else if (entry.status === "Error") {
      tr.className = "error-row";
    }
    for (const [key] of COLUMNS) {
      const td = doc.createElement("td");
      td.textContent = entry[key];
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  el.appendChild(table);
}
