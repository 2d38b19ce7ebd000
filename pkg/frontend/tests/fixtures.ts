import type { BreachRecord, RunDetail, StatusEntry } from "../src/api";

export function breach(overrides: Partial<BreachRecord> = {}): BreachRecord {
  return {
    id: "b-1",
    run_id: "corporate_bonds_20111220",
    series: "20111220",
    check: "Outlier Check - Min-Max Range",
    severity: "yellow",
    assertion_query: "value within trailing 10-observation min-max",
    assertion_description: "stay inside the historical range",
    sample_invalid: [["px_000[59]", 106.0]],
    paths: {},
    state: "open",
    created_at: "2011-12-20T09:30:00+00:00",
    actor: null,
    note: null,
    resolved_at: null,
    ...overrides,
  };
}

export function entry(overrides: Partial<StatusEntry> = {}): StatusEntry {
  return {
    series: "20111220",
    run_date: "20/12/2011",
    check: "Missing Value Check",
    status_update_timestamp: "20/12/2011 09:30",
    status: "Success - No Breach Detected",
    ...overrides,
  };
}

/** The five-check status ledger of a bond-index run with a min-max breach. */
export function fixtureEntries(): StatusEntry[] {
  return [
    entry(),
    entry({ check: "Positive Values Only" }),
    entry({ check: "Outlier Check - Std-Dev Range" }),
    entry({
      check: "Outlier Check - Min-Max Range",
      status: "Success - Breach Detected",
    }),
    entry({ check: "Value Delta Change Check" }),
  ];
}

export function runDetail(overrides: Partial<RunDetail> = {}): RunDetail {
  return {
    run_id: "corporate_bonds_20111220",
    date: "20111220",
    overall_status: "yellow",
    entries: fixtureEntries(),
    gate: "proceed",
    blocking_breach_ids: [],
    breaches: [],
    ...overrides,
  };
}
