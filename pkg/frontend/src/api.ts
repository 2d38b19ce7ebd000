/** Typed client for the qc-service JSON API. The console talks to the
 * backend exclusively through this module. */

export interface StatusEntry {
  series: string;
  run_date: string;
  check: string;
  status_update_timestamp: string;
  status: string;
}

export interface BreachRecord {
  id: string;
  run_id: string;
  series: string;
  check: string;
  severity: "red" | "yellow";
  assertion_query: string;
  assertion_description: string;
  sample_invalid: Array<[string, unknown]>;
  paths: Record<string, string>;
  state: "open" | "acknowledged_false_alarm" | "resolved_data_fix";
  created_at: string;
  actor: string | null;
  note: string | null;
  resolved_at: string | null;
}

export interface RunSummary {
  run_id: string;
  date: string;
  overall_status: "green" | "yellow" | "red";
  breach_count: number;
  entry_count: number;
  gate: string | null;
  source_errors: number;
}

export interface RunDetail {
  run_id: string;
  date: string;
  overall_status: "green" | "yellow" | "red";
  entries: StatusEntry[];
  gate: "proceed" | "halt";
  blocking_breach_ids: string[];
  breaches: BreachRecord[];
  report_path?: string;
  status_file?: string;
  [key: string]: unknown;
}

export interface AckRequest {
  resolution: "false_alarm" | "data_fix";
  actor: string;
  note: string;
}

export interface AckResponse {
  breach: BreachRecord;
  gate: "proceed" | "halt";
  blocking_breach_ids: string[];
}

/** Non-2xx responses carry {error, detail}; both are preserved here so the
 * UI can render 404/409/422 inline instead of as blank failures. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly error: string,
    readonly detail: string,
  ) {
    super(`${error}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class QcApi {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      let error = "http_error";
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { error?: string; detail?: string };
        error = body.error ?? error;
        detail = body.detail ?? detail;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(resp.status, error, detail);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/api/health");
  }

  listRuns(): Promise<RunSummary[]> {
    return this.request("/api/runs");
  }

  getRun(runId: string): Promise<RunDetail> {
    return this.request(`/api/runs/${encodeURIComponent(runId)}`);
  }

  listBreaches(state?: string): Promise<BreachRecord[]> {
    const query = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request(`/api/breaches${query}`);
  }

  getBreach(breachId: string): Promise<BreachRecord> {
    return this.request(`/api/breaches/${encodeURIComponent(breachId)}`);
  }

  ackBreach(breachId: string, body: AckRequest): Promise<AckResponse> {
    return this.request(`/api/breaches/${encodeURIComponent(breachId)}/ack`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
