/** Display projections. Everything here is a pure function of the last
 * fetched payload; no breach semantics are computed client-side. */

import type { BreachRecord } from "./api";

export interface BreachView extends BreachRecord {
  badge: "RED" | "YELLOW";
  age: string;
  /** blocking is true exactly when the breach holds the gate: red and open */
  blocking: boolean;
}

export function formatAge(createdAt: string, now: Date): string {
  const ms = now.getTime() - new Date(createdAt).getTime();
  const minutes = Math.floor(ms / 60_000);
  if (minutes < 1) return "<1m";
  if (minutes < 60) return `${minutes}m`;
  const hours = Math.floor(minutes / 60);
  if (hours < 24) return `${hours}h`;
  return `${Math.floor(hours / 24)}d`;
}

export function toView(record: BreachRecord, now: Date): BreachView {
  return {
    ...record,
    badge: record.severity === "red" ? "RED" : "YELLOW",
    age: formatAge(record.created_at, now),
    blocking: record.severity === "red" && record.state === "open",
  };
}

/** Queue order: red before yellow, then newest first; id breaks ties so the
 * order is total and stable across polls. */
export function queueCompare(a: BreachRecord, b: BreachRecord): number {
  if (a.severity !== b.severity) return a.severity === "red" ? -1 : 1;
  if (a.created_at !== b.created_at) return a.created_at < b.created_at ? 1 : -1;
  return a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
}

export function buildQueue(records: BreachRecord[], now: Date): BreachView[] {
  return records
    .slice()
    .sort(queueCompare)
    .map((record) => toView(record, now));
}
