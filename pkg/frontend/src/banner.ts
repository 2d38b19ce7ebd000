/** The run banner: gate verdict when the service is reachable, a degraded
 * notice (with the last-good fetch time) when it is not. It never blanks. */

export type BannerState =
  | { kind: "idle" }
  | { kind: "gate"; gate: "proceed" | "halt"; runId: string }
  | { kind: "degraded"; message: string; lastGoodAt: Date | null };

export function renderBanner(el: Element, state: BannerState): void {
  const doc = el.ownerDocument;
  el.textContent = "";

  if (state.kind === "idle") {
    el.setAttribute("class", "banner idle");
    el.textContent = "waiting for first poll…";
    return;
  }

  if (state.kind === "degraded") {
    el.setAttribute("class", "banner degraded");
    const note = doc.createElement("span");
    note.className = "degraded-note";
    const since = state.lastGoodAt
      ? `showing data fetched ${state.lastGoodAt.toISOString()}`
      : "no data fetched yet";
    note.textContent = `service unreachable (${state.message}) — ${since}`;
    el.appendChild(note);
    return;
  }

  el.setAttribute("class", `banner ${state.gate}`);
  const verdict = doc.createElement("strong");
  verdict.className = "verdict";
  verdict.textContent = state.gate === "halt" ? "HALT" : "PROCEED";
  const detail = doc.createElement("span");
  detail.textContent =
    state.gate === "halt"
      ? ` — run ${state.runId} is blocked by open red breaches`
      : ` — run ${state.runId} is clear to release`;
  el.appendChild(verdict);
  el.appendChild(detail);
}
