/** Console wiring: one poll cycle fetches the open queue and the newest
 * run's detail, then re-renders the three regions. */

import { QcApi } from "./api";
import type { BreachRecord, RunDetail, RunSummary } from "./api";
import { renderBanner } from "./banner";
import { buildQueue } from "./model";
import { createPoller } from "./poll";
import { renderQueue } from "./queue";
import { renderTimeline } from "./timeline";
import "./styles.css";

interface Snapshot {
  open: BreachRecord[];
  detail: RunDetail | null;
  fetchedAt: Date;
}

function newestRun(runs: RunSummary[]): RunSummary | null {
  if (runs.length === 0) return null;
  return runs
    .slice()
    .sort((a, b) =>
      a.date !== b.date
        ? b.date.localeCompare(a.date)
        : b.run_id.localeCompare(a.run_id),
    )[0];
}

export function startConsole(rootEl: Element, api: QcApi): { stop(): void } {
  const doc = rootEl.ownerDocument;
  const bannerEl = doc.createElement("div");
  const queueEl = doc.createElement("div");
  const timelineEl = doc.createElement("div");
  rootEl.append(bannerEl, queueEl, timelineEl);

  let lastGoodAt: Date | null = null;

  async function fetchSnapshot(): Promise<Snapshot> {
    const [open, runs] = await Promise.all([
      api.listBreaches("open"),
      api.listRuns(),
    ]);
    const newest = newestRun(runs);
    const detail = newest ? await api.getRun(newest.run_id) : null;
    return { open, detail, fetchedAt: new Date() };
  }

  const poller = createPoller(
    fetchSnapshot,
    (snapshot) => {
      lastGoodAt = snapshot.fetchedAt;
      renderQueue(queueEl, buildQueue(snapshot.open, snapshot.fetchedAt), {
        onAck: async (breachId, body) => {
          await api.ackBreach(breachId, body);
          await poller.tick();
        },
      });
      if (snapshot.detail) {
        renderBanner(bannerEl, {
          kind: "gate",
          gate: snapshot.detail.gate,
          runId: snapshot.detail.run_id,
        });
        renderTimeline(timelineEl, { kind: "run", detail: snapshot.detail });
      } else {
        renderBanner(bannerEl, { kind: "idle" });
      }
    },
    (err) => {
      // degraded: keep whatever queue/timeline is already on screen
      renderBanner(bannerEl, {
        kind: "degraded",
        message: err instanceof Error ? err.message : String(err),
        lastGoodAt,
      });
    },
  );
  poller.start();
  return { stop: () => poller.stop() };
}

const mount = typeof document !== "undefined" ? document.getElementById("app") : null;
if (mount) {
  startConsole(mount, new QcApi(""));
}
