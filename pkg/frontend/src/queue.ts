/** Breach queue rendering plus the acknowledgment form. All state changes
 * go through the onAck handler (the API); the DOM only mirrors responses. */

import { ApiError } from "./api";
import type { AckRequest } from "./api";
import type { BreachView } from "./model";

export interface QueueHandlers {
  onAck: (breachId: string, body: AckRequest) => Promise<void>;
}

function sampleTable(doc: Document, rows: Array<[string, unknown]>): Element {
  const table = doc.createElement("table");
  table.className = "sample-invalid";
  for (const [label, value] of rows) {
    const tr = doc.createElement("tr");
    const td1 = doc.createElement("td");
    td1.textContent = label;
    const td2 = doc.createElement("td");
    td2.textContent = String(value);
    tr.appendChild(td1);
    tr.appendChild(td2);
    table.appendChild(tr);
  }
  return table;
}

function ackForm(doc: Document, view: BreachView, handlers: QueueHandlers): Element {
  const form = doc.createElement("form");
  form.className = "ack-form";

  const resolution = doc.createElement("select");
  resolution.name = "resolution";
  for (const value of ["false_alarm", "data_fix"]) {
    const option = doc.createElement("option");
    option.value = value;
    option.textContent = value;
    resolution.appendChild(option);
  }

  const actor = doc.createElement("input");
  actor.name = "actor";
  actor.placeholder = "actor";

  const note = doc.createElement("input");
  note.name = "note";
  note.placeholder = "note (required)";

  const submit = doc.createElement("button");
  submit.type = "submit";
  submit.textContent = "acknowledge";

  const feedback = doc.createElement("span");
  feedback.className = "ack-feedback";

  form.append(resolution, actor, note, submit, feedback);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    // client-side gate mirrors the server's: an empty note never leaves the page
    if (!note.value.trim()) {
      feedback.className = "ack-feedback field-error";
      feedback.textContent = "note is required";
      return;
    }
    if (!actor.value.trim()) {
      feedback.className = "ack-feedback field-error";
      feedback.textContent = "actor is required";
      return;
    }
    feedback.className = "ack-feedback pending";
    feedback.textContent = "submitting…";
    handlers
      .onAck(view.id, {
        resolution: resolution.value as AckRequest["resolution"],
        actor: actor.value.trim(),
        note: note.value.trim(),
      })
      .catch((err: unknown) => {
        feedback.className = "ack-feedback field-error";
        if (err instanceof ApiError && err.status === 409) {
          // terminal state conflict: display it, do not retry
          feedback.textContent = `already resolved: ${err.detail}`;
        } else if (err instanceof ApiError) {
          feedback.textContent = err.detail;
        } else {
          feedback.textContent = String(err);
        }
      });
  });
  return form;
}

export function renderQueue(
  el: Element,
  views: BreachView[],
  handlers: QueueHandlers,
): void {
  const doc = el.ownerDocument;
  el.textContent = "";

  if (views.length === 0) {
    const empty = doc.createElement("p");
    empty.className = "queue-empty";
    empty.textContent = "no open breaches";
    el.appendChild(empty);
    return;
  }

  const list = doc.createElement("ul");
  list.className = "breach-queue";
  for (const view of views) {
    const item = doc.createElement("li");
    item.className = `breach sev-${view.severity}`;
    item.setAttribute("data-id", view.id);

    const badge = doc.createElement("span");
    badge.className = `badge badge-${view.severity}`;
    badge.textContent = view.badge;
    item.appendChild(badge);

    if (view.blocking) {
      const blocking = doc.createElement("span");
      blocking.className = "badge badge-blocking";
      blocking.textContent = "BLOCKING";
      item.appendChild(blocking);
    }

    const title = doc.createElement("span");
    title.className = "breach-title";
    title.textContent = `${view.check} · series ${view.series} · ${view.age}`;
    item.appendChild(title);

    const assertion = doc.createElement("p");
    assertion.className = "assertion";
    assertion.textContent = `${view.assertion_query} — ${view.assertion_description}`;
    item.appendChild(assertion);

    if (view.sample_invalid.length > 0) {
      item.appendChild(sampleTable(doc, view.sample_invalid));
    }

    if (view.state === "open") {
      item.appendChild(ackForm(doc, view, handlers));
    } else {
      const resolved = doc.createElement("p");
      resolved.className = "resolved-note";
      resolved.textContent = `${view.state} by ${view.actor ?? "?"}: ${view.note ?? ""}`;
      item.appendChild(resolved);
    }

    list.appendChild(item);
  }
  el.appendChild(list);
}
