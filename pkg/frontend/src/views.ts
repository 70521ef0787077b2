// Rendering is string-in, string-out so every view is testable in
// plain node. main.ts mounts the strings and wires the events.

import type { AuditRecord, Denial } from "./types.js";
import type { Card, ConsoleState, FeedItem, FlowStep } from "./store.js";
import { capabilitiesFor, filteredAudit, isStale, type AuditFilter } from "./store.js";

export function esc(text: unknown): string {
  return String(text)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function fmtValue(value: unknown): string {
  if (value === null || value === undefined) return "–";
  if (typeof value === "number") return Number.isInteger(value) ? String(value) : value.toFixed(3);
  return JSON.stringify(value);
}

export function renderDenial(denial: Denial): string {
  const detail = denial.detail !== undefined ? ` ${esc(JSON.stringify(denial.detail))}` : "";
  return `<span class="denial" data-reason="${esc(denial.reason)}">law rejected: ${esc(denial.reason)}${detail}</span>`;
}

export function renderOfflineBanner(): string {
  return `<div class="banner offline">gateway unreachable, retrying…</div>`;
}

export function renderSession(state: ConsoleState): string {
  if (!state.session) return `<span class="session">connecting…</span>`;
  const [name, branch] = state.session.triple;
  return `<span class="session">${esc(name)} @ ${esc(branch)} · role ${esc(state.session.role)}</span>`;
}

export function renderCard(card: Card, now: number, role: string): string {
  const caps = capabilitiesFor(card.law);
  const rows = caps.properties
    .map((prop) => {
      const entry = card.values[prop];
      const value = entry ? fmtValue(entry.value) : "–";
      const stale = entry && isStale(entry, now) ? ` <em class="stale">(stale)</em>` : "";
      const at = entry ? `t+${Math.round((now - entry.fetchedAt) / 1000)}s ago` : "never";
      return `<tr><td>${esc(prop)}</td><td class="value" data-prop="${esc(prop)}">${esc(value)}${stale}</td>` +
        `<td class="fetched">${esc(at)}</td>` +
        `<td><button data-action="examine" data-prop="${esc(prop)}">examine</button></td></tr>`;
    })
    .join("");
  const events = caps.events
    .map((ev) =>
      `<button data-action="subscribe" data-event="${esc(ev)}">subscribe ${esc(ev)}</button>`)
    .join(" ");
  const blockedBadge =
    card.blocked === null ? "" : card.blocked ? `<span class="badge blocked">removed</span>` : "";
  // the button stays visible for every role: the law answers, the UI
  // merely reports its decision (zero-authority client)
  const removeButton = `<button data-action="remove" class="danger">remove…</button>`;
  const disabledHint = role === "operator" ? "" : ` <em class="hint">(law will refuse for role ${esc(role)})</em>`;
  return (
    `<section class="card" data-key="${esc(card.triple.join("@"))}">` +
    `<h3>${esc(card.triple[0])} <small>${esc(card.triple[1])} · law ${esc(card.law)}</small> ${blockedBadge}</h3>` +
    `<table>${rows}</table>` +
    `<div class="actions">${events} ${removeButton}${disabledHint}</div>` +
    `</section>`
  );
}

export function renderComponentList(state: ConsoleState, now: number): string {
  if (state.order.length === 0) {
    return `<div class="empty">no components in your branch purview</div>`;
  }
  const role = state.session?.role ?? "";
  return state.order
    .map((key) => state.cards[key])
    .filter((card): card is Card => card !== undefined)
    .map((card) => renderCard(card, now, role))
    .join("\n");
}

export function renderFeed(feed: FeedItem[]): string {
  if (feed.length === 0) return `<div class="empty">no events yet</div>`;
  return feed
    .map(
      (item) =>
        `<div class="feed-item ${item.acknowledged ? "acked" : "fresh"}" data-id="${esc(item.id)}">` +
        `<b>${esc(item.name)}</b> from ${esc(item.from[0])}@${esc(item.from[1])}: ` +
        `${esc(fmtValue(item.value))}` +
        (item.acknowledged ? "" : ` <button data-action="ack">ack</button>`) +
        `</div>`,
    )
    .join("\n");
}

export function renderRemoveFlow(steps: FlowStep[]): string {
  if (steps.length === 0) return "";
  const rows = steps
    .map((s) => `<li class="${s.ok ? "ok" : "refused"}">${esc(s.label)}: ${esc(s.outcome)}</li>`)
    .join("");
  return `<ol class="remove-flow">${rows}</ol>`;
}

export function renderAudit(state: ConsoleState, filter: AuditFilter): string {
  const records = filteredAudit(state, filter);
  if (records.length === 0) return `<div class="empty">audit trail is empty</div>`;
  return records
    .slice(-100)
    .reverse()
    .map((r: AuditRecord) =>
      `<div class="audit-row kind-${esc(r.kind)}">` +
      `<span class="t">${esc(r.t.toFixed(2))}</span> ` +
      `<span class="actor">${esc(r.actor[0])}@${esc(r.actor[1])}</span> ` +
      `<span class="kind">${esc(r.kind)}</span> ` +
      `<span class="detail">${esc(JSON.stringify(r.detail))}</span></div>`,
    )
    .join("\n");
}
