// Console state. Pure data + reducers so the whole thing is testable
// without a browser; updates are idempotent on duplicate events.

import type { AuditRecord, ComponentInfo, Denial, PushedEvent, Triple } from "./types.js";
import { tripleKey } from "./types.js";

/** Values older than this are visually marked stale. */
export const STALE_AFTER_MS = 15_000;

export interface ExaminedValue {
  value: unknown;
  fetchedAt: number; // console wall clock, ms
}

export interface Card {
  triple: Triple;
  law: string;
  values: Record<string, ExaminedValue>;
  blocked: boolean | null; // null = not examined yet
}

export interface FeedItem {
  id: string;
  at: number;
  name: string;
  from: Triple;
  value: unknown;
  acknowledged: boolean;
}

export interface FlowStep {
  label: string;
  outcome: string;
  ok: boolean;
}

export interface ConsoleState {
  online: boolean;
  session: { triple: Triple; role: string } | null;
  cards: Record<string, Card>;
  order: string[];
  feed: FeedItem[];
  audit: AuditRecord[];
  auditNext: number;
  lastDenial: Denial | null;
  removeFlow: FlowStep[];
  subscriptions: string[]; // "event@tripleKey"
}

export function initialState(): ConsoleState {
  return {
    online: false,
    session: null,
    cards: {},
    order: [],
    feed: [],
    audit: [],
    auditNext: 0,
    lastDenial: null,
    removeFlow: [],
    subscriptions: [],
  };
}

// capabilities shown per leaf law; display guidance only, the server
// is the authority on what actually answers
export const KNOWN_CAPABILITIES: Record<string, { properties: string[]; events: string[] }> = {
  buyer: {
    properties: ["budget", "POcount", "avDelay", "inflow", "blocked"],
    events: ["lawBudget", "violation"],
  },
  component: { properties: ["POcount", "inflow", "blocked"], events: [] },
};

export function capabilitiesFor(law: string): { properties: string[]; events: string[] } {
  return KNOWN_CAPABILITIES[law] ?? { properties: ["inflow", "blocked"], events: [] };
}

export function setComponents(state: ConsoleState, components: ComponentInfo[]): void {
  const seen = new Set<string>();
  for (const info of components) {
    const key = tripleKey(info.triple);
    seen.add(key);
    if (!state.cards[key]) {
      state.cards[key] = { triple: info.triple, law: info.law, values: {}, blocked: null };
      state.order.push(key);
    }
  }
  state.order = state.order.filter((k) => seen.has(k));
  for (const key of Object.keys(state.cards)) {
    if (!seen.has(key)) delete state.cards[key];
  }
}

export function recordValue(
  state: ConsoleState,
  triple: Triple,
  property: string,
  value: unknown,
  now: number,
): void {
  const card = state.cards[tripleKey(triple)];
  if (!card) return;
  card.values[property] = { value, fetchedAt: now };
  if (property === "blocked") card.blocked = value === 1;
}

export function isStale(entry: ExaminedValue, now: number): boolean {
  return now - entry.fetchedAt > STALE_AFTER_MS;
}

function feedId(event: PushedEvent, at: number): string {
  return `${event.name}|${tripleKey(event.from)}|${JSON.stringify(event.value)}|${at}`;
}

export function pushEvent(state: ConsoleState, event: PushedEvent, at: number): void {
  const id = feedId(event, at);
  if (state.feed.some((item) => item.id === id)) return; // duplicate push
  state.feed.unshift({
    id,
    at,
    name: event.name,
    from: event.from,
    value: event.value,
    acknowledged: false,
  });
  if (state.feed.length > 200) state.feed.pop();
}

export function acknowledge(state: ConsoleState, id: string): void {
  const item = state.feed.find((f) => f.id === id);
  if (item) item.acknowledged = true;
}

export function mergeAudit(state: ConsoleState, records: AuditRecord[], next: number): void {
  const have = new Set(state.audit.map((r) => r.n));
  for (const record of records) {
    if (!have.has(record.n)) state.audit.push(record);
  }
  state.audit.sort((a, b) => a.n - b.n);
  if (state.audit.length > 500) state.audit = state.audit.slice(-500);
  state.auditNext = Math.max(state.auditNext, next);
}

export interface AuditFilter {
  kind?: string;
  actor?: string;
  since?: number;
}

export function filteredAudit(state: ConsoleState, filter: AuditFilter): AuditRecord[] {
  return state.audit.filter(
    (r) =>
      (!filter.kind || r.kind === filter.kind) &&
      (!filter.actor || r.actor[0] === filter.actor) &&
      (filter.since === undefined || r.t >= filter.since),
  );
}
