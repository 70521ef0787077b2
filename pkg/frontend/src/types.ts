// Wire types for the manager gateway. These mirror the JSON contract
// golden-filed in docs/gateway-schema.json; the console has no other
// channel into the system.

export type Triple = [string, string, string];

export interface SessionInfo {
  triple: Triple;
  role: string;
}

export interface ComponentInfo {
  triple: Triple;
  law: string;
}

export interface Denial {
  reason: string;
  detail?: unknown;
  t?: number;
}

export type ExamineResult =
  | { ok: true; property: string; value: unknown; t: number }
  | { ok: false; denial: Denial };

export type InvokeResult =
  | { ok: true; operation: string; result: unknown }
  | { ok: false; denial: Denial };

export type SubscribeResult = { ok: true } | { ok: false; denial: Denial };

export interface PushedEvent {
  type: "event";
  name: string;
  from: Triple;
  value: unknown;
}

export interface AuditRecord {
  n: number;
  t: number;
  actor: Triple;
  kind: string;
  detail: unknown;
}

export interface AuditPage {
  records: AuditRecord[];
  next: number;
}

export function tripleKey(t: Triple): string {
  return t.join("@");
}

export function sameTriple(a: Triple, b: Triple): boolean {
  return a[0] === b[0] && a[1] === b[1] && a[2] === b[2];
}
