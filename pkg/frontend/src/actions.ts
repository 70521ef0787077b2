// User actions. Each maps 1:1 to gateway requests; the guarded remove
// is the one multi-step flow (acquire -> invoke -> release), and every
// law decision along the way lands in the flow log verbatim.

import type { GatewayClient } from "./gateway.js";
import type { ConsoleState, FlowStep } from "./store.js";
import { pushEvent, recordValue } from "./store.js";
import type { Triple } from "./types.js";

export async function examineAction(
  client: GatewayClient,
  state: ConsoleState,
  target: Triple,
  property: string,
  now: () => number = Date.now,
): Promise<{ ok: boolean; rendered: string }> {
  const result = await client.examine(target, property);
  if (result.ok) {
    recordValue(state, target, property, result.value, now());
    state.lastDenial = null;
    return { ok: true, rendered: String(result.value) };
  }
  state.lastDenial = result.denial;
  return { ok: false, rendered: result.denial.reason };
}

export async function subscribeAction(
  client: GatewayClient,
  state: ConsoleState,
  target: Triple,
  event: string,
): Promise<boolean> {
  const result = await client.subscribe(target, event);
  if (result.ok) {
    const key = `${event}@${target.join("@")}`;
    if (!state.subscriptions.includes(key)) state.subscriptions.push(key);
    return true;
  }
  state.lastDenial = result.denial;
  return false;
}

/**
 * The guarded remove flow: acquire the coordination token, invoke the
 * operation, release on failure paths. A successful remove consumes
 * the token server-side, so no release follows it.
 */
export async function removeFlow(
  client: GatewayClient,
  state: ConsoleState,
  target: Triple,
  confirm: () => boolean,
): Promise<FlowStep[]> {
  const steps: FlowStep[] = [];
  state.removeFlow = steps;
  const acquire = await client.invoke(target, "acquire", ["remove"]);
  if (!acquire.ok) {
    steps.push({ label: "acquire token", outcome: `denied (${acquire.denial.reason})`, ok: false });
    state.lastDenial = acquire.denial;
    return steps;
  }
  if (Array.isArray(acquire.result) && acquire.result[0] === "held") {
    const holder = acquire.result[1] as Triple;
    steps.push({ label: "acquire token", outcome: `held by ${holder[0]}@${holder[1]}`, ok: false });
    return steps;
  }
  steps.push({ label: "acquire token", outcome: String(acquire.result), ok: true });

  if (!confirm()) {
    const release = await client.invoke(target, "release", ["remove"]);
    steps.push({
      label: "cancelled, release token",
      outcome: release.ok ? String(release.result) : `denied (${release.denial.reason})`,
      ok: release.ok,
    });
    return steps;
  }

  const removal = await client.invoke(target, "remove");
  if (!removal.ok) {
    steps.push({ label: "invoke remove", outcome: `denied (${removal.denial.reason})`, ok: false });
    state.lastDenial = removal.denial;
    await client.invoke(target, "release", ["remove"]);
    steps.push({ label: "release token", outcome: "returned", ok: true });
    return steps;
  }
  steps.push({ label: "invoke remove", outcome: String(removal.result), ok: removal.result === "ok" });
  return steps;
}

export function onPushedEvent(state: ConsoleState, event: Parameters<typeof pushEvent>[1], at: number): void {
  pushEvent(state, event, at);
}
