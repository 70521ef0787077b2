import { describe, expect, it } from "vitest";

import { examineAction, removeFlow, subscribeAction } from "../src/actions.js";
import { GatewayClient } from "../src/gateway.js";
import { initialState, setComponents } from "../src/store.js";
import type { Triple } from "../src/types.js";

const BUYER: Triple = ["buyer", "store7", "B"];

/** GatewayClient speaking to a canned fetch, preserving the request log. */
function fakeClient(routes: Record<string, (body: any) => unknown>): GatewayClient {
  const fetchImpl = (async (url: any, init?: any) => {
    const path = String(url).replace("http://gw", "").split("?")[0];
    const handler = routes[path!];
    if (!handler) return new Response("{}", { status: 404 });
    const body = init?.body ? JSON.parse(init.body) : {};
    return new Response(JSON.stringify(handler(body)), {
      status: 200,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
  return new GatewayClient("http://gw", "tok", fetchImpl);
}

function seeded() {
  const state = initialState();
  setComponents(state, [{ triple: BUYER, law: "buyer" }]);
  return state;
}

describe("examine", () => {
  it("success records the value; exactly one request", async () => {
    const client = fakeClient({
      "/examine": (body) => ({ ok: true, property: body.property, value: 640, t: 1 }),
    });
    const state = seeded();
    const outcome = await examineAction(client, state, BUYER, "budget", () => 99);
    expect(outcome).toEqual({ ok: true, rendered: "640" });
    expect(state.cards["buyer@store7@B"]!.values["budget"]).toEqual({ value: 640, fetchedAt: 99 });
    expect(client.requestLog).toHaveLength(1);
  });

  it("denial lands in lastDenial and renders its reason", async () => {
    const client = fakeClient({
      "/examine": () => ({ ok: false, denial: { reason: "purview" } }),
    });
    const state = seeded();
    const outcome = await examineAction(client, state, BUYER, "budget");
    expect(outcome.ok).toBe(false);
    expect(outcome.rendered).toBe("purview");
    expect(state.lastDenial?.reason).toBe("purview");
  });
});

describe("subscribe", () => {
  it("tracks live subscriptions once", async () => {
    const client = fakeClient({ "/subscribe": () => ({ ok: true }) });
    const state = seeded();
    await subscribeAction(client, state, BUYER, "lawBudget");
    await subscribeAction(client, state, BUYER, "lawBudget");
    expect(state.subscriptions).toEqual(["lawBudget@buyer@store7@B"]);
    expect(client.requestLog).toHaveLength(2); // one request per user action
  });
});

describe("remove flow", () => {
  it("acquire -> confirm -> invoke; token consumed on success", async () => {
    const calls: string[] = [];
    const client = fakeClient({
      "/invoke": (body) => {
        calls.push(body.operation);
        if (body.operation === "acquire") return { ok: true, operation: "acquire", result: "granted" };
        return { ok: true, operation: "remove", result: "ok" };
      },
    });
    const steps = await removeFlow(client, seeded(), BUYER, () => true);
    expect(calls).toEqual(["acquire", "remove"]);
    expect(steps.map((s) => s.ok)).toEqual([true, true]);
  });

  it("held token reports the holder and stops", async () => {
    const client = fakeClient({
      "/invoke": () => ({ ok: true, operation: "acquire", result: ["held", ["mgr2", "store7", "M"]] }),
    });
    const steps = await removeFlow(client, seeded(), BUYER, () => true);
    expect(steps).toHaveLength(1);
    expect(steps[0]!.outcome).toContain("mgr2@store7");
    expect(steps[0]!.ok).toBe(false);
  });

  it("role denial on acquire surfaces the audit reason", async () => {
    const client = fakeClient({
      "/invoke": () => ({ ok: false, denial: { reason: "role" } }),
    });
    const state = seeded();
    const steps = await removeFlow(client, state, BUYER, () => true);
    expect(steps[0]!.outcome).toContain("role");
    expect(state.lastDenial?.reason).toBe("role");
  });

  it("cancelled confirm releases the token", async () => {
    const calls: string[] = [];
    const client = fakeClient({
      "/invoke": (body) => {
        calls.push(body.operation);
        return { ok: true, operation: body.operation, result: body.operation === "acquire" ? "granted" : "ok" };
      },
    });
    const steps = await removeFlow(client, seeded(), BUYER, () => false);
    expect(calls).toEqual(["acquire", "release"]);
    expect(steps[1]!.label).toContain("release");
  });
});
