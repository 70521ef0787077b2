// Browser entry: mounts the console and wires DOM events to actions.
// All state lives in store.ts; all wire traffic in gateway.ts.

import { examineAction, removeFlow, subscribeAction } from "./actions.js";
import { GatewayClient, GatewayError } from "./gateway.js";
import {
  acknowledge,
  initialState,
  mergeAudit,
  pushEvent,
  setComponents,
  type AuditFilter,
} from "./store.js";
import {
  renderAudit,
  renderComponentList,
  renderDenial,
  renderFeed,
  renderOfflineBanner,
  renderRemoveFlow,
  renderSession,
} from "./views.js";
import type { Triple } from "./types.js";

const params = new URLSearchParams(location.search);
const gatewayUrl = params.get("gateway") ?? `http://${location.hostname}:7742`;
const token = params.get("token") ?? "";

const client = new GatewayClient(gatewayUrl, token);
const state = initialState();
const auditFilter: AuditFilter = {};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function render(): void {
  el("session").innerHTML = renderSession(state);
  el("banner").innerHTML = state.online ? "" : renderOfflineBanner();
  el("components").innerHTML = renderComponentList(state, Date.now());
  el("feed").innerHTML = renderFeed(state.feed);
  el("remove-flow").innerHTML = renderRemoveFlow(state.removeFlow);
  el("audit").innerHTML = renderAudit(state, auditFilter);
  el("denial").innerHTML = state.lastDenial ? renderDenial(state.lastDenial) : "";
}

async function refresh(): Promise<void> {
  try {
    setComponents(state, await client.components());
    const page = await client.audit({ after: state.auditNext });
    mergeAudit(state, page.records, page.next);
    state.online = true;
  } catch (err) {
    if (err instanceof GatewayError) state.online = false;
    else throw err;
  }
  render();
}

function cardTriple(element: HTMLElement): Triple {
  const key = element.closest<HTMLElement>(".card")?.dataset.key;
  if (!key) throw new Error("action outside a card");
  return key.split("@") as Triple;
}

async function onClick(event: MouseEvent): Promise<void> {
  const target = event.target as HTMLElement;
  const action = target.dataset.action;
  if (!action) return;
  if (action === "examine") {
    await examineAction(client, state, cardTriple(target), target.dataset.prop ?? "");
  } else if (action === "subscribe") {
    await subscribeAction(client, state, cardTriple(target), target.dataset.event ?? "");
  } else if (action === "remove") {
    await removeFlow(client, state, cardTriple(target), () =>
      window.confirm("Remove this component? Its base traffic stops both ways."),
    );
  } else if (action === "ack") {
    const id = target.closest<HTMLElement>(".feed-item")?.dataset.id;
    if (id) acknowledge(state, id);
  }
  render();
}

async function start(): Promise<void> {
  document.body.addEventListener("click", (e) => void onClick(e));
  el("audit-kind").addEventListener("change", (e) => {
    auditFilter.kind = (e.target as HTMLSelectElement).value || undefined;
    render();
  });
  try {
    state.session = await client.session();
    state.online = true;
  } catch {
    state.online = false;
  }
  render();
  await refresh();
  setInterval(() => void refresh(), 3000);

  // one push channel per session; reconnect with backoff
  for (;;) {
    try {
      await client.stream((pushed) => {
        pushEvent(state, pushed, Date.now());
        render();
      });
    } catch {
      state.online = false;
      render();
    }
    await new Promise((resolve) => setTimeout(resolve, 1000));
  }
}

void start();
