// Gateway client. Every console action is exactly one HTTP request
// here; the request log exists so tests can hold us to that.

import type {
  AuditPage,
  ComponentInfo,
  ExamineResult,
  InvokeResult,
  PushedEvent,
  SessionInfo,
  SubscribeResult,
  Triple,
} from "./types.js";

export interface RequestLogEntry {
  method: string;
  path: string;
  body?: unknown;
}

export class GatewayError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

export class GatewayClient {
  readonly requestLog: RequestLogEntry[] = [];

  constructor(
    readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.requestLog.push({ method, path, body });
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: {
          Authorization: `Bearer ${this.token}`,
          ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
        },
        body: body !== undefined ? JSON.stringify(body) : undefined,
      });
    } catch (err) {
      throw new GatewayError(`gateway unreachable: ${String(err)}`);
    }
    if (response.status === 401 || response.status === 403) {
      throw new GatewayError(`not authorized (${response.status})`, response.status);
    }
    if (!response.ok) {
      throw new GatewayError(`gateway error ${response.status}`, response.status);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ ok: boolean; agents: number; pools: number; rootLaw: string }> {
    return this.call("GET", "/healthz");
  }

  session(): Promise<SessionInfo> {
    return this.call("GET", "/session");
  }

  async components(): Promise<ComponentInfo[]> {
    const data = await this.call<{ components: ComponentInfo[] }>("GET", "/components");
    return data.components;
  }

  examine(target: Triple, property: string): Promise<ExamineResult> {
    return this.call("POST", "/examine", { target, property });
  }

  invoke(target: Triple, operation: string, args: unknown[] = []): Promise<InvokeResult> {
    return this.call("POST", "/invoke", { target, operation, args });
  }

  subscribe(target: Triple, event: string): Promise<SubscribeResult> {
    return this.call("POST", "/subscribe", { target, event });
  }

  unsubscribe(target: Triple, event: string): Promise<SubscribeResult> {
    return this.call("POST", "/unsubscribe", { target, event });
  }

  audit(params: { after?: number; kind?: string; actor?: string; limit?: number } = {}): Promise<AuditPage> {
    const q = new URLSearchParams();
    if (params.after !== undefined) q.set("after", String(params.after));
    if (params.kind) q.set("kind", params.kind);
    if (params.actor) q.set("actor", params.actor);
    if (params.limit !== undefined) q.set("limit", String(params.limit));
    const qs = q.toString();
    return this.call("GET", "/audit" + (qs ? `?${qs}` : ""));
  }

  /** Open the server-push channel; resolves when the stream ends. */
  async stream(
    onEvent: (event: PushedEvent) => void,
    options: { signal?: AbortSignal; onHeartbeat?: () => void } = {},
  ): Promise<void> {
    this.requestLog.push({ method: "GET", path: "/events" });
    const response = await this.fetchImpl(this.baseUrl + "/events", {
      headers: { Authorization: `Bearer ${this.token}` },
      signal: options.signal,
    });
    if (!response.ok || !response.body) {
      throw new GatewayError(`event stream failed (${response.status})`, response.status);
    }
    const parser = new SseParser();
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      for (const message of parser.feed(decoder.decode(value, { stream: true }))) {
        if (message.comment) {
          options.onHeartbeat?.();
          continue;
        }
        try {
          onEvent(JSON.parse(message.data) as PushedEvent);
        } catch {
          // a malformed push must not kill the channel
        }
      }
    }
  }
}

export interface SseMessage {
  data: string;
  comment: boolean;
}

/** Incremental parser for text/event-stream payloads. */
export class SseParser {
  private buffer = "";

  feed(chunk: string): SseMessage[] {
    this.buffer += chunk;
    const messages: SseMessage[] = [];
    for (;;) {
      const gap = this.buffer.indexOf("\n\n");
      if (gap < 0) return messages;
      const block = this.buffer.slice(0, gap);
      this.buffer = this.buffer.slice(gap + 2);
      const dataLines: string[] = [];
      let comment = false;
      for (const line of block.split("\n")) {
        if (line.startsWith(":")) {
          comment = true;
        } else if (line.startsWith("data:")) {
          dataLines.push(line.slice(5).trimStart());
        }
      }
      if (dataLines.length > 0) {
        messages.push({ data: dataLines.join("\n"), comment: false });
      } else if (comment) {
        messages.push({ data: "", comment: true });
      }
    }
  }
}
