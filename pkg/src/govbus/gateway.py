"""Manager gateway: HTTP request/reply plus a server-push event stream.

Every session is itself an agent under the management law; the gateway
holds no authority of its own. Requests are injected as management
messages from the session's agent, replies are correlated back, and
law denials are surfaced by mirroring the audit trail. The push
channel is server-sent events with a heartbeat comment.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import TYPE_CHECKING, Any
from urllib.parse import parse_qs, urlparse

from .audit import AuditRecord
from .runtime import AdoptionError
from .values import Payload, Triple, value_to_json

if TYPE_CHECKING:
    from .service import LiveRuntime, ServiceConfig


@dataclass
class _Waiter:
    event: threading.Event = field(default_factory=threading.Event)
    result: dict[str, Any] | None = None

    def fulfill(self, result: dict[str, Any]) -> None:
        self.result = result
        self.event.set()


class Session:
    """One authenticated manager identity and its live agent."""

    def __init__(self, token: str, triple: Triple, role: str):
        self.token = token
        self.triple = triple
        self.role = role
        self.streams: list[queue.Queue] = []
        self._waiters: dict[tuple[Triple, str], list[_Waiter]] = {}
        self._lock = threading.Lock()

    def expect(self, target: Triple, name: str) -> _Waiter:
        waiter = _Waiter()
        with self._lock:
            self._waiters.setdefault((target, name), []).append(waiter)
        return waiter

    def settle(self, target: Triple, name: str, result: dict[str, Any]) -> bool:
        with self._lock:
            waiters = self._waiters.get((target, name))
            if not waiters:
                return False
            waiter = waiters.pop(0)
        waiter.fulfill(result)
        return True

    def abandon(self, target: Triple, name: str, waiter: _Waiter) -> None:
        with self._lock:
            waiters = self._waiters.get((target, name), [])
            if waiter in waiters:
                waiters.remove(waiter)

    def push_event(self, data: dict[str, Any]) -> None:
        for q in list(self.streams):
            q.put(data)

    def on_deliver(self, payload: Payload, sender: Triple) -> None:
        if payload.kind == "reply":
            name, value = payload.args[0], payload.args[1]
            self.settle(sender, name, {"ok": True, "value": value_to_json(value)})
        elif payload.kind == "event":
            name, value = payload.args[0], payload.args[1]
            self.push_event(
                {"type": "event", "name": name, "from": list(sender), "value": value_to_json(value)}
            )


class GatewayServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, runtime: "LiveRuntime", config: "ServiceConfig"):
        self.runtime = runtime
        self.config = config
        self.sessions: dict[str, Session] = {}
        super().__init__(config.gateway_listen, _Handler)
        for token, info in config.gateway_tokens.items():
            session = Session(token, info.triple, info.role)
            try:
                runtime.adopt(session.on_deliver, "M", runtime.ca.issue(info.triple))
            except AdoptionError as exc:
                raise ValueError(f"gateway token {token!r}: {exc.reason}") from exc
            self.sessions[token] = session
        runtime.audit.subscribe(self._on_audit)

    @property
    def port(self) -> int:
        return self.server_address[1]

    # --- audit mirroring: law denials become structured responses ---

    def _on_audit(self, record: AuditRecord) -> None:
        if record.kind != "rejection":
            return
        detail = record.detail
        if not isinstance(detail, tuple) or not detail:
            return
        reason = detail[0]
        denial = {"ok": False, "denial": {"reason": reason, "detail": value_to_json(detail[1:]),
                                          "t": record.t}}
        if reason == "role":
            # recorded at the manager's own controller: (role, form, msg, peer)
            session = self._session_for(record.actor)
            if session is not None and len(detail) >= 4:
                msg, target = detail[2], detail[3]
                name = self._request_name(msg)
                if name is not None and isinstance(target, tuple):
                    session.settle(target, name, denial)
            return
        # recorded at the target's controller; the requester is in the detail
        requester = next((p for p in detail[1:] if _is_triple(p) and p[2] == "M"), None)
        payload = next((p for p in detail[1:] if isinstance(p, Payload)), None)
        if requester is None:
            return
        session = self._session_for(requester)
        if session is None:
            return
        if reason == "purview" and payload is not None:
            name = self._request_name(payload)
            if name is not None:
                session.settle(record.actor, name, denial)
        elif reason in ("no-token", "lock-held", "release-not-holder") and len(detail) >= 2:
            session.settle(record.actor, str(detail[1]), denial)
        elif reason in ("unknown-property", "unknown-operation", "unknown-event") and len(detail) >= 2:
            session.settle(record.actor, str(detail[1]), denial)

    def _session_for(self, triple: Triple) -> Session | None:
        for session in self.sessions.values():
            if session.triple == triple:
                return session
        return None

    @staticmethod
    def _request_name(msg: Any) -> str | None:
        """The correlation key a request will be answered under."""
        if isinstance(msg, Payload) and msg.args:
            if msg.kind == "invoke" and len(msg.args) >= 2:
                return str(msg.args[0])  # acquire/release reply under the verb
            return str(msg.args[0])
        return None


def _is_triple(value: Any) -> bool:
    return isinstance(value, tuple) and len(value) == 3 and all(isinstance(p, str) for p in value)


class _Handler(BaseHTTPRequestHandler):
    server: GatewayServer
    protocol_version = "HTTP/1.1"

    def log_message(self, format: str, *args: Any) -> None:
        pass  # quiet; the audit trail is the record

    # --- plumbing ---

    def _session(self) -> Session | None:
        header = self.headers.get("Authorization", "")
        if header.startswith("Bearer "):
            return self.server.sessions.get(header[len("Bearer "):].strip())
        return None

    def _json(self, status: int, data: dict[str, Any]) -> None:
        raw = json.dumps(data).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(raw)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(raw)

    def _body(self) -> dict[str, Any] | None:
        try:
            length = int(self.headers.get("Content-Length", "0"))
            data = json.loads(self.rfile.read(length) or b"{}")
            return data if isinstance(data, dict) else None
        except (ValueError, json.JSONDecodeError):
            return None

    # --- request / reply round trip ---

    def _roundtrip(self, session: Session, target: Triple, payload: Payload, wait_name: str) -> dict[str, Any]:
        runtime = self.server.runtime
        waiter = session.expect(target, wait_name)
        try:
            accepted = runtime.send(session.triple, target, payload)
        except KeyError:
            session.abandon(target, wait_name, waiter)
            return {"ok": False, "denial": {"reason": "unknown-target"}}
        if not waiter.event.wait(self.server.config.request_timeout):
            session.abandon(target, wait_name, waiter)
            reason = "dropped" if accepted else "not-forwarded"
            return {"ok": False, "denial": {"reason": f"timeout ({reason})"}}
        return waiter.result or {"ok": False, "denial": {"reason": "internal"}}

    def _fire_and_watch(self, session: Session, target: Triple, payload: Payload, wait_name: str) -> dict[str, Any]:
        """Send, then wait only briefly for a denial; silence is success."""
        runtime = self.server.runtime
        waiter = session.expect(target, wait_name)
        try:
            accepted = runtime.send(session.triple, target, payload)
        except KeyError:
            session.abandon(target, wait_name, waiter)
            return {"ok": False, "denial": {"reason": "unknown-target"}}
        if waiter.event.wait(self.server.config.denial_wait):
            return waiter.result or {"ok": True}
        session.abandon(target, wait_name, waiter)
        if not accepted:
            return {"ok": False, "denial": {"reason": "not-forwarded"}}
        return {"ok": True}

    @staticmethod
    def _target(data: dict[str, Any]) -> Triple | None:
        t = data.get("target")
        if isinstance(t, list) and len(t) == 3 and all(isinstance(p, str) for p in t):
            return (t[0], t[1], t[2])
        return None

    # --- HTTP verbs ---

    def do_GET(self) -> None:
        url = urlparse(self.path)
        if url.path == "/healthz":
            runtime = self.server.runtime
            self._json(200, {
                "ok": True,
                "agents": len(runtime.agents()),
                "pools": len(runtime.pools),
                "rootLaw": runtime.tree.node(runtime.tree.root).digest.hex,
            })
            return
        session = self._session()
        if session is None:
            self._json(401, {"ok": False, "error": "missing or unknown bearer token"})
            return
        if url.path == "/session":
            self._json(200, {"triple": list(session.triple), "role": session.role})
        elif url.path == "/components":
            components = [
                {"triple": list(triple), "law": law}
                for triple, law in sorted(self.server.runtime.agents())
                if triple[2] == "B" and triple[1] == session.triple[1]
            ]
            self._json(200, {"components": components})
        elif url.path == "/audit":
            if session.role not in self.server.config.audit_roles:
                self._json(403, {"ok": False, "error": "role may not read the audit trail"})
                return
            params = parse_qs(url.query)
            after = int(params.get("after", ["0"])[0])
            limit = int(params.get("limit", ["200"])[0])
            kind = params.get("kind", [None])[0]
            actor = params.get("actor", [None])[0]
            records = self.server.runtime.audit.snapshot()
            out = []
            for i, record in enumerate(records):
                if i < after:
                    continue
                if kind and record.kind != kind:
                    continue
                if actor and record.actor[0] != actor:
                    continue
                out.append({"n": i, **record.to_json()})
                if len(out) >= limit:
                    break
            self._json(200, {"records": out, "next": len(records)})
        elif url.path == "/events":
            self._stream(session)
        else:
            self._json(404, {"ok": False, "error": f"no route {url.path}"})

    def do_POST(self) -> None:
        session = self._session()
        if session is None:
            self._json(401, {"ok": False, "error": "missing or unknown bearer token"})
            return
        data = self._body()
        if data is None:
            self._json(400, {"ok": False, "error": "body must be a JSON object"})
            return
        target = self._target(data)
        if target is None:
            self._json(400, {"ok": False, "error": "target must be a [name, branch, layer] triple"})
            return
        path = urlparse(self.path).path
        if path == "/examine":
            prop = data.get("property")
            if not isinstance(prop, str):
                self._json(400, {"ok": False, "error": "property must be a string"})
                return
            result = self._roundtrip(session, target, Payload("examine", (prop,)), prop)
            if result.get("ok"):
                result = {"ok": True, "property": prop, "value": result["value"],
                          "t": self.server.runtime.clock.now()}
            self._json(200, result)
        elif path == "/invoke":
            operation = data.get("operation")
            if not isinstance(operation, str):
                self._json(400, {"ok": False, "error": "operation must be a string"})
                return
            args = tuple(data.get("args", ()))
            payload = Payload("invoke", (operation,) + args)
            # acquire/release replies come back under the verb itself
            result = self._roundtrip(session, target, payload, operation)
            if result.get("ok"):
                result = {"ok": True, "operation": operation, "result": result["value"]}
            self._json(200, result)
        elif path in ("/subscribe", "/unsubscribe"):
            event = data.get("event")
            if not isinstance(event, str):
                self._json(400, {"ok": False, "error": "event must be a string"})
                return
            form = "subscribe" if path == "/subscribe" else "unsubscribe"
            result = self._fire_and_watch(session, target, Payload(form, (event,)), event)
            self._json(200, result)
        else:
            self._json(404, {"ok": False, "error": f"no route {path}"})

    # --- server-sent events ---

    def _stream(self, session: Session) -> None:
        q: queue.Queue = queue.Queue()
        session.streams.append(q)
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            # chunked framing so strict clients surface each write
            # immediately instead of buffering a close-delimited body
            self.send_header("Transfer-Encoding", "chunked")
            self.end_headers()
            heartbeat = self.server.config.heartbeat
            while True:
                try:
                    item = q.get(timeout=heartbeat)
                    payload = f"data: {json.dumps(item)}\n\n".encode("utf-8")
                except queue.Empty:
                    payload = b": hb\n\n"
                self.wfile.write(f"{len(payload):x}\r\n".encode("ascii") + payload + b"\r\n")
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            if q in session.streams:
                session.streams.remove(q)
