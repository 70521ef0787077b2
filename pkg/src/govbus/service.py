"""The controller-service daemon: pools behind a TCP frame protocol.

Remote actors adopt controllers and send through them over
length-prefixed JSON frames; deliveries are pushed back on the same
connection. Envelopes between pools travel over per-pool queues so
each pool processes its agents' events strictly serially without
cross-pool lock cycles. The manager gateway (gateway.py) shares the
same runtime in-process.
"""

from __future__ import annotations

import json
import logging
import queue
import socket
import socketserver
import threading
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .audit import AuditTrail
from .certs import CertAuthority, Certificate, CertVerifier
from .hierarchy import LawTree, build_ensemble, load_manifest
from .runtime import AdoptionError, ControllerPool, Envelope, Network, WallClock
from .values import Payload, Triple, value_from_json, value_to_json
from .wire import FrameDecoder, FrameError, check_frame, encode_frame, frame

logger = logging.getLogger(__name__)


@dataclass
class TokenInfo:
    triple: Triple
    role: str


@dataclass
class ServiceConfig:
    ensemble: Path
    listen: tuple[str, int] = ("127.0.0.1", 0)
    gateway_listen: tuple[str, int] = ("127.0.0.1", 0)
    pools: int = 2
    ca_seed: str = "service-ca"
    gateway_tokens: dict[str, TokenInfo] = field(default_factory=dict)
    audit_file: Path | None = None
    audit_roles: tuple[str, ...] = ("operator", "observer")
    inflow_window: float = 60.0
    simulation: bool = False
    tls: bool = False  # reserved; transport protection is not implemented in v1
    heartbeat: float = 1.0
    request_timeout: float = 5.0
    denial_wait: float = 0.4

    @classmethod
    def from_json(cls, data: dict, base: Path | None = None) -> "ServiceConfig":
        root = base or Path(".")
        tokens = {
            token: TokenInfo(tuple(info["triple"]), info.get("role", "observer"))
            for token, info in data.get("gateway_tokens", {}).items()
        }
        if data.get("tls"):
            raise ValueError("tls is a reserved flag; transport protection is not available in v1")
        return cls(
            ensemble=root / data["ensemble"],
            listen=tuple(data.get("listen", ("127.0.0.1", 0))),  # type: ignore[arg-type]
            gateway_listen=tuple(data.get("gateway_listen", ("127.0.0.1", 0))),  # type: ignore[arg-type]
            pools=int(data.get("pools", 2)),
            ca_seed=str(data.get("ca_seed", "service-ca")),
            gateway_tokens=tokens,
            audit_file=(root / data["audit_file"]) if data.get("audit_file") else None,
            audit_roles=tuple(data.get("audit_roles", ("operator", "observer"))),
            inflow_window=float(data.get("inflow_window", 60.0)),
            simulation=bool(data.get("simulation", False)),
            heartbeat=float(data.get("heartbeat", 1.0)),
            request_timeout=float(data.get("request_timeout", 5.0)),
            denial_wait=float(data.get("denial_wait", 0.4)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ServiceConfig":
        path = Path(path)
        return cls.from_json(json.loads(path.read_text("utf-8")), base=path.parent)


class LiveRuntime:
    """Pools, queued inter-pool transport and the obligation ticker."""

    TICK_INTERVAL = 0.05

    def __init__(self, config: ServiceConfig, *, verifier: CertVerifier | None = None):
        self.config = config
        sources = load_manifest(config.ensemble)
        tree, diags = build_ensemble(sources)
        if tree is None:
            raise ValueError("ensemble does not build: " + "; ".join(str(d) for d in diags))
        self.tree: LawTree = tree
        self.clock = WallClock()
        self.audit = AuditTrail(config.audit_file)
        self.ca = CertAuthority.deterministic(config.ca_seed)
        self.network = Network(transport=self._enqueue)
        self._queues: dict[str, queue.Queue] = {}
        self.pools: list[ControllerPool] = []
        for i in range(max(1, config.pools)):
            pool = ControllerPool(
                f"p{i}",
                tree,
                self.network,
                verifier=verifier or self.ca.verifier(),
                clock=self.clock,
                audit=self.audit,
            )
            self.pools.append(pool)
            self._queues[pool.pool_id] = queue.Queue()
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()

    def _enqueue(self, env: Envelope, pool: ControllerPool) -> None:
        self._queues[pool.pool_id].put(env)

    def pool_for(self, triple: Triple) -> ControllerPool:
        idx = zlib.crc32("|".join(triple).encode("utf-8")) % len(self.pools)
        return self.pools[idx]

    def pool_of(self, triple: Triple) -> ControllerPool | None:
        pool_id = self.network.index.get(triple)
        return self.network.pools.get(pool_id) if pool_id else None

    def adopt(self, endpoint, law: str, cert: Certificate, mi_stub=None) -> Triple:
        return self.pool_for(cert.triple).adopt(endpoint, law, cert, mi_stub)

    def send(self, agent: Triple, receiver: Triple, payload: Payload) -> bool:
        pool = self.pool_of(agent)
        if pool is None:
            raise KeyError(f"unknown agent {agent}")
        return pool.send(agent, receiver, payload)

    def agents(self) -> list[tuple[Triple, str]]:
        out: list[tuple[Triple, str]] = []
        for pool in self.pools:
            out.extend((a.id, a.leaf_law) for a in pool.agents.values())
        return out

    def start(self) -> None:
        for pool in self.pools:
            t = threading.Thread(target=self._worker, args=(pool,), daemon=True,
                                 name=f"pool-{pool.pool_id}")
            t.start()
            self._threads.append(t)
        ticker = threading.Thread(target=self._ticker, daemon=True, name="obligations")
        ticker.start()
        self._threads.append(ticker)

    def _worker(self, pool: ControllerPool) -> None:
        q = self._queues[pool.pool_id]
        while not self._stop.is_set():
            try:
                env = q.get(timeout=0.1)
            except queue.Empty:
                continue
            try:
                pool.receive_envelope(env)
            except Exception:  # a bad envelope must not kill the pool
                logger.exception("envelope processing failed")

    def _ticker(self) -> None:
        while not self._stop.is_set():
            now = self.clock.now()
            for pool in self.pools:
                pool.tick(now)
            self._stop.wait(self.TICK_INTERVAL)

    def stop(self) -> None:
        self._stop.set()
        for t in self._threads:
            t.join(timeout=1)
        self.audit.close()


class _Connection(socketserver.BaseRequestHandler):
    """One actor connection: adopt, send, receive pushed deliveries."""

    server: "CoSServer"

    def setup(self) -> None:
        self.decoder = FrameDecoder()
        self.agents: dict[Triple, None] = {}
        self.write_lock = threading.Lock()

    def push(self, body: dict[str, Any]) -> None:
        try:
            with self.write_lock:
                self.request.sendall(encode_frame(body))
        except OSError:
            pass  # connection gone; agent stays adopted

    def _deliver(self, agent: Triple, payload: Payload, sender: Triple) -> None:
        if payload.kind == "reply":
            body = frame("examineReply", agent=list(agent), sender=list(sender),
                         name=payload.args[0], value=value_to_json(payload.args[1]))
        elif payload.kind == "event":
            body = frame("event", agent=list(agent), sender=list(sender),
                         name=payload.args[0], value=value_to_json(payload.args[1]))
        else:
            body = frame("envelope", agent=list(agent), sender=list(sender),
                         payload=value_to_json(payload))
        self.push(body)

    def handle(self) -> None:
        while True:
            try:
                data = self.request.recv(65536)
            except OSError:
                return
            if not data:
                return
            try:
                bodies = self.decoder.feed(data)
            except FrameError as exc:
                self.push(frame("error", message=str(exc)))
                return  # framing is lost; drop the connection
            for body in bodies:
                if not self._dispatch(body):
                    return

    def _dispatch(self, body: dict[str, Any]) -> bool:
        problem = check_frame(body)
        if problem:
            self.push(frame("error", message=problem))
            # a version mismatch is unrecoverable; unknown kinds are not
            return "version" not in problem
        kind = body["kind"]
        if kind == "adopt":
            try:
                cert = Certificate.from_json(body["cert"])
                law = str(body["law"])
            except (KeyError, ValueError, TypeError) as exc:
                self.push(frame("error", message=f"bad adopt frame: {exc}"))
                return True
            triple = cert.triple
            try:
                agent = self.server.runtime.adopt(
                    lambda payload, sender, a=triple: self._deliver(a, payload, sender),
                    law,
                    cert,
                )
            except AdoptionError as exc:
                self.push(frame("error", message=f"adoption refused: {exc.reason}"))
                return True
            self.agents[agent] = None
            self.push(frame("ack",**{"for": "adopt"}, agent=list(agent)))
            return True
        if kind == "send":
            agent = tuple(body["agent"]) if "agent" in body else next(iter(self.agents), None)
            if agent is None or agent not in self.agents:
                self.push(frame("error", message="unknown agent (adopt first)"))
                return True
            try:
                receiver = tuple(body["to"])
                payload = value_from_json(body["payload"])
                if not isinstance(payload, Payload) or len(receiver) != 3:
                    raise ValueError("send needs a receiver triple and a payload object")
            except (KeyError, ValueError, TypeError) as exc:
                self.push(frame("error", message=f"bad send frame: {exc}"))
                return True
            accepted = self.server.runtime.send(agent, receiver, payload)  # type: ignore[arg-type]
            self.push(frame("ack", **{"for": "send"}, accepted=accepted))
            return True
        self.push(frame("error", message=f"unexpected frame kind {kind!r}"))
        return True


class CoSServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, runtime: LiveRuntime, address: tuple[str, int]):
        self.runtime = runtime
        super().__init__(address, _Connection)

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve_cos(config: ServiceConfig) -> tuple[LiveRuntime, CoSServer, "object"]:
    """Start the runtime, the frame service and the manager gateway.

    Returns (runtime, cos_server, gateway_server); servers run on
    daemon threads until .shutdown().
    """
    from .gateway import GatewayServer

    runtime = LiveRuntime(config)
    runtime.start()
    cos = CoSServer(runtime, config.listen)
    threading.Thread(target=cos.serve_forever, daemon=True, name="cos-tcp").start()
    gateway = GatewayServer(runtime, config)
    threading.Thread(target=gateway.serve_forever, daemon=True, name="gateway-http").start()
    return runtime, cos, gateway


class CoSClient:
    """Blocking client for the frame protocol (tests, demos, remote
    actors). A background reader keeps pushed deliveries flowing, so
    several threads may wait on one client."""

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.sock = socket.create_connection((host, port))
        self.timeout = timeout
        self.decoder = FrameDecoder()
        self.pushed: list[dict[str, Any]] = []
        self._cond = threading.Condition()
        self._send_lock = threading.Lock()
        self._closed = False
        threading.Thread(target=self._read_loop, daemon=True).start()

    def _read_loop(self) -> None:
        while True:
            try:
                data = self.sock.recv(65536)
            except OSError:
                data = b""
            if not data:
                with self._cond:
                    self._closed = True
                    self._cond.notify_all()
                return
            try:
                frames = self.decoder.feed(data)
            except FrameError:
                frames = []
            with self._cond:
                self.pushed.extend(frames)
                self._cond.notify_all()

    def request(self, body: dict[str, Any], wait_kinds=("ack", "error")) -> dict[str, Any]:
        with self._send_lock:
            self.sock.sendall(encode_frame(body))
        return self.wait(wait_kinds, timeout=self.timeout)

    def wait(self, kinds=("ack", "error"), timeout: float | None = None) -> dict[str, Any]:
        import time as _time

        deadline = None if timeout is None else _time.monotonic() + timeout
        with self._cond:
            while True:
                for body in self.pushed:
                    if body["kind"] in kinds:
                        self.pushed.remove(body)
                        return body
                if self._closed:
                    raise ConnectionError("connection closed")
                remaining = None if deadline is None else deadline - _time.monotonic()
                if remaining is not None and remaining <= 0:
                    raise TimeoutError("timed out waiting for " + "/".join(kinds))
                self._cond.wait(remaining)

    def close(self) -> None:
        self.sock.close()
