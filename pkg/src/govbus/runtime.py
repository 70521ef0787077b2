"""Private controllers and controller pools.

Every agent is an (actor, controller) pair: the actor is a black box
reachable only through ``deliver``; the controller holds the control
state and runs the law ensemble over each regulated event. A pool
hosts many controllers, schedules enforced obligations on its clock,
and exchanges envelopes with other pools through a Network. Every
envelope carries the sender's law-hash chain; the receiving controller
verifies it before the arrival event is even considered.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any, Callable

from .audit import AuditRecord, AuditTrail
from .certs import Certificate, CertVerifier
from .engine import (
    ControllerContext,
    Forward,
    PathOutcome,
    RegulatedEvent,
    adopted_event,
    apply_ruling,
    arrived_event,
    obligation_event,
    op_to_record,
    sent_event,
)
from .hierarchy import LawTree, resolve
from .values import Payload, Triple, value_to_json

AgentId = Triple

# delivery callback an actor registers at adoption: (payload, sender triple)
ActorEndpoint = Callable[[Payload, Triple], None]
# management-interface stub: payload in, reply value out
MIStub = Callable[[Payload], Any]


class AdoptionError(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class Envelope:
    """The wire unit for all mediated traffic."""

    sender: Triple | None
    receiver: Triple
    payload: Payload
    chain: tuple[str, ...]  # sender's law-hash lineage, root first, leaf last
    seq: int
    sent_at: float

    def to_json(self) -> dict:
        return {
            "sender": list(self.sender) if self.sender else None,
            "receiver": list(self.receiver),
            "payload": value_to_json(self.payload),
            "chain": list(self.chain),
            "seq": self.seq,
            "sentAt": self.sent_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Envelope":
        from .values import value_from_json

        sender = tuple(data["sender"]) if data.get("sender") else None
        payload = value_from_json(data["payload"])
        if not isinstance(payload, Payload):
            raise ValueError("envelope payload must be a message")
        return cls(
            sender=sender,  # type: ignore[arg-type]
            receiver=tuple(data["receiver"]),  # type: ignore[arg-type]
            payload=payload,
            chain=tuple(data["chain"]),
            seq=int(data["seq"]),
            sent_at=data["sentAt"],
        )


def verify_chain(local: tuple[str, ...], remote: tuple[str, ...], shared_prefix: int = 1) -> bool:
    """Accept a remote hash chain iff it shares the required ancestry.

    The default demands the same root law; deployments may require a
    deeper shared prefix (up to identical leaf laws).
    """
    if not local or not remote:
        return False
    depth = max(1, shared_prefix)
    if len(local) < depth or len(remote) < depth:
        return False
    return local[:depth] == remote[:depth]


@dataclass
class Agent:
    id: AgentId
    leaf_law: str
    state: dict[str, Any]
    endpoint: ActorEndpoint
    mi_stub: MIStub | None = None


class TraceSink:
    """Receives structured runtime records; the simulator's Trace and
    the null default both implement this."""

    def add(self, rec: str, t: float, **fields: Any) -> None:  # pragma: no cover - trivial
        pass


class Clock:
    def now(self) -> float:  # pragma: no cover - trivial
        raise NotImplementedError


class ManualClock(Clock):
    def __init__(self, start: float = 0):
        self.time = start

    def now(self) -> float:
        return self.time


class WallClock(Clock):
    def now(self) -> float:
        import time

        return time.time()


class Network:
    """Agent registry plus the envelope transport between pools."""

    def __init__(self, transport: Callable[[Envelope, "ControllerPool"], None] | None = None):
        self.pools: dict[str, ControllerPool] = {}
        self.index: dict[AgentId, str] = {}
        self._transport = transport or (lambda env, pool: pool.receive_envelope(env))
        self._lock = threading.Lock()

    def attach(self, pool: "ControllerPool") -> None:
        self.pools[pool.pool_id] = pool

    def register(self, agent_id: AgentId, pool_id: str) -> None:
        with self._lock:
            if agent_id in self.index:
                raise AdoptionError(f"triple {agent_id} already adopted")
            self.index[agent_id] = pool_id

    def route(self, env: Envelope) -> bool:
        pool_id = self.index.get(env.receiver)
        if pool_id is None:
            return False
        self._transport(env, self.pools[pool_id])
        return True


class _Ctx(ControllerContext):
    """Controller context bound to one agent and one event."""

    def __init__(self, pool: "ControllerPool", agent: Agent, event: RegulatedEvent):
        super().__init__(agent.state, event)
        self.pool = pool
        self.agent = agent
        self.routed = 0
        self.forwarded = 0  # forward-op envelopes only; emits are side traffic

    def _send_envelope(self, receiver: Triple, payload: Payload, sender: Triple | None) -> None:
        pool = self.pool
        env = Envelope(
            sender=sender,
            receiver=receiver,
            payload=payload,
            chain=pool.tree.node(self.agent.leaf_law).chain,
            seq=pool.next_seq(self.agent.id, receiver),
            sent_at=pool.clock.now(),
        )
        if pool.network.route(env):
            self.routed += 1
            pool.trace.add("envelope", pool.clock.now(), **{"from": list(self.agent.id)},
                           to=list(receiver), payload=value_to_json(payload),
                           sender=list(sender) if sender else None,
                           seq=env.seq, chain=list(env.chain))
        else:
            pool.audit_event(self.agent.id, "deadLetter",
                             {"receiver": list(receiver), "payload": value_to_json(payload)})

    def dispatch_forward(self, payload: Payload | None, sender: Triple | None) -> None:
        if self.event.kind == "adopted":
            return  # forward is the adoption accept marker, not traffic
        receiver = self.event.peer
        if receiver is None or payload is None:
            self.pool.audit_event(self.agent.id, "deadLetter", {"reason": "no receiver for forward"})
            return
        routed_before = self.routed
        self._send_envelope(receiver, payload, sender)
        if self.routed > routed_before:
            self.forwarded += 1

    def dispatch_emit(self, target: Any, payload: Payload) -> None:
        if not (isinstance(target, tuple) and len(target) == 3):
            self.pool.audit_event(self.agent.id, "deadLetter", {"reason": "bad emit target", "target": value_to_json(target)})
            return
        self._send_envelope(target, payload, self.agent.id)

    def deliver_to_actor(self, payload: Payload | None) -> None:
        if payload is None:
            return
        self.pool.trace.add("deliver", self.pool.clock.now(), agent=list(self.agent.id),
                            payload=value_to_json(payload),
                            sender=list(self.event.sender) if self.event.sender else None)
        self.agent.endpoint(payload, self.event.sender)

    def deliver_to_mi(self, payload: Payload | None) -> None:
        if payload is None:
            return
        cap = payload.args[0] if payload.args else payload.kind
        requester = self.event.sender
        if self.agent.mi_stub is None:
            self.pool.audit_event(self.agent.id, "rejection", {"reason": "no MI", "cap": value_to_json(cap)})
            if requester is not None:
                self._send_envelope(requester, Payload("reply", (cap, "no-MI")), self.agent.id)
            return
        reply = self.agent.mi_stub(payload)
        self.pool.trace.add("mi", self.pool.clock.now(), agent=list(self.agent.id),
                            payload=value_to_json(payload), reply=value_to_json(reply))
        if requester is not None:
            self._send_envelope(requester, Payload("reply", (cap, reply)), self.agent.id)

    def impose(self, name: str, delay: float) -> None:
        self.pool.impose_obligation(self.agent.id, name, delay)

    def repeal(self, name: str) -> None:
        self.pool.repeal_obligation(self.agent.id, name)

    def audit(self, kind: str, detail: Any) -> None:
        self.pool.audit_event(self.agent.id, kind, detail)


class ControllerPool:
    """Hosts private controllers; every agent's events run strictly serially."""

    def __init__(
        self,
        pool_id: str,
        tree: LawTree,
        network: Network,
        *,
        verifier: CertVerifier,
        clock: Clock,
        audit: AuditTrail,
        trace: TraceSink | None = None,
        capacity: int | None = None,
        shared_prefix: int = 1,
        on_obligation: Callable[[float], None] | None = None,
    ):
        self.pool_id = pool_id
        self.tree = tree
        self.network = network
        self.verifier = verifier
        self.clock = clock
        self.audit = audit
        self.trace = trace or TraceSink()
        self.capacity = capacity
        self.shared_prefix = shared_prefix
        self.on_obligation = on_obligation
        self.agents: dict[AgentId, Agent] = {}
        self._seq: dict[tuple[AgentId, AgentId], int] = {}
        self._obligations: dict[tuple[AgentId, str], tuple[float, int]] = {}
        self._ob_heap: list[tuple[float, int, AgentId, str]] = []
        self._ob_counter = 0
        self._lock = threading.RLock()
        network.attach(self)

    # --- helpers ---

    def next_seq(self, sender: AgentId, receiver: AgentId) -> int:
        key = (sender, receiver)
        self._seq[key] = self._seq.get(key, 0) + 1
        return self._seq[key]

    def audit_event(self, actor: AgentId, kind: str, detail: Any) -> None:
        record = AuditRecord(self.clock.now(), actor, kind, detail)
        self.audit.append(record)
        self.trace.add("audit", record.t, actor=list(actor), kind=kind, detail=value_to_json(detail))

    def _run_event(self, agent: Agent, event: RegulatedEvent) -> _Ctx:
        outcome: PathOutcome = resolve(self.tree, agent.leaf_law, event, agent.state)
        self.trace.add(
            "event",
            self.clock.now(),
            agent=list(agent.id),
            kind=event.kind,
            payload=value_to_json(event.message) if event.message is not None else None,
            peer=list(event.peer) if event.peer else None,
            obligation=event.obligation,
            ruling=[op_to_record(op) for op in outcome.ruling.ops],
            diags=list(outcome.ruling.diagnostics),
        )
        for fe in outcome.filtered:
            self.audit_event(
                agent.id,
                "filterEvent",
                {"law": fe.law, "ancestor": fe.ancestor, "op": op_to_record(fe.op)},
            )
        ctx = _Ctx(self, agent, event)
        apply_ruling(outcome.ruling, ctx)
        for diag in ctx.diagnostics:
            self.trace.add("diag", self.clock.now(), agent=list(agent.id), message=diag)
        return ctx

    # --- public operations ---

    def adopt(
        self,
        endpoint: ActorEndpoint,
        leaf_law: str,
        cert: Certificate,
        mi_stub: MIStub | None = None,
    ) -> AgentId:
        with self._lock:
            if self.capacity is not None and len(self.agents) >= self.capacity:
                raise AdoptionError("pool at capacity")
            if leaf_law not in self.tree.nodes:
                raise AdoptionError(f"law {leaf_law!r} not in ensemble")
            if not self.verifier.verify(cert):
                self.trace.add("adopt", self.clock.now(), agent=list(cert.triple), law=leaf_law,
                               ok=False, reason="bad certificate")
                raise AdoptionError("certificate signature invalid")
            triple = cert.triple
            event = adopted_event(triple, self.clock.now())
            outcome = resolve(self.tree, leaf_law, event, {})
            accepted = any(isinstance(op, Forward) for op in outcome.ruling.ops)
            if not accepted:
                self.trace.add("adopt", self.clock.now(), agent=list(triple), law=leaf_law,
                               ok=False, reason="refused by law")
                raise AdoptionError("adoption refused by law")
            self.network.register(triple, self.pool_id)
            agent = Agent(triple, leaf_law, {"#self": triple}, endpoint, mi_stub)
            ctx = _Ctx(self, agent, event)
            apply_ruling(outcome.ruling, ctx)
            self.agents[triple] = agent
            self.trace.add("adopt", self.clock.now(), agent=list(triple), law=leaf_law, ok=True)
            return triple

    def send(self, agent_id: AgentId, receiver: AgentId, payload: Payload) -> bool:
        """Mediate one send; True iff the law forwarded it somewhere real.

        Controller-originated emissions (replies, event notifications)
        do not count: a blocked message is dropped even when its ruling
        emitted side traffic.
        """
        with self._lock:
            agent = self.agents.get(agent_id)
            if agent is None:
                raise KeyError(f"unknown agent {agent_id}")
            event = sent_event(agent.id, payload, receiver, self.clock.now())
            ctx = self._run_event(agent, event)
            return ctx.forwarded > 0

    def receive_envelope(self, env: Envelope) -> None:
        with self._lock:
            agent = self.agents.get(env.receiver)
            if agent is None:
                self.audit_event(env.receiver, "deadLetter", {"reason": "receiver not hosted"})
                return
            local_chain = self.tree.node(agent.leaf_law).chain
            if env.sender is None or not verify_chain(local_chain, env.chain, self.shared_prefix):
                self.audit_event(
                    agent.id,
                    "rejection",
                    {
                        "reason": "law-hash chain mismatch",
                        "sender": list(env.sender) if env.sender else None,
                        "payload": value_to_json(env.payload),
                    },
                )
                self.trace.add("reject", self.clock.now(), to=list(agent.id),
                               sender=list(env.sender) if env.sender else None,
                               payload=value_to_json(env.payload))
                return
            event = arrived_event(agent.id, env.payload, env.sender, self.clock.now())
            self._run_event(agent, event)

    # --- enforced obligations ---

    def impose_obligation(self, agent_id: AgentId, name: str, delay: float) -> None:
        import heapq

        with self._lock:
            due = self.clock.now() + delay
            self._ob_counter += 1
            self._obligations[(agent_id, name)] = (due, self._ob_counter)
            heapq.heappush(self._ob_heap, (due, self._ob_counter, agent_id, name))
            self._sync_obligation_key(agent_id)
            if self.on_obligation is not None:
                self.on_obligation(due)

    def repeal_obligation(self, agent_id: AgentId, name: str) -> None:
        with self._lock:
            self._obligations.pop((agent_id, name), None)
            self._sync_obligation_key(agent_id)

    def _sync_obligation_key(self, agent_id: AgentId) -> None:
        agent = self.agents.get(agent_id)
        if agent is not None:
            names = tuple(sorted(n for (a, n) in self._obligations if a == agent_id))
            agent.state["#obligations"] = names

    def tick(self, now: float) -> list[tuple[AgentId, str]]:
        """Fire every obligation due at or before `now`, in imposition order."""
        import heapq

        fired: list[tuple[AgentId, str]] = []
        with self._lock:
            while self._ob_heap and self._ob_heap[0][0] <= now:
                due, counter, agent_id, name = heapq.heappop(self._ob_heap)
                current = self._obligations.get((agent_id, name))
                if current != (due, counter):
                    continue  # repealed or superseded
                del self._obligations[(agent_id, name)]
                self._sync_obligation_key(agent_id)
                agent = self.agents.get(agent_id)
                if agent is None:
                    continue
                self.trace.add("obligation", now, agent=list(agent_id), name=name)
                event = obligation_event(agent_id, name, now)
                self._run_event(agent, event)
                fired.append((agent_id, name))
        return fired
