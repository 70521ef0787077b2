"""Deterministic discrete-event run of the managed supermarket chain.

One virtual clock, one event heap, everything ordered by (time, seq).
The same (config, seed) pair always produces a byte-identical trace
file; the only randomness is the seeded vendor latency.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Any, Callable

from ..audit import AuditTrail
from ..certs import CertAuthority
from ..hierarchy import build_ensemble
from ..runtime import Clock, ControllerPool, Network, TraceSink
from ..values import Payload, Triple
from . import actors
from .config import (
    Injection,
    ManagerAction,
    MisbehaviorScript,
    ScenarioConfig,
    buo_id,
    buyer_id,
    config_to_json,
    inm_id,
    manager_id,
    vendor_id,
)
from .laws import acme_sources

TRANSIT_LATENCY = 1


class ScenarioError(Exception):
    pass


class Kernel:
    """Time-ordered callback heap; ties break by scheduling order."""

    def __init__(self, start: float = 0):
        self.now: float = start
        self._heap: list[tuple[float, int, Callable[[], None]]] = []
        self._seq = 0

    def schedule(self, delay: float, fn: Callable[[], None]) -> None:
        self.schedule_at(self.now + delay, fn)

    def schedule_at(self, time: float, fn: Callable[[], None]) -> None:
        if time < self.now:
            time = self.now
        self._seq += 1
        heapq.heappush(self._heap, (time, self._seq, fn))

    def run_until(self, horizon: float) -> None:
        while self._heap and self._heap[0][0] <= horizon:
            time, _, fn = heapq.heappop(self._heap)
            self.now = time
            fn()
        self.now = horizon


class KernelClock(Clock):
    def __init__(self, kernel: Kernel):
        self.kernel = kernel

    def now(self) -> float:
        return self.kernel.now


class Trace(TraceSink):
    """Totally ordered run record; every event, ruling, envelope and
    audit entry lands here with its own sequence number."""

    def __init__(self) -> None:
        self.records: list[dict[str, Any]] = []

    def add(self, rec: str, t: float, **fields: Any) -> None:
        self.records.append({"n": len(self.records), "t": t, "rec": rec, **fields})

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.records
        )

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode("utf-8")).hexdigest()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), "utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "Trace":
        trace = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    trace.records.append(json.loads(line))
        return trace

    def select(self, rec: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r["rec"] == rec]


class ActorHandle:
    """The only surface an actor gets: send through its controller,
    read the clock, schedule its own behavior."""

    def __init__(self, scenario: "Scenario", agent: Triple, pool: ControllerPool):
        self._scenario = scenario
        self.agent = agent
        self._pool = pool

    @property
    def now(self) -> float:
        return self._scenario.kernel.now

    def send(self, receiver: Triple, payload: Payload) -> bool:
        return self._pool.send(self.agent, receiver, payload)

    def schedule(self, delay: float, fn: Callable[[], None]) -> None:
        self._scenario.kernel.schedule(delay, fn)


class Scenario:
    """Builds the four-tuple (base components, managers, controller
    pools, law ensemble) and runs it on the virtual clock."""

    def __init__(
        self,
        config: ScenarioConfig,
        seed: int,
        script: MisbehaviorScript = (),
        manager_roles: dict[str, str] | None = None,
        buyer_variant: str | None = None,
        inert_actors: bool = False,
    ):
        self.config = config
        self.seed = seed
        self.script = tuple(script)
        self.inert_actors = inert_actors
        self.kernel = Kernel()
        self.clock = KernelClock(self.kernel)
        self.trace = Trace()
        self.audit = AuditTrail()
        self.rng = Random(seed)
        self.ca = CertAuthority.deterministic("acme-ca")
        roles = manager_roles if manager_roles is not None else {"mgr1": "operator"}
        sources = acme_sources(config, roles, buyer_variant=buyer_variant)
        tree, diags = build_ensemble(sources)
        if tree is None:
            raise ScenarioError("ensemble does not build: " + "; ".join(str(d) for d in diags))
        self.tree = tree
        self.network = Network(
            transport=lambda env, pool: self.kernel.schedule(
                TRANSIT_LATENCY, lambda: pool.receive_envelope(env)
            )
        )
        self.pools: dict[str, ControllerPool] = {}
        self.managers: dict[str, actors.Manager] = {}
        self.buyers: dict[str, actors.Buyer] = {}
        self.inms: dict[str, actors.InventoryMonitor] = {}
        self._build()

    def _pool(self, name: str) -> ControllerPool:
        if name not in self.pools:
            pool = ControllerPool(
                name,
                self.tree,
                self.network,
                verifier=self.ca.verifier(),
                clock=self.clock,
                audit=self.audit,
                trace=self.trace,
            )
            pool.on_obligation = lambda due, p=pool: self.kernel.schedule_at(
                due, lambda: p.tick(self.kernel.now)
            )
            self.pools[name] = pool
        return self.pools[name]

    def _adopt(self, pool: ControllerPool, triple: Triple, law: str, endpoint) -> Triple:
        return pool.adopt(endpoint, law, self.ca.issue(triple))

    def _build(self) -> None:
        cfg = self.config
        self.trace.add(
            "meta",
            0,
            seed=self.seed,
            horizon=cfg.horizon,
            config=config_to_json(cfg),
            script=[{"time": i.time, "branch": i.branch, "kind": i.kind, "amount": i.amount, "sku": i.sku} for i in self.script],
            rootLaw=self.tree.node(self.tree.root).digest.hex,
        )
        inert = (lambda payload, sender: None) if self.inert_actors else None
        core = self._pool("core")
        vendor = actors.Vendor(
            ActorHandle(self, vendor_id(), core),
            latency=lambda: 1 + self.rng.randrange(max(1, self.config.vendor_latency_max)),
        )
        self._adopt(core, vendor_id(), "component", inert or vendor.on_deliver)

        for branch_cfg in cfg.branches:
            branch = branch_cfg.branch
            pool = self._pool(f"pool-{branch}")
            inm = actors.InventoryMonitor(ActorHandle(self, inm_id(branch), pool), branch_cfg, cfg.reject_cooldown)
            self._adopt(pool, inm_id(branch), "component", inert or inm.on_deliver)
            buyer = actors.Buyer(ActorHandle(self, buyer_id(branch), pool), branch_cfg, cfg.buyer_think_time)
            self._adopt(pool, buyer_id(branch), "buyer", inert or buyer.on_deliver)
            buo = actors.BudgetOffice(ActorHandle(self, buo_id(branch), pool), branch_cfg)
            self._adopt(pool, buo_id(branch), "component", inert or buo.on_deliver)
            mgr = actors.Manager(ActorHandle(self, manager_id(branch), pool))
            self._adopt(pool, manager_id(branch), "M", mgr.on_deliver)
            self.managers[branch] = mgr
            self.buyers[branch] = buyer
            self.inms[branch] = inm

            if not self.inert_actors:
                inm.start()
                buo.start()
            if cfg.auto_manager_subscribe:
                self.kernel.schedule_at(
                    2,
                    lambda b=branch: self._manager_send(b, buyer_id(b), Payload("subscribe", (cfg.law_budget_event,))),
                )
                self.kernel.schedule_at(
                    2,
                    lambda b=branch: self._manager_send(b, buyer_id(b), Payload("subscribe", ("violation",))),
                )
            if cfg.auto_manager_poll:
                self._schedule_poll(branch, cfg.manager_poll_interval)

        for action in cfg.manager_actions:
            self._schedule_action(action)
        for injection in self.script:
            if not (0 < injection.time <= cfg.horizon):
                raise ScenarioError(f"injection at t={injection.time} outside run horizon")
            self._schedule_injection(injection)

    def _manager_send(self, branch: str, target: Triple, payload: Payload) -> bool:
        pool = self.pools[f"pool-{branch}"]
        return pool.send(manager_id(branch), target, payload)

    def _schedule_poll(self, branch: str, interval: int) -> None:
        def poll() -> None:
            for prop in ("budget", "POcount", "avDelay", "inflow"):
                self._manager_send(branch, buyer_id(branch), Payload("examine", (prop,)))
            self.kernel.schedule(interval, poll)

        self.kernel.schedule_at(interval, poll)

    def _schedule_action(self, action: ManagerAction) -> None:
        name, branch = action.manager
        target: Triple = (action.target[0], action.target[1], "B")
        payload = Payload(action.form, tuple(action.args))

        def fire() -> None:
            pool = self.pools[f"pool-{branch}"]
            pool.send((name, branch, "M"), target, payload)

        self.kernel.schedule_at(action.time, fire)

    def _schedule_injection(self, injection: Injection) -> None:
        branch = injection.branch

        def fire() -> None:
            pool = self.pools[f"pool-{branch}"]
            if injection.kind == "overspend":
                sku = injection.sku or self.config.branch(branch).products[0].sku
                payload = Payload("PO", (injection.amount, sku, 1.0))
            else:  # unrequestedPO
                payload = Payload("PO", (injection.amount or 1.0, injection.sku, 1.0))
            pool.send(buyer_id(branch), vendor_id(), payload)

        self.kernel.schedule_at(injection.time, fire)

    def adopt_manager(self, branch: str, name: str) -> actors.Manager:
        """Add another manager agent (e.g. an observer) to a branch pool."""
        pool = self._pool(f"pool-{branch}")
        mgr = actors.Manager(ActorHandle(self, manager_id(branch, name), pool))
        self._adopt(pool, manager_id(branch, name), "M", mgr.on_deliver)
        self.managers[f"{name}@{branch}"] = mgr
        return mgr

    def run(self, horizon: float | None = None) -> Trace:
        self.kernel.run_until(self.config.horizon if horizon is None else horizon)
        return self.trace


def run_scenario(
    config: ScenarioConfig,
    seed: int,
    horizon: float | None = None,
    script: MisbehaviorScript = (),
    trace_path: str | Path | None = None,
    manager_roles: dict[str, str] | None = None,
) -> Trace:
    """Run one deterministic scenario; optionally write the trace file."""
    scenario = Scenario(config, seed, script, manager_roles)
    trace = scenario.run(horizon)
    if trace_path is not None:
        trace.write(trace_path)
    return trace
