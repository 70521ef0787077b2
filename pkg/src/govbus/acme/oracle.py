"""Independent trace verification.

Recomputes every communication-based capability by brute force from
the raw envelope and delivery records, then compares against every
examine reply the controllers actually sent. Also checks that scripted
misbehaviors were blocked and flagged, that clean runs flag nothing,
and the structural invariants (budget prefix sums, request/PO
bijection, manager-message layering and purview).

The oracle never looks at control state or rulings for values; it only
uses what crossed the wire.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..capabilities import MANAGER_FORMS
from .config import MisbehaviorScript, ScenarioConfig, buyer_id
from .sim import Trace

AVDELAY_TOL = 1e-9


@dataclass
class VerdictReport:
    ok: bool
    replies_checked: int
    mismatches: list[dict] = field(default_factory=list)
    injection_outcomes: list[dict] = field(default_factory=list)
    violation_audits: int = 0
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "repliesChecked": self.replies_checked,
            "mismatches": self.mismatches,
            "injectionOutcomes": self.injection_outcomes,
            "violationAudits": self.violation_audits,
            "notes": self.notes,
        }


def _payload_kind(rec: dict) -> str | None:
    payload = rec.get("payload")
    if isinstance(payload, dict):
        return payload.get("kind")
    return None


def _args(rec: dict) -> list:
    payload = rec.get("payload")
    if isinstance(payload, dict):
        return payload.get("args", [])
    return []


class _BuyerLedger:
    """Message-derived bookkeeping for one buyer."""

    def __init__(self) -> None:
        self.budget_received = 0.0
        self.po_sum = 0.0
        self.po_count = 0
        self.pending: dict[str, list[float]] = {}
        self.delays: list[float] = []
        self.requests_delivered = 0
        self.po_without_request = 0

    @property
    def balance(self) -> float:
        return self.budget_received - self.po_sum

    def av_delay(self) -> float | None:
        if not self.delays:
            return None
        return sum(self.delays) / len(self.delays)


def verify_trace(trace: Trace, config: ScenarioConfig, script: MisbehaviorScript = ()) -> VerdictReport:
    report = VerdictReport(ok=True, replies_checked=0)
    buyer_ids = {tuple(buyer_id(b.branch)) for b in config.branches}
    ledgers: dict[tuple, _BuyerLedger] = {bid: _BuyerLedger() for bid in buyer_ids}
    po_count_by_agent: dict[tuple, int] = {}
    arrivals: dict[tuple, list[float]] = {}
    removed_at: dict[tuple, int] = {}
    violations: list[dict] = []
    deliver_ops = 0  # deliver operations mandated by rulings
    deliveries = 0  # payloads that actually reached an actor

    def fail(rec: dict, what: str) -> None:
        report.ok = False
        report.mismatches.append({"n": rec["n"], "what": what})

    for rec in trace.records:
        kind = rec["rec"]
        if kind == "event":
            deliver_ops += sum(1 for op in rec.get("ruling", ()) if op.get("op") == "deliver")
        if kind == "event" and rec["kind"] == "arrived":
            agent = tuple(rec["agent"])
            peer = rec.get("peer")
            if peer and peer[2] == "B":
                arrivals.setdefault(agent, []).append(rec["t"])
        elif kind == "deliver":
            deliveries += 1
            agent = tuple(rec["agent"])
            pk = _payload_kind(rec)
            sender = rec.get("sender")
            if pk in MANAGER_FORMS:
                if sender is None or sender[2] != "M":
                    fail(rec, f"manager-form {pk} delivered from non-manager {sender}")
                if sender is not None and agent[2] == "B" and sender[1] != agent[1]:
                    fail(rec, f"cross-branch manager message delivered: {sender} -> {list(agent)}")
                if agent[2] == "B":
                    fail(rec, f"manager-form {pk} delivered to a base actor {list(agent)}")
            if agent in ledgers:
                led = ledgers[agent]
                if pk == "budget":
                    led.budget_received += _args(rec)[0]
                elif pk == "purchaseRequest":
                    sku = _args(rec)[0]
                    led.pending.setdefault(sku, []).append(rec["t"])
                    led.requests_delivered += 1
        elif kind == "envelope":
            frm = tuple(rec["from"])
            pk = _payload_kind(rec)
            if pk == "PO":
                po_count_by_agent[frm] = po_count_by_agent.get(frm, 0) + 1
                if frm in ledgers:
                    led = ledgers[frm]
                    amount, sku = _args(rec)[0], _args(rec)[1]
                    led.po_sum += amount
                    led.po_count += 1
                    queue = led.pending.get(sku, [])
                    if queue:
                        led.delays.append(rec["t"] - queue.pop(0))
                    else:
                        led.po_without_request += 1
                        fail(rec, f"PO forwarded with no pending request (sku {sku!r})")
                    if led.po_sum - led.budget_received > 1e-9:
                        fail(rec, f"budget prefix-sum violated: spent {led.po_sum} > received {led.budget_received}")
            elif pk == "reject":
                if frm in ledgers:
                    led = ledgers[frm]
                    sku = _args(rec)[0]
                    queue = led.pending.get(sku, [])
                    if queue:
                        led.delays.append(rec["t"] - queue.pop(0))
            elif pk == "reply":
                prop, value = _args(rec)[0], _args(rec)[1]
                expected = _expected_property(
                    prop, frm, rec, ledgers, po_count_by_agent, arrivals, removed_at, config
                )
                if expected is not NotImplemented:
                    report.replies_checked += 1
                    if not _values_match(prop, expected, value):
                        fail(rec, f"examine({prop!r}) replied {value!r}, oracle says {expected!r}")
        elif kind == "audit":
            if rec["kind"] == "violation":
                violations.append(rec)
            elif rec["kind"] == "managerMsg":
                detail = rec.get("detail")
                if isinstance(detail, list) and detail and detail[0] == "remove":
                    removed_at.setdefault(tuple(rec["actor"]), rec["n"])

    report.violation_audits = len(violations)

    # scripted misbehaviors: each one blocked exactly when the governed
    # predicate says so, and flagged when blocked
    for injection in script:
        bid = tuple(buyer_id(injection.branch))
        expected_kind = "overspend" if injection.kind == "overspend" else "unrequested"
        flagged = [
            v
            for v in violations
            if tuple(v["actor"]) == bid
            and v["t"] == injection.time
            and isinstance(v.get("detail"), list)
            and v["detail"] and v["detail"][0] == expected_kind
        ]
        outcome = {
            "time": injection.time,
            "branch": injection.branch,
            "kind": injection.kind,
            "flagged": len(flagged),
        }
        report.injection_outcomes.append(outcome)
        if len(flagged) != 1:
            report.ok = False
            report.mismatches.append(
                {"n": -1, "what": f"injection {injection} flagged {len(flagged)} times, expected 1"}
            )

    if not script and violations:
        report.ok = False
        report.mismatches.append(
            {"n": violations[0]["n"], "what": f"clean run flagged {len(violations)} violations"}
        )

    # no unmediated delivery: every payload that reached an actor is
    # accounted for by a deliver op in some resolved ruling
    if deliveries != deliver_ops:
        report.ok = False
        report.mismatches.append(
            {"n": -1, "what": f"{deliveries} deliveries vs {deliver_ops} deliver ops in rulings"}
        )

    for bid, led in ledgers.items():
        outstanding = sum(len(q) for q in led.pending.values())
        completed = len(led.delays)
        if led.requests_delivered != completed + outstanding:
            report.ok = False
            report.mismatches.append(
                {
                    "n": -1,
                    "what": f"{list(bid)}: {led.requests_delivered} requests != "
                    f"{completed} completed + {outstanding} outstanding",
                }
            )
        report.notes.append(
            f"{bid[1]}: requests={led.requests_delivered} POs={led.po_count} "
            f"balance={led.balance:g} avDelay={led.av_delay()}"
        )
    return report


def _expected_property(
    prop: str,
    agent: tuple,
    rec: dict,
    ledgers: dict,
    po_count_by_agent: dict,
    arrivals: dict,
    removed_at: dict,
    config: ScenarioConfig,
) -> Any:
    if prop == "POcount":
        return po_count_by_agent.get(agent, 0)
    if prop == "budget":
        led = ledgers.get(agent)
        return NotImplemented if led is None else led.balance
    if prop == "avDelay":
        led = ledgers.get(agent)
        return NotImplemented if led is None else led.av_delay()
    if prop == "inflow":
        t = rec["t"]
        window = config.inflow_window
        times = arrivals.get(agent, [])
        return sum(1 for ts in times if t - window < ts <= t)
    if prop == "blocked":
        return 1 if agent in removed_at and removed_at[agent] < rec["n"] else 0
    return NotImplemented


def _values_match(prop: str, expected: Any, actual: Any) -> bool:
    if prop == "avDelay":
        if expected is None or actual is None:
            return expected is None and actual is None
        return abs(expected - actual) <= AVDELAY_TOL
    if isinstance(expected, float) or isinstance(actual, float):
        return abs(float(expected) - float(actual)) <= 1e-9
    return expected == actual
