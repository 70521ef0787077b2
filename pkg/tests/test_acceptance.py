"""End-to-end acceptance criteria.

Each test is one criterion at its stated tolerance and prints one
PASS line (run with -s to see them). Tolerances are pinned here, not
configurable.
"""

from __future__ import annotations

import copy
import statistics
import time
from dataclasses import replace
from pathlib import Path
from random import Random

import pytest

from govbus.acme import (
    BranchConfig,
    Injection,
    Product,
    Scenario,
    ScenarioConfig,
    default_config,
    malicious_buyer_law,
    run_scenario,
    verify_trace,
)
from govbus.acme.config import buo_id, buyer_id, inm_id, manager_id, vendor_id
from govbus.acme.laws import acme_sources
from govbus.audit import AuditTrail
from govbus.certs import CertAuthority
from govbus.cli import main as cli_main
from govbus.engine import ControllerContext, apply_ruling, arrived_event, evaluate, obligation_event, sent_event
from govbus.hierarchy import build_ensemble, resolve
from govbus.lawlang import LawSource
from govbus.runtime import ControllerPool, ManualClock, Network
from govbus.values import Payload

BUYER = buyer_id("store7")
INM = inm_id("store7")
BUO = buo_id("store7")
MGR = manager_id("store7")


def ok(line: str) -> None:
    print(f"ACCEPTANCE PASS: {line}")


def quiet_config(**kw) -> ScenarioConfig:
    base = ScenarioConfig(
        branches=(
            BranchConfig(
                branch="store7",
                products=(Product("milk", 0.0, 20.0, 100.0, 4.0),),
                initial_budget=0.0,
                drip_amount=0.0,
            ),
        ),
        horizon=200,
        auto_manager_poll=False,
        auto_manager_subscribe=False,
    )
    return replace(base, **kw) if kw else base


class _ReadOnly(dict):
    def __setitem__(self, key, value):  # pragma: no cover - guard
        raise AssertionError("evaluate must not write the input state")


def test_definition1_conformance():
    """Determinism and purity of evaluate over >= 1000 generated
    (law, event, state) triples, in under 30 seconds."""
    from genlaw import random_event, random_law, random_state

    rng = Random(424242)
    started = time.perf_counter()
    n = 1000
    for _ in range(n):
        law = random_law(rng)
        event = random_event(rng)
        state = random_state(rng)
        frozen = copy.deepcopy(state)
        first = evaluate(law, event, _ReadOnly(state))
        second = evaluate(law, event, _ReadOnly(copy.deepcopy(state)))
        assert first == second, "evaluate must be deterministic"
        assert state == frozen, "evaluate must not mutate its input state"
    elapsed = time.perf_counter() - started
    assert elapsed < 30, f"property suite took {elapsed:.1f}s"
    ok(f"Definition-1 conformance: {n} triples deterministic and pure in {elapsed:.2f}s")


@pytest.mark.parametrize("n", [0, 1, 3, 17])
def test_ruleset1_reproduction(n):
    """n requested, affordable PO sends; examine("POcount") == n, and the
    independent trace oracle agrees."""
    cfg = quiet_config()
    s = Scenario(cfg, seed=100 + n, inert_actors=True)
    pool = s.pools["pool-store7"]
    s.kernel.schedule_at(1, lambda: pool.send(BUO, BUYER, Payload("budget", (100000.0,))))
    for i in range(n):
        t_req = 4 + 3 * i
        s.kernel.schedule_at(t_req, lambda: pool.send(INM, BUYER, Payload("purchaseRequest", ("milk", 10.0))))
        s.kernel.schedule_at(t_req + 2, lambda: pool.send(BUYER, vendor_id(), Payload("PO", (40.0, "milk", 10.0))))
    s.kernel.schedule_at(150, lambda: pool.send(MGR, BUYER, Payload("examine", ("POcount",))))
    trace = s.run()
    assert s.managers["store7"].last_reply("POcount") == n
    envelopes = [r for r in trace.select("envelope") if r["payload"]["kind"] == "PO"]
    assert len(envelopes) == n
    report = verify_trace(trace, cfg)
    assert report.ok, report.mismatches
    ok(f"Ruleset-1 reproduction: {n} PO sends -> POcount {n}, oracle agrees")


def test_remove_semantics():
    """After invoke(remove): 0 of 100 subsequent b-messages delivered in
    either direction; examines still answered. Exact counts."""
    cfg = quiet_config()
    s = Scenario(cfg, seed=7, inert_actors=True)
    pool = s.pools["pool-store7"]
    s.kernel.schedule_at(5, lambda: pool.send(MGR, BUYER, Payload("invoke", ("acquire", "remove"))))
    s.kernel.schedule_at(8, lambda: pool.send(MGR, BUYER, Payload("invoke", ("remove",))))
    for k in range(50):
        s.kernel.schedule_at(20 + k, lambda: pool.send(INM, BUYER, Payload("ping", ())))
        s.kernel.schedule_at(20 + k, lambda: pool.send(BUYER, INM, Payload("pong", ())))
    s.kernel.schedule_at(120, lambda: pool.send(MGR, BUYER, Payload("examine", ("POcount",))))
    s.kernel.schedule_at(125, lambda: pool.send(MGR, BUYER, Payload("examine", ("blocked",))))
    trace = s.run()
    assert s.managers["store7"].last_reply("remove") == "ok"
    delivered = [
        r for r in trace.select("deliver")
        if r["payload"]["kind"] in ("ping", "pong") and r["t"] >= 20
    ]
    assert len(delivered) == 0, f"{len(delivered)} of 100 blocked messages were delivered"
    audits = [r for r in trace.select("audit") if r["kind"] == "rejection"]
    blocked_recv = [r for r in audits if r["detail"][0] == "blocked-recv"]
    blocked_send = [r for r in audits if r["detail"][0] == "blocked-send"]
    assert len(blocked_recv) == 50 and len(blocked_send) == 50
    assert s.managers["store7"].last_reply("POcount") == 0
    assert s.managers["store7"].last_reply("blocked") == 1
    report = verify_trace(trace, cfg)
    assert report.ok, report.mismatches
    ok("remove semantics: 0/100 b-messages delivered after remove, examine still answered")


def test_budget_enforcement():
    """Every injected over-budget PO blocked and flagged; the budget
    prefix-sum invariant holds at every trace index; clean run flags zero."""
    cfg = default_config(2)
    script = (
        Injection(time=30, branch="store7", kind="overspend", amount=1_000_000.0),
        Injection(time=50, branch="store9", kind="overspend", amount=777_777.0),
        Injection(time=90, branch="store7", kind="overspend", amount=999_999.0),
    )
    trace = run_scenario(cfg, seed=71, script=script)
    report = verify_trace(trace, cfg, script)
    assert report.ok, report.mismatches
    assert all(o["flagged"] == 1 for o in report.injection_outcomes)
    assert report.violation_audits == len(script)
    huge = [r for r in trace.select("envelope")
            if r["payload"]["kind"] == "PO" and r["payload"]["args"][0] > 10000]
    assert huge == [], "an over-budget PO escaped onto the wire"

    clean = run_scenario(cfg, seed=71)
    clean_report = verify_trace(clean, cfg)
    assert clean_report.ok and clean_report.violation_audits == 0
    ok(f"budget enforcement: {len(script)}/{len(script)} over-budget POs blocked+flagged, "
       "prefix sums hold, clean run flags zero")


def test_unrequested_purchase_detection():
    """Every scripted unrequested PO blocked; clean-run bijection between
    delivered requests and forwarded POs holds. Exact."""
    cfg = default_config(2)
    script = (
        Injection(time=25, branch="store7", kind="unrequestedPO", sku="ghost", amount=1.0),
        Injection(time=45, branch="store9", kind="unrequestedPO", sku="phantom", amount=2.0),
        Injection(time=95, branch="store7", kind="unrequestedPO", sku="ghost", amount=1.0),
    )
    trace = run_scenario(cfg, seed=72, script=script)
    report = verify_trace(trace, cfg, script)
    assert report.ok, report.mismatches
    assert all(o["flagged"] == 1 for o in report.injection_outcomes)
    ghosts = [r for r in trace.select("envelope")
              if r["payload"]["kind"] == "PO" and r["payload"]["args"][1] in ("ghost", "phantom")]
    assert ghosts == []

    clean = run_scenario(cfg, seed=72)
    clean_report = verify_trace(clean, cfg)
    assert clean_report.ok, clean_report.mismatches  # includes the bijection check
    ok("unrequested-purchase detection: 3/3 blocked, clean-run request/PO bijection holds")


def test_avdelay_matches_mean_oracle_over_ten_seeds():
    """examine("avDelay") equals the independent mean oracle within 1e-9
    across 10 seeded scenarios."""
    checked_nonnull = 0
    for seed in range(10):
        cfg = default_config(1)
        trace = run_scenario(cfg, seed=seed)
        report = verify_trace(trace, cfg)  # avDelay tolerance pinned at 1e-9
        assert report.ok, (seed, report.mismatches)
        nonnull = [
            r for r in trace.select("envelope")
            if r["payload"]["kind"] == "reply"
            and r["payload"]["args"][0] == "avDelay"
            and r["payload"]["args"][1] is not None
        ]
        checked_nonnull += len(nonnull)
    assert checked_nonnull >= 10, "scenarios must exercise non-null avDelay"
    ok(f"avDelay: {checked_nonnull} replies matched the mean oracle within 1e-9 over 10 seeds")


def test_hash_gate():
    """100% of envelopes from a tampered-law agent rejected; 0% rejected
    between agents sharing the genuine ensemble."""
    cfg = default_config(1)
    genuine, diags = build_ensemble(acme_sources(cfg, {"mgr1": "operator"}))
    assert genuine is not None, diags

    tampered_sources = acme_sources(cfg, {"mgr1": "operator"})
    g = tampered_sources[0]
    # the cheater's root drops the sender-identity constraint
    tampered_sources[0] = LawSource("G", g.text.replace(
        'CONSTRAINT Op.kind != "forward" or Op.sender = Self\n', ""), None)
    tampered, diags = build_ensemble(tampered_sources)
    assert tampered is not None, diags
    assert tampered.node("G").digest.hex != genuine.node("G").digest.hex

    ca = CertAuthority.deterministic("gate-ca")
    network = Network()
    clock = ManualClock()
    audit = AuditTrail()
    good = ControllerPool("good", genuine, network, verifier=ca.verifier(), clock=clock, audit=audit)
    rogue = ControllerPool("rogue", tampered, network, verifier=ca.verifier(), clock=clock, audit=audit)

    delivered = []
    good.adopt(lambda p, s: delivered.append((p, s)), "component", ca.issue(INM))
    good.adopt(lambda p, s: None, "component", ca.issue(BUO))
    rogue.adopt(lambda p, s: None, "component", ca.issue(("mole", "store7", "B")))

    n = 100
    for i in range(n):
        rogue.send(("mole", "store7", "B"), INM, Payload("ping", (i,)))
    rejected = [r for r in audit.records if r.kind == "rejection"]
    assert len(rejected) == n, f"only {len(rejected)}/{n} tampered envelopes rejected"
    assert delivered == []

    before = len([r for r in audit.records if r.kind == "rejection"])
    for i in range(n):
        good.send(BUO, INM, Payload("ping", (i,)))
    after = len([r for r in audit.records if r.kind == "rejection"])
    assert after == before, "a genuine envelope was rejected"
    assert len(delivered) == n
    ok(f"hash gate: {n}/{n} tampered envelopes rejected, 0/{n} genuine envelopes rejected")


def test_conformance_filtering():
    """A malicious buyer law stripping sender triples or messaging an
    out-of-purview manager has every such op filtered and audited."""
    cfg = default_config(1)
    s = Scenario(cfg, seed=5, buyer_variant=malicious_buyer_law())
    trace = s.run()

    buyer = list(buyer_id("store7"))
    sent_attempts = [r for r in trace.select("event")
                     if r["kind"] == "sent" and r["agent"] == buyer]
    leak_attempts = [r for r in trace.select("event")
                     if r["kind"] == "arrived" and r["agent"] == buyer
                     and r["payload"] and r["payload"]["kind"] == "purchaseRequest"]
    assert sent_attempts, "scenario produced no malicious send attempts"
    assert leak_attempts, "scenario produced no leak attempts"

    filters = [r for r in trace.select("audit") if r["kind"] == "filterEvent"]
    by_g = [r for r in filters if r["detail"]["ancestor"] == "G"]
    by_b = [r for r in filters if r["detail"]["ancestor"] == "B"]
    assert len(by_g) == len(sent_attempts), "every spoofed forward must be filtered by the root law"
    assert len(by_b) == len(leak_attempts), "every cross-purview emit must be filtered by the layer law"

    # the buyer's controller still answers lawful manager examines (reply
    # envelopes at the layer law); nothing from the malicious rules escapes
    outgoing = [r for r in trace.select("envelope")
                if r["from"] == buyer and r["payload"]["kind"] not in ("reply", "event")]
    assert outgoing == [], "a malicious op escaped onto the wire"
    spoofed = [r for r in trace.select("envelope")
               if r["sender"] is None or r["sender"] != r["from"]]
    spy = [r for r in trace.select("envelope") if r["to"] == ["spy", "elsewhere", "M"]]
    assert spy == [] and spoofed == []
    total = len(sent_attempts) + len(leak_attempts)
    ok(f"conformance filtering: {total}/{total} malicious ops filtered by ancestors and audited")


def test_cli_determinism(tmp_path):
    """`acme run --seed 42` twice yields byte-identical trace files."""
    f1, f2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert cli_main(["acme", "run", "--seed", "42", "--trace", str(f1)]) == 0
    assert cli_main(["acme", "run", "--seed", "42", "--trace", str(f2)]) == 0
    b1, b2 = f1.read_bytes(), f2.read_bytes()
    assert b1 == b2 and len(b1) > 1000
    ok(f"determinism: two seed-42 runs produced byte-identical traces ({len(b1)} bytes)")


class _BenchCtx(ControllerContext):
    def dispatch_forward(self, payload, sender):
        pass

    def dispatch_emit(self, target, payload):
        pass

    def impose(self, name, delay):
        pass

    def audit(self, kind, detail):
        pass


def test_performance_benchmark():
    """Median resolve+apply latency for the case-study laws over >= 100k
    events, single-threaded; soft bound 1 ms median (reported, and the
    suite does not fail below the soft bound)."""
    cfg = default_config(1)
    tree, diags = build_ensemble(acme_sources(cfg, {"mgr1": "operator"}))
    assert tree is not None, diags
    state: dict = {"#self": BUYER}
    vendor = vendor_id()
    mgr = MGR

    def event_at(i: int):
        t = float(i)
        phase = i % 8
        if phase in (0, 2, 4):
            return "buyer", arrived_event(BUYER, Payload("purchaseRequest", ("milk", 10.0)), INM, t)
        if phase in (1, 3, 5):
            return "buyer", sent_event(BUYER, Payload("PO", (40.0, "milk", 10.0)), vendor, t)
        if phase == 6:
            return "buyer", arrived_event(BUYER, Payload("budget", (500.0,)), BUO, t)
        return "buyer", arrived_event(BUYER, Payload("examine", ("budget",)), mgr, t)

    n = 100_000
    samples = []
    started = time.perf_counter()
    for i in range(n):
        leaf, event = event_at(i)
        t0 = time.perf_counter_ns()
        outcome = resolve(tree, leaf, event, state)
        apply_ruling(outcome.ruling, _BenchCtx(state, event))
        samples.append(time.perf_counter_ns() - t0)
    wall = time.perf_counter() - started

    med = statistics.median(samples) / 1e6
    mean = statistics.fmean(samples) / 1e6
    p90 = statistics.quantiles(samples, n=10)[8] / 1e6
    p99 = statistics.quantiles(samples, n=100)[98] / 1e6
    doc = Path(__file__).parent.parent / "BENCHMARKS.md"
    doc.write_text(
        "# Mediation latency\n\n"
        "Per-event `resolve` + `apply_ruling` through the case-study law chain\n"
        "(root -> layer -> leaf), in-process, single-threaded.\n\n"
        f"- events measured: {n}\n"
        f"- median: {med:.4f} ms\n"
        f"- mean: {mean:.4f} ms\n"
        f"- p90: {p90:.4f} ms\n"
        f"- p99: {p99:.4f} ms\n"
        f"- total wall time: {wall:.1f} s\n\n"
        "Soft bound: 1 ms median on commodity hardware. Regenerate with\n"
        "`pytest tests/test_acceptance.py::test_performance_benchmark -s`.\n",
        "utf-8",
    )
    if med > 1.0:
        print(f"WARNING: median {med:.3f} ms exceeds the 1 ms soft bound")
    ok(f"performance: median {med:.4f} ms, p90 {p90:.4f} ms over {n} events (soft bound 1 ms)")


def test_reflexive_coordination_50_interleavings():
    """Two managers race for the remove token in 50 randomized
    interleavings; the tokenless remove is denied every time, and every
    manager message is audited exactly once."""
    rng = Random(1337)
    denied = 0
    for round_no in range(50):
        cfg = quiet_config(horizon=60)
        s = Scenario(cfg, seed=round_no, inert_actors=True,
                     manager_roles={"mgr1": "operator", "mgr2": "operator"})
        mgr2 = s.adopt_manager("store7", "mgr2")
        mgr1 = s.managers["store7"]
        pool = s.pools["pool-store7"]
        m1, m2 = MGR, manager_id("store7", "mgr2")

        times = rng.sample(range(2, 40), 4)
        ta1, ta2 = times[0], times[1]
        tr1, tr2 = max(times[0], times[1]) + sorted((times[2] % 5 + 1, times[3] % 5 + 2))[0], \
            max(times[0], times[1]) + sorted((times[2] % 5 + 1, times[3] % 5 + 2))[1]
        s.kernel.schedule_at(ta1, lambda: pool.send(m1, BUYER, Payload("invoke", ("acquire", "remove"))))
        s.kernel.schedule_at(ta2, lambda: pool.send(m2, BUYER, Payload("invoke", ("acquire", "remove"))))
        s.kernel.schedule_at(tr1, lambda: pool.send(m1, BUYER, Payload("invoke", ("remove",))))
        s.kernel.schedule_at(tr2, lambda: pool.send(m2, BUYER, Payload("invoke", ("remove",))))
        trace = s.run()

        r1 = mgr1.last_reply("remove")
        r2 = mgr2.last_reply("remove")
        assert {r1, r2} == {"ok", "denied-token"}, (round_no, r1, r2)
        denied += 1
        no_token = [r for r in trace.select("audit")
                    if r["kind"] == "rejection" and r["detail"][0] == "no-token"]
        assert len(no_token) == 1, (round_no, no_token)

        manager_sends = [r for r in trace.select("event")
                         if r["kind"] == "sent" and r["agent"][2] == "M"]
        # the message record lives at the manager's own controller; the
        # target-side execution record (actor layer B) is a separate entry
        audited = [r for r in trace.select("audit")
                   if r["kind"] == "managerMsg" and r["actor"][2] == "M"]
        assert len(audited) == len(manager_sends), (round_no, len(audited), len(manager_sends))
    ok(f"reflexive coordination: tokenless remove denied in {denied}/50 interleavings, "
       "audit complete in each")
