"""The managed supermarket chain, end to end.

Two branches of inventory monitors, buyers and budget offices run
under the law ensemble on a virtual clock. A scripted buyer goes
rogue twice; both misbehaviors are blocked by law, flagged in the
audit trail, and pushed to subscribed managers. The trace oracle then
re-derives every examined value from raw message flow and confirms
the controllers told the truth.
"""

from govbus.acme import Injection, default_config, run_scenario, verify_trace


def main() -> None:
    cfg = default_config(2)
    script = (
        Injection(time=40, branch="store7", kind="overspend", amount=1_000_000.0),
        Injection(time=70, branch="store9", kind="unrequestedPO", sku="caviar", amount=2.0),
    )
    trace = run_scenario(cfg, seed=42, script=script)
    print(f"run complete: {len(trace.records)} trace records, digest {trace.digest()[:16]}…")

    pos = [r for r in trace.select("envelope") if r["payload"]["kind"] == "PO"]
    print(f"\nPOs forwarded on the wire: {len(pos)}")
    for rec in pos[:5]:
        amount, sku, qty = rec["payload"]["args"]
        print(f"  t={rec['t']:>3} {rec['from'][1]}: {qty:g} x {sku} for {amount:g}")

    print("\nviolations flagged by law:")
    for rec in trace.select("audit"):
        if rec["kind"] == "violation":
            print(f"  t={rec['t']:>3} {rec['actor'][1]}: {rec['detail']}")

    print("\nevents pushed to subscribed managers:")
    for rec in trace.select("envelope"):
        if rec["payload"]["kind"] == "event":
            name, value = rec["payload"]["args"]
            print(f"  t={rec['t']:>3} -> {rec['to'][0]}@{rec['to'][1]}: {name} = {value}")

    print("\nlast examined values per branch:")
    last: dict[tuple, object] = {}
    for rec in trace.select("envelope"):
        if rec["payload"]["kind"] == "reply":
            prop, value = rec["payload"]["args"]
            last[(rec["from"][1], prop)] = value
    for (branch, prop), value in sorted(last.items()):
        print(f"  {branch:>7} {prop:<8} = {value}")

    report = verify_trace(trace, cfg, script)
    print(f"\noracle verdict: ok={report.ok}, {report.replies_checked} replies checked, "
          f"{report.violation_audits} violations")
    for note in report.notes:
        print("  ", note)

    again = run_scenario(cfg, seed=42, script=script)
    print("\nsame seed, byte-identical trace:", again.digest() == trace.digest())


if __name__ == "__main__":
    main()
