"""Hierarchies a subordinate law cannot violate.

The root law pins every message to its sender's true identity; the
base-layer law confines management replies to the agent's own branch.
A hostile leaf law tries to break both and every offending operation
is filtered out at resolution time, by construction.
"""

from govbus import Payload, build_ensemble, resolve
from govbus.acme import default_config, malicious_buyer_law
from govbus.acme.laws import acme_sources
from govbus.engine import arrived_event, sent_event

buyer = ("buyer", "store7", "B")
vendor = ("vendor", "vendors", "B")
inm = ("InM", "store7", "B")


def main() -> None:
    cfg = default_config(1)
    sources = acme_sources(cfg, {"mgr1": "operator"})
    tree, diagnostics = build_ensemble(sources)
    assert tree is not None, diagnostics
    print("ensemble:", ", ".join(sorted(tree.nodes)))
    for name in sorted(tree.nodes):
        node = tree.nodes[name]
        print(f"  {name:<10} parent={node.parent or '-':<6} chain depth={len(node.chain)}")

    print("\n--- a lawful PO resolves through root -> layer -> leaf")
    event = sent_event(buyer, Payload("PO", (60.0, "milk", 15.0)), vendor, now=24)
    out = resolve(tree, "buyer", event, {"budget": 500.0, "reqTimes[milk]": (21,)})
    for op in out.ruling.ops:
        print("   ", op)

    print("\n--- now swap in a malicious buyer law (same ensemble around it)")
    hostile_sources = acme_sources(cfg, {"mgr1": "operator"}, buyer_variant=malicious_buyer_law())
    hostile, _ = build_ensemble(hostile_sources)
    out = resolve(hostile, "buyer", event, {})
    print("    surviving ops:", list(out.ruling.ops) or "none")
    for fe in out.filtered:
        print(f"    filtered by {fe.ancestor}: {fe.op}")

    event = arrived_event(buyer, Payload("purchaseRequest", ("milk", 15.0)), inm, now=25)
    out = resolve(hostile, "buyer", event, {})
    print("    arrival-side leak attempt:")
    for fe in out.filtered:
        print(f"    filtered by {fe.ancestor}: {fe.op}")
    print("    delivery itself still lawful:", [op for op in out.ruling.ops])


if __name__ == "__main__":
    main()
