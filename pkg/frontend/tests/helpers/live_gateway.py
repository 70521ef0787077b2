"""Boots a real controller service + manager gateway for console tests.

Prints one JSON line with the ports and oracle values, then reacts to
stdin commands: "violate" injects an over-budget PO at the buyer,
anything else (or EOF) shuts down.
"""

import json
import sys
import tempfile
import time
from pathlib import Path

from govbus.acme import acme_sources, default_config
from govbus.hierarchy import write_manifest
from govbus.service import LiveRuntime, ServiceConfig, TokenInfo, serve_cos
from govbus.values import Payload

BUYER = ("buyer", "store7", "B")
INM = ("InM", "store7", "B")
BUO = ("BuO", "store7", "B")
VENDOR = ("vendor", "vendors", "B")


def main() -> None:
    tmp = Path(tempfile.mkdtemp(prefix="console-it-"))
    cfg = default_config(1)
    manifest = write_manifest(tmp / "laws", acme_sources(cfg, {"ops": "operator", "viewer": "observer"}))
    sc = ServiceConfig(
        ensemble=manifest,
        gateway_tokens={
            "tok-op": TokenInfo(("ops", "store7", "M"), "operator"),
            "tok-obs": TokenInfo(("viewer", "store7", "M"), "observer"),
        },
        request_timeout=3.0,
        denial_wait=0.4,
        heartbeat=0.4,
    )
    runtime, cos, gw = serve_cos(sc)
    ca = runtime.ca
    sink = lambda payload, sender: None
    runtime.adopt(sink, "buyer", ca.issue(BUYER))
    runtime.adopt(sink, "component", ca.issue(INM))
    runtime.adopt(sink, "component", ca.issue(BUO))
    runtime.adopt(sink, "component", ca.issue(VENDOR))

    # message history the console's examines must reflect:
    # 800 received, one requested PO of 120 -> budget 680, POcount 1
    runtime.send(BUO, BUYER, Payload("budget", (800.0,)))
    time.sleep(0.15)
    runtime.send(INM, BUYER, Payload("purchaseRequest", ("milk", 30.0)))
    time.sleep(0.15)
    runtime.send(BUYER, VENDOR, Payload("PO", (120.0, "milk", 30.0)))
    time.sleep(0.15)

    print(json.dumps({
        "gateway": gw.port,
        "cos": cos.port,
        "buyer": list(BUYER),
        "expectBudget": 680.0,
        "expectPOcount": 1,
    }), flush=True)

    for line in sys.stdin:
        command = line.strip()
        if command == "violate":
            runtime.send(BUYER, VENDOR, Payload("PO", (999999.0, "milk", 1.0)))
            print(json.dumps({"injected": True}), flush=True)
        else:
            break
    cos.shutdown()
    gw.shutdown()
    runtime.stop()


if __name__ == "__main__":
    main()
