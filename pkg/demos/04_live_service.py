"""The live controller service and manager gateway.

Starts the service in-process, adopts a buyer and its peers over the
TCP frame protocol, then operates the system as a manager would:
examine properties, watch the event stream, and run the token-guarded
remove. Everything the console can do passes through law M.
"""

import json
import tempfile
import threading
import time
from pathlib import Path

import requests

from govbus.acme import acme_sources, default_config
from govbus.hierarchy import write_manifest
from govbus.service import CoSClient, ServiceConfig, TokenInfo, serve_cos
from govbus.wire import frame

BUYER = ["buyer", "store7", "B"]


def main() -> None:
    tmp = Path(tempfile.mkdtemp(prefix="govbus-demo-"))
    cfg = default_config(1)
    manifest = write_manifest(tmp / "laws", acme_sources(cfg, {"ops": "operator", "viewer": "observer"}))
    service_cfg = ServiceConfig(
        ensemble=manifest,
        gateway_tokens={
            "token-ops": TokenInfo(("ops", "store7", "M"), "operator"),
            "token-viewer": TokenInfo(("viewer", "store7", "M"), "observer"),
        },
        audit_file=tmp / "audit.jsonl",
        heartbeat=0.5,
    )
    runtime, cos, gateway = serve_cos(service_cfg)
    base = f"http://127.0.0.1:{gateway.port}"
    print(f"controller service on :{cos.port}, gateway on :{gateway.port}")
    print("healthz:", requests.get(base + "/healthz").json())

    ca = runtime.ca
    buyer = CoSClient("127.0.0.1", cos.port)
    buyer.request(frame("adopt", law="buyer", cert=ca.issue(tuple(BUYER)).to_json()))
    buo = CoSClient("127.0.0.1", cos.port)
    buo.request(frame("adopt", law="component", cert=ca.issue(("BuO", "store7", "B")).to_json()))
    print("adopted buyer and BuO over the frame protocol")

    ops = {"Authorization": "Bearer token-ops"}
    viewer = {"Authorization": "Bearer token-viewer"}

    events = []

    def watch():
        with requests.get(base + "/events", headers=ops, stream=True) as stream:
            for line in stream.iter_lines():
                if line.startswith(b"data: "):
                    events.append(json.loads(line[6:]))
                    return

    requests.post(base + "/subscribe", headers=ops, json={"target": BUYER, "event": "violation"})
    watcher = threading.Thread(target=watch, daemon=True)
    watcher.start()

    buo.request(frame("send", to=BUYER, payload={"kind": "budget", "args": [500.0]}))
    time.sleep(0.2)
    print("\ncomponents visible to the operator:",
          requests.get(base + "/components", headers=ops).json()["components"])
    print("examine budget:",
          requests.post(base + "/examine", headers=ops,
                        json={"target": BUYER, "property": "budget"}).json())

    print("\na rogue PO bounces off the law and hits the event stream:")
    buyer.request(frame("send", to=["vendor", "vendors", "B"],
                        payload={"kind": "PO", "args": [9_999_999.0, "milk", 1.0]}))
    watcher.join(timeout=3)
    print("pushed event:", events[0] if events else "none")

    print("\nthe observer may look but not touch:")
    print("examine:", requests.post(base + "/examine", headers=viewer,
                                    json={"target": BUYER, "property": "budget"}).json()["ok"])
    print("invoke remove:", requests.post(base + "/invoke", headers=viewer,
                                          json={"target": BUYER, "operation": "remove"}).json())

    print("\nthe operator runs the guarded remove flow:")
    for step in (("acquire", ["remove"]), ("remove", []), ):
        result = requests.post(base + "/invoke", headers=ops,
                               json={"target": BUYER, "operation": step[0], "args": step[1]}).json()
        print(f"  {step[0]}: {result}")
    print("examine blocked:", requests.post(base + "/examine", headers=ops,
                                            json={"target": BUYER, "property": "blocked"}).json())

    print(f"\naudit trail tail ({service_cfg.audit_file}):")
    for record in requests.get(base + "/audit?limit=500", headers=ops).json()["records"][-5:]:
        print("  ", record)

    cos.shutdown()
    gateway.shutdown()
    runtime.stop()


if __name__ == "__main__":
    main()
