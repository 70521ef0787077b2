"""Command-line entry points.

Subcommands: ``law check``, ``law hash``, ``cos run``, ``acme run``,
``audit tail``. Diagnostics go to stderr; exit code is nonzero on any
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .hierarchy import build_ensemble, load_manifest
from .lawlang import LawSource, hash_law
from .lawlang.validate import parse_law


def _cmd_law_check(args: argparse.Namespace) -> int:
    try:
        sources = load_manifest(args.manifest)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"cannot read manifest: {exc}", file=sys.stderr)
        return 1
    tree, diags = build_ensemble(sources)
    for d in diags:
        print(str(d), file=sys.stderr)
    if tree is None:
        return 1
    print(f"ensemble ok: root {tree.root!r}, {len(tree.nodes)} laws")
    for name in sorted(tree.nodes):
        node = tree.nodes[name]
        print(f"  {name}: parent={node.parent or '-'} hash={node.digest.hex[:16]}")
    return 0


def _cmd_law_hash(args: argparse.Namespace) -> int:
    try:
        text = Path(args.file).read_text("utf-8")
    except OSError as exc:
        print(f"cannot read law: {exc}", file=sys.stderr)
        return 1
    law, diags = parse_law(LawSource(Path(args.file).stem, text))
    for d in diags:
        print(str(d), file=sys.stderr)
    if law is None or diags:
        return 1
    print(hash_law(law).hex)
    return 0


def _cmd_cos_run(args: argparse.Namespace) -> int:
    from .service import ServiceConfig, serve_cos

    try:
        config = ServiceConfig.load(args.config)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 1
    runtime, cos, gateway = serve_cos(config)
    print(f"controller service on {cos.server_address[0]}:{cos.port}, "
          f"gateway on {gateway.server_address[0]}:{gateway.port}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        print("shutting down")
        cos.shutdown()
        gateway.shutdown()
        runtime.stop()
    return 0


def _cmd_acme_run(args: argparse.Namespace) -> int:
    from .acme import default_config, load_config, load_script, run_scenario, verify_trace

    try:
        config = load_config(args.config) if args.config else default_config()
        script = load_script(args.script) if args.script else ()
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"bad scenario input: {exc}", file=sys.stderr)
        return 1
    trace = run_scenario(config, args.seed, horizon=args.until, script=script,
                         trace_path=args.trace)
    print(f"trace: {len(trace.records)} records, digest {trace.digest()}")
    if args.trace:
        print(f"wrote {args.trace}")
    if args.verify:
        report = verify_trace(trace, config, script)
        print(json.dumps(report.to_json(), indent=2))
        return 0 if report.ok else 1
    return 0


def _cmd_audit_tail(args: argparse.Namespace) -> int:
    path = Path(args.file)
    if not path.exists():
        print(f"no audit file {path}", file=sys.stderr)
        return 1
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
        for line in lines[-args.lines:]:
            sys.stdout.write(line)
        if not args.follow:
            return 0
        try:
            while True:
                line = fh.readline()
                if line:
                    sys.stdout.write(line)
                    sys.stdout.flush()
                else:
                    time.sleep(0.2)
        except KeyboardInterrupt:
            return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="govbus", description="governed message exchange")
    sub = parser.add_subparsers(dest="command", required=True)

    law = sub.add_parser("law", help="law tooling")
    law_sub = law.add_subparsers(dest="law_command", required=True)
    check = law_sub.add_parser("check", help="parse, validate and link an ensemble")
    check.add_argument("manifest")
    check.set_defaults(fn=_cmd_law_check)
    lhash = law_sub.add_parser("hash", help="print the canonical digest of one law file")
    lhash.add_argument("file")
    lhash.set_defaults(fn=_cmd_law_hash)

    cos = sub.add_parser("cos", help="controller service")
    cos_sub = cos.add_subparsers(dest="cos_command", required=True)
    run = cos_sub.add_parser("run", help="run the controller service and manager gateway")
    run.add_argument("--config", required=True)
    run.set_defaults(fn=_cmd_cos_run)

    acme = sub.add_parser("acme", help="supermarket-chain scenario")
    acme_sub = acme.add_subparsers(dest="acme_command", required=True)
    arun = acme_sub.add_parser("run", help="run one deterministic scenario")
    arun.add_argument("--seed", type=int, required=True)
    arun.add_argument("--until", type=float, default=None, help="run horizon override")
    arun.add_argument("--config", default=None, help="scenario config JSON")
    arun.add_argument("--script", default=None, help="misbehavior script JSON")
    arun.add_argument("--trace", default=None, help="write the trace JSONL here")
    arun.add_argument("--verify", action="store_true", help="run the trace oracle")
    arun.set_defaults(fn=_cmd_acme_run)

    audit = sub.add_parser("audit", help="audit trail tools")
    audit_sub = audit.add_subparsers(dest="audit_command", required=True)
    tail = audit_sub.add_parser("tail", help="print (and follow) an audit file")
    tail.add_argument("--file", required=True)
    tail.add_argument("--lines", type=int, default=20)
    tail.add_argument("--follow", action="store_true")
    tail.set_defaults(fn=_cmd_audit_tail)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
