"""Conformance hierarchies: trees of laws where subordinates cannot
violate their superiors.

Enforcement is by construction: resolution runs root-first, a superior
law decides whether (and where) to ``delegate`` to the next law down,
and every operation a subordinate contributes is filtered through each
ancestor's CONSTRAINT predicates. A law that delegates nothing makes
every subordinate rule dead code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .engine import PathOutcome, RegulatedEvent, evaluate_path
from .lawlang import ast as A
from .lawlang.canon import hash_law, render_event_pattern
from .lawlang.parser import parse_law_text
from .lawlang.validate import validate_law


@dataclass
class LawNode:
    name: str
    law: A.LawAST
    parent: str | None
    digest: A.LawHash
    children: list[str] = field(default_factory=list)
    lineage: tuple[str, ...] = ()  # ancestor law hashes, root first

    @property
    def chain(self) -> tuple[str, ...]:
        """Hash lineage including this law's own hash; goes on the wire."""
        return self.lineage + (self.digest.hex,)


@dataclass
class LawTree:
    root: str
    nodes: dict[str, LawNode]

    def node(self, name: str) -> LawNode:
        return self.nodes[name]

    def path_to(self, leaf: str) -> list[LawNode]:
        """Nodes from the root down to (and including) `leaf`."""
        path: list[LawNode] = []
        cursor: str | None = leaf
        while cursor is not None:
            node = self.nodes[cursor]
            path.append(node)
            cursor = node.parent
        path.reverse()
        return path


def build_ensemble(
    sources: list[A.LawSource],
    repertoire: frozenset[str] | set[str] = A.DEFAULT_REPERTOIRE,
) -> tuple[LawTree | None, list[A.Diagnostic]]:
    """Parse, validate and link a law ensemble into a conformance tree.

    Besides per-law checks this verifies the tree shape (single root,
    no cycles, no orphans) and static conformance: a child law may only
    handle events its parent declares it DELEGATES.
    """
    diags: list[A.Diagnostic] = []
    parsed: dict[str, tuple[A.LawAST, str | None]] = {}
    for src in sources:
        if src.name in parsed:
            diags.append(A.Diagnostic(f"duplicate law name {src.name!r}"))
            continue
        result = parse_law_text(src.text)
        law_diags = list(result.diagnostics)
        if result.ast is not None:
            law_diags.extend(validate_law(result.ast, repertoire))
        for d in law_diags:
            diags.append(A.Diagnostic(f"law {src.name!r}: {d.message}", d.line, d.col, d.kind))
        if result.ast is None:
            continue
        parsed[src.name] = (result.ast, src.parent)

    roots = [name for name, (_, parent) in parsed.items() if parent is None]
    for name, (_, parent) in parsed.items():
        if parent is not None and parent not in parsed:
            diags.append(A.Diagnostic(f"law {name!r} names unknown parent {parent!r}"))
    if diags:
        return None, diags
    if len(roots) != 1:
        diags.append(A.Diagnostic(f"ensemble must have exactly one root law, found {len(roots)}"))
        return None, diags

    nodes = {
        name: LawNode(name, law, parent, hash_law(law))
        for name, (law, parent) in parsed.items()
    }
    for node in nodes.values():
        if node.parent is not None:
            nodes[node.parent].children.append(node.name)

    # walk from the root; anything not reached sits on a cycle
    order: list[str] = []
    stack = [roots[0]]
    while stack:
        name = stack.pop()
        order.append(name)
        node = nodes[name]
        node.lineage = () if node.parent is None else nodes[node.parent].chain
        stack.extend(reversed(node.children))
    if len(order) != len(nodes):
        cyclic = sorted(set(nodes) - set(order))
        diags.append(A.Diagnostic(f"laws unreachable from the root (cycle?): {', '.join(cyclic)}"))
        return None, diags

    for node in nodes.values():
        if node.parent is None:
            continue
        parent_law = nodes[node.parent].law
        for rule in node.law.rules:
            if not any(d.covers(rule.event) for d in parent_law.delegations):
                diags.append(
                    A.Diagnostic(
                        f"law {node.name!r} handles {render_event_pattern(rule.event)} "
                        f"which its parent {node.parent!r} does not delegate"
                    )
                )
    if diags:
        return None, diags
    return LawTree(roots[0], nodes), diags


def resolve(tree: LawTree, leaf: str, event: RegulatedEvent, state: Mapping[str, Any]) -> PathOutcome:
    """Evaluate one event through the superior-to-subordinate chain."""
    if leaf not in tree.nodes:
        raise KeyError(f"law {leaf!r} is not in the ensemble")
    chain = [(node.name, node.law) for node in tree.path_to(leaf)]
    return evaluate_path(chain, event, state)


# --- manifest file handling ---------------------------------------------------


def load_manifest(path: str | Path) -> list[A.LawSource]:
    """Read an ensemble manifest: {"laws": [{name, file, parent}, ...]}.

    Law file paths are resolved relative to the manifest.
    """
    manifest_path = Path(path)
    data = json.loads(manifest_path.read_text("utf-8"))
    sources: list[A.LawSource] = []
    for entry in data["laws"]:
        law_path = manifest_path.parent / entry["file"]
        sources.append(
            A.LawSource(
                name=entry["name"],
                text=law_path.read_text("utf-8"),
                parent=entry.get("parent"),
            )
        )
    return sources


def write_manifest(directory: str | Path, sources: list[A.LawSource]) -> Path:
    """Write one .law file per source plus manifest.json; returns manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for src in sources:
        filename = f"{src.name}.law"
        (directory / filename).write_text(src.text, "utf-8")
        entries.append({"name": src.name, "file": filename, "parent": src.parent})
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps({"laws": entries}, indent=2) + "\n", "utf-8")
    return manifest
