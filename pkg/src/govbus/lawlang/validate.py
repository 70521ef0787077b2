"""Static checks on parsed laws: repertoire, locality and scoping.

Locality is structural: a rule may reference only the triggering event
(via the built-in namespaces) and the agent's own control state (bare
or subscripted identifiers). A dotted name rooted anywhere else is an
attempt to read beyond the local pair and is rejected.
"""

from __future__ import annotations

from . import ast as A


def _walk_expr(expr: A.Expr, diags: list[A.Diagnostic], *, in_constraint: bool) -> None:
    if isinstance(expr, (A.Lit, A.Name)):
        return
    if isinstance(expr, A.Dotted):
        fields = A.NAMESPACES.get(expr.root)
        if fields is None:
            diags.append(
                A.Diagnostic(
                    f"locality violation: {expr.root!r} is not a local scope "
                    "(only the triggering event and this agent's control state are visible)"
                )
            )
            return
        if expr.root == "Op" and not in_constraint:
            diags.append(A.Diagnostic("the Op namespace is only available inside CONSTRAINT predicates"))
        if expr.path and expr.path[0] not in fields:
            diags.append(A.Diagnostic(f"unknown field {expr.path[0]!r} on {expr.root}"))
        if len(expr.path) > 1:
            diags.append(A.Diagnostic(f"cannot descend further into {expr.root}.{expr.path[0]}"))
        return
    if isinstance(expr, A.Subscript):
        _walk_expr(expr.key, diags, in_constraint=in_constraint)
        return
    if isinstance(expr, A.Call):
        if expr.func in A.NAMESPACES:
            diags.append(A.Diagnostic(f"{expr.func} is a namespace, not a function"))
        for a in expr.args:
            _walk_expr(a, diags, in_constraint=in_constraint)
        return
    if isinstance(expr, A.TupleLit):
        for i in expr.items:
            _walk_expr(i, diags, in_constraint=in_constraint)
        return
    if isinstance(expr, A.Unary):
        _walk_expr(expr.operand, diags, in_constraint=in_constraint)
        return
    if isinstance(expr, A.Binary):
        _walk_expr(expr.left, diags, in_constraint=in_constraint)
        _walk_expr(expr.right, diags, in_constraint=in_constraint)
        return
    diags.append(A.Diagnostic(f"unknown expression node {type(expr).__name__}"))


def validate_law(law: A.LawAST, repertoire: frozenset[str] | set[str] = A.DEFAULT_REPERTOIRE) -> list[A.Diagnostic]:
    """Return diagnostics; empty means the law is accepted.

    Checks: every mandated operation is in the repertoire, disposition
    operations match their event kinds (forward only on sent/adopted/
    obligationDue, deliver only on arrived/obligationDue), and all
    expressions are local.
    """
    diags: list[A.Diagnostic] = []
    for rule in law.rules:
        if rule.condition is not None:
            _walk_expr(rule.condition, diags, in_constraint=False)
        for op in rule.ops:
            if isinstance(op, A.Assign):
                if "stateUpdate" not in repertoire:
                    diags.append(A.Diagnostic("operation 'stateUpdate' is not in the repertoire"))
                if op.key is not None:
                    _walk_expr(op.key, diags, in_constraint=False)
                _walk_expr(op.value, diags, in_constraint=False)
                continue
            if op.name not in repertoire:
                diags.append(A.Diagnostic(f"operation {op.name!r} is not in the repertoire"))
            legal_kinds = A.OP_EVENT_KINDS.get(op.name)
            if legal_kinds is not None and rule.event.kind not in legal_kinds:
                diags.append(
                    A.Diagnostic(
                        f"{op.name!r} is not legal in a ruling for {rule.event.kind!r} events"
                    )
                )
            for a in op.args:
                _walk_expr(a, diags, in_constraint=False)
    for expr in law.constraints:
        _walk_expr(expr, diags, in_constraint=True)
    return diags


def parse_law(source: A.LawSource) -> tuple[A.LawAST | None, list[A.Diagnostic]]:
    """Parse and statically check one law source.

    Returns (ast, diagnostics). The AST is None only on syntax errors;
    scope diagnostics come back alongside the parsed AST so callers can
    still inspect it.
    """
    from .parser import parse_law_text

    result = parse_law_text(source.text)
    if result.ast is None:
        return None, result.diagnostics
    diags = list(result.diagnostics)
    diags.extend(validate_law(result.ast))
    return result.ast, diags
