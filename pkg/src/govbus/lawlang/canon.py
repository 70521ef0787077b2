"""Canonical rendering and hashing of laws.

Two texts that differ only in whitespace, comments or numeric spelling
render to the same canonical form and therefore the same digest; any
semantic change to a rule changes the digest. Rule order is preserved
(dispatch is first-match-wins, so order is part of law identity).
"""

from __future__ import annotations

import hashlib

from . import ast as A

_CANON_OP_KEYWORD = {v: k for k, v in A.OP_KEYWORDS.items()}


def _render_value(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
        return f'"{escaped}"'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_expr(expr: A.Expr) -> str:
    if isinstance(expr, A.Lit):
        return _render_value(expr.value)
    if isinstance(expr, A.Name):
        return expr.ident
    if isinstance(expr, A.Dotted):
        return ".".join((expr.root,) + expr.path)
    if isinstance(expr, A.Subscript):
        return f"{expr.name}[{render_expr(expr.key)}]"
    if isinstance(expr, A.Call):
        return f"{expr.func}({', '.join(render_expr(a) for a in expr.args)})"
    if isinstance(expr, A.TupleLit):
        return f"({', '.join(render_expr(i) for i in expr.items)})"
    if isinstance(expr, A.Unary):
        if expr.op == "not":
            return f"not {_paren(expr.operand)}"
        return f"-{_paren(expr.operand)}"
    if isinstance(expr, A.Binary):
        return f"{_paren(expr.left)} {expr.op} {_paren(expr.right)}"
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def _paren(expr: A.Expr) -> str:
    # fully parenthesize nested operators so rendering is unambiguous
    # without tracking precedence
    if isinstance(expr, (A.Binary, A.Unary)):
        return f"({render_expr(expr)})"
    return render_expr(expr)


def _render_pat_arg(arg: A.PatArg) -> str:
    if arg.wildcard:
        return "_"
    if arg.bind is not None:
        return arg.bind
    return _render_value(arg.literal)


def render_event_pattern(pat: A.EventPattern) -> str:
    if pat.msg is None:
        return pat.kind
    m = pat.msg
    if m.kind is None and m.args is None:
        return f"{pat.kind}(*)"
    if m.kind is None:
        return f"{pat.kind}({', '.join(_render_pat_arg(a) for a in m.args or ())})"
    if m.args is None:
        return f"{pat.kind}({m.kind})"
    return f"{pat.kind}({m.kind}({', '.join(_render_pat_arg(a) for a in m.args)}))"


def render_op(op: A.DoOp) -> str:
    if isinstance(op, A.Assign):
        target = op.target if op.key is None else f"{op.target}[{render_expr(op.key)}]"
        return f"{target} <- {render_expr(op.value)}"
    keyword = _CANON_OP_KEYWORD.get(op.name, op.name)
    if not op.args:
        return keyword
    return f"{keyword}({', '.join(render_expr(a) for a in op.args)})"


def render_rule(rule: A.Rule) -> str:
    parts = [f"UPON {render_event_pattern(rule.event)}"]
    if rule.condition is not None:
        parts.append(f"IF {render_expr(rule.condition)}")
    parts.append(f"DO [{', '.join(render_op(o) for o in rule.ops)}]")
    return " ".join(parts)


def pretty_print(law: A.LawAST) -> str:
    """Render a law as canonical text; reparses to an equal AST."""
    lines: list[str] = []
    for pat in law.delegations:
        lines.append(f"DELEGATES {render_event_pattern(pat)}")
    for expr in law.constraints:
        lines.append(f"CONSTRAINT {render_expr(expr)}")
    for rule in law.rules:
        lines.append(render_rule(rule))
    return "\n".join(lines) + ("\n" if lines else "")


def hash_law(law: A.LawAST) -> A.LawHash:
    """256-bit digest of the canonical form."""
    return A.LawHash(hashlib.sha256(pretty_print(law).encode("utf-8")).digest())
