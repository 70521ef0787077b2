"""Syntax tree for the law language.

A law is an ordered list of rules of the form
``UPON <event-pattern> [IF <condition>] DO [<op>, ...]`` plus two kinds
of declarations that matter only inside an ensemble: ``DELEGATES``
(event patterns the law passes down to subordinate laws) and
``CONSTRAINT`` (predicates every subordinate operation must satisfy).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

EVENT_KINDS = ("adopted", "sent", "arrived", "obligationDue")

# Control operations the stock engine can execute. validate_law accepts
# a custom repertoire; these are the defaults.
DEFAULT_REPERTOIRE = frozenset(
    {
        "forward",
        "deliver",
        "stateUpdate",
        "imposeObligation",
        "repealObligation",
        "emit",
        "audit",
        "notify",
        "deliverMI",
        "delegate",
    }
)

# DSL keyword -> canonical operation name
OP_KEYWORDS = {
    "forward": "forward",
    "deliver": "deliver",
    "impose": "imposeObligation",
    "repeal": "repealObligation",
    "emit": "emit",
    "audit": "audit",
    "notify": "notify",
    "deliverMI": "deliverMI",
    "delegate": "delegate",
}

# exact argument counts accepted per op keyword (None entry = optional)
OP_ARITY = {
    "forward": (0, 1, 2),
    "deliver": (0, 1),
    "imposeObligation": (2,),
    "repealObligation": (1,),
    "emit": (2,),
    "audit": (2,),
    "notify": (2,),
    "deliverMI": (0, 1),
    "delegate": (0,),
}

# which event kinds each disposition op is legal for
OP_EVENT_KINDS = {
    "forward": {"sent", "adopted", "obligationDue"},
    "deliver": {"arrived", "obligationDue"},
}

# dotted-name namespaces available to conditions and op arguments, with
# the fields each exposes (empty set = bare use only)
NAMESPACES = {
    "Self": {"name", "branch", "layer"},
    "Sender": {"name", "branch", "layer"},
    "Peer": {"name", "branch", "layer"},
    "Cert": {"name", "branch", "layer"},
    "Op": {"kind", "sender", "target", "payload", "name", "value", "delay", "detail"},
    "Msg": set(),
    "Now": set(),
}


@dataclass(frozen=True)
class Diagnostic:
    message: str
    line: int = 0
    col: int = 0
    kind: str = "error"

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.kind}: {self.message}"


# --- expressions -----------------------------------------------------------


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Expr):
    value: Any  # number | string | None


@dataclass(frozen=True)
class Name(Expr):
    ident: str  # bound pattern variable or bare cState key


@dataclass(frozen=True)
class Dotted(Expr):
    root: str
    path: tuple[str, ...]


@dataclass(frozen=True)
class Subscript(Expr):
    name: str
    key: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class TupleLit(Expr):
    items: tuple[Expr, ...]


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "-" | "not"
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # and or = != < <= > >= + - * /
    left: Expr
    right: Expr


# --- patterns --------------------------------------------------------------


@dataclass(frozen=True)
class PatArg:
    """One positional slot in a message pattern."""

    bind: str | None = None
    literal: Any = None
    wildcard: bool = False

    def covers(self, other: "PatArg") -> bool:
        if self.wildcard or self.bind is not None:
            return True
        return not other.wildcard and other.bind is None and self.literal == other.literal


@dataclass(frozen=True)
class MsgPattern:
    """Constrains the payload of sent/arrived (or the obligation name).

    ``kind`` of None with no args means "any payload" (written ``*``).
    ``args`` of None means "any arguments of that kind".
    """

    kind: str | None = None
    args: tuple[PatArg, ...] | None = None


@dataclass(frozen=True)
class EventPattern:
    kind: str  # one of EVENT_KINDS
    msg: MsgPattern | None = None

    def covers(self, other: "EventPattern") -> bool:
        """True when every event matched by `other` is matched by self."""
        if self.kind != other.kind:
            return False
        if self.msg is None or self.msg.kind is None and self.msg.args is None:
            return True
        if other.msg is None:
            return False
        if self.msg.kind is not None and self.msg.kind != other.msg.kind:
            return False
        if self.msg.args is None:
            return True
        if other.msg.args is None or len(self.msg.args) != len(other.msg.args):
            return False
        return all(a.covers(b) for a, b in zip(self.msg.args, other.msg.args))


# --- rules and laws --------------------------------------------------------


@dataclass(frozen=True)
class OpCall:
    name: str  # canonical operation name
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Assign:
    """stateUpdate: ``target <- value`` or ``target[key] <- value``."""

    target: str
    value: Expr
    key: Expr | None = None


DoOp = Union[OpCall, Assign]


@dataclass(frozen=True)
class Rule:
    event: EventPattern
    ops: tuple[DoOp, ...]
    condition: Expr | None = None


@dataclass(frozen=True)
class LawAST:
    rules: tuple[Rule, ...] = ()
    delegations: tuple[EventPattern, ...] = ()
    constraints: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class LawSource:
    """A named law text, optionally subordinate to a parent law."""

    name: str
    text: str
    parent: str | None = None


@dataclass(frozen=True)
class LawHash:
    digest: bytes

    @property
    def hex(self) -> str:
        return self.digest.hex()

    def __str__(self) -> str:
        return self.hex
