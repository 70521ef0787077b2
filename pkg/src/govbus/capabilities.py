"""Management capabilities built from law rules.

Communication-based capabilities (properties, operations, events) are
realized entirely in law text plus control state; nothing is asked of
the managed component. The functions here generate reusable rule
fragments. Dispatch inside a law is first-match-wins, so fragment
order matters; ``assemble_law`` just concatenates, and each fragment
documents where it belongs (the usual order: purview gate, guarded
operations, property replies, subscriptions, blocked-agent gates,
then the law's own traffic rules).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .values import Payload

MANAGER_FORMS = ("examine", "invoke", "subscribe", "unsubscribe")

# state keys the runtime or fragment conventions own
RESERVED_STATE_KEYS = ("#self", "#obligations", "blocked")


def examine(prop: str) -> Payload:
    return Payload("examine", (prop,))


def invoke(operation: str, *args) -> Payload:
    return Payload("invoke", (operation,) + args)


def subscribe(event: str) -> Payload:
    return Payload("subscribe", (event,))


def unsubscribe(event: str) -> Payload:
    return Payload("unsubscribe", (event,))


def reply_payload(name: str, value) -> Payload:
    from .values import freeze

    return Payload("reply", (name, freeze(value)))


def is_manager_message(payload: Payload) -> bool:
    return payload.kind in MANAGER_FORMS


@dataclass(frozen=True)
class Capability:
    """One managerial capability a law provides for its agents.

    Communication-based capabilities live entirely in law rules and
    control state; internal ones route to a component's MI stub.
    """

    kind: str  # property | operation | event
    name: str
    defining_law: str
    value_type: str = ""
    internal: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("property", "operation", "event"):
            raise ValueError(f"unknown capability kind {self.kind!r}")


@dataclass(frozen=True)
class LawFragment:
    """An ordered block of law-text rules."""

    rules: tuple[str, ...]

    def text(self) -> str:
        return "\n".join(self.rules) + "\n"


def assemble_law(*parts: "str | LawFragment | Iterable[str]") -> str:
    lines: list[str] = []
    for part in parts:
        if isinstance(part, LawFragment):
            lines.extend(part.rules)
        elif isinstance(part, str):
            lines.append(part)
        else:
            lines.extend(part)
    return "\n".join(lines) + "\n"


def _check_name(name: str) -> str:
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
        raise ValueError(f"{name!r} is not a legal state/property name")
    if name in RESERVED_STATE_KEYS or name.startswith("subs_") or name.startswith("#"):
        raise ValueError(f"{name!r} collides with a reserved state key")
    return name


def lawfrag_property_counter(name: str, message_kind: str, then: str = "forward") -> LawFragment:
    """Count matching sends in state key `name`; answer examine(name).

    `then` is the disposition after counting: "forward" in a leaf law,
    "delegate" when the counting law has subordinates that decide the
    message's fate.
    """
    _check_name(name)
    if then not in ("forward", "delegate"):
        raise ValueError("then must be 'forward' or 'delegate'")
    return LawFragment(
        (
            f'UPON sent({message_kind}) DO [{name} <- {name} + 1, {then}]',
            f'UPON arrived(examine("{name}")) IF Sender.layer = "M" '
            f'DO [emit(Sender, reply("{name}", {name}))]',
        )
    )


def inflow_update_op(window: float, key: str = "inflow_arrivals") -> str:
    """The bookkeeping op to embed in every arrival rule of the law."""
    return f"{key} <- drop_le(append({key}, Now), Now - {window})"


def lawfrag_inflow(window: float) -> LawFragment:
    """Arrivals-per-window property over the half-open window (now-W, now].

    The standalone fragment records all arrivals and delivers them; a
    law with its own arrival rules embeds ``inflow_update_op`` in each
    of them instead of using the catch-all rule here.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    return LawFragment(
        (
            'UPON arrived(examine("inflow")) IF Sender.layer = "M" '
            f'DO [emit(Sender, reply("inflow", count_gt(inflow_arrivals, Now - {window})))]',
            f"UPON arrived(*) DO [{inflow_update_op(window)}, deliver]",
        )
    )


def lawfrag_remove() -> LawFragment:
    """invoke(remove) blocks all base-layer traffic both ways.

    The management channel stays open: place this fragment after the
    law's examine/invoke/subscribe rules so managers from the purview
    can still reach a removed component's controller.
    """
    return LawFragment(
        (
            'UPON arrived(invoke("remove")) IF Sender.layer = "M" '
            'DO [blocked <- 1, emit(Sender, reply("remove", "ok")), '
            'audit("managerMsg", ("remove", Sender))]',
            'UPON arrived(*) IF blocked = 1 and Sender.layer = "B" '
            'DO [audit("rejection", ("blocked-recv", Sender))]',
            'UPON sent(*) IF blocked = 1 and layerOf(Peer) = "B" '
            'DO [audit("rejection", ("blocked-send", Peer))]',
        )
    )


def lawfrag_purview() -> LawFragment:
    """Drop manager traffic from outside the agent's own branch.

    Must precede every other manager-facing rule in the law.
    """
    return LawFragment(
        (
            'UPON arrived(*) IF Sender.layer = "M" and Sender.branch != Self.branch '
            'DO [audit("rejection", ("purview", Sender, Msg))]',
        )
    )


def lawfrag_subscription(declared_events: Iterable[str]) -> LawFragment:
    """subscribe/unsubscribe handling for the law's declared events.

    Subscribers are kept per event under ``subs_<event>``; a law fires
    an event with the ``notify(<event>, <value>)`` operation, which
    emits to every recorded subscriber. Undeclared events are rejected
    and audited.
    """
    rules: list[str] = []
    for event in declared_events:
        _check_name(event)
        rules.append(
            f'UPON arrived(subscribe("{event}")) IF Sender.layer = "M" '
            f"DO [subs_{event} <- add_unique(subs_{event}, Sender)]"
        )
        rules.append(
            f'UPON arrived(unsubscribe("{event}")) IF Sender.layer = "M" '
            f"DO [subs_{event} <- remove_item(subs_{event}, Sender)]"
        )
    rules.append(
        'UPON arrived(subscribe(E)) IF Sender.layer = "M" '
        'DO [audit("rejection", ("unknown-event", E, Sender))]'
    )
    rules.append(
        'UPON arrived(unsubscribe(E)) IF Sender.layer = "M" '
        'DO [audit("rejection", ("unknown-event", E, Sender))]'
    )
    return LawFragment(tuple(rules))


def lawfrag_mi_bridge(allowed_caps: Mapping[str, str]) -> LawFragment:
    """Relay selected examine/invoke requests to the component's MI stub.

    `allowed_caps` maps capability name to its form ("examine" or
    "invoke"). Requests for anything else fall through to the law's
    own fallback rules.
    """
    rules: list[str] = []
    for cap, form in allowed_caps.items():
        if form not in ("examine", "invoke"):
            raise ValueError(f"MI capability {cap!r} must be examine or invoke, not {form!r}")
        rules.append(f'UPON arrived({form}("{cap}")) IF Sender.layer = "M" DO [deliverMI]')
    return LawFragment(tuple(rules))


def reflexive_role_filter(
    role_table: Mapping[str, Iterable[str]],
    assignments: Mapping[str, str],
    default_role: str | None = None,
) -> LawFragment:
    """Law-M rules: role assignment at adoption plus per-form gating.

    `role_table` maps role name to the manager-message forms it may
    send. `assignments` maps manager names to roles; unknown managers
    get `default_role`, or the most restrictive role when unset. Every
    manager send is appended to the audit trail exactly once whether it
    is forwarded or denied.
    """
    roles = {role: frozenset(forms) for role, forms in role_table.items()}
    if not roles:
        raise ValueError("role table is empty")
    for role, forms in roles.items():
        unknown = forms - set(MANAGER_FORMS)
        if unknown:
            raise ValueError(f"role {role!r} allows unknown forms {sorted(unknown)}")
    if default_role is None:
        default_role = min(roles, key=lambda r: (len(roles[r]), r))
    if default_role not in roles:
        raise ValueError(f"default role {default_role!r} not in role table")

    rules: list[str] = []
    for manager, role in assignments.items():
        if role not in roles:
            raise ValueError(f"manager {manager!r} assigned unknown role {role!r}")
        rules.append(
            f'UPON adopted IF Cert.layer = "M" and Cert.name = "{manager}" '
            f'DO [role <- "{role}", forward]'
        )
    rules.append(f'UPON adopted IF Cert.layer = "M" DO [role <- "{default_role}", forward]')

    for form in MANAGER_FORMS:
        allowed = sorted(role for role, forms in roles.items() if form in forms)
        audit_op = f'audit("managerMsg", ("{form}", Msg, Peer))'
        if allowed:
            cond = " or ".join(f'role = "{r}"' for r in allowed)
            rules.append(f"UPON sent({form}(_)) IF {cond} DO [{audit_op}, forward]")
            if form == "invoke":
                # two-argument invokes, e.g. invoke("acquire", "remove")
                rules.append(f"UPON sent({form}(_, _)) IF {cond} DO [{audit_op}, forward]")
        # any arity not explicitly allowed above is denied
        rules.append(
            f"UPON sent({form}) DO [{audit_op}, "
            f'audit("rejection", ("role", "{form}", Msg, Peer))]'
        )
    rules.append('UPON sent(*) DO [audit("managerMsg", ("other", Msg, Peer)), forward]')
    return LawFragment(tuple(rules))


def reflexive_coordination_lock(
    op_name: str,
    ttl: float = 30,
    effect_ops: Iterable[str] = (),
) -> LawFragment:
    """Serialize a guarded operation behind a per-target token.

    A manager must invoke("acquire", op) at the target before
    invoke(op) is honored; a second requester is refused until release.
    A held token expires after `ttl` via an enforced obligation.
    `effect_ops` are the law ops that realize the operation itself
    (e.g. ``blocked <- 1`` for remove). Place this fragment before any
    unguarded handler of the same operation.
    """
    safe = re.sub(r"[^A-Za-z0-9_]", "_", op_name)
    lock = f"lock_{safe}"
    ttl_ob = f"lockttl_{safe}"
    effect = "".join(f"{op}, " for op in effect_ops)
    return LawFragment(
        (
            f'UPON arrived(invoke("acquire", "{op_name}")) IF Sender.layer = "M" and {lock} = 0 '
            f'DO [{lock} <- Sender, impose("{ttl_ob}", {ttl}), '
            f'emit(Sender, reply("acquire", "granted"))]',
            f'UPON arrived(invoke("acquire", "{op_name}")) IF Sender.layer = "M" and {lock} = Sender '
            f'DO [emit(Sender, reply("acquire", "granted"))]',
            f'UPON arrived(invoke("acquire", "{op_name}")) IF Sender.layer = "M" '
            f'DO [emit(Sender, reply("acquire", ("held", {lock}))), '
            f'audit("rejection", ("lock-held", "{op_name}", Sender))]',
            f'UPON arrived(invoke("release", "{op_name}")) IF Sender.layer = "M" and {lock} = Sender '
            f'DO [{lock} <- 0, repeal("{ttl_ob}"), emit(Sender, reply("release", "ok"))]',
            f'UPON arrived(invoke("release", "{op_name}")) IF Sender.layer = "M" '
            f'DO [emit(Sender, reply("release", "not-holder")), '
            f'audit("rejection", ("release-not-holder", "{op_name}", Sender))]',
            f'UPON arrived(invoke("{op_name}")) IF Sender.layer = "M" and {lock} = Sender '
            f'DO [{effect}{lock} <- 0, repeal("{ttl_ob}"), '
            f'emit(Sender, reply("{op_name}", "ok")), '
            f'audit("managerMsg", ("{op_name}", Sender))]',
            f'UPON arrived(invoke("{op_name}")) IF Sender.layer = "M" '
            f'DO [emit(Sender, reply("{op_name}", "denied-token")), '
            f'audit("rejection", ("no-token", "{op_name}", Sender))]',
            f'UPON obligationDue("{ttl_ob}") DO [{lock} <- 0]',
        )
    )
