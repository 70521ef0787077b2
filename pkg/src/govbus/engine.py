"""Law evaluation: map (regulated event, control state) to a ruling.

``evaluate`` is a pure function of its inputs. Rule dispatch is
first-match-wins; the matched rule's operation list is evaluated
eagerly against a shadow copy of the state, so a state update is
visible to later operations of the same ruling while the caller's
state is never touched. Any expression error fails closed: the ruling
collapses to an empty one carrying a diagnostic.

``evaluate_path`` evaluates a superior-to-subordinate chain of laws:
a ``delegate`` pseudo-operation splices the next law's ruling in at
that point, and every operation contributed by a subordinate law is
checked against each ancestor's CONSTRAINT predicates. Violating
operations are removed and reported as filter events.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, MutableMapping, Sequence, Union

from .lawlang import ast as A
from .values import (
    BUILTINS,
    EvalError,
    Payload,
    Triple,
    arith,
    compare,
    freeze,
    truthy,
    values_equal,
)

EVENT_KINDS = A.EVENT_KINDS


@dataclass(frozen=True)
class RegulatedEvent:
    """An occurrence at one agent that triggers law evaluation."""

    kind: str  # adopted | sent | arrived | obligationDue
    subject: Triple
    message: Payload | None = None
    peer: Triple | None = None
    sender: Triple | None = None
    obligation: str | None = None
    sim_time: float = 0

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


def sent_event(subject: Triple, message: Payload, receiver: Triple, now: float) -> RegulatedEvent:
    return RegulatedEvent("sent", subject, message=message, peer=receiver, sender=subject, sim_time=now)


def arrived_event(subject: Triple, message: Payload, sender: Triple, now: float) -> RegulatedEvent:
    return RegulatedEvent("arrived", subject, message=message, peer=sender, sender=sender, sim_time=now)


def adopted_event(subject: Triple, now: float) -> RegulatedEvent:
    return RegulatedEvent("adopted", subject, sender=subject, sim_time=now)


def obligation_event(subject: Triple, name: str, now: float) -> RegulatedEvent:
    return RegulatedEvent("obligationDue", subject, obligation=name, sim_time=now)


# --- concrete control operations -------------------------------------------


@dataclass(frozen=True)
class StateUpdate:
    key: str
    value: Any  # concrete value, or an Expr for hand-built rulings
    op_name = "stateUpdate"


@dataclass(frozen=True)
class Forward:
    payload: Payload | None = None
    sender: Triple | None = None
    op_name = "forward"


@dataclass(frozen=True)
class Deliver:
    payload: Payload | None = None
    op_name = "deliver"


@dataclass(frozen=True)
class Emit:
    target: Any
    payload: Payload
    op_name = "emit"


@dataclass(frozen=True)
class Impose:
    name: str
    delay: float
    op_name = "imposeObligation"


@dataclass(frozen=True)
class Repeal:
    name: str
    op_name = "repealObligation"


@dataclass(frozen=True)
class Audit:
    kind: str
    detail: Any
    op_name = "audit"


@dataclass(frozen=True)
class DeliverMI:
    payload: Payload | None = None
    op_name = "deliverMI"


@dataclass(frozen=True)
class Delegate:
    op_name = "delegate"


ControlOperation = Union[StateUpdate, Forward, Deliver, Emit, Impose, Repeal, Audit, DeliverMI, Delegate]


def op_view(op: ControlOperation) -> dict[str, Any]:
    """Fields of an operation as seen by CONSTRAINT predicates."""
    view: dict[str, Any] = {"kind": op.op_name}
    if isinstance(op, StateUpdate):
        view.update(name=op.key, value=op.value)
    elif isinstance(op, Forward):
        view.update(sender=op.sender, payload=op.payload)
    elif isinstance(op, (Deliver, DeliverMI)):
        view.update(payload=op.payload)
    elif isinstance(op, Emit):
        view.update(target=op.target, payload=op.payload)
    elif isinstance(op, Impose):
        view.update(name=op.name, delay=op.delay)
    elif isinstance(op, Repeal):
        view.update(name=op.name)
    elif isinstance(op, Audit):
        view.update(name=op.kind, detail=op.detail)
    return view


@dataclass(frozen=True)
class Ruling:
    """Ordered operations a law mandates for one event. May be empty."""

    ops: tuple[ControlOperation, ...] = ()
    diagnostics: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.ops)


@dataclass(frozen=True)
class FilterEvent:
    """An operation removed because it violated an ancestor constraint."""

    law: str
    ancestor: str
    op: ControlOperation


@dataclass(frozen=True)
class PathOutcome:
    ruling: Ruling
    filtered: tuple[FilterEvent, ...] = ()


# --- expression evaluation --------------------------------------------------


class _Env:
    __slots__ = ("event", "binds", "state_get", "op_fields")

    def __init__(
        self,
        event: RegulatedEvent,
        state_get: Callable[[str], Any],
        binds: Mapping[str, Any],
        op_fields: Mapping[str, Any] | None = None,
    ):
        self.event = event
        self.binds = binds
        self.state_get = state_get
        self.op_fields = op_fields

    def namespace(self, root: str) -> Any:
        ev = self.event
        if root == "Now":
            return ev.sim_time
        if root == "Msg":
            return ev.message
        if root == "Self":
            return ev.subject
        if root == "Sender" or root == "Cert":
            if ev.sender is None:
                raise EvalError(f"{root} is not available for {ev.kind} events")
            return ev.sender
        if root == "Peer":
            if ev.peer is None:
                raise EvalError(f"Peer is not available for {ev.kind} events")
            return ev.peer
        if root == "Op":
            if self.op_fields is None:
                raise EvalError("Op is only available inside constraints")
            return self.op_fields
        raise EvalError(f"unknown scope {root!r}")


_TRIPLE_FIELDS = {"name": 0, "branch": 1, "layer": 2}


def _state_key(name: str, key_value: Any) -> str:
    if isinstance(key_value, str):
        return f"{name}[{key_value}]"
    if isinstance(key_value, (int, float)):
        return f"{name}[{key_value}]"
    raise EvalError(f"state subscript must be a string or number, got {type(key_value).__name__}")


def eval_expr(expr: A.Expr, env: _Env) -> Any:
    if isinstance(expr, A.Lit):
        return expr.value
    if isinstance(expr, A.Name):
        ident = expr.ident
        if ident in env.binds:
            return env.binds[ident]
        if ident in A.NAMESPACES:
            return env.namespace(ident)
        return env.state_get(ident)
    if isinstance(expr, A.Dotted):
        base = env.namespace(expr.root)
        value: Any = base
        for fieldname in expr.path:
            if isinstance(value, Mapping):
                value = value.get(fieldname)
            elif isinstance(value, tuple) and fieldname in _TRIPLE_FIELDS:
                idx = _TRIPLE_FIELDS[fieldname]
                if idx >= len(value):
                    raise EvalError(f"{expr.root} has no field {fieldname!r}")
                value = value[idx]
            else:
                raise EvalError(f"cannot read field {fieldname!r} of {expr.root}")
        return value
    if isinstance(expr, A.Subscript):
        return env.state_get(_state_key(expr.name, eval_expr(expr.key, env)))
    if isinstance(expr, A.Call):
        args = [eval_expr(a, env) for a in expr.args]
        fn = BUILTINS.get(expr.func)
        if fn is None:
            return Payload(expr.func, tuple(freeze(a) for a in args))
        try:
            return fn(*args)
        except EvalError:
            raise
        except Exception as exc:
            raise EvalError(f"{expr.func}: {exc}") from exc
    if isinstance(expr, A.TupleLit):
        return tuple(freeze(eval_expr(i, env)) for i in expr.items)
    if isinstance(expr, A.Unary):
        v = eval_expr(expr.operand, env)
        if expr.op == "not":
            return 0 if truthy(v) else 1
        if not isinstance(v, (int, float)):
            raise EvalError("unary minus needs a number")
        return -v
    if isinstance(expr, A.Binary):
        op = expr.op
        if op == "and":
            left = eval_expr(expr.left, env)
            if not truthy(left):
                return 0
            return 1 if truthy(eval_expr(expr.right, env)) else 0
        if op == "or":
            left = eval_expr(expr.left, env)
            if truthy(left):
                return 1
            return 1 if truthy(eval_expr(expr.right, env)) else 0
        left = eval_expr(expr.left, env)
        right = eval_expr(expr.right, env)
        if op == "=":
            return 1 if values_equal(left, right) else 0
        if op == "!=":
            return 0 if values_equal(left, right) else 1
        if op in ("<", "<=", ">", ">="):
            return 1 if compare(op, left, right) else 0
        return arith(op, left, right)
    raise EvalError(f"unknown expression node {type(expr).__name__}")


# --- event pattern matching --------------------------------------------------


def _match_args(pattern_args: Sequence[A.PatArg], values: Sequence[Any], binds: dict[str, Any]) -> bool:
    if len(pattern_args) != len(values):
        return False
    for pat, value in zip(pattern_args, values):
        if pat.wildcard:
            continue
        if pat.bind is not None:
            binds[pat.bind] = value
            continue
        if not values_equal(pat.literal, value):
            return False
    return True


def match_event(pattern: A.EventPattern, event: RegulatedEvent) -> dict[str, Any] | None:
    """Return pattern bindings if the event matches, else None."""
    if pattern.kind != event.kind:
        return None
    if pattern.msg is None:
        return {}
    binds: dict[str, Any] = {}
    if event.kind == "obligationDue":
        if pattern.msg.kind is None and pattern.msg.args is None:
            return {}
        if pattern.msg.args is None:
            return None
        if _match_args(pattern.msg.args, (event.obligation,), binds):
            return binds
        return None
    msg = event.message
    if pattern.msg.kind is None and pattern.msg.args is None:
        return {}  # "*": any payload
    if not isinstance(msg, Payload):
        return None
    if pattern.msg.kind is not None and msg.kind != pattern.msg.kind:
        return None
    if pattern.msg.args is None:
        return binds
    if _match_args(pattern.msg.args, msg.args, binds):
        return binds
    return None


# --- evaluation --------------------------------------------------------------


def _build_op(do_op: A.DoOp, env: _Env, event: RegulatedEvent) -> list[ControlOperation]:
    if isinstance(do_op, A.Assign):
        key = do_op.target if do_op.key is None else _state_key(do_op.target, eval_expr(do_op.key, env))
        return [StateUpdate(key, freeze(eval_expr(do_op.value, env)))]
    name = do_op.name
    args = do_op.args
    if name == "forward":
        pl = freeze(eval_expr(args[0], env)) if len(args) >= 1 else event.message
        if pl is not None and not isinstance(pl, Payload):
            raise EvalError("forward payload must be a message")
        sender = freeze(eval_expr(args[1], env)) if len(args) >= 2 else event.subject
        return [Forward(pl, sender)]
    if name == "deliver":
        pl = freeze(eval_expr(args[0], env)) if args else event.message
        if pl is not None and not isinstance(pl, Payload):
            raise EvalError("deliver payload must be a message")
        return [Deliver(pl)]
    if name == "emit":
        target = freeze(eval_expr(args[0], env))
        pl = freeze(eval_expr(args[1], env))
        if not isinstance(pl, Payload):
            raise EvalError("emit payload must be a message")
        return [Emit(target, pl)]
    if name == "imposeObligation":
        ob = eval_expr(args[0], env)
        delay = eval_expr(args[1], env)
        if not isinstance(ob, str):
            raise EvalError("obligation name must be a string")
        if not isinstance(delay, (int, float)) or delay < 0:
            raise EvalError("obligation delay must be a non-negative number")
        return [Impose(ob, delay)]
    if name == "repealObligation":
        ob = eval_expr(args[0], env)
        if not isinstance(ob, str):
            raise EvalError("obligation name must be a string")
        return [Repeal(ob)]
    if name == "audit":
        kind = eval_expr(args[0], env)
        if not isinstance(kind, str):
            raise EvalError("audit kind must be a string")
        return [Audit(kind, freeze(eval_expr(args[1], env)))]
    if name == "notify":
        ev_name = eval_expr(args[0], env)
        if not isinstance(ev_name, str):
            raise EvalError("notify event name must be a string")
        value = freeze(eval_expr(args[1], env))
        subscribers = env.state_get(f"subs_{ev_name}")
        ops: list[ControlOperation] = []
        if isinstance(subscribers, tuple):
            for target in subscribers:
                ops.append(Emit(target, Payload("event", (ev_name, value))))
        return ops
    if name == "deliverMI":
        pl = freeze(eval_expr(args[0], env)) if args else event.message
        if pl is not None and not isinstance(pl, Payload):
            raise EvalError("deliverMI payload must be a message")
        return [DeliverMI(pl)]
    if name == "delegate":
        return [Delegate()]
    raise EvalError(f"operation {name!r} has no engine support")


class _Shadow:
    """Copy-on-write overlay so evaluation never mutates the input state."""

    __slots__ = ("base", "writes")

    def __init__(self, base: Mapping[str, Any]):
        self.base = base
        self.writes: dict[str, Any] = {}

    def get(self, key: str) -> Any:
        if key in self.writes:
            return self.writes[key]
        return self.base.get(key, 0)


def evaluate_path(
    chain: Sequence[tuple[str, A.LawAST]],
    event: RegulatedEvent,
    state: Mapping[str, Any],
) -> PathOutcome:
    """Evaluate a root-first law chain for one event.

    Each law's matched rule executes in order; a ``delegate`` operation
    runs the next law down and splices its operations in place. Every
    operation contributed at depth d is checked against the CONSTRAINT
    predicates of all laws at depths < d; a violating operation is
    dropped and reported, never applied.
    """
    shadow = _Shadow(state)
    filtered: list[FilterEvent] = []

    def check(op: ControlOperation, depth: int) -> FilterEvent | None:
        if isinstance(op, Delegate):
            return None
        for d in range(depth):
            ancestor_name, ancestor = chain[d]
            for constraint in ancestor.constraints:
                env = _Env(event, shadow.get, {}, op_fields=op_view(op))
                try:
                    ok = truthy(eval_expr(constraint, env))
                except EvalError:
                    ok = False  # an undecidable constraint fails closed
                if not ok:
                    return FilterEvent(chain[depth][0], ancestor_name, op)
        return None

    def run(depth: int) -> list[ControlOperation]:
        _, law = chain[depth]
        for rule in law.rules:
            binds = match_event(rule.event, event)
            if binds is None:
                continue
            env = _Env(event, shadow.get, binds)
            if rule.condition is not None and not truthy(eval_expr(rule.condition, env)):
                continue
            ops: list[ControlOperation] = []
            for do_op in rule.ops:
                if isinstance(do_op, A.OpCall) and do_op.name == "delegate":
                    if depth + 1 < len(chain):
                        ops.extend(run(depth + 1))
                    continue
                for concrete in _build_op(do_op, env, event):
                    violation = check(concrete, depth)
                    if violation is not None:
                        filtered.append(violation)
                        continue
                    if isinstance(concrete, StateUpdate):
                        shadow.writes[concrete.key] = concrete.value
                    ops.append(concrete)
            return ops
        return []

    try:
        ops = run(0)
    except EvalError as exc:
        return PathOutcome(Ruling((), (str(exc),)), tuple(filtered))
    return PathOutcome(Ruling(tuple(ops)), tuple(filtered))


def evaluate(law: A.LawAST, event: RegulatedEvent, state: Mapping[str, Any]) -> Ruling:
    """Definition of a law: one (event, state) pair in, one ruling out."""
    return evaluate_path((("law", law),), event, state).ruling


# --- ruling application -------------------------------------------------------


class ControllerContext:
    """What a ruling needs from its controller to take effect.

    The default implementation only touches the state; the runtime
    subclasses it to dispatch envelopes, schedule obligations and feed
    the audit trail.
    """

    def __init__(self, state: MutableMapping[str, Any], event: RegulatedEvent):
        self.state = state
        self.event = event
        self.diagnostics: list[str] = []

    def dispatch_forward(self, payload: Payload | None, sender: Triple | None) -> None:
        pass

    def dispatch_emit(self, target: Any, payload: Payload) -> None:
        pass

    def deliver_to_actor(self, payload: Payload | None) -> None:
        pass

    def deliver_to_mi(self, payload: Payload | None) -> None:
        pass

    def impose(self, name: str, delay: float) -> None:
        pass

    def repeal(self, name: str) -> None:
        pass

    def audit(self, kind: str, detail: Any) -> None:
        pass


def apply_ruling(ruling: Ruling, ctx: ControllerContext) -> None:
    """Apply operations in order; state updates are visible to later ops."""
    event = ctx.event
    for op in ruling.ops:
        if isinstance(op, StateUpdate):
            value = op.value
            if isinstance(value, A.Expr):
                env = _Env(event, lambda k: ctx.state.get(k, 0), {})
                try:
                    value = freeze(eval_expr(value, env))
                except EvalError as exc:
                    ctx.diagnostics.append(f"stateUpdate {op.key}: {exc}")
                    continue
            ctx.state[op.key] = value
        elif isinstance(op, Forward):
            if event.kind not in A.OP_EVENT_KINDS["forward"]:
                ctx.diagnostics.append(f"forward illegal for {event.kind} event")
                continue
            ctx.dispatch_forward(op.payload, op.sender)
        elif isinstance(op, Deliver):
            if event.kind not in A.OP_EVENT_KINDS["deliver"]:
                ctx.diagnostics.append(f"deliver illegal for {event.kind} event")
                continue
            ctx.deliver_to_actor(op.payload)
        elif isinstance(op, Emit):
            ctx.dispatch_emit(op.target, op.payload)
        elif isinstance(op, Impose):
            ctx.impose(op.name, op.delay)
        elif isinstance(op, Repeal):
            ctx.repeal(op.name)
        elif isinstance(op, Audit):
            ctx.audit(op.kind, op.detail)
        elif isinstance(op, DeliverMI):
            ctx.deliver_to_mi(op.payload)
        elif isinstance(op, Delegate):
            ctx.diagnostics.append("stray delegate ignored")


def op_to_record(op: ControlOperation) -> dict[str, Any]:
    """Trace-friendly rendering of one concrete operation."""
    from .values import value_to_json

    rec: dict[str, Any] = {"op": op.op_name}
    for key, value in op_view(op).items():
        if key == "kind":
            continue
        rec[key] = value_to_json(value)
    return rec
