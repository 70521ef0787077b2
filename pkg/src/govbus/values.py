"""Value model shared by the law language, the engine and the wire layer.

Values are immutable: numbers, strings, tuples (sequences are normalized
to tuples), ``None`` and message payloads. JSON conversion round-trips
through lists and tagged dicts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

Triple = tuple[str, str, str]


class EvalError(Exception):
    """Raised when an expression cannot be evaluated (type mismatch etc.)."""


@dataclass(frozen=True)
class Payload:
    """A message body: a kind tag plus positional arguments."""

    kind: str
    args: tuple = ()

    def __repr__(self) -> str:  # keeps traces readable
        inner = ", ".join(repr(a) for a in self.args)
        return f"{self.kind}({inner})"


def payload(kind: str, *args: Any) -> Payload:
    return Payload(kind, tuple(freeze(a) for a in args))


def freeze(value: Any) -> Any:
    """Normalize a value into the immutable in-engine form."""
    if isinstance(value, bool):
        return 1 if value else 0
    if value is None or isinstance(value, (int, float, str, Payload)):
        return value
    if isinstance(value, (list, tuple)):
        return tuple(freeze(v) for v in value)
    raise EvalError(f"unsupported value type: {type(value).__name__}")


def value_to_json(value: Any) -> Any:
    """Convert an engine value to plain JSON-serializable data."""
    if isinstance(value, Payload):
        return {"kind": value.kind, "args": [value_to_json(a) for a in value.args]}
    if isinstance(value, tuple):
        return [value_to_json(v) for v in value]
    return value


def value_from_json(data: Any) -> Any:
    """Inverse of value_to_json. Dicts with kind/args become payloads."""
    if isinstance(data, dict):
        if set(data) == {"kind", "args"}:
            return Payload(str(data["kind"]), tuple(value_from_json(a) for a in data["args"]))
        raise EvalError(f"unexpected object in value: {sorted(data)}")
    if isinstance(data, list):
        return tuple(value_from_json(v) for v in data)
    if isinstance(data, bool):
        return 1 if data else 0
    return data


def truthy(value: Any) -> bool:
    if value is None:
        return False
    if isinstance(value, (int, float)):
        return value != 0
    if isinstance(value, (str, tuple)):
        return len(value) > 0
    return True


def values_equal(a: Any, b: Any) -> bool:
    # cross-type comparisons are False, not an error; int/float interoperate
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b
    if type(a) is not type(b):
        return False
    return a == b


def compare(op: str, a: Any, b: Any) -> bool:
    """Ordering comparison; only numbers with numbers or strings with strings."""
    both_num = isinstance(a, (int, float)) and isinstance(b, (int, float))
    both_str = isinstance(a, str) and isinstance(b, str)
    if not (both_num or both_str):
        raise EvalError(f"cannot order {type(a).__name__} and {type(b).__name__}")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise EvalError(f"unknown comparison {op}")


def arith(op: str, a: Any, b: Any) -> Any:
    if not (isinstance(a, (int, float)) and isinstance(b, (int, float))):
        raise EvalError(f"arithmetic on {type(a).__name__} and {type(b).__name__}")
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise EvalError("division by zero")
        return a / b
    raise EvalError(f"unknown operator {op}")


def _as_seq(value: Any) -> tuple:
    # list builtins coerce non-sequences (incl. the 0 default for a
    # never-written state key) to the empty tuple
    return value if isinstance(value, tuple) else ()


def _as_triple(value: Any) -> Triple:
    if isinstance(value, tuple) and len(value) == 3 and all(isinstance(p, str) for p in value):
        return value  # type: ignore[return-value]
    raise EvalError(f"not an agent triple: {value!r}")


def _bi_len(x: Any) -> int:
    if isinstance(x, str):
        return len(x)
    return len(_as_seq(x))


def _bi_append(xs: Any, x: Any) -> tuple:
    return _as_seq(xs) + (freeze(x),)


def _bi_head(xs: Any) -> Any:
    seq = _as_seq(xs)
    if not seq:
        raise EvalError("head of empty sequence")
    return seq[0]


def _bi_tail(xs: Any) -> tuple:
    seq = _as_seq(xs)
    if not seq:
        raise EvalError("tail of empty sequence")
    return seq[1:]


def _bi_count_gt(xs: Any, threshold: Any) -> int:
    if not isinstance(threshold, (int, float)):
        raise EvalError("count_gt threshold must be a number")
    return sum(1 for v in _as_seq(xs) if isinstance(v, (int, float)) and v > threshold)


def _bi_drop_le(xs: Any, threshold: Any) -> tuple:
    if not isinstance(threshold, (int, float)):
        raise EvalError("drop_le threshold must be a number")
    return tuple(v for v in _as_seq(xs) if not (isinstance(v, (int, float)) and v <= threshold))


def _bi_add_unique(xs: Any, x: Any) -> tuple:
    seq = _as_seq(xs)
    x = freeze(x)
    return seq if any(values_equal(v, x) for v in seq) else seq + (x,)


def _bi_remove_item(xs: Any, x: Any) -> tuple:
    x = freeze(x)
    return tuple(v for v in _as_seq(xs) if not values_equal(v, x))


def _bi_concat(*parts: Any) -> str:
    out = []
    for p in parts:
        if p is None:
            continue
        if isinstance(p, str):
            out.append(p)
        elif isinstance(p, (int, float)):
            out.append(str(p))
        else:
            raise EvalError("concat accepts strings and numbers")
    return "".join(out)


def _bi_startswith(s: Any, prefix: Any) -> bool:
    if not (isinstance(s, str) and isinstance(prefix, str)):
        raise EvalError("startswith needs strings")
    return s.startswith(prefix)


def _bi_item(xs: Any, i: Any) -> Any:
    seq = _as_seq(xs)
    if not isinstance(i, int) or not (0 <= i < len(seq)):
        raise EvalError(f"index {i!r} out of range")
    return seq[i]


def _bi_kind_of(p: Any) -> str:
    if not isinstance(p, Payload):
        raise EvalError("kindOf needs a message payload")
    return p.kind


def _bi_arg_of(p: Any, i: Any) -> Any:
    if not isinstance(p, Payload):
        raise EvalError("argOf needs a message payload")
    return _bi_item(p.args, i)


def _num(x: Any, what: str) -> float:
    if not isinstance(x, (int, float)):
        raise EvalError(f"{what} needs numbers")
    return x


# Reserved builtin function names. Any other identifier applied to
# arguments constructs a Payload of that kind.
BUILTINS = {
    "len": _bi_len,
    "append": _bi_append,
    "head": _bi_head,
    "tail": _bi_tail,
    "count_gt": _bi_count_gt,
    "drop_le": _bi_drop_le,
    "add_unique": _bi_add_unique,
    "remove_item": _bi_remove_item,
    "concat": _bi_concat,
    "startswith": _bi_startswith,
    "item": _bi_item,
    "kindOf": _bi_kind_of,
    "argOf": _bi_arg_of,
    "nameOf": lambda t: _as_triple(t)[0],
    "branchOf": lambda t: _as_triple(t)[1],
    "layerOf": lambda t: _as_triple(t)[2],
    "min": lambda a, b: min(_num(a, "min"), _num(b, "min")),
    "max": lambda a, b: max(_num(a, "max"), _num(b, "max")),
    "abs": lambda a: abs(_num(a, "abs")),
}
