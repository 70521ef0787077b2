"""Law language: parsing, validation, canonical form and hashing."""

from .ast import (
    DEFAULT_REPERTOIRE,
    Diagnostic,
    EventPattern,
    LawAST,
    LawHash,
    LawSource,
    MsgPattern,
    Rule,
)
from .canon import hash_law, pretty_print
from .parser import parse_law_text
from .validate import parse_law, validate_law

__all__ = [
    "DEFAULT_REPERTOIRE",
    "Diagnostic",
    "EventPattern",
    "LawAST",
    "LawHash",
    "LawSource",
    "MsgPattern",
    "Rule",
    "hash_law",
    "parse_law",
    "parse_law_text",
    "pretty_print",
    "validate_law",
]
