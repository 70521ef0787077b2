"""govbus: governed message exchange.

Laws, evaluated by per-agent controllers, mediate every message in a
distributed system. The package provides the law language, the
evaluation engine, conformance hierarchies, the controller runtime,
management capabilities built from law fragments, a wire/service
layer, and a deterministic supermarket-chain simulation used as the
end-to-end validation scenario.
"""

from .engine import (
    RegulatedEvent,
    Ruling,
    apply_ruling,
    evaluate,
)
from .hierarchy import LawTree, build_ensemble, load_manifest, resolve
from .lawlang import LawAST, LawSource, hash_law, parse_law, pretty_print, validate_law
from .values import Payload, Triple

__all__ = [
    "LawAST",
    "LawSource",
    "LawTree",
    "Payload",
    "RegulatedEvent",
    "Ruling",
    "Triple",
    "apply_ruling",
    "build_ensemble",
    "evaluate",
    "hash_law",
    "load_manifest",
    "parse_law",
    "pretty_print",
    "resolve",
    "validate_law",
]

__version__ = "0.1.0"
