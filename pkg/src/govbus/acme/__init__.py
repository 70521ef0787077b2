"""The supermarket-chain case study: laws, actors, deterministic
simulation and the independent trace oracle."""

from .config import (
    BranchConfig,
    Injection,
    ManagerAction,
    MisbehaviorScript,
    Product,
    ScenarioConfig,
    default_config,
    load_config,
    load_script,
)
from .laws import acme_sources, buyer_law, component_law, law_b, law_g, law_m, malicious_buyer_law
from .oracle import VerdictReport, verify_trace
from .sim import Scenario, Trace, run_scenario

__all__ = [
    "BranchConfig",
    "Injection",
    "ManagerAction",
    "MisbehaviorScript",
    "Product",
    "Scenario",
    "ScenarioConfig",
    "Trace",
    "VerdictReport",
    "acme_sources",
    "buyer_law",
    "component_law",
    "default_config",
    "law_b",
    "law_g",
    "law_m",
    "load_config",
    "load_script",
    "malicious_buyer_law",
    "run_scenario",
    "verify_trace",
]
