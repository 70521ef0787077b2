"""Scenario configuration for the supermarket-chain case study."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from ..values import Triple


@dataclass(frozen=True)
class Product:
    sku: str
    consumption_rate: float  # inventory units consumed per tick
    reorder_point: float
    order_qty: float
    unit_price: float
    initial_inventory: float = 40.0

    def __post_init__(self) -> None:
        for name in ("consumption_rate", "reorder_point", "order_qty", "unit_price", "initial_inventory"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class BranchConfig:
    branch: str
    products: tuple[Product, ...]
    initial_budget: float = 1000.0
    drip_interval: int = 20
    drip_amount: float = 400.0
    low_budget_threshold: float = 200.0

    def __post_init__(self) -> None:
        if self.initial_budget < 0 or self.drip_amount < 0:
            raise ValueError("budgets must be >= 0")
        if self.drip_interval <= 0:
            raise ValueError("drip_interval must be positive")


@dataclass(frozen=True)
class ManagerAction:
    """One scripted management request."""

    time: int
    manager: tuple[str, str]  # (name, branch)
    form: str  # examine | invoke | subscribe | unsubscribe
    target: tuple[str, str]  # (name, branch) of a base component
    args: tuple = ()


@dataclass(frozen=True)
class Injection:
    """A scripted buyer misbehavior."""

    time: int
    branch: str
    kind: str  # overspend | unrequestedPO
    amount: float = 0.0
    sku: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ("overspend", "unrequestedPO"):
            raise ValueError(f"unknown misbehavior kind {self.kind!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    branches: tuple[BranchConfig, ...]
    horizon: int = 120
    inflow_window: float = 60.0
    lock_ttl: float = 30.0
    law_budget_event: str = "lawBudget"
    buyer_think_time: int = 2
    vendor_latency_max: int = 4  # uniform in [1, max]; the only randomness
    reject_cooldown: int = 8
    manager_poll_interval: int = 10
    manager_actions: tuple[ManagerAction, ...] = ()
    auto_manager_poll: bool = True
    auto_manager_subscribe: bool = True

    def branch(self, name: str) -> BranchConfig:
        for b in self.branches:
            if b.branch == name:
                return b
        raise KeyError(f"no branch {name!r}")


MisbehaviorScript = tuple[Injection, ...]


def inm_id(branch: str) -> Triple:
    return ("InM", branch, "B")


def buyer_id(branch: str) -> Triple:
    return ("buyer", branch, "B")


def buo_id(branch: str) -> Triple:
    return ("BuO", branch, "B")


def vendor_id() -> Triple:
    return ("vendor", "vendors", "B")


def manager_id(branch: str, name: str = "mgr1") -> Triple:
    return (name, branch, "M")


def default_config(branches: int = 2) -> ScenarioConfig:
    names = [f"store{7 + 2 * i}" for i in range(branches)]
    return ScenarioConfig(
        branches=tuple(
            BranchConfig(
                branch=name,
                products=(
                    Product("milk", consumption_rate=1.0, reorder_point=20.0, order_qty=15.0, unit_price=4.0),
                    Product("rice", consumption_rate=0.5, reorder_point=10.0, order_qty=20.0, unit_price=2.0),
                ),
            )
            for name in names
        ),
    )


# --- JSON round-trip (scenario files and misbehavior scripts) --------------


def config_to_json(config: ScenarioConfig) -> dict:
    data = asdict(config)
    data["branches"] = [
        {**asdict(b), "products": [asdict(p) for p in b.products]} for b in config.branches
    ]
    data["manager_actions"] = [
        {
            "time": a.time,
            "manager": list(a.manager),
            "form": a.form,
            "target": list(a.target),
            "args": list(a.args),
        }
        for a in config.manager_actions
    ]
    return data


def config_from_json(data: dict) -> ScenarioConfig:
    branches = tuple(
        BranchConfig(
            branch=b["branch"],
            products=tuple(Product(**p) for p in b["products"]),
            initial_budget=b.get("initial_budget", 1000.0),
            drip_interval=b.get("drip_interval", 20),
            drip_amount=b.get("drip_amount", 400.0),
            low_budget_threshold=b.get("low_budget_threshold", 200.0),
        )
        for b in data["branches"]
    )
    actions = tuple(
        ManagerAction(
            time=a["time"],
            manager=tuple(a["manager"]),  # type: ignore[arg-type]
            form=a["form"],
            target=tuple(a["target"]),  # type: ignore[arg-type]
            args=tuple(a.get("args", ())),
        )
        for a in data.get("manager_actions", ())
    )
    known = {
        "horizon", "inflow_window", "lock_ttl", "law_budget_event", "buyer_think_time",
        "vendor_latency_max", "reject_cooldown", "manager_poll_interval",
        "auto_manager_poll", "auto_manager_subscribe",
    }
    extra = {k: v for k, v in data.items() if k in known}
    return ScenarioConfig(branches=branches, manager_actions=actions, **extra)


def load_config(path: str | Path) -> ScenarioConfig:
    return config_from_json(json.loads(Path(path).read_text("utf-8")))


def save_config(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_json(config), indent=2, sort_keys=True) + "\n", "utf-8")


def script_to_json(script: MisbehaviorScript) -> list[dict]:
    return [asdict(i) for i in script]


def script_from_json(data: list[dict]) -> MisbehaviorScript:
    return tuple(Injection(**i) for i in data)


def load_script(path: str | Path) -> MisbehaviorScript:
    return script_from_json(json.loads(Path(path).read_text("utf-8")))


def save_script(script: MisbehaviorScript, path: str | Path) -> None:
    Path(path).write_text(json.dumps(script_to_json(script), indent=2) + "\n", "utf-8")
