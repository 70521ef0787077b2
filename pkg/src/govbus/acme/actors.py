"""Actor behaviors for the case study.

Actors are black boxes to the governance layer: they only see payloads
delivered by their controller and send through it. Each branch runs an
inventory monitor (InM), a buyer and a budget office (BuO); one vendor
serves all branches; one manager per branch polls capabilities and
subscribes to events.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable

from ..values import Payload, Triple
from .config import BranchConfig, buyer_id, inm_id, vendor_id

if TYPE_CHECKING:
    from .sim import ActorHandle


class InventoryMonitor:
    """Consumes stock each tick; requests purchases below reorder point."""

    def __init__(self, handle: "ActorHandle", cfg: BranchConfig, reject_cooldown: int):
        self.h = handle
        self.cfg = cfg
        self.reject_cooldown = reject_cooldown
        self.inventory = {p.sku: p.initial_inventory for p in cfg.products}
        self.outstanding: set[str] = set()
        self.cooldown_until: dict[str, float] = {}

    def start(self) -> None:
        self.h.schedule(1, self.tick)

    def tick(self) -> None:
        for p in self.cfg.products:
            self.inventory[p.sku] -= p.consumption_rate
            if (
                self.inventory[p.sku] < p.reorder_point
                and p.sku not in self.outstanding
                and self.h.now >= self.cooldown_until.get(p.sku, 0)
                and p.consumption_rate > 0
            ):
                self.h.send(buyer_id(self.cfg.branch), Payload("purchaseRequest", (p.sku, p.order_qty)))
                self.outstanding.add(p.sku)
        self.h.schedule(1, self.tick)

    def on_deliver(self, payload: Payload, sender: Triple) -> None:
        if payload.kind == "shipped":
            sku, qty = payload.args[0], payload.args[1]
            self.inventory[sku] = self.inventory.get(sku, 0) + qty
            self.outstanding.discard(sku)
        elif payload.kind == "reject":
            sku = payload.args[0]
            self.outstanding.discard(sku)
            self.cooldown_until[sku] = self.h.now + self.reject_cooldown


class Buyer:
    """Turns purchase requests into POs when its budget estimate allows."""

    def __init__(self, handle: "ActorHandle", cfg: BranchConfig, think_time: int):
        self.h = handle
        self.cfg = cfg
        self.think_time = think_time
        self.estimate = 0.0
        self.prices = {p.sku: p for p in cfg.products}

    def on_deliver(self, payload: Payload, sender: Triple) -> None:
        if payload.kind == "budget":
            self.estimate += payload.args[0]
        elif payload.kind == "purchaseRequest":
            sku, qty = payload.args[0], payload.args[1]
            self.h.schedule(self.think_time, lambda: self.process(sku, qty))

    def process(self, sku: str, qty: float) -> None:
        product = self.prices.get(sku)
        if product is None:
            self.h.send(inm_id(self.cfg.branch), Payload("reject", (sku,)))
            return
        amount = qty * product.unit_price
        if self.estimate >= amount:
            self.estimate -= amount
            self.h.send(vendor_id(), Payload("PO", (amount, sku, qty)))
        else:
            self.h.send(inm_id(self.cfg.branch), Payload("reject", (sku,)))


class BudgetOffice:
    """Drips budget to its branch's buyer on a fixed schedule."""

    def __init__(self, handle: "ActorHandle", cfg: BranchConfig):
        self.h = handle
        self.cfg = cfg

    def start(self) -> None:
        self.h.schedule(0, self.initial)

    def initial(self) -> None:
        if self.cfg.initial_budget > 0:
            self.h.send(buyer_id(self.cfg.branch), Payload("budget", (self.cfg.initial_budget,)))
        self.h.schedule(self.cfg.drip_interval, self.drip)

    def drip(self) -> None:
        if self.cfg.drip_amount > 0:
            self.h.send(buyer_id(self.cfg.branch), Payload("budget", (self.cfg.drip_amount,)))
        self.h.schedule(self.cfg.drip_interval, self.drip)

    def on_deliver(self, payload: Payload, sender: Triple) -> None:
        pass


class Vendor:
    """Acknowledges POs by shipping to the ordering branch's InM after a
    seeded random latency; the only source of randomness in a run."""

    def __init__(self, handle: "ActorHandle", latency: Callable[[], int]):
        self.h = handle
        self.latency = latency

    def on_deliver(self, payload: Payload, sender: Triple) -> None:
        if payload.kind != "PO":
            return
        _, sku, qty = payload.args[0], payload.args[1], payload.args[2]
        branch = sender[1]
        self.h.schedule(self.latency(), lambda: self.h.send(inm_id(branch), Payload("shipped", (sku, qty))))


class Manager:
    """A scripted management console: polls properties, subscribes to
    events, runs explicit actions; keeps what it received for assertions."""

    def __init__(self, handle: "ActorHandle"):
        self.h = handle
        self.replies: list[tuple[float, Triple, str, object]] = []
        self.events: list[tuple[float, Triple, str, object]] = []
        self.other: list[tuple[float, Triple, Payload]] = []

    def on_deliver(self, payload: Payload, sender: Triple) -> None:
        if payload.kind == "reply":
            self.replies.append((self.h.now, sender, payload.args[0], payload.args[1]))
        elif payload.kind == "event":
            self.events.append((self.h.now, sender, payload.args[0], payload.args[1]))
        else:
            self.other.append((self.h.now, sender, payload))

    def last_reply(self, name: str):
        for t, sender, n, value in reversed(self.replies):
            if n == name:
                return value
        return None
