"""The case-study law ensemble: root law G, layer laws B and M, and the
leaf laws for buyers and generic components.

Rule order inside each law is load-bearing (first-match-wins): the
purview gate precedes every other manager-facing rule, guarded
operations precede property replies, and the blocked-agent gates come
after the management channel so a removed component can still be
examined and restored.
"""

from __future__ import annotations

from ..capabilities import (
    Capability,
    assemble_law,
    inflow_update_op,
    lawfrag_mi_bridge,
    lawfrag_property_counter,
    lawfrag_purview,
    lawfrag_subscription,
    reflexive_coordination_lock,
    reflexive_role_filter,
)
from ..lawlang import LawSource
from .config import ScenarioConfig

GOVERNED_LAYERS = ("B", "M")

# what each law provides; the console renders this catalog, the laws
# are the authority
COMMON_CAPABILITIES = (
    Capability("property", "inflow", "B", "number"),
    Capability("property", "blocked", "B", "number"),
    Capability("operation", "remove", "B"),
)
BUYER_CAPABILITIES = COMMON_CAPABILITIES + (
    Capability("property", "budget", "buyer", "number"),
    Capability("property", "avDelay", "buyer", "number or null"),
    Capability("property", "POcount", "buyer", "number"),
    Capability("event", "lawBudget", "buyer", "number"),
    Capability("event", "violation", "buyer", "tuple"),
)


def capabilities_of_law(law_name: str) -> tuple[Capability, ...]:
    if law_name == "buyer":
        return BUYER_CAPABILITIES
    if law_name == "component":
        return COMMON_CAPABILITIES + (Capability("property", "POcount", "component", "number"),)
    return ()


def law_g() -> str:
    """Root law: uniform identity, sender attribution, nothing else.

    Every forwarded message carries the sender's own identity triple;
    no subordinate law can strip or spoof it.
    """
    return assemble_law(
        'CONSTRAINT Op.kind != "forward" or Op.sender = Self',
        "DELEGATES adopted, sent(*), arrived(*), obligationDue(_)",
        'UPON adopted IF Cert.layer = "B" or Cert.layer = "M" DO [delegate]',
        "UPON sent(*) DO [delegate]",
        "UPON arrived(*) DO [delegate]",
        "UPON obligationDue(N) DO [delegate]",
    )


def law_b(inflow_window: float = 60.0, lock_ttl: float = 30.0) -> str:
    """Base-layer law: common capabilities plus manager purview.

    Common capabilities: inflow (arrivals in a sliding window), the
    blocked indicator, and the token-guarded remove operation. All
    other manager requests are delegated to the component's own law.
    Management replies may only target managers of the agent's branch.
    """
    inflow_update = inflow_update_op(inflow_window)
    return assemble_law(
        'CONSTRAINT Op.kind != "emit" or layerOf(Op.target) != "M" or branchOf(Op.target) = Self.branch',
        "DELEGATES adopted, sent(*), arrived(*), obligationDue(_)",
        'UPON adopted IF Cert.layer = "B" DO [delegate]',
        # manager channel; cross-branch probes die here
        lawfrag_purview(),
        reflexive_coordination_lock("remove", ttl=lock_ttl, effect_ops=("blocked <- 1",)),
        'UPON arrived(examine("inflow")) IF Sender.layer = "M" '
        f'DO [emit(Sender, reply("inflow", count_gt(inflow_arrivals, Now - {inflow_window})))]',
        'UPON arrived(examine("blocked")) IF Sender.layer = "M" '
        'DO [emit(Sender, reply("blocked", blocked))]',
        'UPON arrived(examine(_)) IF Sender.layer = "M" DO [delegate]',
        'UPON arrived(invoke(_)) IF Sender.layer = "M" DO [delegate]',
        'UPON arrived(subscribe(_)) IF Sender.layer = "M" DO [delegate]',
        'UPON arrived(unsubscribe(_)) IF Sender.layer = "M" DO [delegate]',
        'UPON arrived(*) IF Sender.layer = "M" DO [audit("rejection", ("unknown-form", Msg, Sender))]',
        # manager-message forms from base-layer senders are never delivered
        'UPON arrived(examine) DO [audit("rejection", ("mm-from-base", Sender))]',
        'UPON arrived(invoke) DO [audit("rejection", ("mm-from-base", Sender))]',
        'UPON arrived(subscribe) DO [audit("rejection", ("mm-from-base", Sender))]',
        'UPON arrived(unsubscribe) DO [audit("rejection", ("mm-from-base", Sender))]',
        # base traffic; a removed agent is mute both ways but stays manageable
        f'UPON arrived(*) IF blocked = 1 DO [{inflow_update}, audit("rejection", ("blocked-recv", Sender))]',
        f"UPON arrived(*) DO [{inflow_update}, delegate]",
        'UPON sent(*) IF blocked = 1 DO [audit("rejection", ("blocked-send", Peer))]',
        "UPON sent(*) DO [delegate]",
        "UPON obligationDue(N) DO [delegate]",
    )


DEFAULT_ROLE_TABLE = {
    "operator": ("examine", "invoke", "subscribe", "unsubscribe"),
    "observer": ("examine", "subscribe", "unsubscribe"),
}


def law_m(
    assignments: dict[str, str] | None = None,
    role_table: dict[str, tuple[str, ...]] | None = None,
) -> str:
    """Management-layer law: capability access plus reflexive controls.

    Every manager send is audited exactly once; role gating decides
    whether it is forwarded or denied. Unknown managers get the most
    restrictive role.
    """
    table = {role: tuple(forms) for role, forms in (role_table or DEFAULT_ROLE_TABLE).items()}
    return assemble_law(
        reflexive_role_filter(table, assignments or {}),
        "UPON arrived(*) DO [deliver]",
        "UPON obligationDue(N) DO []",
    )


def buyer_law(
    low_budget_threshold: float = 200.0,
    law_budget_event: str = "lawBudget",
    mi_caps: dict[str, str] | None = None,
) -> str:
    """The buyers' own law: budget, avDelay, POcount and the low-budget
    event, all computed from message flow alone.

    The budget is credited by budget messages and debited by forwarded
    POs; a PO above the balance, or for a product with no pending
    request, is blocked and flagged. avDelay averages request-arrival
    to PO-or-rejection-send over completed requests.
    """
    threshold = low_budget_threshold
    ev = law_budget_event
    counter = lawfrag_property_counter("POcount", "PO")
    mi_rules = lawfrag_mi_bridge(mi_caps).rules if mi_caps else ()
    return assemble_law(
        'UPON adopted IF startswith(Cert.name, "buyer") DO [forward]',
        # managerial properties (purview already enforced by the parent law)
        counter.rules[1],
        'UPON arrived(examine("budget")) IF Sender.layer = "M" DO [emit(Sender, reply("budget", budget))]',
        'UPON arrived(examine("avDelay")) IF Sender.layer = "M" and delayCount > 0 '
        "DO [emit(Sender, reply(\"avDelay\", delaySum / delayCount))]",
        'UPON arrived(examine("avDelay")) IF Sender.layer = "M" DO [emit(Sender, reply("avDelay", null))]',
        mi_rules,
        'UPON arrived(examine(P)) IF Sender.layer = "M" DO [audit("rejection", ("unknown-property", P, Sender))]',
        lawfrag_subscription((ev, "violation")),
        'UPON arrived(invoke(O)) IF Sender.layer = "M" DO [audit("rejection", ("unknown-operation", O, Sender))]',
        # base traffic bookkeeping
        "UPON arrived(purchaseRequest(sku, qty)) DO [reqTimes[sku] <- append(reqTimes[sku], Now), deliver]",
        'UPON arrived(budget(amount)) DO [budget <- budget + amount, impose("chkBudget", 0), deliver]',
        "UPON arrived(*) DO [deliver]",
        # the two governed misbehaviors: blocked and flagged
        "UPON sent(PO(amount, sku, qty)) IF amount > budget "
        'DO [audit("violation", ("overspend", sku, amount, budget)), '
        'notify("violation", ("overspend", Self, sku, amount))]',
        "UPON sent(PO(amount, sku, qty)) IF len(reqTimes[sku]) = 0 "
        'DO [audit("violation", ("unrequested", sku, amount)), '
        'notify("violation", ("unrequested", Self, sku, amount))]',
        "UPON sent(PO(amount, sku, qty)) DO [POcount <- POcount + 1, budget <- budget - amount, "
        "delaySum <- delaySum + (Now - head(reqTimes[sku])), delayCount <- delayCount + 1, "
        'reqTimes[sku] <- tail(reqTimes[sku]), impose("chkBudget", 0), forward]',
        "UPON sent(reject(sku)) IF len(reqTimes[sku]) > 0 "
        "DO [delaySum <- delaySum + (Now - head(reqTimes[sku])), delayCount <- delayCount + 1, "
        "reqTimes[sku] <- tail(reqTimes[sku]), forward]",
        "UPON sent(*) DO [forward]",
        f'UPON obligationDue("chkBudget") IF budget < {threshold} and lowWarned = 0 '
        f'DO [lowWarned <- 1, notify("{ev}", budget)]',
        f'UPON obligationDue("chkBudget") IF budget >= {threshold} DO [lowWarned <- 0]',
        "UPON obligationDue(N) DO []",
    )


def malicious_buyer_law() -> str:
    """A hostile leaf-law variant used to demonstrate enforced conformance.

    It tries to (a) forward POs with the sender triple stripped,
    (b) forward other sends under a spoofed identity, and (c) leak
    request contents to an out-of-branch manager. All three are
    filtered by ancestor constraints at resolution time.
    """
    return assemble_law(
        "UPON adopted DO [forward]",
        "UPON sent(PO(amount, sku, qty)) DO [forward(Msg, null)]",
        'UPON sent(*) DO [forward(Msg, ("ghost", "nowhere", "B"))]',
        'UPON arrived(purchaseRequest(sku, qty)) DO [emit(("spy", "elsewhere", "M"), leak(Msg)), deliver]',
        "UPON arrived(*) DO [deliver]",
        "UPON obligationDue(N) DO []",
    )


def component_law(mi_caps: dict[str, str] | None = None) -> str:
    """Generic leaf law for InM, BuO and vendors: pass traffic through,
    expose the common PO counter, reject unknown manager requests."""
    counter = lawfrag_property_counter("POcount", "PO")
    mi_rules = lawfrag_mi_bridge(mi_caps).rules if mi_caps else ()
    return assemble_law(
        'UPON adopted IF Cert.layer = "B" DO [forward]',
        counter.rules[1],
        mi_rules,
        'UPON arrived(examine(P)) IF Sender.layer = "M" DO [audit("rejection", ("unknown-property", P, Sender))]',
        'UPON arrived(subscribe(E)) IF Sender.layer = "M" DO [audit("rejection", ("unknown-event", E, Sender))]',
        'UPON arrived(unsubscribe(E)) IF Sender.layer = "M" DO [audit("rejection", ("unknown-event", E, Sender))]',
        'UPON arrived(invoke(O)) IF Sender.layer = "M" DO [audit("rejection", ("unknown-operation", O, Sender))]',
        "UPON arrived(*) DO [deliver]",
        counter.rules[0],
        "UPON sent(*) DO [forward]",
        "UPON obligationDue(N) DO []",
    )


def acme_sources(
    config: ScenarioConfig,
    manager_roles: dict[str, str] | None = None,
    *,
    buyer_variant: str | None = None,
) -> list[LawSource]:
    """The Fig.-3-shaped ensemble for a scenario configuration.

    `buyer_variant` swaps in alternative buyer-law text (used by the
    conformance-filtering tests); thresholds come from the first
    branch, which keeps the ensemble identical across branches.
    """
    threshold = config.branches[0].low_budget_threshold if config.branches else 200.0
    return [
        LawSource("G", law_g(), None),
        LawSource("B", law_b(config.inflow_window, config.lock_ttl), "G"),
        LawSource("M", law_m(manager_roles or {}), "G"),
        LawSource(
            "buyer",
            buyer_variant or buyer_law(threshold, config.law_budget_event),
            "B",
        ),
        LawSource("component", component_law(), "B"),
    ]
