from __future__ import annotations

import pytest

from govbus.audit import AuditTrail
from govbus.certs import CertAuthority
from govbus.hierarchy import build_ensemble
from govbus.lawlang import LawSource
from govbus.runtime import ControllerPool, ManualClock, Network

BUYER = ("buyer1", "store7", "B")
VENDOR = ("vendor", "vendors", "B")
MANAGER = ("mgr1", "store7", "M")
FOREIGN_MANAGER = ("mgr9", "store9", "M")


@pytest.fixture
def ca():
    return CertAuthority.deterministic("test-ca")


def make_tree(*sources: LawSource):
    tree, diags = build_ensemble(list(sources))
    assert tree is not None, [str(d) for d in diags]
    return tree


def passthrough_sources():
    """A permissive three-law chain used by runtime-level tests."""
    g = LawSource(
        "G",
        'CONSTRAINT Op.kind != "forward" or Op.sender = Self\n'
        "DELEGATES adopted, sent(*), arrived(*), obligationDue(_)\n"
        'UPON adopted IF Cert.layer = "B" or Cert.layer = "M" DO [delegate]\n'
        "UPON sent(*) DO [delegate]\n"
        "UPON arrived(*) DO [delegate]\n"
        "UPON obligationDue(N) DO [delegate]\n",
        None,
    )
    leaf = LawSource(
        "leaf",
        "UPON adopted DO [forward]\n"
        "UPON sent(*) DO [forward]\n"
        "UPON arrived(*) DO [deliver]\n"
        "UPON obligationDue(N) DO []\n",
        "G",
    )
    return [g, leaf]


class Collector:
    """Actor endpoint that records deliveries."""

    def __init__(self):
        self.received = []

    def __call__(self, payload, sender):
        self.received.append((payload, sender))


@pytest.fixture
def simple_world(ca):
    """One pool under the passthrough ensemble with a manual clock."""
    tree = make_tree(*passthrough_sources())
    network = Network()
    clock = ManualClock()
    audit = AuditTrail()
    pool = ControllerPool("p0", tree, network, verifier=ca.verifier(), clock=clock, audit=audit)
    return pool, network, clock, audit, ca
