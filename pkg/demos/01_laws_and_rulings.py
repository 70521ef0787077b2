"""Laws as decision functions.

A law maps one (event, control-state) pair to a ruling: an ordered
list of control operations. This demo parses a small law, evaluates a
few events against it, and shows why formatting never changes a law's
identity while a one-character semantic change does.
"""

from govbus import Payload, evaluate, hash_law, parse_law, pretty_print
from govbus.engine import arrived_event, sent_event
from govbus.lawlang import LawSource

LAW_TEXT = """
# Count purchase orders; let the branch manager examine the count.
UPON sent(PO) DO [POcount <- POcount + 1, forward]
UPON arrived(examine("POcount")) IF Sender.layer = "M"
    DO [emit(Sender, reply("POcount", POcount))]
"""

buyer = ("buyer", "store7", "B")
vendor = ("vendor", "vendors", "B")
manager = ("mgr1", "store7", "M")


def main() -> None:
    law, diagnostics = parse_law(LawSource("counter", LAW_TEXT))
    assert law is not None and not diagnostics
    print("parsed", len(law.rules), "rules; canonical form:\n")
    print(pretty_print(law))

    print("--- a buyer sends its third PO")
    event = sent_event(buyer, Payload("PO", (60.0, "milk", 15.0)), vendor, now=21)
    ruling = evaluate(law, event, {"POcount": 2})
    for op in ruling.ops:
        print("   ", op)

    print("--- the branch manager examines the count")
    event = arrived_event(buyer, Payload("examine", ("POcount",)), manager, now=30)
    for op in evaluate(law, event, {"POcount": 7}).ops:
        print("   ", op)

    print("--- an event no rule matches is dropped (default deny)")
    event = arrived_event(buyer, Payload("gossip", ()), vendor, now=31)
    print("    ruling:", evaluate(law, event, {}).ops)

    print("--- law identity")
    reformatted = LawSource("counter", "# new comment\n" + LAW_TEXT.replace(" DO ", "   DO "))
    relaw, _ = parse_law(reformatted)
    print("    reformatted text, same digest: ", hash_law(law).hex == hash_law(relaw).hex)
    tweaked, _ = parse_law(LawSource("counter", LAW_TEXT.replace("POcount + 1", "POcount + 2")))
    print("    one-token semantic change, new digest:", hash_law(law).hex != hash_law(tweaked).hex)


if __name__ == "__main__":
    main()
