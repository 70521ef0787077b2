from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from govbus.lawlang import (
    DEFAULT_REPERTOIRE,
    LawSource,
    hash_law,
    parse_law,
    parse_law_text,
    pretty_print,
    validate_law,
)
from govbus.lawlang import ast as A

RULESET_COUNTER = """
# counts purchase orders and answers a manager's examination
UPON sent(PO) DO [POcount <- POcount + 1, forward]
UPON arrived(examine("POcount")) IF Sender.layer = "M" DO [emit(Sender, reply("POcount", POcount))]
"""


class TestParse:
    def test_counter_ruleset_parses_to_two_rules(self):
        result = parse_law_text(RULESET_COUNTER)
        assert result.ok
        assert len(result.ast.rules) == 2
        first = result.ast.rules[0]
        assert first.event.kind == "sent"
        assert first.event.msg.kind == "PO"
        assert [op.__class__.__name__ for op in first.ops] == ["Assign", "OpCall"]

    def test_empty_text_is_a_zero_rule_law(self):
        result = parse_law_text("")
        assert result.ok
        assert result.ast.rules == ()

    def test_comments_and_whitespace_only(self):
        result = parse_law_text("  # nothing here\n\n   # still nothing\n")
        assert result.ok
        assert result.ast.rules == ()

    def test_rules_keep_textual_order(self):
        result = parse_law_text(
            "UPON sent(a) DO [forward]\nUPON sent(b) DO [forward]\nUPON sent(c) DO []\n"
        )
        kinds = [r.event.msg.kind for r in result.ast.rules]
        assert kinds == ["a", "b", "c"]

    def test_syntax_error_has_position_and_expectation(self):
        result = parse_law_text("UPON sent(PO) DO forward]")
        assert result.ast is None
        assert any("expected [" in d.message for d in result.diagnostics)
        assert result.diagnostics[0].line == 1

    def test_unknown_control_operation_is_a_diagnostic(self):
        result = parse_law_text("UPON sent(PO) DO [teleport(Msg)]")
        assert result.ast is None
        assert any("unknown control operation 'teleport'" in d.message for d in result.diagnostics)

    def test_recovers_and_reports_later_rules(self):
        result = parse_law_text(
            "UPON sent(PO DO [forward]\nUPON arrived(*) DO [deliver nonsense]\n"
        )
        assert len(result.diagnostics) >= 2

    def test_unknown_event_kind(self):
        result = parse_law_text("UPON teleported DO []")
        assert any("unknown event kind" in d.message for d in result.diagnostics)

    def test_condition_reading_another_agents_state_is_a_locality_diagnostic(self):
        ast, diags = parse_law(
            LawSource("bad", "UPON sent(PO) IF buyer2.POcount > 0 DO [forward]")
        )
        assert ast is not None
        assert any("locality" in d.message for d in diags)

    def test_unknown_event_field_is_reported(self):
        ast, diags = parse_law(LawSource("bad", "UPON arrived(*) IF Sender.color = 1 DO []"))
        assert any("unknown field 'color'" in d.message for d in diags)

    def test_delegations_and_constraints_parse(self):
        result = parse_law_text(
            "DELEGATES sent(*), arrived(PO)\nCONSTRAINT Op.kind != \"emit\"\nUPON sent(*) DO [delegate]\n"
        )
        assert result.ok
        assert len(result.ast.delegations) == 2
        assert len(result.ast.constraints) == 1


class TestValidate:
    def test_clean_law_has_no_diagnostics(self):
        ast = parse_law_text(RULESET_COUNTER).ast
        assert validate_law(ast) == []

    def test_op_outside_repertoire(self):
        rule = A.Rule(A.EventPattern("sent", None), (A.OpCall("teleport", ()),))
        diags = validate_law(A.LawAST((rule,)))
        assert len(diags) == 1
        assert "repertoire" in diags[0].message

    def test_restricted_repertoire(self):
        ast = parse_law_text('UPON arrived(*) DO [emit(Sender, pong())]').ast
        assert validate_law(ast) == []
        diags = validate_law(ast, repertoire={"forward", "deliver", "stateUpdate"})
        assert any("'emit' is not in the repertoire" in d.message for d in diags)

    def test_forward_on_arrived_is_illegal(self):
        ast = parse_law_text("UPON arrived(*) DO [forward]").ast
        diags = validate_law(ast)
        assert any("not legal in a ruling for 'arrived'" in d.message for d in diags)

    def test_deliver_on_sent_is_illegal(self):
        ast = parse_law_text("UPON sent(*) DO [deliver]").ast
        diags = validate_law(ast)
        assert any("not legal in a ruling for 'sent'" in d.message for d in diags)

    def test_global_scope_read_is_locality_violation(self):
        ast = parse_law_text("UPON sent(*) IF Registry.size > 0 DO [forward]").ast
        diags = validate_law(ast)
        assert any("locality" in d.message for d in diags)

    def test_op_namespace_only_in_constraints(self):
        ast = parse_law_text('UPON sent(*) IF Op.kind = "forward" DO [forward]').ast
        diags = validate_law(ast)
        assert any("only available inside CONSTRAINT" in d.message for d in diags)


TEN_LAW_CORPUS = [
    RULESET_COUNTER,
    "UPON sent(*) DO [forward]",
    "UPON arrived(*) DO [deliver]",
    'UPON arrived(examine("inflow")) IF Sender.layer = "M" DO [emit(Sender, reply("inflow", count_gt(arr, Now - 60)))]',
    "UPON sent(PO(amount, sku)) IF amount > budget DO [audit(\"violation\", (\"overspend\", amount))]",
    'UPON adopted IF startswith(Cert.name, "buyer") DO [forward]',
    'UPON obligationDue("tick") DO [n <- n + 1, impose("tick", 5)]',
    "UPON arrived(budget(x)) DO [budget <- budget + x, deliver]",
    "UPON sent(reject(sku)) IF len(q[sku]) > 0 DO [q[sku] <- tail(q[sku]), forward]",
    "DELEGATES sent(*)\nCONSTRAINT Op.kind != \"forward\" or Op.sender = Self\nUPON sent(*) DO [delegate]",
]


class TestHash:
    def test_same_text_twice_same_hash(self):
        a = parse_law_text(RULESET_COUNTER).ast
        b = parse_law_text(RULESET_COUNTER).ast
        assert hash_law(a).hex == hash_law(b).hex

    @pytest.mark.parametrize("idx", range(len(TEN_LAW_CORPUS)))
    def test_whitespace_and_comments_do_not_change_identity(self, idx):
        text = TEN_LAW_CORPUS[idx]
        noisy = "# header comment\n" + text.replace(" DO ", "   DO  ").replace(
            ", ", " ,  "
        ) + "\n# trailing\n"
        clean = parse_law_text(text).ast
        reparsed = parse_law_text(noisy).ast
        assert reparsed is not None
        assert hash_law(clean).hex == hash_law(reparsed).hex

    def test_corpus_hashes_are_pairwise_distinct(self):
        hashes = [hash_law(parse_law_text(t).ast).hex for t in TEN_LAW_CORPUS]
        assert len(set(hashes)) == len(hashes)

    def test_changed_threshold_changes_hash(self):
        a = parse_law_text("UPON sent(PO(x)) IF x > 100 DO [forward]").ast
        b = parse_law_text("UPON sent(PO(x)) IF x > 101 DO [forward]").ast
        assert hash_law(a).hex != hash_law(b).hex

    def test_numeric_spelling_is_normalized(self):
        a = parse_law_text("UPON sent(PO(x)) IF x > 1.50 DO [forward]").ast
        b = parse_law_text("UPON sent(PO(x)) IF x > 1.5 DO [forward]").ast
        assert hash_law(a).hex == hash_law(b).hex

    def test_rule_order_is_part_of_identity(self):
        a = parse_law_text("UPON sent(a) DO [forward]\nUPON sent(b) DO [forward]").ast
        b = parse_law_text("UPON sent(b) DO [forward]\nUPON sent(a) DO [forward]").ast
        assert hash_law(a).hex != hash_law(b).hex


class TestRoundTrip:
    @pytest.mark.parametrize("idx", range(len(TEN_LAW_CORPUS)))
    def test_pretty_print_reparses_structurally_equal(self, idx):
        ast = parse_law_text(TEN_LAW_CORPUS[idx]).ast
        printed = pretty_print(ast)
        again = parse_law_text(printed)
        assert again.ok, printed
        assert again.ast == ast

    def test_generated_laws_round_trip(self):
        from random import Random

        from genlaw import random_law

        rng = Random(99)
        for _ in range(50):
            ast = random_law(rng)
            again = parse_law_text(pretty_print(ast)).ast
            assert again == ast


class TestTotality:
    @settings(max_examples=300, deadline=None)
    @given(st.text(max_size=200))
    def test_parser_never_crashes(self, text):
        result = parse_law_text(text)
        assert result.ast is not None or result.diagnostics

    @settings(max_examples=100, deadline=None)
    @given(st.binary(max_size=120))
    def test_random_bytes_decoded_lossy_never_crash(self, raw):
        result = parse_law_text(raw.decode("utf-8", errors="replace"))
        assert result.ast is not None or result.diagnostics

    def test_default_repertoire_covers_parser_ops(self):
        assert set(A.OP_KEYWORDS.values()) <= set(DEFAULT_REPERTOIRE)
