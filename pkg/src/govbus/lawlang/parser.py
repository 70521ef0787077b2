"""Recursive-descent parser for the law language.

Grammar (one statement per line group, ``#`` comments to end of line):

    law        = { statement }
    statement  = rule | "DELEGATES" eventpat { "," eventpat } | "CONSTRAINT" expr
    rule       = "UPON" eventpat [ "IF" expr ] "DO" "[" [ op { "," op } ] "]"
    eventpat   = EVENTKIND [ "(" msgpat ")" ]
    msgpat     = "*" | STRING | IDENT [ "(" [ patarg { "," patarg } ] ")" ]
    patarg     = "_" | IDENT | literal
    op         = IDENT [ "[" expr "]" ] "<-" expr
               | OPKEYWORD [ "(" [ expr { "," expr } ] ")" ]

Expressions use the usual precedence: ``or``, ``and``, ``not``,
comparisons (``= != < <= > >=``), additive, multiplicative, unary minus.
Atoms: numbers, strings, ``null``, bare identifiers (cState keys or
pattern bindings), dotted names (``Sender.branch``), subscripted state
keys (``pending[sku]``), calls (builtin function or payload constructor)
and parenthesized tuples.

Parsing is total: any input produces an AST or diagnostics, never an
exception. After a syntax error the parser resynchronizes at the next
top-level keyword so later rules still get checked.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ast as A

_KEYWORDS = {"UPON", "IF", "DO", "DELEGATES", "CONSTRAINT", "and", "or", "not", "null"}
_DIGITS = set("0123456789")
_WORD_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_WORD = _WORD_START | _DIGITS
_PUNCT = ("<-", "!=", "<=", ">=", "(", ")", "[", "]", ",", ".", "=", "<", ">", "+", "-", "*", "/", "_")
_TOP_KEYWORDS = ("UPON", "DELEGATES", "CONSTRAINT")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUM STR PUNCT KEYWORD EOF
    text: str
    value: object
    line: int
    col: int


class _ParseAbort(Exception):
    pass


def _lex(text: str) -> tuple[list[Token], list[A.Diagnostic]]:
    tokens: list[Token] = []
    diags: list[A.Diagnostic] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c in _DIGITS or (c == "." and i + 1 < n and text[i + 1] in _DIGITS):
            j = i
            seen_dot = False
            while j < n and (text[j] in _DIGITS or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    # "1.foo" is a number followed by '.', not a float
                    if j + 1 >= n or text[j + 1] not in _DIGITS:
                        break
                    seen_dot = True
                j += 1
            raw = text[i:j]
            value: object = float(raw) if "." in raw else int(raw)
            tokens.append(Token("NUM", raw, value, start_line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            j = i + 1
            buf = []
            closed = False
            while j < n:
                if text[j] == "\\" and j + 1 < n:
                    esc = text[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                    continue
                if text[j] == '"':
                    closed = True
                    j += 1
                    break
                if text[j] == "\n":
                    break
                buf.append(text[j])
                j += 1
            if not closed:
                diags.append(A.Diagnostic("unterminated string literal", start_line, start_col))
            tokens.append(Token("STR", text[i:j], "".join(buf), start_line, start_col))
            col += j - i
            i = j
            continue
        if c in _WORD_START:
            j = i
            while j < n and text[j] in _WORD:
                j += 1
            word = text[i:j]
            if word == "_":
                tokens.append(Token("PUNCT", "_", "_", start_line, start_col))
            elif word in _KEYWORDS:
                tokens.append(Token("KEYWORD", word, word, start_line, start_col))
            else:
                tokens.append(Token("IDENT", word, word, start_line, start_col))
            col += j - i
            i = j
            continue
        matched = None
        for p in _PUNCT:
            if text.startswith(p, i):
                matched = p
                break
        if matched is None:
            diags.append(A.Diagnostic(f"unexpected character {c!r}", start_line, start_col))
            i += 1
            col += 1
            continue
        tokens.append(Token("PUNCT", matched, matched, start_line, start_col))
        i += len(matched)
        col += len(matched)
    tokens.append(Token("EOF", "", None, line, col))
    return tokens, diags


class Parser:
    def __init__(self, text: str):
        self.tokens, self.diags = _lex(text)
        self.pos = 0

    # --- token plumbing ---

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def _advance(self) -> Token:
        tok = self.cur
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def _check(self, kind: str, text: str | None = None) -> bool:
        tok = self.cur
        return tok.kind == kind and (text is None or tok.text == text)

    def _accept(self, kind: str, text: str | None = None) -> Token | None:
        if self._check(kind, text):
            return self._advance()
        return None

    def _expect(self, kind: str, text: str | None = None, expected: str | None = None) -> Token:
        if self._check(kind, text):
            return self._advance()
        want = expected or (text if text else kind)
        self._error(f"expected {want}, found {self.cur.text or 'end of law'!r}")
        raise _ParseAbort

    def _error(self, message: str) -> None:
        self.diags.append(A.Diagnostic(message, self.cur.line, self.cur.col))

    def _sync(self) -> None:
        # panic-mode recovery: skip to the next top-level keyword
        while self.cur.kind != "EOF":
            if self.cur.kind == "KEYWORD" and self.cur.text in _TOP_KEYWORDS:
                return
            self._advance()

    # --- grammar ---

    def parse_law(self) -> A.LawAST:
        rules: list[A.Rule] = []
        delegations: list[A.EventPattern] = []
        constraints: list[A.Expr] = []
        while self.cur.kind != "EOF":
            try:
                if self._accept("KEYWORD", "UPON"):
                    rules.append(self._rule())
                elif self._accept("KEYWORD", "DELEGATES"):
                    delegations.append(self._event_pattern())
                    while self._accept("PUNCT", ","):
                        delegations.append(self._event_pattern())
                elif self._accept("KEYWORD", "CONSTRAINT"):
                    constraints.append(self._expr())
                else:
                    self._error(
                        f"expected UPON, DELEGATES or CONSTRAINT, found {self.cur.text!r}"
                    )
                    raise _ParseAbort
            except _ParseAbort:
                self._advance()
                self._sync()
        return A.LawAST(tuple(rules), tuple(delegations), tuple(constraints))

    def _rule(self) -> A.Rule:
        event = self._event_pattern()
        condition = None
        if self._accept("KEYWORD", "IF"):
            condition = self._expr()
        self._expect("KEYWORD", "DO")
        self._expect("PUNCT", "[")
        ops: list[A.DoOp] = []
        if not self._check("PUNCT", "]"):
            ops.append(self._op())
            while self._accept("PUNCT", ","):
                ops.append(self._op())
        self._expect("PUNCT", "]")
        return A.Rule(event, tuple(ops), condition)

    def _event_pattern(self) -> A.EventPattern:
        tok = self._expect("IDENT", expected="event kind")
        if tok.text not in A.EVENT_KINDS:
            self._error(f"unknown event kind {tok.text!r} (expected one of {', '.join(A.EVENT_KINDS)})")
            raise _ParseAbort
        msg = None
        if self._accept("PUNCT", "("):
            msg = self._msg_pattern(tok.text)
            self._expect("PUNCT", ")")
        return A.EventPattern(tok.text, msg)

    def _msg_pattern(self, event_kind: str) -> A.MsgPattern:
        if self._accept("PUNCT", "*"):
            return A.MsgPattern(None, None)
        if event_kind == "obligationDue":
            # the "message" of an obligation event is its name
            return A.MsgPattern(None, (self._pat_arg(),))
        tok = self._expect("IDENT", expected="message kind")
        args: tuple[A.PatArg, ...] | None = None
        if self._accept("PUNCT", "("):
            items: list[A.PatArg] = []
            if not self._check("PUNCT", ")"):
                items.append(self._pat_arg())
                while self._accept("PUNCT", ","):
                    items.append(self._pat_arg())
            self._expect("PUNCT", ")")
            args = tuple(items)
        return A.MsgPattern(tok.text, args)

    def _pat_arg(self) -> A.PatArg:
        if self._accept("PUNCT", "_"):
            return A.PatArg(wildcard=True)
        if self.cur.kind == "IDENT":
            return A.PatArg(bind=self._advance().text)
        if self.cur.kind == "NUM" or self.cur.kind == "STR":
            return A.PatArg(literal=self._advance().value)
        neg = self._accept("PUNCT", "-")
        if neg and self.cur.kind == "NUM":
            return A.PatArg(literal=-self._advance().value)  # type: ignore[operator]
        self._error(f"expected pattern argument, found {self.cur.text!r}")
        raise _ParseAbort

    def _op(self) -> A.DoOp:
        tok = self._expect("IDENT", expected="control operation")
        # assignment form: IDENT [ '[' expr ']' ] '<-' expr
        key = None
        if self._check("PUNCT", "["):
            self._advance()
            key = self._expr()
            self._expect("PUNCT", "]")
            self._expect("PUNCT", "<-")
            return A.Assign(tok.text, self._expr(), key)
        if self._accept("PUNCT", "<-"):
            return A.Assign(tok.text, self._expr())
        name = A.OP_KEYWORDS.get(tok.text)
        if name is None:
            self._error(f"unknown control operation {tok.text!r}")
            raise _ParseAbort
        args: list[A.Expr] = []
        if self._accept("PUNCT", "("):
            if not self._check("PUNCT", ")"):
                args.append(self._expr())
                while self._accept("PUNCT", ","):
                    args.append(self._expr())
            self._expect("PUNCT", ")")
        if len(args) not in A.OP_ARITY[name]:
            self._error(f"{tok.text} takes {' or '.join(map(str, A.OP_ARITY[name]))} arguments, got {len(args)}")
            raise _ParseAbort
        return A.OpCall(name, tuple(args))

    # --- expressions ---

    def _expr(self) -> A.Expr:
        return self._or()

    def _or(self) -> A.Expr:
        left = self._and()
        while self._accept("KEYWORD", "or"):
            left = A.Binary("or", left, self._and())
        return left

    def _and(self) -> A.Expr:
        left = self._not()
        while self._accept("KEYWORD", "and"):
            left = A.Binary("and", left, self._not())
        return left

    def _not(self) -> A.Expr:
        if self._accept("KEYWORD", "not"):
            return A.Unary("not", self._not())
        return self._comparison()

    def _comparison(self) -> A.Expr:
        left = self._additive()
        for op in ("!=", "<=", ">=", "=", "<", ">"):
            if self._check("PUNCT", op):
                self._advance()
                return A.Binary(op, left, self._additive())
        return left

    def _additive(self) -> A.Expr:
        left = self._multiplicative()
        while self._check("PUNCT", "+") or self._check("PUNCT", "-"):
            op = self._advance().text
            left = A.Binary(op, left, self._multiplicative())
        return left

    def _multiplicative(self) -> A.Expr:
        left = self._unary()
        while self._check("PUNCT", "*") or self._check("PUNCT", "/"):
            op = self._advance().text
            left = A.Binary(op, left, self._unary())
        return left

    def _unary(self) -> A.Expr:
        if self._accept("PUNCT", "-"):
            return A.Unary("-", self._unary())
        return self._atom()

    def _atom(self) -> A.Expr:
        tok = self.cur
        if tok.kind == "NUM" or tok.kind == "STR":
            self._advance()
            return A.Lit(tok.value)
        if self._accept("KEYWORD", "null"):
            return A.Lit(None)
        if tok.kind == "IDENT":
            self._advance()
            if self._check("PUNCT", "."):
                path = []
                while self._accept("PUNCT", "."):
                    path.append(self._expect("IDENT", expected="field name").text)
                return A.Dotted(tok.text, tuple(path))
            if self._accept("PUNCT", "("):
                args: list[A.Expr] = []
                if not self._check("PUNCT", ")"):
                    args.append(self._expr())
                    while self._accept("PUNCT", ","):
                        args.append(self._expr())
                self._expect("PUNCT", ")")
                return A.Call(tok.text, tuple(args))
            if self._accept("PUNCT", "["):
                key = self._expr()
                self._expect("PUNCT", "]")
                return A.Subscript(tok.text, key)
            return A.Name(tok.text)
        if self._accept("PUNCT", "("):
            items = [self._expr()]
            while self._accept("PUNCT", ","):
                items.append(self._expr())
            self._expect("PUNCT", ")")
            if len(items) == 1:
                return items[0]
            return A.TupleLit(tuple(items))
        self._error(f"expected expression, found {tok.text or 'end of law'!r}")
        raise _ParseAbort


@dataclass
class ParseResult:
    ast: A.LawAST | None
    diagnostics: list[A.Diagnostic]

    @property
    def ok(self) -> bool:
        return self.ast is not None and not self.diagnostics


def parse_law_text(text: str) -> ParseResult:
    """Parse law text. Total: returns an AST and/or diagnostics."""
    parser = Parser(text)
    law = parser.parse_law()
    if parser.diags:
        return ParseResult(None, parser.diags)
    return ParseResult(law, [])
