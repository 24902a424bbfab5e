"""Parser and serializer for the textual KB format.

Grammar (whitespace between tokens is any run of spaces/tabs/newlines;
`//` comments run to end of line):

    kb        := statement*
    statement := fact "."
    fact      := id "::" id                                   // subclass-of
               | id ":" id                                    // instance-of
               | id "[" attr (";" attr)* "]"                  // frame
    attr      := name "->" value                              // single-valued
               | name "->>" "{" value ("," value)* "}"        // multi-valued
               | name "=>" id                                 // meta signature
    value     := id | string | number
    id, name  := [A-Za-z_][A-Za-z0-9_]*
    string    := '"' (any char except '"' and newline; '\\"' escapes a quote) '"'
    number    := -?[0-9]+("."[0-9]+)?

The first syntax violation aborts with a ParseError carrying the 1-based
line/column of the first offending character; there is no recovery.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from .model import (
    AttrMulti,
    AttrSingle,
    Fact,
    InstanceOf,
    KnowledgeBase,
    MetaSignature,
    NodeRef,
    NumberLiteral,
    SubclassOf,
    TextLiteral,
    Value,
    derive_entities,
    fact_sort_key,
    render_value,
)


class ParseError(Exception):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


@dataclass(frozen=True)
class _Token:
    kind: str  # 'id' | 'string' | 'number' | punctuation literal | 'eof'
    text: str
    line: int
    column: int


_PUNCT = ("->>", "::", "->", "=>", ":", "[", "]", "{", "}", ",", ";", ".")

_ID_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_ID_CONT = _ID_START | set("0123456789")
_DIGITS = set("0123456789")


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos, line, col = 0, 1, 1
    n = len(text)

    def advance(count: int) -> None:
        nonlocal pos, line, col
        for _ in range(count):
            if text[pos] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            pos += 1

    while pos < n:
        ch = text[pos]
        if ch in " \t\n":
            advance(1)
            continue
        if text.startswith("//", pos):
            while pos < n and text[pos] != "\n":
                advance(1)
            continue
        if ch in _ID_START:
            start = pos
            start_line, start_col = line, col
            while pos < n and text[pos] in _ID_CONT:
                advance(1)
            tokens.append(_Token("id", text[start:pos], start_line, start_col))
            continue
        if ch in _DIGITS or (ch == "-" and pos + 1 < n and text[pos + 1] in _DIGITS):
            start = pos
            start_line, start_col = line, col
            if ch == "-":
                advance(1)
            while pos < n and text[pos] in _DIGITS:
                advance(1)
            if (
                pos + 1 < n
                and text[pos] == "."
                and text[pos + 1] in _DIGITS
            ):
                advance(1)
                while pos < n and text[pos] in _DIGITS:
                    advance(1)
            tokens.append(_Token("number", text[start:pos], start_line, start_col))
            continue
        if ch == '"':
            start_line, start_col = line, col
            advance(1)
            chars: list[str] = []
            while True:
                if pos >= n or text[pos] == "\n":
                    raise ParseError(line, col, "unterminated string")
                if text[pos] == "\\" and pos + 1 < n and text[pos + 1] == '"':
                    chars.append('"')
                    advance(2)
                    continue
                if text[pos] == '"':
                    advance(1)
                    break
                chars.append(text[pos])
                advance(1)
            tokens.append(_Token("string", "".join(chars), start_line, start_col))
            continue
        for punct in _PUNCT:
            if text.startswith(punct, pos):
                tokens.append(_Token(punct, punct, line, col))
                advance(len(punct))
                break
        else:
            raise ParseError(line, col, f"unexpected character {ch!r}")

    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def take(self) -> _Token:
        token = self.current
        self.index += 1
        return token

    def expect(self, kind: str, what: str) -> _Token:
        if self.current.kind != kind:
            self.fail(f"expected {what}")
        return self.take()

    def fail(self, message: str) -> None:
        raise ParseError(self.current.line, self.current.column, message)

    def parse(self) -> tuple[list[Fact], list[tuple[int, int]]]:
        facts: list[Fact] = []
        positions: list[tuple[int, int]] = []
        while self.current.kind != "eof":
            statement_facts = self.statement()
            for fact, position in statement_facts:
                facts.append(fact)
                positions.append(position)
        return facts, positions

    def statement(self) -> list[tuple[Fact, tuple[int, int]]]:
        subject = self.expect("id", "identifier")
        out: list[tuple[Fact, tuple[int, int]]]
        if self.current.kind == "::":
            self.take()
            parent = self.expect("id", "identifier")
            out = [(SubclassOf(subject.text, parent.text), (subject.line, subject.column))]
        elif self.current.kind == ":":
            self.take()
            class_id = self.expect("id", "identifier")
            out = [(InstanceOf(subject.text, class_id.text), (subject.line, subject.column))]
        elif self.current.kind == "[":
            self.take()
            out = [self.attr(subject.text)]
            while self.current.kind == ";":
                self.take()
                out.append(self.attr(subject.text))
            self.expect("]", "']'")
        else:
            self.fail("expected '::', ':', or '['")
        self.expect(".", "'.'")
        return out

    def attr(self, subject: str) -> tuple[Fact, tuple[int, int]]:
        name = self.expect("id", "attribute name")
        position = (name.line, name.column)
        if self.current.kind == "->":
            self.take()
            return AttrSingle(subject, name.text, self.value()), position
        if self.current.kind == "->>":
            self.take()
            self.expect("{", "'{'")
            values = [self.value()]
            while self.current.kind == ",":
                self.take()
                values.append(self.value())
            self.expect("}", "'}'")
            return AttrMulti(subject, name.text, tuple(values)), position
        if self.current.kind == "=>":
            self.take()
            range_id = self.expect("id", "identifier")
            return MetaSignature(subject, name.text, range_id.text), position
        self.fail("expected '->', '->>', or '=>'")
        raise AssertionError("unreachable")

    def value(self) -> Value:
        token = self.current
        if token.kind == "id":
            self.take()
            return NodeRef(token.text)
        if token.kind == "string":
            self.take()
            return TextLiteral(token.text)
        if token.kind == "number":
            self.take()
            return NumberLiteral(Decimal(token.text))
        self.fail("expected value")
        raise AssertionError("unreachable")


def parse_kb(text: str) -> KnowledgeBase:
    """Parse KB text into a KnowledgeBase; facts keep source order.

    Raises ParseError at the first syntax violation.
    """
    facts, positions = _Parser(_tokenize(text)).parse()
    return KnowledgeBase(entities=derive_entities(facts), facts=facts, positions=positions)


def _statement_text(fact: Fact) -> str:
    if isinstance(fact, SubclassOf):
        return f"{fact.child} :: {fact.parent}."
    if isinstance(fact, InstanceOf):
        return f"{fact.instance} : {fact.class_id}."
    if isinstance(fact, MetaSignature):
        return f"{fact.subject}[{fact.relation} => {fact.range_id}]."
    if isinstance(fact, AttrSingle):
        return f"{fact.subject}[{fact.relation} -> {render_value(fact.value)}]."
    rendered = sorted(render_value(value) for value in fact.values)
    return f"{fact.subject}[{fact.relation} ->> {{{', '.join(rendered)}}}]."


def serialize_kb(kb: KnowledgeBase) -> str:
    """Canonical text form: one statement per fact, facts in canonical order,
    multi-values sorted. A text value holding a newline or a trailing
    backslash has no representation in the grammar and will not round-trip.
    """
    lines = [_statement_text(fact) for fact in sorted(kb.facts, key=fact_sort_key)]
    return "".join(line + "\n" for line in lines)
