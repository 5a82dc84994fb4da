"""Tokenizer and recursive-descent parsers for the formal languages.

Three statement families share one predicate-logic-style syntax,
``Name(item,item,...)`` with nested parentheses:

* expressions  — operators, attribute terms, free symbols, rationals
* facts        — a predicate name applied to point groups
* premises     — facts and equations combined with ``&``, ``|``, ``~``
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .exprs import (
    OPERATORS,
    AlgAtom,
    And,
    AttrTerm,
    Expr,
    FreeVar,
    GplExpr,
    NotAtom,
    Num,
    OpNode,
    Or,
    RelAtom,
)


class ParseError(ValueError):
    """Syntax or reference error, carrying source position when known."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}"
            where += f", col {col})" if col is not None else ")"
        super().__init__(message + where)


_TOKEN_RE = re.compile(
    r"""\s+
      | (?P<number>\d+(?:\.\d+)?)
      | (?P<name>[A-Za-z][A-Za-z0-9_]*)
      | (?P<punct>[(),/&|~\-])
    """,
    re.X,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number | name | one of ( ) , / & | ~ -
    text: str
    col: int


def tokenize(text: str, line: int | None = None) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos + 1)
        if m.lastgroup == "number":
            tokens.append(Token("number", m.group(), m.start() + 1))
        elif m.lastgroup == "name":
            tokens.append(Token("name", m.group(), m.start() + 1))
        elif m.lastgroup == "punct":
            tokens.append(Token(m.group(), m.group(), m.start() + 1))
        pos = m.end()
    return tokens


def is_point_group(text: str) -> bool:
    """Point groups are runs of uppercase letters: ``AB``, ``AMB``."""
    return text.isalpha() and text.isupper()


def is_free_symbol(text: str) -> bool:
    return bool(re.fullmatch(r"[a-z][a-z0-9_]*", text))


class _Cursor:
    def __init__(self, tokens: list[Token], line: int | None = None):
        self.tokens = tokens
        self.i = 0
        self.line = line

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.line)
        self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            got = tok.text if tok else "end of input"
            raise ParseError(f"expected {kind!r}, got {got!r}", self.line,
                             tok.col if tok else None)
        return self.next()

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    def fail(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, self.line, tok.col if tok else None)


# --- expressions ----------------------------------------------------------

def parse_expr(text: str, line: int | None = None) -> Expr:
    cur = _Cursor(tokenize(text, line), line)
    expr = _parse_expr(cur)
    if not cur.done():
        raise cur.fail("trailing input after expression")
    return expr


def _parse_number(cur: _Cursor, negative: bool = False) -> Num:
    tok = cur.expect("number")
    value = Fraction(tok.text)
    if cur.peek() is not None and cur.peek().kind == "/":
        cur.next()
        denom = cur.expect("number")
        value = value / Fraction(denom.text)
    return Num(-value if negative else value)


def _parse_expr(cur: _Cursor) -> Expr:
    tok = cur.peek()
    if tok is None:
        raise ParseError("empty expression", cur.line)
    if tok.kind == "-":
        cur.next()
        return _parse_number(cur, negative=True)
    if tok.kind == "number":
        return _parse_number(cur)
    if tok.kind != "name":
        raise cur.fail(f"unexpected token {tok.text!r} in expression")
    cur.next()
    follows_call = cur.peek() is not None and cur.peek().kind == "("
    if not follows_call:
        if is_free_symbol(tok.text):
            return FreeVar(tok.text)
        raise ParseError(f"bare name {tok.text!r} is not a free symbol",
                         cur.line, tok.col)
    cur.expect("(")
    if tok.text in OPERATORS:
        args = [_parse_expr(cur)]
        while cur.peek() is not None and cur.peek().kind == ",":
            cur.next()
            args.append(_parse_expr(cur))
        cur.expect(")")
        arity = OPERATORS[tok.text]
        if arity is None:
            if len(args) < 2:
                raise ParseError(f"{tok.text} needs at least 2 arguments",
                                 cur.line, tok.col)
        elif len(args) != arity:
            raise ParseError(
                f"{tok.text} takes {arity} argument(s), got {len(args)}",
                cur.line, tok.col)
        return OpNode(tok.text, tuple(args))
    # Attribute term: point groups only.
    groups = [_parse_point_group(cur)]
    while cur.peek() is not None and cur.peek().kind == ",":
        cur.next()
        groups.append(_parse_point_group(cur))
    cur.expect(")")
    return AttrTerm(tok.text, tuple(groups))


def _parse_point_group(cur: _Cursor) -> tuple[str, ...]:
    tok = cur.expect("name")
    if not is_point_group(tok.text):
        raise ParseError(f"malformed point sequence {tok.text!r}", cur.line, tok.col)
    return tuple(tok.text)


def parse_equation(text: str, line: int | None = None) -> Expr:
    """Parse ``Equal(a,b)`` or ``Equation(expr)`` into an expression == 0."""
    cur = _Cursor(tokenize(text, line), line)
    expr = _parse_equation(cur)
    if not cur.done():
        raise cur.fail("trailing input after equation")
    return expr


def _parse_equation(cur: _Cursor) -> Expr:
    head = cur.expect("name")
    if head.text == "Equal":
        cur.expect("(")
        lhs = _parse_expr(cur)
        cur.expect(",")
        rhs = _parse_expr(cur)
        cur.expect(")")
        return OpNode("Sub", (lhs, rhs))
    if head.text == "Equation":
        cur.expect("(")
        expr = _parse_expr(cur)
        cur.expect(")")
        return expr
    raise ParseError(f"expected Equal or Equation, got {head.text!r}",
                     cur.line, head.col)


# --- facts ----------------------------------------------------------------

def parse_fact(text: str, line: int | None = None) -> tuple[str, tuple[tuple[str, ...], ...]]:
    """Parse ``Name(AB,CD)`` into (predicate, point groups)."""
    cur = _Cursor(tokenize(text, line), line)
    name, groups = _parse_fact(cur)
    if not cur.done():
        raise cur.fail("trailing input after fact")
    return name, groups


def _parse_fact(cur: _Cursor) -> tuple[str, tuple[tuple[str, ...], ...]]:
    head = cur.expect("name")
    cur.expect("(")
    groups = [_parse_point_group(cur)]
    while cur.peek() is not None and cur.peek().kind == ",":
        cur.next()
        groups.append(_parse_point_group(cur))
    cur.expect(")")
    return head.text, tuple(groups)


# --- geometric predicate logic ---------------------------------------------

def parse_gpl(text: str, line: int | None = None) -> GplExpr:
    """Parse a theorem premise: atoms joined by ``&``, ``|``, ``~``.

    ``&`` binds tighter than ``|``; ``~`` applies to a single relation atom.
    """
    cur = _Cursor(tokenize(text, line), line)
    expr = _parse_or(cur)
    if not cur.done():
        raise cur.fail("trailing input after premise")
    return expr


def _parse_or(cur: _Cursor) -> GplExpr:
    children = [_parse_and(cur)]
    while cur.peek() is not None and cur.peek().kind == "|":
        cur.next()
        children.append(_parse_and(cur))
    return children[0] if len(children) == 1 else Or(tuple(children))


def _parse_and(cur: _Cursor) -> GplExpr:
    children = [_parse_gpl_factor(cur)]
    while cur.peek() is not None and cur.peek().kind == "&":
        cur.next()
        children.append(_parse_gpl_factor(cur))
    return children[0] if len(children) == 1 else And(tuple(children))


def _parse_gpl_factor(cur: _Cursor) -> GplExpr:
    tok = cur.peek()
    if tok is None:
        raise ParseError("unexpected end of premise", cur.line)
    if tok.kind == "~":
        cur.next()
        atom = _parse_gpl_factor(cur)
        if not isinstance(atom, RelAtom):
            raise ParseError("~ applies to a single relation atom", cur.line, tok.col)
        return NotAtom(atom)
    if tok.kind == "(":
        cur.next()
        inner = _parse_or(cur)
        cur.expect(")")
        return inner
    if tok.kind == "name" and tok.text in ("Equal", "Equation"):
        return AlgAtom(_parse_equation(cur))
    name, groups = _parse_fact(cur)
    return RelAtom(name, tuple(p for g in groups for p in g))
