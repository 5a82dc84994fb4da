"""Condition declaration statements and the machine-to-text inverse parser."""

from __future__ import annotations

from dataclasses import dataclass

from . import parser
from .exprs import Expr, equation_text
from .kb import ATTRIBUTION, KnowledgeBase
from .parser import ParseError

CONSTRUCTION_PREDICATES = ("Shape", "Collinear", "Cocircular")
GOAL_KINDS = ("Value", "Equal", "Relation")

CONSTRUCTION = "construction"
CONDITION = "condition"
GOAL = "goal"


@dataclass(frozen=True)
class CdlStatement:
    category: str
    predicate: str
    groups: tuple[tuple[str, ...], ...] = ()
    expr: Expr | None = None
    inner: str = ""  # predicate of a Relation(...) goal

    @property
    def points(self) -> tuple[str, ...]:
        return tuple(p for g in self.groups for p in g)


def parse_cdl(text: str, kb: KnowledgeBase | None = None,
              category: str | None = None) -> CdlStatement:
    """Parse one condition-declaration line.

    ``category`` disambiguates ``Equal(...)``, which is a condition inside
    ``text_cdl`` but a goal inside ``goal_cdl``.
    """
    text = text.strip()
    head = text.split("(", 1)[0].strip()

    if head in CONSTRUCTION_PREDICATES:
        name, groups = parser.parse_fact(text)
        stmt = CdlStatement(CONSTRUCTION, name, groups)
        _check_construction(stmt)
        return stmt

    if head == "Value" and category != CONDITION:
        inner = _strip_call(text, "Value")
        return CdlStatement(GOAL, "Value", expr=parser.parse_expr(inner))
    if head == "Relation" and category != CONDITION:
        inner = _strip_call(text, "Relation")
        name, groups = parser.parse_fact(inner)
        if kb is not None:
            kb.predicate(name)
        return CdlStatement(GOAL, "Relation", groups, inner=name)
    if head == "Equal" and category == GOAL:
        return CdlStatement(GOAL, "Equal", expr=parser.parse_equation(text))

    if head in ("Equal", "Equation"):
        stmt = CdlStatement(CONDITION, "Equation", expr=parser.parse_equation(text))
        if kb is not None:
            _check_attr_terms(stmt.expr, kb)
        return stmt

    name, groups = parser.parse_fact(text)
    if kb is not None:
        pred = kb.predicate(name)
        if pred.kind == ATTRIBUTION:
            raise ParseError(f"{name} is an attribution, not a standalone fact")
        if not pred.variadic and len(pred.vars) != sum(len(g) for g in groups):
            raise ParseError(f"{name} takes {len(pred.vars)} points")
    return CdlStatement(CONDITION, name, groups)


def _strip_call(text: str, name: str) -> str:
    if not (text.startswith(name + "(") and text.endswith(")")):
        raise ParseError(f"malformed {name} statement: {text!r}")
    return text[len(name) + 1:-1]


def _check_construction(stmt: CdlStatement) -> None:
    if stmt.predicate == "Shape":
        for g in stmt.groups:
            if len(g) != 2:
                raise ParseError(f"Shape edges are point pairs, got {''.join(g)!r}")
    elif stmt.predicate == "Collinear":
        if len(stmt.groups) != 1 or len(stmt.groups[0]) < 3:
            raise ParseError("Collinear takes a single run of at least 3 points")
    elif stmt.predicate == "Cocircular":
        if len(stmt.groups) != 2 or len(stmt.groups[0]) != 1 or not stmt.groups[1]:
            raise ParseError("Cocircular takes a centre and a run of points")


def _check_attr_terms(expr: Expr, kb: KnowledgeBase) -> None:
    from .exprs import attr_terms
    for term in attr_terms(expr):
        pred = kb.predicate(term.attr)
        if pred.kind != ATTRIBUTION:
            raise ParseError(f"{term.attr} is not an attribution")
        if len(term.points) != len(pred.vars):
            raise ParseError(f"{term.attr} takes {len(pred.vars)} points")


# --- inverse parsing --------------------------------------------------------

def render_fact(kb: KnowledgeBase, predicate: str, item: tuple[str, ...]) -> str:
    """Formal text of a stored fact, regrouped per the predicate's pattern."""
    if predicate == "Shape":
        edges = [item[i] + item[(i + 1) % len(item)] for i in range(len(item))]
        return f"Shape({','.join(edges)})"
    if predicate in ("Collinear", "Polygon"):
        return f"{predicate}({''.join(item)})"
    if predicate == "Cocircular":
        return f"Cocircular({item[0]},{''.join(item[1:])})"
    pred = kb.predicate(predicate)
    parts, i = [], 0
    for g in pred.var_groups:
        parts.append("".join(item[i:i + len(g)]))
        i += len(g)
    return f"{predicate}({','.join(parts)})"


def inverse_parse(kb: KnowledgeBase, predicate: str,
                  item: tuple[str, ...] | Expr) -> str:
    """Translate one machine condition back into formal text."""
    if predicate == "Equation":
        assert not isinstance(item, tuple)
        return equation_text(item)
    assert isinstance(item, tuple)
    return render_fact(kb, predicate, item)


def goal_text(kind: str, payload) -> str:
    """Formal text of a goal statement."""
    if kind == "Value":
        return f"Value({payload})"
    if kind == "Equal":
        return equation_text(payload)
    predicate, item, kb = payload
    return f"Relation({render_fact(kb, predicate, item)})"
