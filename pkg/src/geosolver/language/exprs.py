"""Expression trees and predicate-logic expression nodes.

Expressions are written in functional form (``Add(a,b,c)``, ``Sub(x,4)``,
``Sin(MeasureOfAngle(ABC))``). Numbers stay exact rationals; irrational
values only ever appear downstream, when Sqrt or a trigonometric operator
is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Union

# Operator arities: None means variadic (>= 2).
OPERATORS: dict[str, int | None] = {
    "Add": None,
    "Mul": None,
    "Sub": 2,
    "Div": 2,
    "Pow": 2,
    "Mod": 2,
    "Sqrt": 1,
    "Sin": 1,
    "Cos": 1,
    "Tan": 1,
}


@dataclass(frozen=True)
class Num:
    """Exact rational literal."""

    value: Fraction

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class FreeVar:
    """Free (user-named) lowercase symbol, e.g. ``Free(x)``."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class AttrTerm:
    """Attribute of a geometric object, e.g. ``LengthOfLine(AB)``.

    ``groups`` holds the comma-separated point groups of the written form;
    entries are point identifiers or, inside theorem definitions, point
    variables.
    """

    attr: str
    groups: tuple[tuple[str, ...], ...]

    @property
    def points(self) -> tuple[str, ...]:
        return tuple(p for g in self.groups for p in g)

    def __str__(self) -> str:
        return f"{self.attr}({','.join(''.join(g) for g in self.groups)})"


@dataclass(frozen=True)
class OpNode:
    op: str
    args: tuple["Expr", ...]

    def __str__(self) -> str:
        return f"{self.op}({','.join(str(a) for a in self.args)})"


Expr = Union[Num, FreeVar, AttrTerm, OpNode]


def num(value) -> Num:
    return Num(Fraction(value))


def attr_terms(expr: Expr) -> Iterator[AttrTerm]:
    """Yield every attribute term in the tree, left to right."""
    if isinstance(expr, AttrTerm):
        yield expr
    elif isinstance(expr, OpNode):
        for a in expr.args:
            yield from attr_terms(a)


def free_vars(expr: Expr) -> Iterator[FreeVar]:
    if isinstance(expr, FreeVar):
        yield expr
    elif isinstance(expr, OpNode):
        for a in expr.args:
            yield from free_vars(a)


def expr_points(expr: Expr) -> tuple[str, ...]:
    """Distinct points (or point variables) in first-appearance order."""
    seen: dict[str, None] = {}
    for term in attr_terms(expr):
        for p in term.points:
            seen.setdefault(p)
    return tuple(seen)


def substitute_points(expr: Expr, mapping: Mapping[str, str]) -> Expr:
    """Rename the points of every attribute term (variable instantiation)."""
    if isinstance(expr, AttrTerm):
        groups = tuple(tuple(mapping.get(p, p) for p in g) for g in expr.groups)
        return AttrTerm(expr.attr, groups)
    if isinstance(expr, OpNode):
        return OpNode(expr.op, tuple(substitute_points(a, mapping) for a in expr.args))
    return expr


def render_expr(expr: Expr) -> str:
    return str(expr)


def equation_text(expr: Expr) -> str:
    """Formal text of an expression asserted equal to zero.

    ``Sub(a, b)`` round-trips to ``Equal(a,b)``; anything else becomes
    ``Equal(expr,0)``.
    """
    if isinstance(expr, OpNode) and expr.op == "Sub":
        lhs, rhs = expr.args
        return f"Equal({lhs},{rhs})"
    return f"Equal({expr},0)"


# --- Geometric predicate logic ------------------------------------------

@dataclass(frozen=True)
class RelAtom:
    """Geometric relation over point variables, e.g. ``Collinear(AMB)``."""

    predicate: str
    vars: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.vars)})"


@dataclass(frozen=True)
class AlgAtom:
    """Algebraic constraint: an expression required to equal zero."""

    expr: Expr

    @property
    def vars(self) -> tuple[str, ...]:
        return expr_points(self.expr)

    def __str__(self) -> str:
        return equation_text(self.expr)


@dataclass(frozen=True)
class NotAtom:
    """Negated geometric relation (finite-universe complement)."""

    atom: RelAtom

    @property
    def vars(self) -> tuple[str, ...]:
        return self.atom.vars

    def __str__(self) -> str:
        return f"~{self.atom}"


Atom = Union[RelAtom, AlgAtom, NotAtom]


@dataclass(frozen=True)
class And:
    children: tuple["GplExpr", ...]

    def __str__(self) -> str:
        return "&".join(_wrap(c) for c in self.children)


@dataclass(frozen=True)
class Or:
    children: tuple["GplExpr", ...]

    def __str__(self) -> str:
        return "|".join(str(c) for c in self.children)


GplExpr = Union[And, Or, Atom]


def _wrap(child: GplExpr) -> str:
    if isinstance(child, Or):
        return f"({child})"
    return str(child)


def gpl_vars(expr: GplExpr) -> tuple[str, ...]:
    """Distinct point variables in first-appearance order."""
    seen: dict[str, None] = {}

    def walk(node: GplExpr) -> None:
        if isinstance(node, (And, Or)):
            for c in node.children:
                walk(c)
        else:
            for v in node.vars:
                seen.setdefault(v)

    walk(expr)
    return tuple(seen)
