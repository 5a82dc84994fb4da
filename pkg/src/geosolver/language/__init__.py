"""Formal language layer: expressions, definitions, condition statements."""

from .exprs import (
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
from .kb import KnowledgeBase, KbError, PredicateDef, TheoremDef, load_kb, parse_gdl
from .cdl import CdlStatement, inverse_parse, parse_cdl, render_fact
from .parser import ParseError, parse_expr, parse_equation, parse_gpl

__all__ = [
    "AlgAtom", "And", "AttrTerm", "CdlStatement", "Expr", "FreeVar", "GplExpr",
    "KbError", "KnowledgeBase", "NotAtom", "Num", "OpNode", "Or", "ParseError",
    "PredicateDef", "RelAtom", "TheoremDef", "inverse_parse", "load_kb",
    "parse_cdl", "parse_equation", "parse_expr", "parse_gdl", "parse_gpl",
    "render_fact",
]
