"""Predicate and theorem definitions, and the definition-language loader.

A knowledge base holds the nine built-in construction predicates plus any
number of user-defined entities, relations and attributions, together with
the theorem library. Definition files are plain text, one block per
definition::

    Relation IsMidpointOfLine(M,AB):
        ee_check: Point(M)
        ee_check: Line(AB)
        ee_check: Collinear(AMB)
        multi: M,BA
        extend: Equal(LengthOfLine(AM),LengthOfLine(MB))

    Theorem midpoint_of_line_judgment(M,AB):
        premise: Collinear(AMB)&Equal(LengthOfLine(AM),LengthOfLine(MB))
        conclusion: IsMidpointOfLine(M,AB)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Union

from . import parser
from .exprs import AlgAtom, Expr, GplExpr, RelAtom, attr_terms, gpl_vars
from .parser import ParseError

STRUCTURE = "structure"
BASIC_ENTITY = "basic-entity"
ENTITY = "entity"
RELATION = "relation"
ATTRIBUTION = "attribution"

CONSTRUCTION_KINDS = (STRUCTURE, BASIC_ENTITY)

# Predicates whose items are variable-length point runs.
VARIADIC = ("Shape", "Collinear", "Cocircular", "Polygon")

ExtendItem = Union[RelAtom, AlgAtom]


@dataclass(frozen=True)
class PredicateDef:
    name: str
    kind: str
    var_groups: tuple[tuple[str, ...], ...]
    ee_check: tuple[RelAtom, ...] = ()
    fv_check: tuple[tuple[str, ...], ...] = ()
    multi: tuple[tuple[str, ...], ...] = ()
    extend: tuple[ExtendItem, ...] = ()
    sym: str = ""

    @property
    def vars(self) -> tuple[str, ...]:
        return tuple(v for g in self.var_groups for v in g)

    @property
    def variadic(self) -> bool:
        return self.name in VARIADIC

    @property
    def is_construction(self) -> bool:
        return self.kind in CONSTRUCTION_KINDS


@dataclass(frozen=True)
class TheoremDef:
    name: str
    var_groups: tuple[tuple[str, ...], ...]
    premise: GplExpr
    conclusions: tuple[ExtendItem, ...]

    @property
    def vars(self) -> tuple[str, ...]:
        """Distinct point variables in first-appearance order."""
        seen: dict[str, None] = {}
        for g in self.var_groups:
            for v in g:
                seen.setdefault(v)
        return tuple(seen)


def _builtin_defs() -> list[PredicateDef]:
    line = lambda a, b: RelAtom("Line", (a, b))
    point = lambda a: RelAtom("Point", (a,))
    return [
        PredicateDef("Shape", STRUCTURE, ()),
        PredicateDef("Collinear", STRUCTURE, ()),
        PredicateDef("Cocircular", STRUCTURE, ()),
        PredicateDef("Point", BASIC_ENTITY, (("A",),)),
        PredicateDef("Line", BASIC_ENTITY, (("A", "B"),),
                      multi=(("B", "A"),),
                      extend=(point("A"), point("B"))),
        PredicateDef("Arc", BASIC_ENTITY, (("O", "A", "B"),),
                      extend=(RelAtom("Circle", ("O",)), point("A"), point("B"))),
        PredicateDef("Angle", BASIC_ENTITY, (("A", "B", "C"),),
                      extend=(line("A", "B"), line("B", "C"))),
        PredicateDef("Polygon", BASIC_ENTITY, ()),
        PredicateDef("Circle", BASIC_ENTITY, (("O",),),
                      extend=(point("O"),)),
    ]


class KbError(ValueError):
    """Invalid or inconsistent definition set."""


class KnowledgeBase:
    """Loaded predicate and theorem definitions with lookup helpers."""

    def __init__(self, predicates: Iterable[PredicateDef] = (),
                 theorems: Iterable[TheoremDef] = ()):
        self.predicates: dict[str, PredicateDef] = {}
        self.theorems: dict[str, TheoremDef] = {}
        for builtin in _builtin_defs():
            self.predicates[builtin.name] = builtin
        for p in predicates:
            self.add_predicate(p)
        for t in theorems:
            self.add_theorem(t)
        self._perm_cache: dict[str, tuple[tuple[int, ...], ...]] = {}

    # -- registration ------------------------------------------------------

    def add_predicate(self, p: PredicateDef) -> None:
        if p.name in self.predicates:
            raise KbError(f"duplicate predicate definition {p.name!r}")
        if p.kind in CONSTRUCTION_KINDS:
            raise KbError(f"{p.name!r}: structure and basic-entity predicates are built in")
        _validate_predicate(p)
        self.predicates[p.name] = p

    def add_theorem(self, t: TheoremDef) -> None:
        if t.name in self.theorems:
            raise KbError(f"duplicate theorem definition {t.name!r}")
        self.theorems[t.name] = t

    def validate(self) -> None:
        """Cross-definition checks, run after every definition is loaded."""
        for p in self.predicates.values():
            for atom in p.ee_check:
                self._check_reference(atom, f"predicate {p.name}")
            for item in p.extend:
                self._check_extend_item(p, item)
        self._check_extend_acyclic()
        for t in self.theorems.values():
            tvars = set(t.vars)
            for atom in _gpl_atoms(t.premise):
                if isinstance(atom, RelAtom):
                    self._check_reference(atom, f"theorem {t.name}")
                else:
                    self._check_expr_refs(atom.expr, f"theorem {t.name}")
            pvars = set(gpl_vars(t.premise))
            for item in t.conclusions:
                ivars = set(item.vars if isinstance(item, RelAtom)
                            else AlgAtom(item.expr).vars)
                if not ivars <= pvars:
                    raise KbError(
                        f"theorem {t.name}: conclusion uses variables "
                        f"{sorted(ivars - pvars)} absent from the premise")
                if isinstance(item, RelAtom):
                    self._check_reference(item, f"theorem {t.name}")
                else:
                    self._check_expr_refs(item.expr, f"theorem {t.name}")
            if not pvars <= tvars:
                raise KbError(f"theorem {t.name}: premise uses undeclared variables "
                              f"{sorted(pvars - tvars)}")

    def _check_reference(self, atom: RelAtom, where: str) -> None:
        pred = self.predicates.get(atom.predicate)
        if pred is None:
            raise KbError(f"{where}: unknown predicate {atom.predicate!r}")
        if not pred.variadic and len(atom.vars) != len(pred.vars):
            raise KbError(f"{where}: {atom.predicate} takes {len(pred.vars)} "
                          f"points, got {len(atom.vars)}")

    def _check_expr_refs(self, expr: Expr, where: str) -> None:
        for term in attr_terms(expr):
            attr = self.predicates.get(term.attr)
            if attr is None or attr.kind != ATTRIBUTION:
                raise KbError(f"{where}: unknown attribution {term.attr!r}")
            if len(term.points) != len(attr.vars):
                raise KbError(f"{where}: {term.attr} takes {len(attr.vars)} "
                              f"points, got {len(term.points)}")

    def _check_extend_item(self, p: PredicateDef, item: ExtendItem) -> None:
        if isinstance(item, RelAtom):
            self._check_reference(item, f"predicate {p.name} extend")
            target = self.predicates[item.predicate]
            if p.is_construction != target.is_construction:
                raise KbError(
                    f"predicate {p.name}: extension may not cross between "
                    f"construction and custom predicates ({target.name})")
            unknown = set(item.vars) - set(p.vars)
        else:
            if p.is_construction:
                raise KbError(f"predicate {p.name}: construction predicates "
                              "may not extend equations")
            self._check_expr_refs(item.expr, f"predicate {p.name} extend")
            unknown = set(item.vars) - set(p.vars)
        if unknown:
            raise KbError(f"predicate {p.name}: extend uses variables "
                          f"{sorted(unknown)} outside the point pattern")

    def _check_extend_acyclic(self) -> None:
        graph = {
            name: [i.predicate for i in p.extend if isinstance(i, RelAtom)]
            for name, p in self.predicates.items()
        }
        state: dict[str, int] = {}

        def visit(node: str, trail: list[str]) -> None:
            mark = state.get(node)
            if mark == 2:
                return
            if mark == 1:
                cycle = trail[trail.index(node):] + [node]
                raise KbError("extension cycle: " + " -> ".join(cycle))
            state[node] = 1
            for nxt in graph.get(node, ()):
                visit(nxt, trail + [node])
            state[node] = 2

        for name in graph:
            visit(name, [])

    # -- lookup / instantiation --------------------------------------------

    def predicate(self, name: str) -> PredicateDef:
        p = self.predicates.get(name)
        if p is None:
            raise KbError(f"unknown predicate {name!r}")
        return p

    def theorem(self, name: str) -> TheoremDef:
        t = self.theorems.get(name)
        if t is None:
            raise KbError(f"unknown theorem {name!r}")
        return t

    def attributions(self) -> list[PredicateDef]:
        return [p for p in self.predicates.values() if p.kind == ATTRIBUTION]

    def _perm_closure(self, p: PredicateDef) -> tuple[tuple[int, ...], ...]:
        """Index permutations generated by the multi entries (incl. identity)."""
        cached = self._perm_cache.get(p.name)
        if cached is not None:
            return cached
        base = p.vars
        index = {v: i for i, v in enumerate(base)}
        gens = [tuple(index[v] for v in entry) for entry in p.multi]
        identity = tuple(range(len(base)))
        closure = {identity}
        frontier = [identity]
        while frontier:
            perm = frontier.pop()
            for g in gens:
                composed = tuple(perm[i] for i in g)
                if composed not in closure:
                    closure.add(composed)
                    frontier.append(composed)
        result = tuple(sorted(closure))
        self._perm_cache[p.name] = result
        return result

    def multi_reps(self, name: str, item: tuple[str, ...]) -> tuple[tuple[str, ...], ...]:
        """All equivalent representations of one stored fact."""
        p = self.predicate(name)
        if p.variadic:
            return _variadic_reps(name, item)
        reps = {tuple(item[i] for i in perm) for perm in self._perm_closure(p)}
        return tuple(sorted(reps))

    def canonical_rep(self, name: str, item: tuple[str, ...]) -> tuple[str, ...]:
        return min(self.multi_reps(name, item))


def _variadic_reps(name: str, item: tuple[str, ...]) -> tuple[tuple[str, ...], ...]:
    if name in ("Shape", "Polygon"):
        n = len(item)
        return tuple(sorted(item[i:] + item[:i] for i in range(n)))
    if name == "Collinear":
        return tuple(sorted({item, item[::-1]}))
    if name == "Cocircular":
        centre, pts = item[0], item[1:]
        n = len(pts)
        if n == 0:
            return ((centre,),)
        return tuple(sorted((centre,) + pts[i:] + pts[:i] for i in range(n)))
    raise KbError(f"{name!r} is not variadic")


def _gpl_atoms(expr: GplExpr):
    from .exprs import And, NotAtom, Or
    if isinstance(expr, (And, Or)):
        for c in expr.children:
            yield from _gpl_atoms(c)
    elif isinstance(expr, NotAtom):
        yield expr.atom
    else:
        yield expr


def _validate_predicate(p: PredicateDef) -> None:
    flat = p.vars
    if len(set(flat)) != len(flat):
        raise KbError(f"predicate {p.name}: point pattern repeats a variable")
    if p.kind == ATTRIBUTION and not p.sym:
        raise KbError(f"attribution {p.name}: missing symbol prefix")
    if p.kind != ATTRIBUTION and p.sym:
        raise KbError(f"predicate {p.name}: only attributions declare a symbol")
    for entry in p.multi:
        if sorted(entry) != sorted(flat):
            raise KbError(f"predicate {p.name}: multi entry {entry} is not a "
                          "permutation of the point pattern")
    for layout in p.fv_check:
        if len(layout) != len(flat):
            raise KbError(f"predicate {p.name}: format layout {layout} has "
                          f"{len(layout)} slots, expected {len(flat)}")
    for atom in p.ee_check:
        unknown = set(atom.vars) - set(flat)
        if unknown:
            raise KbError(f"predicate {p.name}: ee_check uses variables "
                          f"{sorted(unknown)} outside the point pattern")


# --- definition-language parsing -------------------------------------------

_HEADER_RE = re.compile(
    r"^(Entity|Relation|Attribution|Theorem)\s+([A-Za-z_][A-Za-z0-9_]*)\(([^)]*)\)\s*:\s*$")
_FIELD_RE = re.compile(r"^([a-z_]+)\s*:\s*(.*)$")

_KIND_BY_HEADER = {"Entity": ENTITY, "Relation": RELATION, "Attribution": ATTRIBUTION}


def parse_gdl(text: str) -> tuple[list[PredicateDef], list[TheoremDef]]:
    """Parse definition-language source into predicate and theorem defs."""
    predicates: list[PredicateDef] = []
    theorems: list[TheoremDef] = []
    block: dict | None = None

    def finish() -> None:
        nonlocal block
        if block is None:
            return
        if block["header"] == "Theorem":
            theorems.append(_build_theorem(block))
        else:
            predicates.append(_build_predicate(block))
        block = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        header = _HEADER_RE.match(line.strip())
        if header and not raw[:1].isspace():
            finish()
            kind, name, pattern = header.groups()
            block = {"header": kind, "name": name, "pattern": pattern,
                     "line": lineno, "fields": []}
            continue
        m = _FIELD_RE.match(line.strip())
        if m is None or block is None:
            raise ParseError(f"unrecognized definition line {line.strip()!r}", lineno)
        block["fields"].append((lineno, m.group(1), m.group(2).strip()))
    finish()
    return predicates, theorems


def _parse_groups(pattern: str, lineno: int) -> tuple[tuple[str, ...], ...]:
    groups = []
    for chunk in pattern.split(","):
        chunk = chunk.strip()
        if not parser.is_point_group(chunk):
            raise ParseError(f"malformed point pattern {chunk!r}", lineno)
        groups.append(tuple(chunk))
    return tuple(groups)


def _build_predicate(block: dict) -> PredicateDef:
    name = block["name"]
    kind = _KIND_BY_HEADER[block["header"]]
    var_groups = _parse_groups(block["pattern"], block["line"])
    ee, fv, multi, extend = [], [], [], []
    sym = ""
    for lineno, key, value in block["fields"]:
        if key == "ee_check":
            pred, groups = parser.parse_fact(value, lineno)
            ee.append(RelAtom(pred, tuple(v for g in groups for v in g)))
        elif key == "fv_check":
            fv.append(tuple(v for g in _parse_groups(value, lineno) for v in g))
        elif key == "multi":
            multi.append(tuple(v for g in _parse_groups(value, lineno) for v in g))
        elif key == "extend":
            extend.append(_parse_extend_item(value, lineno))
        elif key == "sym":
            sym = value
        else:
            raise ParseError(f"unknown field {key!r} in predicate {name}", lineno)
    return PredicateDef(name, kind, var_groups, tuple(ee), tuple(fv),
                        tuple(multi), tuple(extend), sym)


def _parse_extend_item(value: str, lineno: int) -> ExtendItem:
    if value.startswith(("Equal(", "Equation(")):
        return AlgAtom(parser.parse_equation(value, lineno))
    pred, groups = parser.parse_fact(value, lineno)
    return RelAtom(pred, tuple(v for g in groups for v in g))


def _build_theorem(block: dict) -> TheoremDef:
    name = block["name"]
    var_groups = _parse_groups(block["pattern"], block["line"])
    premise: GplExpr | None = None
    conclusions: list[ExtendItem] = []
    for lineno, key, value in block["fields"]:
        if key == "premise":
            if premise is not None:
                raise ParseError(f"theorem {name}: duplicate premise", lineno)
            premise = parser.parse_gpl(value, lineno)
        elif key == "conclusion":
            conclusions.append(_parse_extend_item(value, lineno))
        else:
            raise ParseError(f"unknown field {key!r} in theorem {name}", lineno)
    if premise is None:
        raise ParseError(f"theorem {name}: missing premise", block["line"])
    if not conclusions:
        raise ParseError(f"theorem {name}: missing conclusion", block["line"])
    return TheoremDef(name, var_groups, premise, tuple(conclusions))


def load_kb(*sources: str) -> KnowledgeBase:
    """Build a knowledge base from definition-language source texts."""
    kb = KnowledgeBase()
    for text in sources:
        preds, thms = parse_gdl(text)
        for p in preds:
            kb.add_predicate(p)
        for t in thms:
            kb.add_theorem(t)
    kb.validate()
    return kb
