"""Execution of geometric predicate logic.

Theorem premises expand to disjunctive normal form; each simple conjunction
is a branch. A branch evaluates left to right: geometric relations join as
constrained Cartesian products, relations over already-bound variables act
as filters, negations subtract over the finite point universe, and
algebraic atoms keep only bindings whose instantiated constraint verifies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Mapping, Protocol

from .language.exprs import (
    AlgAtom,
    And,
    Atom,
    GplExpr,
    NotAtom,
    Or,
    RelAtom,
    substitute_points,
)


class GplError(ValueError):
    pass


@dataclass
class Relation:
    """A named relation extension: tuples of points with their premise ids."""

    vars: tuple[str, ...]
    elements: dict[tuple[str, ...], frozenset[int]] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if len(set(self.vars)) != len(self.vars):
            raise GplError(f"relation variables repeat: {self.vars}")

    @property
    def tuples(self) -> set[tuple[str, ...]]:
        return set(self.elements)


class StateProvider(Protocol):
    """What branch execution needs from the problem state."""

    def relation(self, predicate: str, arity: int) -> dict[tuple[str, ...], frozenset[int]]:
        ...

    def universe(self) -> tuple[str, ...]:
        ...

    def check_constraint(self, expr) -> tuple[bool, frozenset[int]]:
        ...


Branch = tuple[Atom, ...]


def to_dnf(expr: GplExpr) -> list[Branch]:
    """Expand a premise into its simple conjunctions via the distributive law.

    Branch order follows the written form left to right. All branches must
    bind the same variable set, otherwise their disjunction has no single
    relation structure.
    """
    branches = [tuple(b) for b in _expand(expr)]
    if not branches:
        raise GplError("premise expands to no branches")
    var_sets = [frozenset(v for atom in b for v in atom.vars) for b in branches]
    if len(set(var_sets)) > 1:
        raise GplError("disjunction branches bind different variable sets")
    return branches


def _expand(expr: GplExpr) -> list[list[Atom]]:
    if isinstance(expr, Or):
        out: list[list[Atom]] = []
        for child in expr.children:
            out.extend(_expand(child))
        return out
    if isinstance(expr, And):
        acc: list[list[Atom]] = [[]]
        for child in expr.children:
            expanded = _expand(child)
            acc = [left + right for left in acc for right in expanded]
        return acc
    return [[expr]]


def reorder_branch(branch: Branch,
                   sizes: Mapping[str, int] | None = None) -> Branch:
    """Order branch atoms for cheap evaluation.

    Relations whose variables are already bound become filters and move
    forward; unbound relations extend the binding (smallest current
    extension first, when sizes are known); algebraic constraints go last.
    The evaluated result set is unchanged, only the order differs.
    """
    remaining = list(branch)
    ordered: list[Atom] = []
    bound: set[str] = set()

    def size_of(atom: Atom) -> int:
        if sizes is None:
            return 0
        return sizes.get(atom.predicate if isinstance(atom, RelAtom)
                         else atom.atom.predicate, 0)

    while remaining:
        pick = None
        for atom in remaining:
            if isinstance(atom, (RelAtom, NotAtom)) and set(atom.vars) <= bound:
                pick = atom
                break
        if pick is None:
            joins = [a for a in remaining if isinstance(a, RelAtom)]
            if joins:
                pick = min(joins, key=size_of) if sizes else joins[0]
        if pick is None:
            negs = [a for a in remaining if isinstance(a, NotAtom)]
            if negs:
                pick = negs[0]
        if pick is None:
            pick = remaining[0]  # algebraic atoms only
        remaining.remove(pick)
        ordered.append(pick)
        bound.update(pick.vars)
    return tuple(ordered)


def join(r1: Relation, r2: Relation) -> Relation:
    """Constrained Cartesian product; duplicate shared variables collapse."""
    shared = [v for v in r2.vars if v in r1.vars]
    extra = [v for v in r2.vars if v not in r1.vars]
    pos1 = [r1.vars.index(v) for v in shared]
    pos2 = [r2.vars.index(v) for v in shared]
    extra_pos = [r2.vars.index(v) for v in extra]

    index: dict[tuple[str, ...], list[tuple[tuple[str, ...], frozenset[int]]]] = {}
    for t2, ids2 in r2.elements.items():
        key = tuple(t2[i] for i in pos2)
        index.setdefault(key, []).append((t2, ids2))

    out: dict[tuple[str, ...], frozenset[int]] = {}
    for t1, ids1 in r1.elements.items():
        key = tuple(t1[i] for i in pos1)
        for t2, ids2 in index.get(key, ()):
            merged = t1 + tuple(t2[i] for i in extra_pos)
            ids = ids1 | ids2
            prev = out.get(merged)
            out[merged] = ids if prev is None else prev | ids
    return Relation(r1.vars + tuple(extra), out)


def filter_members(r1: Relation, r2: Relation, negate: bool = False) -> Relation:
    """Keep (or drop) tuples of r1 whose projection lies in r2.

    Used when a later atom's variables are all bound already: the relation
    composition degenerates into a geometric constraint.
    """
    pos = [r1.vars.index(v) for v in r2.vars]
    out: dict[tuple[str, ...], frozenset[int]] = {}
    for t1, ids1 in r1.elements.items():
        key = tuple(t1[i] for i in pos)
        ids2 = r2.elements.get(key)
        if negate:
            if ids2 is None:
                out[t1] = ids1
        elif ids2 is not None:
            out[t1] = ids1 | ids2
    return Relation(r1.vars, out)


def union_rel(r1: Relation, r2: Relation) -> Relation:
    if r1.vars != r2.vars:
        raise GplError(f"union over different structures: {r1.vars} vs {r2.vars}")
    out = dict(r1.elements)
    for t, ids in r2.elements.items():
        prev = out.get(t)
        out[t] = ids if prev is None else prev | ids
    return Relation(r1.vars, out)


def complement_rel(r1: Relation, universe: Iterable[str]) -> Relation:
    """All distinct-point permutations matching the structure, minus r1."""
    points = tuple(universe)
    out = {
        perm: frozenset()
        for perm in permutations(points, len(r1.vars))
        if perm not in r1.elements
    }
    return Relation(r1.vars, out)


def atom_relation(provider: StateProvider, atom: RelAtom,
                  fixed: Mapping[str, str] | None = None) -> Relation:
    """Current extension of one premise atom as a relation over its variables.

    Variables repeated inside the atom constrain equal slots and collapse
    to one column.
    """
    distinct: list[str] = []
    for v in atom.vars:
        if v not in distinct:
            distinct.append(v)
    raw = provider.relation(atom.predicate, len(atom.vars))
    slot_of = {v: atom.vars.index(v) for v in distinct}
    out: dict[tuple[str, ...], frozenset[int]] = {}
    for item, ids in raw.items():
        ok = all(item[i] == item[atom.vars.index(v)]
                 for i, v in enumerate(atom.vars))
        if not ok:
            continue
        if fixed and any(fixed.get(v, item[slot_of[v]]) != item[slot_of[v]]
                         for v in distinct):
            continue
        key = tuple(item[slot_of[v]] for v in distinct)
        prev = out.get(key)
        out[key] = ids if prev is None else prev | ids
    return Relation(tuple(distinct), out, name=atom.predicate)


def execute_branch(branch: Branch, provider: StateProvider,
                   fixed: Mapping[str, str] | None = None) -> Relation:
    """Evaluate one reordered branch left to right.

    Returns the matched bindings over the branch's variables; each binding
    carries the ids of every condition that contributed to it.
    """
    current = Relation((), {(): frozenset()})
    for atom in branch:
        if not current.elements:
            break  # short-circuit: nothing left to constrain
        if isinstance(atom, RelAtom):
            ext = atom_relation(provider, atom, fixed)
            if set(ext.vars) <= set(current.vars):
                current = filter_members(current, ext)
            else:
                current = join(current, ext)
        elif isinstance(atom, NotAtom):
            ext = atom_relation(provider, atom.atom, fixed)
            if set(ext.vars) <= set(current.vars):
                current = filter_members(current, ext, negate=True)
            else:
                comp = complement_rel(Relation(tuple(dict.fromkeys(atom.vars)),
                                               ext.elements),
                                      provider.universe())
                current = join(current, comp)
        else:
            current = filter_algebraic(current, atom, provider)
    if fixed:
        kept = {
            t: ids for t, ids in current.elements.items()
            if all(fixed.get(v, t[i]) == t[i] for i, v in enumerate(current.vars))
        }
        current = Relation(current.vars, kept)
    return current


def filter_algebraic(r1: Relation, atom: AlgAtom,
                     provider: StateProvider) -> Relation:
    """Keep tuples whose instantiated constraint is verified to hold."""
    missing = set(atom.vars) - set(r1.vars)
    if missing:
        raise GplError(f"algebraic constraint uses unbound variables {sorted(missing)}")
    out: dict[tuple[str, ...], frozenset[int]] = {}
    for t, ids in r1.elements.items():
        mapping = dict(zip(r1.vars, t))
        instantiated = substitute_points(atom.expr, mapping)
        ok, sources = provider.check_constraint(instantiated)
        if ok:
            out[t] = ids | sources
    return Relation(r1.vars, out)
