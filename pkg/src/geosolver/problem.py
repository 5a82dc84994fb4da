"""One problem's full state: conditions with provenance, goal, hypertree.

Conditions form an append-only list; every condition knows the ids of the
conditions it came from and the theorem (or ``prerequisite``/``extended``)
that produced it, so the whole store is one solution hypertree.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence, Union

import sympy

from . import topology
from .algebra import AlgebraContext
from .gpl import execute_branch, reorder_branch, to_dnf
from .language.cdl import (
    CONDITION,
    CONSTRUCTION,
    GOAL,
    CdlStatement,
    inverse_parse,
    parse_cdl,
)
from .language.exprs import (
    Expr,
    RelAtom,
    attr_terms,
    equation_text,
    substitute_points,
)
from .language.kb import KnowledgeBase, TheoremDef

PREREQUISITE = "prerequisite"
EXTENDED = "extended"

Item = Union[tuple[str, ...], Expr]


class ConditionError(ValueError):
    """A condition failed its validity checks."""


@dataclass(frozen=True)
class Condition:
    id: int
    predicate: str  # a fact predicate, or "Equation"
    item: Item
    premises: frozenset[int]
    theorem: str

    def key(self) -> tuple:
        return (self.predicate, str(self.item))


@dataclass
class Goal:
    kind: str  # Value | Equal | Relation
    expr: Expr | None = None
    predicate: str = ""
    item: tuple[str, ...] = ()
    solved: bool = False
    answer: sympy.Expr | None = None
    premises: frozenset[int] = frozenset()

    def text(self, kb: KnowledgeBase) -> str:
        if self.kind == "Value":
            return f"Value({self.expr})"
        if self.kind == "Equal":
            return equation_text(self.expr)
        from .language.cdl import render_fact
        return f"Relation({render_fact(kb, self.predicate, self.item)})"


class ConditionStore:
    """Validity-checked condition storage with per-predicate extensions."""

    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self.conditions: list[Condition] = []
        self.items: dict[str, dict[tuple[str, ...], int]] = {}
        self.algebra = AlgebraContext(kb)
        self.points: dict[str, None] = {}
        self.goal: Goal | None = None
        self.collinear_runs: list[tuple[str, ...]] = []
        self.diagnostics: list[str] = []
        self.deadline: float | None = None
        self._dnf_cache: dict[str, list] = {}

    # -- snapshots -----------------------------------------------------------

    def copy(self) -> "ConditionStore":
        dup = ConditionStore.__new__(ConditionStore)
        dup.kb = self.kb
        dup.conditions = list(self.conditions)
        dup.items = {p: dict(m) for p, m in self.items.items()}
        dup.algebra = self.algebra.copy()
        dup.points = dict(self.points)
        dup.goal = replace(self.goal) if self.goal else None
        dup.collinear_runs = list(self.collinear_runs)
        dup.diagnostics = list(self.diagnostics)
        dup.deadline = self.deadline
        dup._dnf_cache = self._dnf_cache
        return dup

    def fingerprint(self) -> frozenset:
        """Content identity for search-state deduplication."""
        return frozenset(c.key() for c in self.conditions)

    def truncate(self, length: int) -> None:
        """Undo to a previous store length; derived indexes are rebuilt."""
        if length > len(self.conditions):
            raise ValueError("cannot truncate forward")
        self.conditions = self.conditions[:length]
        keep = {c.id for c in self.conditions}
        self.items = {}
        self.collinear_runs = []
        for c in self.conditions:
            if isinstance(c.item, tuple):
                self._index_fact(c.predicate, c.item, c.id)
                if c.predicate == "Collinear":
                    self.collinear_runs.append(c.item)
        self.points = {p: None for c in self.conditions
                       if isinstance(c.item, tuple) for p in c.item}
        self.algebra.truncate(max(keep, default=-1))
        if self.goal is not None:
            self.goal.solved = False
            self.goal.answer = None
            self.goal.premises = frozenset()
            self.check_goal()

    # -- queries -------------------------------------------------------------

    def universe(self) -> tuple[str, ...]:
        return tuple(self.points)

    def relation(self, predicate: str, arity: int) -> dict[tuple[str, ...], frozenset[int]]:
        table = self.items.get(predicate, {})
        return {item: frozenset([cid]) for item, cid in table.items()
                if len(item) == arity}

    def check_constraint(self, expr: Expr) -> tuple[bool, frozenset[int]]:
        try:
            self._check_attr_entities(expr, strict=False)
        except ConditionError:
            return False, frozenset()
        return self.algebra.evaluate_constraint(expr, deadline=self.deadline)

    def has_fact(self, predicate: str, item: tuple[str, ...]) -> int | None:
        return self.items.get(predicate, {}).get(item)

    def condition(self, cid: int) -> Condition:
        return self.conditions[cid]

    def premise_closure(self, ids: Iterable[int]) -> frozenset[int]:
        seen: set[int] = set()
        frontier = list(ids)
        while frontier:
            cid = frontier.pop()
            if cid in seen:
                continue
            seen.add(cid)
            frontier.extend(self.conditions[cid].premises)
        return frozenset(seen)

    # -- mutation ------------------------------------------------------------

    def add_condition(self, predicate: str, item: Item,
                      premises: Iterable[int] = (), theorem: str = PREREQUISITE,
                      strict: bool = True) -> int | None:
        """Validity-check and store one fact or equation.

        Returns the new condition id, or None for duplicates (and, when not
        strict, for facts whose checks fail — used by theorem conclusions on
        partial diagrams).
        """
        try:
            if predicate == "Equation":
                return self._add_equation(item, premises, theorem)
            return self._add_fact(predicate, item, premises, theorem)
        except ConditionError:
            if strict:
                raise
            self.diagnostics.append(f"skipped {predicate}{item}: failed checks")
            return None

    def _next_id(self) -> int:
        return len(self.conditions)

    def _store(self, predicate: str, item: Item, premises: Iterable[int],
               theorem: str) -> int:
        cid = self._next_id()
        prem = frozenset(premises)
        if any(p >= cid for p in prem):
            raise ConditionError("premises must precede the conclusion")
        self.conditions.append(Condition(cid, predicate, item, prem, theorem))
        return cid

    def _add_fact(self, predicate: str, item: tuple[str, ...],
                  premises: Iterable[int], theorem: str) -> int | None:
        pred = self.kb.predicate(predicate)
        if not isinstance(item, tuple):
            raise ConditionError(f"{predicate} takes a point tuple")
        if pred.variadic:
            if len(set(item)) != len(item):
                raise ConditionError(f"fv_check failed: {predicate}{item} repeats a point")
        else:
            if len(item) != len(pred.vars):
                raise ConditionError(
                    f"fv_check failed: {predicate} takes {len(pred.vars)} points")
            if not _fv_match(pred, item):
                raise ConditionError(f"fv_check failed for {predicate}{item}")
            mapping = dict(zip(pred.vars, item))
            for atom in pred.ee_check:
                needed = tuple(mapping[v] for v in atom.vars)
                if self.has_fact(atom.predicate, needed) is None:
                    raise ConditionError(
                        f"ee_check failed: {predicate}{item} needs "
                        f"{atom.predicate}({''.join(needed)})")
        # One stored representation per equivalence class, canonically
        # chosen, so store contents do not depend on statement order.
        item = self.kb.canonical_rep(predicate, item)
        for rep in self.kb.multi_reps(predicate, item):
            existing = self.items.get(predicate, {}).get(rep)
            if existing is not None:
                return None
        cid = self._store(predicate, item, premises, theorem)
        self._index_fact(predicate, item, cid)
        for p in item:
            self.points.setdefault(p)
        if predicate == "Collinear":
            self.collinear_runs.append(item)
        self._extend_from(cid)
        return cid

    def _add_equation(self, expr: Expr, premises: Iterable[int],
                      theorem: str) -> int | None:
        if isinstance(expr, tuple):
            raise ConditionError("Equation takes an expression")
        self._check_attr_entities(expr, strict=True)
        cid = self._next_id()
        if any(p >= cid for p in premises):
            raise ConditionError("premises must precede the conclusion")
        if not self.algebra.add_equation(expr, cid):
            return None  # trivial or duplicate
        return self._store("Equation", expr, premises, theorem)

    def _check_attr_entities(self, expr: Expr, strict: bool) -> None:
        for term in attr_terms(expr):
            pred = self.kb.predicate(term.attr)
            for atom in pred.ee_check:
                mapping = dict(zip(pred.vars, term.points))
                needed = tuple(mapping[v] for v in atom.vars)
                if self.has_fact(atom.predicate, needed) is None:
                    raise ConditionError(
                        f"ee_check failed: {term} needs "
                        f"{atom.predicate}({''.join(needed)})")

    def _index_fact(self, predicate: str, item: tuple[str, ...], cid: int) -> None:
        table = self.items.setdefault(predicate, {})
        for rep in _match_reps(self.kb, predicate, item):
            table.setdefault(rep, cid)

    def _extend_from(self, cid: int) -> None:
        cond = self.conditions[cid]
        pred = self.kb.predicate(cond.predicate)
        if pred.variadic or not pred.extend:
            return
        # Extensions hold for every equivalent representation of the fact.
        for rep in self.kb.multi_reps(cond.predicate, cond.item):
            mapping = dict(zip(pred.vars, rep))
            for ext in pred.extend:
                if isinstance(ext, RelAtom):
                    item = tuple(mapping[v] for v in ext.vars)
                    self.add_condition(ext.predicate, item, premises=[cid],
                                       theorem=EXTENDED, strict=False)
                else:
                    expr = substitute_points(ext.expr, mapping)
                    self.add_condition("Equation", expr, premises=[cid],
                                       theorem=EXTENDED, strict=False)

    def auto_extend(self) -> int:
        """Re-run every extension rule to fixpoint; returns new-condition count.

        Extensions already fire on insertion, so this is a safety net that
        normally adds nothing.
        """
        before = len(self.conditions)
        changed = True
        while changed:
            changed = False
            for cond in list(self.conditions):
                if isinstance(cond.item, tuple):
                    count = len(self.conditions)
                    self._extend_from(cond.id)
                    if len(self.conditions) != count:
                        changed = True
        return len(self.conditions) - before

    # -- theorem application ---------------------------------------------------

    def theorem_branches(self, tdef: TheoremDef):
        cached = self._dnf_cache.get(tdef.name)
        if cached is None:
            cached = to_dnf(tdef.premise)
            self._dnf_cache[tdef.name] = cached
        return cached

    def extension_sizes(self) -> dict[str, int]:
        return {pred: len(table) for pred, table in self.items.items()}

    def apply_theorem(self, tdef: TheoremDef,
                      binding: Mapping[str, str] | None = None,
                      branch_index: int | None = None) -> list[int]:
        """Evaluate every branch (or one explicit binding) and add conclusions.

        All branches evaluate against the same store snapshot; insertion
        happens afterwards. Interleaving would be lossy: a negated atom in a
        later branch must not see conclusions of an earlier one.
        """
        sizes = self.extension_sizes()
        branches = self.theorem_branches(tdef)
        if branch_index is not None:
            branches = branches[branch_index:branch_index + 1]
        results = [execute_branch(reorder_branch(branch, sizes), self,
                                  fixed=binding)
                   for branch in branches]
        new_ids: list[int] = []
        for result in results:
            for element in sorted(result.elements):
                ids = result.elements[element]
                mapping = dict(zip(result.vars, element))
                for concl in tdef.conclusions:
                    if isinstance(concl, RelAtom):
                        item = tuple(mapping[v] for v in concl.vars)
                        cid = self.add_condition(concl.predicate, item,
                                                 premises=ids, theorem=tdef.name,
                                                 strict=False)
                    else:
                        expr = substitute_points(concl.expr, mapping)
                        cid = self.add_condition("Equation", expr,
                                                 premises=ids, theorem=tdef.name,
                                                 strict=False)
                    if cid is not None:
                        new_ids.append(cid)
        return new_ids

    # -- goal ------------------------------------------------------------------

    def check_goal(self) -> Goal:
        goal = self.goal
        if goal is None:
            raise ValueError("no goal registered")
        if goal.solved:
            return goal
        if goal.kind == "Relation":
            cid = self.has_fact(goal.predicate, goal.item)
            if cid is not None:
                goal.solved = True
                goal.answer = sympy.true
                goal.premises = self.premise_closure([cid])
        elif goal.kind == "Value":
            value, sources = self.algebra.solve_value(
                self.algebra.to_sympy(goal.expr), deadline=self.deadline)
            if value is not None:
                goal.solved = True
                goal.answer = value
                goal.premises = self.premise_closure(sources)
        else:  # Equal
            ok, sources = self.algebra.evaluate_constraint(
                goal.expr, deadline=self.deadline)
            if ok:
                goal.solved = True
                goal.answer = sympy.Integer(0)
                goal.premises = self.premise_closure(sources)
        return goal

    # -- hypertree ---------------------------------------------------------------

    def export_hypertree(self) -> dict:
        """Serializable solution DAG: conditions as nodes, theorems as edges."""
        nodes = []
        for c in self.conditions:
            nodes.append({
                "id": c.id,
                "predicate": c.predicate,
                "item": inverse_parse(self.kb, c.predicate, c.item),
            })
        groups: dict[tuple[str, frozenset[int]], list[int]] = {}
        order: list[tuple[str, frozenset[int]]] = []
        for c in self.conditions:
            key = (c.theorem, c.premises)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(c.id)
        edges = [
            {
                "theorem": theorem,
                "premises": sorted(premises),
                "conclusions": groups[(theorem, premises)],
            }
            for theorem, premises in order
        ]
        doc = {"nodes": nodes, "edges": edges}
        if self.goal is not None:
            goal = self.goal
            doc["goal"] = {
                "kind": goal.kind,
                "payload": goal.text(self.kb),
                "status": "solved" if goal.solved else "unsolved",
                "answer": _render_value(goal.answer),
                "premises": sorted(goal.premises),
            }
        return doc


def _fv_match(pred, item: tuple[str, ...]) -> bool:
    layouts = pred.fv_check or (pred.vars,)
    for layout in layouts:
        ok = True
        for i in range(len(item)):
            for j in range(i + 1, len(item)):
                same = layout[i] == layout[j]
                if same != (item[i] == item[j]):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return True
    return False


def _match_reps(kb: KnowledgeBase, predicate: str,
                item: tuple[str, ...]) -> tuple[tuple[str, ...], ...]:
    """Every representation under which a stored fact is retrievable.

    Beyond the equivalence permutations this includes implied sub-facts of
    the variable-length construction predicates: sub-runs of a collinear
    run, cyclically ordered subsets of a cocircular run.
    """
    if predicate == "Collinear":
        reps = set()
        for orient in (item, item[::-1]):
            for sub in _subsequences(orient, minimum=3):
                reps.add(sub)
        return tuple(sorted(reps))
    if predicate == "Cocircular":
        centre, pts = item[0], item[1:]
        reps = set()
        for i in range(len(pts)):
            rotation = pts[i:] + pts[:i]
            for sub in _subsequences(rotation, minimum=1):
                reps.add((centre,) + sub)
        return tuple(sorted(reps))
    return kb.multi_reps(predicate, item)


def _subsequences(seq: tuple[str, ...], minimum: int):
    n = len(seq)
    for mask in range(1, 1 << n):
        sub = tuple(seq[i] for i in range(n) if mask >> i & 1)
        if len(sub) >= minimum:
            yield sub


def _render_value(value) -> str | None:
    if value is None:
        return None
    if value is sympy.true:
        return "true"
    return str(value)


# --- problem initialization ---------------------------------------------------


def init_problem(kb: KnowledgeBase, construction: Sequence[str],
                 conditions: Sequence[str], goal: str) -> ConditionStore:
    """Build a store from condition-language statements.

    Runs diagram construction over the closed shape units, derives the six
    basic entities, ingests the stated conditions, extends to fixpoint and
    registers the goal.
    """
    store = ConditionStore(kb)
    stmts = [parse_cdl(s, kb, category=CONSTRUCTION) for s in construction]
    _construct(store, stmts)
    for text in conditions:
        stmt = parse_cdl(text, kb, category=CONDITION)
        if stmt.category != CONDITION:
            raise ConditionError(f"{text!r} is not a condition statement")
        if stmt.predicate == "Equation":
            store.add_condition("Equation", stmt.expr, theorem=PREREQUISITE)
        else:
            store.add_condition(stmt.predicate, stmt.points, theorem=PREREQUISITE)
    store.auto_extend()
    goal_stmt = parse_cdl(goal, kb, category=GOAL)
    if goal_stmt.category != GOAL:
        raise ConditionError(f"{goal!r} is not a goal statement")
    if goal_stmt.predicate == "Relation":
        store.goal = Goal("Relation", predicate=goal_stmt.inner,
                          item=goal_stmt.points)
        kb.predicate(goal_stmt.inner)
    else:
        store._check_attr_entities(goal_stmt.expr, strict=True)
        store.goal = Goal(goal_stmt.predicate, expr=goal_stmt.expr)
    store.check_goal()
    return store


def _construct(store: ConditionStore, stmts: Sequence[CdlStatement]) -> None:
    units: list[tuple[str, ...]] = []
    unit_cids: list[int] = []
    open_chains: list[tuple[int, tuple[str, ...]]] = []
    collinear_cids: list[tuple[int, tuple[str, ...]]] = []
    cocircular_cids: list[tuple[int, tuple[str, ...]]] = []

    for stmt in stmts:
        if stmt.predicate == "Shape":
            path = _edge_path(stmt.groups)
            if path[0] == path[-1] and len(path) > 1:
                seq = tuple(path[:-1])
                if len(seq) < 3:
                    raise ConditionError(f"closed shape needs 3+ points: {stmt}")
                cid = store.add_condition("Shape", seq, theorem=PREREQUISITE)
                if cid is not None:
                    units.append(seq)
                    unit_cids.append(cid)
            else:
                open_chains.append((-1, tuple(path)))
        elif stmt.predicate == "Collinear":
            run = stmt.groups[0]
            cid = store.add_condition("Collinear", run, theorem=PREREQUISITE)
            if cid is not None:
                collinear_cids.append((cid, run))
        else:  # Cocircular
            item = stmt.groups[0] + stmt.groups[1]
            cid = store.add_condition("Cocircular", item, theorem=PREREQUISITE)
            if cid is not None:
                cocircular_cids.append((cid, item))

    # Composite shapes reachable by gluing units along shared edges.
    composed = topology.construct_all(units) if units else {}
    unit_keys = {topology.canonical(u) for u in units}
    shape_cid: dict[tuple[str, ...], int] = {
        topology.canonical(u): cid for u, cid in zip(units, unit_cids)
    }
    for key, sources in sorted(composed.items()):
        if key in unit_keys:
            continue
        prem = [unit_cids[i] for i in sorted(sources)]
        cid = store.add_condition("Shape", key, premises=prem, theorem=EXTENDED)
        if cid is not None:
            shape_cid[key] = cid

    straight = topology.straight_triples(run for _, run in collinear_cids)

    # Lines: consecutive pairs of unit boundaries and open chains, plus every
    # pair inside a collinear run.
    for seq, cid in zip(units, unit_cids):
        for i in range(len(seq)):
            _add_entity(store, "Line", (seq[i], seq[(i + 1) % len(seq)]), cid)
    for _, path in open_chains:
        for i in range(len(path) - 1):
            store.add_condition("Line", (path[i], path[i + 1]),
                                theorem=PREREQUISITE, strict=False)
        for i in range(len(path) - 2):
            triple = (path[i], path[i + 1], path[i + 2])
            if triple not in straight:
                store.add_condition("Angle", triple, theorem=PREREQUISITE,
                                    strict=False)
    for cid, run in collinear_cids:
        for i in range(len(run)):
            for j in range(i + 1, len(run)):
                _add_entity(store, "Line", (run[i], run[j]), cid)

    # Angles and polygons from every stored shape (units and composites).
    # Boundary points on a straight angle are not corners: the contracted
    # sequence names the polygon and contributes the corner angles.
    for key, cid in sorted(shape_cid.items()):
        corners = topology.contract_collinear(key, store.collinear_runs)
        for seq in (key, corners):
            n = len(seq)
            if n < 3:
                continue
            for i in range(n):
                triple = (seq[i], seq[(i + 1) % n], seq[(i + 2) % n])
                if triple not in straight:
                    _add_entity(store, "Angle", triple, cid)
        if len(corners) >= 3 and len(set(corners)) == len(corners):
            _add_entity(store, "Polygon", corners, cid)

    # Circles and arcs from cocircular runs.
    for cid, item in cocircular_cids:
        centre, pts = item[0], item[1:]
        _add_entity(store, "Circle", (centre,), cid)
        for a in pts:
            _add_entity(store, "Point", (a,), cid)
        for a in pts:
            for b in pts:
                if a != b:
                    _add_entity(store, "Arc", (centre, a, b), cid)


def _add_entity(store: ConditionStore, predicate: str, item: tuple[str, ...],
                source: int) -> None:
    store.add_condition(predicate, item, premises=[source], theorem=EXTENDED,
                        strict=False)


def _edge_path(groups: Sequence[tuple[str, ...]]) -> list[str]:
    path = [groups[0][0], groups[0][1]]
    for edge in groups[1:]:
        if edge[0] != path[-1]:
            raise ConditionError(
                f"shape edges do not chain: {edge[0]} after {path[-1]}")
        path.append(edge[1])
    return path


# --- hypertree replay ----------------------------------------------------------


def replay_hypertree(kb: KnowledgeBase, doc: dict) -> ConditionStore:
    """Rebuild a store from an exported hypertree, node by node in id order."""
    from .language import parser

    by_conclusion: dict[int, tuple[str, list[int]]] = {}
    for edge in doc["edges"]:
        for cid in edge["conclusions"]:
            by_conclusion[cid] = (edge["theorem"], edge["premises"])
    store = ConditionStore(kb)
    for node in sorted(doc["nodes"], key=lambda n: n["id"]):
        theorem, premises = by_conclusion[node["id"]]
        text = node["item"]
        if node["predicate"] == "Equation":
            expr = parser.parse_equation(text)
            store.add_condition("Equation", expr, premises=premises,
                                theorem=theorem, strict=False)
        else:
            stmt = parse_cdl(text, kb)
            item = stmt.points
            if stmt.predicate == "Shape":
                item = tuple(_edge_path(stmt.groups)[:-1])
            store.add_condition(stmt.predicate, item, premises=premises,
                                theorem=theorem, strict=False)
    return store
