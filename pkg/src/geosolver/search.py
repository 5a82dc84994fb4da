"""Interactive theorem application and automated proof search.

Forward search grows the condition set from the givens until the goal
checks; backward search splits the goal into premise sub-goals until every
leaf is known. Both build explicit trees traversed under breadth-first,
depth-first, random, or beam strategies with depth and wall-clock limits.
"""

from __future__ import annotations

import heapq
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import sympy

from .gpl import reorder_branch
from .language.exprs import AlgAtom, Expr, NotAtom, RelAtom, attr_terms, substitute_points
from .language.kb import KnowledgeBase, TheoremDef
from .problem import EXTENDED, PREREQUISITE, ConditionStore, Goal

EXPANDABLE = "EXPANDABLE"
EXPANDED = "EXPANDED"
SOLVED = "SOLVED"
FAILED = "FAILED"

# Free premise variables enumerated per backward expansion; larger gaps
# between conclusion and premise variables explode combinatorially.
MAX_FREE_VARS = 4


@dataclass
class SearchConfig:
    method: str = "forward"  # forward | backward
    strategy: str = "bfs"  # bfs | dfs | rs | bs
    max_depth: int = 15
    beam_size: int = 20
    timeout: float = 30.0
    seed: int = 0
    scorer: Callable | None = None  # external ranking hook, unused by default

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam size must be at least 1")
        if self.max_depth < 1:
            raise ValueError("max depth must be at least 1")


@dataclass
class SearchResult:
    outcome: str  # solved | unsolved | timeout
    theorem_seqs: list[str] = field(default_factory=list)
    elapsed: float = 0.0
    steps: int = 0
    answer: str | None = None


@dataclass
class ApplyReport:
    theorem: str
    new_conditions: list[int]
    goal: Goal


def parse_binding(kb: KnowledgeBase, text: str) -> tuple[str, dict[str, str] | None]:
    """Split a theorem-sequence entry into name and optional point binding."""
    text = text.strip()
    if "(" not in text:
        return text, None
    name, rest = text.split("(", 1)
    if not rest.endswith(")"):
        raise ValueError(f"malformed theorem reference {text!r}")
    tdef = kb.theorem(name)
    slots = [v for g in tdef.var_groups for v in g]
    points = [p for chunk in rest[:-1].split(",") for p in chunk.strip()]
    if len(points) != len(slots):
        raise ValueError(
            f"{name} takes {len(slots)} points, got {len(points)}")
    binding: dict[str, str] = {}
    for var, point in zip(slots, points):
        if binding.get(var, point) != point:
            raise ValueError(f"{text!r} binds {var} inconsistently")
        binding[var] = point
    return name, binding


def interactive_apply(store: ConditionStore, kb: KnowledgeBase, theorem: str,
                      binding: Mapping[str, str] | None = None) -> ApplyReport:
    """Apply one theorem (all matches, or one explicit binding) and re-check."""
    tdef = kb.theorem(theorem)
    new_ids = store.apply_theorem(tdef, binding=binding)
    store.auto_extend()
    goal = store.check_goal() if store.goal else None
    return ApplyReport(theorem, new_ids, goal)


def replay(store_factory: Callable[[], ConditionStore], kb: KnowledgeBase,
           theorem_seqs: Sequence[str]) -> tuple[bool, ConditionStore]:
    """Re-run a theorem sequence on a fresh store; True when the goal solves."""
    store = store_factory()
    for entry in theorem_seqs:
        name, binding = parse_binding(kb, entry)
        interactive_apply(store, kb, name, binding)
        if store.goal is not None and store.goal.solved:
            break
    goal = store.check_goal()
    return goal.solved, store


def pick_expandable(nodes: Sequence, strategy: str, rng: random.Random):
    """Choose the next node to expand among those still expandable."""
    live = [n for n in nodes if n.state == EXPANDABLE]
    if not live:
        return None
    if strategy == "dfs":
        return max(live, key=lambda n: (n.depth, n.order))
    if strategy == "rs":
        return live[rng.randrange(len(live))]
    # bfs and bs walk generations in creation order
    return min(live, key=lambda n: (n.depth, n.order))


class _Frontier:
    """Queue of expandable nodes; entries gone stale are skipped on pop."""

    def __init__(self, strategy: str, rng: random.Random):
        self.strategy = strategy
        self.rng = rng
        self.entries: list = []
        self._count = 0

    def push(self, node) -> None:
        if self.strategy == "rs":
            self.entries.append(node)
            return
        if self.strategy == "dfs":
            key = (-node.depth, -node.order, self._count)
        else:  # bfs / bs: creation order within ascending depth
            key = (node.depth, node.order, self._count)
        self._count += 1
        heapq.heappush(self.entries, (key, node))

    def pop(self):
        while self.entries:
            if self.strategy == "rs":
                node = self.entries.pop(self.rng.randrange(len(self.entries)))
            else:
                _, node = heapq.heappop(self.entries)
            if node.state == EXPANDABLE:
                return node
        return None


# --- forward search -----------------------------------------------------------


@dataclass
class ForwardNode:
    order: int
    depth: int
    theorem: str | None  # edge from the parent
    branch_index: int = 0
    parent: "ForwardNode | None" = None
    state: str = EXPANDABLE
    store: ConditionStore | None = None

    def path(self) -> list[str]:
        names: list[str] = []
        node = self
        while node is not None:
            if node.theorem is not None:
                names.append(node.theorem)
            node = node.parent
        return names[::-1]


def forward_search(initial: ConditionStore, kb: KnowledgeBase,
                   config: SearchConfig) -> SearchResult:
    """Grow conditions from the givens until the goal checks (or limits hit)."""
    start = time.monotonic()
    deadline = start + config.timeout
    rng = random.Random(config.seed)
    theorems = list(kb.theorems.values())

    root = ForwardNode(order=0, depth=0, theorem=None)
    nodes = [root]
    visited: set[frozenset] = set()
    steps = 0

    def out_of_time() -> bool:
        return time.monotonic() > deadline

    def apply_node(node: ForwardNode) -> bool:
        if node.theorem is None:
            node.store = initial.copy()
        else:
            node.store = node.parent.store.copy()
            node.store.deadline = deadline
            tdef = kb.theorem(node.theorem)
            new_ids = node.store.apply_theorem(tdef, branch_index=node.branch_index)
            if not new_ids:
                node.state = FAILED  # no progress over the parent state
                return False
        node.store.deadline = deadline
        fp = node.store.fingerprint()
        if fp in visited:
            node.state = FAILED  # same condition set reached before
            return False
        visited.add(fp)
        return node.store.check_goal().solved

    def expand(node: ForwardNode) -> int:
        if node.depth >= config.max_depth:
            return 0
        sizes = node.store.extension_sizes()
        children: list[ForwardNode] = []
        for tdef in theorems:
            for b_idx, branch in enumerate(node.store.theorem_branches(tdef)):
                ordered = reorder_branch(branch, sizes)
                first = ordered[0]
                if isinstance(first, RelAtom):
                    if not node.store.relation(first.predicate, len(first.vars)):
                        continue
                elif isinstance(first, NotAtom):
                    continue
                children.append(ForwardNode(
                    order=0, depth=node.depth + 1, theorem=tdef.name,
                    branch_index=b_idx, parent=node))
        if config.strategy == "bs" and len(children) > config.beam_size:
            if config.scorer is not None:
                children.sort(key=config.scorer, reverse=True)
                children = children[:config.beam_size]
            else:
                children = rng.sample(children, config.beam_size)
        for child in children:
            child.order = len(nodes)
            nodes.append(child)
        return len(children)

    node = root
    while node is not None:
        if out_of_time():
            return SearchResult("timeout", elapsed=time.monotonic() - start,
                                steps=steps)
        steps += 1
        solved = apply_node(node)
        if solved:
            node.state = SOLVED
            goal = node.store.check_goal()
            return SearchResult("solved", node.path(),
                                time.monotonic() - start, steps,
                                answer=str(goal.answer))
        if node.state != FAILED:
            node.state = EXPANDED
            if expand(node) == 0:
                node.state = FAILED
        node = pick_expandable(nodes, config.strategy, rng)
    return SearchResult("unsolved", elapsed=time.monotonic() - start, steps=steps)


# --- backward search ----------------------------------------------------------


@dataclass
class SubGoal:
    kind: str  # relation | equation | absent | value
    predicate: str = ""
    item: tuple[str, ...] = ()
    expr: Expr | None = None

    def key(self) -> tuple:
        return (self.kind, self.predicate, self.item, str(self.expr))


@dataclass
class BackwardNode:
    goal: SubGoal
    order: int
    state: str = EXPANDABLE
    expansions: list["SuperNode"] = field(default_factory=list)
    seen_expansions: set = field(default_factory=set)
    owner: "SuperNode | None" = None
    option_cache: list | None = None
    option_cache_key: frozenset | None = None


@dataclass
class SuperNode:
    order: int
    depth: int
    theorem: str | None
    binding: dict[str, str] | None
    nodes: list[BackwardNode] = field(default_factory=list)
    parent: BackwardNode | None = None
    state: str = EXPANDABLE
    applied: bool = False


def _assign_free(free: list[str], used: set[str], points: tuple[str, ...]):
    """Injective assignments of leftover variables to unused points."""
    if not free:
        yield {}
        return
    current: dict[str, str] = {}

    def assign(i: int):
        if i == len(free):
            yield dict(current)
            return
        for p in points:
            if p in used or p in current.values():
                continue
            current[free[i]] = p
            yield from assign(i + 1)
            del current[free[i]]

    yield from assign(0)


def backward_search(initial: ConditionStore, kb: KnowledgeBase,
                    config: SearchConfig) -> SearchResult:
    """Expand the goal into premise sub-goals until all leaves are known.

    A working store accumulates the conclusions of every sub-tree whose
    premises verified, so later checks see earlier progress.
    """
    start = time.monotonic()
    deadline = start + config.timeout
    rng = random.Random(config.seed)
    ws = initial.copy()
    ws.deadline = deadline
    steps = 0
    supers: list[SuperNode] = []
    frontier = _Frontier(config.strategy, rng)
    deferred: list[SuperNode] = []
    applied: list[str] = []

    goal = ws.goal
    if goal is None:
        raise ValueError("backward search needs a goal")
    if ws.check_goal().solved:
        return SearchResult("solved", [], time.monotonic() - start, 0,
                            answer=str(ws.goal.answer))
    if goal.kind == "Relation":
        root_goal = SubGoal("relation", goal.predicate, goal.item)
    elif goal.kind == "Value":
        root_goal = SubGoal("value", expr=goal.expr)
    else:
        root_goal = SubGoal("equation", expr=goal.expr)
    root_node = BackwardNode(root_goal, order=0)
    root = SuperNode(order=0, depth=0, theorem=None, binding=None,
                     nodes=[root_node])
    root_node.owner = root
    supers.append(root)
    frontier.push(root)

    def out_of_time() -> bool:
        return time.monotonic() > deadline

    # Predicates some theorem can conclude; every other fact is fixed at
    # initialization (construction facts never arise from custom extensions),
    # so sub-goals over them are decidable immediately.
    derivable = {c.predicate for t in kb.theorems.values()
                 for c in t.conclusions if isinstance(c, RelAtom)}

    def viable(sg: SubGoal) -> bool:
        if sg.kind == "relation" and sg.predicate not in derivable:
            return ws.has_fact(sg.predicate, sg.item) is not None
        if sg.kind == "equation":
            try:
                ws._check_attr_entities(sg.expr, strict=True)
            except Exception:
                return False
        return True

    def check_node(node: BackwardNode) -> bool:
        g = node.goal
        if g.kind == "relation":
            return ws.has_fact(g.predicate, g.item) is not None
        if g.kind == "absent":
            return ws.has_fact(g.predicate, g.item) is None
        if g.kind == "equation":
            ok, _ = ws.algebra.evaluate_constraint(g.expr, deadline=deadline)
            return ok
        value, _ = ws.algebra.solve_value(ws.algebra.to_sympy(g.expr),
                                          deadline=deadline)
        return value is not None

    def sub_goals_for(tdef: TheoremDef, branch, binding: Mapping[str, str]) -> list[SubGoal]:
        goals = []
        for atom in branch:
            if isinstance(atom, RelAtom):
                goals.append(SubGoal("relation", atom.predicate,
                                     tuple(binding[v] for v in atom.vars)))
            elif isinstance(atom, NotAtom):
                goals.append(SubGoal("absent", atom.atom.predicate,
                                     tuple(binding[v] for v in atom.atom.vars)))
            else:
                goals.append(SubGoal(
                    "equation", expr=substitute_points(atom.expr, binding)))
        return goals

    def enumerate_bindings(tdef: TheoremDef, branch, partial: dict[str, str]):
        """Complete a partial variable binding into full candidate bindings.

        Premise atoms over non-derivable predicates must match existing
        facts, so their extensions drive the enumeration; only variables
        left over after that are tried against the whole point universe.
        """
        assignments = [dict(partial)]
        for atom in branch:
            if not isinstance(atom, RelAtom) or atom.predicate in derivable:
                continue
            ext = ws.relation(atom.predicate, len(atom.vars))
            narrowed = []
            for asg in assignments:
                for item in ext:
                    m = dict(asg)
                    ok = True
                    for v, p in zip(atom.vars, item):
                        if m.get(v, p) != p:
                            ok = False
                            break
                        m[v] = p
                    if ok and len(set(m.values())) == len(m):
                        narrowed.append(m)
            assignments = narrowed
            if not assignments:
                return
        seen = set()
        for asg in assignments:
            free = [v for v in tdef.vars if v not in asg]
            if len(free) > MAX_FREE_VARS:
                continue
            for extra in _assign_free(free, set(asg.values()), ws.universe()):
                binding = {**asg, **extra}
                key = tuple(sorted(binding.items()))
                if key not in seen:
                    seen.add(key)
                    yield binding

    def relation_expansions(node: BackwardNode) -> list[tuple]:
        # Non-derivable extensions are fixed, so the option set is static.
        if node.option_cache is not None and node.option_cache_key is None:
            return node.option_cache
        g = node.goal
        reps = ws.kb.multi_reps(g.predicate, g.item)
        found = []
        for tdef in kb.theorems.values():
            for b_idx, branch in enumerate(ws.theorem_branches(tdef)):
                for concl in tdef.conclusions:
                    if not isinstance(concl, RelAtom):
                        continue
                    if concl.predicate != g.predicate:
                        continue
                    for rep in reps:
                        if len(concl.vars) != len(rep):
                            continue
                        partial: dict[str, str] = {}
                        ok = True
                        for var, point in zip(concl.vars, rep):
                            if partial.get(var, point) != point:
                                ok = False
                                break
                            partial[var] = point
                        if not ok or len(set(partial.values())) != len(partial):
                            continue
                        for binding in enumerate_bindings(tdef, branch, partial):
                            found.append((tdef, b_idx, branch, binding))
        node.option_cache = found
        return found

    def frontier_symbols(expr: Expr) -> set:
        from .algebra import select_min_dep
        a = ws.algebra.to_sympy(expr)
        g = sympy.Dummy("g")
        selected = select_min_dep(a, ws.algebra.equations, g)
        unknowns = set(a.free_symbols)
        for e in selected:
            unknowns |= e.unknowns
        return {s for s in unknowns if s not in ws.algebra.values}

    def algebraic_expansions(node: BackwardNode) -> list[tuple]:
        symbols = frontier_symbols(node.goal.expr)
        keys = {ws.algebra.table.attr_of.get(s) for s in symbols}
        keys.discard(None)
        # Sorted: option order must not depend on set-hash iteration, or
        # the search trajectory would vary across interpreter runs.
        frontier_keys = sorted(keys)
        if not frontier_keys:
            return []
        cache_key = frozenset(frontier_keys)
        if node.option_cache is not None and node.option_cache_key == cache_key:
            return node.option_cache
        found = []
        for tdef in kb.theorems.values():
            for b_idx, branch in enumerate(ws.theorem_branches(tdef)):
                partials: list[dict[str, str]] = []
                seen_partials: set = set()
                for concl in tdef.conclusions:
                    if not isinstance(concl, AlgAtom):
                        continue
                    for term in attr_terms(concl.expr):
                        for attr, points in frontier_keys:
                            if term.attr != attr or len(term.points) != len(points):
                                continue
                            for rep in ws.kb.multi_reps(attr, points):
                                partial: dict[str, str] = {}
                                ok = True
                                for var, point in zip(term.points, rep):
                                    if partial.get(var, point) != point:
                                        ok = False
                                        break
                                    partial[var] = point
                                if ok and len(set(partial.values())) == len(partial):
                                    key = tuple(sorted(partial.items()))
                                    if key not in seen_partials:
                                        seen_partials.add(key)
                                        partials.append(partial)
                for partial in partials:
                    for binding in enumerate_bindings(tdef, branch, partial):
                        found.append((tdef, b_idx, branch, binding))
        node.option_cache = found
        node.option_cache_key = cache_key
        return found

    def expand_node(node: BackwardNode, depth: int) -> int:
        if depth >= config.max_depth:
            return 0
        if node.goal.kind == "absent":
            return 0
        if node.goal.kind == "relation":
            options = relation_expansions(node)
        else:
            options = algebraic_expansions(node)
        fresh: list[SuperNode] = []
        for tdef, b_idx, branch, binding in options:
            key = (tdef.name, b_idx, tuple(sorted(binding.items())))
            if key in node.seen_expansions:
                continue
            node.seen_expansions.add(key)
            sub = sub_goals_for(tdef, branch, binding)
            if not all(viable(sg) for sg in sub):
                continue
            sup = SuperNode(order=0, depth=depth + 1, theorem=tdef.name,
                            binding=binding, parent=node)
            sup.nodes = [BackwardNode(sg, order=i, owner=sup)
                         for i, sg in enumerate(sub)]
            fresh.append(sup)
        if config.strategy == "bs" and len(fresh) > config.beam_size:
            if config.scorer is not None:
                fresh.sort(key=config.scorer, reverse=True)
                kept, rest = fresh[:config.beam_size], fresh[config.beam_size:]
            else:
                kept = rng.sample(fresh, config.beam_size)
                rest = [s for s in fresh if s not in kept]
            deferred.extend(rest)  # revisited if the main queue drains
            fresh = kept
        for sup in fresh:
            sup.order = len(supers)
            supers.append(sup)
            node.expansions.append(sup)
            frontier.push(sup)
        return len(fresh)

    def apply_super(sup: SuperNode) -> None:
        """All sub-goals hold: apply the theorem so its conclusions exist."""
        if sup.applied or sup.theorem is None:
            return
        sup.applied = True
        tdef = kb.theorem(sup.theorem)
        new_ids = ws.apply_theorem(tdef, binding=sup.binding)
        ws.auto_extend()
        if new_ids:
            applied.append(sup.theorem)

    def propagate(sup: SuperNode) -> None:
        while sup is not None:
            if sup.state in (SOLVED, FAILED):
                return
            if not all(n.state == SOLVED for n in sup.nodes):
                return
            sup.state = SOLVED
            apply_super(sup)
            node = sup.parent
            if node is None:
                return
            # Applying the theorem adds its conclusions, but the parent goal
            # must still verify (an equation goal may need further facts).
            if check_node(node):
                node.state = SOLVED
                sup = node.owner
            else:
                if node.owner is not None and node.owner.state == EXPANDED:
                    node.owner.state = EXPANDABLE  # re-expand with new state
                    frontier.push(node.owner)
                return

    def process(sup: SuperNode) -> None:
        for node in sup.nodes:
            if node.state in (SOLVED, FAILED):
                continue
            if check_node(node):
                node.state = SOLVED
                continue
            added = expand_node(node, sup.depth)
            if added == 0 and not node.expansions:
                node.state = FAILED
                break
            if added == 0 and all(s.state == FAILED for s in node.expansions):
                node.state = FAILED
                break
            node.state = EXPANDED
        if any(n.state == FAILED for n in sup.nodes):
            sup.state = FAILED
            return
        if all(n.state == SOLVED for n in sup.nodes):
            propagate(sup)
        elif sup.state == EXPANDABLE:
            sup.state = EXPANDED

    def recheck_pending() -> bool:
        """When the queue drains, re-test pending sub-goals against the
        grown working store; revive their supers on progress."""
        changed = False
        for sup in supers:
            if sup.state in (SOLVED, FAILED):
                continue
            progressed = False
            for node in sup.nodes:
                if node.state in (SOLVED, FAILED):
                    continue
                if check_node(node):
                    node.state = SOLVED
                    progressed = True
            if all(n.state == SOLVED for n in sup.nodes):
                propagate(sup)
                changed = True
            elif progressed and sup.state == EXPANDED:
                sup.state = EXPANDABLE  # newly solved sub-goal: requeue
                frontier.push(sup)
                changed = True
        return changed

    def solved_result() -> SearchResult:
        ws.check_goal()
        seq = _closure_sequence(ws)
        if seq != applied:
            solved, _ = replay(lambda: initial.copy(), kb, seq)
            if not solved:
                seq = applied  # closure pruning dropped a load-bearing step
        return SearchResult("solved", seq, time.monotonic() - start, steps,
                            answer=str(ws.goal.answer))

    while True:
        if out_of_time():
            return SearchResult("timeout", elapsed=time.monotonic() - start,
                                steps=steps)
        sup = frontier.pop()
        if sup is None:
            if deferred:
                for s in deferred:
                    s.order = len(supers)
                    supers.append(s)
                    if s.parent is not None:
                        s.parent.expansions.append(s)
                    frontier.push(s)
                deferred.clear()
                continue
            if recheck_pending():
                if root.state == SOLVED:
                    return solved_result()
                continue
            return SearchResult("unsolved", elapsed=time.monotonic() - start,
                                steps=steps)
        steps += 1
        process(sup)
        if root.state == SOLVED:
            return solved_result()


def _closure_sequence(ws: ConditionStore) -> list[str]:
    """Theorem labels on the goal's premise closure, in derivation order."""
    goal = ws.goal
    if goal is None or not goal.solved:
        return []
    closure = sorted(ws.premise_closure(goal.premises))
    seq: list[str] = []
    for cid in closure:
        label = ws.conditions[cid].theorem
        if label not in (PREREQUISITE, EXTENDED) and label not in seq:
            seq.append(label)
    return seq
