"""Attribute symbols, the problem equation set, and target solving.

Quantitative facts become equations over attribute symbols (``ll_AB``,
``ma_ABC``). Solving a target expression never touches the whole equation
set: a small dependency subset is selected first, by repeatedly adding the
known equation that shares unknowns with the working system while
introducing the fewest new ones.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import sympy

from .language.exprs import AttrTerm, Expr, FreeVar, Num, OpNode
from .language.kb import ATTRIBUTION, KnowledgeBase

log = logging.getLogger(__name__)

NUMERIC_TOLERANCE = 1e-10


class AlgebraTimeout(Exception):
    """Per-call solving budget exhausted."""


class EeCheckError(ValueError):
    """Attribute of an entity that does not exist in the problem."""


@dataclass(frozen=True)
class StoredEquation:
    expr: sympy.Expr  # asserted equal to zero
    source: int  # condition id that introduced it
    unknowns: frozenset[sympy.Symbol]


def _canonical_key(expr: sympy.Expr) -> str:
    return min(sympy.srepr(expr), sympy.srepr(sympy.expand(-expr)))


class SymbolTable:
    """One symbol per attribute equivalence class.

    Equivalent point orders (an attribution's ``multi`` permutations) map to
    the same symbol; the canonical order is the lexicographically smallest.
    """

    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self._symbols: dict[tuple[str, tuple[str, ...]], sympy.Symbol] = {}
        self._free: dict[str, sympy.Symbol] = {}
        self.attr_of: dict[sympy.Symbol, tuple[str, tuple[str, ...]]] = {}
        self._bounds: dict[sympy.Symbol, Fraction] = {}

    def symbol(self, attr: str, points: tuple[str, ...]) -> sympy.Symbol:
        pred = self.kb.predicate(attr)
        if pred.kind != ATTRIBUTION:
            raise ValueError(f"{attr} is not an attribution")
        canon = self.kb.canonical_rep(attr, points)
        key = (attr, canon)
        sym = self._symbols.get(key)
        if sym is None:
            sym = sympy.Symbol(f"{pred.sym}_{''.join(canon)}", nonnegative=True)
            self._symbols[key] = sym
            self.attr_of[sym] = key
            bound = _measure_bound(pred)
            if bound is not None:
                self._bounds[sym] = bound
        return sym

    def free(self, name: str) -> sympy.Symbol:
        sym = self._free.get(name)
        if sym is None:
            sym = sympy.Symbol(name, real=True)
            self._free[name] = sym
        return sym

    def upper_bound(self, sym: sympy.Symbol) -> Fraction | None:
        return self._bounds.get(sym)


def _measure_bound(pred) -> Fraction | None:
    # Angle measures live in [0, 180], arc measures in [0, 360]; every other
    # attribute is only sign-constrained.
    for atom in pred.ee_check:
        if atom.predicate == "Angle":
            return Fraction(180)
        if atom.predicate == "Arc":
            return Fraction(360)
    return None


def to_sympy(expr: Expr, table: SymbolTable) -> sympy.Expr:
    """Translate an expression tree into an exact sympy expression.

    Trigonometric operators take angle measures in degrees.
    """
    if isinstance(expr, Num):
        return sympy.Rational(expr.value.numerator, expr.value.denominator)
    if isinstance(expr, FreeVar):
        return table.free(expr.name)
    if isinstance(expr, AttrTerm):
        return table.symbol(expr.attr, expr.points)
    assert isinstance(expr, OpNode)
    args = [to_sympy(a, table) for a in expr.args]
    op = expr.op
    if op == "Add":
        return sympy.Add(*args)
    if op == "Mul":
        return sympy.Mul(*args)
    if op == "Sub":
        return args[0] - args[1]
    if op == "Div":
        return args[0] / args[1]
    if op == "Pow":
        return args[0] ** args[1]
    if op == "Mod":
        return sympy.Mod(args[0], args[1])
    if op == "Sqrt":
        return sympy.sqrt(args[0])
    if op == "Sin":
        return sympy.sin(sympy.pi * args[0] / 180)
    if op == "Cos":
        return sympy.cos(sympy.pi * args[0] / 180)
    if op == "Tan":
        return sympy.tan(sympy.pi * args[0] / 180)
    raise ValueError(f"unknown operator {op}")


def _pick_candidate(equations: Sequence[StoredEquation], order: Sequence[int],
                    remaining: set[int], worked: set[sympy.Symbol]) -> int | None:
    """Best next equation: must share an unknown, introduce the fewest new
    unknowns, then share the most; ties break by position in ``order``."""
    best_key = None
    best_idx = None
    for idx in order:
        if idx not in remaining:
            continue
        eq = equations[idx]
        shared = eq.unknowns & worked
        if not shared:
            continue
        key = (len(eq.unknowns - worked), -len(shared))
        if best_key is None or key < best_key:
            best_key, best_idx = key, idx
    return best_idx


def select_min_dep(a: sympy.Expr, equations: Sequence[StoredEquation],
                   g: sympy.Symbol, rng=None) -> list[StoredEquation]:
    """Pick the dependency subset for solving target ``g - a``.

    Each step adds one equation per the three criteria (shares an unknown;
    fewest new unknowns; most shared unknowns). Ties break by insertion
    order, or randomly when an ``rng`` is supplied. Stops once the system
    is square or no candidate qualifies.
    """
    target = g - a
    worked: set[sympy.Symbol] = set(target.free_symbols)
    selected: list[StoredEquation] = []
    t = 1
    order = list(range(len(equations)))
    if rng is not None:
        rng.shuffle(order)
    remaining = set(order)
    while len(worked) > t:
        best_idx = _pick_candidate(equations, order, remaining, worked)
        if best_idx is None:
            break
        remaining.discard(best_idx)
        eq = equations[best_idx]
        selected.append(eq)
        worked |= eq.unknowns
        t += 1
    return selected


def _check_deadline(deadline: float | None) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise AlgebraTimeout


def _is_admissible(table: SymbolTable, sym: sympy.Symbol, value: sympy.Expr) -> bool:
    if value.free_symbols:
        return False
    if value.is_real is False:
        return False
    if value.is_real is None:
        approx = sympy.im(value.evalf())
        if abs(approx) > NUMERIC_TOLERANCE:
            return False
        value = sympy.re(value)
    if sym.is_nonnegative and value.is_negative:
        return False
    bound = table.upper_bound(sym)
    if bound is not None and (value - sympy.Rational(bound.numerator, bound.denominator)).is_positive:
        return False
    return True


def _solve_single(table: SymbolTable, residual: sympy.Expr, sym: sympy.Symbol,
                  deadline: float | None) -> sympy.Expr | None:
    """Solve a one-unknown residual; a value only counts when unambiguous."""
    _check_deadline(deadline)
    try:
        solutions = sympy.solve(residual, sym)
    except Exception:  # pragma: no cover - sympy edge cases
        log.debug("single-unknown solve failed for %s", residual, exc_info=True)
        return None
    admissible = {sympy.simplify(v) for v in solutions
                  if _is_admissible(table, sym, v)}
    if len(admissible) == 1:
        return admissible.pop()
    return None


def is_zero_value(value: sympy.Expr) -> bool:
    """Exact zero test, falling back to the numeric tolerance for floats."""
    if value.is_zero:
        return True
    if value.is_zero is False and not value.has(sympy.Float):
        simplified = sympy.simplify(value)
        if simplified.is_zero:
            return True
        if simplified.free_symbols:
            return False
        return abs(float(simplified.evalf())) < NUMERIC_TOLERANCE
    if value.has(sympy.Float) and not value.free_symbols:
        return abs(float(value.evalf())) < NUMERIC_TOLERANCE
    simplified = sympy.simplify(value)
    return bool(simplified.is_zero)


def _solve_system(table: SymbolTable, system: Sequence[sympy.Expr],
                  g: sympy.Symbol,
                  deadline: float | None) -> sympy.Expr | None:
    """Value of g in the system, or None when it stays undetermined."""
    known: dict[sympy.Symbol, sympy.Expr] = {}
    pending = list(system)
    progress = True
    while progress:
        progress = False
        still_pending = []
        for eq in pending:
            residual = sympy.expand(eq.xreplace(known))
            free = residual.free_symbols
            if not free:
                continue  # spent (or inconsistent; let the remainder decide)
            if len(free) == 1:
                sym = next(iter(free))
                value = _solve_single(table, residual, sym, deadline)
                if value is not None:
                    known[sym] = value
                    progress = True
                    continue
            still_pending.append(eq)
        pending = still_pending
        if g in known:
            return known[g]

    if pending:
        residuals = [sympy.expand(eq.xreplace(known)) for eq in pending]
        residuals = [r for r in residuals if r.free_symbols]
        unknowns = sorted({s for r in residuals for s in r.free_symbols},
                          key=lambda s: s.name)
        # The system may be underdetermined overall and still pin g down;
        # a parametric solution with a concrete g entry is accepted.
        if residuals:
            _check_deadline(deadline)
            try:
                solutions = sympy.solve(residuals, unknowns, dict=True)
            except Exception:  # pragma: no cover - sympy edge cases
                log.debug("system solve failed", exc_info=True)
                solutions = []
            g_values = set()
            for sol in solutions:
                value = g.xreplace(sol).xreplace(known)
                if not value.free_symbols and all(
                        _is_admissible(table, s, v) for s, v in sol.items()
                        if not v.free_symbols):
                    g_values.add(sympy.simplify(value))
            if len(g_values) == 1:
                return g_values.pop()
    return known.get(g)


def solve_target(table: SymbolTable, a: sympy.Expr,
                 equations: Sequence[StoredEquation], g: sympy.Symbol,
                 deadline: float | None = None,
                 rng=None) -> tuple[sympy.Expr | None, frozenset[int]]:
    """Solve ``g = a`` against the selected dependency equations.

    Returns the value of ``g`` (exact where the system allows) and the ids
    of the conditions whose equations the selection drew in, or None when
    the equations leave ``g`` undetermined. A square-but-degenerate
    selection keeps drawing qualifying equations until none remain.
    """
    selected = select_min_dep(a, equations, g, rng=rng)
    order = list(range(len(equations)))
    if rng is not None:
        rng.shuffle(order)
    chosen = {id(e) for e in selected}
    remaining = {i for i in order if id(equations[i]) not in chosen}
    worked = set((g - a).free_symbols)
    for eq in selected:
        worked |= eq.unknowns

    while True:
        value = _solve_system(table, [g - a] + [e.expr for e in selected],
                              g, deadline)
        sources = frozenset(e.source for e in selected)
        if value is not None:
            return value, sources
        best_idx = _pick_candidate(equations, order, remaining, worked)
        if best_idx is None:
            return None, sources
        remaining.discard(best_idx)
        eq = equations[best_idx]
        selected.append(eq)
        worked |= eq.unknowns


class AlgebraContext:
    """The mutable equation state of one problem.

    Holds the symbol table, the provenance-tagged equation set, and a table
    of propagated known values used as a fast path for constraint checks.
    """

    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self.table = SymbolTable(kb)
        self.equations: list[StoredEquation] = []
        self._index: dict[str, StoredEquation] = {}
        self.values: dict[sympy.Symbol, sympy.Expr] = {}
        self.value_sources: dict[sympy.Symbol, frozenset[int]] = {}
        self.version = 0
        self.diagnostics: list[str] = []
        self._constraint_cache: dict[str, tuple[bool, frozenset[int]]] = {}

    # -- construction -------------------------------------------------------

    def copy(self) -> "AlgebraContext":
        dup = AlgebraContext.__new__(AlgebraContext)
        dup.kb = self.kb
        dup.table = self.table  # symbols are append-only and shared
        dup.equations = list(self.equations)
        dup._index = dict(self._index)
        dup.values = dict(self.values)
        dup.value_sources = dict(self.value_sources)
        dup.version = self.version
        dup.diagnostics = list(self.diagnostics)
        dup._constraint_cache = {}
        return dup

    def truncate(self, max_source: int) -> None:
        """Drop every equation introduced by a condition id > max_source."""
        self.equations = [e for e in self.equations if e.source <= max_source]
        self._index = {_canonical_key(e.expr): e for e in self.equations}
        self.version += 1
        self._constraint_cache.clear()
        self._rebuild_values()

    # -- equations -----------------------------------------------------------

    def add_equation(self, tree: Expr, source: int) -> bool:
        """Store an expression asserted zero; duplicates are ignored."""
        expr = sympy.expand(to_sympy(tree, self.table))
        if expr.is_zero:
            return False
        key = _canonical_key(expr)
        if key in self._index:
            return False
        entry = StoredEquation(expr, source, frozenset(expr.free_symbols))
        self.equations.append(entry)
        self._index[key] = entry
        self.version += 1
        self._constraint_cache.clear()
        self._propagate()
        return True

    def _rebuild_values(self) -> None:
        self.values = {}
        self.value_sources = {}
        self._propagate()

    def _propagate(self) -> None:
        """Forward-substitute known values; pick up single-unknown equations."""
        pending = [e for e in self.equations if e.unknowns - set(self.values)]
        progress = True
        while progress:
            progress = False
            still = []
            for entry in pending:
                residual = entry.expr.xreplace(self.values)
                free = residual.free_symbols
                if not free:
                    continue
                if len(free) == 1:
                    sym = next(iter(free))
                    value = _solve_single(self.table, sympy.expand(residual),
                                          sym, None)
                    if value is not None:
                        used = entry.unknowns - {sym}
                        sources = frozenset([entry.source]).union(
                            *(self.value_sources.get(u, frozenset()) for u in used)) \
                            if used else frozenset([entry.source])
                        self.values[sym] = value
                        self.value_sources[sym] = sources
                        progress = True
                        continue
                still.append(entry)
            pending = still

    # -- queries --------------------------------------------------------------

    def symbol_for(self, term: AttrTerm) -> sympy.Symbol:
        return self.table.symbol(term.attr, term.points)

    def to_sympy(self, tree: Expr) -> sympy.Expr:
        return to_sympy(tree, self.table)

    def solve_value(self, a: sympy.Expr, deadline: float | None = None,
                    ) -> tuple[sympy.Expr | None, frozenset[int]]:
        """Determine the value of expression ``a`` if the equations allow."""
        fast = a.xreplace(self.values)
        if not fast.free_symbols:
            sources = frozenset().union(
                *(self.value_sources.get(s, frozenset()) for s in a.free_symbols)) \
                if a.free_symbols else frozenset()
            return sympy.simplify(fast), sources
        g = sympy.Dummy("g", real=True)
        try:
            value, sources = solve_target(self.table, a, self.equations, g,
                                          deadline=deadline)
        except AlgebraTimeout:
            self.diagnostics.append(f"solve timeout for {a}")
            return None, frozenset()
        return value, sources

    def evaluate_constraint(self, tree: Expr,
                            deadline: float | None = None,
                            ) -> tuple[bool, frozenset[int]]:
        """Check whether an instantiated constraint is verified to hold."""
        a = sympy.expand(self.to_sympy(tree))
        if not a.free_symbols:
            return is_zero_value(a), frozenset()
        key = sympy.srepr(a)
        cached = self._constraint_cache.get(key)
        if cached is not None:
            return cached
        value, sources = self.solve_value(a, deadline=deadline)
        result = (value is not None and is_zero_value(value), sources)
        self._constraint_cache[key] = result
        return result
