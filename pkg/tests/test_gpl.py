"""Predicate-logic execution against a brute-force assignment oracle.

The oracle evaluates expressions as sets of variable assignments by
exhaustive enumeration, with no joins or ordering, so it shares no code
path with the engine.
"""

import random
from itertools import permutations, product

import pytest

from geosolver.gpl import (
    GplError,
    Relation,
    atom_relation,
    complement_rel,
    execute_branch,
    join,
    reorder_branch,
    to_dnf,
    union_rel,
)
from geosolver.language.exprs import AlgAtom, And, AttrTerm, NotAtom, Num, OpNode, Or, RelAtom

from fractions import Fraction


class FakeState:
    """Minimal provider: fixed extensions, constraint = membership table."""

    def __init__(self, universe, extensions, true_constraints=()):
        self._universe = tuple(universe)
        self.extensions = {}
        counter = 0
        for name in sorted(extensions):
            table = {}
            for t in sorted(extensions[name]):
                table[t] = frozenset([counter])
                counter += 1
            self.extensions[name] = table
        self.true_constraints = set(true_constraints)

    def relation(self, predicate, arity):
        table = self.extensions.get(predicate, {})
        return {t: ids for t, ids in table.items() if len(t) == arity}

    def universe(self):
        return self._universe

    def check_constraint(self, expr):
        return (str(expr) in self.true_constraints, frozenset())


# --- brute-force oracle ---------------------------------------------------------


def oracle_eval(expr, state: FakeState):
    """Set of frozenset(var -> point) assignments satisfying the expression."""
    if isinstance(expr, (And, Or)):
        sets = [oracle_eval(c, state) for c in expr.children]
        all_vars = sorted({v for s in sets for a in s for v, _ in a} |
                          {v for c in expr.children for v in _vars_of(c)})
        expanded = [_expand(s, _vars_of(c), all_vars, state)
                    for s, c in zip(sets, expr.children)]
        if isinstance(expr, And):
            out = expanded[0]
            for s in expanded[1:]:
                out = {a for a in _merge(out, s)}
            return out
        out = set()
        for s in expanded:
            out |= s
        return out
    if isinstance(expr, NotAtom):
        inner = oracle_eval(expr.atom, state)
        vs = _vars_of(expr)
        out = set()
        for points in permutations(state.universe(), len(vs)):
            a = frozenset(zip(vs, points))
            if a not in inner:
                out.add(a)
        return out
    if isinstance(expr, AlgAtom):
        from geosolver.language.exprs import substitute_points
        vs = _vars_of(expr)
        out = set()
        for points in product(state.universe(), repeat=len(vs)):
            mapping = dict(zip(vs, points))
            ok, _ = state.check_constraint(substitute_points(expr.expr, mapping))
            if ok:
                out.add(frozenset(mapping.items()))
        return out
    assert isinstance(expr, RelAtom)
    vs = _vars_of(expr)
    out = set()
    for item in state.relation(expr.predicate, len(expr.vars)):
        mapping = {}
        ok = True
        for v, p in zip(expr.vars, item):
            if mapping.get(v, p) != p:
                ok = False
                break
            mapping[v] = p
        if ok:
            out.add(frozenset(mapping.items()))
    return out


def _vars_of(expr):
    seen = {}
    if isinstance(expr, (And, Or)):
        for c in expr.children:
            for v in _vars_of(c):
                seen.setdefault(v)
    else:
        for v in expr.vars:
            seen.setdefault(v)
    return tuple(seen)


def _expand(assignments, have, want, state):
    """Pad assignments over missing variables with every point choice.

    Only complement tuples are distinct-point; joined variables from
    different atoms may share a point.
    """
    missing = [v for v in want if v not in have]
    if not missing:
        return set(assignments)
    out = set()
    for a in assignments:
        for points in product(state.universe(), repeat=len(missing)):
            out.add(a | frozenset(zip(missing, points)))
    return out


def _merge(left, right):
    for a in left:
        if a in right:
            yield a


def rel_to_assignments(rel: Relation):
    return {frozenset(zip(rel.vars, t)) for t in rel.elements}


# --- random generators ------------------------------------------------------------


def random_state(rng, n_points=5, n_rels=3, max_elems=5, shared_vars=("X", "Y", "Z")):
    universe = tuple("PQRST"[:n_points])
    extensions = {}
    var_map = {}
    for i in range(n_rels):
        name = f"R{i}"
        arity = rng.randint(1, min(3, len(shared_vars)))
        vars_ = tuple(rng.sample(shared_vars, arity))
        tuples = set()
        for _ in range(rng.randint(0, max_elems)):
            tuples.add(tuple(rng.sample(universe, arity)))
        extensions[name] = tuples
        var_map[name] = vars_
    return FakeState(universe, extensions), var_map


def random_expr(rng, var_map, depth=3):
    names = sorted(var_map)

    def atom():
        name = rng.choice(names)
        a = RelAtom(name, var_map[name])
        if rng.random() < 0.2:
            return NotAtom(a)
        return a

    def build(d):
        if d == 0 or rng.random() < 0.3:
            return atom()
        children = tuple(build(d - 1) for _ in range(rng.randint(2, 3)))
        if rng.random() < 0.5:
            # OR children must share one variable structure
            base = build(d - 1)
            vs = _vars_of(base)
            alts = [base]
            for _ in range(rng.randint(1, 2)):
                other = atom()
                if _vars_of(other) == vs:
                    alts.append(other)
            if len(alts) > 1:
                return Or(tuple(alts))
            return base
        return And(children)

    return build(depth)


# --- tests ---------------------------------------------------------------------


class TestToDnf:
    def test_worked_example_three_branches(self):
        # R1 & (R2 | (~R3 | RA) & R4 & R5) expands to exactly:
        # R1&R2 | R1&~R3&R4&R5 | R1&RA&R4&R5, in that order.
        r1 = RelAtom("R1", ("X", "Y"))
        r2 = RelAtom("R2", ("Y", "Z"))
        r3 = NotAtom(RelAtom("R3", ("Y",)))
        ra = AlgAtom(OpNode("Sub", (AttrTerm("L", (("X", "Y"),)), Num(Fraction(1)))))
        r4 = RelAtom("R4", ("Y", "Z"))
        r5 = RelAtom("R5", ("Y",))
        expr = And((r1, Or((r2, And((Or((r3, ra)), r4, r5))))))
        branches = to_dnf(expr)
        assert branches == [
            (r1, r2),
            (r1, r3, r4, r5),
            (r1, ra, r4, r5),
        ]

    def test_bare_atom_single_branch(self):
        atom = RelAtom("R", ("X",))
        assert to_dnf(atom) == [(atom,)]

    def test_mismatched_or_structure_rejected(self):
        expr = Or((RelAtom("R", ("X",)), RelAtom("S", ("X", "Y"))))
        with pytest.raises(GplError):
            to_dnf(expr)

    def test_random_expressions_preserve_evaluation(self):
        rng = random.Random(23)
        checked = 0
        for _ in range(200):
            state, var_map = random_state(rng)
            expr = random_expr(rng, var_map, depth=4)
            try:
                branches = to_dnf(expr)
            except GplError:
                continue
            expected = oracle_eval(expr, state)
            union = set()
            for branch in branches:
                result = execute_branch(reorder_branch(branch), state)
                union |= rel_to_assignments(result)
            assert union == expected
            checked += 1
        assert checked >= 100


class TestReorderBranch:
    def test_worked_reorder(self):
        # R1 & RA & R4 & R5 reorders to R1 & R5 & R4 & RA: the bound-variable
        # filter R5 moves ahead of the join R4, algebra goes last.
        r1 = RelAtom("R1", ("X", "Y"))
        ra = AlgAtom(OpNode("Sub", (AttrTerm("L", (("X", "Y"),)), Num(Fraction(1)))))
        r4 = RelAtom("R4", ("Y", "Z"))
        r5 = RelAtom("R5", ("Y",))
        assert reorder_branch((r1, ra, r4, r5)) == (r1, r5, r4, ra)

    def test_single_atom_unchanged(self):
        atom = RelAtom("R", ("X",))
        assert reorder_branch((atom,)) == (atom,)

    def test_reordering_never_changes_results(self):
        rng = random.Random(29)
        for _ in range(200):
            state, var_map = random_state(rng)
            names = sorted(var_map)
            branch = tuple(RelAtom(n, var_map[n])
                           for n in rng.sample(names, rng.randint(1, len(names))))
            plain = execute_branch(branch, state)
            ordered = execute_branch(reorder_branch(branch), state)
            assert rel_to_assignments(plain) == rel_to_assignments(ordered)


class TestJoin:
    def test_spec_example(self):
        # Oracle: nested loops with a shared-slot filter, worked by hand.
        r1 = Relation(("X", "Y"), {("A", "B"): frozenset([1]),
                                   ("B", "C"): frozenset([2])})
        r2 = Relation(("Y", "Z"), {("B", "C"): frozenset([3]),
                                   ("C", "A"): frozenset([4])})
        out = join(r1, r2)
        assert out.vars == ("X", "Y", "Z")
        assert set(out.elements) == {("A", "B", "C"), ("B", "C", "A")}
        assert out.elements[("A", "B", "C")] == frozenset([1, 3])

    def test_empty_annihilates(self):
        r1 = Relation(("X",), {})
        r2 = Relation(("X", "Y"), {("A", "B"): frozenset()})
        assert join(r1, r2).elements == {}

    def test_commutative_up_to_slot_permutation(self):
        rng = random.Random(31)
        for _ in range(200):
            state, var_map = random_state(rng, n_rels=2)
            r1 = atom_relation(state, RelAtom("R0", var_map["R0"]))
            r2 = atom_relation(state, RelAtom("R1", var_map["R1"]))
            left = rel_to_assignments(join(r1, r2))
            right = rel_to_assignments(join(r2, r1))
            assert left == right

    def test_disjoint_vars_full_product(self):
        r1 = Relation(("X",), {("A",): frozenset()})
        r2 = Relation(("Y",), {("B",): frozenset(), ("C",): frozenset()})
        out = join(r1, r2)
        assert set(out.elements) == {("A", "B"), ("A", "C")}


class TestFilterAndUnion:
    def test_union_requires_same_structure(self):
        r1 = Relation(("X",), {("A",): frozenset()})
        r2 = Relation(("Y",), {("B",): frozenset()})
        with pytest.raises(GplError):
            union_rel(r1, r2)

    def test_union_merges_and_deduplicates(self):
        r1 = Relation(("X",), {("A",): frozenset([1])})
        r2 = Relation(("X",), {("A",): frozenset([2]), ("B",): frozenset([3])})
        out = union_rel(r1, r2)
        assert set(out.elements) == {("A",), ("B",)}
        assert out.elements[("A",)] == frozenset([1, 2])
        again = union_rel(out, out)
        assert set(again.elements) == set(out.elements)

    def test_distributivity_on_random_instances(self):
        # R1 & (R2 | R3) = (R1 & R2) | (R1 & R3) with shared Or structure.
        rng = random.Random(37)
        for _ in range(200):
            universe = ("P", "Q", "R", "S")
            vars_or = ("X", "Y")
            mk = lambda: {tuple(rng.sample(universe, 2))
                          for _ in range(rng.randint(0, 5))}
            state = FakeState(universe, {"R1": mk(), "R2": mk(), "R3": mk()})
            r1 = RelAtom("R1", ("Z", "X"))
            r2 = RelAtom("R2", vars_or)
            r3 = RelAtom("R3", vars_or)
            combined = And((r1, Or((r2, r3))))
            split = Or((And((r1, r2)), And((r1, r3))))
            assert oracle_eval(combined, state) == oracle_eval(split, state)
            left = set()
            for b in to_dnf(combined):
                left |= rel_to_assignments(execute_branch(b, state))
            right = set()
            for b in to_dnf(split):
                right |= rel_to_assignments(execute_branch(b, state))
            assert left == right == oracle_eval(combined, state)


class TestComplement:
    def test_one_var_universe_two(self):
        r = Relation(("X",), {("A",): frozenset()})
        out = complement_rel(r, ("A", "B"))
        assert set(out.elements) == {("B",)}

    def test_involution(self):
        universe = ("A", "B", "C")
        r = Relation(("X", "Y"), {("A", "B"): frozenset(), ("C", "A"): frozenset()})
        twice = complement_rel(complement_rel(r, universe), universe)
        assert set(twice.elements) == set(r.elements)

    def test_empty_relation_gives_all_permutations(self):
        out = complement_rel(Relation(("X", "Y"), {}), ("A", "B", "C"))
        assert set(out.elements) == set(permutations("ABC", 2))
        assert len(out.elements) == 6


class TestExecuteBranch:
    def test_worked_pipeline_matches_oracle(self):
        rng = random.Random(41)
        for _ in range(100):
            universe = ("P", "Q", "R", "S")
            state = FakeState(universe, {
                "R1": {tuple(rng.sample(universe, 2)) for _ in range(4)},
                "R4": {tuple(rng.sample(universe, 2)) for _ in range(4)},
                "R5": {tuple(rng.sample(universe, 1)) for _ in range(3)},
            })
            branch = (RelAtom("R1", ("X", "Y")), RelAtom("R5", ("Y",)),
                      RelAtom("R4", ("Y", "Z")))
            result = execute_branch(reorder_branch(branch), state)
            assert rel_to_assignments(result) == oracle_eval(And(branch), state)

    def test_short_circuit_on_empty_first_relation(self):
        calls = []

        class Spy(FakeState):
            def check_constraint(self, expr):
                calls.append(expr)
                return True, frozenset()

        state = Spy(("A", "B"), {"R": set()})
        branch = (RelAtom("R", ("X",)),
                  AlgAtom(AttrTerm("L", (("X",),))))
        result = execute_branch(branch, state)
        assert result.elements == {}
        assert calls == []

    def test_premise_ids_flow_through(self):
        state = FakeState(("A", "B", "C"),
                          {"R1": {("A", "B")}, "R2": {("B", "C")}})
        branch = (RelAtom("R1", ("X", "Y")), RelAtom("R2", ("Y", "Z")))
        result = execute_branch(branch, state)
        (ids,) = result.elements.values()
        assert ids  # both contributing fact ids recorded
        assert len(ids) == 2

    def test_vertical_angle_binding(self, kb):
        from geosolver.problem import init_problem

        store = init_problem(kb, ["Collinear(AOB)", "Collinear(COD)"],
                             ["Angle(AOC)", "Angle(BOD)"],
                             "Value(MeasureOfAngle(BOD))")
        tdef = kb.theorem("vertical_angle")
        branch = store.theorem_branches(tdef)[0]
        result = execute_branch(reorder_branch(branch), store)
        assignments = rel_to_assignments(result)
        # In theorem-variable order (A,O,C,B,D) this is the binding
        # (A,O,C,B,D); its mirror image is the only other match.
        identity = frozenset({("A", "A"), ("O", "O"), ("C", "C"),
                              ("B", "B"), ("D", "D")})
        assert identity in assignments
        assert len(assignments) <= 2
        for ids in result.elements.values():
            assert ids and all(i < len(store.conditions) for i in ids)


class TestFilterAlgebraic:
    def test_known_equal_lengths_filter(self, kb):
        # Oracle: substitute the known values per candidate tuple and keep
        # exactly those whose difference is zero.
        from geosolver.gpl import filter_algebraic
        from geosolver.language.exprs import substitute_points
        from geosolver.problem import init_problem

        store = init_problem(kb, ["Collinear(ABC)"],
                             ["Equal(LengthOfLine(AB),2)",
                              "Equal(LengthOfLine(BC),2)",
                              "Equal(LengthOfLine(AC),4)"],
                             "Value(LengthOfLine(AC))")
        base = atom_relation(store, RelAtom("Line", ("X", "Y")))
        pairs = join(base, atom_relation(store, RelAtom("Line", ("Y", "Z"))))
        constraint = AlgAtom(parse_equation_text(
            "Equal(LengthOfLine(XY),LengthOfLine(YZ))"))
        kept = filter_algebraic(pairs, constraint, store)

        values = {("A", "B"): 2, ("B", "A"): 2, ("B", "C"): 2, ("C", "B"): 2,
                  ("A", "C"): 4, ("C", "A"): 4}
        expected = {t for t in pairs.elements
                    if values[(t[0], t[1])] == values[(t[1], t[2])]}
        assert set(kept.elements) == expected
        assert expected  # the filter keeps the equal-length chains

    def test_tautology_keeps_everything(self, kb):
        from geosolver.gpl import filter_algebraic
        from geosolver.problem import init_problem

        store = init_problem(kb, ["Collinear(ABC)"], [],
                             "Value(LengthOfLine(AC))")
        base = atom_relation(store, RelAtom("Line", ("X", "Y")))
        constraint = AlgAtom(parse_equation_text("Equal(x,x)"))
        kept = filter_algebraic(base, constraint, store)
        assert set(kept.elements) == set(base.elements)

    def test_empty_input_stays_empty(self, kb):
        from geosolver.gpl import filter_algebraic
        from geosolver.problem import init_problem

        store = init_problem(kb, ["Collinear(ABC)"], [],
                             "Value(LengthOfLine(AC))")
        empty = Relation(("X", "Y"), {})
        constraint = AlgAtom(parse_equation_text("Equal(x,x)"))
        assert filter_algebraic(empty, constraint, store).elements == {}


def parse_equation_text(text):
    from geosolver.language.parser import parse_equation
    return parse_equation(text)
