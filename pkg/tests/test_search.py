"""Interactive application and automated search behavior."""

import random
from dataclasses import dataclass

import pytest

from geosolver.language import load_kb
from geosolver.problem import init_problem
from geosolver.search import (
    EXPANDABLE,
    EXPANDED,
    SearchConfig,
    backward_search,
    forward_search,
    interactive_apply,
    parse_binding,
    pick_expandable,
    replay,
)


@dataclass
class Stub:
    order: int
    depth: int
    state: str = EXPANDABLE


class TestPickExpandable:
    def test_bfs_prefers_shallow_dfs_prefers_deep(self):
        rng = random.Random(0)
        nodes = [Stub(order=0, depth=1), Stub(order=1, depth=2)]
        assert pick_expandable(nodes, "bfs", rng) is nodes[0]
        assert pick_expandable(nodes, "dfs", rng) is nodes[1]

    def test_random_strategy_deterministic_under_seed(self):
        nodes = [Stub(order=i, depth=1) for i in range(10)]
        picks1 = [pick_expandable(nodes, "rs", random.Random(5)) for _ in range(8)]
        picks2 = [pick_expandable(nodes, "rs", random.Random(5)) for _ in range(8)]
        assert picks1 == picks2

    def test_exhausted_returns_none(self):
        nodes = [Stub(order=0, depth=1, state=EXPANDED)]
        assert pick_expandable(nodes, "bfs", random.Random(0)) is None


class TestInteractiveApply:
    def test_midpoint_judgment(self, kb):
        store = init_problem(kb, ["Collinear(AMB)"],
                             ["Equal(LengthOfLine(AM),LengthOfLine(MB))"],
                             "Relation(IsMidpointOfLine(M,AB))")
        report = interactive_apply(store, kb, "midpoint_of_line_judgment")
        assert store.has_fact("IsMidpointOfLine", ("M", "A", "B")) is not None
        assert report.goal.solved

    def test_second_application_adds_nothing(self, kb):
        store = init_problem(kb, ["Collinear(AMB)"],
                             ["Equal(LengthOfLine(AM),LengthOfLine(MB))"],
                             "Relation(IsMidpointOfLine(M,AB))")
        interactive_apply(store, kb, "midpoint_of_line_judgment")
        again = interactive_apply(store, kb, "midpoint_of_line_judgment")
        assert again.new_conditions == []

    def test_unknown_theorem_rejected(self, kb):
        store = init_problem(kb, ["Collinear(AMB)"], [],
                             "Value(LengthOfLine(AB))")
        with pytest.raises(Exception):
            interactive_apply(store, kb, "no_such_theorem")

    def test_zero_matches_is_quiet_success(self, kb):
        store = init_problem(kb, ["Shape(AB,BC,CA)"], [],
                             "Value(MeasureOfAngle(ABC))")
        report = interactive_apply(store, kb, "vertical_angle")
        assert report.new_conditions == []

    def test_explicit_binding_restricts(self, kb):
        store = init_problem(kb, ["Shape(AB,BC,CA)", "Shape(DE,EF,FD)"], [],
                             "Value(MeasureOfAngle(ABC))")
        report = interactive_apply(store, kb, "triangle_angle_sum",
                                   {"A": "D", "B": "E", "C": "F"})
        assert len(report.new_conditions) == 1
        cond = store.conditions[report.new_conditions[0]]
        assert "DEF" in str(cond.item) or "EFD" in str(cond.item) \
            or "FDE" in str(cond.item)

    def test_parse_binding_forms(self, kb):
        name, binding = parse_binding(kb, "midpoint_of_line_judgment")
        assert name == "midpoint_of_line_judgment" and binding is None
        name, binding = parse_binding(kb, "midpoint_of_line_judgment(M,AB)")
        assert binding == {"M": "M", "A": "A", "B": "B"}
        name, binding = parse_binding(kb, "vertical_angle(AOC,BOD)")
        assert binding == {"A": "A", "O": "O", "C": "C", "B": "B", "D": "D"}
        with pytest.raises(ValueError):
            parse_binding(kb, "vertical_angle(AOC,BXD)")  # O bound two ways


ONE_STEP = dict(
    construction=["Collinear(AMB)"],
    text=["Equal(LengthOfLine(AM),LengthOfLine(MB))"],
    goal="Relation(IsMidpointOfLine(M,AB))",
)


def make(kb, spec=ONE_STEP):
    return init_problem(kb, spec["construction"], spec["text"], spec["goal"])


class TestForwardSearch:
    @pytest.mark.parametrize("strategy", ["bfs", "dfs", "rs", "bs"])
    def test_one_theorem_problem_solves_under_every_strategy(self, kb, strategy):
        result = forward_search(make(kb), kb,
                                SearchConfig(strategy=strategy, timeout=20))
        assert result.outcome == "solved"
        assert "midpoint_of_line_judgment" in result.theorem_seqs
        ok, _ = replay(lambda: make(kb), kb, result.theorem_seqs)
        assert ok

    def test_unsolvable_toy_exhausts_without_timeout(self):
        toy = load_kb("""
Attribution LengthOfLine(AB):
    ee_check: Line(AB)
    sym: ll
    multi: BA

Relation Spark(AB):
    ee_check: Line(AB)

Theorem spark_judgment(AB):
    premise: Line(AB)&Equal(LengthOfLine(AB),1)
    conclusion: Spark(AB)
""")
        store = init_problem(toy, ["Shape(AB,BC,CA)"], [],
                             "Relation(Spark(AB))")
        result = forward_search(store, toy, SearchConfig(timeout=20))
        assert result.outcome == "unsolved"

    def test_deterministic_under_seed(self, kb, bundled_problems):
        record = next(r for r in bundled_problems if r.problem_id == 22)
        runs = []
        for _ in range(2):
            store = init_problem(kb, record.construction_cdl, record.text_cdl,
                                 record.goal_cdl)
            result = forward_search(store, kb,
                                    SearchConfig(strategy="rs", seed=3,
                                                 timeout=30))
            runs.append((result.outcome, tuple(result.theorem_seqs),
                         result.steps))
        assert runs[0] == runs[1]

    def test_depth_limit_respected(self, kb):
        spec = dict(
            construction=["Shape(AB,BC,CA)"],
            text=["Equal(MeasureOfAngle(ABC),90)", "Equal(LengthOfLine(AB),3)",
                  "Equal(LengthOfLine(BC),4)"],
            goal="Value(PerimeterOfTriangle(ABC))",
        )
        shallow = forward_search(make(kb, spec), kb,
                                 SearchConfig(max_depth=1, timeout=20))
        assert shallow.outcome == "unsolved"
        deep = forward_search(make(kb, spec), kb,
                              SearchConfig(max_depth=4, timeout=30))
        assert deep.outcome == "solved"

    def test_timeout_reported(self, kb):
        spec = dict(
            construction=["Shape(AB,BC,CA)"],
            text=[],
            goal="Value(MeasureOfAngle(ABC))",
        )
        result = forward_search(make(kb, spec), kb,
                                SearchConfig(timeout=0.0))
        assert result.outcome == "timeout"


class TestBackwardSearch:
    def test_goal_already_known_step_zero(self, kb):
        store = init_problem(kb, ["Shape(AB,BC,CA)"],
                             ["IsoscelesTriangle(ABC)"],
                             "Relation(IsoscelesTriangle(ABC))")
        result = backward_search(store, kb, SearchConfig(method="backward"))
        assert result.outcome == "solved"
        assert result.theorem_seqs == []
        assert result.steps == 0

    @pytest.mark.parametrize("strategy", ["bfs", "dfs", "rs", "bs"])
    def test_one_theorem_problem(self, kb, strategy):
        result = backward_search(make(kb), kb,
                                 SearchConfig(method="backward",
                                              strategy=strategy, timeout=20))
        assert result.outcome == "solved"
        assert result.theorem_seqs == ["midpoint_of_line_judgment"]

    def test_two_step_value_goal(self, kb):
        spec = dict(
            construction=["Shape(AB,BC,CA)"],
            text=["IsoscelesTriangle(ABC)", "Equal(MeasureOfAngle(CAB),40)"],
            goal="Value(MeasureOfAngle(ABC))",
        )
        result = backward_search(make(kb, spec), kb,
                                 SearchConfig(method="backward", timeout=30))
        assert result.outcome == "solved"
        ok, store = replay(lambda: make(kb, spec), kb, result.theorem_seqs)
        assert ok and str(store.goal.answer) == "70"


class TestBeamSearch:
    def test_beam_as_wide_as_generation_behaves_like_bfs(self, kb, bundled_problems):
        record = next(r for r in bundled_problems if r.problem_id == 9)

        def factory():
            return init_problem(kb, record.construction_cdl, record.text_cdl,
                                record.goal_cdl)

        wide = forward_search(factory(), kb,
                              SearchConfig(strategy="bs", beam_size=10_000,
                                           timeout=30, seed=0))
        bfs = forward_search(factory(), kb,
                             SearchConfig(strategy="bfs", timeout=30, seed=0))
        assert (wide.outcome, wide.theorem_seqs, wide.steps) == \
            (bfs.outcome, bfs.theorem_seqs, bfs.steps)

    def test_backward_beam_defers_instead_of_discarding(self, kb):
        # A tight beam may drop the productive branch at first; the deferred
        # queue revisits it, so the problem still solves (possibly slower).
        spec = dict(
            construction=["Shape(AB,BC,CA)"],
            text=["Equal(MeasureOfAngle(ABC),90)", "Equal(LengthOfLine(AB),3)",
                  "Equal(LengthOfLine(BC),4)"],
            goal="Value(LengthOfLine(CA))",
        )
        result = backward_search(make(kb, spec), kb,
                                 SearchConfig(method="backward", strategy="bs",
                                              beam_size=1, timeout=30, seed=1))
        assert result.outcome == "solved"
        ok, _ = replay(lambda: make(kb, spec), kb, result.theorem_seqs)
        assert ok


class TestStepAccounting:
    def test_forward_steps_count_applied_nodes(self, kb):
        result = forward_search(make(kb), kb, SearchConfig(timeout=20))
        assert result.steps >= 1

    def test_backward_steps_count_super_nodes(self, kb):
        result = backward_search(make(kb), kb,
                                 SearchConfig(method="backward", timeout=20))
        assert result.steps >= 1


class TestStrategyAgreement:
    """On problems small enough to exhaust, solvability is strategy-free."""

    def test_toy_problems_agree_across_strategies(self, kb):
        solvable = dict(
            construction=["Collinear(AMB)"],
            text=["Equal(LengthOfLine(AM),LengthOfLine(MB))"],
            goal="Relation(IsMidpointOfLine(M,AB))",
        )
        unsolvable = dict(
            construction=["Collinear(AMB)"],
            text=[],
            goal="Relation(IsMidpointOfLine(M,AB))",
        )
        for spec, expected in ((solvable, "solved"), (unsolvable, "unsolved")):
            for method, search in (("forward", forward_search),
                                   ("backward", backward_search)):
                for strategy in ("bfs", "dfs", "rs"):
                    result = search(make(kb, spec), kb,
                                    SearchConfig(method=method,
                                                 strategy=strategy,
                                                 timeout=25, seed=0))
                    assert result.outcome == expected, (method, strategy)


class TestScorerHook:
    def test_external_scorer_steers_beam(self, kb):
        # The hook ranks candidate nodes; a scorer that loves the solving
        # theorem keeps it in a width-1 beam.
        def scorer(node):
            return 1.0 if node.theorem == "midpoint_of_line_judgment" else 0.0

        result = forward_search(
            make(kb), kb,
            SearchConfig(strategy="bs", beam_size=1, timeout=20, seed=0,
                         scorer=scorer))
        assert result.outcome == "solved"
        assert result.theorem_seqs == ["midpoint_of_line_judgment"]


class TestLongerChain:
    def test_six_step_annotation_replays_and_backward_solves(self, kb):
        spec = dict(
            construction=["Shape(AB,BC,CA)", "Collinear(AMB)", "Shape(DE,EF,FD)"],
            text=["IsMidpointOfLine(M,AB)", "Equal(LengthOfLine(AM),3/2)",
                  "Equal(MeasureOfAngle(ABC),90)", "Equal(LengthOfLine(BC),4)",
                  "Equal(LengthOfLine(AB),LengthOfLine(DE))",
                  "Equal(MeasureOfAngle(ABC),MeasureOfAngle(DEF))",
                  "Equal(LengthOfLine(BC),LengthOfLine(EF))"],
            goal="Value(PerimeterOfTriangle(DEF))",
        )
        annotated = ["line_addition", "right_triangle_judgment_angle",
                     "right_triangle_property_pythagorean",
                     "congruent_triangle_judgment_sas",
                     "congruent_triangle_property_line",
                     "triangle_perimeter_formula"]
        ok, store = replay(lambda: make(kb, spec), kb, annotated)
        assert ok and str(store.goal.answer) == "12"
        result = backward_search(make(kb, spec), kb,
                                 SearchConfig(method="backward", timeout=30))
        assert result.outcome == "solved"
        ok, store = replay(lambda: make(kb, spec), kb, result.theorem_seqs)
        assert ok and str(store.goal.answer) == "12"
