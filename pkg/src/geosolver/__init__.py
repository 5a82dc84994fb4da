"""Formal plane-geometry reasoning engine.

Parses predicate/theorem definition files and per-problem condition
statements, builds composite diagrams from their topological structure,
executes theorems as relational predicate logic with algebraic
constraints, and solves problems interactively or by forward/backward
tree search.
"""

from .harness import (
    ProblemRecord,
    augment_problem,
    check_problem,
    difficulty_of,
    load_bundled_kb,
    run_batch,
)
from .language import KnowledgeBase, load_kb, parse_cdl, parse_gdl
from .problem import ConditionStore, Goal, init_problem
from .search import SearchConfig, backward_search, forward_search, interactive_apply

__all__ = [
    "ConditionStore", "Goal", "KnowledgeBase", "ProblemRecord", "SearchConfig",
    "augment_problem", "backward_search", "check_problem", "difficulty_of",
    "forward_search", "init_problem", "interactive_apply", "load_bundled_kb",
    "load_kb", "parse_cdl", "parse_gdl", "run_batch",
]

__version__ = "0.1.0"
