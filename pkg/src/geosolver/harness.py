"""Problem loading, batch solving, data augmentation and report emission."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .language.cdl import render_fact
from .language.exprs import equation_text
from .language.kb import KnowledgeBase, load_kb
from .problem import EXTENDED, PREREQUISITE, ConditionStore, init_problem
from .search import (
    SearchConfig,
    SearchResult,
    backward_search,
    forward_search,
    interactive_apply,
    parse_binding,
)

DIFFICULTY_BINS = (
    ("l1", 0, 2), ("l2", 3, 4), ("l3", 5, 6),
    ("l4", 7, 8), ("l5", 9, 10), ("l6", 11, 10 ** 9),
)

# Bundled-corpus runs exercise the mechanism only; published success rates
# need the full problem set and theorem library.
SCALE_NOTE = ("results computed on the bundled problem set; "
              "full-dataset success rates are not reproducible at this scale")

RECORD_FIELDS = ("problem_id", "description", "construction_cdl", "text_cdl",
                 "goal_cdl", "theorem_seqs")


@dataclass
class ProblemRecord:
    problem_id: int
    construction_cdl: list[str]
    text_cdl: list[str]
    goal_cdl: str
    theorem_seqs: list[str] = field(default_factory=list)
    description: str = ""

    @classmethod
    def from_dict(cls, data: Mapping, field_map: Mapping[str, str] | None = None
                  ) -> "ProblemRecord":
        """Build a record from a JSON object.

        ``field_map`` renames foreign schemas into ours, e.g.
        ``{"problem_id": "pid"}`` reads the id from a ``pid`` key.
        """
        def get(name, default=None):
            key = (field_map or {}).get(name, name)
            return data.get(key, default)

        return cls(
            problem_id=int(get("problem_id", 0)),
            construction_cdl=list(get("construction_cdl", [])),
            text_cdl=list(get("text_cdl", [])),
            goal_cdl=get("goal_cdl", ""),
            theorem_seqs=list(get("theorem_seqs", []) or []),
            description=get("description", "") or "",
        )

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "description": self.description,
            "construction_cdl": self.construction_cdl,
            "text_cdl": self.text_cdl,
            "goal_cdl": self.goal_cdl,
            "theorem_seqs": self.theorem_seqs,
        }


def load_problem(path: str | Path,
                 field_map: Mapping[str, str] | None = None) -> ProblemRecord:
    with open(path, encoding="utf-8") as f:
        return ProblemRecord.from_dict(json.load(f), field_map)


def load_problem_dir(directory: str | Path,
                     field_map: Mapping[str, str] | None = None
                     ) -> tuple[list[ProblemRecord], list[tuple[str, str]]]:
    """Read every ``*.json`` problem; unparseable files are reported, not fatal."""
    records, errors = [], []
    for path in sorted(Path(directory).glob("*.json")):
        try:
            records.append(load_problem(path, field_map))
        except Exception as exc:
            errors.append((str(path), f"{type(exc).__name__}: {exc}"))
    return records, errors


def difficulty_of(record: ProblemRecord) -> str:
    """Bin by annotated theorem-sequence length; no annotation, no bin."""
    length = len(record.theorem_seqs)
    if length == 0:
        return "unbinned"
    for name, lo, hi in DIFFICULTY_BINS:
        if lo <= length <= hi:
            return name
    return "unbinned"


def make_store(kb: KnowledgeBase, record: ProblemRecord) -> ConditionStore:
    return init_problem(kb, record.construction_cdl, record.text_cdl,
                        record.goal_cdl)


def check_problem(kb: KnowledgeBase, record: ProblemRecord
                  ) -> tuple[bool, ConditionStore]:
    """Replay the annotated theorem sequence; True when it solves the goal."""
    store = make_store(kb, record)
    for entry in record.theorem_seqs:
        name, binding = parse_binding(kb, entry)
        interactive_apply(store, kb, name, binding)
        if store.goal is not None and store.goal.solved:
            break
    return store.check_goal().solved, store


# --- batch runs ---------------------------------------------------------------


@dataclass
class ProblemOutcome:
    problem_id: int
    difficulty: str
    outcome: str  # solved | unsolved | timeout | error
    elapsed: float = 0.0
    steps: int = 0
    answer: str | None = None
    theorem_seqs: list[str] = field(default_factory=list)
    error: str = ""


@dataclass
class BatchReport:
    method: str
    strategy: str
    config: dict
    outcomes: list[ProblemOutcome] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)
    notes: str = SCALE_NOTE

    def counts(self) -> dict[str, int]:
        out = {"solved": 0, "unsolved": 0, "timeout": 0, "error": 0}
        for o in self.outcomes:
            out[o.outcome] = out.get(o.outcome, 0) + 1
        return out

    def percentages(self) -> dict[str, float]:
        total = len(self.outcomes)
        if total == 0:
            return {k: 0.0 for k in ("solved", "unsolved", "timeout")}
        counts = self.counts()
        return {k: round(100.0 * counts.get(k, 0) / total, 2)
                for k in ("solved", "unsolved", "timeout")}

    def bin_success(self) -> dict[str, float | None]:
        """Solved percentage per difficulty bin; None for empty bins."""
        out: dict[str, float | None] = {}
        for name, _, _ in DIFFICULTY_BINS:
            members = [o for o in self.outcomes if o.difficulty == name]
            if not members:
                out[name] = None
            else:
                solved = sum(1 for o in members if o.outcome == "solved")
                out[name] = round(100.0 * solved / len(members), 2)
        return out

    def averages(self) -> dict[str, float | None]:
        solved = [o for o in self.outcomes if o.outcome == "solved"]
        if not solved:
            return {"time_solved": None, "step_solved": None}
        return {
            "time_solved": round(sum(o.elapsed for o in solved) / len(solved), 3),
            "step_solved": round(sum(o.steps for o in solved) / len(solved), 2),
        }

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "strategy": self.strategy,
            "config": self.config,
            "notes": self.notes,
            "counts": self.counts(),
            "percentages": self.percentages(),
            "bin_success": self.bin_success(),
            "averages": self.averages(),
            "problems": [vars(o).copy() for o in self.outcomes],
            "skipped": [list(s) for s in self.skipped],
        }


def run_problem(kb: KnowledgeBase, record: ProblemRecord,
                config: SearchConfig) -> ProblemOutcome:
    """Search one problem; a solved result must replay before it counts."""
    difficulty = difficulty_of(record)
    try:
        store = make_store(kb, record)
    except Exception as exc:
        return ProblemOutcome(record.problem_id, difficulty, "error",
                              error=f"{type(exc).__name__}: {exc}")
    search = forward_search if config.method == "forward" else backward_search
    started = time.monotonic()
    result: SearchResult = search(store, kb, config)
    elapsed = time.monotonic() - started
    outcome = result.outcome
    if outcome == "solved":
        verify = record_with_seqs(record, result.theorem_seqs)
        try:
            replayed, _ = check_problem(kb, verify)
        except Exception:
            replayed = False
        if not replayed:
            outcome = "unsolved"  # never count an unverifiable solution
    return ProblemOutcome(record.problem_id, difficulty, outcome,
                          elapsed=round(elapsed, 3), steps=result.steps,
                          answer=result.answer if outcome == "solved" else None,
                          theorem_seqs=result.theorem_seqs)


def record_with_seqs(record: ProblemRecord, seqs: Sequence[str]) -> ProblemRecord:
    return ProblemRecord(record.problem_id, record.construction_cdl,
                         record.text_cdl, record.goal_cdl, list(seqs),
                         record.description)


def run_batch(kb: KnowledgeBase, records: Iterable[ProblemRecord],
              config: SearchConfig,
              skipped: Sequence[tuple[str, str]] = (),
              workers: int = 1) -> BatchReport:
    """Run every record under one search configuration.

    With ``workers`` > 1, independent problems run in a process pool;
    outcomes keep record order, so reports do not depend on worker count.
    """
    records = list(records)
    report = BatchReport(
        method=config.method, strategy=config.strategy,
        config={"method": config.method, "strategy": config.strategy,
                "max_depth": config.max_depth, "beam_size": config.beam_size,
                "timeout": config.timeout, "seed": config.seed,
                "workers": workers},
        skipped=list(skipped))
    if workers <= 1:
        report.outcomes = [run_problem(kb, r, config) for r in records]
    else:
        from concurrent.futures import ProcessPoolExecutor
        from itertools import repeat
        with ProcessPoolExecutor(max_workers=workers) as pool:
            report.outcomes = list(pool.map(run_problem, repeat(kb), records,
                                            repeat(config)))
    return report


# --- data augmentation ----------------------------------------------------------


def augment_problem(kb: KnowledgeBase, record: ProblemRecord,
                    solved_store: ConditionStore | None = None
                    ) -> list[ProblemRecord]:
    """Derive new problems from the intermediate facts of a solved one.

    Every theorem-produced condition on the way to the goal (excluding the
    final step's conclusions) becomes the goal of a new record whose
    theorem sequence is the prefix that produced it.
    """
    store = make_store(kb, record)
    step_ends: list[int] = []
    for entry in record.theorem_seqs:
        name, binding = parse_binding(kb, entry)
        interactive_apply(store, kb, name, binding)
        step_ends.append(len(store.conditions))
    goal = store.check_goal()
    if not goal.solved:
        return []

    def producing_step(cid: int) -> int:
        for idx, end in enumerate(step_ends):
            if cid < end:
                return idx
        return len(step_ends)

    derived: list[ProblemRecord] = []
    seen: set[tuple[str, int]] = set()
    closure = sorted(store.premise_closure(goal.premises))
    counter = 0
    for cid in closure:
        cond = store.conditions[cid]
        if cond.theorem in (PREREQUISITE, EXTENDED):
            continue
        step = producing_step(cid)
        if step >= len(record.theorem_seqs) - 1:
            continue  # final step: that is the parent problem itself
        if cond.predicate == "Equation":
            goal_cdl = equation_text(cond.item)
        else:
            goal_cdl = f"Relation({render_fact(kb, cond.predicate, cond.item)})"
        key = (goal_cdl, step)
        if key in seen:
            continue
        seen.add(key)
        counter += 1
        derived.append(ProblemRecord(
            problem_id=record.problem_id * 1000 + counter,
            construction_cdl=list(record.construction_cdl),
            text_cdl=list(record.text_cdl),
            goal_cdl=goal_cdl,
            theorem_seqs=list(record.theorem_seqs[:step + 1]),
            description=f"derived from problem {record.problem_id}, "
                        f"step {step + 1} of {len(record.theorem_seqs)}",
        ))
    return derived


# --- report emission --------------------------------------------------------------

SUMMARY_COLUMNS = ["method", "strategy", "total", "solved", "unsolved", "timeout",
                   "solved_pct", "unsolved_pct", "timeout_pct",
                   "l1", "l2", "l3", "l4", "l5", "l6",
                   "avg_time_solved", "avg_step_solved"]

PROBLEM_COLUMNS = ["problem_id", "difficulty", "outcome", "elapsed", "steps",
                   "answer", "theorem_seqs"]


def emit_report(report: BatchReport, out_dir: str | Path) -> list[Path]:
    """Write the report as JSON plus summary and per-problem CSV files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    json_path = out / "report.json"
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2)
        f.write("\n")
    written.append(json_path)

    counts = report.counts()
    pct = report.percentages()
    bins = report.bin_success()
    avgs = report.averages()
    summary_path = out / "summary.csv"
    with open(summary_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerow([
            report.method, report.strategy, len(report.outcomes),
            counts.get("solved", 0), counts.get("unsolved", 0),
            counts.get("timeout", 0),
            pct["solved"], pct["unsolved"], pct["timeout"],
            *[("" if bins[b] is None else bins[b])
              for b in ("l1", "l2", "l3", "l4", "l5", "l6")],
            "" if avgs["time_solved"] is None else avgs["time_solved"],
            "" if avgs["step_solved"] is None else avgs["step_solved"],
        ])
    written.append(summary_path)

    problems_path = out / "problems.csv"
    with open(problems_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(PROBLEM_COLUMNS)
        for o in report.outcomes:
            writer.writerow([o.problem_id, o.difficulty, o.outcome, o.elapsed,
                             o.steps, o.answer or "",
                             ";".join(o.theorem_seqs)])
    written.append(problems_path)
    return written


# --- bundled data -----------------------------------------------------------------


def bundled_data_dir() -> Path:
    return Path(__file__).parent / "data"


def load_bundled_kb() -> KnowledgeBase:
    gdl_dir = bundled_data_dir() / "gdl"
    sources = [p.read_text(encoding="utf-8") for p in sorted(gdl_dir.glob("*.gdl"))]
    return load_kb(*sources)


def load_kb_dir(directory: str | Path) -> KnowledgeBase:
    sources = [p.read_text(encoding="utf-8")
               for p in sorted(Path(directory).glob("*.gdl"))]
    if not sources:
        raise FileNotFoundError(f"no .gdl files in {directory}")
    return load_kb(*sources)
