"""HTTP/JSON API for interactive proof sessions.

One session owns one problem store. Mutations (apply, undo) are serialized
per session: a second concurrent mutation is rejected with 409 rather than
queued, so a client never observes interleaved state.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, HTTPException
from fastapi.responses import RedirectResponse
from fastapi.staticfiles import StaticFiles

from ..gpl import reorder_branch
from ..harness import (
    ProblemRecord,
    bundled_data_dir,
    load_bundled_kb,
    load_problem_dir,
)
from ..language.exprs import RelAtom
from ..language.kb import KnowledgeBase
from ..problem import ConditionStore, init_problem
from ..search import (
    SearchConfig,
    backward_search,
    forward_search,
    interactive_apply,
    parse_binding,
)
from . import schemas


class Session:
    def __init__(self, sid: str, record: ProblemRecord, store: ConditionStore):
        self.id = sid
        self.record = record
        self.store = store
        self.lock = threading.Lock()
        self.theorem_log: list[str] = []
        self.checkpoints: list[int] = []


def _condition_out(store: ConditionStore, cond) -> schemas.ConditionOut:
    from ..language.cdl import inverse_parse
    return schemas.ConditionOut(
        id=cond.id, predicate=cond.predicate,
        item=inverse_parse(store.kb, cond.predicate, cond.item),
        premises=sorted(cond.premises), theorem=cond.theorem)


def _goal_out(store: ConditionStore) -> schemas.GoalOut:
    goal = store.goal
    doc = store.export_hypertree()["goal"]
    return schemas.GoalOut(**doc) if goal else schemas.GoalOut(
        kind="none", payload="", status="unsolved")


def _hypertree_out(store: ConditionStore) -> schemas.HypertreeOut:
    doc = store.export_hypertree()
    return schemas.HypertreeOut(
        nodes=doc["nodes"],
        edges=[schemas.HyperedgeOut(**e) for e in doc["edges"]],
        goal=schemas.GoalOut(**doc["goal"]) if "goal" in doc else None)


def applicable_theorems(store: ConditionStore, kb: KnowledgeBase) -> list[str]:
    """Theorems with at least one branch whose seed relation has matches.

    This is the cheap applicability pre-filter; the exact check happens on
    apply.
    """
    names = []
    sizes = store.extension_sizes()
    for tdef in kb.theorems.values():
        for branch in store.theorem_branches(tdef):
            first = reorder_branch(branch, sizes)[0]
            if not isinstance(first, RelAtom):
                continue
            if store.relation(first.predicate, len(first.vars)):
                names.append(tdef.name)
                break
    return names


def create_app(kb: KnowledgeBase | None = None,
               problem_dir: str | Path | None = None,
               snapshot_dir: str | Path | None = None) -> FastAPI:
    kb = kb or load_bundled_kb()
    problem_dir = Path(problem_dir) if problem_dir else bundled_data_dir() / "problems"
    records, _ = load_problem_dir(problem_dir)
    by_id: Mapping[int, ProblemRecord] = {r.problem_id: r for r in records}

    app = FastAPI(title="geosolver session service")
    sessions: dict[str, Session] = {}

    def get_session(sid: str) -> Session:
        session = sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        return session

    def state_of(session: Session) -> schemas.SessionState:
        store = session.store
        return schemas.SessionState(
            session_id=session.id,
            problem_id=session.record.problem_id,
            conditions=[_condition_out(store, c) for c in store.conditions],
            goal=_goal_out(store),
            applicable_theorems=applicable_theorems(store, kb),
            theorem_log=list(session.theorem_log),
            hypertree=_hypertree_out(store),
        )

    def write_snapshot(session: Session) -> None:
        if snapshot_dir is None:
            return
        path = Path(snapshot_dir)
        path.mkdir(parents=True, exist_ok=True)
        doc = session.store.export_hypertree()
        import json
        with open(path / f"{session.id}.json", "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2)

    @app.get("/problems")
    def list_problems():
        return [{"problem_id": r.problem_id, "description": r.description,
                 "goal_cdl": r.goal_cdl, "theorems": len(r.theorem_seqs)}
                for r in records]

    @app.post("/sessions", status_code=201, response_model=schemas.SessionState)
    def create_session(body: schemas.SessionCreate):
        if body.problem is not None:
            record = ProblemRecord.from_dict(body.problem.model_dump())
        elif body.problem_id is not None:
            record = by_id.get(body.problem_id)
            if record is None:
                raise HTTPException(status_code=404,
                                    detail=f"unknown problem {body.problem_id}")
        else:
            raise HTTPException(status_code=422,
                                detail="provide a problem or a problem_id")
        try:
            store = init_problem(kb, record.construction_cdl, record.text_cdl,
                                 record.goal_cdl)
        except Exception as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        sid = uuid.uuid4().hex[:12]
        session = Session(sid, record, store)
        sessions[sid] = session
        return state_of(session)

    @app.get("/sessions/{sid}", response_model=schemas.SessionState)
    def get_state(sid: str):
        return state_of(get_session(sid))

    @app.post("/sessions/{sid}/steps", response_model=schemas.StepReport)
    def apply_step(sid: str, body: schemas.StepRequest):
        session = get_session(sid)
        if not session.lock.acquire(blocking=False):
            raise HTTPException(status_code=409,
                                detail="a mutation is already in progress")
        try:
            if body.theorem not in kb.theorems:
                raise HTTPException(status_code=422,
                                    detail=f"unknown theorem {body.theorem!r}")
            reference = body.theorem
            if body.binding:
                reference = f"{body.theorem}({body.binding})"
            try:
                name, binding = parse_binding(kb, reference)
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            checkpoint = len(session.store.conditions)
            before_edges = len(session.store.export_hypertree()["edges"])
            report = interactive_apply(session.store, kb, name, binding)
            session.checkpoints.append(checkpoint)
            session.theorem_log.append(reference)
            write_snapshot(session)
            store = session.store
            new = [_condition_out(store, store.conditions[cid])
                   for cid in report.new_conditions]
            doc = store.export_hypertree()
            delta = schemas.HypertreeOut(
                nodes=[n for n in doc["nodes"]
                       if n["id"] in set(report.new_conditions)],
                edges=[schemas.HyperedgeOut(**e)
                       for e in doc["edges"][before_edges:]],
                goal=schemas.GoalOut(**doc["goal"]) if "goal" in doc else None)
            return schemas.StepReport(theorem=name, new_conditions=new,
                                      goal=_goal_out(store),
                                      hypertree_delta=delta)
        finally:
            session.lock.release()

    @app.post("/sessions/{sid}/undo", response_model=schemas.SessionState)
    def undo_step(sid: str):
        session = get_session(sid)
        if not session.lock.acquire(blocking=False):
            raise HTTPException(status_code=409,
                                detail="a mutation is already in progress")
        try:
            if not session.checkpoints:
                raise HTTPException(status_code=409, detail="nothing to undo")
            length = session.checkpoints.pop()
            session.store.truncate(length)
            if session.theorem_log:
                session.theorem_log.pop()
            write_snapshot(session)
            return state_of(session)
        finally:
            session.lock.release()

    @app.get("/sessions/{sid}/hypertree", response_model=schemas.HypertreeOut)
    def hypertree(sid: str):
        return _hypertree_out(get_session(sid).store)

    @app.get("/sessions/{sid}/theorems")
    def theorems(sid: str):
        return applicable_theorems(get_session(sid).store, kb)

    @app.post("/sessions/{sid}/search", response_model=schemas.SearchReport)
    def suggest(sid: str, body: schemas.SearchRequest):
        session = get_session(sid)
        if body.method not in ("forward", "backward"):
            raise HTTPException(status_code=422, detail="method is forward or backward")
        if body.strategy not in ("bfs", "dfs", "rs", "bs"):
            raise HTTPException(status_code=422, detail="unknown strategy")
        config = SearchConfig(method=body.method, strategy=body.strategy,
                              timeout=body.budget, max_depth=body.max_depth,
                              beam_size=body.beam_size, seed=body.seed)
        # Search runs on a copy: suggestions never mutate the session.
        store = session.store.copy()
        if body.budget <= 0:
            return schemas.SearchReport(outcome="unsolved", theorem_seqs=[],
                                        steps=0, elapsed=0.0)
        search = forward_search if body.method == "forward" else backward_search
        result = search(store, kb, config)
        return schemas.SearchReport(outcome=result.outcome,
                                    theorem_seqs=result.theorem_seqs,
                                    steps=result.steps,
                                    elapsed=round(result.elapsed, 3),
                                    answer=result.answer)

    import os
    ui_env = os.environ.get("GEOSOLVER_UI_DIR")
    ui_dir = Path(ui_env) if ui_env else (
        Path(__file__).resolve().parents[3] / "frontend" / "dist")
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index():
            return RedirectResponse("/ui/")

    return app
