"""Request and response models for the session API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ProblemIn(BaseModel):
    problem_id: int = 0
    description: str = ""
    construction_cdl: list[str]
    text_cdl: list[str] = Field(default_factory=list)
    goal_cdl: str
    theorem_seqs: list[str] = Field(default_factory=list)


class SessionCreate(BaseModel):
    problem: Optional[ProblemIn] = None
    problem_id: Optional[int] = None  # bundled problem lookup


class ConditionOut(BaseModel):
    id: int
    predicate: str
    item: str
    premises: list[int]
    theorem: str


class GoalOut(BaseModel):
    kind: str
    payload: str
    status: str
    answer: Optional[str] = None
    premises: list[int] = Field(default_factory=list)


class HyperedgeOut(BaseModel):
    theorem: str
    premises: list[int]
    conclusions: list[int]


class HypertreeOut(BaseModel):
    nodes: list[dict]
    edges: list[HyperedgeOut]
    goal: Optional[GoalOut] = None


class SessionState(BaseModel):
    session_id: str
    problem_id: int
    conditions: list[ConditionOut]
    goal: GoalOut
    applicable_theorems: list[str]
    theorem_log: list[str]
    hypertree: HypertreeOut


class StepRequest(BaseModel):
    theorem: str
    binding: Optional[str] = None  # point groups, e.g. "M,AB"


class StepReport(BaseModel):
    theorem: str
    new_conditions: list[ConditionOut]
    goal: GoalOut
    hypertree_delta: HypertreeOut


class SearchRequest(BaseModel):
    method: str = "forward"
    strategy: str = "bfs"
    budget: float = 10.0  # seconds
    max_depth: int = 15
    beam_size: int = 20
    seed: int = 0


class SearchReport(BaseModel):
    outcome: str
    theorem_seqs: list[str]
    steps: int
    elapsed: float
    answer: Optional[str] = None


class ErrorBody(BaseModel):
    detail: str
