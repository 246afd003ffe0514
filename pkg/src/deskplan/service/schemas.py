"""Request/response bodies for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class SessionRequest(BaseModel):
    scenario: str = Field(description="Builtin scenario name or a YAML file path")
    solver: str = "gnpf-kct"
    seed: int = 0
    budget_episodes: int | None = 160
    budget_ms: float | None = None
    step_cap: int = 50
    n_particles: int = 100


class ActionOut(BaseModel):
    kind: Literal["move", "declare", "remove"]
    vector: list[float] | None = None
    index: int | None = None
    claim: Literal["target", "obstacle"] | None = None


class SessionState(BaseModel):
    session_id: str
    scenario: str
    solver: str
    seed: int
    step_index: int
    terminal: bool
    finished: bool
    objects_known: int
    rewards: list[float]


class StepResponse(BaseModel):
    session_id: str
    step: int
    action: ActionOut
    reward: float
    illegal: bool
    terminal: bool
    finished: bool
    reasonable_rank: int
    plan_episodes: int


class TreeSummary(BaseModel):
    session_id: str
    belief_nodes: int
    action_nodes: int
    dump: str


class BenchRequest(BaseModel):
    scenarios: list[str]
    solvers: list[str]
    seeds: list[int]
    budget_episodes: int | None = 160
    budget_ms: float | None = None
    step_cap: int = 50
    n_particles: int = 100
    workers: int | None = None


class RunRow(BaseModel):
    scenario: str
    solver: str
    seed: int
    steps: int
    discounted_return: float
    success: bool
    wallclock_ms: float


class BenchResponse(BaseModel):
    rows: list[RunRow]
    csv: str
    summary: dict


class ScorerTable(BaseModel):
    """Inline nearest-neighbour scorer: one row per reference point."""

    points: list[list[float]]
    means: list[float]
    stds: list[float]


class FilterRequest(BaseModel):
    candidates: list[list[float]]
    table: ScorerTable
    confidence: float = 0.9
    min_mean: float = 0.10
    max_kept: int = 128


class FilterResponse(BaseModel):
    kept: list[list[float]]
    means: list[float]
    stds: list[float]
    beta: float
