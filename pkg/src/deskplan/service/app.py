"""FastAPI application wrapping sessions, benchmarks, and the filter.

Sessions live in process memory keyed by id; each owns its environment,
engine, and random streams, so concurrent sessions never share state.
"""

from __future__ import annotations

import uuid

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bench import SOLVERS, SearchSession, render_csv, run_matrix, summarize
from ..core import ConfigError, Declare, MoveConfig, Remove
from ..domain.scenario import builtin_scenario_names
from ..reuse import grow_tree
from ..scoring import FilterConfig, ScorePrediction, TableScorer, beta_star, filter_actions, score_candidates
from ..solver.engine import PlanBudget
from ..solver.tree import dump_tree, tree_size
from . import schemas


def _encode_action(action) -> schemas.ActionOut:
    if isinstance(action, MoveConfig):
        return schemas.ActionOut(kind="move", vector=list(action.vector))
    if isinstance(action, Declare):
        return schemas.ActionOut(kind="declare", index=action.index, claim=action.claim.value)
    if isinstance(action, Remove):
        return schemas.ActionOut(kind="remove", index=action.index)
    raise HTTPException(500, f"unencodable action {action!r}")


def _state(sid: str, session: SearchSession) -> schemas.SessionState:
    return schemas.SessionState(
        session_id=sid,
        scenario=session.scenario.name,
        solver=session.solver,
        seed=session.seed,
        step_index=session.step_index,
        terminal=session.terminal,
        finished=session.finished,
        objects_known=len(session.env.estimates),
        rewards=list(session.rewards),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="deskplan", version=__version__)
    sessions: dict[str, SearchSession] = {}

    def _session(sid: str) -> SearchSession:
        try:
            return sessions[sid]
        except KeyError:
            raise HTTPException(404, f"no session {sid}") from None

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/scenarios")
    def scenarios() -> dict:
        return {"builtin": list(builtin_scenario_names()), "solvers": list(SOLVERS)}

    @app.post("/sessions", response_model=schemas.SessionState)
    def create_session(req: schemas.SessionRequest) -> schemas.SessionState:
        try:
            budget = PlanBudget(episodes=req.budget_episodes, ms=req.budget_ms)
            session = SearchSession(
                req.scenario, req.solver, req.seed, budget,
                step_cap=req.step_cap, n_particles=req.n_particles,
            )
        except (ConfigError, OSError) as exc:
            raise HTTPException(400, str(exc)) from exc
        sid = uuid.uuid4().hex[:12]
        sessions[sid] = session
        return _state(sid, session)

    @app.get("/sessions/{sid}", response_model=schemas.SessionState)
    def get_session(sid: str) -> schemas.SessionState:
        return _state(sid, _session(sid))

    @app.delete("/sessions/{sid}")
    def delete_session(sid: str) -> dict:
        _session(sid)
        del sessions[sid]
        return {"deleted": sid}

    @app.post("/sessions/{sid}/step", response_model=schemas.StepResponse)
    def step_session(sid: str) -> schemas.StepResponse:
        session = _session(sid)
        if session.finished:
            raise HTTPException(409, "session already finished")
        log = session.step()
        return schemas.StepResponse(
            session_id=sid,
            step=log.index,
            action=_encode_action(log.action),
            reward=log.reward,
            illegal=log.illegal,
            terminal=log.terminal,
            finished=session.finished,
            reasonable_rank=log.reasonable_rank,
            plan_episodes=log.plan_episodes,
        )

    @app.get("/sessions/{sid}/tree", response_model=schemas.TreeSummary)
    def tree_summary(sid: str) -> schemas.TreeSummary:
        session = _session(sid)
        if session.engine is None:
            raise HTTPException(409, f"solver {session.solver} keeps no search tree")
        if session.engine.tree is None and session.engine.history:
            # same deterministic rebuild the next step would perform
            grow_tree(session.engine, session.engine.history)
        if session.engine.tree is None:
            raise HTTPException(409, "no tree yet; step the session first")
        root = session.engine.tree
        beliefs, actions = tree_size(root)
        return schemas.TreeSummary(
            session_id=sid, belief_nodes=beliefs, action_nodes=actions, dump=dump_tree(root)
        )

    @app.post("/bench/runs", response_model=schemas.BenchResponse)
    def bench_runs(req: schemas.BenchRequest) -> schemas.BenchResponse:
        try:
            results = run_matrix(
                req.scenarios, req.solvers, req.seeds,
                budget_episodes=req.budget_episodes, budget_ms=req.budget_ms,
                step_cap=req.step_cap, n_particles=req.n_particles,
                workers=req.workers,
            )
        except (ConfigError, OSError) as exc:
            raise HTTPException(400, str(exc)) from exc
        rows = [schemas.RunRow(**r.__dict__) for r in results]
        return schemas.BenchResponse(rows=rows, csv=render_csv(results), summary=summarize(results))

    @app.post("/actions/filter", response_model=schemas.FilterResponse)
    def filter_endpoint(req: schemas.FilterRequest) -> schemas.FilterResponse:
        try:
            scorer = TableScorer(
                np.asarray(req.table.points), np.asarray(req.table.means),
                np.asarray(req.table.stds),
            )
            config = FilterConfig(
                confidence=req.confidence, min_mean=req.min_mean, max_kept=req.max_kept,
                n_candidates=max(len(req.candidates), 1),
            )
            vectors = np.asarray(req.candidates, dtype=float)
            if vectors.ndim != 2 or len(vectors) == 0:
                raise ConfigError("candidates must be a non-empty list of vectors")
            predictions = score_candidates(scorer, vectors)
            kept, kept_preds = filter_actions(vectors, predictions, config)
        except ConfigError as exc:
            raise HTTPException(400, str(exc)) from exc
        return schemas.FilterResponse(
            kept=[list(map(float, v)) for v in kept],
            means=[p.mean for p in kept_preds],
            stds=[p.std for p in kept_preds],
            beta=beta_star(1.0 - config.confidence),
        )

    return app


app = create_app()
