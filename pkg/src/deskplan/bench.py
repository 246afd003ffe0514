"""Seeded benchmark harness: step loop, run matrix, and reports.

Every run derives four independent random streams (environment,
planning, belief, execution) from one seed, so identical configurations
reproduce identical trajectories byte for byte.  Reported wall-clock
times are zeroed under episode budgets for the same reason: the CSV
must not change between machines.
"""

from __future__ import annotations

import json
import statistics
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import (
    discrete_move_grid,
    npf_g_policy,
    pomcp_solver,
    pomcpow_solver,
    random_policy,
)
from .core import ConfigError, HybridAction, ParticleBelief, ProblemConfig, discounted_return
from .domain.environment import GroundTruthEnv
from .domain.model import ObjectSearchModel
from .domain.scenario import ScenarioSpec, load_scenario
from .domain.types import GUESSED_INDEX, STATUS_REMOVED, STATUS_UPDATING
from .reuse import cut_observation, cutting, grow_tree, replay_extend, strip_hypothesis
from .scoring import FilterConfig, OracleScorer
from .solver.engine import PlanBudget, PlanResult, SolverParams, TreeSearchSolver
from .solver.tree import HistoryTuple

SOLVERS = ("gnpf-kct", "pomcp", "pomcpow", "random", "npf-g")

_POLICY_RETRIES = 8


@dataclass(frozen=True)
class RunConfig:
    """One benchmark cell: a scenario, a solver, and a seed."""

    scenario: str
    solver: str
    seed: int
    budget_episodes: int | None = 160
    budget_ms: float | None = None
    step_cap: int = 50
    n_particles: int = 100
    trials: int = 64

    def __post_init__(self) -> None:
        if self.step_cap < 1:
            raise ConfigError("step_cap must be at least 1")

    def budget(self) -> PlanBudget:
        return PlanBudget(episodes=self.budget_episodes, ms=self.budget_ms)


@dataclass(frozen=True)
class StepLog:
    index: int
    action: HybridAction
    reward: float
    illegal: bool
    terminal: bool
    reasonable_rank: int
    plan_episodes: int


@dataclass(frozen=True)
class RunResult:
    scenario: str
    solver: str
    seed: int
    steps: int
    discounted_return: float
    success: bool
    wallclock_ms: float


class SearchSession:
    """Drives one solver through one environment, step by step.

    The loop per step: thread any newly detected objects through the
    surviving episode records and regrow the tree, refresh the root
    belief from the environment's estimates and grid world, plan (or
    ask the policy), screen ranked actions for reasonability, execute,
    then filter the belief and cut records against what really
    happened.
    """

    def __init__(
        self,
        scenario: ScenarioSpec | str,
        solver: str,
        seed: int,
        budget: PlanBudget,
        step_cap: int = 50,
        n_particles: int = 100,
        trials: int = 64,
    ):
        if solver not in SOLVERS:
            raise ConfigError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
        if isinstance(scenario, str):
            scenario = load_scenario(scenario)
        self.scenario = scenario
        self.solver = solver
        self.seed = seed
        self.budget = budget
        self.step_cap = step_cap
        self.trials = trials
        self.params = scenario.params
        self.box = scenario.action_box
        self.regions = scenario.candidate_regions

        master = np.random.default_rng(seed)
        self.env_rng, self.plan_rng, self.belief_rng, self.exec_rng = master.spawn(4)

        self.env = GroundTruthEnv(scenario, self.env_rng)
        self.model = ObjectSearchModel(self.params, self.box, self.regions)
        self.problem = ProblemConfig(n_particles=n_particles)
        self.engine = self._build_engine()

        self.known_count = len(self.env.estimates)
        self.belief: ParticleBelief | None = None
        self.step_index = 0
        self.rewards: list[float] = []
        self.logs: list[StepLog] = []

    def _build_engine(self) -> TreeSearchSolver | None:
        if self.solver == "gnpf-kct":
            # a tighter keep cap concentrates the k-center spheres around
            # the best-scored poses; 128 spreads them too thin at desk scale
            return TreeSearchSolver(
                self.model, self.problem, params=SolverParams(), rng=self.plan_rng,
                mode="spheres", filter_config=FilterConfig(max_kept=48),
            )
        if self.solver == "pomcp":
            grid = discrete_move_grid(self.box, self.regions, self.scenario.workspaces)
            return pomcp_solver(self.model, self.problem, grid, self.plan_rng)
        if self.solver == "pomcpow":
            return pomcpow_solver(self.model, self.problem, self.plan_rng)
        return None

    @property
    def terminal(self) -> bool:
        return self.env.terminal

    @property
    def finished(self) -> bool:
        return self.env.terminal or self.step_index >= self.step_cap

    def _live_candidate(self) -> int | None:
        """Estimate with clear positive corner evidence, if any.

        Obstacle looks only push evidence negative, so one clearly
        positive corner marks a target candidate; inspection should then
        chase its still-unobserved corners rather than generic coverage.
        """
        best, best_peak = None, self.params.nu_pos
        for i, obj in enumerate(self.env.estimates):
            if i == GUESSED_INDEX or obj.u != STATUS_UPDATING:
                continue
            peak = max(obj.g)
            if peak > best_peak:
                best, best_peak = i, peak
        return best

    def _scorer(self) -> OracleScorer:
        candidate = self._live_candidate()
        # the inspected object must not occlude its own corner views
        obstacles = [
            o
            for i, o in enumerate(self.env.estimates)
            if i != GUESSED_INDEX and i != candidate and o.u != STATUS_REMOVED
        ]
        if candidate is None:
            guessed_g = (self.params.g_reinit,) * 8
        else:
            # corners still short of the declare gate count as unseen so
            # candidate poses keep chasing them until a claim can pass
            need = self.params.declare_target
            guessed_g = tuple(
                0.0 if g <= need else 1.0 for g in self.env.estimates[candidate].g
            )
        return OracleScorer(
            self.env.grid,
            obstacles,
            guessed_g=guessed_g,
            params=self.params,
            rng=self.plan_rng,
            trials=self.trials,
        )

    def _choose(self, result: PlanResult) -> tuple[int, HybridAction, int]:
        """First ranked action that passes the environment's screen;
        the best-valued one anyway when nothing does."""
        first: tuple[int, HybridAction] | None = None
        for rank, entry in enumerate(result.ranked):
            action = self.engine.concrete_action(entry.payload, self.exec_rng)
            if first is None:
                first = (entry.action_id, action)
            if self.env.reasonable(action):
                return entry.action_id, action, rank
        return first[0], first[1], -1

    def _policy_action(self) -> HybridAction:
        action = None
        for _ in range(_POLICY_RETRIES):
            if self.solver == "random":
                action = random_policy(
                    self.belief, self.params, self.box, self.regions, self.plan_rng
                )
            else:
                action = npf_g_policy(
                    self.belief, self._scorer(), self.params, self.box, self.regions,
                    self.plan_rng,
                )
            if self.env.reasonable(action):
                return action
        return action

    def step(self) -> StepLog:
        if self.finished:
            raise ConfigError("session finished; no further steps possible")
        env = self.env

        # thread newly detected objects through the surviving records
        additions = list(env.estimates[self.known_count:])
        if self.engine is not None:
            if additions and self.engine.history:
                replayed = replay_extend(
                    self.engine.history, additions, self.params, self.plan_rng,
                    time_budget_ms=self.budget.ms,
                )
                grow_tree(self.engine, replayed)
            elif additions:
                self.engine.adopt_tree(None, HistoryTuple())
            elif self.engine.tree is None and self.engine.history:
                grow_tree(self.engine, self.engine.history)
        self.known_count = len(env.estimates)

        # root belief: shared estimates plus per-particle guessed target
        self.belief = ParticleBelief(
            env.belief_particles(self.problem.n_particles, self.belief_rng)
        )

        action_id: int | None = None
        rank = -1
        plan_episodes = 0
        if self.engine is not None:
            scorer = self._scorer() if self.solver == "gnpf-kct" else None
            result = self.engine.plan(self.belief, self.budget, scorer=scorer)
            plan_episodes = result.episodes
            action_id, action, rank = self._choose(result)
        else:
            action = self._policy_action()

        outcome = env.execute_real(action)
        self.rewards.append(outcome.reward)
        self.step_index += 1

        if self.engine is not None and not outcome.terminal:
            cut_key = cut_observation(outcome.observation.key(), self.known_count)
            self.belief = self.engine.filter_belief(
                self.belief, action_id, action, cut_key, self.belief_rng
            )
            self.engine.history = cutting(
                self.engine.history, action_id, cut_key, normalize=strip_hypothesis
            )

        log = StepLog(
            index=self.step_index - 1,
            action=action,
            reward=outcome.reward,
            illegal=outcome.illegal,
            terminal=outcome.terminal,
            reasonable_rank=rank,
            plan_episodes=plan_episodes,
        )
        self.logs.append(log)
        return log

    def run(self) -> None:
        while not self.finished:
            self.step()


def run_one(config: RunConfig) -> RunResult:
    """Execute one benchmark cell to termination or the step cap."""
    session = SearchSession(
        config.scenario,
        config.solver,
        config.seed,
        config.budget(),
        step_cap=config.step_cap,
        n_particles=config.n_particles,
        trials=config.trials,
    )
    started = time.perf_counter()
    session.run()
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    # zeroed under episode budgets so reports stay machine-independent
    wallclock = 0.0 if config.budget_episodes is not None else elapsed_ms
    return RunResult(
        scenario=session.scenario.name,
        solver=config.solver,
        seed=config.seed,
        steps=session.step_index,
        discounted_return=discounted_return(session.rewards, session.problem.gamma),
        success=session.terminal,
        wallclock_ms=wallclock,
    )


def run_matrix(
    scenarios: Sequence[str],
    solvers: Sequence[str],
    seeds: Sequence[int],
    budget_episodes: int | None = 160,
    budget_ms: float | None = None,
    step_cap: int = 50,
    n_particles: int = 100,
    trials: int = 64,
    workers: int | None = None,
) -> list[RunResult]:
    """Run every (scenario, solver, seed) cell; optionally in processes.

    Results come back sorted by (scenario, solver, seed) regardless of
    completion order, so reports are stable.
    """
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be unique")
    configs = [
        RunConfig(
            scenario=sc,
            solver=so,
            seed=seed,
            budget_episodes=budget_episodes,
            budget_ms=budget_ms,
            step_cap=step_cap,
            n_particles=n_particles,
            trials=trials,
        )
        for sc in scenarios
        for so in solvers
        for seed in seeds
    ]
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, configs))
    else:
        results = [run_one(c) for c in configs]
    return sorted(results, key=lambda r: (r.scenario, r.solver, r.seed))


def aggregate_ci(values: Sequence[float]) -> tuple[float, float]:
    """Mean and 95% CI half-width (normal approximation, 1.96 s/sqrt n).

    Fewer than two values cannot support a spread estimate; the
    half-width degrades to 0 with a warning.
    """
    if not values:
        raise ConfigError("aggregate_ci needs at least one value")
    if len(values) < 2:
        warnings.warn("aggregate_ci over fewer than 2 values; half-width is 0")
        return float(values[0]), 0.0
    return statistics.mean(values), 1.96 * statistics.stdev(values) / len(values) ** 0.5


def summarize(results: Sequence[RunResult]) -> dict:
    """Per (scenario, solver) aggregate block for summary.json."""
    grouped: dict[tuple[str, str], list[RunResult]] = {}
    for r in results:
        grouped.setdefault((r.scenario, r.solver), []).append(r)
    summary: dict = {}
    for (scenario, solver), rows in sorted(grouped.items()):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            mean_return, ci_return = aggregate_ci([r.discounted_return for r in rows])
            mean_steps, ci_steps = aggregate_ci([float(r.steps) for r in rows])
        summary.setdefault(scenario, {})[solver] = {
            "mean_return": mean_return,
            "ci95_return": ci_return,
            "mean_steps": mean_steps,
            "ci95_steps": ci_steps,
            "success_rate": sum(1 for r in rows if r.success) / len(rows),
        }
    return summary


_CSV_HEADER = "scenario,solver,seed,steps,discounted_return,success,wallclock_ms"


def render_csv(results: Sequence[RunResult]) -> str:
    lines = [_CSV_HEADER]
    for r in sorted(results, key=lambda r: (r.scenario, r.solver, r.seed)):
        lines.append(
            f"{r.scenario},{r.solver},{r.seed},{r.steps},"
            f"{r.discounted_return!r},{'true' if r.success else 'false'},{r.wallclock_ms!r}"
        )
    return "\n".join(lines) + "\n"


def render_summary(results: Sequence[RunResult]) -> str:
    return json.dumps(summarize(results), sort_keys=True, indent=2) + "\n"


def emit_report(results: Sequence[RunResult], out_dir: str | Path) -> tuple[Path, Path]:
    """Write results.csv and summary.json; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    summary_path = out / "summary.json"
    csv_path.write_text(render_csv(results))
    summary_path.write_text(render_summary(results))
    return csv_path, summary_path
