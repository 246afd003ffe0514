import json
import math

import numpy as np
import pytest

from deskplan.bench import (
    RunConfig,
    RunResult,
    SearchSession,
    aggregate_ci,
    emit_report,
    render_csv,
    render_summary,
    run_matrix,
    run_one,
    summarize,
)
from deskplan.core import ConfigError
from deskplan.solver.engine import PlanBudget


def test_run_config_validation():
    config = RunConfig(scenario="loose1", solver="random", seed=0)
    assert config.budget() == PlanBudget(episodes=160)
    with pytest.raises(ConfigError):
        RunConfig(scenario="loose1", solver="random", seed=0, step_cap=0)
    with pytest.raises(ConfigError):
        RunConfig(
            scenario="loose1", solver="random", seed=0,
            budget_episodes=None, budget_ms=None,
        ).budget()


def test_session_rejects_unknown_solver():
    with pytest.raises(ConfigError):
        SearchSession("loose1", "alphazero", 0, PlanBudget(episodes=10))


def test_aggregate_ci_fixed_points():
    assert aggregate_ci([1.0, 1.0, 1.0, 1.0]) == (1.0, 0.0)
    mean, hw = aggregate_ci([0.0, 2.0])
    assert mean == 1.0
    assert hw == pytest.approx(1.96)


def test_aggregate_ci_normal_draws():
    rng = np.random.default_rng(0)
    values = rng.normal(0.0, 1.0, size=10_000).tolist()
    _, hw = aggregate_ci(values)
    assert abs(hw - 1.96 / 100.0) < 0.1 * (1.96 / 100.0)


def test_aggregate_ci_degenerate_inputs():
    with pytest.raises(ConfigError):
        aggregate_ci([])
    with pytest.warns(UserWarning):
        mean, hw = aggregate_ci([3.5])
    assert (mean, hw) == (3.5, 0.0)


def _result(scenario="loose1", solver="random", seed=0, steps=5, ret=1.25, success=True):
    return RunResult(
        scenario=scenario,
        solver=solver,
        seed=seed,
        steps=steps,
        discounted_return=ret,
        success=success,
        wallclock_ms=0.0,
    )


def test_render_csv_layout_and_order():
    rows = [
        _result(seed=1, ret=0.5),
        _result(solver="pomcp", seed=0, success=False),
        _result(seed=0),
    ]
    text = render_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "scenario,solver,seed,steps,discounted_return,success,wallclock_ms"
    assert lines[1] == "loose1,pomcp,0,5,1.25,false,0.0"
    assert lines[2] == "loose1,random,0,5,1.25,true,0.0"
    assert lines[3] == "loose1,random,1,5,0.5,true,0.0"
    assert text.endswith("\n")


def test_summarize_groups_and_rates():
    rows = [
        _result(seed=0, steps=4, ret=1.0),
        _result(seed=1, steps=6, ret=3.0, success=False),
        _result(solver="pomcp", seed=0, steps=10, ret=-1.0),
    ]
    summary = summarize(rows)
    random_block = summary["loose1"]["random"]
    assert random_block["mean_steps"] == 5.0
    assert random_block["mean_return"] == 2.0
    assert random_block["success_rate"] == 0.5
    assert summary["loose1"]["pomcp"]["success_rate"] == 1.0
    # single-seed groups degrade to zero half-width without warning noise
    assert summary["loose1"]["pomcp"]["ci95_return"] == 0.0
    parsed = json.loads(render_summary(rows))
    assert parsed == summary


def test_run_matrix_rejects_duplicate_seeds():
    with pytest.raises(ConfigError):
        run_matrix(["loose1"], ["random"], [3, 3])


def test_random_session_runs_to_completion():
    session = SearchSession(
        "loose1", "random", 11, PlanBudget(episodes=4), step_cap=6, n_particles=16
    )
    session.run()
    assert session.finished
    assert 1 <= session.step_index <= 6
    assert len(session.logs) == session.step_index
    assert len(session.rewards) == session.step_index
    with pytest.raises(ConfigError):
        session.step()


def test_run_one_zeroes_wallclock_under_episode_budgets():
    config = RunConfig(
        scenario="loose1", solver="random", seed=4, budget_episodes=4, step_cap=4,
        n_particles=16,
    )
    result = run_one(config)
    assert result.wallclock_ms == 0.0
    assert result.scenario == "loose1" and result.solver == "random"


def test_run_one_reports_wallclock_under_time_budgets():
    config = RunConfig(
        scenario="loose1", solver="random", seed=4, budget_episodes=None,
        budget_ms=20.0, step_cap=2, n_particles=16,
    )
    assert run_one(config).wallclock_ms > 0.0


def test_identical_configs_reproduce_identical_csv():
    def one_pass():
        results = run_matrix(
            ["loose1"],
            ["random", "pomcp"],
            [0, 1],
            budget_episodes=12,
            step_cap=4,
            n_particles=16,
            trials=8,
        )
        return render_csv(results)

    assert one_pass() == one_pass()


def test_emit_report_writes_both_files(tmp_path):
    rows = [_result(seed=0), _result(seed=1, ret=0.75)]
    csv_path, summary_path = emit_report(rows, tmp_path / "out")
    assert csv_path.read_text() == render_csv(rows)
    assert json.loads(summary_path.read_text()) == summarize(rows)
