"""Reference solvers built on the shared tree-search engine.

The discrete and progressive-widening baselines are the same engine in
a different action regime, which keeps the comparison honest: episode
flow, backups, and rollouts are byte-for-byte shared code.  The two
policy baselines skip tree search entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    Claim,
    ConfigError,
    Declare,
    HybridAction,
    MoveConfig,
    ParticleBelief,
    ProblemConfig,
    Remove,
)
from .domain.gridworld import Workspace
from .domain.model import ActionBox, Region, declare_passes, random_action, sample_config
from .domain.types import (
    GUESSED_INDEX,
    STATUS_OBSTACLE,
    STATUS_TARGET,
    STATUS_UPDATING,
    DomainParams,
    WorldState,
)
from .scoring import Scorer, score_candidates
from .solver.engine import SolverParams, TreeSearchSolver


@dataclass(frozen=True)
class WideningParams:
    """Progressive-widening constants.

    Only the action side is consumed: observation branching is already
    bounded by the discrete grid-label space, so ``k_o``/``alpha_o``
    are accepted for interface parity but never read.
    """

    k_a: float = 2.0
    alpha_a: float = 0.5
    k_o: float = 4.0
    alpha_o: float = 0.25


def discrete_move_grid(
    box: ActionBox,
    regions: Sequence[Region],
    workspaces: Sequence[Workspace],
    n_poses: int = 4,
    n_lifts: int = 3,
) -> list[MoveConfig]:
    """Fixed viewpoint grid: base poses x lifts x a 3x3 pan/tilt head.

    Poses spread round-robin over the candidate regions, evenly spaced
    along each region's x axis, with yaw facing the nearest workspace
    center.  Lift, pan, and tilt each span their box range.
    """
    if not regions:
        raise ConfigError("discrete grid needs at least one candidate region")
    if not workspaces:
        raise ConfigError("discrete grid needs at least one workspace")
    if box.dim != 6:
        raise ConfigError("discrete grid expects a 6-d action box")

    uses = [0] * len(regions)
    for i in range(n_poses):
        uses[i % len(regions)] += 1
    centers = [
        ((w.x_min + w.x_max) / 2.0, (w.y_min + w.y_max) / 2.0) for w in workspaces
    ]

    poses = []
    seen = [0] * len(regions)
    for i in range(n_poses):
        ri = i % len(regions)
        region = regions[ri]
        seen[ri] += 1
        frac = seen[ri] / (uses[ri] + 1)
        x = region.x_min + frac * (region.x_max - region.x_min)
        y = (region.y_min + region.y_max) / 2.0
        cx, cy = min(centers, key=lambda c: (c[0] - x) ** 2 + (c[1] - y) ** 2)
        yaw = math.atan2(cy - y, cx - x)
        poses.append((x, y, yaw))

    lifts = np.linspace(box.low[3], box.high[3], n_lifts)
    pans = np.linspace(box.low[4], box.high[4], 3)
    tilts = np.linspace(box.low[5], box.high[5], 3)
    actions = []
    for x, y, yaw in poses:
        for lift in lifts:
            for pan in pans:
                for tilt in tilts:
                    vector = box.clip(
                        np.array([x, y, yaw, float(lift), float(pan), float(tilt)])
                    )
                    actions.append(MoveConfig(tuple(vector)))
    return actions


def pomcp_solver(
    model,
    problem: ProblemConfig,
    actions: Sequence[HybridAction],
    rng: np.random.Generator,
    omega1: float = math.sqrt(2.0),
    rollout_depth: int = 8,
) -> TreeSearchSolver:
    """Plain discrete MCTS over a fixed action list."""
    params = SolverParams(
        omega1=omega1, omega2=0.0, refinement=False, rollout_depth=rollout_depth
    )
    return TreeSearchSolver(
        model, problem, params=params, rng=rng, mode="fixed", fixed_actions=actions
    )


def pomcpow_solver(
    model,
    problem: ProblemConfig,
    rng: np.random.Generator,
    widening: WideningParams | None = None,
    omega1: float = math.sqrt(2.0),
    rollout_depth: int = 8,
) -> TreeSearchSolver:
    """Progressive widening over the continuous space: each belief node
    admits new point actions as its visit count grows."""
    widening = widening or WideningParams()
    params = SolverParams(
        omega1=omega1,
        omega2=0.0,
        refinement=False,
        rollout_depth=rollout_depth,
        k_widen=widening.k_a,
        alpha_widen=widening.alpha_a,
    )
    return TreeSearchSolver(model, problem, params=params, rng=rng, mode="widening")


def random_policy(
    belief: ParticleBelief,
    params: DomainParams,
    box: ActionBox,
    regions: Sequence[Region],
    rng: np.random.Generator,
) -> HybridAction:
    """The rollout heuristic used as a solver: occasional legal
    declarations or removals, otherwise a random configuration."""
    particle = belief.particles[int(rng.integers(len(belief.particles)))]
    return random_action(particle, params, box, regions, rng)


def npf_g_policy(
    belief: ParticleBelief,
    scorer: Scorer,
    params: DomainParams,
    box: ActionBox,
    regions: Sequence[Region],
    rng: np.random.Generator,
    mu_min: float = 0.2,
    n_candidates: int = 128,
) -> HybridAction:
    """Greedy one-step policy without a tree.

    Discrete first: remove a declared target, declare whatever passes a
    threshold, clear declared obstacles.  Otherwise move to the scored
    candidate with the best signal-to-noise ratio among those whose
    predicted mean clears ``mu_min``, or the best mean when none does.
    """
    state: WorldState = belief.particles[0]

    def eligible():
        for i, obj in enumerate(state.objects):
            if i != GUESSED_INDEX:
                yield i, obj

    for i, obj in eligible():
        if obj.u == STATUS_TARGET:
            return Remove(i)
    for i, obj in eligible():
        if obj.u == STATUS_UPDATING and declare_passes(obj, Claim.TARGET, params):
            return Declare(i, Claim.TARGET)
    for i, obj in eligible():
        if obj.u == STATUS_UPDATING and declare_passes(obj, Claim.OBSTACLE, params):
            return Declare(i, Claim.OBSTACLE)
    for i, obj in eligible():
        if obj.u == STATUS_OBSTACLE and obj.m > 0.0:
            return Remove(i)

    vectors = np.stack([sample_config(box, regions, rng) for _ in range(n_candidates)])
    predictions = score_candidates(scorer, vectors)

    def snr(i: int) -> float:
        p = predictions[i]
        return p.mean / p.std if p.std > 0.0 else math.inf

    cleared = [i for i, p in enumerate(predictions) if p.mean >= mu_min]
    if cleared:
        best = max(cleared, key=lambda i: (snr(i), -i))
    else:
        best = max(range(len(predictions)), key=lambda i: (predictions[i].mean, -i))
    return MoveConfig(tuple(vectors[best]))
