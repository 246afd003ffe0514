"""Hypersphere-based Monte-Carlo tree search over belief nodes.

One engine drives three action regimes.  ``spheres`` keeps a clustered
set of candidate hyperspheres that every belief node shares and that
visit counts can split into tighter child spheres.  ``fixed`` walks a
static action list.  ``widening`` grows each node's list progressively
with zero-radius spheres.  All regimes share episode simulation,
selection, backup, rollout, and record bookkeeping, so solvers built
on different regimes differ only in how action lists come to be.

The model driving the search is duck-typed and needs:

* ``step(state, action, rng) -> StepOutcome`` with a hashable
  ``observation`` key,
* ``rollout_action(state, rng)`` for the rollout heuristic,
* ``discrete_actions(state)`` for state-dependent discrete actions,
* ``decode_continuous(vector)`` plus a ``box`` attribute with
  ``low``/``high`` arrays whenever continuous actions are in play,
* ``sample_candidate(rng)`` for candidate generation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..clustering import Hypersphere, elbow_k, enclose, kmeans, medoid, sample_in_hypersphere
from ..core import ConfigError, HybridAction, ParticleBelief, ProblemConfig, resample
from ..scoring import FilterConfig, Scorer, filter_actions, score_candidates
from .tree import (
    ActionNode,
    BeliefNode,
    EpisodeRecord,
    HistoryTuple,
    StepRecord,
    rebase_depths,
)

_MODES = ("spheres", "fixed", "widening")
_BACKUPS = ("monte-carlo", "bellman")
_F_OPTIONS = ("zero", "identity")


@dataclass(frozen=True)
class SolverParams:
    """Search constants.

    ``omega1`` weighs exploration, ``omega2`` rewards wide spheres,
    ``omega3`` weighs the belief-distance bonus when ``f_option`` is
    ``identity``.  ``c_r`` overrides the visit threshold scale for
    refinement; left ``None`` it is derived from the initial sphere
    set.  ``omega_bar1``/``omega_bar2`` bracket child sphere ranges as
    fractions of the parent, and ``d_lim`` is the range below which
    spheres are never split.
    """

    omega1: float = math.sqrt(2.0)
    omega2: float = math.sqrt(2.0)
    omega3: float = 1.0
    f_option: str = "zero"
    backup: str = "monte-carlo"
    refinement: bool = True
    k_refine: int = 3
    c_r: float | None = None
    d_lim: float = 0.2
    omega_bar1: float = 0.6
    omega_bar2: float = 0.3
    rollout_depth: int = 8
    elbow_range: tuple[int, int] = (4, 12)
    k_widen: float = 2.0
    alpha_widen: float = 0.5

    def __post_init__(self) -> None:
        if self.f_option not in _F_OPTIONS:
            raise ConfigError(f"f_option must be one of {_F_OPTIONS}, got {self.f_option!r}")
        if self.backup not in _BACKUPS:
            raise ConfigError(f"backup must be one of {_BACKUPS}, got {self.backup!r}")
        if self.k_refine < 2:
            raise ConfigError("k_refine must be at least 2")
        if self.d_lim <= 0.0:
            raise ConfigError("d_lim must be positive")
        if not 0.0 < self.omega_bar2 <= self.omega_bar1 < 1.0:
            raise ConfigError("need 0 < omega_bar2 <= omega_bar1 < 1")
        if self.c_r is not None and self.c_r <= 0.0:
            raise ConfigError("c_r must be positive when given")
        if self.rollout_depth < 0:
            raise ConfigError("rollout_depth must be non-negative")
        k_min, k_max = self.elbow_range
        if not 1 <= k_min <= k_max:
            raise ConfigError("elbow_range must satisfy 1 <= k_min <= k_max")
        if self.k_widen <= 0.0 or not 0.0 <= self.alpha_widen <= 1.0:
            raise ConfigError("widening needs k_widen > 0 and alpha_widen in [0, 1]")


def f_lim(child_range: float, parent_range: float, params: SolverParams) -> float:
    """Admissible range for a child sphere split off a parent.

    The raw enclosing range is clamped between ``omega_bar2`` and
    ``omega_bar1`` times the parent's range (children must shrink, but
    not collapse), then floored at ``d_lim`` so no sphere ever drops
    below the refinement limit.
    """
    lo = params.omega_bar2 * parent_range
    hi = params.omega_bar1 * parent_range
    clamped = min(max(child_range, lo), hi)
    return max(clamped, params.d_lim)


@dataclass(frozen=True)
class PlanBudget:
    """Per-call search budget: an episode count or a wall-clock slice."""

    episodes: int | None = None
    ms: float | None = None

    def __post_init__(self) -> None:
        if (self.episodes is None) == (self.ms is None):
            raise ConfigError("budget needs exactly one of episodes/ms")
        if self.episodes is not None and self.episodes < 1:
            raise ConfigError("episode budget must be positive")
        if self.ms is not None and self.ms <= 0.0:
            raise ConfigError("time budget must be positive")


@dataclass(frozen=True)
class ActionScaler:
    """Maps box coordinates to [-1, 1] per dimension and back.

    Spheres live in the scaled space so that one radius means the same
    fraction of travel in every dimension.
    """

    low: np.ndarray
    high: np.ndarray
    center: np.ndarray = field(init=False, repr=False)
    half: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        low = np.asarray(self.low, dtype=float)
        high = np.asarray(self.high, dtype=float)
        if low.shape != high.shape or low.ndim != 1:
            raise ConfigError("scaler bounds must be matching 1-d arrays")
        if np.any(high <= low):
            raise ConfigError("scaler needs high > low in every dimension")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "center", (low + high) / 2.0)
        object.__setattr__(self, "half", (high - low) / 2.0)

    @classmethod
    def from_box(cls, box: Any) -> "ActionScaler":
        return cls(low=np.asarray(box.low, dtype=float), high=np.asarray(box.high, dtype=float))

    def scale(self, vector: np.ndarray) -> np.ndarray:
        return (np.asarray(vector, dtype=float) - self.center) / self.half

    def unscale(self, point: np.ndarray) -> np.ndarray:
        return np.asarray(point, dtype=float) * self.half + self.center


@dataclass(frozen=True)
class RankedAction:
    """Root action summary, used for preference-ordered execution."""

    action_id: int
    payload: Any
    q_value: float
    n_visits: int


@dataclass
class PlanResult:
    action_id: int
    payload: Any
    ranked: list[RankedAction]
    episodes: int
    root_value: float


@dataclass
class _EpisodeCtx:
    steps: list[StepRecord]
    states: list[Any]
    rewards: list[float]
    dim_r: int | None = None


class TreeSearchSolver:
    """Episode-driven tree search with a persistent, reusable tree.

    The tree and the episode records survive across :meth:`plan` calls;
    :meth:`filter_belief` promotes the branch matching the executed
    action and received observation so later searches start warm.
    """

    def __init__(
        self,
        model: Any,
        problem: ProblemConfig,
        params: SolverParams | None = None,
        rng: np.random.Generator | None = None,
        mode: str = "spheres",
        fixed_actions: Sequence[HybridAction] = (),
        filter_config: FilterConfig | None = None,
    ):
        if mode not in _MODES:
            raise ConfigError(f"mode must be one of {_MODES}, got {mode!r}")
        if mode == "fixed" and not fixed_actions:
            raise ConfigError("fixed mode needs a non-empty action list")
        self.model = model
        self.problem = problem
        self.params = params or SolverParams()
        self.rng = rng if rng is not None else np.random.default_rng()
        self.mode = mode
        self.fixed_actions = list(fixed_actions)
        self.filter_config = filter_config or FilterConfig()

        box = getattr(model, "box", None)
        self.scaler = ActionScaler.from_box(box) if box is not None else None
        if mode in ("spheres", "widening") and self.scaler is None:
            raise ConfigError(f"{mode} mode needs a model with an action box")

        self.tree: BeliefNode | None = None
        self.history = HistoryTuple()
        self.initial_spheres: list[Hypersphere] = []
        self._generation = 0
        self._next_eid = 0
        self._c_r = self.params.c_r

    # -- sphere bookkeeping -------------------------------------------------

    def set_initial_spheres(self, spheres: Sequence[Hypersphere]) -> None:
        """Install the shared candidate spheres and refresh the
        refinement scale.  Existing tree nodes pick them up lazily."""
        self.initial_spheres = list(spheres)
        self._generation += 1
        if self.params.c_r is not None:
            self._c_r = self.params.c_r
            return
        ranges = [s.range for s in self.initial_spheres]
        mean_range = sum(ranges) / len(ranges) if ranges else 0.0
        if mean_range <= 0.0:
            self._c_r = None
        else:
            self._c_r = 1.0 / (0.4 * self.problem.n_particles * mean_range**2)

    def _refresh_spheres(self, scorer: Scorer) -> None:
        fc = self.filter_config
        vectors = np.stack(
            [self.model.sample_candidate(self.rng) for _ in range(fc.n_candidates)]
        )
        predictions = score_candidates(scorer, vectors)
        kept, _ = filter_actions(vectors, predictions, fc)
        scaled = self.scaler.scale(kept)
        n = len(scaled)
        if n == 1:
            k = 1
        else:
            k_min, k_max = self.params.elbow_range
            k = elbow_k(scaled, (min(k_min, n), min(k_max, n)), self.rng)
        labels, centers = kmeans(scaled, k, self.rng)
        # center each sphere on its medoid: an actual filtered candidate,
        # so the representative a sphere executes as is itself legal,
        # scored, and reachable by the cut-and-regrow reuse path
        spheres = []
        for c in range(k):
            members = scaled[labels == c]
            spheres.append(enclose(members, medoid(members, centers[c])))
        self.set_initial_spheres(spheres)

    # -- action-list maintenance --------------------------------------------

    def _extend_entries(self, node: BeliefNode, state: Any) -> None:
        if self.mode == "spheres" and node.sphere_gen < self._generation:
            for sphere in self.initial_spheres:
                node.add_entry(sphere=sphere)
            node.sphere_gen = self._generation
        existing = {
            entry.discrete for entry in node.actions.values() if entry.discrete is not None
        }
        wanted: list[HybridAction] = []
        if self.mode == "fixed":
            wanted.extend(self.fixed_actions)
        wanted.extend(self.model.discrete_actions(state))
        for action in wanted:
            if action not in existing:
                node.add_entry(discrete=action)
                existing.add(action)

    def _update_tree(self, root: BeliefNode, fallback_state: Any) -> None:
        for node in root.walk():
            if node.n_visits == 0 and not node.actions:
                continue  # fresh leaf, expands on first visit
            state = node.particles[-1][1] if node.particles else fallback_state
            self._extend_entries(node, state)

    def _maybe_widen(self, node: BeliefNode) -> None:
        continuous = sum(
            1 for aid in node.order if node.actions[aid].sphere is not None
        )
        allowed = math.floor(
            self.params.k_widen * (node.n_visits + 1) ** self.params.alpha_widen
        )
        if continuous >= allowed:
            return
        vector = np.asarray(self.model.sample_candidate(self.rng), dtype=float)
        center = self.scaler.scale(np.clip(vector, self.scaler.low, self.scaler.high))
        node.add_entry(sphere=Hypersphere(center=center, range=0.0))

    # -- planning -----------------------------------------------------------

    def plan(
        self,
        belief: ParticleBelief,
        budget: PlanBudget,
        scorer: Scorer | None = None,
    ) -> PlanResult:
        if not belief.particles:
            raise ConfigError("cannot plan from an empty belief")
        if self.mode == "spheres":
            if scorer is not None:
                self._refresh_spheres(scorer)
            if not self.initial_spheres:
                raise ConfigError("sphere mode needs a scorer or preset initial spheres")

        root = self.tree
        if root is None:
            root = BeliefNode(depth=0)
            self.tree = root
        states = belief.particles
        weights = belief.normalised_weights()
        self._update_tree(root, states[0])

        episodes = 0
        if budget.episodes is not None:
            for _ in range(budget.episodes):
                idx = int(self.rng.choice(len(states), p=weights))
                self._run_episode(root, states[idx])
                episodes += 1
        else:
            deadline = time.perf_counter() + budget.ms / 1000.0
            while True:
                idx = int(self.rng.choice(len(states), p=weights))
                self._run_episode(root, states[idx])
                episodes += 1
                if time.perf_counter() >= deadline:
                    break

        if not root.actions:
            raise ConfigError("search produced no root actions")
        ranked = self._rank_root(root)
        top = ranked[0]
        return PlanResult(
            action_id=top.action_id,
            payload=top.payload,
            ranked=ranked,
            episodes=episodes,
            root_value=root.value,
        )

    def _rank_root(self, root: BeliefNode) -> list[RankedAction]:
        entries = [root.actions[aid] for aid in root.order]
        visited = [e for e in entries if e.n_visits > 0]
        pool = sorted(visited or entries, key=lambda e: (-e.q_value, e.action_id))
        return [
            RankedAction(e.action_id, e.payload(), e.q_value, e.n_visits) for e in pool
        ]

    def concrete_action(self, payload: Any, rng: np.random.Generator) -> HybridAction:
        """Turn a plan payload into an executable action.

        A hypersphere executes as its center.  Centers are medoids, so
        the executed point is a real configuration the search simulated
        (first visits play the center directly), which lets the record
        cutting after the real step keep the episodes that went the same
        way.  In-tree episodes otherwise sample the whole ball; ``rng``
        is kept for callers whose payloads need a draw.
        """
        if isinstance(payload, Hypersphere):
            point = np.asarray(payload.center, dtype=float)
            return self.model.decode_continuous(self.scaler.unscale(point))
        return payload

    # -- episodes -----------------------------------------------------------

    def _run_episode(self, root: BeliefNode, start_state: Any) -> None:
        eid = self._next_eid
        self._next_eid += 1
        ctx = _EpisodeCtx(steps=[], states=[start_state], rewards=[])
        self._episode(root, start_state, eid, ctx)
        if ctx.dim_r is None:
            ctx.dim_r = len(ctx.steps)
        record = EpisodeRecord(
            steps=ctx.steps, states=ctx.states, rewards=ctx.rewards, tree_depth=ctx.dim_r
        )
        record.check()
        self.history[eid] = record

    def _episode(self, node: BeliefNode, state: Any, eid: int, ctx: _EpisodeCtx) -> float:
        node.particles.append((eid, state))
        depth = node.depth

        if node.n_visits == 0:
            self._extend_entries(node, state)
            node.n_visits = 1
            node.backed_episodes.append(eid)
            ctx.dim_r = len(ctx.steps)
            total = self._rollout(state, depth, ctx)
            node.value = total
            return total

        if self.mode == "widening":
            self._maybe_widen(node)
        if not node.actions:
            self._extend_entries(node, state)
        if not node.actions:
            node.n_visits += 1
            node.backed_episodes.append(eid)
            ctx.dim_r = len(ctx.steps)
            total = self._rollout(state, depth, ctx)
            node.value += (total - node.value) / node.n_visits
            return total

        aid = self._select(node)
        entry = node.actions[aid]
        if (
            self.mode == "spheres"
            and self.params.refinement
            and entry.sphere is not None
        ):
            entry = self._maybe_refine(node, entry)

        action, vector = self._concretize(entry)
        out = self.model.step(state, action, self.rng)
        snapshot = None
        if entry.sphere is not None:
            snapshot = (
                tuple(float(c) for c in entry.sphere.center),
                float(entry.sphere.range),
            )
        ctx.steps.append(StepRecord(aid, snapshot, action, vector, out.observation))
        ctx.states.append(out.state)
        ctx.rewards.append(out.reward)
        if vector is not None:
            entry.applied[eid] = vector

        if out.terminal or depth + 1 >= self.problem.max_depth:
            ctx.dim_r = len(ctx.steps)
            total = out.reward
            child_value = 0.0
        else:
            child = entry.children.get(out.observation)
            if child is None:
                child = BeliefNode(depth=depth + 1)
                entry.children[out.observation] = child
            sub = self._episode(child, out.state, eid, ctx)
            total = out.reward + self.problem.gamma * sub
            child_value = child.value

        self._backup(node, entry, eid, total, out.reward, child_value)
        return total

    def _select(self, node: BeliefNode) -> int:
        for aid in node.order:
            if node.actions[aid].n_visits == 0:
                return aid
        log_n = math.log(node.n_visits)
        bonus = 0.0
        if self.params.f_option == "identity":
            bonus = self.params.omega3 * node.bd
        best_aid = node.order[0]
        best_u = -math.inf
        for aid in node.order:
            entry = node.actions[aid]
            u = (
                entry.q_value
                + self.params.omega1 * math.sqrt(log_n / entry.n_visits)
                + self.params.omega2 * entry.range
                + bonus
            )
            if u > best_u:
                best_u = u
                best_aid = aid
        return best_aid

    def _concretize(self, entry: ActionNode) -> tuple[HybridAction, np.ndarray | None]:
        if entry.discrete is not None:
            return entry.discrete, None
        if entry.n_visits == 0:
            # first visit plays the representative itself, so the point
            # execution will later replay is always an evaluated one
            point = entry.sphere.center.copy()
        else:
            point = sample_in_hypersphere(entry.sphere, self.rng)
        original = self.scaler.unscale(point)
        action = self.model.decode_continuous(original)
        clipped = np.clip(original, self.scaler.low, self.scaler.high)
        return action, self.scaler.scale(clipped)

    def _rollout(self, state: Any, depth: int, ctx: _EpisodeCtx) -> float:
        total = 0.0
        factor = 1.0
        current = state
        for _ in range(min(self.params.rollout_depth, self.problem.max_depth - depth)):
            action = self.model.rollout_action(current, self.rng)
            out = self.model.step(current, action, self.rng)
            ctx.steps.append(StepRecord(-1, None, action, None, out.observation))
            ctx.states.append(out.state)
            ctx.rewards.append(out.reward)
            total += factor * out.reward
            factor *= self.problem.gamma
            current = out.state
            if out.terminal:
                break
        return total

    def _backup(
        self,
        node: BeliefNode,
        entry: ActionNode,
        eid: int,
        total: float,
        immediate: float,
        child_value: float,
    ) -> None:
        node.n_visits += 1
        node.backed_episodes.append(eid)
        entry.n_visits += 1
        entry.member_episodes.append(eid)
        if self.params.backup == "monte-carlo":
            entry.q_value += (total - entry.q_value) / entry.n_visits
        else:
            target = immediate + self.problem.gamma * child_value
            entry.q_value += (target - entry.q_value) / entry.n_visits
        node.value = max(
            (e.q_value for e in node.actions.values() if e.n_visits > 0),
            default=node.value,
        )

    # -- refinement ---------------------------------------------------------

    def _maybe_refine(self, node: BeliefNode, entry: ActionNode) -> ActionNode:
        sphere = entry.sphere
        if self._c_r is None or sphere.range <= self.params.d_lim:
            return entry
        if entry.n_visits < 1.0 / (self._c_r * sphere.range * sphere.range):
            return entry
        eids = [e for e in entry.member_episodes if e in entry.applied]
        if len(eids) < self.params.k_refine:
            return entry
        points = np.stack([entry.applied[e] for e in eids])
        if len({tuple(p) for p in points.tolist()}) < self.params.k_refine:
            return entry
        return self._refine(node, entry, eids, points)

    def _refine(
        self, node: BeliefNode, entry: ActionNode, eids: list[int], points: np.ndarray
    ) -> ActionNode:
        """Split a visited sphere into ``k_refine`` child spheres.

        The applied vectors are clustered; cluster 0 replaces the entry
        in place (keeping its id), the rest are appended with fresh
        ids.  Counts, values, memberships, and the episode records that
        point at this depth are all rewritten against the clusters.
        """
        params = self.params
        gamma = self.problem.gamma
        depth = node.depth
        labels, centers = kmeans(points, params.k_refine, self.rng)
        parent_range = entry.sphere.range
        original_children = entry.children
        original_applied = entry.applied

        clusters = []
        for c in range(params.k_refine):
            picked = np.flatnonzero(labels == c)
            members = [eids[i] for i in picked]
            # medoid center: a vector some member episode actually ran
            enclosed = enclose(points[picked], medoid(points[picked], centers[c]))
            sphere = Hypersphere(
                center=enclosed.center,
                range=f_lim(enclosed.range, parent_range, params),
            )
            member_set = set(members)
            children = {}
            for obs, child in original_children.items():
                clone = self._clone_belief(child, member_set)
                if clone is not None:
                    children[obs] = clone
            q_value = (
                sum(self.history.tail_return(e, depth, gamma) for e in members)
                / len(members)
                if members
                else 0.0
            )
            clusters.append((sphere, members, children, q_value))

        sphere0, members0, children0, q0 = clusters[0]
        entry.sphere = sphere0
        entry.children = children0
        entry.n_visits = len(members0)
        entry.q_value = q0
        entry.member_episodes = list(members0)
        entry.applied = {e: original_applied[e] for e in members0}
        new_ids = [entry.action_id]
        for sphere_c, members_c, children_c, q_c in clusters[1:]:
            sibling = node.add_entry(sphere=sphere_c)
            sibling.n_visits = len(members_c)
            sibling.q_value = q_c
            sibling.children = children_c
            sibling.member_episodes = list(members_c)
            sibling.applied = {e: original_applied[e] for e in members_c}
            new_ids.append(sibling.action_id)

        for c, (sphere_c, members_c, _children, _q) in enumerate(clusters):
            snapshot = (
                tuple(float(v) for v in sphere_c.center),
                float(sphere_c.range),
            )
            for e in members_c:
                step = self.history[e].steps[depth]
                step.action_id = new_ids[c]
                step.sphere = snapshot

        node.value = max(
            (e.q_value for e in node.actions.values() if e.n_visits > 0),
            default=node.value,
        )
        return entry

    def _clone_belief(self, node: BeliefNode, members: set[int]) -> BeliefNode | None:
        backed = [e for e in node.backed_episodes if e in members]
        particles = [(e, s) for (e, s) in node.particles if e in members]
        if not backed and not particles:
            return None
        gamma = self.problem.gamma
        clone = BeliefNode(depth=node.depth)
        clone.sphere_gen = node.sphere_gen
        clone.bd = node.bd
        clone.n_visits = len(backed)
        clone.backed_episodes = backed
        clone.particles = particles
        clone.next_action_id = node.next_action_id
        best = None
        for aid in node.order:
            source = node.actions[aid]
            eids = [e for e in source.member_episodes if e in members]
            dup = ActionNode(
                action_id=aid, sphere=source.sphere, discrete=source.discrete
            )
            dup.n_visits = len(eids)
            dup.member_episodes = eids
            dup.applied = {e: source.applied[e] for e in eids if e in source.applied}
            if eids:
                dup.q_value = sum(
                    self.history.tail_return(e, node.depth, gamma) for e in eids
                ) / len(eids)
                best = dup.q_value if best is None else max(best, dup.q_value)
            for obs, child in source.children.items():
                cloned_child = self._clone_belief(child, members)
                if cloned_child is not None:
                    dup.children[obs] = cloned_child
            clone.order.append(aid)
            clone.actions[aid] = dup
        if best is not None:
            clone.value = best
        elif backed:
            clone.value = sum(
                self.history.tail_return(e, node.depth, gamma) for e in backed
            ) / len(backed)
        else:
            clone.value = node.value
        return clone

    # -- belief propagation -------------------------------------------------

    def adopt_tree(self, root: BeliefNode | None, history: HistoryTuple) -> None:
        """Replace the search tree and records wholesale (tree reuse)."""
        self.tree = root
        self.history = history
        if history:
            self._next_eid = max(self._next_eid, max(history) + 1)

    def filter_belief(
        self,
        belief: ParticleBelief,
        action_id: int | None,
        action: HybridAction,
        obs_key: Any,
        rng: np.random.Generator,
    ) -> ParticleBelief:
        """Posterior belief after executing ``action`` and seeing
        ``obs_key``, preferring particles already collected in the
        matching tree branch.

        Falls back to rejection sampling against the model, then to a
        transition-only update reweighted by per-object agreement with
        the real observation.  The matching branch, when found, becomes
        the new tree root; otherwise the tree is dropped.
        """
        n_target = self.problem.n_particles
        root = self.tree
        child = None
        if root is not None and action_id is not None:
            entry = root.actions.get(action_id)
            if entry is not None:
                child = entry.children.get(obs_key)
        if child is not None and child.particles:
            rebase_depths(child, 0)
            self.tree = child
            return resample(ParticleBelief(child.particle_states()), n_target, rng)

        self.tree = None
        sources = belief.particles
        weights = belief.normalised_weights()
        matched: list[Any] = []
        for _ in range(16 * n_target):
            idx = int(rng.choice(len(sources), p=weights))
            out = self.model.step(sources[idx], action, rng)
            if out.observation == obs_key:
                matched.append(out.state)
                if len(matched) >= n_target:
                    break
        if matched:
            return resample(ParticleBelief(matched), n_target, rng)

        stepped = []
        agreement = []
        for source in sources:
            out = self.model.step(source, action, rng)
            stepped.append(out.state)
            agreement.append(1.0 + self._overlap(out.observation, obs_key))
        return resample(
            ParticleBelief(stepped, np.asarray(agreement) * weights), n_target, rng
        )

    @staticmethod
    def _overlap(simulated: Any, real: Any) -> int:
        try:
            return len(set(simulated) & set(real))
        except TypeError:
            return 1 if simulated == real else 0
