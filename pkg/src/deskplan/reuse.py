"""Belief-tree reuse across real steps and growing state spaces.

After the robot acts, the episode records that agree with what actually
happened are cut down by one step, optionally replayed against newly
detected objects (old trajectory parts frozen, new objects simulated
alongside), and finally regrown into a fresh tree whose counts and
values match the surviving records exactly.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from typing import Any, Callable, Sequence

import numpy as np

from .clustering import Hypersphere
from .domain.model import observe_object, robot_camera
from .domain.types import GUESSED_INDEX, DomainParams, ObjectObservation, ObjectState, WorldState
from .solver.tree import ActionNode, BeliefNode, EpisodeRecord, HistoryTuple, StepRecord


def cut_observation(obs_key: tuple, known_count: int) -> tuple:
    """Drop records about objects the planner has not met yet.

    Real observations may mention objects detected this very step;
    in-tree observations cannot, so matching happens on the first
    ``known_count`` indices only.
    """
    return tuple(entry for entry in obs_key if entry[0] < known_count)


def strip_hypothesis(obs_key: tuple) -> tuple:
    """Drop the guessed-target record from an in-tree observation key.

    Simulated episodes imagine evidence about the hypothesised target;
    real observations never mention it.  Matching across the real step
    boundary therefore compares keys with the hypothesis records
    removed (real keys pass through unchanged, they carry none).
    """
    return tuple(entry for entry in obs_key if entry[0] != GUESSED_INDEX)


def cutting(
    history: HistoryTuple,
    action_id: int,
    obs_key: tuple,
    normalize: Callable[[tuple], tuple] | None = None,
) -> HistoryTuple:
    """Keep episodes whose first step matches what really happened,
    stripped of that step.

    ``normalize``, when given, maps each recorded first-step key before
    comparison (``obs_key`` is assumed already normalised).  Survivors
    lose their leading step, state, and reward, and their
    tree-controlled depth drops by one, so the records line up with the
    promoted subtree.
    """
    survivors = HistoryTuple()
    for eid in sorted(history):
        record = history[eid]
        if record.tree_depth < 1 or not record.steps:
            continue
        first = record.steps[0]
        if first.action_id != action_id:
            continue
        first_key = first.obs_key if normalize is None else normalize(first.obs_key)
        if first_key != obs_key:
            continue
        cut = EpisodeRecord(
            steps=record.steps[1:],
            states=record.states[1:],
            rewards=record.rewards[1:],
            tree_depth=record.tree_depth - 1,
        )
        cut.check()
        survivors[eid] = cut
    return survivors


def _record_key(record: ObjectObservation) -> tuple:
    # must mirror Observation.key() entries
    return (record.index, record.grids, tuple(l.value for l in record.labels))


def _extend_record(
    record: EpisodeRecord,
    additions: Sequence[ObjectState],
    params: DomainParams,
    rng: np.random.Generator,
) -> EpisodeRecord:
    current = list(additions)
    base0 = record.states[0]
    states = [WorldState(base0.robot, base0.objects + tuple(current))]
    steps: list[StepRecord] = []
    for i, step in enumerate(record.steps):
        base = record.states[i + 1]
        combined = list(base.objects) + current
        camera = robot_camera(base.robot, params)
        extra_keys: list[tuple] = []
        for j in range(len(current)):
            index = len(base.objects) + j
            obs, evolved = observe_object(
                base.robot, combined, index, params, rng, camera=camera
            )
            combined[index] = evolved
            current[j] = evolved
            if obs is not None:
                extra_keys.append(_record_key(obs))
        steps.append(
            StepRecord(
                action_id=step.action_id,
                sphere=step.sphere,
                action=step.action,
                vector=step.vector,
                obs_key=tuple(step.obs_key) + tuple(extra_keys),
            )
        )
        states.append(WorldState(base.robot, base.objects + tuple(current)))
    extended = EpisodeRecord(
        steps=steps, states=states, rewards=list(record.rewards), tree_depth=record.tree_depth
    )
    extended.check()
    return extended


def replay_extend(
    history: HistoryTuple,
    additions: Sequence[ObjectState],
    params: DomainParams,
    rng: np.random.Generator,
    time_budget_ms: float | None = None,
    reserve: float = 0.2,
) -> HistoryTuple:
    """Thread newly detected objects through every surviving episode.

    Recorded actions, old-object trajectories, and rewards stay frozen;
    only the new objects' evidence evolves, and each step's observation
    key gains their records.  Under a wall-clock budget at most the
    non-reserved share is spent; episodes that would overrun are
    dropped rather than kept stale, because their states would miss the
    new objects.
    """
    if not additions:
        return history
    deadline = None
    if time_budget_ms is not None:
        deadline = time.perf_counter() + (time_budget_ms / 1000.0) * (1.0 - reserve)
    replayed = HistoryTuple()
    for eid in sorted(history):
        if deadline is not None and time.perf_counter() >= deadline and replayed:
            break
        replayed[eid] = _extend_record(history[eid], additions, params, rng)
    return replayed


def rollout_new_objects(rewards: Sequence[float], j: int, gamma: float) -> float:
    """Discounted value of the recorded rollout tail from index ``j``."""
    if j >= len(rewards):
        return 0.0
    if j == len(rewards) - 1:
        return float(rewards[j])
    return float(rewards[j]) + gamma * rollout_new_objects(rewards, j + 1, gamma)


def simulation_new_objects(record: EpisodeRecord, gamma: float) -> float:
    """Value of a replayed episode from its start.

    Tree-controlled steps recurse one by one; at the tree frontier the
    remaining rollout rewards collapse into a single discounted tail.
    """

    def value(i: int) -> float:
        if i >= record.tree_depth:
            return rollout_new_objects(record.rewards, i, gamma)
        return float(record.rewards[i]) + gamma * value(i + 1)

    return value(0)


def _insert_entry(node: BeliefNode, step: StepRecord) -> ActionNode:
    if step.sphere is not None:
        center, radius = step.sphere
        entry = ActionNode(
            action_id=step.action_id,
            sphere=Hypersphere(center=np.asarray(center, dtype=float), range=radius),
        )
    else:
        entry = ActionNode(action_id=step.action_id, discrete=step.action)
    node.order.append(step.action_id)
    node.actions[step.action_id] = entry
    node.next_action_id = max(node.next_action_id, step.action_id + 1)
    return entry


def grow_tree(engine: Any, history: HistoryTuple) -> BeliefNode:
    """Rebuild a search tree from episode records alone.

    Every record walks from a fresh root along its recorded action ids
    and observation keys, re-applying the Monte-Carlo backups, so the
    grown tree's counts, memberships, and values match the surviving
    history exactly.  The engine adopts the result.
    """
    gamma = engine.problem.gamma
    root = BeliefNode(depth=0)
    for eid in sorted(history):
        record = history[eid]
        node = root
        for i in range(record.tree_depth):
            step = record.steps[i]
            node.particles.append((eid, record.states[i]))
            node.n_visits += 1
            node.backed_episodes.append(eid)
            entry = node.actions.get(step.action_id)
            if entry is None:
                entry = _insert_entry(node, step)
            entry.n_visits += 1
            entry.member_episodes.append(eid)
            if step.vector is not None:
                entry.applied[eid] = step.vector
            tail = history.tail_return(eid, i, gamma)
            entry.q_value += (tail - entry.q_value) / entry.n_visits
            node.value = max(
                e.q_value for e in node.actions.values() if e.n_visits > 0
            )
            child = entry.children.get(step.obs_key)
            if child is None:
                child = BeliefNode(depth=i + 1)
                entry.children[step.obs_key] = child
            node = child
        node.particles.append((eid, record.states[record.tree_depth]))
        node.n_visits += 1
        node.backed_episodes.append(eid)
        if not node.actions:
            tail = rollout_new_objects(record.rewards, record.tree_depth, gamma)
            node.value += (tail - node.value) / node.n_visits
    engine.adopt_tree(root, history)
    return root


def _bucket(state: WorldState, cell: float) -> tuple:
    keys = []
    for obj in state.objects:
        signs = tuple(0 if g == 0 else (1 if g > 0 else -1) for g in obj.g)
        keys.append(
            (
                obj.u,
                signs,
                math.floor(obj.position[0] / cell),
                math.floor(obj.position[1] / cell),
            )
        )
    return tuple(keys)


def _counter_distance(a: Counter, b: Counter) -> float:
    total_a = sum(a.values())
    total_b = sum(b.values())
    if total_a == 0 or total_b == 0:
        return 0.0 if total_a == total_b else 2.0
    return sum(
        abs(a[key] / total_a - b[key] / total_b) for key in a.keys() | b.keys()
    )


def belief_distance(
    states_a: Sequence[WorldState], states_b: Sequence[WorldState], cell: float = 0.1
) -> float:
    """L1 distance between bucketed state histograms, in [0, 2].

    States bucket on each object's status, the sign pattern of its
    evidence, and its coarse (x, y) cell, so the distance reacts to
    belief shifts that matter for action choice without comparing raw
    continuous coordinates.
    """
    return _counter_distance(
        Counter(_bucket(s, cell) for s in states_a),
        Counter(_bucket(s, cell) for s in states_b),
    )


def annotate_bd(root: BeliefNode, reference: Sequence[WorldState], cell: float = 0.1) -> None:
    """Stamp each node with its distance from the reference belief,
    consumed by the selection rule's optional belief-distance bonus."""
    ref = Counter(_bucket(s, cell) for s in reference)
    for node in root.walk():
        if node.particles:
            node.bd = _counter_distance(
                Counter(_bucket(s, cell) for s in node.particle_states()), ref
            )
        else:
            node.bd = 0.0
