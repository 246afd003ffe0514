"""Belief-tree node types, per-episode history records, and tree dumps.

Action identifiers are node-local: each belief node numbers its own
dynamic action list, and refinement appends fresh ids to the node that
split.  Episode records index rewards and states from the tree root, so
a node's depth doubles as the reward index its value estimates start
from.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np

from ..clustering import Hypersphere
from ..core import ConfigError, HybridAction


@dataclass
class StepRecord:
    """One step of an episode: which list entry ran, what it sampled,
    and what came back.  Rollout steps carry ``action_id == -1``."""

    action_id: int
    sphere: tuple[tuple[float, ...], float] | None
    action: HybridAction
    vector: np.ndarray | None
    obs_key: tuple

    def clone(self) -> "StepRecord":
        return StepRecord(self.action_id, self.sphere, self.action, self.vector, self.obs_key)


@dataclass
class EpisodeRecord:
    """Full trajectory of one simulation episode.

    ``states`` holds the state before every step plus the final one, so
    ``len(states) == len(rewards) + 1 == len(steps) + 1``.  ``tree_depth``
    marks how many leading steps ran under tree control; the remainder
    came from the rollout heuristic.
    """

    steps: list[StepRecord]
    states: list[Any]
    rewards: list[float]
    tree_depth: int

    def check(self) -> None:
        if not (len(self.states) == len(self.rewards) + 1 == len(self.steps) + 1):
            raise ConfigError("episode record lengths are inconsistent")
        if not 0 <= self.tree_depth <= len(self.rewards):
            raise ConfigError("tree depth outside the recorded trajectory")


class HistoryTuple(dict):
    """Episode id -> :class:`EpisodeRecord`, with return helpers."""

    def tail_return(self, episode: int, depth: int, gamma: float) -> float:
        """Discounted return of episode ``episode`` from step ``depth`` on."""
        rewards = self[episode].rewards
        total = 0.0
        for r in reversed(rewards[depth:]):
            total = r + gamma * total
        return total


@dataclass
class ActionNode:
    """One entry of a belief node's dynamic action list.

    Exactly one of ``sphere`` (a scaled-space hypersphere) and
    ``discrete`` (a fixed action) is set.
    """

    action_id: int
    sphere: Hypersphere | None = None
    discrete: HybridAction | None = None
    n_visits: int = 0
    q_value: float = 0.0
    children: dict[tuple, "BeliefNode"] = field(default_factory=dict)
    member_episodes: list[int] = field(default_factory=list)
    applied: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (self.sphere is None) == (self.discrete is None):
            raise ConfigError("action node needs exactly one of sphere/discrete")

    @property
    def range(self) -> float:
        return self.sphere.range if self.sphere is not None else 0.0

    def payload(self) -> Hypersphere | HybridAction:
        return self.sphere if self.sphere is not None else self.discrete


@dataclass
class BeliefNode:
    """Observation-conditioned node holding the dynamic action list."""

    depth: int
    n_visits: int = 0
    value: float = 0.0
    order: list[int] = field(default_factory=list)
    actions: dict[int, ActionNode] = field(default_factory=dict)
    particles: list[tuple[int, Any]] = field(default_factory=list)
    backed_episodes: list[int] = field(default_factory=list)
    next_action_id: int = 0
    bd: float = 0.0
    sphere_gen: int = 0

    def add_entry(
        self, sphere: Hypersphere | None = None, discrete: HybridAction | None = None
    ) -> ActionNode:
        aid = self.next_action_id
        self.next_action_id += 1
        node = ActionNode(action_id=aid, sphere=sphere, discrete=discrete)
        self.order.append(aid)
        self.actions[aid] = node
        return node

    def particle_states(self) -> list[Any]:
        return [s for (_eid, s) in self.particles]

    def walk(self) -> Iterator["BeliefNode"]:
        """All belief nodes of the subtree, pre-order."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            for aid in reversed(node.order):
                for child in reversed(list(node.actions[aid].children.values())):
                    stack.append(child)


def rebase_depths(root: BeliefNode, new_root_depth: int = 0) -> None:
    """Shift every depth so ``root`` sits at ``new_root_depth``.

    Needed after promoting a child to root, because node depth doubles
    as the reward index into episode records."""
    shift = new_root_depth - root.depth
    if shift == 0:
        return
    for node in root.walk():
        node.depth += shift


def tree_size(root: BeliefNode) -> tuple[int, int]:
    """(belief nodes, action nodes) in the subtree."""
    beliefs = actions = 0
    for node in root.walk():
        beliefs += 1
        actions += len(node.actions)
    return beliefs, actions


def dump_tree(root: BeliefNode) -> str:
    """Stable text export: one row per node, pre-order.

    Columns are depth, node type (``belief``/``sphere``/``discrete``),
    visit count, value estimate, and hypersphere range (empty for
    belief rows, 0.0 for discrete actions).
    """
    out = io.StringIO()
    out.write("depth\ttype\tvisits\tvalue\trange\n")

    def emit(node: BeliefNode) -> None:
        out.write(f"{node.depth}\tbelief\t{node.n_visits}\t{node.value!r}\t\n")
        for aid in node.order:
            entry = node.actions[aid]
            kind = "sphere" if entry.sphere is not None else "discrete"
            out.write(
                f"{node.depth}\t{kind}\t{entry.n_visits}\t{entry.q_value!r}\t{entry.range!r}\n"
            )
            for child in entry.children.values():
                emit(child)

    emit(root)
    return out.getvalue()


@dataclass(frozen=True)
class DumpRow:
    depth: int
    kind: str
    visits: int
    value: float
    range: float | None


def parse_dump(text: str) -> list[DumpRow]:
    """Inverse of :func:`dump_tree` (modulo tree structure)."""
    lines = text.splitlines()
    if not lines or lines[0].split("\t") != ["depth", "type", "visits", "value", "range"]:
        raise ConfigError("not a tree dump: bad or missing header")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 5:
            raise ConfigError(f"tree dump line {ln}: expected 5 columns, got {len(parts)}")
        depth, kind, visits, value, rng = parts
        if kind not in ("belief", "sphere", "discrete"):
            raise ConfigError(f"tree dump line {ln}: unknown node type {kind!r}")
        rows.append(
            DumpRow(
                depth=int(depth),
                kind=kind,
                visits=int(visits),
                value=float(value),
                range=float(rng) if rng else None,
            )
        )
    return rows
