"""Generative POMDP model of the object-search domain.

The in-tree model shares its reward and transition logic with the real
environment; the only asymmetry is observation evidence.  In the tree,
labels extrapolate whatever each grid's accumulated odds already say
(self-reinforcing), while the real environment grounds labels in the
hidden target identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import (
    Claim,
    ConfigError,
    Declare,
    HybridAction,
    MoveConfig,
    Remove,
    StepOutcome,
)
from .geometry import (
    CameraPose,
    camera_pose,
    nearest_four,
    points_in_frustum,
    segments_hit_box,
)
from .types import (
    GUESSED_INDEX,
    STATUS_OBSTACLE,
    STATUS_REMOVED,
    STATUS_TARGET,
    STATUS_UPDATING,
    DomainParams,
    Label,
    Observation,
    ObjectObservation,
    ObjectState,
    RobotState,
    WorldState,
)


def robot_camera(robot: RobotState, params: DomainParams) -> CameraPose:
    return camera_pose(
        robot.x, robot.y, robot.yaw, robot.lift, robot.pan, robot.tilt, params.camera_height
    )


def base_in_footprint(x: float, y: float, params: DomainParams) -> bool:
    return any(w.contains(x, y) for w in params.workspaces)


def guessed_placeholder_position(params: DomainParams) -> tuple[float, float, float]:
    """Where the environment parks its stand-in for the guessed target:
    far from every workspace, offset from the removal teleport spot."""
    x, y, z = params.teleport_position()
    return (x + 2.0, y + 2.0, z)


def moveability_sample(m: float, rng: np.random.Generator) -> bool:
    """Bernoulli draw from moveability odds: success probability m / (1 + m)."""
    if m < 0:
        raise ConfigError(f"moveability odds must be non-negative, got {m}")
    return bool(rng.uniform() < m / (1.0 + m))


def declare_statistic(obj: ObjectState, params: DomainParams) -> float:
    """Mean of the n_odds smallest per-corner evidence values."""
    g = np.asarray(obj.g)
    smallest = np.partition(g, params.n_odds - 1)[: params.n_odds]
    return float(smallest.mean())


def declare_passes(obj: ObjectState, claim: Claim, params: DomainParams) -> bool:
    stat = declare_statistic(obj, params)
    if claim is Claim.TARGET:
        return stat > params.declare_target
    return stat < params.declare_obstacle


def transition(
    state: WorldState,
    action: HybridAction,
    params: DomainParams,
    rng: np.random.Generator,
) -> tuple[WorldState, bool]:
    """Apply an action; returns (successor, illegal flag).

    Illegal actions leave the state untouched: driving the base onto a
    workspace footprint, declaring without threshold support, removing
    an undeclared or (per moveability draw) immovable object, or naming
    an index that does not exist.
    """
    if isinstance(action, MoveConfig):
        if len(action.vector) != 6:
            return state, True
        x, y = action.vector[0], action.vector[1]
        if base_in_footprint(x, y, params):
            return state, True
        return WorldState(RobotState.from_vector(action.vector), state.objects), False

    if isinstance(action, Declare):
        if not 0 <= action.index < len(state.objects):
            return state, True
        obj = state.objects[action.index]
        if obj.u != STATUS_UPDATING or not declare_passes(obj, action.claim, params):
            return state, True
        status = STATUS_TARGET if action.claim is Claim.TARGET else STATUS_OBSTACLE
        objects = list(state.objects)
        objects[action.index] = obj.evolve(u=status)
        return WorldState(state.robot, tuple(objects)), False

    if isinstance(action, Remove):
        if not 0 <= action.index < len(state.objects):
            return state, True
        obj = state.objects[action.index]
        if obj.u not in (STATUS_OBSTACLE, STATUS_TARGET):
            return state, True
        if not moveability_sample(obj.m, rng):
            return state, True
        objects = list(state.objects)
        objects[action.index] = obj.evolve(
            position=params.teleport_position(),
            u=STATUS_REMOVED,
            removed_as_target=obj.u == STATUS_TARGET,
        )
        return WorldState(state.robot, tuple(objects)), False

    raise ConfigError(f"unknown action type {type(action).__name__}")


def visible_grids(
    robot: RobotState,
    objects: Sequence[ObjectState],
    index: int,
    params: DomainParams,
    camera: CameraPose | None = None,
) -> list[int]:
    """Corner indices of ``objects[index]`` that the camera actually sees.

    A corner counts when it falls inside the frustum and the sight line
    meets no other non-removed object's box.  The object never occludes
    its own corners; which of its faces matter is decided by the
    nearest-four rule, not by self-occlusion.
    """
    if camera is None:
        camera = robot_camera(robot, params)
    target = objects[index]
    corners = target.corners()
    mask = points_in_frustum(camera, params.fov, corners)
    if not mask.any():
        return []
    candidates = np.flatnonzero(mask)
    pts = corners[candidates]
    blocked = np.zeros(len(candidates), dtype=bool)
    for j, other in enumerate(objects):
        if j == index or other.u == STATUS_REMOVED:
            continue
        blocked |= segments_hit_box(
            camera.position, pts, other.position, other.orientation, other.size
        )
        if blocked.all():
            return []
    return [int(c) for c in candidates[~blocked]]


def _label_for(value: float, params: DomainParams) -> Label:
    if value > params.nu_pos:
        return Label.POS
    if value < params.nu_neg:
        return Label.NEG
    return Label.ZERO


def _delta_for(label: Label, params: DomainParams, noise: float) -> float:
    if label is Label.POS:
        return params.grid_magnitude + noise
    if label is Label.NEG:
        return -params.grid_magnitude + noise
    return noise


def observe_object(
    robot: RobotState,
    objects: Sequence[ObjectState],
    index: int,
    params: DomainParams,
    rng: np.random.Generator,
    camera: CameraPose | None = None,
) -> tuple[ObjectObservation | None, ObjectState]:
    """Observe a single object against the full scene.

    Returns the evidence record (or ``None`` when no grid is visible)
    and the object with the matching deltas folded into its evidence.
    """
    if camera is None:
        camera = robot_camera(robot, params)
    obj = objects[index]
    if obj.u == STATUS_REMOVED:
        return None, obj
    visible = visible_grids(robot, objects, index, params, camera=camera)
    if not visible:
        return None, obj
    grids = nearest_four(camera.position, obj.corners())
    labels = []
    g = list(obj.g)
    for grid in grids:
        if grid in visible:
            label = _label_for(g[grid], params)
        else:
            label = Label.ZERO
        noise = float(rng.normal(0.0, params.grid_noise_std))
        g[grid] += _delta_for(label, params, noise)
        labels.append(label)
    record = ObjectObservation(index=index, grids=grids, labels=tuple(labels))
    return record, obj.evolve(g=tuple(g))


def observe(
    state: WorldState,
    action: HybridAction,
    params: DomainParams,
    rng: np.random.Generator,
) -> tuple[Observation, WorldState]:
    """In-tree observation model.

    For every object with at least one visible grid the four nearest
    grids are reported.  A visible member's label extrapolates the
    grid's current odds against the +-nu thresholds; occluded members
    of the four report ZERO.  The matching numeric deltas (+-c_o plus
    noise for POS/NEG, bare noise for ZERO) are folded into the
    successor state's evidence.
    """
    camera = robot_camera(state.robot, params)
    records: list[ObjectObservation] = []
    objects = list(state.objects)
    for i in range(len(objects)):
        record, evolved = observe_object(state.robot, objects, i, params, rng, camera=camera)
        if record is None:
            continue
        objects[i] = evolved
        records.append(record)
    return Observation(records=tuple(records)), WorldState(state.robot, tuple(objects))


def reward(
    state: WorldState,
    action: HybridAction,
    next_state: WorldState,
    params: DomainParams,
) -> float:
    """Reward of one step, derived purely from the (s, a, s') triple.

    Illegal attempts earn r_ill and nothing else.  Legal steps pay the
    movement cost (doubled for removals) plus declaration bonuses --
    withheld when a ground-truth flag contradicts the claim -- and the
    jackpot for removing a declared target.
    """
    if isinstance(action, MoveConfig):
        if len(action.vector) != 6 or base_in_footprint(
            action.vector[0], action.vector[1], params
        ):
            return params.r_ill
        return params.r_min

    if isinstance(action, Declare):
        if not 0 <= action.index < len(state.objects):
            return params.r_ill
        before = state.objects[action.index].u
        after = next_state.objects[action.index].u
        if before != STATUS_UPDATING or after == before:
            return params.r_ill
        total = params.r_min
        truth = state.objects[action.index].truth_is_target
        if after == STATUS_TARGET and truth in (None, True):
            total += params.r_ct
        elif after == STATUS_OBSTACLE and truth in (None, False):
            total += params.r_co
        return total

    if isinstance(action, Remove):
        if not 0 <= action.index < len(state.objects):
            return params.r_ill
        before = state.objects[action.index].u
        after = next_state.objects[action.index].u
        if before not in (STATUS_OBSTACLE, STATUS_TARGET) or after != STATUS_REMOVED:
            return params.r_ill
        total = 2.0 * params.r_min
        if before == STATUS_TARGET:
            total += params.r_max
        return total

    raise ConfigError(f"unknown action type {type(action).__name__}")


def is_terminal(state: WorldState) -> bool:
    """The search ends once the (believed or actual) target is gone.

    Ground-truth states end when the object flagged as the true target
    is removed; hypothesis states, whose detected objects carry no
    flag, end when any object removed under a target declaration might
    be it.
    """
    for obj in state.objects:
        if obj.truth_is_target is True and obj.u == STATUS_REMOVED:
            return True
        if obj.truth_is_target is None and obj.removed_as_target:
            return True
    return False


def discrete_actions(state: WorldState) -> list[HybridAction]:
    """Declarations and removals currently expressible against ``state``."""
    actions: list[HybridAction] = []
    for i, obj in enumerate(state.objects):
        if obj.u == STATUS_UPDATING:
            actions.append(Declare(i, Claim.TARGET))
            actions.append(Declare(i, Claim.OBSTACLE))
        elif obj.u in (STATUS_OBSTACLE, STATUS_TARGET):
            actions.append(Remove(i))
    return actions


@dataclass(frozen=True)
class ActionBox:
    """Axis-aligned bounds of the 6-d continuous action space."""

    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "low", tuple(float(v) for v in self.low))
        object.__setattr__(self, "high", tuple(float(v) for v in self.high))
        if len(self.low) != len(self.high):
            raise ConfigError("action box bounds must have equal length")
        if any(l >= h for l, h in zip(self.low, self.high)):
            raise ConfigError("action box must have positive extent in every dimension")

    @property
    def dim(self) -> int:
        return len(self.low)

    def clip(self, vector: np.ndarray) -> np.ndarray:
        return np.clip(vector, self.low, self.high)

    def half_widths(self) -> np.ndarray:
        return (np.asarray(self.high) - np.asarray(self.low)) / 2.0

    def center(self) -> np.ndarray:
        return (np.asarray(self.high) + np.asarray(self.low)) / 2.0


@dataclass(frozen=True)
class Region:
    """Candidate base-placement rectangle around the furniture."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ConfigError("candidate region must have positive extent")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


def sample_config(
    box: ActionBox,
    regions: Sequence[Region],
    rng: np.random.Generator,
) -> np.ndarray:
    """Uniform configuration draw: base (x, y) from the candidate
    regions (area-weighted) when given, remaining dimensions from the box."""
    low = np.asarray(box.low)
    high = np.asarray(box.high)
    vec = rng.uniform(low, high)
    if regions:
        areas = np.array([r.area for r in regions])
        ri = int(rng.choice(len(regions), p=areas / areas.sum()))
        r = regions[ri]
        vec[0] = rng.uniform(r.x_min, r.x_max)
        vec[1] = rng.uniform(r.y_min, r.y_max)
    return vec


class ObjectSearchModel:
    """Generative-model facade consumed by the tree-search engines."""

    def __init__(self, params: DomainParams, box: ActionBox, regions: Sequence[Region] = ()):
        self.params = params
        self.box = box
        self.regions = tuple(regions)
        self.continuous_dim = box.dim

    def step(self, state: WorldState, action: HybridAction, rng: np.random.Generator) -> StepOutcome:
        moved, _illegal = transition(state, action, self.params, rng)
        r = reward(state, action, moved, self.params)
        obs, successor = observe(moved, action, self.params, rng)
        return StepOutcome(successor, obs.key(), r, is_terminal(successor))

    def decode_continuous(self, vector: np.ndarray) -> HybridAction:
        return MoveConfig(tuple(self.box.clip(np.asarray(vector, dtype=float))))

    def discrete_actions(self, state: WorldState) -> list[HybridAction]:
        return discrete_actions(state)

    def rollout_action(self, state: WorldState, rng: np.random.Generator) -> HybridAction:
        return random_action(state, self.params, self.box, self.regions, rng)

    def sample_candidate(self, rng: np.random.Generator) -> np.ndarray:
        return sample_config(self.box, self.regions, rng)


def random_action(
    state: WorldState,
    params: DomainParams,
    box: ActionBox,
    regions: Sequence[Region],
    rng: np.random.Generator,
) -> HybridAction:
    """Random search policy (also the rollout heuristic).

    With probability 0.3 a currently available declaration or removal
    is taken, uniformly; otherwise a continuous configuration is drawn,
    retrying a few times to stay off the furniture footprint.
    """
    gate = rng.uniform()
    available: list[HybridAction] = []
    for i, obj in enumerate(state.objects):
        if obj.u == STATUS_UPDATING:
            for claim in (Claim.TARGET, Claim.OBSTACLE):
                if declare_passes(obj, claim, params):
                    available.append(Declare(i, claim))
        elif obj.u in (STATUS_OBSTACLE, STATUS_TARGET):
            available.append(Remove(i))
    if gate <= 0.3 and available:
        return available[int(rng.integers(len(available)))]
    for _ in range(8):
        vec = sample_config(box, regions, rng)
        if not base_in_footprint(vec[0], vec[1], params):
            return MoveConfig(tuple(vec))
    return MoveConfig(tuple(vec))
