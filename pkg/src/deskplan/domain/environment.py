"""Ground-truth simulator for benchmark runs.

The environment owns three layers of state: the hidden truth (object
poses, the target identity, moveability), the robot's running estimate
(detected objects with accumulated evidence), and the grid world that
tracks where the still-hidden target might be.  Rewards are judged
against the truth; estimates are what solvers get to see.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ConfigError, Declare, HybridAction, MoveConfig, ParticleBelief, Remove
from .geometry import box_corners, nearest_four, points_in_frustum, segments_hit_box
from .gridworld import GridWorld, sample_guessed_target
from .model import (
    declare_passes,
    base_in_footprint,
    guessed_placeholder_position,
    is_terminal,
    robot_camera,
    reward as domain_reward,
    transition as domain_transition,
)
from .scenario import ScenarioSpec
from .types import (
    GUESSED_INDEX,
    GUESSED_ORIENTATION,
    GUESSED_SIZE,
    STATUS_OBSTACLE,
    STATUS_REMOVED,
    STATUS_TARGET,
    STATUS_UPDATING,
    Detection,
    DomainParams,
    Label,
    Observation,
    ObjectObservation,
    ObjectState,
    WorldState,
    guessed_target_state,
)


@dataclass
class TruthObject:
    """Hidden ground truth for one physical object."""

    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    size: tuple[float, float, float]
    movable: bool
    is_target: bool
    removed: bool = False
    est_index: int | None = None
    _corners: np.ndarray | None = field(default=None, repr=False)

    def corners(self) -> np.ndarray:
        if self._corners is None:
            self._corners = box_corners(self.position, self.orientation, self.size)
        return self._corners


@dataclass(frozen=True)
class ExecutionResult:
    """Outcome of one real step."""

    observation: Observation
    reward: float
    illegal: bool
    terminal: bool
    new_objects: tuple[ObjectState, ...]


class GroundTruthEnv:
    """Executes actions against the hidden scene and reports evidence."""

    def __init__(self, scenario: ScenarioSpec, rng: np.random.Generator):
        self.scenario = scenario
        self.params: DomainParams = scenario.params
        self.rng = rng
        self.robot = scenario.robot_start
        self.truth = [
            TruthObject(
                position=o.position,
                orientation=o.orientation,
                size=o.size,
                movable=o.movable,
                is_target=o.target,
            )
            for o in scenario.objects
        ]
        # estimates[0] is a far-away placeholder standing in for the
        # guessed target, which only exists inside belief particles
        self.estimates: list[ObjectState] = [self._placeholder()]
        self.grid = GridWorld(self.params.workspaces, self.params.grid_resolution)
        self.terminal = False
        self.step_count = 0

    def _placeholder(self) -> ObjectState:
        return ObjectState(
            position=guessed_placeholder_position(self.params),
            orientation=GUESSED_ORIENTATION,
            size=GUESSED_SIZE,
            g=(0.0,) * 8,
            m=0.0,
            u=STATUS_UPDATING,
        )

    # -- belief-facing views -------------------------------------------------

    def estimate_world(self) -> WorldState:
        """Robot's own picture of the scene; no truth flags attached."""
        return WorldState(self.robot, tuple(self.estimates))

    def _truth_flagged_world(self) -> WorldState:
        objects = [self.estimates[0].evolve(truth_is_target=False)]
        for est in self.estimates[1:]:
            objects.append(est)
        for t in self.truth:
            if t.est_index is not None:
                objects[t.est_index] = objects[t.est_index].evolve(truth_is_target=t.is_target)
        return WorldState(self.robot, tuple(objects))

    def belief_particles(self, n: int, rng: np.random.Generator) -> list[WorldState]:
        """Fresh root particles: shared estimates plus a guessed target
        drawn per particle from the grid world."""
        base = tuple(self.estimates[1:])
        particles = []
        for _ in range(n):
            position = sample_guessed_target(self.grid, rng, half_height=GUESSED_SIZE[2] / 2.0)
            guessed = guessed_target_state(position, self.params)
            particles.append(WorldState(self.robot, (guessed, *base)))
        return particles

    def initial_belief(self, n: int, rng: np.random.Generator) -> ParticleBelief:
        return ParticleBelief(self.belief_particles(n, rng))

    # -- action screening ----------------------------------------------------

    def reasonable(self, action: HybridAction) -> bool:
        """Pre-execution screen: would this action be legal right now?

        Declarations and removals of the guessed target are always
        unreasonable -- index 0 is a belief artefact, not a physical
        object the robot could touch.
        """
        if isinstance(action, MoveConfig):
            return len(action.vector) == 6 and not base_in_footprint(
                action.vector[0], action.vector[1], self.params
            )
        index = action.index
        if index == GUESSED_INDEX or not 0 <= index < len(self.estimates):
            return False
        est = self.estimates[index]
        if isinstance(action, Declare):
            return est.u == STATUS_UPDATING and declare_passes(est, action.claim, self.params)
        if isinstance(action, Remove):
            return est.u in (STATUS_OBSTACLE, STATUS_TARGET) and est.m > 0.0
        return False

    # -- execution -----------------------------------------------------------

    def execute_real(self, action: HybridAction) -> ExecutionResult:
        """Apply one action for real and report everything the robot senses."""
        if self.terminal:
            raise ConfigError("episode already terminal")
        self.step_count += 1

        before = self._truth_flagged_world()
        after, illegal = domain_transition(before, action, self.params, self.rng)
        step_reward = domain_reward(before, action, after, self.params)

        self.robot = after.robot
        for i in range(1, len(self.estimates)):
            self.estimates[i] = after.objects[i].evolve(truth_is_target=None)
        if isinstance(action, Remove) and not illegal:
            for t in self.truth:
                if t.est_index == action.index:
                    t.removed = True
                    t.position = after.objects[action.index].position
                    t._corners = None

        observation = self._sense()
        self.terminal = is_terminal(self._truth_flagged_world()) or any(
            t.is_target and t.removed for t in self.truth
        )
        return ExecutionResult(
            observation=observation,
            reward=step_reward,
            illegal=illegal,
            terminal=self.terminal,
            new_objects=tuple(
                self.estimates[d.index] for d in observation.detections
            ),
        )

    def _sense(self) -> Observation:
        """Detect objects, label grids against the truth, update the grid world."""
        params = self.params
        camera = robot_camera(self.robot, params)
        active = [t for t in self.truth if not t.removed]

        visible: dict[int, list[int]] = {}
        for k, t in enumerate(self.truth):
            if t.removed:
                continue
            corners = t.corners()
            mask = points_in_frustum(camera, params.fov, corners)
            if not mask.any():
                continue
            candidates = np.flatnonzero(mask)
            pts = corners[candidates]
            blocked = np.zeros(len(candidates), dtype=bool)
            for other in active:
                if other is t:
                    continue
                blocked |= segments_hit_box(
                    camera.position, pts, other.position, other.orientation, other.size
                )
                if blocked.all():
                    break
            seen = [int(c) for c in candidates[~blocked]]
            if seen:
                visible[k] = seen

        # new detections, in truth order, with estimate noise
        detections: list[Detection] = []
        for k, t in enumerate(self.truth):
            if k not in visible or t.est_index is not None:
                continue
            index = len(self.estimates)
            t.est_index = index
            position = tuple(
                float(v) for v in np.asarray(t.position) + self.rng.normal(0.0, params.detection_pos_noise, 3)
            )
            size = tuple(
                float(max(v, 0.01))
                for v in np.asarray(t.size) + self.rng.normal(0.0, params.detection_size_noise, 3)
            )
            est = ObjectState(
                position=position,
                orientation=t.orientation,
                size=size,
                g=(0.0,) * 8,
                m=params.detected_moveability_odds if t.movable else 0.0,
                u=STATUS_UPDATING,
            )
            self.estimates.append(est)
            detections.append(
                Detection(index=index, position=position, orientation=t.orientation, size=size)
            )

        # grid-label records against the truth, in estimate-index order
        records: list[ObjectObservation] = []
        by_index = sorted((t.est_index, k) for k, t in enumerate(self.truth) if k in visible)
        for index, k in by_index:
            t = self.truth[k]
            grids = nearest_four(camera.position, t.corners())
            labels = []
            g = list(self.estimates[index].g)
            for grid in grids:
                if grid in visible[k]:
                    label = Label.POS if t.is_target else Label.NEG
                else:
                    label = Label.ZERO
                noise = float(self.rng.normal(0.0, params.grid_noise_std))
                magnitude = {
                    Label.POS: params.grid_magnitude,
                    Label.NEG: -params.grid_magnitude,
                    Label.ZERO: 0.0,
                }[label]
                g[grid] += magnitude + noise
                labels.append(label)
            self.estimates[index] = self.estimates[index].evolve(g=tuple(g))
            records.append(ObjectObservation(index=index, grids=grids, labels=tuple(labels)))

        self._update_grid(camera, visible)
        return Observation(records=tuple(records), detections=tuple(detections))

    def _update_grid(self, camera, visible: dict[int, list[int]]) -> None:
        """Evidence over surface cells the camera can actually inspect:
        the cell holding a visible target gains odds, every other
        covered cell loses them."""
        params = self.params
        centers = self.grid.cell_centers
        mask = points_in_frustum(camera, params.fov, centers)
        if not mask.any():
            return
        idx = np.flatnonzero(mask)
        pts = centers[idx]
        blocked = np.zeros(len(idx), dtype=bool)
        for t in self.truth:
            if t.removed:
                continue
            blocked |= segments_hit_box(
                camera.position, pts, t.position, t.orientation, t.size
            )
            if blocked.all():
                return
        covered = idx[~blocked]
        if len(covered) == 0:
            return

        target_cell = -1
        for k, t in enumerate(self.truth):
            if t.is_target and not t.removed and k in visible:
                target_cell = self.grid.cell_of_position(t.position[0], t.position[1])
        noise = self.rng.normal(0.0, params.grid_noise_std, len(covered))
        deltas = np.where(
            covered == target_cell, params.grid_magnitude, -params.grid_magnitude
        ) + noise
        self.grid.apply_deltas(covered, deltas)
