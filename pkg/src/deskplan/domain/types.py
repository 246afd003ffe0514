"""State containers and tunable parameters for the object-search domain."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..core import ConfigError
from .geometry import FovFrustum, box_corners

# Index 0 of every belief state is reserved for the guessed target: a
# virtual cube postulated at a sampled grid-world location so the search
# has a value gradient before the real target has been found.
GUESSED_INDEX = 0
GUESSED_SIZE = (0.1, 0.1, 0.1)
GUESSED_ORIENTATION = (0.0, 0.0, 0.0, 1.0)
GUESSED_MOVEABILITY = 100.0

# object status values
STATUS_REMOVED = -2
STATUS_UPDATING = -1
STATUS_OBSTACLE = 0
STATUS_TARGET = 1


class Label(enum.Enum):
    """Discrete evidence label attached to one observed grid."""

    POS = "pos"
    NEG = "neg"
    ZERO = "zero"


@dataclass(frozen=True)
class RobotState:
    """Camera-carrier configuration: planar base plus lift/pan/tilt."""

    x: float
    y: float
    yaw: float
    lift: float
    pan: float
    tilt: float

    def as_vector(self) -> tuple[float, ...]:
        return (self.x, self.y, self.yaw, self.lift, self.pan, self.tilt)

    @staticmethod
    def from_vector(vector: Sequence[float]) -> "RobotState":
        if len(vector) != 6:
            raise ConfigError(f"robot configuration needs 6 values, got {len(vector)}")
        x, y, yaw, lift, pan, tilt = (float(v) for v in vector)
        return RobotState(x, y, yaw, lift, pan, tilt)


@dataclass(frozen=True)
class ObjectState:
    """One (possibly hypothesised) object.

    The 20 scalar components are position (3), orientation quaternion
    (4), size (3), the eight per-corner evidence log-odds ``g``, the
    moveability odds ``m`` and the status ``u``.  ``truth_is_target``
    and ``removed_as_target`` are simulator-side bookkeeping, not state
    components: particles hypothesising the target carry True, detected
    objects in a belief carry None, and ground-truth states carry the
    actual flag.
    """

    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    size: tuple[float, float, float]
    g: tuple[float, ...]
    m: float
    u: int
    truth_is_target: bool | None = None
    removed_as_target: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "orientation", tuple(float(v) for v in self.orientation))
        object.__setattr__(self, "size", tuple(float(v) for v in self.size))
        object.__setattr__(self, "g", tuple(float(v) for v in self.g))

    def corners(self) -> np.ndarray:
        """(8, 3) world-frame grid positions, cached per pose."""
        cached = self.__dict__.get("_corners")
        if cached is None:
            cached = box_corners(self.position, self.orientation, self.size)
            cached.setflags(write=False)
            object.__setattr__(self, "_corners", cached)
        return cached

    def evolve(self, **changes) -> "ObjectState":
        """Copy with updates, keeping the corner cache when the pose survives."""
        new = dataclasses.replace(self, **changes)
        if not ({"position", "orientation", "size"} & changes.keys()):
            cached = self.__dict__.get("_corners")
            if cached is not None:
                object.__setattr__(new, "_corners", cached)
        return new

    def component_count(self) -> int:
        return 3 + 4 + 3 + len(self.g) + 1 + 1


@dataclass(frozen=True)
class WorldState:
    """Robot configuration plus every tracked object."""

    robot: RobotState
    objects: tuple[ObjectState, ...]


@dataclass(frozen=True)
class ObjectObservation:
    """Evidence for one object: its four nearest grids and their labels."""

    index: int
    grids: tuple[int, int, int, int]
    labels: tuple[Label, Label, Label, Label]


@dataclass(frozen=True)
class Detection:
    """Real-environment record of a newly seen object."""

    index: int
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    size: tuple[float, float, float]


@dataclass(frozen=True)
class Observation:
    """Grid-label records plus (environment only) new-object detections."""

    records: tuple[ObjectObservation, ...] = ()
    detections: tuple[Detection, ...] = ()

    def key(self) -> tuple:
        """Hashable identity used for belief-tree observation edges.

        Detections are deliberately excluded: the in-tree model never
        predicts them, and the harness strips them before matching.
        """
        return tuple((r.index, r.grids, tuple(l.value for l in r.labels)) for r in self.records)


@dataclass(frozen=True)
class DomainParams:
    """Tunable constants of the object-search domain.

    Defaults follow the desk-scale setup: evidence increments of 0.1
    with 0.02 Gaussian noise, +-0.1 label thresholds, declaration when
    the mean of the two smallest per-corner odds crosses +-0.4, and the
    reward ladder R_max >> R_ct > R_co >> 0 > R_min >> R_ill.
    """

    # evidence / grid world
    grid_magnitude: float = 0.1          # c_o
    grid_noise_std: float = 0.02         # eta
    nu_pos: float = 0.1
    nu_neg: float = -0.1
    g_reinit: float = 0.2
    grid_resolution: float = 0.02
    n_odds: int = 2
    declare_target: float = 0.4          # threshold on mean of n_odds smallest g
    declare_obstacle: float = -0.4

    # rewards
    r_max: float = 1e5
    r_ct: float = 5e4
    r_co: float = 1e4
    r_min: float = -1.0
    r_ill: float = -1e3

    # sensing
    fov: FovFrustum = field(default_factory=FovFrustum)
    camera_height: float = 1.0
    detection_pos_noise: float = 0.01
    detection_size_noise: float = 0.005
    detected_moveability_odds: float = 9.0

    # scene
    workspaces: tuple = ()

    def __post_init__(self) -> None:
        if not (self.r_max > self.r_ct > self.r_co > 0 > self.r_min > self.r_ill):
            raise ConfigError(
                "reward ladder must satisfy r_max > r_ct > r_co > 0 > r_min > r_ill"
            )
        if self.nu_neg >= self.nu_pos:
            raise ConfigError("label thresholds must satisfy nu_neg < nu_pos")
        if self.g_reinit <= self.nu_pos:
            raise ConfigError("g_reinit must exceed nu_pos so a fresh guess reads positive")
        if self.grid_resolution <= 0:
            raise ConfigError("grid resolution must be positive")
        if not 1 <= self.n_odds <= 8:
            raise ConfigError("n_odds must lie in [1, 8]")
        if self.grid_magnitude <= 0 or self.grid_noise_std < 0:
            raise ConfigError("grid evidence magnitudes must be positive")
        if self.declare_obstacle >= 0 or self.declare_target <= 0:
            raise ConfigError("declaration thresholds must straddle zero")

    def teleport_position(self) -> tuple[float, float, float]:
        """A parking spot guaranteed to lie outside every workspace."""
        if not self.workspaces:
            return (1e3, 1e3, 0.0)
        x = max(w.x_max for w in self.workspaces) + 5.0
        y = max(w.y_max for w in self.workspaces) + 5.0
        return (x, y, 0.0)


def guessed_target_state(
    position: tuple[float, float, float], params: DomainParams
) -> ObjectState:
    """Fresh guessed-target hypothesis at ``position``."""
    return ObjectState(
        position=position,
        orientation=GUESSED_ORIENTATION,
        size=GUESSED_SIZE,
        g=(params.g_reinit,) * 8,
        m=GUESSED_MOVEABILITY,
        u=STATUS_UPDATING,
        truth_is_target=True,
    )


def validate(state: WorldState, params: DomainParams) -> list[str]:
    """Structural checks; returns human-readable violations (empty = valid)."""
    problems: list[str] = []
    for i, obj in enumerate(state.objects):
        if obj.u not in (STATUS_REMOVED, STATUS_UPDATING, STATUS_OBSTACLE, STATUS_TARGET):
            problems.append(f"object {i}: status {obj.u} outside {{-2, -1, 0, 1}}")
        norm = math.sqrt(sum(v * v for v in obj.orientation))
        if abs(norm - 1.0) > 1e-9:
            problems.append(f"object {i}: orientation norm {norm} not unit")
        if len(obj.g) != 8:
            problems.append(f"object {i}: {len(obj.g)} grid entries, expected 8")
        if any(s <= 0 for s in obj.size):
            problems.append(f"object {i}: non-positive size {obj.size}")
        if obj.m < 0:
            problems.append(f"object {i}: negative moveability odds {obj.m}")
        if obj.u == STATUS_REMOVED:
            x, y, _ = obj.position
            for w in params.workspaces:
                if w.x_min <= x <= w.x_max and w.y_min <= y <= w.y_max:
                    problems.append(f"object {i}: removed but still over workspace")
                    break
    return problems
