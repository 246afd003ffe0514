"""Scenario files: the ground-truth scene plus solver-facing geometry.

A scenario is a YAML document with these sections::

    name: loose1
    seed: 7                      # optional default seed
    workspaces:                  # furniture surfaces
      - {x_min: 0.0, x_max: 1.2, y_min: 0.0, y_max: 0.8, height: 0.7}
    objects:                     # ground truth; exactly one target
      - {position: [0.3, 0.4, 0.75], yaw: 0.0, size: [0.1, 0.1, 0.1],
         target: true, movable: true}
    robot_start: {x: -0.5, y: 0.4, yaw: 0.0, lift: 0.0, pan: 0.0, tilt: 0.3}
    action_box:                  # bounds per continuous action dimension
      x: [-0.8, 2.0]
      y: [-0.8, 1.6]
      yaw: [-3.1416, 3.1416]
      lift: [0.0, 0.4]
      pan: [-0.2618, 0.2618]
      tilt: [-0.5, 0.5]
    candidate_regions:           # optional base-placement rectangles
      - {x_min: -0.6, x_max: -0.2, y_min: 0.0, y_max: 0.8}
    params: {grid_resolution: 0.04}   # optional domain overrides

Unknown keys anywhere are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..core import ConfigError
from .geometry import FovFrustum, quat_from_yaw, quat_normalize
from .gridworld import Workspace
from .model import ActionBox, Region
from .types import DomainParams, RobotState

_BOX_DIMS = ("x", "y", "yaw", "lift", "pan", "tilt")

_PARAM_FIELDS = {
    f.name for f in dataclasses.fields(DomainParams) if f.name not in ("workspaces", "fov")
}
_FOV_FIELDS = {f.name for f in dataclasses.fields(FovFrustum)}


@dataclass(frozen=True)
class ScenarioObject:
    """Ground-truth object description."""

    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]
    size: tuple[float, float, float]
    target: bool = False
    movable: bool = True


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to instantiate an environment and a solver."""

    name: str
    workspaces: tuple[Workspace, ...]
    objects: tuple[ScenarioObject, ...]
    robot_start: RobotState
    action_box: ActionBox
    candidate_regions: tuple[Region, ...]
    params: DomainParams
    seed: int = 0


def _check_keys(mapping: Mapping[str, Any], allowed: set[str], context: str) -> None:
    if not isinstance(mapping, Mapping):
        raise ConfigError(f"{context} must be a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {context}")


def _vector(value: Any, n: int, context: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ConfigError(f"{context} must be a list of {n} numbers")
    return tuple(float(v) for v in value)


def _load_workspace(raw: Mapping[str, Any], i: int) -> Workspace:
    _check_keys(raw, {"x_min", "x_max", "y_min", "y_max", "height"}, f"workspaces[{i}]")
    try:
        return Workspace(**{k: float(raw[k]) for k in ("x_min", "x_max", "y_min", "y_max", "height")})
    except KeyError as exc:
        raise ConfigError(f"workspaces[{i}] missing key {exc}") from exc


def _load_object(raw: Mapping[str, Any], i: int) -> ScenarioObject:
    _check_keys(
        raw,
        {"position", "yaw", "orientation", "size", "target", "movable"},
        f"objects[{i}]",
    )
    if "position" not in raw or "size" not in raw:
        raise ConfigError(f"objects[{i}] needs position and size")
    if "yaw" in raw and "orientation" in raw:
        raise ConfigError(f"objects[{i}] must give yaw or orientation, not both")
    if "orientation" in raw:
        orientation = quat_normalize(_vector(raw["orientation"], 4, f"objects[{i}].orientation"))
    else:
        orientation = quat_from_yaw(float(raw.get("yaw", 0.0)))
    size = _vector(raw["size"], 3, f"objects[{i}].size")
    if any(s <= 0 for s in size):
        raise ConfigError(f"objects[{i}] has non-positive size {size}")
    return ScenarioObject(
        position=_vector(raw["position"], 3, f"objects[{i}].position"),
        orientation=orientation,
        size=size,
        target=bool(raw.get("target", False)),
        movable=bool(raw.get("movable", True)),
    )


def _load_robot(raw: Mapping[str, Any]) -> RobotState:
    _check_keys(raw, set(_BOX_DIMS), "robot_start")
    return RobotState(*(float(raw.get(k, 0.0)) for k in _BOX_DIMS))


def _load_box(raw: Mapping[str, Any]) -> ActionBox:
    _check_keys(raw, set(_BOX_DIMS), "action_box")
    low, high = [], []
    for dim in _BOX_DIMS:
        if dim not in raw:
            raise ConfigError(f"action_box missing dimension {dim!r}")
        lo, hi = _vector(raw[dim], 2, f"action_box.{dim}")
        low.append(lo)
        high.append(hi)
    return ActionBox(tuple(low), tuple(high))


def _load_region(raw: Mapping[str, Any], i: int) -> Region:
    _check_keys(raw, {"x_min", "x_max", "y_min", "y_max"}, f"candidate_regions[{i}]")
    try:
        return Region(**{k: float(raw[k]) for k in ("x_min", "x_max", "y_min", "y_max")})
    except KeyError as exc:
        raise ConfigError(f"candidate_regions[{i}] missing key {exc}") from exc


def _load_params(raw: Mapping[str, Any], workspaces: tuple[Workspace, ...]) -> DomainParams:
    _check_keys(raw, _PARAM_FIELDS | {"fov"}, "params")
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        if key == "fov":
            _check_keys(value, _FOV_FIELDS, "params.fov")
            kwargs["fov"] = FovFrustum(**{k: float(v) for k, v in value.items()})
        elif key == "n_odds":
            kwargs[key] = int(value)
        else:
            kwargs[key] = float(value)
    return DomainParams(workspaces=workspaces, **kwargs)


def parse_scenario(text: str, name_hint: str = "scenario") -> ScenarioSpec:
    """Parse and validate a YAML scenario document."""
    raw = yaml.safe_load(text)
    if not isinstance(raw, Mapping):
        raise ConfigError("scenario document must be a mapping")
    _check_keys(
        raw,
        {"name", "seed", "workspaces", "objects", "robot_start", "action_box",
         "candidate_regions", "params"},
        "scenario",
    )
    for section in ("workspaces", "objects", "robot_start", "action_box"):
        if section not in raw:
            raise ConfigError(f"scenario missing required section {section!r}")

    workspaces = tuple(_load_workspace(w, i) for i, w in enumerate(raw["workspaces"]))
    if not workspaces:
        raise ConfigError("scenario needs at least one workspace")
    objects = tuple(_load_object(o, i) for i, o in enumerate(raw["objects"]))
    targets = [i for i, o in enumerate(objects) if o.target]
    if len(targets) != 1:
        raise ConfigError(f"scenario must contain exactly one target object, found {len(targets)}")
    for i, obj in enumerate(objects):
        x, y, _ = obj.position
        if not any(w.contains(x, y) for w in workspaces):
            raise ConfigError(f"objects[{i}] lies outside every workspace")

    params = _load_params(raw.get("params", {}), workspaces)
    return ScenarioSpec(
        name=str(raw.get("name", name_hint)),
        workspaces=workspaces,
        objects=objects,
        robot_start=_load_robot(raw["robot_start"]),
        action_box=_load_box(raw["action_box"]),
        candidate_regions=tuple(
            _load_region(r, i) for i, r in enumerate(raw.get("candidate_regions", []))
        ),
        params=params,
        seed=int(raw.get("seed", 0)),
    )


def builtin_scenario_names() -> list[str]:
    root = resources.files("deskplan") / "scenarios"
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_scenario(source: str | Path) -> ScenarioSpec:
    """Load a scenario from a file path or a built-in scenario name."""
    path = Path(source)
    if path.exists():
        return parse_scenario(path.read_text(), name_hint=path.stem)
    builtin = resources.files("deskplan") / "scenarios" / f"{source}.yaml"
    if builtin.is_file():
        return parse_scenario(builtin.read_text(), name_hint=str(source))
    raise ConfigError(
        f"scenario {source!r} is neither a file nor a built-in scenario "
        f"(available: {', '.join(builtin_scenario_names())})"
    )
