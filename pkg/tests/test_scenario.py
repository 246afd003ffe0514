import math

import pytest

from deskplan.core import ConfigError
from deskplan.domain.scenario import (
    builtin_scenario_names,
    load_scenario,
    parse_scenario,
)

_MINIMAL = """
name: demo
workspaces:
  - {x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0, height: 0.5}
objects:
  - {position: [0.5, 0.5, 0.55], size: [0.1, 0.1, 0.1], target: true}
robot_start: {x: -0.5, y: 0.5}
action_box:
  x: [-1.0, 2.0]
  y: [-1.0, 2.0]
  yaw: [-3.1416, 3.1416]
  lift: [0.0, 0.4]
  pan: [-0.3, 0.3]
  tilt: [-0.5, 1.2]
"""


def test_parse_minimal_scenario():
    spec = parse_scenario(_MINIMAL)
    assert spec.name == "demo"
    assert spec.seed == 0
    assert len(spec.workspaces) == 1
    assert spec.objects[0].target
    assert spec.objects[0].orientation == (0.0, 0.0, 0.0, 1.0)
    assert spec.robot_start.x == -0.5
    assert spec.robot_start.tilt == 0.0  # unspecified dimensions default to zero
    assert spec.action_box.dim == 6
    assert spec.candidate_regions == ()
    assert spec.params.workspaces == spec.workspaces


def test_parse_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_scenario(_MINIMAL + "\nfrobnicate: 1\n")
    bad_obj = _MINIMAL.replace("target: true}", "target: true, colour: red}")
    with pytest.raises(ConfigError, match="objects\\[0\\]"):
        parse_scenario(bad_obj)


def test_parse_requires_exactly_one_target():
    none = _MINIMAL.replace("target: true", "target: false")
    with pytest.raises(ConfigError, match="exactly one target"):
        parse_scenario(none)
    doc = _MINIMAL.replace(
        "objects:\n",
        "objects:\n  - {position: [0.2, 0.2, 0.55], size: [0.1, 0.1, 0.1], target: true}\n",
    )
    with pytest.raises(ConfigError, match="exactly one target"):
        parse_scenario(doc)


def test_parse_rejects_floating_objects():
    doc = _MINIMAL.replace("[0.5, 0.5, 0.55]", "[5.0, 5.0, 0.55]")
    with pytest.raises(ConfigError, match="outside every workspace"):
        parse_scenario(doc)


def test_parse_yaw_orientation_conflict():
    doc = _MINIMAL.replace(
        "size: [0.1, 0.1, 0.1], target: true",
        "size: [0.1, 0.1, 0.1], target: true, yaw: 0.5, orientation: [0, 0, 0, 1]",
    )
    with pytest.raises(ConfigError, match="yaw or orientation"):
        parse_scenario(doc)


def test_parse_yaw_becomes_quaternion():
    doc = _MINIMAL.replace("target: true}", "target: true, yaw: 1.5708}")
    spec = parse_scenario(doc)
    qx, qy, qz, qw = spec.objects[0].orientation
    assert math.isclose(qz, math.sin(0.7854), rel_tol=1e-4)
    assert math.isclose(qw, math.cos(0.7854), rel_tol=1e-4)


def test_parse_missing_sections_and_box_dims():
    with pytest.raises(ConfigError, match="missing required section"):
        parse_scenario("name: x\n")
    doc = _MINIMAL.replace("  tilt: [-0.5, 1.2]\n", "")
    with pytest.raises(ConfigError, match="action_box missing dimension"):
        parse_scenario(doc)


def test_parse_param_overrides():
    doc = _MINIMAL + "params: {grid_resolution: 0.05, n_odds: 3}\n"
    spec = parse_scenario(doc)
    assert spec.params.grid_resolution == 0.05
    assert spec.params.n_odds == 3
    assert isinstance(spec.params.n_odds, int)
    bad = _MINIMAL + "params: {gamma: 0.9}\n"
    with pytest.raises(ConfigError, match="unknown key"):
        parse_scenario(bad)


def test_builtin_scenarios_all_load():
    names = builtin_scenario_names()
    assert names == sorted(names)
    assert {"loose1", "hidden1", "covered1", "complex1"} <= set(names)
    for name in names:
        spec = load_scenario(name)
        assert spec.name == name
        assert sum(1 for o in spec.objects if o.target) == 1


def test_load_scenario_from_path(tmp_path):
    path = tmp_path / "mine.yaml"
    path.write_text(_MINIMAL.replace("name: demo\n", ""))
    spec = load_scenario(path)
    assert spec.name == "mine"  # file stem backs an unnamed document
    with pytest.raises(ConfigError, match="neither a file nor a built-in"):
        load_scenario("definitely-not-here")
