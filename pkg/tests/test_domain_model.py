import math

import numpy as np
import pytest

from deskplan.core import Claim, ConfigError, Declare, MoveConfig, Remove
from deskplan.domain.gridworld import Workspace
from deskplan.domain.model import (
    ActionBox,
    ObjectSearchModel,
    Region,
    base_in_footprint,
    declare_passes,
    declare_statistic,
    discrete_actions,
    guessed_placeholder_position,
    is_terminal,
    moveability_sample,
    observe,
    observe_object,
    random_action,
    reward,
    sample_config,
    transition,
    visible_grids,
)
from deskplan.domain.types import (
    STATUS_OBSTACLE,
    STATUS_REMOVED,
    STATUS_TARGET,
    STATUS_UPDATING,
    DomainParams,
    Label,
    Observation,
    ObjectState,
    RobotState,
    WorldState,
)

_WS = Workspace(2.0, 3.0, 0.0, 1.0, 0.4)


def _params(**kw):
    kw.setdefault("workspaces", (_WS,))
    kw.setdefault("grid_noise_std", 0.0)
    return DomainParams(**kw)


def _obj(g=(0.0,) * 8, u=STATUS_UPDATING, m=9.0, pos=(2.2, 0.5, 0.5), **kw):
    return ObjectState(
        position=pos,
        orientation=(0.0, 0.0, 0.0, 1.0),
        size=(0.2, 0.2, 0.2),
        g=g,
        m=m,
        u=u,
        **kw,
    )


def _robot(x=1.2, y=0.5, tilt=None):
    if tilt is None:
        tilt = math.atan2(0.5, 1.0)  # drop from camera height onto the object
    return RobotState(x=x, y=y, yaw=0.0, lift=0.0, pan=0.0, tilt=tilt)


def test_moveability_sample_edge_odds():
    rng = np.random.default_rng(0)
    assert not any(moveability_sample(0.0, rng) for _ in range(100))
    assert all(moveability_sample(1e9, rng) for _ in range(100))
    with pytest.raises(ConfigError):
        moveability_sample(-1.0, rng)


def test_moveability_sample_frequency():
    rng = np.random.default_rng(1)
    n = 20_000
    hits = sum(1 for _ in range(n) if moveability_sample(9.0, rng))
    # odds 9 mean success probability 0.9; 4-sigma band
    assert abs(hits / n - 0.9) < 4.0 * math.sqrt(0.09 / n)


def test_declare_statistic_is_mean_of_smallest():
    params = _params()
    obj = _obj(g=(0.9, 0.5, 0.8, 0.7, 0.6, 1.0, 0.45, 0.95))
    # two smallest entries are 0.45 and 0.5
    assert math.isclose(declare_statistic(obj, params), 0.475)
    assert declare_passes(obj, Claim.TARGET, params)
    assert not declare_passes(obj, Claim.OBSTACLE, params)


def test_declare_thresholds_are_strict():
    params = _params()
    at_gate = _obj(g=(0.4,) * 8)
    assert not declare_passes(at_gate, Claim.TARGET, params)
    below = _obj(g=(-0.4,) * 8)
    assert not declare_passes(below, Claim.OBSTACLE, params)
    past = _obj(g=(-0.41,) * 8)
    assert declare_passes(past, Claim.OBSTACLE, params)


def test_transition_move_legal_and_footprint():
    params = _params()
    state = WorldState(_robot(), (_obj(),))
    vec = (1.5, 0.5, 0.0, 0.1, 0.0, 0.3)
    nxt, illegal = transition(state, MoveConfig(vec), params, np.random.default_rng(0))
    assert not illegal
    assert nxt.robot.as_vector() == vec
    assert nxt.objects == state.objects

    onto, illegal = transition(
        state, MoveConfig((2.5, 0.5, 0.0, 0.0, 0.0, 0.0)), params, np.random.default_rng(0)
    )
    assert illegal and onto is state
    _, illegal = transition(state, MoveConfig((1.0, 1.0)), params, np.random.default_rng(0))
    assert illegal


def test_transition_declare_gate_and_status():
    params = _params()
    ready = _obj(g=(0.5,) * 8)
    state = WorldState(_robot(), (ready,))
    nxt, illegal = transition(state, Declare(0, Claim.TARGET), params, np.random.default_rng(0))
    assert not illegal
    assert nxt.objects[0].u == STATUS_TARGET

    # an already-declared object cannot be declared again
    again, illegal = transition(nxt, Declare(0, Claim.TARGET), params, np.random.default_rng(0))
    assert illegal
    # unconvincing evidence keeps the gate shut
    weak = WorldState(_robot(), (_obj(g=(0.2,) * 8),))
    _, illegal = transition(weak, Declare(0, Claim.TARGET), params, np.random.default_rng(0))
    assert illegal
    _, illegal = transition(state, Declare(5, Claim.TARGET), params, np.random.default_rng(0))
    assert illegal


def test_transition_remove_moveability_and_teleport():
    params = _params()
    declared = _obj(u=STATUS_TARGET, m=1e9)
    state = WorldState(_robot(), (declared,))
    nxt, illegal = transition(state, Remove(0), params, np.random.default_rng(0))
    assert not illegal
    gone = nxt.objects[0]
    assert gone.u == STATUS_REMOVED
    assert gone.removed_as_target
    x, y, _ = gone.position
    assert not base_in_footprint(x, y, params)

    stuck = WorldState(_robot(), (_obj(u=STATUS_OBSTACLE, m=0.0),))
    _, illegal = transition(stuck, Remove(0), params, np.random.default_rng(0))
    assert illegal  # immovable object never yields
    undeclared = WorldState(_robot(), (_obj(u=STATUS_UPDATING),))
    _, illegal = transition(undeclared, Remove(0), params, np.random.default_rng(0))
    assert illegal


def test_reward_ladder():
    params = _params()
    robot = _robot()
    ready = _obj(g=(0.5,) * 8)
    state = WorldState(robot, (ready,))

    moved = WorldState(_robot(x=1.4), (ready,))
    assert reward(state, MoveConfig((1.4, 0.5, 0, 0, 0, 0)), moved, params) == params.r_min
    assert (
        reward(state, MoveConfig((2.5, 0.5, 0, 0, 0, 0)), state, params) == params.r_ill
    )

    declared = WorldState(robot, (ready.evolve(u=STATUS_TARGET),))
    assert (
        reward(state, Declare(0, Claim.TARGET), declared, params)
        == params.r_min + params.r_ct
    )
    # the no-op transition marks a failed declaration
    assert reward(state, Declare(0, Claim.TARGET), state, params) == params.r_ill

    obstacle = WorldState(robot, (ready.evolve(u=STATUS_OBSTACLE),))
    assert (
        reward(state, Declare(0, Claim.OBSTACLE), obstacle, params)
        == params.r_min + params.r_co
    )

    removed = WorldState(robot, (declared.objects[0].evolve(u=STATUS_REMOVED),))
    assert (
        reward(declared, Remove(0), removed, params)
        == 2.0 * params.r_min + params.r_max
    )
    obs_removed = WorldState(robot, (obstacle.objects[0].evolve(u=STATUS_REMOVED),))
    assert reward(obstacle, Remove(0), obs_removed, params) == 2.0 * params.r_min
    assert reward(declared, Remove(0), declared, params) == params.r_ill


def test_reward_withholds_bonus_when_truth_contradicts():
    params = _params()
    robot = _robot()
    liar = _obj(g=(0.5,) * 8, truth_is_target=False)
    state = WorldState(robot, (liar,))
    declared = WorldState(robot, (liar.evolve(u=STATUS_TARGET),))
    assert reward(state, Declare(0, Claim.TARGET), declared, params) == params.r_min

    true_target = _obj(g=(-0.5,) * 8, truth_is_target=True)
    state2 = WorldState(robot, (true_target,))
    as_obstacle = WorldState(robot, (true_target.evolve(u=STATUS_OBSTACLE),))
    assert reward(state2, Declare(0, Claim.OBSTACLE), as_obstacle, params) == params.r_min


def test_is_terminal_variants():
    assert not is_terminal(WorldState(_robot(), (_obj(),)))
    truth_gone = _obj(u=STATUS_REMOVED, truth_is_target=True)
    assert is_terminal(WorldState(_robot(), (truth_gone,)))
    # the hypothesis side ends when anything was removed under a target claim
    maybe = _obj(u=STATUS_REMOVED, truth_is_target=None, removed_as_target=True)
    assert is_terminal(WorldState(_robot(), (maybe,)))
    bystander = _obj(u=STATUS_REMOVED, truth_is_target=False, removed_as_target=False)
    assert not is_terminal(WorldState(_robot(), (bystander,)))


def test_discrete_actions_by_status():
    state = WorldState(
        _robot(),
        (
            _obj(u=STATUS_UPDATING),
            _obj(u=STATUS_TARGET),
            _obj(u=STATUS_REMOVED),
            _obj(u=STATUS_OBSTACLE),
        ),
    )
    assert discrete_actions(state) == [
        Declare(0, Claim.TARGET),
        Declare(0, Claim.OBSTACLE),
        Remove(1),
        Remove(3),
    ]


def test_visible_grids_sees_near_face():
    params = _params()
    objects = (_obj(),)
    seen = visible_grids(_robot(), objects, 0, params)
    # the -x face (corner bits 0, 2, 4, 6) faces the camera
    assert {0, 2, 4, 6} <= set(seen)


def test_visible_grids_blocked_by_other_object():
    params = _params()
    blocker = ObjectState(
        position=(1.7, 0.5, 0.7),
        orientation=(0.0, 0.0, 0.0, 1.0),
        size=(0.1, 0.8, 0.8),
        g=(0.0,) * 8,
        m=0.0,
        u=STATUS_OBSTACLE,
    )
    objects = (_obj(), blocker)
    assert visible_grids(_robot(), objects, 0, params) == []
    # a removed blocker no longer occludes
    objects = (_obj(), blocker.evolve(u=STATUS_REMOVED))
    assert visible_grids(_robot(), objects, 0, params) != []


def test_observe_object_labels_follow_current_odds():
    params = _params()
    g = [0.0] * 8
    g[0], g[2], g[4], g[6] = 0.5, -0.5, 0.05, 0.2
    objects = (_obj(g=tuple(g)),)
    record, evolved = observe_object(_robot(), objects, 0, params, np.random.default_rng(0))
    assert record.index == 0
    assert record.grids == (0, 2, 4, 6)
    assert record.labels == (Label.POS, Label.NEG, Label.ZERO, Label.POS)
    # with zero noise the deltas are exactly +-c_o or 0
    assert math.isclose(evolved.g[0], 0.6)
    assert math.isclose(evolved.g[2], -0.6)
    assert math.isclose(evolved.g[4], 0.05)
    assert math.isclose(evolved.g[6], 0.3)
    assert evolved.g[1] == 0.0  # far-face grids untouched


def test_observe_object_marks_occluded_members_zero():
    params = _params()
    # a thin low slab in front of the object's bottom corners only
    blocker = ObjectState(
        position=(2.0, 0.5, 0.45),
        orientation=(0.0, 0.0, 0.0, 1.0),
        size=(0.05, 0.8, 0.1),
        g=(0.0,) * 8,
        m=0.0,
        u=STATUS_OBSTACLE,
    )
    g = [0.5] * 8
    objects = (_obj(g=tuple(g)), blocker)
    record, evolved = observe_object(_robot(), objects, 0, params, np.random.default_rng(0))
    assert record.grids == (0, 2, 4, 6)
    # bottom corners 0 and 2 hide behind the slab, top ones stay visible
    assert record.labels == (Label.ZERO, Label.ZERO, Label.POS, Label.POS)
    assert math.isclose(evolved.g[0], 0.5)
    assert math.isclose(evolved.g[4], 0.6)


def test_observe_object_skips_removed_and_invisible():
    params = _params()
    gone = _obj(u=STATUS_REMOVED)
    record, unchanged = observe_object(_robot(), (gone,), 0, params, np.random.default_rng(0))
    assert record is None and unchanged is gone
    away = _robot(tilt=-1.0)  # looking up at the ceiling
    record, unchanged = observe_object(away, (_obj(),), 0, params, np.random.default_rng(0))
    assert record is None


def test_observe_reports_objects_in_index_order():
    params = _params()
    near = _obj(pos=(2.2, 0.35, 0.5), g=(0.5,) * 8)
    far = _obj(pos=(2.2, 0.65, 0.5), g=(0.5,) * 8)
    state = WorldState(_robot(), (near, far))
    obs, successor = observe(state, MoveConfig((0,) * 6), params, np.random.default_rng(0))
    assert [r.index for r in obs.records] == [0, 1]
    assert successor.objects[0].g != near.g


def test_observation_key_excludes_detections():
    from deskplan.domain.types import Detection, ObjectObservation

    rec = ObjectObservation(index=1, grids=(0, 1, 2, 3), labels=(Label.POS,) * 4)
    det = Detection(index=2, position=(0, 0, 0), orientation=(0, 0, 0, 1), size=(1, 1, 1))
    with_det = Observation(records=(rec,), detections=(det,))
    without = Observation(records=(rec,))
    assert with_det.key() == without.key()
    assert with_det.key() == ((1, (0, 1, 2, 3), ("pos", "pos", "pos", "pos")),)


def test_action_box_and_region_validation():
    box = ActionBox(low=(0.0, -1.0), high=(1.0, 1.0))
    assert box.dim == 2
    np.testing.assert_allclose(box.clip(np.array([2.0, -3.0])), [1.0, -1.0])
    np.testing.assert_allclose(box.half_widths(), [0.5, 1.0])
    np.testing.assert_allclose(box.center(), [0.5, 0.0])
    with pytest.raises(ConfigError):
        ActionBox(low=(0.0,), high=(0.0,))
    with pytest.raises(ConfigError):
        ActionBox(low=(0.0, 0.0), high=(1.0,))
    region = Region(0.0, 2.0, 0.0, 0.5)
    assert region.area == 1.0
    with pytest.raises(ConfigError):
        Region(1.0, 0.0, 0.0, 1.0)


def test_sample_config_respects_regions():
    box = ActionBox(low=(0.0,) * 6, high=(10.0,) * 6)
    regions = [Region(4.0, 5.0, 4.0, 5.0)]
    rng = np.random.default_rng(0)
    for _ in range(50):
        vec = sample_config(box, regions, rng)
        assert 4.0 <= vec[0] <= 5.0 and 4.0 <= vec[1] <= 5.0
        assert all(0.0 <= v <= 10.0 for v in vec[2:])


def test_model_step_composes_pieces():
    params = _params()
    box = ActionBox(low=(0.0, 0.0, -math.pi, 0.0, -1.0, -1.0), high=(4.0, 1.0, math.pi, 0.5, 1.0, 1.0))
    model = ObjectSearchModel(params, box)
    state = WorldState(_robot(), (_obj(),))
    out = model.step(state, MoveConfig((1.0, 0.2, 0.0, 0.0, 0.0, 0.46)), np.random.default_rng(0))
    assert out.reward == params.r_min
    assert not out.terminal
    assert isinstance(out.observation, tuple)
    decoded = model.decode_continuous(np.array([9.0, 0.5, 0.0, 0.0, 0.0, 0.0]))
    assert decoded.vector[0] == 4.0  # clipped into the box


def test_guessed_placeholder_sits_off_every_workspace():
    params = _params()
    x, y, _ = guessed_placeholder_position(params)
    assert not base_in_footprint(x, y, params)


def test_random_action_mixes_discrete_and_moves():
    params = _params()
    box = ActionBox(low=(0.0,) * 6, high=(4.0, 1.0, 1.0, 1.0, 1.0, 1.0))
    ready = _obj(g=(0.5,) * 8)
    state = WorldState(_robot(), (ready,))
    rng = np.random.default_rng(0)
    kinds = {MoveConfig: 0, Declare: 0}
    for _ in range(500):
        a = random_action(state, params, box, (), rng)
        kinds[type(a)] += 1
    assert kinds[Declare] > 0 and kinds[MoveConfig] > 0
    # without any passing declaration, every draw is a move off the furniture
    idle = WorldState(_robot(), (_obj(),))
    for _ in range(50):
        a = random_action(idle, params, box, (), rng)
        assert isinstance(a, MoveConfig)
        assert not base_in_footprint(a.vector[0], a.vector[1], params)
