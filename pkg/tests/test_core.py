import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from deskplan.core import (
    Claim,
    ConfigError,
    Declare,
    MoveConfig,
    ParticleBelief,
    ProblemConfig,
    Remove,
    discounted_return,
    resample,
)


def test_move_config_coerces_to_float_tuple():
    m = MoveConfig((1, 2, 3))
    assert m.vector == (1.0, 2.0, 3.0)
    assert all(isinstance(v, float) for v in m.vector)


def test_actions_hash_and_compare():
    assert MoveConfig((0.5,)) == MoveConfig((0.5,))
    assert Declare(2, Claim.TARGET) == Declare(2, Claim.TARGET)
    assert Declare(2, Claim.TARGET) != Declare(2, Claim.OBSTACLE)
    assert Remove(1) != Remove(2)
    assert len({Remove(1), Remove(1), Remove(2)}) == 2


def test_problem_config_validation():
    ProblemConfig(gamma=0.5)
    with pytest.raises(ConfigError):
        ProblemConfig(gamma=1.0)
    with pytest.raises(ConfigError):
        ProblemConfig(gamma=0.0)
    with pytest.raises(ConfigError):
        ProblemConfig(n_particles=0)
    with pytest.raises(ConfigError):
        ProblemConfig(max_depth=0)


def test_belief_default_weights_are_uniform():
    b = ParticleBelief(["a", "b", "c"])
    assert np.allclose(b.weights, 1.0)
    assert np.allclose(b.normalised_weights(), 1.0 / 3.0)
    assert len(b) == 3


def test_belief_rejects_bad_weights():
    with pytest.raises(ConfigError):
        ParticleBelief([])
    with pytest.raises(ConfigError):
        ParticleBelief(["a"], np.array([1.0, 2.0]))
    with pytest.raises(ConfigError):
        ParticleBelief(["a", "b"], np.array([1.0, -0.5]))
    with pytest.raises(ConfigError):
        ParticleBelief(["a", "b"], np.array([0.0, 0.0]))


def test_discounted_return_hand_values():
    assert discounted_return([], 0.9) == 0.0
    assert discounted_return([5.0], 0.1) == 5.0
    # 1 + 0.5*2 + 0.25*3 = 2.75
    assert math.isclose(discounted_return([1.0, 2.0, 3.0], 0.5), 2.75)


@given(
    st.lists(st.floats(-100, 100), max_size=12),
    st.floats(0.05, 0.99),
)
def test_discounted_return_matches_polynomial(rewards, gamma):
    expected = sum(r * gamma**i for i, r in enumerate(rewards))
    assert math.isclose(discounted_return(rewards, gamma), expected, abs_tol=1e-9)


def test_resample_prefers_heavy_particles():
    rng = np.random.default_rng(0)
    b = ParticleBelief(["light", "heavy"], np.array([1.0, 99.0]))
    out = resample(b, 1000, rng)
    assert np.allclose(out.weights, 1.0)
    heavy = sum(1 for p in out.particles if p == "heavy")
    assert heavy > 950


def test_resample_is_deterministic_per_seed():
    b = ParticleBelief(list(range(10)))
    a = resample(b, 50, np.random.default_rng(7)).particles
    c = resample(b, 50, np.random.default_rng(7)).particles
    assert a == c
    with pytest.raises(ConfigError):
        resample(b, 0, np.random.default_rng(7))
