import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deskplan.clustering import (
    Hypersphere,
    elbow_k,
    enclose,
    inertia,
    kmeans,
    sample_in_hypersphere,
)
from deskplan.core import ConfigError


def test_hypersphere_validation():
    s = Hypersphere(center=[1.0, 2.0], range=0.5)
    assert s.dim == 2
    assert isinstance(s.center, np.ndarray)
    with pytest.raises(ConfigError):
        Hypersphere(center=[0.0], range=-0.1)


def test_kmeans_rejects_bad_inputs():
    rng = np.random.default_rng(0)
    pts = np.zeros((3, 2))
    with pytest.raises(ConfigError):
        kmeans(pts, 0, rng)
    with pytest.raises(ConfigError):
        kmeans(pts, 4, rng)
    with pytest.raises(ConfigError):
        kmeans(np.zeros(3), 1, rng)


def test_kmeans_separates_obvious_clusters():
    rng = np.random.default_rng(1)
    a = rng.normal(0.0, 0.05, size=(20, 2))
    b = rng.normal(5.0, 0.05, size=(20, 2))
    pts = np.vstack([a, b])
    labels, centers = kmeans(pts, 2, np.random.default_rng(2))
    assert len(set(labels[:20])) == 1
    assert len(set(labels[20:])) == 1
    assert labels[0] != labels[20]
    got = sorted(float(c[0]) for c in centers)
    assert abs(got[0] - 0.0) < 0.1 and abs(got[1] - 5.0) < 0.1


def test_kmeans_deterministic_for_fixed_generator_state():
    pts = np.random.default_rng(3).uniform(size=(40, 3))
    l1, c1 = kmeans(pts, 5, np.random.default_rng(9))
    l2, c2 = kmeans(pts, 5, np.random.default_rng(9))
    assert np.array_equal(l1, l2)
    assert np.array_equal(c1, c2)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 30).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(1, n), st.integers(0, 10_000))
    )
)
def test_kmeans_partition_covers_every_point(args):
    n, k, seed = args
    pts = np.random.default_rng(seed).uniform(size=(n, 2))
    labels, centers = kmeans(pts, k, np.random.default_rng(seed + 1))
    # member sets are pairwise disjoint and cover all points: exact partition
    assert labels.shape == (n,)
    assert centers.shape == (k, 2)
    assert set(labels) == set(range(k))


def test_kmeans_reseeds_empty_clusters():
    # 3 identical points and one outlier cannot fill 3 clusters without reseeding
    pts = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [10.0, 0.0]])
    labels, centers = kmeans(pts, 3, np.random.default_rng(4))
    assert set(labels) == {0, 1, 2}


def test_enclose_contains_all_points():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    sphere = enclose(pts, np.array([0.0, 0.0]))
    assert sphere.range == 2.0
    with pytest.raises(ConfigError):
        enclose(np.zeros((0, 2)), np.zeros(2))


def test_inertia_hand_value():
    pts = np.array([[0.0], [2.0], [10.0]])
    labels = np.array([0, 0, 1])
    centers = np.array([[1.0], [10.0]])
    assert inertia(pts, labels, centers) == 2.0


def test_elbow_k_finds_planted_cluster_count():
    rng = np.random.default_rng(5)
    blobs = [rng.normal(c, 0.05, size=(30, 2)) for c in [(0, 0), (4, 0), (0, 4)]]
    pts = np.vstack(blobs)
    assert elbow_k(pts, (2, 6), np.random.default_rng(6)) == 3


def test_elbow_k_degenerate_ranges():
    pts = np.random.default_rng(7).uniform(size=(10, 2))
    assert elbow_k(pts, (4, 4), np.random.default_rng(0)) == 4
    # range clamps to the point count
    assert elbow_k(pts[:3], (5, 9), np.random.default_rng(0)) == 3
    with pytest.raises(ConfigError):
        elbow_k(pts, (0, 3), np.random.default_rng(0))
    with pytest.raises(ConfigError):
        elbow_k(pts, (5, 2), np.random.default_rng(0))


def test_zero_range_sample_returns_center_without_rng_draws():
    rng = np.random.default_rng(8)
    before = rng.bit_generator.state
    sphere = Hypersphere(center=[1.0, -2.0], range=0.0)
    out = sample_in_hypersphere(sphere, rng)
    assert np.array_equal(out, [1.0, -2.0])
    assert rng.bit_generator.state == before
    out[0] = 99.0  # returned array is a copy, not the stored center
    assert sphere.center[0] == 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.floats(0.01, 5.0), st.integers(0, 10_000))
def test_samples_stay_inside_the_ball(dim, radius, seed):
    rng = np.random.default_rng(seed)
    center = rng.normal(size=dim)
    sphere = Hypersphere(center=center, range=radius)
    for _ in range(20):
        p = sample_in_hypersphere(sphere, rng)
        assert np.linalg.norm(p - center) <= radius + 1e-12


def test_sample_radius_law_in_two_dims():
    # P(|r| <= t R) = t^2 in the plane; check the median point
    rng = np.random.default_rng(9)
    sphere = Hypersphere(center=np.zeros(2), range=1.0)
    radii = np.array(
        [np.linalg.norm(sample_in_hypersphere(sphere, rng)) for _ in range(20_000)]
    )
    frac = float(np.mean(radii <= np.sqrt(0.5)))
    assert abs(frac - 0.5) < 0.02
