"""Action-space clustering: k-means partitions, enclosing hyperspheres,
elbow-based cluster-count selection, and uniform ball sampling.

Points are plain ``(n, d)`` arrays.  Callers that cluster robot
configurations are expected to scale each dimension by the action box
half-width first so that metres and radians are comparable; everything
here is plain Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError


@dataclass(frozen=True)
class Hypersphere:
    """Closed ball in the (scaled) continuous action space."""

    center: np.ndarray
    range: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.range < 0:
            raise ConfigError("hypersphere range must be non-negative")

    @property
    def dim(self) -> int:
        return self.center.shape[0]


def _kmeans_pp_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centers by squared-distance weighting."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centers[0] = points[first]
    closest_sq = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = float(closest_sq.sum())
        if total <= 0.0:
            # all points coincide with a chosen center: any choice works
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest_sq / total))
        centers[j] = points[idx]
        closest_sq = np.minimum(closest_sq, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def kmeans(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iter: int = 50,
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with k-means++ seeding.

    Returns ``(labels, centers)`` with ``labels`` an ``(n,)`` int array
    and ``centers`` a ``(k, d)`` array.  Deterministic for a fixed
    generator state.  Empty clusters are re-seeded from the point
    farthest from its assigned center.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ConfigError("points must be a 2-d array")
    n = points.shape[0]
    if k < 1:
        raise ConfigError("k must be positive")
    if k > n:
        raise ConfigError(f"cannot form {k} clusters from {n} points")

    centers = _kmeans_pp_seed(points, k, rng)
    labels = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        dists = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dists, axis=1)
        for j in range(k):
            members = points[new_labels == j]
            if len(members) == 0:
                # farthest point from its center becomes the new seed
                far = int(np.argmax(dists[np.arange(n), new_labels]))
                centers[j] = points[far]
                new_labels[far] = j
            else:
                centers[j] = members.mean(axis=0)
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return labels, centers


def enclose(points: np.ndarray, center: np.ndarray) -> Hypersphere:
    """Smallest ball around ``center`` containing all ``points``."""
    points = np.asarray(points, dtype=float)
    center = np.asarray(center, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ConfigError("enclose needs a non-empty 2-d point array")
    radius = float(np.max(np.linalg.norm(points - center[None, :], axis=1)))
    return Hypersphere(center=center, range=radius)


def medoid(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    """The member point nearest ``center``: the cluster's representative.

    Unlike the mean, a medoid is an actual member, so downstream users
    can treat cluster centers as realisable configurations.
    """
    points = np.asarray(points, dtype=float)
    center = np.asarray(center, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ConfigError("medoid needs a non-empty 2-d point array")
    distances = np.linalg.norm(points - center[None, :], axis=1)
    return points[int(np.argmin(distances))].copy()


def inertia(points: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    """Within-cluster sum of squared distances W(k)."""
    return float(np.sum((points - centers[labels]) ** 2))


def elbow_k(
    points: np.ndarray,
    k_range: tuple[int, int],
    rng: np.random.Generator,
    max_iter: int = 50,
) -> int:
    """Pick a cluster count by the largest bend in the W(k) curve.

    The bend is the maximum second difference W(k-1) - 2 W(k) + W(k+1)
    over the requested range; W is evaluated one step beyond each end
    (where the point count allows) so that the endpoints can win.  Ties
    go to the smaller k; a degenerate range returns its lower end.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    k_min, k_max = k_range
    if k_min < 1 or k_max < k_min:
        raise ConfigError(f"invalid cluster-count range {k_range}")
    k_min = min(k_min, n)
    k_max = min(k_max, n)
    if k_min == k_max:
        return k_min

    lo = max(1, k_min - 1)
    hi = min(n, k_max + 1)
    inertias: dict[int, float] = {}
    for k in range(lo, hi + 1):
        labels, centers = kmeans(points, k, rng, max_iter=max_iter)
        inertias[k] = inertia(points, labels, centers)

    best_k = k_min
    best_bend = -np.inf
    for k in range(k_min, k_max + 1):
        if k - 1 not in inertias or k + 1 not in inertias:
            continue
        bend = inertias[k - 1] - 2.0 * inertias[k] + inertias[k + 1]
        if bend > best_bend + 1e-12:
            best_bend = bend
            best_k = k
    return best_k


def sample_in_hypersphere(sphere: Hypersphere, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the closed ball.

    A degenerate (zero-range) sphere returns its center without
    consuming any randomness, so degenerate spheres behave exactly like
    fixed discrete actions stream-wise.
    """
    if sphere.range == 0.0:
        return sphere.center.copy()
    d = sphere.dim
    direction = rng.standard_normal(d)
    norm = float(np.linalg.norm(direction))
    while norm == 0.0:  # astronomically unlikely; resample for safety
        direction = rng.standard_normal(d)
        norm = float(np.linalg.norm(direction))
    radius = sphere.range * float(rng.uniform()) ** (1.0 / d)
    return sphere.center + (radius / norm) * direction
