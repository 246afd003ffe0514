"""Camera and box geometry for the object-search domain.

Conventions:

* World frame is right-handed with +z up.
* The camera carrier yaw is measured about +z; pan adds to yaw and a
  positive tilt pitches the view downward.
* Box corner ``j`` takes its sign pattern from the bits of ``j``:
  bit 0 -> +x half, bit 1 -> +y half, bit 2 -> +z half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ConfigError

_CORNER_SIGNS = np.array(
    [[1 if j & 1 else -1, 1 if j & 2 else -1, 1 if j & 4 else -1] for j in range(8)],
    dtype=float,
)


def quat_normalize(q: tuple[float, float, float, float]) -> tuple[float, float, float, float]:
    x, y, z, w = q
    n = math.sqrt(x * x + y * y + z * z + w * w)
    if n == 0.0:
        raise ConfigError("zero quaternion")
    return (x / n, y / n, z / n, w / n)


def quat_from_yaw(yaw: float) -> tuple[float, float, float, float]:
    half = 0.5 * yaw
    return (0.0, 0.0, math.sin(half), math.cos(half))


def quat_to_matrix(q: tuple[float, float, float, float]) -> np.ndarray:
    """Rotation matrix whose columns are the box axes in world frame."""
    x, y, z, w = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)],
            [2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)],
            [2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)],
        ]
    )


def box_corners(
    position: tuple[float, float, float],
    orientation: tuple[float, float, float, float],
    size: tuple[float, float, float],
) -> np.ndarray:
    """(8, 3) world-frame corner array in the canonical bit order."""
    rot = quat_to_matrix(orientation)
    half = np.asarray(size, dtype=float) / 2.0
    local = _CORNER_SIGNS * half[None, :]
    return np.asarray(position, dtype=float)[None, :] + local @ rot.T


@dataclass(frozen=True)
class FovFrustum:
    """Symmetric camera frustum.

    ``angle`` is the full horizontal opening; ``aspect`` is the
    vertical/horizontal extent ratio; ``near``/``far`` bound the depth.
    """

    angle: float = math.pi / 3.0
    aspect: float = 480.0 / 600.0
    near: float = 0.5
    far: float = 1.7

    def __post_init__(self) -> None:
        if not 0.0 < self.angle < math.pi:
            raise ConfigError("frustum angle must lie in (0, pi)")
        if self.aspect <= 0.0:
            raise ConfigError("frustum aspect must be positive")
        if not 0.0 < self.near < self.far:
            raise ConfigError("frustum needs 0 < near < far")

    @property
    def tan_half_h(self) -> float:
        return math.tan(self.angle / 2.0)

    @property
    def tan_half_v(self) -> float:
        return self.aspect * math.tan(self.angle / 2.0)


@dataclass(frozen=True)
class CameraPose:
    """World-frame camera origin and orthonormal view basis."""

    position: np.ndarray
    forward: np.ndarray
    right: np.ndarray
    up: np.ndarray


def camera_pose(
    x: float, y: float, yaw: float, lift: float, pan: float, tilt: float, camera_height: float
) -> CameraPose:
    heading = yaw + pan
    ch, sh = math.cos(heading), math.sin(heading)
    ct, st = math.cos(tilt), math.sin(tilt)
    position = np.array([x, y, camera_height + lift])
    forward = np.array([ch * ct, sh * ct, -st])
    right = np.array([sh, -ch, 0.0])
    up = np.cross(right, forward)
    return CameraPose(position=position, forward=forward, right=right, up=up)


def points_in_frustum(camera: CameraPose, fov: FovFrustum, points: np.ndarray) -> np.ndarray:
    """Boolean mask over an (n, 3) point array."""
    rel = points - camera.position[None, :]
    depth = rel @ camera.forward
    lateral = rel @ camera.right
    vertical = rel @ camera.up
    return (
        (depth >= fov.near)
        & (depth <= fov.far)
        & (np.abs(lateral) <= depth * fov.tan_half_h)
        & (np.abs(vertical) <= depth * fov.tan_half_v)
    )


def segment_hits_box(
    p0: np.ndarray,
    p1: np.ndarray,
    position: tuple[float, float, float],
    orientation: tuple[float, float, float, float],
    size: tuple[float, float, float],
) -> bool:
    """True when the open segment p0->p1 passes through the oriented box."""
    rot = quat_to_matrix(orientation)
    a = rot.T @ (np.asarray(p0) - np.asarray(position))
    b = rot.T @ (np.asarray(p1) - np.asarray(position))
    half = np.asarray(size, dtype=float) / 2.0
    direction = b - a
    t_min, t_max = 0.0, 1.0
    for i in range(3):
        d = direction[i]
        if abs(d) < 1e-12:
            if abs(a[i]) > half[i]:
                return False
            continue
        t1 = (-half[i] - a[i]) / d
        t2 = (half[i] - a[i]) / d
        if t1 > t2:
            t1, t2 = t2, t1
        t_min = max(t_min, t1)
        t_max = min(t_max, t2)
        if t_min > t_max:
            return False
    # require a real interior crossing, not a graze at either endpoint
    return t_max > 1e-9 and t_min < 1.0 - 1e-9


def segments_hit_box(
    origin: np.ndarray,
    targets: np.ndarray,
    position: tuple[float, float, float],
    orientation: tuple[float, float, float, float],
    size: tuple[float, float, float],
) -> np.ndarray:
    """Vectorised ``segment_hits_box`` for one origin and (n, 3) targets."""
    rot = quat_to_matrix(orientation)
    pos = np.asarray(position, dtype=float)
    a = rot.T @ (np.asarray(origin, dtype=float) - pos)
    b = (targets - pos[None, :]) @ rot
    half = np.asarray(size, dtype=float) / 2.0
    direction = b - a[None, :]
    n = targets.shape[0]
    t_min = np.zeros(n)
    t_max = np.ones(n)
    alive = np.ones(n, dtype=bool)
    for i in range(3):
        d = direction[:, i]
        small = np.abs(d) < 1e-12
        alive &= ~(small & (np.abs(a[i]) > half[i]))
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-half[i] - a[i]) / d
            t2 = (half[i] - a[i]) / d
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        use = ~small
        t_min = np.where(use, np.maximum(t_min, lo), t_min)
        t_max = np.where(use, np.minimum(t_max, hi), t_max)
    alive &= t_min <= t_max
    return alive & (t_max > 1e-9) & (t_min < 1.0 - 1e-9)


def nearest_four(point: np.ndarray, corners: np.ndarray) -> tuple[int, int, int, int]:
    """Indices of the 4 corners closest to ``point``.

    Ties break toward the lower corner index; the result is reported in
    ascending index order so observations have one canonical form.
    """
    dists = np.linalg.norm(corners - np.asarray(point)[None, :], axis=1)
    order = np.argsort(dists, kind="stable")[:4]
    return tuple(sorted(int(i) for i in order))  # type: ignore[return-value]
