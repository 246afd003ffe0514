"""Candidate-action scoring and confidence-bound filtering.

A scorer predicts, for one candidate camera configuration, the
probability that executing it would reveal something new about the
hidden target, together with the prediction's standard deviation.  The
filter keeps candidates whose predicted mean clears
``beta_star(delta)`` standard deviations, which bounds the chance of
keeping a uselessly scored action by ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .core import ConfigError
from .domain.geometry import camera_pose, points_in_frustum, segments_hit_box
from .domain.gridworld import GridWorld
from .domain.types import GUESSED_SIZE, STATUS_REMOVED, DomainParams, ObjectState

_CUBE_OFFSETS = None


def beta_star(delta: float) -> float:
    """Gaussian concentration multiplier sqrt(2 ln(1/delta)).

    A prediction with mean > beta_star(delta) * std is positive with
    probability at least 1 - delta under the Gaussian error model.
    """
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    return math.sqrt(2.0 * math.log(1.0 / delta))


@dataclass(frozen=True)
class ScorePrediction:
    """Predicted success probability and its uncertainty."""

    mean: float
    std: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean <= 1.0:
            raise ConfigError(f"score mean must lie in [0, 1], got {self.mean}")
        if self.std < 0.0:
            raise ConfigError("score std must be non-negative")


class Scorer(Protocol):
    """Anything that can judge candidate configurations."""

    def score(self, vector: np.ndarray) -> ScorePrediction: ...


@dataclass(frozen=True)
class FilterConfig:
    """Knobs of the candidate filter."""

    confidence: float = 0.9
    min_mean: float = 0.10
    max_kept: int = 128
    n_candidates: int = 512

    def __post_init__(self) -> None:
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError("confidence must lie in (0, 1)")
        if self.max_kept < 1 or self.n_candidates < 1:
            raise ConfigError("filter sizes must be positive")


def score_candidates(scorer: Scorer, vectors: np.ndarray) -> list[ScorePrediction]:
    score_many = getattr(scorer, "score_many", None)
    if score_many is not None:
        return score_many(vectors)
    return [scorer.score(v) for v in vectors]


def filter_actions(
    vectors: np.ndarray,
    predictions: Sequence[ScorePrediction],
    config: FilterConfig,
) -> tuple[np.ndarray, list[ScorePrediction]]:
    """Keep candidates that are confidently useful.

    A candidate survives when its mean clears both the concentration
    bound (beta_star standard deviations above zero) and the absolute
    floor.  If nothing survives, the single highest-mean candidate is
    returned so the planner always has one continuous action; if too
    many survive, the highest means win.
    """
    vectors = np.asarray(vectors, dtype=float)
    if len(vectors) != len(predictions):
        raise ConfigError("vectors and predictions must align")
    if len(vectors) == 0:
        raise ConfigError("cannot filter an empty candidate set")
    beta = beta_star(1.0 - config.confidence)
    keep = [
        i
        for i, p in enumerate(predictions)
        if p.mean > beta * p.std and p.mean > config.min_mean
    ]
    if not keep:
        keep = [max(range(len(predictions)), key=lambda i: (predictions[i].mean, -i))]
    if len(keep) > config.max_kept:
        keep.sort(key=lambda i: (-predictions[i].mean, i))
        keep = sorted(keep[: config.max_kept])
    return vectors[keep], [predictions[i] for i in keep]


def _cube_offsets() -> np.ndarray:
    global _CUBE_OFFSETS
    if _CUBE_OFFSETS is None:
        half = np.asarray(GUESSED_SIZE) / 2.0
        signs = np.array(
            [[1 if j & 1 else -1, 1 if j & 2 else -1, 1 if j & 4 else -1] for j in range(8)],
            dtype=float,
        )
        _CUBE_OFFSETS = signs * half[None, :]
    return _CUBE_OFFSETS


class OracleScorer:
    """Monte-Carlo visibility scorer against the current grid world.

    ``trials`` target positions are drawn once from the grid world's
    location distribution (shared across candidates, which also acts as
    common random numbers).  A trial succeeds when at least one
    still-unobserved grid of a target-sized cube placed there would be
    seen from the candidate configuration: inside the frustum, among
    the four nearest grids, and not blocked by a known object.
    """

    def __init__(
        self,
        grid: GridWorld,
        obstacles: Sequence[ObjectState],
        guessed_g: Sequence[float],
        params: DomainParams,
        rng: np.random.Generator,
        trials: int = 64,
        sigma_floor: float = 0.01,
    ):
        if trials < 1:
            raise ConfigError("oracle scorer needs at least one trial")
        self.params = params
        self.trials = trials
        self.sigma_floor = sigma_floor
        self.obstacles = [o for o in obstacles if o.u != STATUS_REMOVED]
        unobserved = np.asarray(guessed_g) <= params.g_reinit + 1e-9
        self.unobserved = np.flatnonzero(unobserved)

        from .domain.gridworld import sample_guessed_target

        half_height = GUESSED_SIZE[2] / 2.0
        self.positions = np.stack(
            [sample_guessed_target(grid, rng, half_height) for _ in range(trials)]
        )
        # (trials, 8, 3) corner cloud of the hypothesised cube
        self.corners = self.positions[:, None, :] + _cube_offsets()[None, :, :]

    def _success_mask(self, vector: np.ndarray) -> np.ndarray:
        p = self.params
        if len(self.unobserved) == 0:
            return np.zeros(self.trials, dtype=bool)
        x, y, yaw, lift, pan, tilt = (float(v) for v in vector)
        camera = camera_pose(x, y, yaw, lift, pan, tilt, p.camera_height)

        flat = self.corners.reshape(-1, 3)
        seen = points_in_frustum(camera, p.fov, flat)
        for obstacle in self.obstacles:
            if not seen.any():
                break
            idx = np.flatnonzero(seen)
            blocked = segments_hit_box(
                camera.position, flat[idx], obstacle.position, obstacle.orientation, obstacle.size
            )
            seen[idx[blocked]] = False
        seen = seen.reshape(self.trials, 8)

        # only the four corners nearest the camera can be reported
        dists = np.linalg.norm(self.corners - camera.position[None, None, :], axis=2)
        ranks = np.argsort(dists, axis=1, kind="stable")
        nearest = np.zeros((self.trials, 8), dtype=bool)
        np.put_along_axis(nearest, ranks[:, :4], True, axis=1)

        usable = seen & nearest
        return usable[:, self.unobserved].any(axis=1)

    def score(self, vector: np.ndarray) -> ScorePrediction:
        mu = float(self._success_mask(vector).mean())
        sigma = max(math.sqrt(mu * (1.0 - mu) / self.trials), self.sigma_floor)
        return ScorePrediction(mean=mu, std=sigma)

    def score_many(self, vectors: np.ndarray) -> list[ScorePrediction]:
        return [self.score(v) for v in vectors]


class TableScorer:
    """File-backed scorer: nearest-neighbour lookup in a score table.

    The table is whitespace-separated text, one row per entry:
    ``a_1 ... a_d mean std``.  Lines starting with ``#`` are comments.
    """

    def __init__(self, points: np.ndarray, means: np.ndarray, stds: np.ndarray):
        self.points = np.asarray(points, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.stds = np.asarray(stds, dtype=float)
        if self.points.ndim != 2 or len(self.points) == 0:
            raise ConfigError("score table needs at least one row")
        if not (len(self.points) == len(self.means) == len(self.stds)):
            raise ConfigError("score table columns must align")

    @classmethod
    def from_file(cls, path: str | Path) -> "TableScorer":
        rows = []
        for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            values = [float(v) for v in body.split()]
            if len(values) < 3:
                raise ConfigError(f"score table line {ln}: need action dims plus mean and std")
            rows.append(values)
        if not rows:
            raise ConfigError(f"score table {path} holds no rows")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ConfigError("score table rows have inconsistent widths")
        data = np.asarray(rows)
        return cls(points=data[:, :-2], means=data[:, -2], stds=data[:, -1])

    def score(self, vector: np.ndarray) -> ScorePrediction:
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.points.shape[1],):
            raise ConfigError(
                f"query has {vector.shape} dims, table stores {self.points.shape[1]}"
            )
        nearest = int(np.argmin(np.linalg.norm(self.points - vector[None, :], axis=1)))
        return ScorePrediction(mean=float(self.means[nearest]), std=float(self.stds[nearest]))
