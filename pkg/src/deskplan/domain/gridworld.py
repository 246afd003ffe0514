"""Log-odds grid world over workspace surfaces.

Each workspace contributes a rectangle of cells at its surface height.
Cell evidence is additive in log-odds space, so independent
observations combine by plain summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ConfigError

# keep exp() finite while leaving plenty of dynamic range
_LOG_ODDS_CLAMP = 30.0


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned furniture surface the robot searches over."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    height: float

    def __post_init__(self) -> None:
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ConfigError("workspace must have positive extent")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


def prob_to_odds(p: float) -> float:
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"probability must lie in [0, 1), got {p}")
    return p / (1.0 - p)


def odds_to_prob(o: float) -> float:
    if o < 0.0:
        raise ConfigError(f"odds must be non-negative, got {o}")
    return o / (1.0 + o)


def prob_to_log_odds(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ConfigError(f"probability must lie in (0, 1), got {p}")
    return math.log(p / (1.0 - p))


def log_odds_to_prob(l: float) -> float:
    return 1.0 / (1.0 + math.exp(-l))


def log_odds_update(current: float, delta: float) -> float:
    """Eq-style additive evidence accumulation."""
    return current + delta


class GridWorld:
    """Flattened log-odds cells across every workspace surface."""

    def __init__(self, workspaces, resolution: float):
        if resolution <= 0:
            raise ConfigError("grid resolution must be positive")
        if not workspaces:
            raise ConfigError("grid world needs at least one workspace")
        self.workspaces = tuple(workspaces)
        self.resolution = float(resolution)

        self._shapes: list[tuple[int, int]] = []
        self._offsets: list[int] = []
        centers = []
        offset = 0
        for w in self.workspaces:
            nx = max(1, math.ceil((w.x_max - w.x_min) / resolution - 1e-9))
            ny = max(1, math.ceil((w.y_max - w.y_min) / resolution - 1e-9))
            self._shapes.append((nx, ny))
            self._offsets.append(offset)
            xs = w.x_min + (np.arange(nx) + 0.5) * (w.x_max - w.x_min) / nx
            ys = w.y_min + (np.arange(ny) + 0.5) * (w.y_max - w.y_min) / ny
            gx, gy = np.meshgrid(xs, ys, indexing="ij")
            block = np.column_stack(
                [gx.ravel(), gy.ravel(), np.full(nx * ny, w.height)]
            )
            centers.append(block)
            offset += nx * ny
        self.cell_centers = np.vstack(centers)
        self.cell_centers.setflags(write=False)
        self.log_odds = np.zeros(offset)

    @property
    def n_cells(self) -> int:
        return len(self.log_odds)

    def cell_of_position(self, x: float, y: float) -> int:
        """Global index of the cell containing (x, y), or -1 when off-surface."""
        for wi, w in enumerate(self.workspaces):
            if not w.contains(x, y):
                continue
            nx, ny = self._shapes[wi]
            ix = min(int((x - w.x_min) / (w.x_max - w.x_min) * nx), nx - 1)
            iy = min(int((y - w.y_min) / (w.y_max - w.y_min) * ny), ny - 1)
            return self._offsets[wi] + ix * ny + iy
        return -1

    def apply_deltas(self, indices: np.ndarray, deltas: np.ndarray) -> None:
        self.log_odds[indices] += deltas
        np.clip(self.log_odds, -_LOG_ODDS_CLAMP, _LOG_ODDS_CLAMP, out=self.log_odds)

    def odds(self) -> np.ndarray:
        return np.exp(self.log_odds)

    def cell_probabilities(self) -> np.ndarray:
        """Normalised location distribution for the hidden target."""
        odds = self.odds()
        return odds / odds.sum()

    def workspace_of_cell(self, index: int) -> int:
        for wi in reversed(range(len(self.workspaces))):
            if index >= self._offsets[wi]:
                return wi
        raise ConfigError(f"cell index {index} out of range")


def sample_guessed_target(
    grid: GridWorld, rng: np.random.Generator, half_height: float = 0.05
) -> tuple[float, float, float]:
    """Draw a guessed-target position.

    Cells are chosen with probability proportional to their odds; the
    position is uniform within the chosen cell, resting on the surface.
    """
    probs = grid.cell_probabilities()
    idx = int(rng.choice(grid.n_cells, p=probs))
    cx, cy, cz = grid.cell_centers[idx]
    wi = grid.workspace_of_cell(idx)
    w = grid.workspaces[wi]
    nx, ny = grid._shapes[wi]
    half_x = (w.x_max - w.x_min) / nx / 2.0
    half_y = (w.y_max - w.y_min) / ny / 2.0
    x = cx + rng.uniform(-half_x, half_x)
    y = cy + rng.uniform(-half_y, half_y)
    return (float(x), float(y), float(cz + half_height))
