"""Shared POMDP plumbing: problem configuration, hybrid actions, particle beliefs.

Everything downstream (domain, solvers, benchmark) builds on the small
value types here.  States are deliberately opaque to this module; a
particle is whatever the generative model steps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

State = Any


class ConfigError(ValueError):
    """Raised when a configuration value or file is invalid."""


class Claim(enum.Enum):
    """What a declaration asserts about an object."""

    TARGET = "target"
    OBSTACLE = "obstacle"


@dataclass(frozen=True)
class MoveConfig:
    """Continuous action: drive the camera carrier to a full configuration.

    ``vector`` holds (base x, base y, base yaw, lift, pan, tilt).
    """

    vector: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "vector", tuple(float(v) for v in self.vector))


@dataclass(frozen=True)
class Declare:
    """Discrete action: commit object ``index`` to a target/obstacle claim."""

    index: int
    claim: Claim


@dataclass(frozen=True)
class Remove:
    """Discrete action: take the declared object ``index`` out of the scene."""

    index: int


HybridAction = MoveConfig | Declare | Remove


@dataclass(frozen=True)
class ProblemConfig:
    """Fixed quantities every solver and harness shares."""

    gamma: float = 0.9
    n_particles: int = 100
    max_depth: int = 30
    continuous_dim: int = 6

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.n_particles < 1:
            raise ConfigError("n_particles must be positive")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be positive")
        if self.continuous_dim < 1:
            raise ConfigError("continuous_dim must be positive")


@dataclass(frozen=True)
class StepOutcome:
    """One generative-model step: successor, emitted observation, reward."""

    state: State
    observation: Any
    reward: float
    terminal: bool


@dataclass
class ParticleBelief:
    """Weighted particle set representing a belief.

    Weights are kept unnormalised; consumers normalise on use so that
    repeated reweighting does not accumulate drift.
    """

    particles: list[State]
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.weights is None:
            self.weights = np.ones(len(self.particles))
        else:
            self.weights = np.asarray(self.weights, dtype=float)
        if len(self.weights) != len(self.particles):
            raise ConfigError("belief weights and particles must align")
        if len(self.particles) == 0:
            raise ConfigError("a belief needs at least one particle")
        if np.any(self.weights < 0):
            raise ConfigError("belief weights must be non-negative")
        if not np.any(self.weights > 0):
            raise ConfigError("belief weights must not all be zero")

    def __len__(self) -> int:
        return len(self.particles)

    def normalised_weights(self) -> np.ndarray:
        total = float(self.weights.sum())
        return self.weights / total


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Discounted sum of a reward sequence: sum_i gamma^i * r_i."""
    total = 0.0
    factor = 1.0
    for r in rewards:
        total += factor * float(r)
        factor *= gamma
    return total


def resample(belief: ParticleBelief, n: int, rng: np.random.Generator) -> ParticleBelief:
    """Draw ``n`` unit-weight particles with probability proportional to weight."""
    if n < 1:
        raise ConfigError("resample size must be positive")
    probs = belief.normalised_weights()
    idx = rng.choice(len(belief.particles), size=n, p=probs)
    return ParticleBelief([belief.particles[i] for i in idx], np.ones(n))
