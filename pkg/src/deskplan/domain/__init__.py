"""Synthetic desk-scale object-search domain.

Submodules:

* ``geometry``   -- camera frusta, oriented boxes, visibility
* ``types``      -- robot/object/world state containers and parameters
* ``gridworld``  -- log-odds occupancy over workspace surfaces
* ``model``      -- generative POMDP model (transition/observe/reward)
* ``environment``-- ground-truth simulator driven by a scenario
* ``scenario``   -- scenario files and their loader
"""

from .types import (  # noqa: F401
    GUESSED_INDEX,
    GUESSED_SIZE,
    DomainParams,
    Label,
    Observation,
    ObjectObservation,
    ObjectState,
    Detection,
    RobotState,
    WorldState,
)
from .geometry import FovFrustum  # noqa: F401
from .gridworld import GridWorld, Workspace  # noqa: F401
