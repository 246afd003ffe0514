"""Belief-tree search: shared engine for the clustered-hypersphere
solver and the discrete/widening baselines."""

from .tree import (  # noqa: F401
    ActionNode,
    BeliefNode,
    EpisodeRecord,
    HistoryTuple,
    StepRecord,
    dump_tree,
    parse_dump,
)
from .engine import (  # noqa: F401
    PlanBudget,
    PlanResult,
    SolverParams,
    TreeSearchSolver,
    f_lim,
)
