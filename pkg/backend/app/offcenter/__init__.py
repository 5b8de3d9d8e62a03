from app.offcenter.estimator import SampleRecord, pair_estimate, pair_gradients, pair_values, stage1_sample, stage1_samples
from app.offcenter.neighbors import NeighborLists, select_neighbors, select_neighbors_grid, self_only
from app.offcenter.solver import (
    ReuseSolver,
    RoundSummary,
    SolveConfig,
    SolveResult,
    mean_squared_error,
    solve,
    solve_gradient,
)
from app.offcenter.stats import PairStats, w_star, w_star_values
from app.offcenter.weighting import STRATEGIES, WeightingStrategy, combine, pair_weights, poisson_bound_weight

__all__ = [
    "NeighborLists",
    "PairStats",
    "ReuseSolver",
    "RoundSummary",
    "STRATEGIES",
    "SampleRecord",
    "SolveConfig",
    "SolveResult",
    "WeightingStrategy",
    "combine",
    "mean_squared_error",
    "pair_estimate",
    "pair_gradients",
    "pair_values",
    "pair_weights",
    "poisson_bound_weight",
    "select_neighbors",
    "select_neighbors_grid",
    "self_only",
    "solve",
    "solve_gradient",
    "stage1_sample",
    "stage1_samples",
    "w_star",
    "w_star_values",
]
