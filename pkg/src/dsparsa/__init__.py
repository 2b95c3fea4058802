"""Distributed sparse learning over time-varying digraphs (DSparsA) and a subgradient-push baseline."""

from .engine import PowerStep, RecursiveStep, RunTrace, run
from .graph import Digraph, GraphSchedule, build_weights, generate_schedule, is_b_strongly_connected
from .penalty import DCPenalty, soft_threshold
from .problem import ConstraintSet, ProblemInstance, gen_sparse_pca, gen_sparse_regression
from .solver import FullConvex, InnerSolverConfig, Linearized, PartialLinearized, ball_prox_solve, solve_subproblem

__all__ = [
    "ConstraintSet", "DCPenalty", "Digraph", "FullConvex", "GraphSchedule", "InnerSolverConfig",
    "Linearized", "PartialLinearized", "PowerStep", "ProblemInstance", "RecursiveStep", "RunTrace",
    "ball_prox_solve", "build_weights", "gen_sparse_pca", "gen_sparse_regression", "generate_schedule",
    "is_b_strongly_connected", "run", "soft_threshold", "solve_subproblem",
]
