"""K-means clustering via doubly nonnegative conic relaxations.

The package bundles a hierarchy of semidefinite relaxations of the K-means
problem, a first-order conic solver to drive them, rounding schemes turning
relaxation solutions into cluster assignments, an exact partition oracle for
small instances, and a synthetic ball-mixture benchmark harness.
"""

from .model import (
    Assignment,
    DataSet,
    StiefelFactor,
    assignment_to_stiefel,
    centroids_of,
    kmeans_objective,
    kmeans_objective_direct,
    lloyd_full,
    lloyd_step,
    load_dataset,
    load_dataset_csv,
    partition_matrix,
    save_dataset_csv,
    stiefel_to_assignment,
)
from .oracle import OracleResult, solve_exact, stirling2
from .formulations import (
    R0BarSolution,
    R0Solution,
    R1Solution,
    R2Solution,
    assignment_lift_value,
    build_r0,
    build_r0bar,
    build_r1,
    build_r2,
    extract,
)
from .rounding import (
    RoundingTrace,
    algorithm1,
    denoise_round,
    detect_exact_recovery,
    detect_partition_matrix,
)
from .solver import ConicProblem, ConicSolution, SolverConfig, solve

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "DataSet",
    "StiefelFactor",
    "assignment_to_stiefel",
    "centroids_of",
    "kmeans_objective",
    "kmeans_objective_direct",
    "lloyd_full",
    "lloyd_step",
    "load_dataset",
    "load_dataset_csv",
    "partition_matrix",
    "save_dataset_csv",
    "stiefel_to_assignment",
    "OracleResult",
    "solve_exact",
    "stirling2",
    "R0BarSolution",
    "R0Solution",
    "R1Solution",
    "R2Solution",
    "assignment_lift_value",
    "build_r0",
    "build_r0bar",
    "build_r1",
    "build_r2",
    "extract",
    "RoundingTrace",
    "algorithm1",
    "denoise_round",
    "detect_exact_recovery",
    "detect_partition_matrix",
    "ConicProblem",
    "ConicSolution",
    "SolverConfig",
    "solve",
    "__version__",
]
