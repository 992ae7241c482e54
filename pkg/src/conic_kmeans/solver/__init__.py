"""First-order conic solver: cone projections, problem containers, ADMM engine."""

from .admm import SolverConfig, solve
from .cones import (
    ConeProjector,
    ConeSpec,
    NonNeg,
    Psd,
    SecondOrder,
    Zero,
    project_nonneg,
    project_psd,
    project_soc,
    smat,
    svec,
    svec_dim,
    svec_index,
)
from .problem import (
    STATUS_INFEASIBLE_SUSPECTED,
    STATUS_MAX_ITERS,
    STATUS_OPTIMAL,
    BlockSpan,
    ConicProblem,
    ConicSolution,
    SymbolSpan,
    VariableMap,
    problem_from_json,
    problem_to_json,
)

__all__ = [
    "SolverConfig",
    "solve",
    "ConeProjector",
    "ConeSpec",
    "NonNeg",
    "Psd",
    "SecondOrder",
    "Zero",
    "project_nonneg",
    "project_psd",
    "project_soc",
    "smat",
    "svec",
    "svec_dim",
    "svec_index",
    "STATUS_INFEASIBLE_SUSPECTED",
    "STATUS_MAX_ITERS",
    "STATUS_OPTIMAL",
    "BlockSpan",
    "ConicProblem",
    "ConicSolution",
    "SymbolSpan",
    "VariableMap",
    "problem_from_json",
    "problem_to_json",
]
