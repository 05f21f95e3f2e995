"""High-precision tooling for singular semidefinite programs.

The package solves block SDPs in arbitrary precision, performs facial
reduction with independently verifiable reducing certificates, evaluates
rank/face continuity conditions under data perturbations, and classifies
structured perturbations of a state-feedback control SDP by their effect
on the dual minimal face.
"""

from .mpla import (
    DEFAULT_PRECISION,
    MpMatrix,
    MpScalar,
    NoConvergence,
    NonSymmetric,
    NotPositiveDefinite,
    ShapeMismatch,
    SymEig,
    cholesky,
    numeric_rank,
    pseudoinverse,
    sym_eig,
)
from .sdpmodel import (
    BlockMatrix,
    ParseError,
    PerturbedFamily,
    PrecisionLoss,
    SdpProblem,
    SolutionPair,
    dot,
    he,
    lagrangian,
    read_sdpa,
    vec,
    write_sdpa,
)
from .ipm import (
    Infeasible,
    SolveReport,
    SolveStatus,
    SolverConfig,
    check_saddle_point,
    solve,
    strictly_feasible_point,
)

__all__ = [
    "DEFAULT_PRECISION",
    "MpMatrix",
    "MpScalar",
    "NoConvergence",
    "NonSymmetric",
    "NotPositiveDefinite",
    "ShapeMismatch",
    "SymEig",
    "cholesky",
    "numeric_rank",
    "pseudoinverse",
    "sym_eig",
    "BlockMatrix",
    "ParseError",
    "PerturbedFamily",
    "PrecisionLoss",
    "SdpProblem",
    "SolutionPair",
    "dot",
    "he",
    "lagrangian",
    "read_sdpa",
    "vec",
    "write_sdpa",
    "Infeasible",
    "SolveReport",
    "SolveStatus",
    "SolverConfig",
    "check_saddle_point",
    "solve",
    "strictly_feasible_point",
]

__version__ = "0.1.0"
