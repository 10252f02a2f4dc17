"""Exterior distance functions and the exterior point method for convex programs."""

from .dual_prox import phi_divergence, phi_kernel, prox_step_oracle
from .edf import Center, EDFParams, dual_value, edf_eval, lagrangian_eval, merit, rescale_multipliers
from .epm import EPMConfig, SolveResult, multiplier_update, relaxation_operator, solve
from .estimators import ExteriorPointSolver, InteriorCenterSolver
from .exceptions import (
    DomainError,
    EDFOptError,
    InnerSolveFailure,
    NonFiniteEvaluation,
    OracleNoConverge,
    ParseError,
    SingularSystem,
    StartOutOfDomain,
    UnsupportedOrder,
    ValidationError,
)
from .fileio import parse_problem_file, write_problem_file
from .idf import icm_step, idf_eval, run_icm
from .inner import InnerConfig, minimize_edf
from .problem import (
    Affine,
    KnownSolution,
    ProblemInstance,
    Quadratic,
    SmoothFunction,
    builtin_corpus,
    check_slater,
    evaluate,
    get_builtin,
    nonneg_transform,
)

__version__ = "0.1.0"
