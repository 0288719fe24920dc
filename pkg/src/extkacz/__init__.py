"""Randomized extended Kaczmarz solvers for minimum-norm least squares."""

from .linalg import LinearSystem, MatrixHandle, OracleSolution, frobenius_norm_sq, min_norm_lsq_oracle
from .problems import actual_convergence_factor, gen_gaussian_udv, gen_inconsistent_rhs, rse
from .sampling import Partition, SamplingScheme, draw, make_partition, make_scheme
from .solvers import RunRecord, SolverConfig, SolverState, StepDiagnostics, run_solver, svrg_run
from .theory import BoundsConfig, TheoryBounds, check_exactness_sufficient, compute_rates, eval_g_f, gamma_bound

__all__ = [
    "BoundsConfig",
    "LinearSystem",
    "MatrixHandle",
    "OracleSolution",
    "Partition",
    "RunRecord",
    "SamplingScheme",
    "SolverConfig",
    "SolverState",
    "StepDiagnostics",
    "TheoryBounds",
    "actual_convergence_factor",
    "check_exactness_sufficient",
    "compute_rates",
    "draw",
    "eval_g_f",
    "frobenius_norm_sq",
    "gamma_bound",
    "gen_gaussian_udv",
    "gen_inconsistent_rhs",
    "make_partition",
    "make_scheme",
    "min_norm_lsq_oracle",
    "rse",
    "run_solver",
    "svrg_run",
]
