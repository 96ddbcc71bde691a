"""Sparse regression that discourages co-selecting correlated features.

The penalty is lambda * (||beta||_1 + alpha/2 * |beta|' R |beta|) with R a
nonnegative similarity matrix derived from column correlations, solved by
cyclic coordinate descent for squared-error and logistic losses.
"""

from .data import (DataError, Dataset, GroundTruth, SyntheticSpec,
                   generate_synthetic, load_csv, sample_synthetic_raw,
                   unstandardize_coefficients, write_csv)
from .logistic import (ConvergenceWarning, LogisticFitResult, fit_logistic,
                       fit_logistic_path, logistic_kkt, logistic_objective,
                       quadratic_working_response, sigmoid)
from .modelsel import (DEFAULT_ALPHA_GRID, GridScore, Metrics,
                       SelectionResult, assign_folds, cross_validate,
                       evaluate, fold_datasets, select_validation)
from .similarity import (GroupPartition, PenaltySpec, SimilarityMatrix,
                         build_similarity, penalty_value)
from .solver import (FitResult, PathResult, SolverConfig, SolverError,
                     check_kkt, coordinate_update, fit, fit_path, lambda_grid,
                     lambda_max, objective, soft_threshold)
from .theory import (SignRecoveryReport, local_optimum_error_probe,
                     sign_recovery_check)
from .benchmark import METHODS, run_benchmark, run_replicate, write_bench_csv

__version__ = "0.1.0"

__all__ = [
    "ConvergenceWarning",
    "DataError",
    "Dataset",
    "DEFAULT_ALPHA_GRID",
    "FitResult",
    "GridScore",
    "GroundTruth",
    "GroupPartition",
    "LogisticFitResult",
    "METHODS",
    "Metrics",
    "PathResult",
    "PenaltySpec",
    "SelectionResult",
    "SignRecoveryReport",
    "SimilarityMatrix",
    "SolverConfig",
    "SolverError",
    "SyntheticSpec",
    "assign_folds",
    "build_similarity",
    "check_kkt",
    "coordinate_update",
    "cross_validate",
    "evaluate",
    "fit",
    "fit_logistic",
    "fit_logistic_path",
    "fit_path",
    "fold_datasets",
    "generate_synthetic",
    "lambda_grid",
    "lambda_max",
    "load_csv",
    "local_optimum_error_probe",
    "logistic_kkt",
    "logistic_objective",
    "objective",
    "penalty_value",
    "quadratic_working_response",
    "run_benchmark",
    "run_replicate",
    "sample_synthetic_raw",
    "select_validation",
    "sigmoid",
    "sign_recovery_check",
    "soft_threshold",
    "unstandardize_coefficients",
    "write_bench_csv",
    "write_csv",
]
