"""Granger causality between event streams via multivariate Wold processes."""

from .core import (
    ContractError,
    FitConfig,
    LatentState,
    ModelParams,
    ProcessCollection,
    StructuralError,
    ValidationError,
    ValidationReport,
    build_collection,
    validate_params,
)
from .evaluation import (
    GroundTruthGraph,
    ground_truth_matrix,
    kendall_avg,
    null_model_ranking,
    precision_at_n,
    relative_error_avg,
    wold_adequacy,
)
from .fptree import FPTree
from .intensity import (
    CrossIntensityMatrix,
    cross_intensity,
    expected_offspring,
    phi_matrix,
    stationarity_check,
    total_intensity,
)
from .likelihood import IMPOSSIBLE, process_loglik, total_loglik
from .sampler import FitResult, fit, granger_from_counts, init_state
from .simulator import SimulationConfig, simulate
from .timeline import DeltaResult, delta_cross, prev_index

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "FitConfig",
    "LatentState",
    "ModelParams",
    "ProcessCollection",
    "StructuralError",
    "ValidationError",
    "ValidationReport",
    "build_collection",
    "validate_params",
    "GroundTruthGraph",
    "ground_truth_matrix",
    "kendall_avg",
    "null_model_ranking",
    "precision_at_n",
    "relative_error_avg",
    "wold_adequacy",
    "FPTree",
    "CrossIntensityMatrix",
    "cross_intensity",
    "expected_offspring",
    "phi_matrix",
    "stationarity_check",
    "total_intensity",
    "IMPOSSIBLE",
    "process_loglik",
    "total_loglik",
    "FitResult",
    "fit",
    "granger_from_counts",
    "init_state",
    "SimulationConfig",
    "simulate",
    "DeltaResult",
    "delta_cross",
    "prev_index",
]
