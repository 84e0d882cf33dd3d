"""Regression inference as the OLS functional of a mixture-of-Dirichlet-process posterior."""

from .alpha import AlphaPosterior, AlphaPrior, alpha_grid, alpha_posterior, cluster_count_log_pmf
from .bootstrap import BootstrapSample, bootstrap_functional, draw_weights
from .data import (
    AugmentedDesign,
    ClusteredData,
    Dataset,
    RidgeBaseline,
    TransformRecord,
    augment_ridge,
    cluster_rows,
    impute_general_baseline,
    load_dataset,
    standardize,
)
from .estimators import HC0Regressor, MDPRegressor
from .exceptions import (
    DataError,
    IllConditionedWarning,
    PosteriorUnderflowError,
    SingularDesignError,
)
from .functional import FitResult, fit_functional, hc0, sandwich_cov, wls_mean
from .lars import LarsPath, lars_path
from .moments import WeightMoments, conditional_moments, marginal_moments
from .simulation import SimConfig, coverage_study
from .voe import sensitivity_analysis, voe_analysis

__version__ = "0.1.0"

__all__ = [
    "AlphaPosterior", "AlphaPrior", "AugmentedDesign", "BootstrapSample", "ClusteredData",
    "DataError", "Dataset", "FitResult", "HC0Regressor", "IllConditionedWarning",
    "LarsPath", "MDPRegressor", "PosteriorUnderflowError", "RidgeBaseline", "SimConfig",
    "SingularDesignError", "TransformRecord", "WeightMoments", "alpha_grid",
    "alpha_posterior", "augment_ridge", "bootstrap_functional", "cluster_count_log_pmf",
    "cluster_rows", "conditional_moments", "coverage_study", "draw_weights", "fit_functional",
    "hc0", "impute_general_baseline", "lars_path", "load_dataset", "marginal_moments",
    "sandwich_cov", "sensitivity_analysis", "standardize", "voe_analysis", "wls_mean",
]
