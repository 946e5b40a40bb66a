"""Average treatment effect estimators over one (treatment, outcome, year) cell."""
from .base import ESTIMATE_COLUMNS, METHODS, AteEstimate, naive_ate
from .combine import format_cell, mean_across_methods
from .forest import ForestConfig, causal_forest_ate
from .psm import PropensityModel, fit_propensity, psm_ate
from .simulate import confounded_data, null_data
from .vaine import VaineConfig, vaine_ate

__all__ = [
    "ESTIMATE_COLUMNS", "METHODS", "AteEstimate", "ForestConfig", "PropensityModel", "VaineConfig",
    "causal_forest_ate", "confounded_data", "fit_propensity", "format_cell", "mean_across_methods",
    "naive_ate", "null_data", "psm_ate", "vaine_ate",
]
