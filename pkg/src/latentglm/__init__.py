"""Generalised linear models for time series driven by a multiplicative
stationary latent process."""

from .design import DesignSpec, build_design
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DomainError,
    ParseError,
    RankDeficiencyError,
    SchemaError,
    UnsupportedError,
)
from .family import Family, FamilySpec
from .glm import Dataset, FitResult, fit
from .inference import estimate_omegas, parametric_bootstrap
from .latent import LatentKind, LatentSpec, simulate
from .moments import MomEstimate, empirical_moment_sums, estimate_latent
from .pipeline import PipelineConfig, run_pipeline
from .predict import conditional_expectation, in_sample_predictions, posterior_latent_mean

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "Dataset",
    "DesignSpec",
    "DomainError",
    "Family",
    "FamilySpec",
    "FitResult",
    "LatentKind",
    "LatentSpec",
    "MomEstimate",
    "ParseError",
    "PipelineConfig",
    "RankDeficiencyError",
    "SchemaError",
    "UnsupportedError",
    "build_design",
    "conditional_expectation",
    "empirical_moment_sums",
    "estimate_latent",
    "estimate_omegas",
    "fit",
    "in_sample_predictions",
    "parametric_bootstrap",
    "posterior_latent_mean",
    "run_pipeline",
    "simulate",
]
