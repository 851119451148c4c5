"""Asymptotic and simulated recovery of a one-dimensional subspace by PCA
from samples with heteroscedastic noise."""

__version__ = "0.1.0"

from .noise import (
    ModelParams,
    NoiseMixture,
    average_variance,
    balanced_split,
    homoscedastic,
    lambda_split,
    scale_mixture,
    validate_and_normalize,
)
from .prediction import (
    PredictionResult,
    SecularFunctions,
    all_real_roots_B,
    critical_sample_ratio,
    homoscedastic_closed_form,
    largest_root_A,
    largest_root_B,
    predict,
)
from .simulation import (
    Dataset,
    DatasetSpec,
    TrialSummary,
    generate_dataset,
    recovery_metric,
    run_monte_carlo,
    top_left_singular_vector,
)
