"""Agnostic optimal-transport denoisers built from a hierarchy of score ratios.

For ``Y = X + sigma Z`` the OT map from the law of ``Y`` to the law of ``X``
is approximated by ``T_K(y) = y + sum_{k<=K} eta^k/k! h_k(y)`` with
``eta = sigma^2/2``, where each ``h_k`` is a polynomial in the ratios
``r_m = q^{(m-1)}/q`` of the observation density.
"""

from .analytic_models import (
    DensityFloorError,
    GaussianMixtureModel,
    NoiseModel,
    observation_model,
    ot_map_oracle,
    score_stack,
)
from .combinatorics import bell_polynomial, enumerate_partitions, evaluate_bell
from .denoise import (
    AnalyticProvider,
    KDEProvider,
    ScoreMatchingProvider,
    apply,
    bayes_denoiser,
    build_denoiser,
)
from .expansion import ScoreRatioPoly, derive_g_sequence, derive_h_sequence, h_series
from .metrics import monge_ampere_residual, mse, wasserstein_empirical, wasserstein_restricted
from .score_estimation import SampleSet, bandwidth, kde_derivative, replicate_rng
from .score_matching import BasisSpec, fit_score, score_matching_risk

__version__ = "0.1.0"

__all__ = [
    "AnalyticProvider",
    "BasisSpec",
    "DensityFloorError",
    "GaussianMixtureModel",
    "KDEProvider",
    "NoiseModel",
    "SampleSet",
    "ScoreMatchingProvider",
    "ScoreRatioPoly",
    "apply",
    "bandwidth",
    "bayes_denoiser",
    "bell_polynomial",
    "build_denoiser",
    "derive_g_sequence",
    "derive_h_sequence",
    "enumerate_partitions",
    "evaluate_bell",
    "fit_score",
    "h_series",
    "kde_derivative",
    "monge_ampere_residual",
    "mse",
    "observation_model",
    "ot_map_oracle",
    "replicate_rng",
    "score_matching_risk",
    "score_stack",
    "wasserstein_empirical",
    "wasserstein_restricted",
]
