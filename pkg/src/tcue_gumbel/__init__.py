"""Exact finite-n laws of the spectral radius of truncated Haar unitaries.

The largest squared eigenvalue modulus of the top-left ``p x p`` block of an
``n x n`` Haar unitary has the law of ``max_j Beta(j, n - p)``.  This package
evaluates that law exactly, confronts its Gumbel asymptotics term by term,
measures Kolmogorov and Wasserstein-1 distances to the Gumbel limit, and
samples the ensemble two independent ways.
"""

from .asymptotics import (
    LeadingRates,
    LemmaCheckReport,
    LemmaId,
    a_n_asym,
    a_n_bound,
    alpha_asym,
    direct_tail_sum,
    kappa_n,
    leading_rates,
    tail_sum_asym,
)
from .distances import (
    DistanceReport,
    GumbelReference,
    Metric,
    distance,
    ks_distance,
    w1_between_laws,
    w1_distance,
)
from .eigen import EigenResult, complex_eigenvalues
from .exact_law import ExactLaw, beta_max_log_cdf
from .sampling import (
    SampleBatch,
    SamplingMode,
    ks_one_sample,
    ks_two_sample,
    sample_beta_max,
    sample_haar_truncation,
)
from .scaling import (
    CutPoints,
    EnsembleParams,
    RatioWarning,
    ScalingConstants,
    beta_n,
    cut_points,
    derive_constants,
    u_n,
    x_threshold,
    x_threshold_squared,
)
from .special_functions import (
    TailIntegralResult,
    TailMethod,
    gaussian_tail,
    inc_beta_step,
    log_beta_survival,
    log_gamma,
    reg_inc_beta,
)

__version__ = "0.1.0"

__all__ = [
    "CutPoints",
    "DistanceReport",
    "EigenResult",
    "EnsembleParams",
    "ExactLaw",
    "GumbelReference",
    "LeadingRates",
    "LemmaCheckReport",
    "LemmaId",
    "Metric",
    "RatioWarning",
    "SampleBatch",
    "SamplingMode",
    "ScalingConstants",
    "TailIntegralResult",
    "TailMethod",
    "a_n_asym",
    "a_n_bound",
    "alpha_asym",
    "beta_max_log_cdf",
    "beta_n",
    "complex_eigenvalues",
    "cut_points",
    "derive_constants",
    "direct_tail_sum",
    "distance",
    "gaussian_tail",
    "inc_beta_step",
    "kappa_n",
    "ks_distance",
    "ks_one_sample",
    "ks_two_sample",
    "leading_rates",
    "log_beta_survival",
    "log_gamma",
    "reg_inc_beta",
    "sample_beta_max",
    "sample_haar_truncation",
    "tail_sum_asym",
    "u_n",
    "w1_between_laws",
    "w1_distance",
    "x_threshold",
    "x_threshold_squared",
]
