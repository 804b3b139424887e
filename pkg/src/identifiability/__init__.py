"""Practical identifiability of model parameters from conditional mutual information."""

from .errors import (
    ConfigError, DegenerateModelError, IdentifiabilityError, InvalidArgumentError,
    ModelEvaluationError, NoIgnitionError, NumericalDomainError, StiffnessError,
    UnsupportedModelError,
)
from .estimators import (
    EstimateResult, EstimatorConfig, IdentifiabilityReport, conditional_evidence_log,
    full_report, information_gain, information_gains, pairwise_dependence, pairwise_dependences,
)
from .mathcore import (
    GaussianDensity, QuadratureRule, RandomStream, gauss_hermite_rule, gaussian_logpdf,
    log_sum_exp_weighted,
)
from .mcmc import Chain, ChainConfig, adaptive_metropolis, log_posterior, posterior_prediction
from .model import (
    ForwardModel, FunctionForward, LinearForward, PriorSpec, StatisticalModel,
    VandermondeForward, build_model, likelihood_logpdf, register_model, sample_observation,
    sample_prior,
)
from .oracle import (
    LinearGaussianSpec, build_vandermonde, gaussian_entropy, lg_information_gain_exact, lg_joint,
    lg_pairwise_exact, lg_posterior,
)
from .sobol import SobolResult, first_order_indices, linear_sobol_exact

__version__ = "0.1.0"
