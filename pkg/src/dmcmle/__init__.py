"""Maximum-likelihood estimation for the duplication-mutation-complementation
(DMC) network growth model by deconstructing observed graphs."""

__version__ = "0.1.0"

from .engine import (
    GenerationTrace,
    Params,
    StepStats,
    SufficientStats,
    Theta,
    deconstruct,
    forward_generate,
    log_likelihood,
    loglik_at_mle,
    mle,
    reverse_step,
    theta_space_size,
)
from .estimation import (
    Estimate,
    ThetaEnsemble,
    averaged_estimate,
    em_estimate,
    max_likelihood_select,
    wald_ci,
)
from .graph import Graph
from .reconstruction import (
    DeconstructionResult,
    NkConfig,
    class_mle,
    class_probability,
    exhaustive,
    minimize_y,
    minimize_y_then_nk,
    nk_greedy,
    nk_grid_search,
    random_sequences,
    true_new_random_anchor,
    true_theta,
)

__all__ = [
    "DeconstructionResult", "Estimate", "GenerationTrace", "Graph", "NkConfig", "Params",
    "StepStats", "SufficientStats", "Theta", "ThetaEnsemble", "averaged_estimate",
    "class_mle", "class_probability", "deconstruct", "em_estimate", "exhaustive", "forward_generate",
    "log_likelihood", "loglik_at_mle", "max_likelihood_select", "minimize_y",
    "minimize_y_then_nk", "mle", "nk_greedy", "nk_grid_search", "random_sequences",
    "reverse_step", "theta_space_size", "true_new_random_anchor", "true_theta", "wald_ci",
]
