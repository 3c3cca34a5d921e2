"""Gradient-based MCMC, convergence diagnostics, and LOO model scoring."""

from .diagnostics import bulk_ess, rhat
from .hmc import PosteriorDraws, SamplerConfig, SamplingError, hmc_sample
from .loo import Comparison, LooResult, ScoreReport, compare, psis_loo
from .score import diagnose, pointwise_matrix, score_model

__all__ = [
    "Comparison",
    "LooResult",
    "PosteriorDraws",
    "SamplerConfig",
    "SamplingError",
    "ScoreReport",
    "bulk_ess",
    "compare",
    "diagnose",
    "hmc_sample",
    "pointwise_matrix",
    "psis_loo",
    "rhat",
    "score_model",
]
