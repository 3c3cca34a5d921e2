"""Declarative probabilistic-program DSL.

Parse a small generative-model language, compile it against a dataset
into a differentiable log-joint plus per-observation likelihood terms,
and sample from the prior or the posterior predictive.
"""

from .compile import CompiledModel, compile_model
from .distributions import FAMILIES
from .model import ModelError, ModelProgram
from .parser import ModelParseError, parse_model, print_model
from .sampling import posterior_predictive, sample_prior, synthetic_table

__all__ = [
    "CompiledModel",
    "FAMILIES",
    "ModelError",
    "ModelParseError",
    "ModelProgram",
    "compile_model",
    "parse_model",
    "posterior_predictive",
    "print_model",
    "sample_prior",
    "synthetic_table",
]
