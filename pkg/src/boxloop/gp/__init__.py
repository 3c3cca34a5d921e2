from .fit import GPFitError, GPFitResult, GPModel, fit_gp, holdout_mae, lml, mae, predict
from .kernels import (
    AUGMENTED_KINDS,
    BASE_KINDS,
    Base,
    Product,
    Sum,
    enumerate_mutations,
    mutate,
)
from .parser import KernelParseError, parse_kernel, print_kernel
from .search import SearchResult, greedy_search
from .spectral import SpectralMixture, spectral_mixture_fit

__all__ = [
    "AUGMENTED_KINDS",
    "BASE_KINDS",
    "Base",
    "GPFitError",
    "GPFitResult",
    "GPModel",
    "KernelParseError",
    "Product",
    "SearchResult",
    "SpectralMixture",
    "Sum",
    "enumerate_mutations",
    "fit_gp",
    "greedy_search",
    "holdout_mae",
    "lml",
    "mae",
    "mutate",
    "parse_kernel",
    "predict",
    "print_kernel",
    "spectral_mixture_fit",
]
