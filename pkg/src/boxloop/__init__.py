"""Automated statistical model discovery via propose/fit/criticize loops.

Three model families share one orchestration loop: compositional GP kernels
for univariate time series, a small probabilistic-program DSL fit with HMC
and scored by PSIS-LOO, and mechanistic/neural hybrid ODEs. Proposals come
from scripted fixtures, a greedy grammar search, or a remote language model.
"""

__version__ = "0.1.0"
