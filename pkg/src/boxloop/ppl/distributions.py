"""Distribution registry: log-densities over tape values, and samplers.

Log-density builders accept tape Vars or plain floats interchangeably
(the tape module's math functions lift floats), so the same code path
serves symbolic differentiation and plain evaluation. Out-of-support
arguments surface as NaN through the tape's domain-error convention,
never as exceptions.

Parameterizations (documented once, used everywhere):
    Normal(mu, sigma)         sigma = standard deviation
    HalfNormal(sigma)
    Uniform(lo, hi)           constant bounds required for priors
    Exponential(rate)
    Beta(alpha, beta)
    Gamma(alpha, beta)        shape alpha, rate beta
    LogNormal(mu, sigma)      of log(x)
    HalfCauchy(scale)
    StudentT(nu, mu, sigma)
    Binomial(n, p)            discrete, likelihood only
    Poisson(rate)             discrete, likelihood only
    BetaBinomial(n, alpha, beta)  discrete, likelihood only
    Bernoulli(p)              discrete, likelihood only
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..tape import lgamma, log

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _log_beta(a, b):
    return lgamma(a) + lgamma(b) - lgamma(a + b)


def _lchoose(n, k):
    return lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0)


# -- log densities (x first, then distribution args) -------------------------


def _normal(x, mu, sigma):
    z = (x - mu) / sigma
    return -_HALF_LOG_2PI - log(sigma) - 0.5 * z * z


def _half_normal(x, sigma):
    z = x / sigma
    return math.log(2.0) - _HALF_LOG_2PI - log(sigma) - 0.5 * z * z


def _uniform(x, lo, hi):
    # log((x-lo)(hi-x)) * 0 is 0 inside the support and NaN outside, which
    # matches the tape's domain-error convention without a step primitive
    return log((x - lo) * (hi - x)) * 0.0 - log(hi - lo)


def _exponential(x, rate):
    return log(rate) - rate * x


def _beta(x, a, b):
    return (a - 1.0) * log(x) + (b - 1.0) * log(1.0 - x) - _log_beta(a, b)


def _gamma(x, a, b):
    return a * log(b) - lgamma(a) + (a - 1.0) * log(x) - b * x


def _log_normal(x, mu, sigma):
    z = (log(x) - mu) / sigma
    return -log(x) - _HALF_LOG_2PI - log(sigma) - 0.5 * z * z


def _half_cauchy(x, scale):
    z = x / scale
    return math.log(2.0 / math.pi) - log(scale) - log(1.0 + z * z)


def _student_t(x, nu, mu, sigma):
    z = (x - mu) / sigma
    return (
        lgamma((nu + 1.0) / 2.0)
        - lgamma(nu / 2.0)
        - 0.5 * log(nu * math.pi)
        - log(sigma)
        - ((nu + 1.0) / 2.0) * log(1.0 + z * z / nu)
    )


def _binomial(x, n, p):
    return _lchoose(n, x) + x * log(p) + (n - x) * log(1.0 - p)


def _poisson(x, rate):
    return x * log(rate) - rate - lgamma(x + 1.0)


def _beta_binomial(x, n, a, b):
    return _lchoose(n, x) + _log_beta(x + a, n - x + b) - _log_beta(a, b)


def _bernoulli(x, p):
    return x * log(p) + (1.0 - x) * log(1.0 - p)


# -- samplers (scalar, numpy Generator) ---------------------------------------


def _s_normal(rng, mu, sigma):
    return mu + sigma * rng.standard_normal()


def _s_half_normal(rng, sigma):
    return abs(sigma * rng.standard_normal())


def _s_uniform(rng, lo, hi):
    return rng.uniform(lo, hi)


def _s_exponential(rng, rate):
    return rng.exponential(1.0 / rate)


def _s_beta(rng, a, b):
    return rng.beta(a, b)


def _s_gamma(rng, a, b):
    return rng.gamma(a, 1.0 / b)


def _s_log_normal(rng, mu, sigma):
    return math.exp(mu + sigma * rng.standard_normal())


def _s_half_cauchy(rng, scale):
    return abs(scale * rng.standard_cauchy())


def _s_student_t(rng, nu, mu, sigma):
    return mu + sigma * rng.standard_t(nu)


def _s_binomial(rng, n, p):
    return float(rng.binomial(int(round(n)), p))


def _s_poisson(rng, rate):
    return float(rng.poisson(rate))


def _s_beta_binomial(rng, n, a, b):
    return float(rng.binomial(int(round(n)), rng.beta(a, b)))


def _s_bernoulli(rng, p):
    return float(rng.random() < p)


@dataclass(frozen=True)
class Family:
    name: str
    arg_names: tuple
    support: str  # real | positive | unit | interval | count
    discrete: bool
    logpdf: callable
    sample: callable


FAMILIES = {
    f.name: f
    for f in (
        Family("Normal", ("mu", "sigma"), "real", False, _normal, _s_normal),
        Family("HalfNormal", ("sigma",), "positive", False, _half_normal, _s_half_normal),
        Family("Uniform", ("lo", "hi"), "interval", False, _uniform, _s_uniform),
        Family("Exponential", ("rate",), "positive", False, _exponential, _s_exponential),
        Family("Beta", ("alpha", "beta"), "unit", False, _beta, _s_beta),
        Family("Gamma", ("alpha", "beta"), "positive", False, _gamma, _s_gamma),
        Family("LogNormal", ("mu", "sigma"), "positive", False, _log_normal, _s_log_normal),
        Family("HalfCauchy", ("scale",), "positive", False, _half_cauchy, _s_half_cauchy),
        Family("StudentT", ("nu", "mu", "sigma"), "real", False, _student_t, _s_student_t),
        Family("Binomial", ("n", "p"), "count", True, _binomial, _s_binomial),
        Family("Poisson", ("rate",), "count", True, _poisson, _s_poisson),
        Family("BetaBinomial", ("n", "alpha", "beta"), "count", True, _beta_binomial, _s_beta_binomial),
        Family("Bernoulli", ("p",), "count", True, _bernoulli, _s_bernoulli),
    )
}
