"""Bijections between unconstrained sampler space and prior support.

Each transform maps an unconstrained real u to the constrained value x
and reports the log absolute Jacobian d x / d u, so densities written on
the constrained space stay normalized after the change of variables.
Forward and log-Jacobian accept tape Vars or floats; inverse is
float-only (used when initializing from constrained values).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..tape import exp, log, logistic


@dataclass(frozen=True)
class Transform:
    name: str
    forward: callable  # u -> x
    inverse: callable  # x -> u, floats
    log_jac: callable  # u -> log |dx/du|


def _ident(u):
    return u


IDENTITY = Transform("identity", _ident, _ident, lambda u: 0.0)

# x = exp(u): log|dx/du| = u
POSITIVE = Transform("log", exp, math.log, _ident)


def interval(lo: float, hi: float) -> Transform:
    """x = lo + (hi-lo)·logistic(u); log|dx/du| = log(hi-lo) + log s + log(1-s)."""
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError(f"interval transform needs finite lo < hi, got [{lo}, {hi}]")
    width = hi - lo
    log_width = math.log(width)

    def fwd(u):
        return lo + width * logistic(u)

    def inv(x: float) -> float:
        z = (x - lo) / width
        if not 0.0 < z < 1.0:
            raise ValueError(f"{x} outside ({lo}, {hi})")
        return math.log(z) - math.log1p(-z)

    def ljac(u):
        # log s(u) + log s(-u) rather than log(1-s): s(u) rounds to 1.0 for
        # u beyond ~37 and the subtraction would hit log(0)
        return log_width + log(logistic(u)) + log(logistic(0.0 - u))

    return Transform(f"logit[{lo},{hi}]", fwd, inv, ljac)


def for_support(support: str, lo: float = 0.0, hi: float = 1.0) -> Transform:
    if support == "real":
        return IDENTITY
    if support == "positive":
        return POSITIVE
    if support == "unit":
        return interval(0.0, 1.0)
    if support == "interval":
        return interval(lo, hi)
    raise ValueError(f"no transform for support {support!r}")
