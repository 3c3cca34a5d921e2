"""Spectral mixture kernel baseline.

k(tau) = sum_q w_q exp(-2 pi^2 tau^2 v_q) cos(2 pi tau mu_q)

A mixture of q Gaussians in the spectral domain; dense enough to model
trend plus seasonality without any structure search, which is exactly why
it serves as the non-compositional baseline. Fit is best-of-n random
restarts on the shared batched lml optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fit import GPFitError, GPFitResult, GPModel, optimize_lml
from .kernels import with_params


@dataclass(frozen=True)
class SpectralMixture:
    """Leaf kernel with 3q log-params: (weight, bandwidth, frequency) per component."""

    q: int = 5
    params: tuple = ()

    def __post_init__(self):
        if not self.params:
            object.__setattr__(self, "params", (0.0,) * (3 * self.q))
        elif len(self.params) != 3 * self.q:
            raise ValueError(f"spectral mixture with q={self.q} takes {3 * self.q} params")

    def param_labels(self):
        out = []
        for i in range(self.q):
            out += [f"SM.weight{i}", f"SM.bandwidth{i}", f"SM.frequency{i}"]
        return out

    def eval_batch(self, th, TAU, XX, want_grads):
        B = th.shape[0]
        K = np.zeros((B,) + TAU.shape)
        grads = [] if want_grads else None
        for i in range(self.q):
            w = np.exp(th[:, 3 * i + 0])[:, None, None]
            v = np.exp(th[:, 3 * i + 1])[:, None, None]
            mu = np.exp(th[:, 3 * i + 2])[:, None, None]
            decay = np.exp(-2.0 * math.pi**2 * TAU**2 * v)
            ang = 2.0 * math.pi * TAU * mu
            term = w * decay * np.cos(ang)
            K = K + term
            if want_grads:
                grads += [
                    term,
                    term * (-2.0 * math.pi**2 * TAU**2 * v),
                    -w * decay * np.sin(ang) * ang,
                ]
        return K, grads


def _sm_init(q, x, y, rng):
    """One random init: log-uniform frequencies up to Nyquist, data-scaled weights."""
    span = float(np.max(x) - np.min(x))
    n = len(x)
    nyquist = 0.5 * n / span
    var_y = max(float(np.var(y)), 1e-6)
    th = np.empty(3 * q + 1)
    for i in range(q):
        th[3 * i + 0] = math.log(var_y / q) + rng.normal(0.0, 0.3)
        th[3 * i + 1] = math.log(1.0 / span**2) + rng.normal(0.0, 1.0)
        th[3 * i + 2] = rng.uniform(math.log(0.25 / span), math.log(max(nyquist / 2.0, 0.5 / span)))
    th[-1] = math.log(0.1 * var_y) + rng.normal(0.0, 0.3)
    return th


def spectral_mixture_fit(
    x,
    y,
    q: int = 5,
    n_inits: int = 5,
    seed: int = 0,
    lr: float = 0.05,
    steps: int = 500,
    tol: float = 1e-6,
    patience: int = 20,
) -> GPFitResult:
    """Fit a q-component spectral mixture GP, best of n_inits random starts."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    rng = np.random.default_rng(seed)
    expr = SpectralMixture(q=q)
    theta0 = np.stack([_sm_init(q, x, y, rng) for _ in range(n_inits)])
    best_theta, best_lml, steps_run, converged = optimize_lml(
        expr, theta0, x, y, lr=lr, steps=steps, tol=tol, patience=patience
    )
    if not np.any(np.isfinite(best_lml)):
        raise GPFitError("no spectral mixture init produced a usable fit")
    k = int(np.argmax(best_lml))
    th = best_theta[k]
    model = GPModel(expr=with_params(expr, th[:-1]), noise_variance=float(np.exp(th[-1])), x=x, y=y)
    return GPFitResult(
        model=model,
        lml=float(best_lml[k]),
        restarts_tried=n_inits,
        steps_run=steps_run,
        converged=converged,
    )
