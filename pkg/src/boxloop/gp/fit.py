"""GP regression: marginal likelihood, gradients, and hyperparameter fitting.

The log marginal likelihood and its gradient use the standard Cholesky
identities; dlml/dtheta_j = 0.5 * (alpha alpha^T - K^-1) : dK/dtheta_j with
alpha = K^-1 y. Restarts and the fixed period initializations are stacked
into one batch and optimized together, which keeps the per-step cost in
LAPACK instead of the Python loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from .kernels import flatten_params, grids, kernel_eval, n_params, param_names, with_params

JITTERS = (1e-8, 1e-6, 1e-4)
LOG_2PI = math.log(2.0 * math.pi)


class GPFitError(RuntimeError):
    """Raised when no restart produces a usable fit (after jitter escalation)."""


@dataclass(frozen=True)
class GPModel:
    """Kernel expression with fitted hyperparameters, bound to train data."""

    expr: object
    noise_variance: float
    x: np.ndarray
    y: np.ndarray
    mean: float = 0.0


@dataclass(frozen=True)
class GPFitResult:
    model: GPModel
    lml: float
    restarts_tried: int
    steps_run: int
    converged: bool


def _chol_with_jitter(K, eye=None):
    """Cholesky factor with escalating jitter; None when 1e-4 still fails."""
    if eye is None:
        eye = np.eye(K.shape[0])
    for jit in JITTERS:
        try:
            return cho_factor(K + jit * eye, lower=True, check_finite=False)
        except LinAlgError:
            continue
    return None


def lml_batch(expr, theta, x, y, TAU=None, XX=None, want_grads=False):
    """Log marginal likelihood per batch member.

    theta: (B, n_params+1); the trailing column is log noise variance.
    Members whose kernel matrix is not positive definite even at the top
    of the jitter ladder come back as NaN (with zero gradients) instead
    of raising: one bad restart must not kill its batch.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        theta = theta[None, :]
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if TAU is None or XX is None:
        TAU, XX = grids(x, x)
    n = len(x)
    out = kernel_eval(expr, theta[:, :-1], TAU, XX, want_grads=want_grads)
    K, dKs = out if want_grads else (out, None)
    noise = np.exp(theta[:, -1])
    B = theta.shape[0]
    lml = np.full(B, np.nan)
    grads = np.zeros_like(theta) if want_grads else None
    eye = np.eye(n)
    A_all = np.zeros((B, n, n)) if want_grads else None
    for b in range(B):
        if not np.all(np.isfinite(K[b])):
            continue
        cf = _chol_with_jitter(K[b] + noise[b] * eye, eye)
        if cf is None:
            continue
        alpha = cho_solve(cf, y, check_finite=False)
        lml[b] = -0.5 * float(y @ alpha) - float(np.log(np.diag(cf[0])).sum()) - 0.5 * n * LOG_2PI
        if want_grads:
            Kinv = cho_solve(cf, eye, check_finite=False)
            A_all[b] = np.outer(alpha, alpha)
            A_all[b] -= Kinv
            grads[b, -1] = 0.5 * float(np.trace(A_all[b])) * noise[b]
    if want_grads and dKs:
        # one batched contraction: dlml/dtheta_j = 0.5 * A : dK_j, per member
        dK_all = np.stack(dKs)  # (P, B, n, n)
        grads[:, :-1] = 0.5 * np.einsum("bij,pbij->bp", A_all, dK_all)
        grads[~np.isfinite(lml)] = 0.0
    return (lml, grads) if want_grads else lml


_PERIOD_DIVISORS = (20.0, 10.0, 5.0, 2.0, 1.0)


def _init_batch(expr, x, restarts, rng, period_divisors=_PERIOD_DIVISORS):
    names = param_names(expr)
    span = float(np.max(x) - np.min(x))
    per_restart = []
    for _ in range(restarts):
        th = np.empty(len(names) + 1)
        for i, nm in enumerate(names):
            leafparam = nm.rsplit(".", 1)[-1]
            if leafparam == "variance":
                th[i] = rng.normal(0.0, 0.5)
            elif leafparam == "lengthscale":
                th[i] = math.log(0.3 * span) + rng.normal(0.0, 0.5)
            elif leafparam == "period":
                th[i] = 0.0  # replaced by the fixed schedule below
            elif leafparam == "alpha":
                th[i] = math.log(2.0) + rng.normal(0.0, 0.5)
            else:  # offset and anything similarly unit-scale
                th[i] = rng.normal(0.0, 0.5)
        th[-1] = math.log(0.1) + rng.normal(0.0, 0.5)
        per_restart.append(th)
    period_idx = [i for i, nm in enumerate(names) if nm.endswith(".period")]
    if not period_idx:
        return np.stack(per_restart)
    batch = []
    for th in per_restart:
        for div in period_divisors:
            t = th.copy()
            t[period_idx] = math.log(span / div)
            batch.append(t)
    return np.stack(batch)


def optimize_lml(expr, theta0, x, y, lr=0.05, steps=500, tol=1e-6, patience=20):
    """Adam ascent on the batched lml; returns per-member best parameters.

    Early stop fires once no live member's lml moved more than tol for
    patience consecutive steps. Members that go NaN get zeroed gradients
    and simply stall; they are excluded from the convergence vote.
    """
    theta = np.array(theta0, dtype=float)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    TAU, XX = grids(x, x)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    b1, b2, eps = 0.9, 0.999, 1e-8
    best_lml = np.full(theta.shape[0], -np.inf)
    best_theta = theta.copy()
    prev = np.full(theta.shape[0], np.nan)
    still = 0
    steps_run = 0
    converged = False
    for t in range(1, steps + 1):
        lml, g = lml_batch(expr, theta, x, y, TAU, XX, want_grads=True)
        steps_run = t
        bad = ~np.isfinite(lml)
        g[bad] = 0.0
        improved = np.where(bad, False, lml > best_lml)
        best_lml[improved] = lml[improved]
        best_theta[improved] = theta[improved]
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        mhat = m / (1.0 - b1**t)
        vhat = v / (1.0 - b2**t)
        theta = theta + lr * mhat / (np.sqrt(vhat) + eps)
        delta = np.abs(lml - prev)
        prev = lml
        if np.all(bad):
            break
        # NaN deltas (dead or just-revived members) compare False and reset
        if np.all(delta[~bad] < tol):
            still += 1
            if still >= patience:
                converged = True
                break
        else:
            still = 0
    return best_theta, best_lml, steps_run, converged


def fit_gp(
    expr,
    x,
    y,
    restarts: int = 3,
    seed: int = 0,
    lr: float = 0.05,
    steps: int = 500,
    tol: float = 1e-6,
    patience: int = 20,
    period_divisors=_PERIOD_DIVISORS,
) -> GPFitResult:
    """Best-of-restarts Adam ascent on the log marginal likelihood.

    Every restart (times five period initializations when the expression
    contains a period parameter) advances in lockstep as one batch.
    period_divisors exists so the structure search can rank candidates
    with a single period initialization; leave it alone otherwise.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need at least two observations")
    rng = np.random.default_rng(seed)
    theta0 = _init_batch(expr, x, restarts, rng, period_divisors)
    best_theta, best_lml, steps_run, converged = optimize_lml(
        expr, theta0, x, y, lr=lr, steps=steps, tol=tol, patience=patience
    )
    if not np.any(np.isfinite(best_lml)):
        raise GPFitError("no restart reached a positive-definite kernel (jitter ladder exhausted)")
    k = int(np.argmax(best_lml))
    th = best_theta[k]
    model = GPModel(
        expr=with_params(expr, th[:-1]),
        noise_variance=float(np.exp(th[-1])),
        x=x,
        y=y,
    )
    return GPFitResult(
        model=model,
        lml=float(best_lml[k]),
        restarts_tried=theta0.shape[0],
        steps_run=steps_run,
        converged=converged,
    )


def lml(model: GPModel) -> float:
    """Marginal likelihood of a fitted model at its stored hyperparameters."""
    theta = np.concatenate([flatten_params(model.expr), [math.log(model.noise_variance)]])
    val = lml_batch(model.expr, theta[None, :], model.x, model.y)[0]
    if not np.isfinite(val):
        raise GPFitError("kernel matrix not positive definite at stored parameters")
    return float(val)


def predict(model: GPModel, x_new):
    """Posterior predictive mean and observation variance at new inputs."""
    x_new = np.asarray(x_new, float)
    theta = flatten_params(model.expr)
    TAU, XX = grids(model.x, model.x)
    K = kernel_eval(model.expr, theta[None, :], TAU, XX)[0]
    cf = _chol_with_jitter(K + model.noise_variance * np.eye(len(model.x)))
    if cf is None:
        raise GPFitError("kernel matrix not positive definite at stored parameters")
    alpha = cho_solve(cf, model.y - model.mean)
    TAUs, XXs = grids(x_new, model.x)
    Ks = kernel_eval(model.expr, theta[None, :], TAUs, XXs)[0]
    TAUd, XXd = grids(x_new, x_new)
    Kd = kernel_eval(model.expr, theta[None, :], TAUd, XXd)[0]
    mean = model.mean + Ks @ alpha
    w = solve_triangular(cf[0], Ks.T, lower=True)
    var = np.diag(Kd) - np.sum(w * w, axis=0) + model.noise_variance
    return mean, np.maximum(var, 1e-12)


def mae(pred, truth) -> float:
    pred = np.asarray(pred, float)
    truth = np.asarray(truth, float)
    if pred.shape != truth.shape:
        raise ValueError("prediction/truth shape mismatch")
    return float(np.mean(np.abs(pred - truth)))


def holdout_mae(model: GPModel, x_test, y_test) -> float:
    """MAE of the posterior mean on held-out points (normalized units)."""
    mean, _ = predict(model, x_test)
    return mae(mean, y_test)
