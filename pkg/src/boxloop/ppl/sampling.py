"""Forward sampling: prior draws, synthetic observations, predictive moments.

Prior sampling walks declarations in order (defined-before-use makes that
a topological order); fixed values can replace any subset of priors, which
is how simulation studies pin the generating parameters. Observations are
drawn from the likelihood given the sampled (or fixed) parameters.
"""

from __future__ import annotations

import math

import numpy as np

from ..datasets import Table
from .compile import _broadcast, build_expr
from .distributions import FAMILIES
from .model import ModelError, ModelProgram, expr_refs


def _numeric_env(program: ModelProgram, dataset: Table | None, n_obs: int | None):
    if dataset is not None:
        env = {name: [float(v) for v in dataset.column(name)] for name in program.data_names() if name in dataset.columns}
        n = dataset.n_rows
    else:
        env, n = {}, n_obs
    if n is None:
        raise ModelError("need a dataset or n_obs to size vector parameters and observations")
    return env, n


def _check_args(family, args, line):
    flat = [a for arg in args for a in (arg if isinstance(arg, list) else [arg])]
    if not all(math.isfinite(v) for v in flat):
        raise ModelError(
            f"{family} received non-finite hyperparameters {flat}; pass fixed= values to simulate this program",
            line,
        )


def sample_prior(
    program: ModelProgram,
    rng: np.random.Generator,
    dataset: Table | None = None,
    n_obs: int | None = None,
    fixed: dict | None = None,
):
    """Draw parameters from their priors, then observations from the likelihood.

    Returns (params, observations): params maps name -> float or array,
    observations maps each observed column name -> array of length n.
    Entries of `fixed` bypass the prior for that parameter.
    """
    fixed = dict(fixed or {})
    env, n = _numeric_env(program, dataset, n_obs)

    params = {}
    for p in program.param_decls:
        fam = FAMILIES[p.dist.family]
        size = n if p.size is not None else None
        if p.name in fixed:
            v = fixed.pop(p.name)
            value = [float(e) for e in np.broadcast_to(v, (size,))] if size else float(v)
        else:
            args = [build_expr(a, env) for a in p.dist.args]
            _check_args(fam.name, args, p.line)
            if size is None:
                value = float(fam.sample(rng, *args))
            else:
                vecs = [_broadcast(a, size) for a in args]
                value = [float(fam.sample(rng, *(v[i] for v in vecs))) for i in range(size)]
        env[p.name] = value
        params[p.name] = np.asarray(value) if size else value
    if fixed:
        raise ModelError(f"fixed values for unknown parameters: {sorted(fixed)}")

    for det in program.det_decls:
        env[det.name] = build_expr(det.expr, env)

    observations = {}
    for lik in program.lik_stmts:
        fam = FAMILIES[lik.dist.family]
        missing = [r for r in sorted(expr_refs_args(lik.dist.args)) if r not in env]
        if missing:
            raise ModelError(
                f"likelihood for {lik.observed!r} references data column(s) {missing}; pass dataset=", lik.line
            )
        vecs = [_broadcast(build_expr(a, env), n) for a in lik.dist.args]
        observations[lik.observed] = np.array([fam.sample(rng, *(v[i] for v in vecs)) for i in range(n)])
        env.setdefault(lik.observed, [float(v) for v in observations[lik.observed]])
    return params, observations


def expr_refs_args(args) -> set:
    out = set()
    for a in args:
        out |= expr_refs(a)
    return out


def synthetic_table(program: ModelProgram, rng, template: Table, fixed: dict | None = None) -> Table:
    """Clone `template` with observed columns regenerated from the program."""
    _, obs = sample_prior(program, rng, dataset=template, fixed=fixed)
    return template.with_columns(**{k: np.asarray(v, float) for k, v in obs.items()})


def posterior_predictive(
    program: ModelProgram,
    dataset: Table,
    draws: dict,
    rng: np.random.Generator,
    n_rep: int = 1,
):
    """Predictive mean and variance per observation across posterior draws.

    `draws` maps parameter name -> array [S] (scalar) or [S, size] (vector).
    Each draw simulates n_rep replicate observation sets; moments pool all
    S * n_rep replicates per observation index (statement-major order,
    matching pointwise_loglik).
    """
    env0, n = _numeric_env(program, dataset, None)
    names = program.param_names()
    sizes = {np.asarray(draws[name]).shape[0] for name in names}
    if len(sizes) != 1:
        raise ModelError(f"draw arrays disagree on draw count: {sorted(sizes)}")
    (n_draws,) = sizes

    n_pw = n * len(program.lik_stmts)
    reps = np.empty((n_draws * n_rep, n_pw))
    row = 0
    for s in range(n_draws):
        env = dict(env0)
        for p in program.param_decls:
            v = np.asarray(draws[p.name])[s]
            env[p.name] = [float(e) for e in v] if p.size is not None else float(v)
        for det in program.det_decls:
            env[det.name] = build_expr(det.expr, env)
        arg_vecs = []
        for lik in program.lik_stmts:
            arg_vecs.append((FAMILIES[lik.dist.family], [_broadcast(build_expr(a, env), n) for a in lik.dist.args]))
        for _ in range(n_rep):
            col = 0
            for fam, vecs in arg_vecs:
                for i in range(n):
                    reps[row, col] = fam.sample(rng, *(v[i] for v in vecs))
                    col += 1
            row += 1
    return reps.mean(axis=0), reps.var(axis=0)
