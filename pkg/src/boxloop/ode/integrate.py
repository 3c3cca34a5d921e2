"""Fixed-step RK4 integration with end-to-end gradients.

The integrator is a lax.scan over classic Runge-Kutta-4 steps, so a loss
downstream of `raw_trajectory` differentiates through every step
(discretize-then-optimize). Divergence is handled inside the scan: once a
step produces a non-finite state or a magnitude above BLOWUP_LIMIT, the
state freezes and a validity flag drops to False for the rest of the
trajectory. That keeps shapes static and gradients finite; callers decide
whether to truncate (reporting) or to discard the iteration (training).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import jax
import jax.numpy as jnp
import numpy as np

from .nets import mlp_apply
from .spec import ODESpec, eval_expr

__all__ = [
    "BLOWUP_LIMIT",
    "Trajectory",
    "build_rhs",
    "init_model_state",
    "integrate",
    "make_grid",
    "raw_trajectory",
]

BLOWUP_LIMIT = 1e6


@dataclass(frozen=True)
class Trajectory:
    """Uniform-grid solution; truncated at the last valid step on blow-up."""

    times: np.ndarray  # [T]
    states: np.ndarray  # [T, n_states]
    state_names: tuple[str, ...]
    blew_up: bool = False

    def state(self, name: str) -> np.ndarray:
        return self.states[:, self.state_names.index(name)]


def make_grid(t0: float, t1: float, h: float) -> np.ndarray:
    """Uniform grid t0, t0+h, ..., covering [t0, t1]; t1 must be a multiple."""
    if h <= 0:
        raise ValueError("step size h must be positive")
    n = (t1 - t0) / h
    n_steps = int(round(n))
    if n_steps < 1 or abs(n - n_steps) > 1e-8:
        raise ValueError(f"span [{t0}, {t1}] is not a whole number of steps h={h}")
    return t0 + h * np.arange(n_steps + 1)


# rhs closures keyed by canonical source: jax.jit caches on the closure's
# identity, so structurally equal specs must share one closure or every
# grid-search fit would recompile the same graph
_RHS_CACHE: dict[str, object] = {}


def build_rhs(spec: ODESpec):
    """Compile the spec into rhs(y, params, mlps) -> dy/dt (stacked vector)."""
    from .spec import print_ode_spec

    key = print_ode_spec(spec)
    cached = _RHS_CACHE.get(key)
    if cached is not None:
        return cached

    order = spec.state_names
    slots = spec.mlp_slots
    exprs = dict(spec.rhs)

    def rhs(y, params, mlps):
        env = {name: y[i] for i, name in enumerate(order)}
        env.update(params)
        mlp_out = {
            s.name: mlp_apply(mlps[s.name], jnp.stack([env[i] for i in s.inputs]))
            for s in slots
        }
        return jnp.stack([eval_expr(exprs[name], env, mlp_out, jnp) for name in order])

    _RHS_CACHE[key] = rhs
    return rhs


def init_model_state(
    spec: ODESpec,
    rng: np.random.Generator,
    width: int = 4,
    depth: int = 1,
) -> dict:
    """Initial pytree {"params": {...}, "mlps": {...}} for a spec."""
    from .nets import init_mlp

    params = {k: jnp.asarray(v, dtype=jnp.float64) for k, v in spec.params.items()}
    mlps = {
        s.name: init_mlp(rng, n_in=len(s.inputs), n_out=s.arity, width=width, depth=depth)
        for s in spec.mlp_slots
    }
    return {"params": params, "mlps": mlps}


@partial(jax.jit, static_argnums=(0, 3))
def raw_trajectory(rhs, model_state, y0, n_steps: int, h):
    """States at all grid points and a per-point validity mask.

    Returns (ys [n_steps+1, S], ok [n_steps+1]); ys[0] = y0, ok[0] = True.
    After the first invalid step the state freezes and ok stays False.
    """
    params, mlps = model_state["params"], model_state["mlps"]

    def step(carry, _):
        y, ok = carry
        k1 = rhs(y, params, mlps)
        k2 = rhs(y + 0.5 * h * k1, params, mlps)
        k3 = rhs(y + 0.5 * h * k2, params, mlps)
        k4 = rhs(y + h * k3, params, mlps)
        y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        good = ok & jnp.all(jnp.isfinite(y_new)) & (
            jnp.max(jnp.abs(y_new)) <= BLOWUP_LIMIT
        )
        y_next = jnp.where(good, y_new, y)
        return (y_next, good), (y_next, good)

    y0 = jnp.asarray(y0, dtype=jnp.float64)
    (_, _), (ys, oks) = jax.lax.scan(
        step, (y0, jnp.asarray(True)), None, length=n_steps
    )
    ys = jnp.concatenate([y0[None, :], ys], axis=0)
    oks = jnp.concatenate([jnp.array([True]), oks])
    return ys, oks


def integrate(
    spec: ODESpec,
    model_state: dict,
    y0,
    grid: np.ndarray,
) -> Trajectory:
    """Solve on a uniform grid; truncate at the last valid point on blow-up."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("grid needs at least two points")
    steps = np.diff(grid)
    h = steps[0]
    if h <= 0 or not np.allclose(steps, h, rtol=0, atol=1e-9 * max(1.0, abs(h))):
        raise ValueError("grid must be uniform and increasing")
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (spec.n_states,):
        raise ValueError(f"y0 must have shape ({spec.n_states},)")
    if not np.all(np.isfinite(y0)):
        raise ValueError("y0 must be finite")

    rhs = build_rhs(spec)
    ys, oks = raw_trajectory(rhs, model_state, y0, len(grid) - 1, h)
    ys, oks = np.asarray(ys), np.asarray(oks)
    if oks.all():
        return Trajectory(grid, ys, spec.state_names, blew_up=False)
    n_valid = int(np.argmin(oks))  # first False
    return Trajectory(
        grid[:n_valid], ys[:n_valid], spec.state_names, blew_up=True
    )
