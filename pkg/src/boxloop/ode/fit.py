"""Staged gradient fitting of ODE models.

Training minimizes full-batch MSE between observed states and the RK4
solution at the observation times, differentiating through the whole
integration. A FitPlan is a sequence of stages, each naming the subset of
top-level components (parameter names, MLP slot names) it may update;
everything else is untouched bit for bit. Two stages with the mechanistic
parameters first and the network second is the usual hybrid recipe: the
zero-initialized output layer means stage one sees exactly the mechanistic
core, and stage two only ever improves its training loss from there.

Blow-ups during training do not poison the fit: the offending iteration is
skipped (no parameter or optimizer update), the learning rate is halved
once, and ten consecutive failures raise FitFailure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial

import jax
import jax.numpy as jnp
import numpy as np

from .data import ODEDataset
from .integrate import build_rhs, init_model_state, integrate, make_grid, raw_trajectory
from .spec import ODESpec

__all__ = [
    "FitFailure",
    "FitPlan",
    "FitStage",
    "FittedODE",
    "fit_ode",
    "full_plan",
    "make_loss",
    "test_mae",
    "two_stage_plan",
]

MAX_CONSECUTIVE_BLOWUPS = 10


class FitFailure(RuntimeError):
    """Training could not proceed (persistent blow-up)."""


@dataclass(frozen=True)
class FitStage:
    trainable: tuple[str, ...]  # param names and MLP slot names
    iterations: int = 1500
    lr: float = 3e-3

    def __post_init__(self):
        if not self.trainable:
            raise ValueError("a stage must train at least one component")
        if self.iterations < 1 or self.lr <= 0:
            raise ValueError("iterations >= 1 and lr > 0 required")


@dataclass(frozen=True)
class FitPlan:
    stages: tuple[FitStage, ...]

    def __post_init__(self):
        if not self.stages:
            raise ValueError("plan needs at least one stage")


def full_plan(spec: ODESpec, iterations: int = 1500, lr: float = 3e-3) -> FitPlan:
    """One stage, everything trainable."""
    names = tuple(spec.params) + tuple(s.name for s in spec.mlp_slots)
    return FitPlan((FitStage(names, iterations, lr),))


def two_stage_plan(
    spec: ODESpec,
    iterations: int = 1500,
    lr: float = 3e-3,
) -> FitPlan:
    """Mechanistic parameters first, then the networks with params frozen."""
    if not spec.params or not spec.mlp_slots:
        raise ValueError("two stages need both params and mlp slots")
    return FitPlan(
        (
            FitStage(tuple(spec.params), iterations, lr),
            FitStage(tuple(s.name for s in spec.mlp_slots), iterations, lr),
        )
    )


# ---------------------------------------------------------------------------
# loss construction


def _obs_indices(times: np.ndarray, t0: float, h: float) -> np.ndarray:
    """Map observation times onto the integration grid; must land on nodes."""
    raw = (np.asarray(times, dtype=float) - t0) / h
    idx = np.round(raw).astype(int)
    if np.any(np.abs(raw - idx) > 1e-6) or np.any(idx < 0):
        raise ValueError("observation times must lie on the integration grid")
    return idx


def _mse_and_ok(rhs, model_state, y0, y_obs, idx, n_steps, h):
    ys, oks = raw_trajectory(rhs, model_state, y0, n_steps, h)
    return jnp.mean((ys[idx] - y_obs) ** 2), oks[-1]


def _loss_pieces(spec: ODESpec, dataset: ODEDataset, h: float, y0):
    t_obs = dataset.train_times
    if len(t_obs) < 2:
        raise ValueError("need at least two training observations")
    if y0 is None:
        y0 = dataset.train_states[0]
    y0 = np.asarray(y0, dtype=float)
    idx = _obs_indices(t_obs, float(t_obs[0]), h)
    return build_rhs(spec), y0, jnp.asarray(dataset.train_states), idx, int(idx[-1])


def make_loss(spec: ODESpec, dataset: ODEDataset, *, h: float = 0.01, y0=None):
    """Train-split MSE as a function of the model state pytree.

    Returns (loss_fn, y0) where loss_fn(model_state) -> (mse, all_valid).
    The validity flag is False when the trajectory blew up, in which case
    the mse is computed on a frozen trajectory and should be discarded.
    """
    rhs, y0, y_obs, idx, n_steps = _loss_pieces(spec, dataset, h, y0)

    def loss_fn(model_state):
        return _mse_and_ok(rhs, model_state, jnp.asarray(y0), y_obs, idx, n_steps, h)

    return loss_fn, y0


# ---------------------------------------------------------------------------
# Adam on pytrees with a trainability mask


def _adam_init(params):
    return {
        "m": jax.tree.map(jnp.zeros_like, params),
        "v": jax.tree.map(jnp.zeros_like, params),
        "t": jnp.zeros((), dtype=jnp.int32),
    }


def _adam_update(params, grads, opt, lr, mask, b1=0.9, b2=0.999, eps=1e-8):
    t = opt["t"] + 1
    m = jax.tree.map(lambda m_, g: b1 * m_ + (1 - b1) * g, opt["m"], grads)
    v = jax.tree.map(lambda v_, g: b2 * v_ + (1 - b2) * g * g, opt["v"], grads)
    tf = t.astype(jnp.float64)
    c1 = 1.0 / (1.0 - b1**tf)
    c2 = 1.0 / (1.0 - b2**tf)
    new_params = jax.tree.map(
        lambda p, m_, v_, k: jnp.where(
            k > 0, p - lr * (m_ * c1) / (jnp.sqrt(v_ * c2) + eps), p
        ),
        params,
        m,
        v,
        mask,
    )
    return new_params, {"m": m, "v": v, "t": t}


def _build_mask(model_state: dict, trainable: tuple[str, ...], spec: ODESpec):
    known = set(model_state["params"]) | set(model_state["mlps"])
    unknown = set(trainable) - known
    if unknown:
        raise ValueError(f"unknown trainable component(s): {sorted(unknown)}")
    chosen = set(trainable)
    return {
        "params": {
            k: jnp.asarray(1.0 if k in chosen else 0.0)
            for k in model_state["params"]
        },
        "mlps": {
            name: jax.tree.map(
                lambda _: jnp.asarray(1.0 if name in chosen else 0.0), net
            )
            for name, net in model_state["mlps"].items()
        },
    }


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FittedODE:
    spec: ODESpec
    model_state: dict  # {"params": {...}, "mlps": {...}}
    y0: np.ndarray
    h: float
    train_mse: float
    loss_curves: tuple[np.ndarray, ...]  # one per stage
    n_skipped: int = 0
    flags: tuple[str, ...] = field(default=())

    @property
    def params(self) -> dict[str, float]:
        return {k: float(v) for k, v in self.model_state["params"].items()}

    def trajectory(self, t_end: float, t0: float | None = None):
        if t0 is None:
            t0 = 0.0
        return integrate(
            self.spec, self.model_state, self.y0, make_grid(t0, t_end, self.h)
        )


@partial(jax.jit, static_argnames=("rhs", "n_steps", "n_iters"))
def _run_stage(rhs, model_state, mask, lr0, y0, y_obs, idx, h, n_steps, n_iters):
    """One stage as a single scan; whole-stage semantics live in the carry.

    A blown-up iteration applies no update (parameters and optimizer state
    both stay put bitwise) and halves the learning rate, once per stage.
    After MAX_CONSECUTIVE_BLOWUPS consecutive failures the state freezes
    for the remaining iterations; the caller turns that into FitFailure.
    """
    value_and_grad = jax.value_and_grad(
        lambda m: _mse_and_ok(rhs, m, y0, y_obs, idx, n_steps, h), has_aux=True
    )

    def body(carry, _):
        model, opt, lr, consec, skipped, halved = carry
        (mse, ok), grads = value_and_grad(model)
        dead = consec >= MAX_CONSECUTIVE_BLOWUPS
        do_update = ok & ~dead
        new_model, new_opt = _adam_update(model, grads, opt, lr, mask)
        sel = lambda a, b: jax.tree.map(
            lambda x, y: jnp.where(do_update, x, y), a, b
        )
        model, opt = sel(new_model, model), sel(new_opt, opt)
        skip = ~ok & ~dead
        consec = jnp.where(dead, consec, jnp.where(ok, 0, consec + 1))
        lr = jnp.where(skip & ~halved, lr * 0.5, lr)
        return (model, opt, lr, consec, skipped + skip, halved | skip), mse

    init = (
        model_state,
        _adam_init(model_state),
        jnp.asarray(lr0, dtype=jnp.float64),
        jnp.zeros((), dtype=jnp.int32),
        jnp.zeros((), dtype=jnp.int32),
        jnp.asarray(False),
    )
    (model, _, _, consec, skipped, halved), curve = jax.lax.scan(
        body, init, None, length=n_iters
    )
    return model, curve, consec, skipped, halved


def fit_ode(
    spec: ODESpec,
    dataset: ODEDataset,
    plan: FitPlan | None = None,
    seed: int = 0,
    *,
    h: float = 0.01,
    width: int = 4,
    depth: int = 1,
    y0=None,
) -> FittedODE:
    """Fit by staged full-batch Adam; see module docstring for semantics."""
    if plan is None:
        plan = full_plan(spec)
    rhs, y0, y_obs, idx, n_steps = _loss_pieces(spec, dataset, h, y0)
    model_state = init_model_state(
        spec, np.random.default_rng(seed), width=width, depth=depth
    )

    curves: list[np.ndarray] = []
    n_skipped = 0
    flags: list[str] = []
    for stage in plan.stages:
        mask = _build_mask(model_state, stage.trainable, spec)
        model_state, curve, consec, skipped, halved = _run_stage(
            rhs,
            model_state,
            mask,
            stage.lr,
            jnp.asarray(y0),
            y_obs,
            idx,
            h,
            n_steps,
            stage.iterations,
        )
        curves.append(np.asarray(curve))
        n_skipped += int(skipped)
        if bool(halved):
            flags.append("lr_halved")
        if int(consec) >= MAX_CONSECUTIVE_BLOWUPS:
            raise FitFailure(
                f"{MAX_CONSECUTIVE_BLOWUPS} consecutive blow-ups during training"
            )

    final_mse, final_ok = _mse_and_ok(
        rhs, model_state, jnp.asarray(y0), y_obs, idx, n_steps, h
    )
    if not bool(final_ok):
        raise FitFailure("fitted model blows up on the training window")
    return FittedODE(
        spec=spec,
        model_state=model_state,
        y0=y0,
        h=h,
        train_mse=float(final_mse),
        loss_curves=tuple(curves),
        n_skipped=n_skipped,
        flags=tuple(flags),
    )


def test_mae(fitted: FittedODE, dataset: ODEDataset) -> tuple[float, tuple[str, ...]]:
    """Extrapolate past the train window; MAE on held-out points.

    Averages the absolute error over every held-out time and state. If the
    extrapolation blows up, the MAE covers the valid prefix and the result
    is flagged; with no valid held-out points at all the MAE is inf.
    """
    t_test = dataset.test_times
    if len(t_test) == 0:
        raise ValueError("dataset has no held-out rows")
    t0 = float(dataset.train_times[0])
    grid = make_grid(t0, float(t_test[-1]), fitted.h)
    traj = integrate(fitted.spec, fitted.model_state, fitted.y0, grid)
    idx = _obs_indices(t_test, t0, fitted.h)
    valid = idx < len(traj.times)
    flags: tuple[str, ...] = ()
    if traj.blew_up:
        flags = ("extrapolation_truncated",)
        if not valid.any():
            return float("inf"), flags
    err = np.abs(traj.states[idx[valid]] - dataset.test_states[valid])
    return float(err.mean()), flags
