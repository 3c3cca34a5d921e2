"""Adaptive Hamiltonian Monte Carlo with jittered path lengths.

Plain HMC (not a tree-building sampler): per chain, warmup adapts the
step size by dual averaging toward a target acceptance rate and
estimates a diagonal inverse mass matrix from the second half of the
warmup draws; a short final stretch of warmup re-tunes the step size
under the new metric. Sampling then runs with frozen tuning. The number
of leapfrog steps is drawn uniformly from [floor(0.5 L0), ceil(1.5 L0)]
each iteration, L0 sized so that L0 * step_size is about one unit of
unconstrained distance.

Targets are duck-typed: anything with `dim` and `log_joint_grad(u) ->
(float, array)` samples; an optional `constrain_flat(u)` maps draws back
to the constrained scale for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 4
    warmup: int = 1000
    draws: int = 1000
    target_accept: float = 0.8
    path_jitter: tuple = (0.5, 1.5)
    max_leapfrog: int = 100
    divergence_energy: float = 1000.0
    init_tries: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if self.chains < 2:
            raise ValueError("need >= 2 chains (split diagnostics require them)")
        if self.draws < 100:
            raise ValueError("need >= 100 draws per chain")


@dataclass
class PosteriorDraws:
    constrained: np.ndarray = field(repr=False)  # [chain, draw, param]
    unconstrained: np.ndarray = field(repr=False)
    divergent: np.ndarray = field(repr=False)  # bool [chain, draw]
    step_size: np.ndarray  # per chain
    inv_mass: np.ndarray = field(repr=False)  # [chain, param]
    accept_rate: np.ndarray  # per chain
    param_names: list = field(default_factory=list)

    @property
    def n_chains(self) -> int:
        return self.constrained.shape[0]

    @property
    def n_draws(self) -> int:
        return self.constrained.shape[1]

    def pooled(self) -> np.ndarray:
        """[chain*draw, param] constrained draws, chain-major."""
        c, d, p = self.constrained.shape
        return self.constrained.reshape(c * d, p)

    def per_param(self):
        """Iterate (name, [chain, draw] matrix) over flat parameters."""
        for j, name in enumerate(self.param_names):
            yield name, self.constrained[:, :, j]


@dataclass(frozen=True)
class _DualAveraging:
    """Nesterov dual averaging on log step size (gamma/t0/kappa defaults)."""

    mu: float
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75

    def start(self):
        return {"h_bar": 0.0, "log_eps_bar": 0.0, "m": 0}

    def update(self, state, accept_prob, target):
        state["m"] += 1
        m = state["m"]
        eta = 1.0 / (m + self.t0)
        state["h_bar"] = (1 - eta) * state["h_bar"] + eta * (target - accept_prob)
        log_eps = self.mu - math.sqrt(m) / self.gamma * state["h_bar"]
        w = m ** (-self.kappa)
        state["log_eps_bar"] = w * log_eps + (1 - w) * state["log_eps_bar"]
        return math.exp(log_eps)


def _finite_init(target, rng, tries):
    for _ in range(tries):
        u = rng.standard_normal(target.dim)
        val, grad = target.log_joint_grad(u)
        if math.isfinite(val) and np.all(np.isfinite(grad)):
            return u, val, grad
    raise SamplingError(f"no finite initialization after {tries} tries (is the log joint proper?)")


def _leapfrog(target, q, p, grad, eps, n_steps, inv_mass):
    """Returns (q, p, value, grad, ok). NaN anywhere -> ok=False."""
    p = p + 0.5 * eps * grad
    val = -np.inf
    for step in range(n_steps):
        q = q + eps * inv_mass * p
        val, grad = target.log_joint_grad(q)
        if not (math.isfinite(val) and np.all(np.isfinite(grad))):
            return q, p, -np.inf, grad, False
        p = p + (eps if step < n_steps - 1 else 0.5 * eps) * grad
    return q, p, val, grad, True


def _hamiltonian(val, p, inv_mass):
    # overflow to inf is the expected signal for a diverged trajectory
    with np.errstate(over="ignore"):
        return -val + 0.5 * np.sum(p * p * inv_mass)


def _find_initial_step(target, q, val, grad, inv_mass, rng):
    """Double or halve eps until the one-step acceptance crosses 1/2."""
    eps = 1.0
    p = rng.standard_normal(len(q)) / np.sqrt(inv_mass)
    h0 = _hamiltonian(val, p, inv_mass)
    q1, p1, val1, _, ok = _leapfrog(target, q, p, grad, eps, 1, inv_mass)
    h1 = _hamiltonian(val1, p1, inv_mass) if ok else np.inf
    ratio = math.exp(min(0.0, h0 - h1))
    direction = 1 if ratio > 0.5 else -1
    for _ in range(50):
        eps *= 2.0**direction
        q1, p1, val1, _, ok = _leapfrog(target, q, p, grad, eps, 1, inv_mass)
        h1 = _hamiltonian(val1, p1, inv_mass) if ok else np.inf
        ratio = math.exp(min(0.0, h0 - h1))
        if (direction == 1 and ratio <= 0.5) or (direction == -1 and ratio >= 0.5):
            break
    return max(eps, 1e-10)


def _path_steps(eps, jitter, cap, rng):
    l0 = min(max(int(round(1.0 / eps)), 1), cap)
    lo = max(1, int(math.floor(jitter[0] * l0)))
    hi = max(lo, int(math.ceil(jitter[1] * l0)))
    return int(rng.integers(lo, hi + 1))


def _run_chain(target, config, seed_seq):
    rng = np.random.default_rng(seed_seq)
    dim = target.dim
    q, val, grad = _finite_init(target, rng, config.init_tries)
    inv_mass = np.ones(dim)

    warmup = config.warmup
    retune = max(50, warmup // 10) if warmup >= 100 else 0
    collect_from = warmup // 2
    collect_to = warmup - retune  # draws in [collect_from, collect_to) set the mass
    buffer = []

    eps = _find_initial_step(target, q, val, grad, inv_mass, rng)
    da = _DualAveraging(mu=math.log(10.0 * eps))
    da_state = da.start()

    def transition(eps_now):
        nonlocal q, val, grad
        p = rng.standard_normal(dim) / np.sqrt(inv_mass)
        h0 = _hamiltonian(val, p, inv_mass)
        n_steps = _path_steps(eps_now, config.path_jitter, config.max_leapfrog, rng)
        q1, p1, val1, grad1, ok = _leapfrog(target, q, p, grad, eps_now, n_steps, inv_mass)
        h1 = _hamiltonian(val1, p1, inv_mass) if ok else np.inf
        energy_error = h1 - h0
        divergent = (not ok) or (energy_error > config.divergence_energy)
        accept_prob = 0.0 if not math.isfinite(energy_error) else math.exp(min(0.0, -energy_error))
        if not divergent and rng.random() < accept_prob:
            q, val, grad = q1, val1, grad1
        return accept_prob, divergent

    for w in range(warmup):
        if retune and w == collect_to:
            # metric from the second half of warmup, regularized toward unity
            arr = np.asarray(buffer)
            n_b = len(arr)
            est = arr.var(axis=0, ddof=1) if n_b > 1 else np.ones(dim)
            inv_mass = (n_b / (n_b + 5.0)) * est + (5.0 / (n_b + 5.0)) * 1e-3
            inv_mass = np.maximum(inv_mass, 1e-10)
            eps = _find_initial_step(target, q, val, grad, inv_mass, rng)
            da = _DualAveraging(mu=math.log(10.0 * eps))
            da_state = da.start()
        accept_prob, _ = transition(eps)
        eps = da.update(da_state, accept_prob, config.target_accept)
        if collect_from <= w < collect_to:
            buffer.append(q.copy())
    eps = math.exp(da_state["log_eps_bar"]) if da_state["m"] else eps

    draws_u = np.empty((config.draws, dim))
    divergent = np.zeros(config.draws, dtype=bool)
    accepts = 0.0
    for d in range(config.draws):
        accept_prob, div = transition(eps)
        accepts += accept_prob
        draws_u[d] = q
        divergent[d] = div
    if divergent.all():
        raise SamplingError("every post-warmup transition diverged")
    return draws_u, divergent, eps, inv_mass, accepts / config.draws


def hmc_sample(target, config: SamplerConfig | None = None) -> PosteriorDraws:
    config = config or SamplerConfig()
    seeds = np.random.SeedSequence(config.master_seed).spawn(config.chains)
    constrain = getattr(target, "constrain_flat", None)
    names = list(getattr(target, "flat_names", [])) or [f"u{i}" for i in range(target.dim)]

    all_u, all_div, all_eps, all_mass, all_acc = [], [], [], [], []
    for seq in seeds:
        u, div, eps, inv_mass, acc = _run_chain(target, config, seq)
        all_u.append(u)
        all_div.append(div)
        all_eps.append(eps)
        all_mass.append(inv_mass)
        all_acc.append(acc)

    unconstrained = np.stack(all_u)
    if constrain is None:
        constrained = unconstrained.copy()
    else:
        flat = unconstrained.reshape(-1, target.dim)
        constrained = np.stack([constrain(row) for row in flat]).reshape(unconstrained.shape)
    return PosteriorDraws(
        constrained=constrained,
        unconstrained=unconstrained,
        divergent=np.stack(all_div),
        step_size=np.asarray(all_eps),
        inv_mass=np.stack(all_mass),
        accept_rate=np.asarray(all_acc),
        param_names=names,
    )
