"""Second-order oscillator targets and polynomial-corrected SHO fits.

Targets use the standard textbook parameterizations (states x, v):

  duffing       dx/dt = v
                dv/dt = -0.1*v - x - 5*x^3      (damping, linear, cubic)
  van_der_pol   dx/dt = v
                dv/dt = 0.5*(1 - x^2)*v - x
  cubic_damped  dx/dt = -0.1*x^3 + 2*v^3
                dv/dt = -2*x^3 - 0.1*v^3

The fitted model is a simple harmonic oscillator with trainable stiffness
plus, in both equations, every monomial x^i * v^j with 1 <= i+j <= degree,
each carrying its own zero-initialized coefficient. Degree 0 therefore IS
the plain SHO fit; higher degrees only add capacity.
"""

from __future__ import annotations

import numpy as np

from .data import ODEDataset
from .fit import FittedODE, fit_ode, full_plan
from .lv import _rk4
from .spec import ODESpec, parse_ode_spec

__all__ = [
    "OSCILLATORS",
    "corrected_sho_spec",
    "correction_terms",
    "oscillator_suite",
    "simulate_oscillator",
]


def _duffing(y):
    x, v = y
    return np.array([v, -0.1 * v - x - 5.0 * x**3])


def _van_der_pol(y):
    x, v = y
    return np.array([v, 0.5 * (1.0 - x**2) * v - x])


def _cubic_damped(y):
    x, v = y
    return np.array([-0.1 * x**3 + 2.0 * v**3, -2.0 * x**3 - 0.1 * v**3])


OSCILLATORS = {
    "duffing": (_duffing, (1.0, 0.0)),
    "van_der_pol": (_van_der_pol, (1.0, 0.0)),
    "cubic_damped": (_cubic_damped, (2.0, 0.0)),
}


def simulate_oscillator(
    kind: str,
    y0=None,
    *,
    t_end: float = 10.0,
    dt_obs: float = 0.1,
    noise_sd: float = 0.0,
    seed: int = 0,
    h: float = 0.01,
    train_end: float | None = None,
) -> ODEDataset:
    """Simulated observations of one target; all rows train by default."""
    if kind not in OSCILLATORS:
        raise KeyError(f"unknown oscillator {kind!r}; have {sorted(OSCILLATORS)}")
    rhs, default_y0 = OSCILLATORS[kind]
    y0 = np.asarray(default_y0 if y0 is None else y0, dtype=float)
    n_steps = int(round(t_end / h))
    fine = _rk4(rhs, y0, n_steps, h)
    t_obs = np.round(np.arange(0.0, t_end + dt_obs / 2, dt_obs), 12)
    idx = np.round(t_obs / h).astype(int)
    if np.any(np.abs(t_obs / h - idx) > 1e-6):
        raise ValueError("dt_obs must be a multiple of h")
    states = fine[idx]
    if noise_sd > 0:
        states = states + np.random.default_rng(seed).normal(
            0.0, noise_sd, size=states.shape
        )
    return ODEDataset(
        times=t_obs,
        states=states,
        state_names=("x", "v"),
        train_end=t_end if train_end is None else train_end,
    )


def correction_terms(degree: int) -> list[tuple[int, int]]:
    """Monomial exponents (i, j) for x^i * v^j with 1 <= i+j <= degree."""
    return [
        (i, total - i)
        for total in range(1, degree + 1)
        for i in range(total, -1, -1)
    ]


def _monomial(i: int, j: int) -> str:
    parts = []
    if i:
        parts.append("x" if i == 1 else f"x^{i}")
    if j:
        parts.append("v" if j == 1 else f"v^{j}")
    return " * ".join(parts)


def corrected_sho_spec(degree: int = 3) -> ODESpec:
    """SHO with per-equation polynomial corrections a{ij} (x) and b{ij} (v)."""
    if not 0 <= degree <= 3:
        raise ValueError("degree must be in 0..3")
    lines = ["param k = 1.0"]
    terms = correction_terms(degree)
    for i, j in terms:
        lines.append(f"param a{i}{j} = 0.0")
        lines.append(f"param b{i}{j} = 0.0")
    dx = "v" + "".join(f" + a{i}{j} * {_monomial(i, j)}" for i, j in terms)
    dv = "-k * x" + "".join(f" + b{i}{j} * {_monomial(i, j)}" for i, j in terms)
    lines.append(f"dx/dt = {dx}")
    lines.append(f"dv/dt = {dv}")
    return parse_ode_spec("\n".join(lines) + "\n")


def oscillator_suite(
    kind: str,
    degree: int,
    seed: int = 0,
    *,
    iterations: int = 1500,
    h: float = 0.01,
    **simulate_kwargs,
) -> FittedODE:
    """Fit the corrected SHO of the given degree to a simulated target."""
    dataset = simulate_oscillator(kind, seed=seed, h=h, **simulate_kwargs)
    spec = corrected_sho_spec(degree)
    return fit_ode(spec, dataset, full_plan(spec, iterations), seed, h=h)
