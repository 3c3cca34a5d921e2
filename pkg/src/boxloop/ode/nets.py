"""Small dense networks used as learnable terms inside ODE right-hand sides.

Layout is a flat dict {"W1": ..., "b1": ..., "W2": ...} so the whole model
state stays a plain pytree of arrays. The output layer starts at zero: a
hybrid model with an untrained network is then exactly its mechanistic
core, which is what makes staged fitting contracts testable.
"""

from __future__ import annotations

import jax.numpy as jnp
import numpy as np

__all__ = ["init_mlp", "mlp_apply", "n_layers"]


def init_mlp(
    rng: np.random.Generator,
    n_in: int,
    n_out: int,
    width: int = 4,
    depth: int = 1,
) -> dict[str, jnp.ndarray]:
    """Tanh network with `depth` hidden layers of `width` units.

    Hidden weights ~ N(0, 1/fan_in); output weights and all biases zero.
    """
    if n_in < 1 or n_out < 1 or width < 1 or depth < 1:
        raise ValueError("n_in, n_out, width, depth must all be >= 1")
    sizes = [n_in] + [width] * depth + [n_out]
    params: dict[str, jnp.ndarray] = {}
    last = len(sizes) - 1
    for i in range(1, last + 1):
        fan_in, fan_out = sizes[i - 1], sizes[i]
        if i == last:
            w = np.zeros((fan_in, fan_out))
        else:
            w = rng.normal(size=(fan_in, fan_out)) / np.sqrt(fan_in)
        params[f"W{i}"] = jnp.asarray(w, dtype=jnp.float64)
        params[f"b{i}"] = jnp.zeros((fan_out,), dtype=jnp.float64)
    return params


def n_layers(params: dict) -> int:
    return len(params) // 2


def mlp_apply(params: dict, x: jnp.ndarray) -> jnp.ndarray:
    """Forward pass; x is the input vector, returns the output vector."""
    depth = n_layers(params)
    h = x
    for i in range(1, depth + 1):
        h = h @ params[f"W{i}"] + params[f"b{i}"]
        if i < depth:
            h = jnp.tanh(h)
    return h
