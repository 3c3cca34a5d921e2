"""Compositional kernel expressions: base kernels closed under + and *.

Expressions are immutable trees. Hyperparameters live on the leaves and are
stored as log-values (every parameter here is a variance, a lengthscale, a
period, or similarly positive quantity), so the optimizer works unconstrained.

Evaluation is vectorized twice over: across the n x n input grid and across
a batch of B hyperparameter vectors (random restarts and the fixed period
initializations fit as one batched optimization). Gradients with respect to
the log-parameters are analytic; there is nothing to trace.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * np.pi

# parameter schema per base kind, in storage order
KIND_PARAMS = {
    "ExpQuad": ("variance", "lengthscale"),
    "Periodic": ("variance", "lengthscale", "period"),
    "Linear": ("variance", "offset"),
    "Polynomial": ("variance", "offset"),
    "Matern32": ("variance", "lengthscale"),
    "Matern52": ("variance", "lengthscale"),
    "Cosine": ("variance", "period"),
    "RationalQuadratic": ("variance", "lengthscale", "alpha"),
}

BASE_KINDS = ("ExpQuad", "Periodic", "Linear", "Polynomial")
AUGMENTED_KINDS = BASE_KINDS + ("Matern32", "Matern52", "Cosine", "RationalQuadratic")


@dataclass(frozen=True)
class Base:
    kind: str
    params: tuple = ()  # log-values, aligned with KIND_PARAMS[kind]

    def __post_init__(self):
        if self.kind not in KIND_PARAMS:
            raise ValueError(f"unknown base kernel {self.kind!r}")
        want = len(KIND_PARAMS[self.kind])
        if not self.params:
            object.__setattr__(self, "params", (0.0,) * want)
        elif len(self.params) != want:
            raise ValueError(f"{self.kind} takes {want} params, got {len(self.params)}")


@dataclass(frozen=True)
class Sum:
    left: object
    right: object


@dataclass(frozen=True)
class Product:
    left: object
    right: object


def subtrees(expr) -> list:
    """Preorder list of subtree positions; index 0 is the root."""
    acc = [expr]
    if isinstance(expr, (Sum, Product)):
        acc += subtrees(expr.left)
        acc += subtrees(expr.right)
    return acc


def replace_subtree(expr, pos: int, new):
    """Return a copy of expr with the preorder position pos swapped for new."""

    def go(node, k):
        if k[0] == pos:
            k[0] += 1
            return new, True
        k[0] += 1
        if isinstance(node, (Sum, Product)):
            left, hit = go(node.left, k)
            if hit:
                return replace(node, left=left), True
            right, hit = go(node.right, k)
            if hit:
                return replace(node, right=right), True
        return node, False

    out, hit = go(expr, [0])
    if not hit:
        raise IndexError(f"no subtree at position {pos}")
    return out


def leaves(expr) -> list:
    return [s for s in subtrees(expr) if isinstance(s, Base)]


def n_params(expr) -> int:
    if isinstance(expr, (Sum, Product)):
        return n_params(expr.left) + n_params(expr.right)
    return len(expr.params)


def flatten_params(expr) -> np.ndarray:
    if isinstance(expr, (Sum, Product)):
        return np.concatenate([flatten_params(expr.left), flatten_params(expr.right)])
    return np.asarray(expr.params, dtype=float)


def with_params(expr, theta) -> object:
    theta = np.asarray(theta, dtype=float)

    def go(node, off):
        if isinstance(node, (Sum, Product)):
            left, off = go(node.left, off)
            right, off = go(node.right, off)
            return replace(node, left=left, right=right), off
        k = len(node.params)
        return replace(node, params=tuple(theta[off : off + k])), off + k

    out, off = go(expr, 0)
    if off != len(theta):
        raise ValueError(f"expected {off} params, got {len(theta)}")
    return out


def param_names(expr) -> list:
    names = []

    def go(node, path):
        if isinstance(node, (Sum, Product)):
            go(node.left, path + "L")
            go(node.right, path + "R")
        elif isinstance(node, Base):
            names.extend(f"{path}{node.kind}.{p}" for p in KIND_PARAMS[node.kind])
        else:
            names.extend(f"{path}{lbl}" for lbl in node.param_labels())

    go(expr, "")
    return names


# -- batched evaluation -------------------------------------------------------
#
# theta: (B, P) log-params. TAU = x1[:,None]-x2[None,:], XX = x1[:,None]*x2[None,:]
# are shared across the batch. Returns K: (B, n1, n2) and, when wanted, a list
# of per-parameter dK/dlog-theta arrays in storage order.


def _base_eval(kind, th, TAU, XX, want_grads):
    v = np.exp(th[:, 0])[:, None, None]
    if kind == "ExpQuad":
        ls = np.exp(th[:, 1])[:, None, None]
        z = (TAU / ls) ** 2
        K = v * np.exp(-0.5 * z)
        return K, ([K, K * z] if want_grads else None)
    if kind == "Periodic":
        ls = np.exp(th[:, 1])[:, None, None]
        p = np.exp(th[:, 2])[:, None, None]
        ang = np.pi * TAU / p
        s2 = np.sin(ang) ** 2
        K = v * np.exp(-2.0 * s2 / ls**2)
        if not want_grads:
            return K, None
        d_ls = K * (4.0 * s2 / ls**2)
        d_p = K * (TWO_PI * TAU / (p * ls**2)) * np.sin(2.0 * ang)
        return K, [K, d_ls, d_p]
    if kind == "Linear":
        off = np.exp(th[:, 1])[:, None, None]
        sl = v * XX
        K = sl + off
        if not want_grads:
            return K, None
        return K, [sl, np.broadcast_to(off, K.shape).copy()]
    if kind == "Polynomial":
        # fixed degree 2; the base set needs one polynomial shape, and
        # degree 2 keeps the induced feature space small
        off = np.exp(th[:, 1])[:, None, None]
        inner = v * XX + off
        K = inner**2
        if not want_grads:
            return K, None
        return K, [2.0 * inner * v * XX, 2.0 * inner * np.broadcast_to(off, K.shape)]
    if kind == "Matern32":
        ls = np.exp(th[:, 1])[:, None, None]
        r = np.abs(TAU) / ls
        e = np.exp(-np.sqrt(3.0) * r)
        K = v * (1.0 + np.sqrt(3.0) * r) * e
        if not want_grads:
            return K, None
        return K, [K, 3.0 * v * r**2 * e]
    if kind == "Matern52":
        ls = np.exp(th[:, 1])[:, None, None]
        r = np.abs(TAU) / ls
        e = np.exp(-np.sqrt(5.0) * r)
        K = v * (1.0 + np.sqrt(5.0) * r + 5.0 * r**2 / 3.0) * e
        if not want_grads:
            return K, None
        return K, [K, v * e * (5.0 * r**2 / 3.0) * (1.0 + np.sqrt(5.0) * r)]
    if kind == "Cosine":
        p = np.exp(th[:, 1])[:, None, None]
        ang = TWO_PI * TAU / p
        K = v * np.cos(ang)
        if not want_grads:
            return K, None
        return K, [K, v * np.sin(ang) * ang]
    if kind == "RationalQuadratic":
        ls = np.exp(th[:, 1])[:, None, None]
        al = np.exp(th[:, 2])[:, None, None]
        u = 1.0 + TAU**2 / (2.0 * al * ls**2)
        K = v * u ** (-al)
        if not want_grads:
            return K, None
        d_ls = v * u ** (-al - 1.0) * (TAU**2 / ls**2)
        d_al = K * al * (-np.log(u) + (u - 1.0) / u)
        return K, [K, d_ls, d_al]
    raise ValueError(f"unknown base kernel {kind!r}")


def kernel_eval(expr, theta, TAU, XX, want_grads: bool = False):
    """K and (optionally) dK/dlog-params for a batch of parameter vectors.

    theta has shape (B, n_params(expr)); results broadcast over the batch.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        theta = theta[None, :]

    def go(node, off):
        if not isinstance(node, (Sum, Product)):
            k = len(node.params)
            th = theta[:, off : off + k]
            if isinstance(node, Base):
                K, grads = _base_eval(node.kind, th, TAU, XX, want_grads)
            else:
                K, grads = node.eval_batch(th, TAU, XX, want_grads)
            return K, grads, off + k
        K1, g1, off = go(node.left, off)
        K2, g2, off = go(node.right, off)
        if isinstance(node, Sum):
            return K1 + K2, (g1 + g2 if want_grads else None), off
        K = K1 * K2
        if not want_grads:
            return K, None, off
        return K, [d * K2 for d in g1] + [K1 * d for d in g2], off

    K, grads, off = go(expr, 0)
    if off != theta.shape[1]:
        raise ValueError(f"theta has {theta.shape[1]} params, expr needs {off}")
    return (K, grads) if want_grads else K


def grids(x1, x2) -> tuple:
    """Precompute the (TAU, XX) grids shared by every kernel evaluation."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return x1[:, None] - x2[None, :], x1[:, None] * x2[None, :]


# -- structural mutations -----------------------------------------------------

MUTATION_OPS = ("AddBase", "MulBase", "ReplaceBase")


def mutate(expr, op: str, pos: int, kind: str):
    """Apply one structural edit at a preorder position.

    AddBase / MulBase wrap any subtree with Sum/Product against a fresh
    base kernel; ReplaceBase only targets leaves.
    """
    if kind not in KIND_PARAMS:
        raise ValueError(f"unknown base kernel {kind!r}")
    nodes = subtrees(expr)
    if not 0 <= pos < len(nodes):
        raise IndexError(f"no subtree at position {pos}")
    target = nodes[pos]
    if op == "AddBase":
        return replace_subtree(expr, pos, Sum(target, Base(kind)))
    if op == "MulBase":
        return replace_subtree(expr, pos, Product(target, Base(kind)))
    if op == "ReplaceBase":
        if not isinstance(target, Base):
            raise ValueError("ReplaceBase targets leaf positions only")
        return replace_subtree(expr, pos, Base(kind))
    raise ValueError(f"unknown mutation op {op!r}")


def enumerate_mutations(expr, kinds) -> list:
    """All single-edit neighbors of expr, as (op, pos, kind, new_expr)."""
    out = []
    nodes = subtrees(expr)
    for pos, node in enumerate(nodes):
        for kind in kinds:
            out.append(("AddBase", pos, kind, mutate(expr, "AddBase", pos, kind)))
            out.append(("MulBase", pos, kind, mutate(expr, "MulBase", pos, kind)))
        if isinstance(node, Base):
            for kind in kinds:
                if kind != node.kind:
                    out.append(("ReplaceBase", pos, kind, mutate(expr, "ReplaceBase", pos, kind)))
    return out
