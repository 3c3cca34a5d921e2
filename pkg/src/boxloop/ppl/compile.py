"""Compile a parsed model against a dataset into differentiable densities.

One scalar tape holds the whole model: inputs are the flat unconstrained
parameter vector, output 0 is the log-joint (priors on the constrained
scale + bijection log-Jacobians + likelihood), outputs 1..m are the
per-observation likelihood terms. Values during graph construction are
either scalars (tape Var or float) or fixed-length lists of scalars;
broadcasting is scalar-with-vector elementwise, vector-with-vector
requires equal lengths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..datasets import Table
from ..tape import Tape, Var, exp, log, logistic
from . import transforms
from .distributions import FAMILIES
from .model import Bin, Call, DistCall, ModelError, ModelProgram, Neg, Num, Ref

_FUNCS = {"exp": exp, "log": log, "logistic": logistic}


def build_expr(node, env):
    """Evaluate an expression AST to a scalar (Var/float) or list of scalars."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Ref):
        try:
            return env[node.name]
        except KeyError:
            raise ModelError(f"undefined identifier {node.name!r}", node.line, node.col) from None
    if isinstance(node, Neg):
        v = build_expr(node.arg, env)
        return [-e for e in v] if isinstance(v, list) else -v
    if isinstance(node, Call):
        fn = _FUNCS[node.fn]
        v = build_expr(node.arg, env)
        return [fn(e) for e in v] if isinstance(v, list) else fn(v)
    if isinstance(node, Bin):
        left = build_expr(node.left, env)
        right = build_expr(node.right, env)
        return _zip_apply(node.op, left, right)
    raise TypeError(f"not an expression node: {node!r}")


def _apply_op(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return a**b


def _zip_apply(op, left, right):
    lv, rv = isinstance(left, list), isinstance(right, list)
    if lv and rv:
        if len(left) != len(right):
            raise ModelError(f"length mismatch {len(left)} vs {len(right)} in {op!r}")
        return [_apply_op(op, a, b) for a, b in zip(left, right)]
    if lv:
        return [_apply_op(op, a, right) for a in left]
    if rv:
        return [_apply_op(op, left, b) for b in right]
    return _apply_op(op, left, right)


def _broadcast(values, n):
    return values if isinstance(values, list) else [values] * n


def const_value(node) -> float:
    """Fold a constant expression; raises ModelError on any identifier."""
    v = build_expr(node, {})
    if isinstance(v, Var) or isinstance(v, list):
        raise ModelError("expected a constant expression")
    return float(v)


def _transform_for(dist: DistCall) -> transforms.Transform:
    fam = FAMILIES[dist.family]
    if fam.support == "interval":
        try:
            lo, hi = (const_value(a) for a in dist.args)
        except ModelError:
            raise ModelError(
                f"{fam.name} prior bounds must be constants (the sampler bijection needs fixed endpoints)",
                dist.line,
                dist.col,
            ) from None
        return transforms.interval(lo, hi)
    return transforms.for_support(fam.support)


@dataclass(frozen=True)
class ParamSlot:
    name: str
    start: int
    size: int | None  # None: scalar
    transform: transforms.Transform

    @property
    def width(self) -> int:
        return 1 if self.size is None else self.size


@dataclass
class CompiledModel:
    """Differentiable densities for one (program, dataset) pair."""

    program: ModelProgram
    slots: list
    n_obs: int
    n_pointwise: int
    columns: dict = field(repr=False)
    _tape: Tape = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return sum(s.width for s in self.slots)

    @property
    def flat_names(self) -> list:
        out = []
        for s in self.slots:
            if s.size is None:
                out.append(s.name)
            else:
                out.extend(f"{s.name}[{i}]" for i in range(s.size))
        return out

    def log_joint(self, u) -> float:
        return self._tape.compiled().value([float(v) for v in u])

    def log_joint_grad(self, u):
        val, g = self._tape.compiled().value_and_grad([float(v) for v in u])
        return val, np.asarray(g)

    def pointwise_loglik(self, u) -> np.ndarray:
        outs = self._tape.compiled().values_all([float(v) for v in u])
        return np.asarray(outs[1:])

    def constrain(self, u) -> dict:
        u = np.asarray(u, float)
        out = {}
        for s in self.slots:
            if s.size is None:
                out[s.name] = float(s.transform.forward(float(u[s.start])))
            else:
                out[s.name] = np.array([s.transform.forward(float(v)) for v in u[s.start : s.start + s.size]])
        return out

    def constrain_flat(self, u) -> np.ndarray:
        out = np.empty(self.dim)
        for s in self.slots:
            for j in range(s.start, s.start + s.width):
                out[j] = s.transform.forward(float(u[j]))
        return out

    def unconstrain(self, values: dict) -> np.ndarray:
        u = np.empty(self.dim)
        for s in self.slots:
            v = values[s.name]
            if s.size is None:
                u[s.start] = s.transform.inverse(float(v))
            else:
                v = np.asarray(v, float)
                if v.shape != (s.size,):
                    raise ModelError(f"{s.name} expects shape ({s.size},), got {v.shape}")
                u[s.start : s.start + s.size] = [s.transform.inverse(float(e)) for e in v]
        return u


def compile_model(program: ModelProgram, dataset: Table) -> CompiledModel:
    columns, n = _bind_columns(program, dataset)

    slots = []
    offset = 0
    for p in program.param_decls:
        size = n if p.size is not None else None
        slots.append(ParamSlot(p.name, offset, size, _transform_for(p.dist)))
        offset += 1 if size is None else size

    tape = Tape()
    env: dict = {name: [float(v) for v in col] for name, col in columns.items()}

    log_joint_terms = []
    for p, slot in zip(program.param_decls, slots):
        args = [build_expr(a, env) for a in p.dist.args]
        logpdf = FAMILIES[p.dist.family].logpdf
        if slot.size is None:
            u = tape.input(p.name)
            x = slot.transform.forward(u)
            log_joint_terms.append(logpdf(x, *args) + slot.transform.log_jac(u))
            env[p.name] = x
        else:
            xs = []
            arg_vecs = [_broadcast(a, slot.size) for a in args]
            for i in range(slot.size):
                u = tape.input(f"{p.name}[{i}]")
                x = slot.transform.forward(u)
                xs.append(x)
                log_joint_terms.append(logpdf(x, *(av[i] for av in arg_vecs)) + slot.transform.log_jac(u))
            env[p.name] = xs

    for det in program.det_decls:
        env[det.name] = build_expr(det.expr, env)

    pointwise = []
    for lik in program.lik_stmts:
        ys = env[lik.observed]
        args = [_broadcast(build_expr(a, env), n) for a in lik.dist.args]
        logpdf = FAMILIES[lik.dist.family].logpdf
        for i in range(n):
            pointwise.append(logpdf(ys[i], *(a[i] for a in args)))

    total = 0.0
    for t in log_joint_terms:
        total = total + t
    for t in pointwise:
        total = total + t

    tape.mark_output(_lift(tape, total))
    for t in pointwise:
        tape.mark_output(_lift(tape, t))

    return CompiledModel(
        program=program,
        slots=slots,
        n_obs=n,
        n_pointwise=len(pointwise),
        columns=columns,
        _tape=tape,
    )


def _lift(tape: Tape, v) -> Var:
    return v if isinstance(v, Var) else tape.const(float(v))


def _bind_columns(program: ModelProgram, dataset: Table):
    columns = {}
    n = dataset.n_rows
    for d in program.data_decls:
        try:
            col = np.asarray(dataset.column(d.name), float)
        except KeyError:
            raise ModelError(
                f"dataset has no column {d.name!r} (columns: {', '.join(dataset.columns)})", d.line
            ) from None
        if len(col) != n:
            raise ModelError(f"column {d.name!r} has length {len(col)}, expected {n}", d.line)
        if d.dtype == "int" and not np.all(col == np.round(col)):
            raise ModelError(f"column {d.name!r} declared int but holds non-integers", d.line)
        columns[d.name] = col
    return columns, n
