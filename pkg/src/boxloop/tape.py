"""Tape-based reverse-mode automatic differentiation on scalars.

A Tape is an append-only Wengert list of primitive ops. Graphs are built
once (model compile time) and evaluated many times (optimizer / sampler
inner loops), so evaluation never mutates the tape: interpreted evaluation
uses private scratch buffers, and ``compile_tape`` generates a straight-line
Python function from the node list for hot loops.

Domain errors (log of a nonpositive number, overflow, division by zero)
produce NaN results and NaN gradients rather than raising. The primitive
set is closed; extending it means editing _PARTIALS here, deliberately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.special import digamma as _digamma

_ERRS = (ValueError, OverflowError, ZeroDivisionError)
_NAN = float("nan")

# op -> arity. 'in' and 'const' are leaves carrying aux data.
PRIMITIVES = {
    "in": 0,
    "const": 0,
    "add": 2,
    "sub": 2,
    "mul": 2,
    "div": 2,
    "pow": 2,
    "neg": 1,
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "sin": 1,
    "cos": 1,
    "tanh": 1,
    "logistic": 1,
    "lgamma": 1,
}


def _logistic(x: float) -> float:
    # branch keeps exp() in the underflow-safe direction for large |x|
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


_UNARY_FNS = {
    "neg": lambda x: -x,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "sin": math.sin,
    "cos": math.cos,
    "tanh": math.tanh,
    "logistic": _logistic,
    "lgamma": math.lgamma,
}

_BINARY_FNS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "pow": math.pow,
}


@dataclass(frozen=True)
class Var:
    """Handle to a tape node; supports arithmetic to append new nodes."""

    tape: "Tape"
    idx: int

    def _lift(self, other) -> "Var":
        if isinstance(other, Var):
            if other.tape is not self.tape:
                raise ValueError("cannot mix Vars from different tapes")
            return other
        return self.tape.const(float(other))

    def __add__(self, other):
        return self.tape._emit("add", self, self._lift(other))

    def __radd__(self, other):
        return self._lift(other).__add__(self)

    def __sub__(self, other):
        return self.tape._emit("sub", self, self._lift(other))

    def __rsub__(self, other):
        return self._lift(other).__sub__(self)

    def __mul__(self, other):
        return self.tape._emit("mul", self, self._lift(other))

    def __rmul__(self, other):
        return self._lift(other).__mul__(self)

    def __truediv__(self, other):
        return self.tape._emit("div", self, self._lift(other))

    def __rtruediv__(self, other):
        return self._lift(other).__truediv__(self)

    def __pow__(self, other):
        return self.tape._emit("pow", self, self._lift(other))

    def __rpow__(self, other):
        return self._lift(other).__pow__(self)

    def __neg__(self):
        return self.tape._emit("neg", self, None)


class Tape:
    """Append-only list of scalar primitives in topological order."""

    def __init__(self) -> None:
        # node i: (op, a, b) with operand indices; aux[i] holds the input
        # slot for 'in' nodes and the literal value for 'const' nodes.
        self.nodes: list[tuple[str, int, int]] = []
        self.aux: list[float] = []
        self.n_inputs = 0
        self.input_names: list[str] = []
        self.outputs: list[int] = []
        self._const_cache: dict[float, int] = {}
        self._compiled = None

    def __len__(self) -> int:
        return len(self.nodes)

    def input(self, name: str = "") -> Var:
        slot = self.n_inputs
        self.n_inputs += 1
        self.input_names.append(name or f"x{slot}")
        self.nodes.append(("in", -1, -1))
        self.aux.append(float(slot))
        return Var(self, len(self.nodes) - 1)

    def const(self, value: float) -> Var:
        value = float(value)
        hit = self._const_cache.get(value)
        if hit is not None:
            return Var(self, hit)
        self.nodes.append(("const", -1, -1))
        self.aux.append(value)
        idx = len(self.nodes) - 1
        if value == value:  # NaN never caches
            self._const_cache[value] = idx
        return Var(self, idx)

    def _emit(self, op: str, a: Var, b: Var | None) -> Var:
        if op not in PRIMITIVES:
            raise ValueError(f"unknown primitive {op!r}; the op set is closed")
        self._compiled = None
        self.nodes.append((op, a.idx, b.idx if b is not None else -1))
        self.aux.append(0.0)
        return Var(self, len(self.nodes) - 1)

    def mark_output(self, var: Var) -> None:
        if var.tape is not self:
            raise ValueError("output Var belongs to a different tape")
        self.outputs.append(var.idx)

    def compiled(self) -> "CompiledTape":
        if self._compiled is None:
            self._compiled = compile_tape(self)
        return self._compiled


def _apply(op: str, va: float, vb: float, aux: float) -> float:
    try:
        if op in _UNARY_FNS:
            return _UNARY_FNS[op](va)
        if op in _BINARY_FNS:
            return _BINARY_FNS[op](va, vb)
    except _ERRS:
        return _NAN
    raise ValueError(f"unknown primitive {op!r}; the op set is closed")


def _forward(tape: Tape, inputs) -> list[float]:
    if len(inputs) != tape.n_inputs:
        raise ValueError(f"expected {tape.n_inputs} inputs, got {len(inputs)}")
    vals = [0.0] * len(tape.nodes)
    nodes, aux = tape.nodes, tape.aux
    for i, (op, a, b) in enumerate(nodes):
        if op == "in":
            vals[i] = float(inputs[int(aux[i])])
        elif op == "const":
            vals[i] = aux[i]
        else:
            vals[i] = _apply(op, vals[a], vals[b] if b >= 0 else 0.0, aux[i])
    return vals


def evaluate(tape: Tape, inputs) -> float:
    """Value of the tape's first marked output."""
    if not tape.outputs:
        raise ValueError("tape has no marked output")
    return _forward(tape, inputs)[tape.outputs[0]]


def evaluate_all(tape: Tape, inputs) -> list[float]:
    """Values of every marked output (used for pointwise likelihoods)."""
    if not tape.outputs:
        raise ValueError("tape has no marked output")
    vals = _forward(tape, inputs)
    return [vals[i] for i in tape.outputs]


def _partials(op: str, va: float, vb: float, v: float) -> tuple:
    if op == "add":
        return 1.0, 1.0
    if op == "sub":
        return 1.0, -1.0
    if op == "mul":
        return vb, va
    if op == "div":
        return 1.0 / vb, -v / vb
    if op == "pow":
        return vb * math.pow(va, vb - 1.0), v * math.log(va)
    if op == "neg":
        return (-1.0,)
    if op == "exp":
        return (v,)
    if op == "log":
        return (1.0 / va,)
    if op == "sqrt":
        return (0.5 / v,)
    if op == "sin":
        return (math.cos(va),)
    if op == "cos":
        return (-math.sin(va),)
    if op == "tanh":
        return (1.0 - v * v,)
    if op == "logistic":
        return (v * (1.0 - v),)
    if op == "lgamma":
        return (float(_digamma(va)),)
    raise ValueError(f"unknown primitive {op!r}; the op set is closed")


def gradient(tape: Tape, inputs) -> tuple[float, list[float]]:
    """(value, d value / d input_i) for the first marked output.

    Reverse sweep over the node list. A NaN forward value or a domain
    error in any partial yields NaN gradients, not an exception.
    """
    if not tape.outputs:
        raise ValueError("tape has no marked output")
    vals = _forward(tape, inputs)
    out = tape.outputs[0]
    value = vals[out]
    grads = [0.0] * tape.n_inputs
    if value != value:  # NaN
        return value, [_NAN] * tape.n_inputs
    adj = [0.0] * len(tape.nodes)
    adj[out] = 1.0
    nodes, aux = tape.nodes, tape.aux
    try:
        for i in range(out, -1, -1):
            a_i = adj[i]
            if a_i == 0.0:
                continue
            op, a, b = nodes[i]
            if op == "in":
                grads[int(aux[i])] += a_i
                continue
            if op == "const":
                continue
            va = vals[a]
            vb = vals[b] if b >= 0 else 0.0
            if op == "pow" and nodes[b][0] == "const":
                # constant exponent: skip the v*log(base) partial so that
                # x**2 stays differentiable for x <= 0
                adj[a] += a_i * vb * math.pow(va, vb - 1.0)
                continue
            parts = _partials(op, va, vb, vals[i])
            adj[a] += a_i * parts[0]
            if len(parts) > 1:
                adj[b] += a_i * parts[1]
    except _ERRS:
        return value, [_NAN] * tape.n_inputs
    return value, grads


# -- compilation to straight-line Python ------------------------------------
#
# HMC and the model scorers call value_and_grad thousands of times per fit;
# interpreting the node list is ~10x slower than exec'ing generated code.

_FWD_EXPR = {
    "add": "v{a} + v{b}",
    "sub": "v{a} - v{b}",
    "mul": "v{a} * v{b}",
    "div": "v{a} / v{b}",
    "pow": "_pow(v{a}, v{b})",
    "neg": "-v{a}",
    "exp": "_exp(v{a})",
    "log": "_log(v{a})",
    "sqrt": "_sqrt(v{a})",
    "sin": "_sin(v{a})",
    "cos": "_cos(v{a})",
    "tanh": "_tanh(v{a})",
    "logistic": "_sigm(v{a})",
    "lgamma": "_lgam(v{a})",
}

_GLOBALS = {
    "_exp": math.exp,
    "_log": math.log,
    "_sqrt": math.sqrt,
    "_sin": math.sin,
    "_cos": math.cos,
    "_tanh": math.tanh,
    "_pow": math.pow,
    "_sigm": _logistic,
    "_lgam": math.lgamma,
    "_digam": lambda x: float(_digamma(x)),
    "_ERRS": _ERRS,
    "_nan": _NAN,
}


@dataclass
class CompiledTape:
    """exec-compiled twin of a Tape; same NaN semantics as the interpreter."""

    n_inputs: int
    n_outputs: int
    value: callable = field(repr=False)
    value_and_grad: callable = field(repr=False)
    values_all: callable = field(repr=False)


def _emit_forward(tape: Tape, lines: list[str]) -> None:
    for i, (op, a, b) in enumerate(tape.nodes):
        if op == "in":
            lines.append(f"    v{i} = x[{int(tape.aux[i])}]")
        elif op == "const":
            lines.append(f"    v{i} = {tape.aux[i]!r}")
        else:
            lines.append("    v{i} = ".format(i=i) + _FWD_EXPR[op].format(a=a, b=b))


def _adj_terms(tape: Tape, i: int) -> list[tuple[int, str]]:
    """(operand index, partial expression) pairs for node i's adjoint."""
    op, a, b = tape.nodes[i]
    if op == "add":
        return [(a, "1.0"), (b, "1.0")]
    if op == "sub":
        return [(a, "1.0"), (b, "-1.0")]
    if op == "mul":
        return [(a, f"v{b}"), (b, f"v{a}")]
    if op == "div":
        return [(a, f"(1.0 / v{b})"), (b, f"(-v{i} / v{b})")]
    if op == "pow":
        terms = [(a, f"(v{b} * _pow(v{a}, v{b} - 1.0))")]
        if tape.nodes[b][0] != "const":
            terms.append((b, f"(v{i} * _log(v{a}))"))
        return terms
    if op == "neg":
        return [(a, "-1.0")]
    if op == "exp":
        return [(a, f"v{i}")]
    if op == "log":
        return [(a, f"(1.0 / v{a})")]
    if op == "sqrt":
        return [(a, f"(0.5 / v{i})")]
    if op == "sin":
        return [(a, f"_cos(v{a})")]
    if op == "cos":
        return [(a, f"(-_sin(v{a}))")]
    if op == "tanh":
        return [(a, f"(1.0 - v{i} * v{i})")]
    if op == "logistic":
        return [(a, f"(v{i} * (1.0 - v{i}))")]
    if op == "lgamma":
        return [(a, f"_digam(v{a})")]
    raise ValueError(f"unknown primitive {op!r}; the op set is closed")


def compile_tape(tape: Tape) -> CompiledTape:
    if not tape.outputs:
        raise ValueError("tape has no marked output")
    for op, _, _ in tape.nodes:
        if op not in PRIMITIVES:
            raise ValueError(f"unknown primitive {op!r}; the op set is closed")
    out = tape.outputs[0]
    n_in = tape.n_inputs

    fwd: list[str] = []
    _emit_forward(tape, fwd)
    out_tuple = ", ".join(f"v{i}" for i in tape.outputs)

    # value(x)
    src = ["def _value(x):", " try:"]
    src += fwd
    src.append(f"    return v{out}")
    src.append(" except _ERRS:")
    src.append("    return _nan")

    # values_all(x)
    src.append("def _values_all(x):")
    src.append(" try:")
    src += fwd
    src.append(f"    return [{out_tuple}]")
    src.append(" except _ERRS:")
    src.append(f"    return [_nan] * {len(tape.outputs)}")

    # value_and_grad(x): forward, then reverse accumulation into g[]
    src.append("def _vag(x):")
    src.append(" try:")
    src += fwd
    src.append(" except _ERRS:")
    src.append(f"    return _nan, [_nan] * {n_in}")
    src.append(f" if v{out} != v{out}:")
    src.append(f"    return v{out}, [_nan] * {n_in}")
    src.append(f" g = [0.0] * {n_in}")
    src.append(" try:")

    # live[i] is True once node i has an initialized adjoint variable a{i}
    live = [False] * len(tape.nodes)
    live[out] = True
    body: list[str] = [f"    a{out} = 1.0"]
    for i in range(out, -1, -1):
        if not live[i]:
            continue
        op, _, _ = tape.nodes[i]
        if op == "const":
            continue
        if op == "in":
            body.append(f"    g[{int(tape.aux[i])}] += a{i}")
            continue
        for operand, part in _adj_terms(tape, i):
            if tape.nodes[operand][0] == "const":
                continue
            term = f"a{i} * {part}" if part != "1.0" else f"a{i}"
            if live[operand]:
                body.append(f"    a{operand} += {term}")
            else:
                body.append(f"    a{operand} = {term}")
                live[operand] = True
    src += body
    src.append(" except _ERRS:")
    src.append(f"    return v{out}, [_nan] * {n_in}")
    src.append(" return v{out}, g".format(out=out))

    ns: dict = dict(_GLOBALS)
    exec(compile("\n".join(src), "<boxloop.tape>", "exec"), ns)
    return CompiledTape(
        n_inputs=n_in,
        n_outputs=len(tape.outputs),
        value=ns["_value"],
        value_and_grad=ns["_vag"],
        values_all=ns["_values_all"],
    )


# -- Var-or-float math, mirrors the primitive set ----------------------------


def _unary(op: str, x, pyfn):
    if isinstance(x, Var):
        return x.tape._emit(op, x, None)
    try:
        return pyfn(float(x))
    except _ERRS:
        return _NAN


def exp(x):
    return _unary("exp", x, math.exp)


def log(x):
    return _unary("log", x, math.log)


def sqrt(x):
    return _unary("sqrt", x, math.sqrt)


def sin(x):
    return _unary("sin", x, math.sin)


def cos(x):
    return _unary("cos", x, math.cos)


def tanh(x):
    return _unary("tanh", x, math.tanh)


def logistic(x):
    return _unary("logistic", x, _logistic)


def lgamma(x):
    return _unary("lgamma", x, math.lgamma)


def trace(fn, n_inputs: int, names: list[str] | None = None) -> Tape:
    """Build a tape by calling fn on fresh input Vars and marking its result."""
    tape = Tape()
    xs = [tape.input(names[i] if names else "") for i in range(n_inputs)]
    out = fn(*xs)
    outs = out if isinstance(out, (tuple, list)) else [out]
    for o in outs:
        if not isinstance(o, Var):
            o = tape.const(o)
        tape.mark_output(o)
    return tape
