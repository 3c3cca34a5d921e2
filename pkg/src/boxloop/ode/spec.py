"""Text format for ODE models: states, named parameters, and MLP slots.

A model is a block of lines, order significant only for states:

    param alpha = 0.9
    param beta = 1.1
    mlp f(b, c) -> 1
    db/dt = alpha * b - beta * b * c
    dc/dt = -gamma * c + 0.1 * f[0]

States are declared implicitly by their ``d<name>/dt`` line; the state
vector follows the order those lines appear in. MLP slots declare their
input states and output arity; outputs are referenced as ``name[i]``.
This block format is also the wire format for proposal backends, so the
parser is strict: unknown symbols, unused MLP slots, and out-of-range
output indices are all rejected up front rather than at trace time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

__all__ = [
    "Bin",
    "Call",
    "MLPSlot",
    "Neg",
    "Num",
    "ODESpec",
    "ODESpecError",
    "Out",
    "Sym",
    "eval_expr",
    "expr_symbols",
    "parse_ode_spec",
    "print_ode_spec",
]

FUNCTIONS = ("exp", "log", "sin", "cos", "tanh", "sqrt")


class ODESpecError(ValueError):
    def __init__(self, msg: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line else msg)


# ---------------------------------------------------------------------------
# expression AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Out:
    """Indexed MLP output, e.g. f[0]."""

    name: str
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Num | Sym | Out | Neg | Bin | Call


@dataclass(frozen=True)
class MLPSlot:
    name: str
    inputs: tuple[str, ...]  # state names
    arity: int  # number of outputs


@dataclass(frozen=True)
class ODESpec:
    state_names: tuple[str, ...]
    rhs: dict[str, Expr]  # state name -> derivative expression
    params: dict[str, float]  # name -> initial value
    mlp_slots: tuple[MLPSlot, ...]
    source: str = field(default="", compare=False)

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    def slot(self, name: str) -> MLPSlot:
        for s in self.mlp_slots:
            if s.name == name:
                return s
        raise KeyError(name)


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s+|(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<sym>->|[()\[\],+\-*/^=])"
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")


def _tokenize(text: str, line: int) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ODESpecError(f"bad character {text[pos]!r}", line)
        pos = m.end()
        if m.lastgroup is not None:
            out.append((m.lastgroup, m.group()))
    out.append(("end", ""))
    return out


class _ExprParser:
    """Precedence: + - < * / < unary - < ^ (right associative)."""

    def __init__(self, tokens: list[tuple[str, str]], line: int):
        self.toks = tokens
        self.i = 0
        self.line = line

    def peek(self) -> tuple[str, str]:
        return self.toks[self.i]

    def next(self) -> tuple[str, str]:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> None:
        kind, val = self.next()
        if val != text:
            raise ODESpecError(f"expected {text!r}, got {val!r}", self.line)

    def parse(self) -> Expr:
        e = self.sum()
        if self.peek()[0] != "end":
            raise ODESpecError(f"trailing input {self.peek()[1]!r}", self.line)
        return e

    def sum(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            e = Bin(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.next()[1]
            e = Bin(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^":
            self.next()
            # right associative; exponent may carry its own unary minus
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, val = self.next()
        if kind == "num":
            return Num(float(val))
        if val == "(":
            e = self.sum()
            self.expect(")")
            return e
        if kind == "id":
            if self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    raise ODESpecError(f"unknown function {val!r}", self.line)
                self.next()
                arg = self.sum()
                self.expect(")")
                return Call(val, arg)
            if self.peek()[1] == "[":
                self.next()
                k, idx = self.next()
                if k != "num" or "." in idx or "e" in idx.lower():
                    raise ODESpecError("output index must be an integer", self.line)
                self.expect("]")
                return Out(val, int(idx))
            return Sym(val)
        raise ODESpecError(f"unexpected token {val!r}", self.line)


_PARAM_LINE = re.compile(r"param\s+([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(\S+)\s*$")
_MLP_LINE = re.compile(
    r"mlp\s+([A-Za-z_][A-Za-z_0-9]*)\s*\(([^)]*)\)\s*->\s*(\d+)\s*$"
)
_STATE_LINE = re.compile(r"d([A-Za-z_][A-Za-z_0-9]*)/dt\s*=\s*(.*)$")


def parse_ode_spec(text: str) -> ODESpec:
    """Parse the block format. Raises ODESpecError with a line number."""
    params: dict[str, float] = {}
    slots: list[MLPSlot] = []
    states: list[str] = []
    rhs_raw: list[tuple[str, str, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _PARAM_LINE.match(line)
        if m:
            name, init = m.group(1), m.group(2)
            if name in params:
                raise ODESpecError(f"duplicate param {name!r}", lineno)
            try:
                value = float(init)
            except ValueError:
                raise ODESpecError(f"bad initial value {init!r}", lineno) from None
            if not math.isfinite(value):
                raise ODESpecError(f"initial value {init!r} is not finite", lineno)
            params[name] = value
            continue
        m = _MLP_LINE.match(line)
        if m:
            name = m.group(1)
            if any(s.name == name for s in slots):
                raise ODESpecError(f"duplicate mlp {name!r}", lineno)
            inputs = tuple(s.strip() for s in m.group(2).split(",") if s.strip())
            if not inputs:
                raise ODESpecError(f"mlp {name!r} needs at least one input", lineno)
            for inp in inputs:
                if not _IDENT.match(inp):
                    raise ODESpecError(f"bad mlp input {inp!r}", lineno)
            arity = int(m.group(3))
            if arity < 1:
                raise ODESpecError(f"mlp {name!r} needs arity >= 1", lineno)
            slots.append(MLPSlot(name, inputs, arity))
            continue
        m = _STATE_LINE.match(line)
        if m:
            name = m.group(1)
            if name in states:
                raise ODESpecError(f"duplicate state {name!r}", lineno)
            states.append(name)
            rhs_raw.append((name, m.group(2), lineno))
            continue
        raise ODESpecError(f"cannot parse line {line!r}", lineno)

    if not states:
        raise ODESpecError("no state equations (need at least one d<state>/dt line)")

    rhs: dict[str, Expr] = {}
    for name, src, lineno in rhs_raw:
        rhs[name] = _ExprParser(_tokenize(src, lineno), lineno).parse()

    spec = ODESpec(
        state_names=tuple(states),
        rhs=rhs,
        params=dict(params),
        mlp_slots=tuple(slots),
        source=text,
    )
    _validate(spec, {name: lineno for name, _, lineno in rhs_raw})
    return spec


def _validate(spec: ODESpec, state_lines: dict[str, int]) -> None:
    names = set(spec.state_names)
    clashes = names & set(spec.params)
    if clashes:
        raise ODESpecError(f"name used as both state and param: {sorted(clashes)}")
    slot_names = {s.name for s in spec.mlp_slots}
    clashes = slot_names & (names | set(spec.params))
    if clashes:
        raise ODESpecError(f"mlp name clashes with state or param: {sorted(clashes)}")

    for slot in spec.mlp_slots:
        for inp in slot.inputs:
            if inp not in names:
                raise ODESpecError(
                    f"mlp {slot.name!r} input {inp!r} is not a state"
                )

    used_slots: set[str] = set()
    known = names | set(spec.params)
    for state, expr in spec.rhs.items():
        line = state_lines[state]
        for node in _walk(expr):
            if isinstance(node, Sym):
                if node.name in slot_names:
                    raise ODESpecError(
                        f"mlp {node.name!r} must be indexed, e.g. {node.name}[0]",
                        line,
                    )
                if node.name not in known:
                    raise ODESpecError(f"unknown symbol {node.name!r}", line)
            elif isinstance(node, Out):
                if node.name not in slot_names:
                    raise ODESpecError(f"unknown mlp {node.name!r}", line)
                slot = spec.slot(node.name)
                if not 0 <= node.index < slot.arity:
                    raise ODESpecError(
                        f"{node.name}[{node.index}] out of range "
                        f"(arity {slot.arity})",
                        line,
                    )
                used_slots.add(node.name)
    unused = slot_names - used_slots
    if unused:
        raise ODESpecError(f"mlp slot(s) never used: {sorted(unused)}")


def _walk(expr: Expr):
    yield expr
    if isinstance(expr, Neg):
        yield from _walk(expr.operand)
    elif isinstance(expr, Bin):
        yield from _walk(expr.left)
        yield from _walk(expr.right)
    elif isinstance(expr, Call):
        yield from _walk(expr.arg)


def expr_symbols(expr: Expr) -> set[str]:
    """All Sym names referenced (states and params, not MLP outputs)."""
    return {n.name for n in _walk(expr) if isinstance(n, Sym)}


# ---------------------------------------------------------------------------
# evaluation and printing


def eval_expr(expr: Expr, env: dict, mlp_out: dict, ops) -> object:
    """Evaluate with scalars from env and output vectors from mlp_out.

    ops supplies exp/log/sin/cos/tanh/sqrt/power so the same tree runs
    on floats or on traced arrays.
    """
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Sym):
        return env[expr.name]
    if isinstance(expr, Out):
        return mlp_out[expr.name][expr.index]
    if isinstance(expr, Neg):
        return -eval_expr(expr.operand, env, mlp_out, ops)
    if isinstance(expr, Call):
        return getattr(ops, expr.fn)(eval_expr(expr.arg, env, mlp_out, ops))
    if isinstance(expr, Bin):
        a = eval_expr(expr.left, env, mlp_out, ops)
        b = eval_expr(expr.right, env, mlp_out, ops)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if expr.op == "/":
            return a / b
        return ops.power(a, b)
    raise TypeError(f"unknown node {expr!r}")


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _print_expr(expr: Expr, parent: int = 0) -> str:
    if isinstance(expr, Num):
        v = expr.value
        return str(int(v)) if v == int(v) and abs(v) < 1e15 else repr(v)
    if isinstance(expr, Sym):
        return expr.name
    if isinstance(expr, Out):
        return f"{expr.name}[{expr.index}]"
    if isinstance(expr, Call):
        return f"{expr.fn}({_print_expr(expr.arg)})"
    if isinstance(expr, Neg):
        s = f"-{_print_expr(expr.operand, _PREC['neg'])}"
        return f"({s})" if parent > _PREC["neg"] else s
    assert isinstance(expr, Bin)
    prec = _PREC[expr.op]
    if expr.op == "^":
        # right associative, and the base slot only admits atoms
        s = f"{_print_expr(expr.left, prec + 1)}^{_print_expr(expr.right, prec)}"
    else:
        # left associative: same-precedence right children keep their parens
        left = _print_expr(expr.left, prec)
        right = _print_expr(expr.right, prec + 1)
        s = f"{left} {expr.op} {right}"
    return f"({s})" if prec < parent else s


def print_ode_spec(spec: ODESpec) -> str:
    """Canonical block form; parse(print(spec)) round-trips the AST."""
    lines = [f"param {name} = {value!r}" for name, value in spec.params.items()]
    for slot in spec.mlp_slots:
        lines.append(f"mlp {slot.name}({', '.join(slot.inputs)}) -> {slot.arity}")
    for state in spec.state_names:
        lines.append(f"d{state}/dt = {_print_expr(spec.rhs[state])}")
    return "\n".join(lines) + "\n"
