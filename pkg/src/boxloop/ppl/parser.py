"""Recursive-descent parser for the model DSL.

Grammar (statement order is fixed: data, param, deterministic/likelihood):

    program  := "model" IDENT "{" data* param* body* "}"
    data     := "data" IDENT ":" ("real" | "int") "[" IDENT "]"
    param    := "param" IDENT ("[" IDENT "]")? "~" dist
    body     := IDENT "=" expr          # deterministic
              | IDENT "~" dist          # likelihood (IDENT is a data column)
    dist     := IDENT "(" expr ("," expr)* ")"
    expr     := term (("+"|"-") term)*
    term     := unary (("*"|"/") unary)*
    unary    := "-" unary | power
    power    := atom ("^" unary)?       # right-associative
    atom     := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

Comments run from "#" to end of line. Every error carries line:col.
"""

from __future__ import annotations

import re

from .distributions import FAMILIES
from .model import (
    Bin,
    Call,
    DataDecl,
    DetDecl,
    DistCall,
    LikStmt,
    ModelError,
    ModelProgram,
    Neg,
    Num,
    ParamDecl,
    Ref,
    expr_refs,
)

_FUNCS = ("exp", "log", "logistic")
_KEYWORDS = ("model", "data", "param", "real", "int")

_TOKEN = re.compile(
    r"""(?P<ws>[ \t\r\n]+|\#[^\n]*)
      | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
      | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<sym>[{}()\[\]:,~=+\-*/^])
    """,
    re.VERBOSE,
)


class ModelParseError(ModelError):
    pass


def _tokenize(src: str):
    line, col, pos = 1, 1, 0
    out = []
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ModelParseError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group(0)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    out.append(("eof", "", line, col))
    return out


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg, tok=None):
        kind, text, line, col = tok or self.peek()
        shown = text or "end of input"
        raise ModelParseError(f"{msg} (found {shown!r})", line, col)

    def expect(self, text):
        kind, got, line, col = self.peek()
        if got != text:
            self.fail(f"expected {text!r}")
        return self.next()

    def ident(self, what="identifier"):
        kind, text, line, col = self.peek()
        if kind != "id":
            self.fail(f"expected {what}")
        return self.next()

    # -- expressions ----------------------------------------------------------

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.next()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.next()
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        kind, text, line, col = self.peek()
        if kind == "num":
            self.next()
            return Num(float(text))
        if kind == "id":
            self.next()
            if self.peek()[1] == "(":
                if text not in _FUNCS:
                    raise ModelParseError(
                        f"unknown function {text!r}; available: {', '.join(_FUNCS)}", line, col
                    )
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            return Ref(text, line, col)
        if text == "(":
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, identifier or '('")

    # -- statements -----------------------------------------------------------

    def dist(self):
        kind, fam, line, col = self.ident("distribution name")
        if fam not in FAMILIES:
            raise ModelParseError(
                f"unknown distribution {fam!r}; available: {', '.join(sorted(FAMILIES))}", line, col
            )
        self.expect("(")
        args = [self.expr()]
        while self.peek()[1] == ",":
            self.next()
            args.append(self.expr())
        self.expect(")")
        want = len(FAMILIES[fam].arg_names)
        if len(args) != want:
            raise ModelParseError(
                f"{fam} takes {want} argument(s) {FAMILIES[fam].arg_names}, got {len(args)}", line, col
            )
        return DistCall(fam, tuple(args), line, col)

    def program(self) -> ModelProgram:
        self.expect("model")
        _, name, _, _ = self.ident("model name")
        self.expect("{")

        data_decls = []
        while self.peek()[1] == "data":
            _, _, line, _ = self.next()
            _, dname, _, _ = self.ident("data column name")
            self.expect(":")
            kind, dtype, tl, tc = self.next()
            if dtype not in ("real", "int"):
                raise ModelParseError(f"data type must be real or int, got {dtype!r}", tl, tc)
            self.expect("[")
            _, size, _, _ = self.ident("size symbol")
            self.expect("]")
            data_decls.append(DataDecl(dname, dtype, size, line))

        param_decls = []
        while self.peek()[1] == "param":
            _, _, line, _ = self.next()
            _, pname, _, _ = self.ident("parameter name")
            size = None
            if self.peek()[1] == "[":
                self.next()
                _, size, _, _ = self.ident("size symbol")
                self.expect("]")
            self.expect("~")
            param_decls.append(ParamDecl(pname, size, self.dist(), line))

        det_decls, lik_stmts = [], []
        while self.peek()[1] not in ("}", ""):
            kind, text, line, col = self.peek()
            if text in ("data", "param"):
                raise ModelParseError(
                    f"{text} declarations must precede deterministic/likelihood statements", line, col
                )
            _, lhs, _, _ = self.ident("statement")
            nxt = self.peek()[1]
            if nxt == "=":
                if lik_stmts:
                    raise ModelParseError("deterministic statements must precede likelihoods", line, col)
                self.next()
                det_decls.append(DetDecl(lhs, self.expr(), line))
            elif nxt == "~":
                self.next()
                lik_stmts.append(LikStmt(lhs, self.dist(), line))
            else:
                self.fail("expected '=' or '~' after identifier")
        self.expect("}")
        if self.peek()[0] != "eof":
            self.fail("trailing input after closing '}'")

        prog = ModelProgram(name, tuple(data_decls), tuple(param_decls), tuple(det_decls), tuple(lik_stmts), self.src)
        _resolve(prog)
        return prog


def _resolve(prog: ModelProgram) -> None:
    """Check bindings: defined-before-use, shapes, likelihood targets."""
    sizes = {d.size for d in prog.data_decls}
    known: dict[str, str] = {}  # name -> "data"|"param"|"det"
    for d in prog.data_decls:
        if d.name in known:
            raise ModelError(f"duplicate name {d.name!r}", d.line)
        known[d.name] = "data"
    for p in prog.param_decls:
        if p.name in known:
            raise ModelError(f"duplicate name {p.name!r}", p.line)
        if p.size is not None and p.size not in sizes:
            raise ModelError(
                f"vector parameter {p.name!r} uses size symbol {p.size!r} not bound by any data declaration", p.line
            )
        fam = FAMILIES[p.dist.family]
        if fam.discrete:
            raise ModelError(
                f"{fam.name} is discrete and cannot be a prior (no discrete latent variables)", p.dist.line, p.dist.col
            )
        for arg in p.dist.args:
            for ref in sorted(expr_refs(arg)):
                if known.get(ref) != "param":
                    raise ModelError(
                        f"prior hyperparameter {ref!r} must be a previously declared parameter", p.dist.line
                    )
        known[p.name] = "param"
    for det in prog.det_decls:
        if det.name in known:
            raise ModelError(f"duplicate name {det.name!r}", det.line)
        for ref in sorted(expr_refs(det.expr)):
            if ref not in known:
                raise ModelError(f"undefined identifier {ref!r} in {det.name!r}", det.line)
        known[det.name] = "det"
    if not prog.lik_stmts:
        raise ModelError("a model needs at least one likelihood statement")
    for lik in prog.lik_stmts:
        if known.get(lik.observed) != "data":
            raise ModelError(f"observed name {lik.observed!r} is not a data column", lik.line)
        for arg in lik.dist.args:
            for ref in sorted(expr_refs(arg)):
                if ref not in known:
                    raise ModelError(f"undefined identifier {ref!r} in likelihood for {lik.observed!r}", lik.line)


def parse_model(src: str) -> ModelProgram:
    return _Parser(src).program()


# -- printer ------------------------------------------------------------------


def _print_expr(node, prec=0) -> str:
    # precedence levels: 0 sum, 1 product, 2 unary, 3 power, 4 atom
    if isinstance(node, Num):
        v = node.value
        return str(int(v)) if v == int(v) and abs(v) < 1e15 else repr(v)
    if isinstance(node, Ref):
        return node.name
    if isinstance(node, Neg):
        s = f"-{_print_expr(node.arg, 2)}"
        return f"({s})" if prec > 2 else s
    if isinstance(node, Call):
        return f"{node.fn}({_print_expr(node.arg)})"
    if isinstance(node, Bin):
        if node.op in ("+", "-"):
            lvl = 0
            s = f"{_print_expr(node.left, 0)} {node.op} {_print_expr(node.right, 1)}"
        elif node.op in ("*", "/"):
            lvl = 1
            s = f"{_print_expr(node.left, 1)} {node.op} {_print_expr(node.right, 2)}"
        else:
            lvl = 3
            s = f"{_print_expr(node.left, 4)}^{_print_expr(node.right, 3)}"
        return f"({s})" if prec > lvl else s
    raise TypeError(f"not an expression node: {node!r}")


def _print_dist(d: DistCall) -> str:
    return f"{d.family}({', '.join(_print_expr(a) for a in d.args)})"


def print_model(prog: ModelProgram) -> str:
    lines = [f"model {prog.name} {{"]
    for d in prog.data_decls:
        lines.append(f"  data {d.name} : {d.dtype}[{d.size}]")
    for p in prog.param_decls:
        shape = f"[{p.size}]" if p.size else ""
        lines.append(f"  param {p.name}{shape} ~ {_print_dist(p.dist)}")
    for det in prog.det_decls:
        lines.append(f"  {det.name} = {_print_expr(det.expr)}")
    for lik in prog.lik_stmts:
        lines.append(f"  {lik.observed} ~ {_print_dist(lik.dist)}")
    lines.append("}")
    return "\n".join(lines) + "\n"
