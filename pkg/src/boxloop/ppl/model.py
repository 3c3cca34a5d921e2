"""AST for the probabilistic-program DSL.

A program is a fixed-order block of declarations:

    model <name> {
      data <id> : real[<SIZE>]        # column bound to a dataset column
      param <id> ~ <Dist>(<args>)     # scalar prior
      param <id>[<SIZE>] ~ ...        # vector prior, one size symbol
      <id> = <expr>                   # deterministic
      <obs> ~ <Dist>(<args>)          # likelihood over a data column
    }

Expressions support + - * / ^, unary minus, exp, log, logistic,
parentheses, numbers and identifiers. Everything is immutable after
parse; evaluation lives in compile.py.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ModelError(Exception):
    """Semantic error (unknown distribution, undefined name, bad shape)."""

    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        super().__init__(f"{line}:{col}: {msg}" if line else msg)


# -- expressions --------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ref:
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str  # exp | log | logistic
    arg: object


# -- statements ---------------------------------------------------------------


@dataclass(frozen=True)
class DistCall:
    family: str
    args: tuple  # expression nodes
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DataDecl:
    name: str
    dtype: str  # "real" | "int"
    size: str  # size symbol, bound to the dataset length
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ParamDecl:
    name: str
    size: str | None  # None for scalars
    dist: DistCall
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DetDecl:
    name: str
    expr: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class LikStmt:
    observed: str  # must be a data column
    dist: DistCall
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ModelProgram:
    name: str
    data_decls: tuple
    param_decls: tuple
    det_decls: tuple
    lik_stmts: tuple
    source: str = field(repr=False, default="", compare=False)

    def data_names(self) -> tuple:
        return tuple(d.name for d in self.data_decls)

    def param_names(self) -> tuple:
        return tuple(p.name for p in self.param_decls)


def expr_refs(node) -> set:
    """Free identifiers of an expression node."""
    if isinstance(node, Ref):
        return {node.name}
    if isinstance(node, Neg):
        return expr_refs(node.arg)
    if isinstance(node, Bin):
        return expr_refs(node.left) | expr_refs(node.right)
    if isinstance(node, Call):
        return expr_refs(node.arg)
    return set()
