"""Text form of kernel expressions.

Grammar (whitespace-insensitive):

    expr := term ("+" term)*
    term := atom ("*" atom)*
    atom := KIND | "(" expr ")"

"*" binds tighter than "+", so ``Linear + Periodic * ExpQuad`` parses as
Sum(Linear, Product(Periodic, ExpQuad)). Parameters never appear in the
text form; parsed leaves carry default (log 0) values and printing drops
whatever the optimizer found. The loop exchanges structure, not numbers.
"""

from __future__ import annotations

import re

from .kernels import KIND_PARAMS, Base, Product, Sum


class KernelParseError(ValueError):
    pass


_TOKEN = re.compile(r"\s*([A-Za-z][A-Za-z0-9]*|\+|\*|\(|\))")


def _tokenize(text: str) -> list:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise KernelParseError(f"unexpected character {text[pos]!r} at offset {pos}")
        out.append((m.group(1), m.start(1)))
        pos = m.end()
    return out


def parse_kernel(text: str):
    tokens = _tokenize(text)
    if not tokens:
        raise KernelParseError("empty kernel expression")
    pos = [0]

    def peek():
        return tokens[pos[0]][0] if pos[0] < len(tokens) else None

    def take():
        tok = tokens[pos[0]]
        pos[0] += 1
        return tok

    def atom():
        tok = peek()
        if tok == "(":
            take()
            node = expr()
            if peek() != ")":
                raise KernelParseError("expected closing parenthesis")
            take()
            return node
        if tok is None or tok in "+*)":
            raise KernelParseError(f"expected kernel name, got {tok!r}")
        name, off = take()
        if name not in KIND_PARAMS:
            raise KernelParseError(f"unknown kernel {name!r} at offset {off}")
        return Base(name)

    def term():
        node = atom()
        while peek() == "*":
            take()
            node = Product(node, atom())
        return node

    def expr():
        node = term()
        while peek() == "+":
            take()
            node = Sum(node, term())
        return node

    node = expr()
    if pos[0] != len(tokens):
        raise KernelParseError(f"trailing input starting at {tokens[pos[0]][0]!r}")
    return node


def print_kernel(expr) -> str:
    """Canonical text: parentheses only where precedence demands them."""
    if isinstance(expr, Base):
        return expr.kind
    if isinstance(expr, Sum):
        return f"{print_kernel(expr.left)} + {print_kernel(expr.right)}"
    if isinstance(expr, Product):
        parts = []
        for side in (expr.left, expr.right):
            text = print_kernel(side)
            parts.append(f"({text})" if isinstance(side, Sum) else text)
        return " * ".join(parts)
    raise TypeError(f"not a kernel expression: {expr!r}")
