"""Arithmetic expressions in x1..x4 and t, used for metrics, maps and fields in config files.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' exponent)?
    exponent:= ['-'] INT | '(' ['-'] INT ')'
    atom    := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'

so ``-x1^2`` parses as ``Neg(Pow(x1, 2))``.  Exponents are integer literals
in [-9, 9].  Evaluation is generic over the scalar types of
:mod:`dedonder.scalar_taylor`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import scalar_taylor as st

VARIABLES = ("x1", "x2", "x3", "x4", "t")
FUNCTIONS = ("sqrt", "exp", "ln", "sin", "cos")
MAX_EXPONENT = 9


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class UnboundVariableError(ExprError, KeyError):
    def __str__(self) -> str:
        return ExprError.__str__(self)


# -- AST -------------------------------------------------------------------

class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class Func(Node):
    name: str
    arg: Node


@dataclass(frozen=True)
class Add(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Sub(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Mul(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Div(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div}
_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


# -- parser ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = tuple(variables)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", off, self.text)

    def error(self, message: str):
        raise ExprSyntaxError(message, self.peek()[2], self.text)

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _BINARY[op](node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _BINARY[op](node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        paren = self.peek()[1] == "("
        if paren:
            self.take()
        sign = 1
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        kind, val, off = self.take()
        if kind != "num" or not val.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", off, self.text)
        n = sign * int(val)
        if abs(n) > MAX_EXPONENT:
            raise ExprSyntaxError(f"exponent {n} outside [-{MAX_EXPONENT}, {MAX_EXPONENT}]",
                                  off, self.text)
        if paren:
            self.expect(")")
        return n

    def atom(self) -> Node:
        kind, val, off = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "id":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(val, arg)
            if val in self.variables:
                return Var(val)
            raise UnknownIdentifierError(f"unknown identifier {val!r}", off, self.text)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {found}", off, self.text)


def parse(text: str, variables: Sequence[str] = VARIABLES) -> Node:
    """Parse ``text`` into an immutable AST; raises :class:`ExprSyntaxError`."""
    return _Parser(text, variables).parse()


# -- printer ---------------------------------------------------------------

def to_text(node: Node) -> str:
    """Canonical fully parenthesized form; ``parse(to_text(a)) == a`` for parsed ASTs."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, Func):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Pow):
        return f"({to_text(node.base)}^({node.exponent}))"
    return f"({to_text(node.left)} {_SYMBOL[type(node)]} {to_text(node.right)})"


def variables_of(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Const):
        return set()
    if isinstance(node, (Neg, Func)):
        return variables_of(node.arg)
    if isinstance(node, Pow):
        return variables_of(node.base)
    return variables_of(node.left) | variables_of(node.right)


# -- evaluation ------------------------------------------------------------

_FUNC_IMPL = {"sqrt": st.sqrt, "exp": st.exp, "ln": st.log, "sin": st.sin, "cos": st.cos}


def eval_generic(node: Node, env: Mapping[str, object]):
    """Evaluate over floats, AlgArrays or any mix of them."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundVariableError(f"variable {node.name!r} is not bound") from None
    if isinstance(node, Neg):
        return -eval_generic(node.arg, env)
    if isinstance(node, Func):
        return _FUNC_IMPL[node.name](eval_generic(node.arg, env))
    if isinstance(node, Pow):
        return st.ipow(eval_generic(node.base, env), node.exponent)
    a = eval_generic(node.left, env)
    b = eval_generic(node.right, env)
    if isinstance(node, Add):
        return a + b
    if isinstance(node, Sub):
        return a - b
    if isinstance(node, Mul):
        return a * b
    return st.div(a, b)


def coordinate_env(x, names: Sequence[str] = ("x1", "x2", "x3", "x4")) -> dict:
    """Bind x1..x4 to the entries of a length-4 coordinate array."""
    return {name: x[i] for i, name in enumerate(names)}
