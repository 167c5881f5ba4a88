"""Expression trees: parsing, evaluation and symbolic differentiation.

Grammar (usual precedence, ``^`` right-associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?
    atom   := number | name | name '(' expr ')' | '(' expr ')'

Names are the declared variables, the constants ``pi`` and ``e``, and the
functions ``sin cos exp ln abs``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from ..errors import ExprSyntaxError, UnknownIdentifier


class Node:
    __slots__ = ()


@dataclass(frozen=True, eq=False)
class Const(Node):
    value: float


@dataclass(frozen=True, eq=False)
class Var(Node):
    name: str


@dataclass(frozen=True, eq=False)
class Neg(Node):
    a: Node


@dataclass(frozen=True, eq=False)
class Bin(Node):
    op: str  # one of + - * / ^
    a: Node
    b: Node


@dataclass(frozen=True, eq=False)
class Call(Node):
    name: str
    arg: Node


@dataclass(frozen=True, eq=False)
class Apply(Node):
    """An opaque function applied to an affine argument: fn(scale*x + shift)."""

    fn: Any
    scale: float
    shift: float


FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "abs": np.abs,
}
# not reachable from the grammar; produced by differentiating abs
_INTERNAL = {"sign": np.sign}
CONSTANTS = {"pi": math.pi, "e": math.e}


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            col = pos + 1 + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[col - 1]!r}", col, src)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", len(src) + 1))
    return toks


class _Parser:
    def __init__(self, src: str, variables: Sequence[str]):
        self.src = src
        self.vars = tuple(variables)
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _fail(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise ExprSyntaxError(msg, tok.col, self.src)

    def _eat(self, text: str) -> None:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            self._fail(f"expected {text!r}, found {found!r}")
        self.i += 1

    def parse(self) -> Node:
        if self.tok.kind == "end":
            self._fail("empty expression")
        node = self.expr()
        if self.tok.kind != "end":
            self._fail(f"unexpected {self.tok.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.tok.text
            self.i += 1
            node = Bin(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.text == "-":
            self.i += 1
            return Neg(self.unary())
        if self.tok.text == "+":
            self.i += 1
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.text == "^":
            self.i += 1
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "name":
            self.i += 1
            name = tok.text
            if name in FUNCTIONS:
                if self.tok.text != "(":
                    self._fail(f"function {name!r} needs an argument in parentheses")
                self.i += 1
                arg = self.expr()
                self._eat(")")
                return Call(name, arg)
            if self.tok.text == "(":
                if name in self.vars or name in CONSTANTS:
                    self._fail(f"{name!r} is not a function", tok)
                raise UnknownIdentifier(f"unknown function {name!r}", tok.col, self.src)
            if name in self.vars:
                return Var(name)
            if name in CONSTANTS:
                return Const(CONSTANTS[name])
            raise UnknownIdentifier(f"unknown identifier {name!r}", tok.col, self.src)
        if tok.text == "(":
            self.i += 1
            node = self.expr()
            self._eat(")")
            return node
        self._fail(f"unexpected {tok.text or 'end of input'!r}")


def parse(src: str, variables: Sequence[str] = ("x",)) -> Node:
    """Parse ``src`` into an expression tree over ``variables``."""
    return _Parser(src, variables).parse()


# ------------------------------------------------------------- evaluation

def evaluate(node: Node, env: dict[str, np.ndarray]) -> np.ndarray:
    if isinstance(node, Const):
        return np.float64(node.value)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -evaluate(node.a, env)
    if isinstance(node, Bin):
        a = evaluate(node.a, env)
        b = evaluate(node.b, env)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            with np.errstate(divide="ignore", invalid="ignore"):
                return a / b
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            if isinstance(node.b, Const) and float(node.b.value).is_integer():
                return a ** int(node.b.value) if node.b.value >= 0 else np.power(a, node.b.value)
            return np.power(a, b)
    if isinstance(node, Call):
        fn = FUNCTIONS.get(node.name) or _INTERNAL[node.name]
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            return fn(evaluate(node.arg, env))
    if isinstance(node, Apply):
        x = env["x"]
        arg = x if (node.scale == 1.0 and node.shift == 0.0) else node.scale * x + node.shift
        return node.fn._eval(np.asarray(arg, dtype=float))
    raise TypeError(f"unknown node {node!r}")


# ------------------------------------------------- construction helpers

ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(n: Node, v: float | None = None) -> bool:
    return isinstance(n, Const) and (v is None or n.value == v)


def add(a: Node, b: Node) -> Node:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Bin("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Bin("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Bin("*", a, b)


def div(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    return Bin("/", a, b)


def power(a: Node, b: Node) -> Node:
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return ONE
    return Bin("^", a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def call(name: str, a: Node) -> Node:
    if isinstance(a, Const):
        fn = FUNCTIONS.get(name) or _INTERNAL[name]
        return Const(float(fn(np.float64(a.value))))
    return Call(name, a)


# -------------------------------------------------------- differentiation

def diff(node: Node, var: str = "x") -> Node:
    """Symbolic derivative with light constant folding."""
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.name == var else ZERO
    if isinstance(node, Neg):
        return neg(diff(node.a, var))
    if isinstance(node, Bin):
        a, b = node.a, node.b
        da, db = diff(a, var), diff(b, var)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, b), mul(a, db))
        if node.op == "/":
            return div(sub(mul(da, b), mul(a, db)), mul(b, b))
        # power
        if isinstance(b, Const):
            return mul(mul(Const(b.value), power(a, Const(b.value - 1.0))), da)
        if isinstance(a, Const):
            return mul(mul(node, Const(math.log(a.value))), db)
        return mul(node, add(mul(db, call("ln", a)), div(mul(b, da), a)))
    if isinstance(node, Call):
        u = node.arg
        du = diff(u, var)
        if _is_const(du, 0.0):
            return ZERO
        name = node.name
        if name == "sin":
            outer = call("cos", u)
        elif name == "cos":
            outer = neg(call("sin", u))
        elif name == "exp":
            outer = node
        elif name == "ln":
            return div(du, u)
        elif name == "abs":
            outer = call("sign", u)
        elif name == "sign":
            return ZERO
        else:  # pragma: no cover
            raise TypeError(name)
        return mul(outer, du)
    if isinstance(node, Apply):
        if var != "x":
            return ZERO
        inner = Apply(node.fn.derivative(1), node.scale, node.shift)
        return mul(Const(node.scale), inner)
    raise TypeError(f"unknown node {node!r}")


def substitute_affine(node: Node, scale: float, shift: float) -> Node:
    """Replace x by scale*x + shift throughout the tree."""
    if isinstance(node, Const):
        return node
    if isinstance(node, Var):
        if node.name != "x":
            return node
        return add(mul(Const(scale), node), Const(shift))
    if isinstance(node, Neg):
        return Neg(substitute_affine(node.a, scale, shift))
    if isinstance(node, Bin):
        return Bin(node.op, substitute_affine(node.a, scale, shift),
                   substitute_affine(node.b, scale, shift))
    if isinstance(node, Call):
        return Call(node.name, substitute_affine(node.arg, scale, shift))
    if isinstance(node, Apply):
        return Apply(node.fn, node.scale * scale, node.scale * shift + node.shift)
    raise TypeError(f"unknown node {node!r}")


def applies(node: Node):
    """Yield every Apply leaf of the tree."""
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Apply):
            yield n
        elif isinstance(n, Neg):
            stack.append(n.a)
        elif isinstance(n, Bin):
            stack.extend((n.a, n.b))
        elif isinstance(n, Call):
            stack.append(n.arg)


def is_constant(node: Node) -> bool:
    return isinstance(node, Const)


def to_text(node: Node) -> str:
    """Fully parenthesised rendering, mostly for reprs."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.a)})"
    if isinstance(node, Bin):
        return f"({to_text(node.a)} {node.op} {to_text(node.b)})"
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Apply):
        return f"<{type(node.fn).__name__}>({node.scale!r}*x + {node.shift!r})"
    return "?"
