"""Small arithmetic expression language for matrix entries.

Grammar (EBNF)::

    expr   = term { ("+" | "-") term } ;
    term   = unary { ("*" | "/") unary } ;
    unary  = ("-" | "+") unary | power ;
    power  = atom [ "^" unary ] ;
    atom   = number | name | name "(" expr ")" | "(" expr ")" ;

``^`` is right associative and binds tighter than unary minus, so ``-x^2``
means ``-(x^2)``. Variables are ``t``, ``x1 .. xn`` and ``r = |x|``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnknownIdentifier

FUNCTIONS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
    "tanh": math.tanh,
    "atan": math.atan,
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))")
_ATOM_START = ("number", "identifier", "(", "-", "+")


class _Parser:
    def __init__(self, src: str, n: Optional[int]):
        self.src = src
        self.n = n
        self.tokens = []
        pos = 0
        while True:
            m = _TOKEN.match(src, pos)
            if m is None or m.end() == pos:
                rest = src[pos:]
                if rest.strip() == "":
                    break
                off = pos + (len(rest) - len(rest.lstrip()))
                raise ExprSyntaxError(f"unexpected character {src[off]!r}", off, _ATOM_START)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("end", "", len(self.src))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.peek()
        if val != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}", off, (value,))
        self.take()

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", off, ("+", "-", "*", "/", "^", "end of input"))
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            _check_variable(val, self.n, off)
            return Var(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError("expected an operand", off, _ATOM_START)


def _check_variable(name: str, n: Optional[int], offset=None):
    if name in ("t", "r"):
        return
    m = re.fullmatch(r"x([1-9]\d*)", name)
    if m is None or (n is not None and int(m.group(1)) > n):
        raise UnknownIdentifier(name, offset)


def parse(src: str, n: Optional[int] = None) -> Node:
    """Parse ``src`` into an expression tree.

    Parameters
    ----------
    src : str
    n : int, optional
        Spatial dimension. When given, ``x_k`` with ``k > n`` is rejected.

    Raises
    ------
    ExprSyntaxError
        With the byte offset of the failure and the set of expected tokens.
    UnknownIdentifier
    """
    return _Parser(str(src), n).parse()


def variables(node: Node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, Call):
        return variables(node.arg)
    return variables(node.left) | variables(node.right)


def to_source(node: Node) -> str:
    """Print a tree in fully parenthesised form that parses back to itself."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


def to_sexpr(node: Node) -> str:
    """Prefix form, e.g. ``(+ 5 (* 40 (tanh (^ x1 2))))``."""
    if isinstance(node, Num):
        v = node.value
        return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(v)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(- {to_sexpr(node.operand)})"
    if isinstance(node, Call):
        return f"({node.func} {to_sexpr(node.arg)})"
    return f"({node.op} {to_sexpr(node.left)} {to_sexpr(node.right)})"


def _env_value(name: str, t: float, x) -> float:
    if name == "t":
        return float(t)
    if name == "r":
        return float(math.sqrt(sum(float(v) * float(v) for v in x)))
    return float(x[int(name[1:]) - 1])


def evaluate(node: Node, t: float = 0.0, x=()) -> float:
    """Evaluate a tree at ``(t, x)``.

    Raises
    ------
    DomainError
        Naming the smallest subexpression whose evaluation failed.
    """
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return _env_value(node.name, t, x)
        except IndexError:
            raise UnknownIdentifier(node.name) from None
    if isinstance(node, Neg):
        return -evaluate(node.operand, t, x)
    if isinstance(node, Call):
        a = evaluate(node.arg, t, x)
        try:
            out = FUNCTIONS[node.func](a)
        except (ValueError, OverflowError) as exc:
            raise DomainError(f"{node.func} undefined or overflowing at {a!r}", to_source(node)) from exc
        return float(out)
    a = evaluate(node.left, t, x)
    b = evaluate(node.right, t, x)
    try:
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return math.pow(a, b)
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise DomainError(f"operator {node.op!r} undefined for ({a!r}, {b!r})", to_source(node)) from exc


def _codegen(node: Node) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        if node.name == "t":
            return "t"
        if node.name == "r":
            return "_r(x)"
        return f"x[{int(node.name[1:]) - 1}]"
    if isinstance(node, Neg):
        return f"(-{_codegen(node.operand)})"
    if isinstance(node, Call):
        return f"_{node.func}({_codegen(node.arg)})"
    if node.op == "^":
        return f"_pow({_codegen(node.left)}, {_codegen(node.right)})"
    return f"({_codegen(node.left)} {node.op} {_codegen(node.right)})"


def _norm(x) -> float:
    return math.sqrt(sum(float(v) * float(v) for v in x))


@dataclass(frozen=True)
class Expression:
    """A parsed expression with a fast compiled evaluator.

    Call as ``expr(t, x)``. Failures in the compiled path are re-evaluated by
    the tree walker to report the offending subexpression.
    """

    source: str
    tree: Node
    func: Callable

    @classmethod
    def compile(cls, src: Union[str, float, int], n: Optional[int] = None) -> "Expression":
        tree = Num(float(src)) if isinstance(src, (int, float)) else parse(src, n)
        env = {f"_{k}": v for k, v in FUNCTIONS.items()}
        env["_pow"] = math.pow
        env["_r"] = _norm
        code = f"lambda t, x: {_codegen(tree)}"
        env["__builtins__"] = {}
        func = eval(code, env)  # generated from a validated tree
        return cls(str(src), tree, func)

    @property
    def is_constant(self) -> bool:
        return not variables(self.tree)

    @property
    def depends_on_x(self) -> bool:
        return bool(variables(self.tree) - {"t"})

    def __call__(self, t: float = 0.0, x=()) -> float:
        try:
            return float(self.func(t, x))
        except (ZeroDivisionError, ValueError, OverflowError, IndexError):
            return float(evaluate(self.tree, t, x))

    def printed(self) -> str:
        return to_source(self.tree)


class MatrixExpression:
    """Square matrix of expressions evaluated as a numpy array."""

    def __init__(self, entries, n: Optional[int] = None):
        rows = [list(r) for r in entries]
        size = len(rows)
        if any(len(r) != size for r in rows):
            raise ValueError("matrix of expressions must be square")
        self.size = size
        self.entries = [[Expression.compile(e, n) for e in r] for r in rows]
        self._live = [(i, j, e) for i, r in enumerate(self.entries) for j, e in enumerate(r)
                      if not (e.is_constant and e(0.0, ()) == 0.0)]

    def __call__(self, t: float = 0.0, x=()) -> np.ndarray:
        out = np.zeros((self.size, self.size))
        for i, j, e in self._live:
            out[i, j] = e(t, x)
        return out

    @property
    def depends_on_x(self) -> bool:
        return any(e.depends_on_x for r in self.entries for e in r)

    @property
    def is_constant(self) -> bool:
        return all(e.is_constant for r in self.entries for e in r)

    def sources(self):
        return [[e.source for e in r] for r in self.entries]
