"""Expression tree nodes, printing, and simplifying constructors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvalError(ExprError):
    pass


class UnboundVariableError(EvalError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class DomainError(EvalError):
    def __init__(self, message: str, subexpr: str = ""):
        text = f"{message} in {subexpr!r}" if subexpr else message
        super().__init__(text)
        self.subexpr = subexpr


# name -> arity
FUNCTIONS = {
    "sin": 1, "cos": 1, "tan": 1, "exp": 1, "log": 1, "sqrt": 1,
    "pow": 2, "tanh": 1, "cosh": 1, "sinh": 1, "abs": 1,
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]

# binding power used by the printer
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG_PREC = 3
_POW_PREC = 4
_ATOM_PREC = 5


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _POW_PREC if node.op == "^" else _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    if isinstance(node, Num) and (node.value < 0 or math.copysign(1.0, node.value) < 0):
        return 0  # forces parentheses around a negative literal
    return _ATOM_PREC


def _wrap(node: Node, min_prec: int) -> str:
    text = to_source(node)
    return text if _prec(node) >= min_prec else f"({text})"


def to_source(node: Node) -> str:
    """Print a node so that parsing the result rebuilds the same tree."""
    if isinstance(node, Num):
        if not math.isfinite(node.value):
            raise ExprError(f"cannot print non-finite literal {node.value}")
        text = repr(float(node.value))
        return f"({text})" if text.startswith("-") else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, _NEG_PREC)
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_source(a) for a in node.args)})"
    if node.op == "^":
        return f"{_wrap(node.left, _ATOM_PREC)}^{_wrap(node.right, _NEG_PREC)}"
    p = _PREC[node.op]
    return f"{_wrap(node.left, p)} {node.op} {_wrap(node.right, p + 1)}"


def _collect_vars(node: Node, out: dict) -> None:
    if isinstance(node, Var):
        out.setdefault(node.name, None)
    elif isinstance(node, Neg):
        _collect_vars(node.arg, out)
    elif isinstance(node, BinOp):
        _collect_vars(node.left, out)
        _collect_vars(node.right, out)
    elif isinstance(node, Call):
        for a in node.args:
            _collect_vars(a, out)


class Expr:
    """Immutable scalar expression; ``vars`` lists referenced names in order of appearance."""

    __slots__ = ("root", "vars")

    def __init__(self, root: Node):
        names: dict = {}
        _collect_vars(root, names)
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "vars", tuple(names))

    def __setattr__(self, name, value):
        raise AttributeError("Expr is immutable")

    def __eq__(self, other):
        return isinstance(other, Expr) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def __str__(self) -> str:
        return to_source(self.root)

    def __repr__(self) -> str:
        return f"Expr({str(self)!r})"

    def depends_on(self, name: str) -> bool:
        return name in self.vars

    @property
    def is_zero(self) -> bool:
        return isinstance(self.root, Num) and self.root.value == 0.0

    # arithmetic builds simplified trees; plain numbers are lifted to literals
    def __add__(self, other):
        return Expr(add(self.root, _node(other)))

    def __radd__(self, other):
        return Expr(add(_node(other), self.root))

    def __sub__(self, other):
        return Expr(sub(self.root, _node(other)))

    def __rsub__(self, other):
        return Expr(sub(_node(other), self.root))

    def __mul__(self, other):
        return Expr(mul(self.root, _node(other)))

    def __rmul__(self, other):
        return Expr(mul(_node(other), self.root))

    def __truediv__(self, other):
        return Expr(div(self.root, _node(other)))

    def __rtruediv__(self, other):
        return Expr(div(_node(other), self.root))

    def __pow__(self, other):
        return Expr(power(self.root, _node(other)))

    def __neg__(self):
        return Expr(neg(self.root))


def _node(x) -> Node:
    if isinstance(x, Expr):
        return x.root
    if isinstance(x, (int, float)):
        return Num(float(x))
    if isinstance(x, (Num, Var, Neg, BinOp, Call)):
        return x
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def const(value: float) -> Expr:
    return Expr(Num(float(value)))


def var(name: str) -> Expr:
    return Expr(Var(name))


def call(func: str, *args) -> Expr:
    if FUNCTIONS.get(func) != len(args):
        raise ExprError(f"bad call {func}/{len(args)}")
    return Expr(Call(func, tuple(_node(a) for a in args)))


def _num(node: Node, value: float) -> bool:
    return isinstance(node, Num) and node.value == value


def neg(a: Node) -> Node:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Node, b: Node) -> Node:
    if _num(a, 0.0):
        return b
    if _num(b, 0.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if isinstance(b, Neg):
        return BinOp("-", a, b.arg)
    return BinOp("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if _num(b, 0.0):
        return a
    if _num(a, 0.0):
        return neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if isinstance(b, Neg):
        return BinOp("+", a, b.arg)
    return BinOp("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if _num(a, 0.0) or _num(b, 0.0):
        return Num(0.0)
    if _num(a, 1.0):
        return b
    if _num(b, 1.0):
        return a
    if _num(a, -1.0):
        return neg(b)
    if _num(b, -1.0):
        return neg(a)
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if isinstance(a, Neg) and isinstance(b, Neg):
        return BinOp("*", a.arg, b.arg)
    if isinstance(a, Neg):
        return neg(BinOp("*", a.arg, b))
    if isinstance(b, Neg):
        return neg(BinOp("*", a, b.arg))
    return BinOp("*", a, b)


def div(a: Node, b: Node) -> Node:
    if _num(a, 0.0) and not _num(b, 0.0):
        return Num(0.0)
    if _num(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return Num(a.value / b.value)
    return BinOp("/", a, b)


def power(a: Node, b: Node) -> Node:
    if _num(b, 0.0):
        return Num(1.0)
    if _num(b, 1.0):
        return a
    return BinOp("^", a, b)


def substitute(e: Expr, mapping: Mapping[str, "Expr | float"]) -> Expr:
    """Replace variables by expressions (or numbers), simplifying on the way up."""
    table = {k: _node(v) for k, v in mapping.items()}

    def go(node: Node) -> Node:
        if isinstance(node, Var):
            return table.get(node.name, node)
        if isinstance(node, Num):
            return node
        if isinstance(node, Neg):
            return neg(go(node.arg))
        if isinstance(node, Call):
            return Call(node.func, tuple(go(a) for a in node.args))
        left, right = go(node.left), go(node.right)
        return {"+": add, "-": sub, "*": mul, "/": div, "^": power}[node.op](left, right)

    return Expr(go(e.root))


def rename(e: Expr, mapping: Mapping[str, str]) -> Expr:
    return substitute(e, {k: var(v) for k, v in mapping.items()})
