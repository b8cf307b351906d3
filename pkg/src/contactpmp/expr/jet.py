"""Forward-mode evaluation with exact first and second derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .nodes import BinOp, Call, DomainError, Expr, Neg, Node, Num, UnboundVariableError, Var, to_source


@dataclass
class JetValue:
    value: float
    grad: np.ndarray
    hess: Optional[np.ndarray] = None


class _Jet:
    """Truncated Taylor jet in ``n`` directions; ``hess`` is None for order 1."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v: float, g: np.ndarray, h: Optional[np.ndarray]):
        self.v = v
        self.g = g
        self.h = h

    def chain(self, f0: float, f1: float, f2: float) -> "_Jet":
        # composition f(self) given f, f', f'' at self.v
        g = f1 * self.g
        h = None
        if self.h is not None:
            h = f1 * self.h + f2 * np.outer(self.g, self.g)
        return _Jet(f0, g, h)

    def __add__(self, o: "_Jet") -> "_Jet":
        return _Jet(self.v + o.v, self.g + o.g, None if self.h is None else self.h + o.h)

    def __sub__(self, o: "_Jet") -> "_Jet":
        return _Jet(self.v - o.v, self.g - o.g, None if self.h is None else self.h - o.h)

    def __neg__(self) -> "_Jet":
        return _Jet(-self.v, -self.g, None if self.h is None else -self.h)

    def __mul__(self, o: "_Jet") -> "_Jet":
        g = self.v * o.g + o.v * self.g
        h = None
        if self.h is not None:
            cross = np.outer(self.g, o.g)
            h = self.v * o.h + o.v * self.h + (cross + cross.T)
        return _Jet(self.v * o.v, g, h)

    @property
    def is_const(self) -> bool:
        return not self.g.any() and (self.h is None or not self.h.any())


def _reciprocal(b: _Jet, node: Node) -> _Jet:
    if b.v == 0.0:
        raise DomainError("division by zero", to_source(node))
    inv = 1.0 / b.v
    return b.chain(inv, -inv * inv, 2.0 * inv * inv * inv)


def _pow(a: _Jet, b: _Jet, node: Node) -> _Jet:
    if b.is_const:
        c = b.v
        if a.v < 0.0 and c != int(c):
            raise DomainError("negative base with non-integer exponent", to_source(node))
        if a.v == 0.0 and c < 0.0:
            raise DomainError("division by zero", to_source(node))
        try:
            f0 = a.v ** c
            f1 = 0.0 if c == 0.0 else c * a.v ** (c - 1.0)
            f2 = 0.0 if c in (0.0, 1.0) else c * (c - 1.0) * a.v ** (c - 2.0)
        except ZeroDivisionError:
            raise DomainError("derivative of power undefined at zero", to_source(node)) from None
        return a.chain(f0, f1, f2)
    if a.v <= 0.0:
        raise DomainError("power with variable exponent needs a positive base", to_source(node))
    la = a.chain(math.log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v))
    t = b * la
    e = math.exp(t.v)
    return t.chain(e, e, e)


def _call(name: str, a: _Jet, node: Node) -> _Jet:
    x = a.v
    if name == "sin":
        s, c = math.sin(x), math.cos(x)
        return a.chain(s, c, -s)
    if name == "cos":
        s, c = math.sin(x), math.cos(x)
        return a.chain(c, -s, -c)
    if name == "tan":
        t = math.tan(x)
        sec2 = 1.0 + t * t
        return a.chain(t, sec2, 2.0 * t * sec2)
    if name == "exp":
        e = math.exp(x)
        return a.chain(e, e, e)
    if name == "log":
        if x <= 0.0:
            raise DomainError("log of non-positive value", to_source(node))
        return a.chain(math.log(x), 1.0 / x, -1.0 / (x * x))
    if name == "sqrt":
        if x < 0.0:
            raise DomainError("sqrt of negative value", to_source(node))
        r = math.sqrt(x)
        if r == 0.0:
            if a.is_const:
                return a.chain(0.0, 0.0, 0.0)
            raise DomainError("derivative of sqrt at zero", to_source(node))
        return a.chain(r, 0.5 / r, -0.25 / (r * x))
    if name == "tanh":
        t = math.tanh(x)
        d = 1.0 - t * t
        return a.chain(t, d, -2.0 * t * d)
    if name == "cosh":
        return a.chain(math.cosh(x), math.sinh(x), math.cosh(x))
    if name == "sinh":
        return a.chain(math.sinh(x), math.cosh(x), math.sinh(x))
    if name == "abs":
        return a.chain(abs(x), math.copysign(1.0, x) if x != 0.0 else 0.0, 0.0)
    raise DomainError(f"unknown function {name}", to_source(node))


def eval_jet(
    e: Expr,
    point: Mapping[str, float],
    wrt: Sequence[str] = (),
    order: int = 1,
) -> JetValue:
    """Evaluate ``e`` at ``point`` with derivatives w.r.t. ``wrt`` (order 1 or 2)."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    n = len(wrt)
    index = {name: i for i, name in enumerate(wrt)}
    zero_h = np.zeros((n, n)) if order == 2 else None
    leaves: dict = {}

    def leaf(name: str) -> _Jet:
        if name not in leaves:
            if name not in point:
                raise UnboundVariableError(name)
            g = np.zeros(n)
            if name in index:
                g[index[name]] = 1.0
            leaves[name] = _Jet(float(point[name]), g, zero_h)
        return leaves[name]

    def go(node: Node) -> _Jet:
        if isinstance(node, Num):
            return _Jet(node.value, np.zeros(n), zero_h)
        if isinstance(node, Var):
            return leaf(node.name)
        if isinstance(node, Neg):
            return -go(node.arg)
        if isinstance(node, Call):
            args = [go(a) for a in node.args]
            if node.func == "pow":
                return _pow(args[0], args[1], node)
            return _call(node.func, args[0], node)
        a, b = go(node.left), go(node.right)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a * _reciprocal(b, node)
        return _pow(a, b, node)

    try:
        j = go(e.root)
    except OverflowError as exc:
        raise DomainError(f"overflow ({exc})", str(e)) from None
    return JetValue(j.v, j.g, j.h)


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    return eval_jet(e, point, (), 1).value
