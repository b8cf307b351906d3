"""Symbolic differentiation producing new expressions.

Used where a derivative must itself be an Expr (lifted Hamiltonians,
constraint levels, compiled right-hand sides). Numeric checks elsewhere
compare it against :func:`eval_jet`.
"""

from __future__ import annotations

from functools import lru_cache

from .nodes import BinOp, Call, Expr, Neg, Node, Num, Var, add, div, mul, neg, power, sub


@lru_cache(maxsize=4096)
def _d(node: Node, x: str) -> Node:
    if isinstance(node, Num):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.name == x else 0.0)
    if isinstance(node, Neg):
        return neg(_d(node.arg, x))
    if isinstance(node, Call):
        return _d_call(node, x)
    a, b = node.left, node.right
    da, db = _d(a, x), _d(b, x)
    op = node.op
    if op == "+":
        return add(da, db)
    if op == "-":
        return sub(da, db)
    if op == "*":
        return add(mul(da, b), mul(a, db))
    if op == "/":
        # (a/b)' = a'/b - a*b'/b^2
        return sub(div(da, b), div(mul(a, db), power(b, Num(2.0))))
    return _d_pow(a, b, da, db)


def _d_pow(a: Node, b: Node, da: Node, db: Node) -> Node:
    if isinstance(b, Num):
        if b.value == 0.0:
            return Num(0.0)
        return mul(mul(b, power(a, Num(b.value - 1.0))), da)
    # a^b = exp(b log a)
    term = add(mul(db, Call("log", (a,))), div(mul(b, da), a))
    return mul(BinOp("^", a, b), term)


def _d_call(node: Call, x: str) -> Node:
    f = node.func
    if f == "pow":
        a, b = node.args
        return _d_pow(a, b, _d(a, x), _d(b, x))
    a = node.args[0]
    da = _d(a, x)
    if isinstance(da, Num) and da.value == 0.0:
        return Num(0.0)
    if f == "sin":
        outer = Call("cos", (a,))
    elif f == "cos":
        outer = neg(Call("sin", (a,)))
    elif f == "tan":
        outer = add(Num(1.0), power(Call("tan", (a,)), Num(2.0)))
    elif f == "exp":
        outer = node
    elif f == "log":
        return div(da, a)
    elif f == "sqrt":
        return div(da, mul(Num(2.0), node))
    elif f == "tanh":
        outer = sub(Num(1.0), power(node, Num(2.0)))
    elif f == "cosh":
        outer = Call("sinh", (a,))
    elif f == "sinh":
        outer = Call("cosh", (a,))
    elif f == "abs":
        outer = div(a, node)
    else:  # pragma: no cover - parser rejects unknown names
        raise ValueError(f"no derivative rule for {f}")
    return mul(outer, da)


def diff(e: Expr, x: str) -> Expr:
    """Partial derivative of ``e`` with respect to variable ``x``."""
    if x not in e.vars:
        return Expr(Num(0.0))
    return Expr(_d(e.root, x))


def gradient(e: Expr, names) -> list:
    return [diff(e, x) for x in names]


def hessian(e: Expr, names) -> list:
    g = gradient(e, names)
    return [[diff(gi, y) for y in names] for gi in g]
