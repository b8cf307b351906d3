"""Compile expressions to plain Python closures for use inside hot loops."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .nodes import BinOp, Call, DomainError, Expr, Neg, Node, Num, UnboundVariableError, Var

_MATH_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
    "log": math.log, "sqrt": math.sqrt, "tanh": math.tanh, "cosh": math.cosh,
    "sinh": math.sinh, "abs": abs,
}
_NUMPY_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "tanh": np.tanh, "cosh": np.cosh,
    "sinh": np.sinh, "abs": np.abs,
}


def _math_pow(a, b):
    if a < 0.0 and b != int(b):
        raise ValueError("negative base with non-integer exponent")
    return a ** b


def _numpy_pow(a, b):
    return np.power(a, b)


class _Emitter:
    """Straight-line code with one temporary per distinct subexpression.

    Subtrees are shared by identity first and then structurally, keyed on the
    operator and the names of already emitted children, so repeated
    derivative terms are computed once.
    """

    def __init__(self, slots: dict):
        self.slots = slots
        self.lines = []
        self.by_id = {}
        self.by_key = {}

    def _temp(self, key, text: str) -> str:
        name = self.by_key.get(key)
        if name is None:
            name = f"t{len(self.lines)}"
            self.lines.append(f"    {name} = {text}")
            self.by_key[key] = name
        return name

    def emit(self, node: Node) -> str:
        hit = self.by_id.get(id(node))
        if hit is not None:
            return hit[1]
        out = self._emit(node)
        self.by_id[id(node)] = (node, out)  # keep node alive so its id stays unique
        return out

    def _emit(self, node: Node) -> str:
        if isinstance(node, Num):
            return repr(float(node.value))
        if isinstance(node, Var):
            if node.name not in self.slots:
                raise UnboundVariableError(node.name)
            return self.slots[node.name]
        if isinstance(node, Neg):
            a = self.emit(node.arg)
            return self._temp(("neg", a), f"-{a}")
        if isinstance(node, Call):
            args = [self.emit(x) for x in node.args]
            fn = "_pow" if node.func == "pow" else f"_f_{node.func}"
            return self._temp((node.func,) + tuple(args), f"{fn}({', '.join(args)})")
        left, right = self.emit(node.left), self.emit(node.right)
        if node.op == "^":
            r = node.right
            if isinstance(r, Num) and r.value == int(r.value) and abs(r.value) <= 64:
                return self._temp(("^", left, int(r.value)), f"{left} ** {int(r.value)}")
            return self._temp(("pow", left, right), f"_pow({left}, {right})")
        return self._temp((node.op, left, right), f"{left} {node.op} {right}")


def compile_exprs(
    exprs: Sequence[Expr],
    names: Sequence[str],
    backend: str = "math",
) -> Callable:
    """Return ``f(values) -> list`` evaluating ``exprs`` with ``values`` ordered as ``names``.

    The math backend takes a sequence of floats and raises :class:`DomainError`
    on invalid arithmetic. The numpy backend takes a sequence of equally shaped
    arrays and follows numpy's nan/inf semantics.
    """
    slots = {name: f"v{i}" for i, name in enumerate(names)}
    em = _Emitter(slots)
    bodies = [em.emit(e.root) for e in exprs]
    unpack = ", ".join(slots[n] for n in names)
    lines = ["def _fn(_a):"]
    if names:
        lines.append(f"    {unpack}, = _a")
    lines.extend(em.lines)
    lines.append(f"    return [{', '.join(bodies)}]")
    src = "\n".join(lines)
    funcs = _MATH_FUNCS if backend == "math" else _NUMPY_FUNCS
    if backend not in ("math", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    env = {f"_f_{k}": v for k, v in funcs.items()}
    env["_pow"] = _math_pow if backend == "math" else _numpy_pow
    exec(compile(src, "<expr>", "exec"), env)
    raw = env["_fn"]

    if backend == "numpy":
        def run_np(values):
            with np.errstate(all="ignore"):
                out = raw(values)
            return [np.broadcast_to(np.asarray(v, dtype=float), np.shape(values[0]) if len(values) else ())
                    for v in out]
        run_np.source = src
        return run_np

    texts = [str(e) for e in exprs]

    def run(values):
        if isinstance(values, np.ndarray):
            values = values.tolist()
        try:
            return raw(values)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"{exc}", "; ".join(texts)) from None

    run.source = src
    return run


def compile_expr(e: Expr, names: Sequence[str], backend: str = "math") -> Callable:
    f = compile_exprs([e], names, backend)
    return lambda values: f(values)[0]
