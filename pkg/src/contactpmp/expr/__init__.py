"""Scalar expression language: parsing, printing, jets and compilation."""

from .codegen import compile_expr, compile_exprs
from .jet import JetValue, eval_jet, evaluate
from .nodes import (
    FUNCTIONS,
    BinOp,
    Call,
    DomainError,
    EvalError,
    Expr,
    ExprError,
    Neg,
    Num,
    ParseError,
    UnboundVariableError,
    Var,
    call,
    const,
    rename,
    substitute,
    to_source,
    var,
)
from .parser import parse, tokenize
from .symbolic import diff, gradient, hessian


def as_expr(x) -> Expr:
    """Accept an Expr, a source string, or a number."""
    if isinstance(x, Expr):
        return x
    if isinstance(x, str):
        return parse(x)
    if isinstance(x, (int, float)):
        return const(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


__all__ = [
    "FUNCTIONS", "BinOp", "Call", "DomainError", "EvalError", "Expr", "ExprError",
    "JetValue", "Neg", "Num", "ParseError", "UnboundVariableError", "Var", "as_expr",
    "call", "compile_expr", "compile_exprs", "const", "diff", "eval_jet", "evaluate",
    "gradient", "hessian", "parse", "rename", "substitute", "to_source", "tokenize", "var",
]
