"""Recursive-descent parser for the scalar expression language.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
"""

from __future__ import annotations

import re
from typing import List, NamedTuple

from .nodes import FUNCTIONS, BinOp, Call, Expr, Neg, Num, ParseError, Var

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str  # num | ident | op | eof
    text: str
    offset: int  # byte offset into the UTF-8 source


def tokenize(src: str) -> List[Token]:
    tokens = []
    pos = 0
    byte = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", byte)
        text = m.group()
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, text, byte))
        pos = m.end()
        byte += len(text.encode("utf-8"))
    tokens.append(Token("eof", "", byte))
    return tokens


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            self.fail(f"expected {text!r}")

    def fail(self, message: str):
        tok = self.tok
        if tok.kind == "eof":
            raise ParseError(f"{message}, got end of input", tok.offset)
        raise ParseError(f"{message}, got {tok.text!r}", tok.offset)

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.accept("-"):
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if not self.accept("("):
                return Var(tok.text)
            if tok.text not in FUNCTIONS:
                raise ParseError(f"unknown function {tok.text!r}", tok.offset)
            args = [self.expr()]
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
            if len(args) != FUNCTIONS[tok.text]:
                raise ParseError(
                    f"{tok.text} takes {FUNCTIONS[tok.text]} argument(s), got {len(args)}",
                    tok.offset,
                )
            return Call(tok.text, tuple(args))
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, name or '('")


def parse(src: str) -> Expr:
    """Parse ``src`` into an :class:`Expr`; raises :class:`ParseError` with a byte offset."""
    if not src.strip():
        raise ParseError("empty input", 0)
    p = _Parser(tokenize(src))
    root = p.expr()
    if p.tok.kind != "eof":
        p.fail("unexpected trailing input")
    return Expr(root)
