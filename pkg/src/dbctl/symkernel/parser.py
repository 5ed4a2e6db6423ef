"""Recursive-descent parser for the expression grammar.

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' integer)?
    base   := number | identifier | '(' expr ')'

Unary minus sits below '^', so -x^2 reads as -(x^2). Ratios such as 3/4
are ordinary quotients of integer literals. The identifier ``I`` denotes
the imaginary unit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .expr import Add, Div, Expr, Mul, Num, Pow, Sym, Symbol

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))")

START_OF_FACTOR = frozenset({"number", "identifier", "'('", "'-'"})


class ParseError(ValueError):
    def __init__(self, message: str, offset: int, expected: frozenset = frozenset()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f"syntax error at offset {offset}: {message}"
        if expected:
            detail += "; expected one of " + ", ".join(sorted(expected))
        super().__init__(detail)


@dataclass
class _Tok:
    kind: str  # number | identifier | op | end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        start = m.start(m.lastgroup)
        kind = {"num": "number", "id": "identifier", "op": "op"}[m.lastgroup]
        toks.append(_Tok(kind, m.group(m.lastgroup), _byte_offset(text, start)))
        pos = m.end()
    toks.append(_Tok("end", "", len(text.encode())))
    return toks


def _byte_offset(text: str, idx: int) -> int:
    return len(text[:idx].encode())


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.depth = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def is_op(self, *ops) -> bool:
        t = self.peek()
        return t.kind == "op" and t.text in ops

    def _after_operand(self) -> frozenset:
        exp = {"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"}
        if self.depth:
            exp.add("')'")
        return frozenset(exp)

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.is_op("+", "-"):
            op = self.take().text
            t = self.term()
            terms.append(t if op == "+" else Mul((Num(Fraction(-1)), t)))
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self) -> Expr:
        node = self.factor()
        while self.is_op("*", "/"):
            op = self.take().text
            rhs = self.factor()
            if op == "*":
                node = Mul(node.args + (rhs,)) if isinstance(node, Mul) else Mul((node, rhs))
            else:
                node = Div(node, rhs)
        return node

    def factor(self) -> Expr:
        if self.is_op("-"):
            self.take()
            return Mul((Num(Fraction(-1)), self.factor()))
        b = self.base()
        if self.is_op("^"):
            self.take()
            t = self.peek()
            if t.kind != "number":
                raise ParseError(f"found {_describe(t)}", t.offset, frozenset({"integer"}))
            self.take()
            return Pow(b, int(t.text))
        return b

    def base(self) -> Expr:
        t = self.peek()
        if t.kind == "number":
            self.take()
            return Num(Fraction(int(t.text)))
        if t.kind == "identifier":
            self.take()
            return Sym(Symbol(t.text, "parameter"))
        if t.kind == "op" and t.text == "(":
            self.take()
            self.depth += 1
            inner = self.expr()
            close = self.peek()
            if not (close.kind == "op" and close.text == ")"):
                raise ParseError(f"found {_describe(close)}", close.offset,
                                 self._after_operand() - {"end of input"} | {"')'"})
            self.take()
            self.depth -= 1
            return inner
        raise ParseError(f"found {_describe(t)}", t.offset, START_OF_FACTOR)


def _describe(t: _Tok) -> str:
    return "end of input" if t.kind == "end" else repr(t.text)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree."""
    p = _Parser(text)
    node = p.expr()
    t = p.peek()
    if t.kind != "end":
        raise ParseError(f"found {_describe(t)}", t.offset, p._after_operand())
    return node
