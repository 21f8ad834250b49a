"""Arithmetic expression language for synthetic objectives.

Recursive-descent parser; precedence (tightest first): ^ (right-assoc),
unary minus, * /, + -. Categorical parameters appear only through match
terms (param == "level"), which evaluate to 1.0 or 0.0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

FUNCTIONS_1 = {"sin", "cos", "exp", "log", "abs", "sqrt"}
FUNCTIONS_2 = {"min", "max"}


class ExpressionError(Exception):
    pass


class ParseError(ExpressionError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at column {pos + 1})")
        self.pos = pos


class DomainError(ExpressionError):
    pass


@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Match:
    name: str
    level: str


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
    args: tuple["Node", ...]


Node = Literal | Ref | Match | Neg | BinOp | Call


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        self._scan()
        self.i = 0

    def _scan(self) -> None:
        text = self.text
        i = 0
        while i < len(text):
            c = text[i]
            if c.isspace():
                i += 1
            elif c.isdigit() or (c == "." and i + 1 < len(text) and text[i + 1].isdigit()):
                j = i
                while j < len(text) and (text[j].isdigit() or text[j] in ".eE" or
                                          (text[j] in "+-" and text[j - 1] in "eE")):
                    j += 1
                self.tokens.append(("num", text[i:j], i))
                i = j
            elif c.isalpha() or c == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], i))
                i = j
            elif c == '"':
                j = text.find('"', i + 1)
                if j < 0:
                    raise ParseError("unterminated string", i)
                self.tokens.append(("str", text[i + 1 : j], i))
                i = j + 1
            elif text.startswith("==", i):
                self.tokens.append(("op", "==", i))
                i += 2
            elif c in "+-*/^(),":
                self.tokens.append(("op", c, i))
                i += 1
            else:
                raise ParseError(f"unexpected character {c!r}", i)

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of expression", len(self.text))
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.next()
        if tok[1] != value:
            raise ParseError(f"expected {value!r}, got {tok[1]!r}", tok[2])


def parse_expression(text: str) -> Node:
    tz = _Tokenizer(text)
    node = _parse_sum(tz)
    tok = tz.peek()
    if tok is not None:
        raise ParseError(f"trailing input {tok[1]!r}", tok[2])
    return node


def _parse_sum(tz: _Tokenizer) -> Node:
    node = _parse_term(tz)
    while True:
        tok = tz.peek()
        if tok and tok[1] in ("+", "-"):
            tz.next()
            node = BinOp(tok[1], node, _parse_term(tz))
        else:
            return node


def _parse_term(tz: _Tokenizer) -> Node:
    node = _parse_unary(tz)
    while True:
        tok = tz.peek()
        if tok and tok[1] in ("*", "/"):
            tz.next()
            node = BinOp(tok[1], node, _parse_unary(tz))
        else:
            return node


def _parse_unary(tz: _Tokenizer) -> Node:
    tok = tz.peek()
    if tok and tok[1] == "-":
        tz.next()
        return Neg(_parse_unary(tz))
    return _parse_power(tz)


def _parse_power(tz: _Tokenizer) -> Node:
    base = _parse_atom(tz)
    tok = tz.peek()
    if tok and tok[1] == "^":
        tz.next()
        return BinOp("^", base, _parse_unary(tz))  # right-associative exponent
    return base


def _parse_atom(tz: _Tokenizer) -> Node:
    tok = tz.next()
    kind, value, pos = tok
    if kind == "num":
        try:
            return Literal(float(value))
        except ValueError:
            raise ParseError(f"bad number {value!r}", pos) from None
    if kind == "ident":
        nxt = tz.peek()
        if nxt and nxt[1] == "(":
            if value in FUNCTIONS_1 or value in FUNCTIONS_2:
                tz.next()
                args = [_parse_sum(tz)]
                while tz.peek() and tz.peek()[1] == ",":
                    tz.next()
                    args.append(_parse_sum(tz))
                tz.expect(")")
                want = 1 if value in FUNCTIONS_1 else 2
                if len(args) != want:
                    raise ParseError(f"{value} takes {want} argument(s)", pos)
                return Call(value, tuple(args))
            raise ParseError(f"unknown function {value!r}", pos)
        if nxt and nxt[1] == "==":
            tz.next()
            stok = tz.next()
            if stok[0] != "str":
                raise ParseError("== expects a quoted level", stok[2])
            return Match(value, stok[1])
        return Ref(value)
    if value == "(":
        node = _parse_sum(tz)
        tz.expect(")")
        return node
    raise ParseError(f"unexpected token {value!r}", pos)


def referenced_parameters(node: Node) -> set[str]:
    if isinstance(node, (Ref, Match)):
        return {node.name}
    if isinstance(node, Neg):
        return referenced_parameters(node.operand)
    if isinstance(node, BinOp):
        return referenced_parameters(node.left) | referenced_parameters(node.right)
    if isinstance(node, Call):
        out: set[str] = set()
        for a in node.args:
            out |= referenced_parameters(a)
        return out
    return set()


def eval_expression(node: Node, assignment: Mapping[str, object]) -> float:
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, Ref):
        if node.name not in assignment:
            raise ExpressionError(f"unbound parameter {node.name!r}")
        v = assignment[node.name]
        if isinstance(v, str):
            raise DomainError(
                f"categorical parameter {node.name!r} may only appear in match terms"
            )
        return float(v)
    if isinstance(node, Match):
        if node.name not in assignment:
            raise ExpressionError(f"unbound parameter {node.name!r}")
        return 1.0 if assignment[node.name] == node.level else 0.0
    if isinstance(node, Neg):
        return -eval_expression(node.operand, assignment)
    if isinstance(node, BinOp):
        a = eval_expression(node.left, assignment)
        b = eval_expression(node.right, assignment)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0.0:
                raise DomainError("division by zero")
            return a / b
        try:
            r = a**b
        except (OverflowError, ZeroDivisionError) as err:
            raise DomainError(f"bad power {a}^{b}") from err
        if isinstance(r, complex) or not math.isfinite(r):
            raise DomainError(f"bad power {a}^{b}")
        return r
    if isinstance(node, Call):
        args = [eval_expression(a, assignment) for a in node.args]
        if node.func == "log":
            if args[0] <= 0.0:
                raise DomainError("log of nonpositive value")
            return math.log(args[0])
        if node.func == "sqrt":
            if args[0] < 0.0:
                raise DomainError("sqrt of negative value")
            return math.sqrt(args[0])
        if node.func == "abs":
            return abs(args[0])
        if node.func in ("sin", "cos", "exp"):
            try:
                return getattr(math, node.func)(args[0])
            except OverflowError as err:
                raise DomainError(f"{node.func} overflow") from err
        if node.func == "min":
            return min(args)
        return max(args)
    raise ExpressionError(f"unknown node {node!r}")


def print_expression(node: Node) -> str:
    """Canonical fully-parenthesized-where-needed rendering."""
    if isinstance(node, Literal):
        return f"{node.value:g}"
    if isinstance(node, Ref):
        return node.name
    if isinstance(node, Match):
        return f'({node.name} == "{node.level}")'
    if isinstance(node, Neg):
        return f"-{_wrap(node.operand, 2)}"
    if isinstance(node, BinOp):
        prec = {"+": 0, "-": 0, "*": 1, "/": 1, "^": 3}[node.op]
        if node.op == "^":
            # right-associative: parenthesize a left-nested power
            return f"{_wrap(node.left, 4)}^{_wrap(node.right, 3)}"
        return f"{_wrap(node.left, prec)} {node.op} {_wrap(node.right, prec + 1)}"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(print_expression(a) for a in node.args)})"
    raise ExpressionError(f"unknown node {node!r}")


def _precedence(node: Node) -> int:
    if isinstance(node, BinOp):
        return {"+": 0, "-": 0, "*": 1, "/": 1, "^": 3}[node.op]
    if isinstance(node, Neg):
        return 2
    return 4


def _wrap(node: Node, minimum: int) -> str:
    s = print_expression(node)
    if _precedence(node) < minimum:
        return f"({s})"
    return s
