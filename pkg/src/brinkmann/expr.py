"""Expression language for metric functions on a Brinkmann chart.

Grammar (whitespace-insensitive)::

    expr    := term (('+'|'-') term)*
    term    := unary (('*'|'/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' signed-integer)?
    atom    := number | variable | func '(' expr ')' | '(' expr ')'
    func    := sin | cos | exp | sqrt

Variables are exactly ``u`` and ``x2`` .. ``x{n-1}`` for the declared chart
dimension ``n``; ``v`` is rejected outright because everything stored in a
chart is v-independent.  ``^`` takes integer literal exponents only and
binds tighter than unary minus, so ``-u^2`` reads as ``-(u^2)``.

Every parse error carries the byte offset of the offending token.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from . import jets

__all__ = [
    "Num",
    "Var",
    "Neg",
    "Bin",
    "Pow",
    "Call",
    "ExprAst",
    "ParseError",
    "parse",
    "to_text",
    "eval_scalar",
    "eval_jet",
    "var_names",
]

FUNCTIONS = ("sin", "cos", "exp", "sqrt")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "ExprAst"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * /
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Pow:
    base: "ExprAst"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "ExprAst"


ExprAst = Union[Num, Var, Neg, Bin, Pow, Call]


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
        self.reason = message


def var_names(dimension: int) -> list[str]:
    """Legal variable names for an n-dimensional chart: u, x2 .. x{n-1}."""
    if dimension < 2:
        raise ValueError("chart dimension must be at least 2")
    return ["u"] + [f"x{i}" for i in range(2, dimension)]


# -- tokenizer -------------------------------------------------------------------

_OPS = set("+-*/^()")


def _tokenize(text: str):
    tokens = []  # (kind, value, offset)
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _OPS:
            tokens.append(("op", c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            try:
                value = float(text[i:j])
            except ValueError:
                raise ParseError(f"malformed number {text[i:j]!r}", i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", n))
    return tokens


# -- parser ----------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, dimension: int):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.vars = set(var_names(dimension))
        self.dimension = dimension

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}", offset)
        return self.advance()

    def parse(self) -> ExprAst:
        node = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {value!r}", offset)
        return node

    def expr(self) -> ExprAst:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                node = Bin(value, node, self.term())
            else:
                return node

    def term(self) -> ExprAst:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                node = Bin(value, node, self.unary())
            else:
                return node

    def unary(self) -> ExprAst:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            node = self.unary()
            # fold a negated literal so printing round-trips structurally
            if isinstance(node, Num):
                return Num(-node.value)
            return Neg(node)
        return self.power()

    def power(self) -> ExprAst:
        node = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            node = Pow(node, self.integer_exponent())
        return node

    def integer_exponent(self) -> int:
        sign = 1
        kind, value, offset = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            sign = -1
            kind, value, offset = self.peek()
        if kind != "num":
            raise ParseError("expected integer exponent after '^'", offset)
        if value != int(value):
            raise ParseError(f"non-integer exponent {value!r}", offset)
        self.advance()
        return sign * int(value)

    def atom(self) -> ExprAst:
        kind, value, offset = self.advance()
        if kind == "num":
            return Num(value)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "name":
            nxt_kind, nxt_value, _ = self.peek()
            if nxt_kind == "op" and nxt_value == "(":
                if value not in FUNCTIONS:
                    raise ParseError(f"unknown function {value!r}", offset)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            if value == "v":
                raise ParseError(
                    "variable 'v' is not allowed: chart functions are v-independent "
                    "by the normal form", offset)
            if value not in self.vars:
                raise ParseError(
                    f"unknown identifier {value!r} for dimension {self.dimension}", offset)
            return Var(value)
        raise ParseError(f"unexpected token {value!r}", offset)


def parse(text: str, dimension: int) -> ExprAst:
    """Parse an expression over the variables of an n-dimensional chart."""
    return _Parser(text, dimension).parse()


# -- printing --------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: ExprAst) -> int:
    if isinstance(node, Bin):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    if isinstance(node, Pow):
        return _PREC["^"]
    if isinstance(node, Num) and repr(node.value).startswith("-"):
        return _PREC["neg"]  # includes -0.0, which prints with a sign
    return _PREC["atom"]


def to_text(node: ExprAst) -> str:
    """Pretty-print an AST; reparsing the result gives a structurally equal tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = to_text(node.arg)
        if _prec(node.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Pow):
        base = to_text(node.base)
        if _prec(node.base) <= _PREC["^"]:
            base = f"({base})"
        return f"{base}^{node.exponent}" if node.exponent >= 0 else f"{base}^({node.exponent})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Bin):
        left = to_text(node.left)
        right = to_text(node.right)
        if _prec(node.left) < _PREC[node.op]:
            left = f"({left})"
        # - and / are left-associative: parenthesize right operands of equal precedence
        if _prec(node.right) < _PREC[node.op] or (
            node.op in "-/" and _prec(node.right) == _PREC[node.op]
        ):
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an AST node: {node!r}")


# -- evaluation ------------------------------------------------------------------


def eval_scalar(node: ExprAst, env: Mapping[str, float]) -> float:
    import math

    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return float(env[node.name])
    if isinstance(node, Neg):
        return -eval_scalar(node.arg, env)
    if isinstance(node, Pow):
        return eval_scalar(node.base, env) ** node.exponent
    if isinstance(node, Call):
        return getattr(math, node.func)(eval_scalar(node.arg, env))
    if isinstance(node, Bin):
        a = eval_scalar(node.left, env)
        b = eval_scalar(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    raise TypeError(f"not an AST node: {node!r}")


def eval_jet(node: ExprAst, env: Mapping[str, jets.Jet], num_vars: int, order: int) -> jets.Jet:
    """Evaluate an expression as a jet, given seeded jets for every variable."""
    if isinstance(node, Num):
        return jets.const(node.value, num_vars, order)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -eval_jet(node.arg, env, num_vars, order)
    if isinstance(node, Pow):
        return jets.pow_int(eval_jet(node.base, env, num_vars, order), node.exponent)
    if isinstance(node, Call):
        return getattr(jets, node.func)(eval_jet(node.arg, env, num_vars, order))
    if isinstance(node, Bin):
        a = eval_jet(node.left, env, num_vars, order)
        b = eval_jet(node.right, env, num_vars, order)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    raise TypeError(f"not an AST node: {node!r}")
