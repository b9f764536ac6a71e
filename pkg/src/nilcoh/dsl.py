"""Expression language for coordinate maps.

Grammar (precedence climbing, loosest to tightest):

    expr   :=  term (('+' | '-') term)*
    term   :=  unary (('*' | '/') unary)*
    unary  :=  '-' unary | '+' unary | power
    power  :=  atom ('^' signed-integer)*        -- exponents fold right
    atom   :=  number | 'pi' | coordinate | fn '(' expr ')' | '(' expr ')'

Coordinates are ``x1 .. xn``; functions are sin, cos, exp, log, sqrt, abs,
tanh.  Positions in error messages are 1-based; end of input counts as one
past the last character.  Evaluation is generic over floats, numpy arrays,
and jets, and raises DomainError on log of a nonpositive value, division by
zero, square root of a negative, or 0 to a negative power.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .jets import Jet, value_of

ADD, MUL, UNARY, POW = 1, 2, 3, 4

FUNCTIONS = ("abs", "cos", "exp", "log", "sin", "sqrt", "tanh")

KINK_TOLERANCE = 1e-9


class ParseError(ValueError):
    """Syntax error with a 1-based position and the tokens that were expected."""

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = expected
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{message} at position {position}{hint}")


class UnknownSymbolError(ParseError):
    pass


class ArityError(ParseError):
    pass


class DomainError(ValueError):
    """Evaluation left the function's domain; carries the offending sample."""

    def __init__(self, message: str, sample_index: int | None = None, coords=None):
        self.base_message = message
        self.sample_index = sample_index
        self.coords = coords
        if coords is not None:
            message = f"{message} at point ({', '.join(repr(float(c)) for c in coords)})"
        super().__init__(message)


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class PiConst:
    pass


@dataclass(frozen=True)
class Coord:
    index: int
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


# -- tokenizer ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?:(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int  # 1-based


def tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos + 1)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    return tokens


# -- parser -------------------------------------------------------------------

_PREC = {"+": ADD, "-": ADD, "*": MUL, "/": MUL, "^": POW}


class _Parser:
    def __init__(self, text: str, names: dict[str, int] | None):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.names = names or {}

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> _Token | None:
        tok = self.peek()
        if tok is not None:
            self.i += 1
        return tok

    def end_pos(self) -> int:
        return len(self.text) + 1

    def expect_op(self, op: str):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.end_pos(), (op,))
        if tok.kind != "op" or tok.text != op:
            raise ParseError(f"unexpected {tok.text!r}", tok.pos, (op,))
        self.i += 1

    def parse(self):
        expr = self.expression(0)
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected {tok.text!r}", tok.pos)
        return expr

    def expression(self, min_prec: int):
        left = self.prefix()
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "op" or tok.text not in _PREC:
                return left
            prec = _PREC[tok.text]
            if prec < min_prec:
                return left
            self.i += 1
            if tok.text == "^":
                left = Pow(left, self.exponent_chain())
            else:
                right = self.expression(prec + 1)
                left = Bin(tok.text, left, right)

    def prefix(self):
        tok = self.peek()
        if tok is not None and tok.kind == "op" and tok.text in ("-", "+"):
            self.i += 1
            arg = self.expression(UNARY)
            return Neg(arg) if tok.text == "-" else arg
        return self.atom()

    def exponent_chain(self) -> int:
        values = [self.signed_integer()]
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "op" or tok.text != "^":
                break
            self.i += 1
            values.append(self.signed_integer())
        result = values[-1]
        for v in reversed(values[:-1]):
            if result < 0:
                raise ParseError(
                    "chained exponent folds to a non-integer", self.tokens[self.i - 1].pos
                )
            result = v ** result
        return result

    def signed_integer(self) -> int:
        sign = 1
        tok = self.peek()
        if tok is not None and tok.kind == "op" and tok.text in ("-", "+"):
            sign = -1 if tok.text == "-" else 1
            self.i += 1
            tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.end_pos(), ("integer exponent",))
        if tok.kind != "number" or not tok.text.isdigit():
            raise ParseError(
                f"exponent must be an integer, got {tok.text!r}", tok.pos, ("integer exponent",)
            )
        self.i += 1
        return sign * int(tok.text)

    def atom(self):
        tok = self.next()
        if tok is None:
            raise ParseError("unexpected end of input", self.end_pos(), ("expression",))
        if tok.kind == "number":
            return Num(float(tok.text))
        if tok.kind == "ident":
            return self.identifier(tok)
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression(0)
            self.expect_op(")")
            return inner
        raise ParseError(f"unexpected {tok.text!r}", tok.pos, ("expression",))

    def identifier(self, tok: _Token):
        name = tok.text
        if name in self.names:
            return Coord(self.names[name], name)
        if name == "pi":
            return PiConst()
        if name in FUNCTIONS:
            nxt = self.peek()
            if nxt is None or nxt.kind != "op" or nxt.text != "(":
                raise ArityError(
                    f"function {name!r} needs an argument list", tok.pos, ("(",)
                )
            self.i += 1
            arg = self.expression(0)
            sep = self.peek()
            if sep is not None and sep.kind == "op" and sep.text == ",":
                raise ArityError(f"function {name!r} takes exactly one argument", sep.pos)
            self.expect_op(")")
            return Call(name, arg)
        m = re.fullmatch(r"x([1-9][0-9]*)", name)
        if m:
            return Coord(int(m.group(1)) - 1, name)
        raise UnknownSymbolError(f"unknown symbol {name!r}", tok.pos)


def parse(text: str, names: dict[str, int] | None = None):
    """Parse an expression; ``names`` optionally maps extra symbols to
    environment slots (used for observables over derivative entries)."""
    return _Parser(text, names).parse()


def coordinate_indices(expr) -> set[int]:
    out: set[int] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Coord):
            out.add(node.index)
        elif isinstance(node, Neg):
            stack.append(node.arg)
        elif isinstance(node, Call):
            stack.append(node.arg)
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, Bin):
            stack.append(node.left)
            stack.append(node.right)
    return out


# -- evaluation ---------------------------------------------------------------

_UNARY = {
    "sin": (np.sin, np.cos),
    "cos": (np.cos, lambda v: -np.sin(v)),
    "exp": (np.exp, np.exp),
    "log": (np.log, lambda v: 1.0 / v),
    "sqrt": (np.sqrt, lambda v: 0.5 / np.sqrt(v)),
    "abs": (np.abs, np.sign),
    "tanh": (np.tanh, lambda v: 1.0 - np.tanh(v) ** 2),
}


def _first_bad(mask) -> int | None:
    mask = np.asarray(mask)
    if mask.ndim == 0:
        return None
    return int(np.argmax(mask))


def evaluate(expr, env: list, warn=None):
    """Evaluate over an environment of floats, arrays, or jets.

    ``warn``, if given, is called with a message for soft diagnostics
    (currently: abs evaluated within 1e-9 of its kink).
    """
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, PiConst):
        return np.pi
    if isinstance(expr, Coord):
        if expr.index >= len(env):
            raise DomainError(f"coordinate {expr.name} exceeds domain dimension {len(env)}")
        return env[expr.index]
    if isinstance(expr, Neg):
        return -evaluate(expr.arg, env, warn)
    if isinstance(expr, Bin):
        left = evaluate(expr.left, env, warn)
        right = evaluate(expr.right, env, warn)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        raw = value_of(right)
        bad = np.equal(raw, 0.0)
        if np.any(bad):
            raise DomainError("division by zero", _first_bad(bad))
        return left / right
    if isinstance(expr, Pow):
        base = evaluate(expr.base, env, warn)
        if expr.exponent < 0:
            bad = np.equal(value_of(base), 0.0)
            if np.any(bad):
                raise DomainError("zero raised to a negative power", _first_bad(bad))
        return base ** expr.exponent
    if isinstance(expr, Call):
        arg = evaluate(expr.arg, env, warn)
        raw = value_of(arg)
        if expr.fn == "log":
            bad = np.less_equal(raw, 0.0)
            if np.any(bad):
                raise DomainError("log of a nonpositive value", _first_bad(bad))
        elif expr.fn == "sqrt":
            bad = np.less(raw, 0.0)
            if np.any(bad):
                raise DomainError("sqrt of a negative value", _first_bad(bad))
        elif expr.fn == "abs" and warn is not None:
            near = np.less_equal(np.abs(raw), KINK_TOLERANCE)
            if np.any(near):
                count = int(np.sum(near)) if np.asarray(near).ndim else 1
                warn(f"abs evaluated within {KINK_TOLERANCE:g} of its kink ({count} sample(s))")
        f, df = _UNARY[expr.fn]
        if isinstance(arg, Jet):
            return arg.unary(f, df)
        return f(arg)
    raise TypeError(f"not an expression node: {expr!r}")


# -- printing -----------------------------------------------------------------

_NODE_PREC = {Num: 5, PiConst: 5, Coord: 5, Call: 5, Pow: POW, Neg: UNARY}


def _prec(node) -> int:
    if isinstance(node, Bin):
        return _PREC[node.op]
    return _NODE_PREC[type(node)]


def pretty(expr) -> str:
    """Canonical form; pretty . parse is a fixed point on its own output."""
    if isinstance(expr, Num):
        v = expr.value
        if v == int(v) and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    if isinstance(expr, PiConst):
        return "pi"
    if isinstance(expr, Coord):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.fn}({pretty(expr.arg)})"
    if isinstance(expr, Neg):
        inner = pretty(expr.arg)
        if _prec(expr.arg) < UNARY:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, Pow):
        base = pretty(expr.base)
        if _prec(expr.base) <= POW:
            base = f"({base})"
        return f"{base}^{expr.exponent}"
    if isinstance(expr, Bin):
        lhs = pretty(expr.left)
        if _prec(expr.left) < _PREC[expr.op]:
            lhs = f"({lhs})"
        rhs = pretty(expr.right)
        if _prec(expr.right) < _PREC[expr.op] or (
            _prec(expr.right) == _PREC[expr.op] and expr.op in ("-", "/")
        ):
            rhs = f"({rhs})"
        if expr.op in ("+", "-"):
            return f"{lhs} {expr.op} {rhs}"
        return f"{lhs}{expr.op}{rhs}"
    raise TypeError(f"not an expression node: {expr!r}")
