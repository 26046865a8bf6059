"""Arithmetic/boolean expressions over the integer variables ``i`` and ``n``.

Grammar (loosest binding first)::

    expr  := or
    or    := and ("or" and)*
    and   := not ("and" not)*
    not   := "not" not | cmp
    cmp   := add (("<" | "<=" | "=" | ">=" | ">") add)?
    add   := mul (("+" | "-") mul)*
    mul   := unary (("*" | "/") unary)*
    unary := "-" unary | pow
    pow   := atom ("^" unary)?
    atom  := number | "true" | "false" | "i" | "n"
           | ident "(" expr ("," expr)* ")" | "(" expr ")"

``^`` is right-associative; every other binary operator is left-associative
and comparisons do not chain.  Integer arithmetic stays integral (``/``
always yields a float); ``floor`` returns an int and ``mod`` is floored.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from .errors import SpecError

FUNCTIONS = {
    "floor": (1, 1),
    "abs": (1, 1),
    "pow": (2, 2),
    "mod": (2, 2),
    "min": (2, None),
    "max": (2, None),
}
VARIABLES = ("i", "n")
KEYWORDS = ("and", "or", "not", "true", "false")
COMPARISONS = ("<", "<=", "=", ">=", ">")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op><=|>=|[-+*/^<>=(),]))"
)


@dataclass(frozen=True)
class Num:
    value: Union[int, float]


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Bool, Var, Neg, Not, BinOp, Call]


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(source: str) -> list:
    tokens = []
    pos = 0
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos >= len(source):
            break
        m = _TOKEN.match(source, pos)
        if not m or m.end() == pos:
            raise SpecError("syntax", f"unexpected character {source[pos]!r}", column=pos + 1)
        kind = m.lastgroup
        text = m.group(kind)
        tokens.append(Token(kind, text, m.start(kind)))
        pos = m.end()
    tokens.append(Token("eof", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, variables):
        self.source = source
        self.variables = variables
        self.tokens = tokenize(source)
        self.k = 0

    @property
    def tok(self):
        return self.tokens[self.k]

    def advance(self):
        t = self.tokens[self.k]
        self.k += 1
        return t

    def error(self, expected, tok=None):
        tok = tok or self.tok
        found = "end of expression" if tok.kind == "eof" else repr(tok.text)
        exp = ", ".join(sorted(expected))
        raise SpecError("syntax", f"expected one of {exp}; found {found}",
                        column=tok.pos + 1, expected=frozenset(expected))

    def at(self, *texts):
        t = self.tok
        return t.kind in ("op", "ident") and t.text in texts

    def expect(self, text):
        if not self.at(text):
            self.error({text})
        return self.advance()

    def parse(self):
        e = self.or_()
        if self.tok.kind != "eof":
            expected = {"end of expression", "and", "or", "+", "-", "*", "/", "^"}
            if not (isinstance(e, BinOp) and e.op in COMPARISONS):
                expected |= set(COMPARISONS)
            self.error(expected)
        return e

    def or_(self):
        e = self.and_()
        while self.at("or"):
            self.advance()
            e = BinOp("or", e, self.and_())
        return e

    def and_(self):
        e = self.not_()
        while self.at("and"):
            self.advance()
            e = BinOp("and", e, self.not_())
        return e

    def not_(self):
        if self.at("not"):
            self.advance()
            return Not(self.not_())
        return self.cmp()

    def cmp(self):
        e = self.add()
        if self.tok.kind == "op" and self.tok.text in COMPARISONS:
            op = self.advance().text
            e = BinOp(op, e, self.add())
        return e

    def add(self):
        e = self.mul()
        while self.at("+", "-"):
            op = self.advance().text
            e = BinOp(op, e, self.mul())
        return e

    def mul(self):
        e = self.unary()
        while self.at("*", "/"):
            op = self.advance().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.at("-"):
            self.advance()
            return Neg(self.unary())
        return self.pow()

    def pow(self):
        e = self.atom()
        if self.at("^"):
            self.advance()
            e = BinOp("^", e, self.unary())
        return e

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            is_float = any(c in t.text for c in ".eE")
            return Num(float(t.text) if is_float else int(t.text))
        if t.kind == "ident":
            name = t.text
            if name in ("true", "false"):
                self.advance()
                return Bool(name == "true")
            if name in KEYWORDS:
                self.error({"number", "variable", "function call", "("})
            self.advance()
            if self.at("("):
                return self.call(name, t)
            if name in VARIABLES:
                if name not in self.variables:
                    raise SpecError("unknown_identifier", f"variable {name!r} is not available here",
                                    column=t.pos + 1)
                return Var(name)
            if name in FUNCTIONS:
                self.error({"("})
            raise SpecError("unknown_identifier", f"unknown identifier {name!r}", column=t.pos + 1)
        if self.at("("):
            self.advance()
            e = self.or_()
            self.expect(")")
            return e
        self.error({"number", "variable", "function call", "(", "-", "not"})

    def call(self, name, tok):
        if name not in FUNCTIONS:
            raise SpecError("unknown_function", f"unknown function {name!r}", column=tok.pos + 1)
        self.expect("(")
        args = [self.or_()]
        while self.at(","):
            self.advance()
            args.append(self.or_())
        self.expect(")")
        lo, hi = FUNCTIONS[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = str(lo) if lo == hi else f"at least {lo}"
            raise SpecError("arity", f"{name} takes {want} argument(s), got {len(args)}", column=tok.pos + 1)
        return Call(name, tuple(args))


def parse_expression(source, variables=VARIABLES) -> Expr:
    """Parse ``source``; a bare JSON number is accepted as a literal."""
    if isinstance(source, bool):
        return Bool(source)
    if isinstance(source, (int, float)):
        if source < 0 or math.copysign(1.0, source) < 0:
            return Neg(Num(-source))
        return Num(source)
    if not isinstance(source, str):
        raise SpecError("structure", f"expected an expression string, got {type(source).__name__}")
    return _Parser(source, variables).parse()


# -- printing ---------------------------------------------------------------

_LEVEL = {"or": 1, "and": 2, "<": 4, "<=": 4, "=": 4, ">=": 4, ">": 4,
          "+": 5, "-": 5, "*": 6, "/": 6, "^": 8}


def _prec(e) -> int:
    if isinstance(e, BinOp):
        return _LEVEL[e.op]
    if isinstance(e, Neg):
        return 7
    if isinstance(e, Not):
        return 3
    return 9


def _wrap(e, minimum):
    s = to_source(e)
    return f"({s})" if _prec(e) < minimum else s


def to_source(e: Expr) -> str:
    """Canonical text; ``parse_expression(to_source(e)) == e``."""
    if isinstance(e, Num):
        v = e.value
        if isinstance(v, float):
            if not math.isfinite(v):
                raise ValueError(f"cannot print non-finite literal {v!r}")
            return repr(v) if v >= 0 else f"({v!r})"
        return str(v) if v >= 0 else f"({v})"
    if isinstance(e, Bool):
        return "true" if e.value else "false"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return "-" + _wrap(e.operand, 7)
    if isinstance(e, Not):
        return "not " + _wrap(e.operand, 3)
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_source(a) for a in e.args)})"
    level = _LEVEL[e.op]
    if e.op == "^":
        return f"{_wrap(e.left, 9)}^{_wrap(e.right, 7)}"
    if e.op in COMPARISONS:
        return f"{_wrap(e.left, 5)} {e.op} {_wrap(e.right, 5)}"
    return f"{_wrap(e.left, level)} {e.op} {_wrap(e.right, level + 1)}"


def free_variables(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, (Neg, Not)):
        return free_variables(e.operand)
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    if isinstance(e, Call):
        return frozenset().union(*(free_variables(a) for a in e.args))
    return frozenset()


# -- evaluation -------------------------------------------------------------

class EvalError(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


def _num(x, what):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise EvalError("type", f"{what} needs a number, got {_typename(x)}")
    return x


def _bool(x, what):
    if not isinstance(x, bool):
        raise EvalError("type", f"{what} needs a boolean, got {_typename(x)}")
    return x


def _typename(x):
    return "boolean" if isinstance(x, bool) else "number"


def _pow(a, b):
    if isinstance(a, int) and isinstance(b, int) and b >= 0:
        # exact integer powers stay within double range, like every other result
        if abs(a) > 1 and b * math.log2(abs(a)) > 1023:
            raise EvalError("domain", f"overflow in {a!r}^{b!r}")
        return a ** b
    a, b = float(a), float(b)
    if a == 0.0 and b < 0:
        raise EvalError("division_by_zero", "zero raised to a negative power")
    if a < 0 and not b.is_integer():
        raise EvalError("domain", f"negative base {a!r} with non-integer exponent {b!r}")
    try:
        return a ** b
    except OverflowError:
        raise EvalError("domain", f"overflow in {a!r}^{b!r}") from None


def _div(a, b):
    if b == 0:
        raise EvalError("division_by_zero", "division by zero")
    return a / b


def _mod(a, b):
    if b == 0:
        raise EvalError("division_by_zero", "mod by zero")
    return a % b


def _floor(a):
    if not math.isfinite(a):
        raise EvalError("domain", f"floor of {a!r}")
    return math.floor(a)


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": _pow,
}
_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}
_CALLS = {
    "floor": _floor,
    "abs": abs,
    "pow": _pow,
    "mod": _mod,
    "min": min,
    "max": max,
}


def compile_expression(e: Expr):
    """Turn a tree into a Python callable ``f(i, n)``.

    Raises :class:`EvalError` (kinds ``division_by_zero``, ``domain``,
    ``type``) at call time.
    """
    if isinstance(e, (Num, Bool)):
        v = e.value
        return lambda i, n: v
    if isinstance(e, Var):
        if e.name == "i":
            return lambda i, n: i
        return lambda i, n: n
    if isinstance(e, Neg):
        f = compile_expression(e.operand)
        return lambda i, n: -_num(f(i, n), "-")
    if isinstance(e, Not):
        f = compile_expression(e.operand)
        return lambda i, n: not _bool(f(i, n), "not")
    if isinstance(e, Call):
        fs = [compile_expression(a) for a in e.args]
        fn = _CALLS[e.name]
        name = e.name
        return lambda i, n: fn(*[_num(f(i, n), name) for f in fs])
    l, r = compile_expression(e.left), compile_expression(e.right)
    op = e.op
    if op == "and":
        return lambda i, n: _bool(l(i, n), "and") and _bool(r(i, n), "and")
    if op == "or":
        return lambda i, n: _bool(l(i, n), "or") or _bool(r(i, n), "or")
    fn = _ARITH.get(op) or _CMP[op]
    return lambda i, n: fn(_num(l(i, n), op), _num(r(i, n), op))


def evaluate(e: Expr, i=None, n=None):
    return compile_expression(e)(i, n)
