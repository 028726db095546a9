"""A small expression language for right-hand sides a(x, u, Du, ..., D^{2m}u).

Grammar (whitespace-insensitive, usual precedence, left-associative)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" ["-"] INTEGER)?
    atom   := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Variables are ``x{i}`` (coordinates), ``u{i}`` (components) and
``d{i}_{digits}`` for D^beta u_i with one digit per coordinate, e.g.
``d1_100``.  Functions: abs, exp, sin, cos, sign and abspow(e, p) = |e|^p.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np


class DSLError(ValueError):
    pass


class DSLSyntaxError(DSLError):
    def __init__(self, msg: str, src: str, pos: int):
        super().__init__(f"{msg} at position {pos}: {src[:pos]}<<>>{src[pos:]}")
        self.pos = pos


class DSLDomainError(DSLError, ArithmeticError):
    pass


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Func:
    name: str  # abs exp sin cos sign
    arg: "Expr"


@dataclass(frozen=True)
class AbsPow:
    arg: "Expr"
    p: float


Expr = Union[Const, Var, Neg, BinOp, Pow, Func, AbsPow]

FUNCS = ("abs", "exp", "sin", "cos", "sign")
_VAR_RE = re.compile(r"^(x\d+|u\d+|d\d+_\d+)$")


@dataclass(frozen=True)
class SymbolTable:
    """Declared variables: n coordinates, N components, derivatives up to ``max_order``."""

    n: int
    N: int
    max_order: int

    def check(self, name: str) -> None:
        if name[0] in "xu":
            i = int(name[1:])
            bound = self.n if name[0] == "x" else self.N
            if not 1 <= i <= bound:
                raise DSLError(f"unknown identifier {name!r}")
            return
        comp, digits = name[1:].split("_")
        if not 1 <= int(comp) <= self.N or len(digits) != self.n:
            raise DSLError(f"unknown identifier {name!r} (expects d<comp>_<{self.n} digits>)")
        if sum(int(c) for c in digits) > self.max_order:
            raise DSLError(f"{name!r} exceeds the declared derivative order {self.max_order}")


def derivative_name(comp: int, beta) -> str:
    """``d{comp}_{digits}``; the zero multi-index maps to ``u{comp}``."""
    if sum(beta) == 0:
        return f"u{comp}"
    if any(b > 9 for b in beta):
        raise DSLError("derivative orders above 9 per coordinate are not expressible")
    return f"d{comp}_" + "".join(str(b) for b in beta)


def parse_variable(name: str) -> tuple[str, int, tuple[int, ...] | None]:
    """('x', i, None), ('u', i, None) or ('d', i, beta)."""
    if name[0] in "xu":
        return name[0], int(name[1:]), None
    comp, digits = name[1:].split("_")
    return "d", int(comp), tuple(int(c) for c in digits)


# -- tokenizer / parser -------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))")


def _tokenize(src: str):
    pos, out = 0, []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise DSLSyntaxError("unexpected character", src, pos)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src: str, table: SymbolTable | None):
        self.src, self.table = src, table
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            raise DSLSyntaxError(f"expected {value!r}", self.src, tok[2])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise DSLSyntaxError(f"unexpected {tok[1]!r}", self.src, tok[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, val, pos = self.take()
            if kind != "num" or not re.fullmatch(r"\d+", val):
                raise DSLSyntaxError("exponent must be an integer literal (use abspow(e, p) "
                                     "for real powers)", self.src, pos)
            return Pow(base, sign * int(val))
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.take(")")
            return e
        if kind == "name":
            if self.peek()[1] == "(":
                return self.call(val, pos)
            if not _VAR_RE.match(val):
                raise DSLError(f"unknown identifier {val!r} at position {pos}")
            if self.table is not None:
                self.table.check(val)
            return Var(val)
        raise DSLSyntaxError(f"unexpected {val or 'end of input'!r}", self.src, pos)

    def call(self, name, pos):
        self.take("(")
        args = [self.expr()]
        while self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.take(")")
        if name == "abspow":
            if len(args) != 2:
                raise DSLSyntaxError("abspow takes two arguments", self.src, pos)
            p = _const_value(args[1])
            if p is None:
                raise DSLSyntaxError("abspow exponent must be a numeric constant", self.src, pos)
            return AbsPow(args[0], p)
        if name in FUNCS:
            if len(args) != 1:
                raise DSLSyntaxError(f"{name} takes one argument", self.src, pos)
            return Func(name, args[0])
        raise DSLError(f"unknown function {name!r} at position {pos}")


def _const_value(e: Expr) -> float | None:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Neg) and isinstance(e.arg, Const):
        return -e.arg.value
    return None


def parse(src: str, table: SymbolTable | None = None) -> Expr:
    """Parse ``src``; with a symbol table, unknown variables are rejected."""
    return _Parser(src, table).parse()


# -- evaluation ---------------------------------------------------------------

def evaluate(e: Expr, bindings: Mapping[str, object]):
    """Evaluate with float or numpy-array bindings (broadcast elementwise)."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return bindings[e.name]
        except KeyError:
            raise DSLError(f"missing binding for {e.name!r}") from None
    if isinstance(e, Neg):
        return -evaluate(e.arg, bindings)
    if isinstance(e, BinOp):
        a, b = evaluate(e.left, bindings), evaluate(e.right, bindings)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if np.any(np.asarray(b) == 0):
            raise DSLDomainError("division by zero")
        return a / b
    if isinstance(e, Pow):
        a = evaluate(e.base, bindings)
        if e.exponent < 0 and np.any(np.asarray(a) == 0):
            raise DSLDomainError("negative power of zero")
        return np.asarray(a, dtype=float) ** e.exponent if np.ndim(a) else float(a) ** e.exponent
    if isinstance(e, Func):
        a = evaluate(e.arg, bindings)
        return {"abs": np.abs, "exp": np.exp, "sin": np.sin, "cos": np.cos,
                "sign": np.sign}[e.name](a)
    if isinstance(e, AbsPow):
        a = np.abs(evaluate(e.arg, bindings))
        if e.p <= 0 and np.any(a == 0):
            raise DSLDomainError(f"abspow(0, {e.p:g}) is undefined")
        return a ** e.p
    raise TypeError(f"not an expression node: {e!r}")


eval_expr = evaluate


# -- symbolic partials --------------------------------------------------------

ZERO, ONE = Const(0.0), Const(1.0)


def _is(e, v):
    return isinstance(e, Const) and e.value == v


def _add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    return BinOp("-", a, b)


def _neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return BinOp("*", a, b)


def _div(a, b):
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    return BinOp("/", a, b)


def partial(e: Expr, var: str) -> Expr:
    """Symbolic d e / d var with light constant folding."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return _neg(partial(e.arg, var))
    if isinstance(e, BinOp):
        da, db = partial(e.left, var), partial(e.right, var)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, e.right), _mul(e.left, db))
        # (a/b)' = a'/b - a b' / b^2
        return _sub(_div(da, e.right), _div(_mul(e.left, db), Pow(e.right, 2)))
    if isinstance(e, Pow):
        k = e.exponent
        if k == 0:
            return ZERO
        inner = ONE if k == 1 else (e.base if k == 2 else Pow(e.base, k - 1))
        return _mul(_mul(Const(float(k)), inner), partial(e.base, var))
    if isinstance(e, Func):
        da = partial(e.arg, var)
        if _is(da, 0) or e.name == "sign":
            return ZERO
        outer = {"abs": Func("sign", e.arg), "exp": e, "sin": Func("cos", e.arg),
                 "cos": Neg(Func("sin", e.arg))}[e.name]
        return _mul(outer, da)
    if isinstance(e, AbsPow):
        da = partial(e.arg, var)
        if _is(da, 0):
            return ZERO
        # d|a|^p = p sign(a) |a|^{p-1} a'; undefined at a = 0 when p <= 1
        core = _mul(Const(e.p), _mul(Func("sign", e.arg), AbsPow(e.arg, e.p - 1)))
        return _mul(core, da)
    raise TypeError(f"not an expression node: {e!r}")


# -- printing -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _num(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(float(v))
    return f"({s})" if v < 0 else s


def to_string(e: Expr) -> str:
    """Print with the minimal parentheses that re-parse to the same tree."""
    return _fmt(e, 0)


def _fmt(e: Expr, ctx: int) -> str:
    if isinstance(e, Const):
        return _num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        s = "-" + _fmt(e.arg, 3)
        return f"({s})" if ctx > 2 else s
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        s = f"{_fmt(e.left, p)} {e.op} {_fmt(e.right, p + 1)}"
        return f"({s})" if p < ctx else s
    if isinstance(e, Pow):
        base = _fmt(e.base, 4)
        if isinstance(e.base, Pow):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Func):
        return f"{e.name}({_fmt(e.arg, 0)})"
    if isinstance(e, AbsPow):
        return f"abspow({_fmt(e.arg, 0)}, {_num(e.p)})"
    raise TypeError(f"not an expression node: {e!r}")


# -- inspection / rewriting ---------------------------------------------------

def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.arg)


def dependence_order(e: Expr) -> int:
    """Largest |beta| among referenced derivative variables (0 if only u, x)."""
    best = 0
    for v in variables(e):
        kind, _, beta = parse_variable(v)
        if kind == "d":
            best = max(best, sum(beta))
    return best


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Func):
        return Func(e.name, substitute(e.arg, mapping))
    return AbsPow(substitute(e.arg, mapping), e.p)


def is_differentiable_at(e: Expr, bindings) -> bool:
    try:
        for v in variables(e):
            evaluate(partial(e, v), bindings)
    except DSLDomainError:
        return False
    return True


__all__ = ["Expr", "Const", "Var", "Neg", "BinOp", "Pow", "Func", "AbsPow", "SymbolTable",
           "DSLError", "DSLSyntaxError", "DSLDomainError", "parse", "evaluate", "eval_expr",
           "partial", "to_string", "variables", "dependence_order", "substitute",
           "derivative_name", "parse_variable", "is_differentiable_at"]
