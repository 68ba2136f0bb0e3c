"""Tiny expression language for curves, germs and scalar profiles.

Grammar (whitespace insensitive, ``^`` right-associative):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' factor)?
    unary  := '-' unary | atom
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

Known single-argument functions: sin cos tan exp log sqrt atan.
``pi`` and ``e`` are reserved constants.  Syntax and domain errors carry the
byte offset / source of the offending fragment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numkit import DomainViolation, Series

__all__ = [
    "Expr", "Num", "Var", "Neg", "Bin", "Call", "parse", "to_source",
    "evaluate", "eval_numpy", "diff", "subs", "free_vars", "MapDef",
    "ExprError", "ExprSyntaxError", "UnknownFunctionError", "EvalDomainError",
    "num", "var", "add", "sub", "mul", "div", "neg", "call", "dot3",
    "cross3", "scale3", "add3", "sub3", "norm3",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "atan")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} (at byte {offset})")
        self.offset = offset


class UnknownFunctionError(ExprSyntaxError):
    pass


class EvalDomainError(ExprError):
    def __init__(self, msg: str, source: str):
        super().__init__(f"{msg} in '{source}'")
        self.source = source


@dataclass(frozen=True)
class Expr:
    span: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Num(Expr):
    value: float = 0.0


@dataclass(frozen=True)
class Var(Expr):
    name: str = ""


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr = None


@dataclass(frozen=True)
class Bin(Expr):
    op: str = "+"
    left: Expr = None
    right: Expr = None


@dataclass(frozen=True)
class Call(Expr):
    fn: str = ""
    arg: Expr = None


# ---------------------------------------------------------------- tokenizer

_TOKEN_CHARS = set("+-*/^()")


def _tokenize(src: str):
    toks = []  # (kind, text, offset)
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _TOKEN_CHARS:
            toks.append(("op", ch, i))
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ExprSyntaxError(f"malformed number '{text}'", i)
            toks.append(("num", text, i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(("ident", src[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character '{ch}'", i)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str):
        kind, tok, off = self.peek()
        if kind == "op" and tok == text:
            return self.next()
        raise ExprSyntaxError(f"expected '{text}'", off)

    def parse(self) -> Expr:
        e = self.expr()
        kind, tok, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing '{tok}'", off)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, tok, off = self.peek()
            if kind == "op" and tok in "+-":
                self.next()
                rhs = self.term()
                e = Bin((e.span[0], rhs.span[1]), tok, e, rhs)
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            kind, tok, off = self.peek()
            if kind == "op" and tok in "*/":
                self.next()
                rhs = self.factor()
                e = Bin((e.span[0], rhs.span[1]), tok, e, rhs)
            else:
                return e

    def factor(self) -> Expr:
        base = self.unary()
        kind, tok, off = self.peek()
        if kind == "op" and tok == "^":
            self.next()
            exponent = self.factor()  # right-associative
            return Bin((base.span[0], exponent.span[1]), "^", base, exponent)
        return base

    def unary(self) -> Expr:
        kind, tok, off = self.peek()
        if kind == "op" and tok == "-":
            self.next()
            operand = self.unary()
            return Neg((off, operand.span[1]), operand)
        return self.atom()

    def atom(self) -> Expr:
        kind, tok, off = self.next()
        if kind == "num":
            return Num((off, off + len(tok)), float(tok))
        if kind == "ident":
            k2, t2, _ = self.peek()
            if k2 == "op" and t2 == "(":
                if tok not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function '{tok}'", off)
                self.next()
                arg = self.expr()
                closing = self.expect(")")
                return Call((off, closing[2] + 1), tok, arg)
            return Var((off, off + len(tok)), tok)
        if kind == "op" and tok == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(
            f"unexpected '{tok}'" if tok else "unexpected end of input", off)


def parse(src: str) -> Expr:
    return _Parser(src).parse()


# ------------------------------------------------------------ pretty printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def to_source(e: Expr) -> str:
    return _ts(e, 0)


def _ts(e: Expr, parent_prec: int) -> str:
    if isinstance(e, Num):
        v = e.value
        s = repr(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = _ts(e.operand, 2)
        s = f"-{inner}"
        return f"({s})" if parent_prec >= 2 else s
    if isinstance(e, Call):
        return f"{e.fn}({_ts(e.arg, 0)})"
    if isinstance(e, Bin):
        p = _PREC[e.op]
        if e.op == "^":
            s = f"{_ts(e.left, p + 1)}^{_ts(e.right, p)}"
        else:
            # left-assoc: right operand needs the next level up
            s = f"{_ts(e.left, p)}{e.op}{_ts(e.right, p + 1)}"
        return f"({s})" if parent_prec > p or (parent_prec == p and e.op in "-/^") else s
    raise TypeError(f"not an expression node: {e!r}")


def _node_source(e: Expr) -> str:
    try:
        return to_source(e)
    except Exception:
        return repr(e)


# ----------------------------------------------------------------- evaluation

def free_vars(e: Expr) -> set:
    if isinstance(e, Num):
        return set()
    if isinstance(e, Var):
        return set() if e.name in CONSTANTS else {e.name}
    if isinstance(e, Neg):
        return free_vars(e.operand)
    if isinstance(e, Call):
        return free_vars(e.arg)
    if isinstance(e, Bin):
        return free_vars(e.left) | free_vars(e.right)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, bindings: dict):
    """Evaluate with Series or float bindings; constants pi/e are built in."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name in bindings:
            return bindings[e.name]
        if e.name in CONSTANTS:
            return CONSTANTS[e.name]
        raise EvalDomainError(f"unbound identifier '{e.name}'", _node_source(e))
    if isinstance(e, Neg):
        return -evaluate(e.operand, bindings)
    if isinstance(e, Bin):
        l = evaluate(e.left, bindings)
        r = evaluate(e.right, bindings)
        try:
            if e.op == "+":
                return l + r
            if e.op == "-":
                return l - r
            if e.op == "*":
                return l * r
            if e.op == "/":
                if not isinstance(l, Series) and not isinstance(r, Series):
                    if r == 0.0:
                        raise DomainViolation("division by zero")
                    return l / r
                if not isinstance(l, Series):
                    l = r._coerce(l)
                return l / r
            if e.op == "^":
                if isinstance(l, Series):
                    return l ** r
                if isinstance(r, Series):
                    return r._coerce(l) ** r
                if l < 0 and not float(r).is_integer():
                    raise DomainViolation("non-integer power of a negative base")
                if l == 0 and r < 0:
                    raise DomainViolation("zero raised to a negative power")
                return l ** r
        except DomainViolation as exc:
            raise EvalDomainError(str(exc), _node_source(e)) from exc
    if isinstance(e, Call):
        x = evaluate(e.arg, bindings)
        try:
            if isinstance(x, Series):
                return getattr(x, e.fn)()
            return _scalar_call(e.fn, x)
        except (DomainViolation, ValueError) as exc:
            raise EvalDomainError(str(exc), _node_source(e)) from exc
    raise TypeError(f"not an expression node: {e!r}")


def _scalar_call(fn: str, x: float) -> float:
    if fn == "log" and x <= 0.0:
        raise DomainViolation("log of a nonpositive quantity")
    if fn == "sqrt" and x < 0.0:
        raise DomainViolation("sqrt of a negative quantity")
    return getattr(math, fn)(x)


_NP_FUNCS = {f: getattr(np, f) for f in ("sin", "cos", "tan", "exp", "sqrt")}
_NP_FUNCS["log"] = np.log
_NP_FUNCS["atan"] = np.arctan


def eval_numpy(e: Expr, arrays: dict):
    """Vectorized evaluation over numpy arrays (non-finite values pass through)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name in arrays:
            return arrays[e.name]
        if e.name in CONSTANTS:
            return CONSTANTS[e.name]
        raise EvalDomainError(f"unbound identifier '{e.name}'", _node_source(e))
    if isinstance(e, Neg):
        return -eval_numpy(e.operand, arrays)
    if isinstance(e, Bin):
        l = eval_numpy(e.left, arrays)
        r = eval_numpy(e.right, arrays)
        with np.errstate(all="ignore"):
            if e.op == "+":
                return l + r
            if e.op == "-":
                return l - r
            if e.op == "*":
                return l * r
            if e.op == "/":
                return np.divide(l, r)
            return np.power(l, r)
    if isinstance(e, Call):
        x = eval_numpy(e.arg, arrays)
        with np.errstate(all="ignore"):
            return _NP_FUNCS[e.fn](x)
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------- symbolic operators

def num(v) -> Expr:
    return Num((0, 0), float(v))


def var(name: str) -> Expr:
    return Var((0, 0), name)


def add(a, b) -> Expr:
    if isinstance(a, Num) and a.value == 0.0:
        return b
    if isinstance(b, Num) and b.value == 0.0:
        return a
    return Bin((0, 0), "+", a, b)


def sub(a, b) -> Expr:
    if isinstance(b, Num) and b.value == 0.0:
        return a
    return Bin((0, 0), "-", a, b)


def mul(a, b) -> Expr:
    if isinstance(a, Num):
        if a.value == 0.0:
            return a
        if a.value == 1.0:
            return b
    if isinstance(b, Num):
        if b.value == 0.0:
            return b
        if b.value == 1.0:
            return a
    return Bin((0, 0), "*", a, b)


def div(a, b) -> Expr:
    if isinstance(a, Num) and a.value == 0.0:
        return a
    if isinstance(b, Num) and b.value == 1.0:
        return a
    return Bin((0, 0), "/", a, b)


def neg(a) -> Expr:
    if isinstance(a, Num):
        return num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg((0, 0), a)


def call(fn: str, a) -> Expr:
    return Call((0, 0), fn, a)


def powi(a, k: int) -> Expr:
    return Bin((0, 0), "^", a, num(k))


def diff(e: Expr, name: str) -> Expr:
    """Symbolic derivative with respect to `name`."""
    if isinstance(e, Num):
        return num(0)
    if isinstance(e, Var):
        return num(1) if e.name == name else num(0)
    if isinstance(e, Neg):
        return neg(diff(e.operand, name))
    if isinstance(e, Bin):
        l, r = e.left, e.right
        dl, dr = diff(l, name), diff(r, name)
        if e.op == "+":
            return add(dl, dr)
        if e.op == "-":
            return sub(dl, dr)
        if e.op == "*":
            return add(mul(dl, r), mul(l, dr))
        if e.op == "/":
            return div(sub(mul(dl, r), mul(l, dr)), mul(r, r))
        # power rule; general case via exp/log when the exponent varies
        if isinstance(dr, Num) and dr.value == 0.0:
            if isinstance(r, Num):
                k = r.value
                if k == 0.0:
                    return num(0)
                return mul(mul(num(k), Bin((0, 0), "^", l, num(k - 1))), dl)
            return mul(mul(r, Bin((0, 0), "^", l, sub(r, num(1)))), dl)
        whole = Bin((0, 0), "^", l, r)
        return mul(whole, add(mul(dr, call("log", l)), mul(r, div(dl, l))))
    if isinstance(e, Call):
        inner = diff(e.arg, name)
        x = e.arg
        if e.fn == "sin":
            d = call("cos", x)
        elif e.fn == "cos":
            d = neg(call("sin", x))
        elif e.fn == "tan":
            d = add(num(1), mul(call("tan", x), call("tan", x)))
        elif e.fn == "exp":
            d = call("exp", x)
        elif e.fn == "log":
            d = div(num(1), x)
        elif e.fn == "sqrt":
            d = div(num(1), mul(num(2), call("sqrt", x)))
        elif e.fn == "atan":
            d = div(num(1), add(num(1), mul(x, x)))
        else:
            raise UnknownFunctionError(f"unknown function '{e.fn}'", e.span[0])
        return mul(d, inner)
    raise TypeError(f"not an expression node: {e!r}")


def subs(e: Expr, name: str, replacement: Expr) -> Expr:
    if isinstance(e, Num):
        return e
    if isinstance(e, Var):
        return replacement if e.name == name else e
    if isinstance(e, Neg):
        return Neg(e.span, subs(e.operand, name, replacement))
    if isinstance(e, Bin):
        return Bin(e.span, e.op, subs(e.left, name, replacement),
                   subs(e.right, name, replacement))
    if isinstance(e, Call):
        return Call(e.span, e.fn, subs(e.arg, name, replacement))
    raise TypeError(f"not an expression node: {e!r}")


# 3-vectors of expressions -----------------------------------------------

def dot3(a, b) -> Expr:
    return add(add(mul(a[0], b[0]), mul(a[1], b[1])), mul(a[2], b[2]))


def cross3(a, b):
    return (
        sub(mul(a[1], b[2]), mul(a[2], b[1])),
        sub(mul(a[2], b[0]), mul(a[0], b[2])),
        sub(mul(a[0], b[1]), mul(a[1], b[0])),
    )


def scale3(s, a):
    return (mul(s, a[0]), mul(s, a[1]), mul(s, a[2]))


def add3(a, b):
    return (add(a[0], b[0]), add(a[1], b[1]), add(a[2], b[2]))


def sub3(a, b):
    return (sub(a[0], b[0]), sub(a[1], b[1]), sub(a[2], b[2]))


def norm3(a) -> Expr:
    return call("sqrt", dot3(a, a))


# --------------------------------------------------------------------- MapDef

class MapDef:
    """A named map R^k -> R^m with expression components and fixed parameters."""

    def __init__(self, name: str, variables, components, params=None):
        self.name = name
        self.variables = tuple(variables)
        self.params = dict(params or {})
        comps = []
        for c in components:
            comps.append(parse(c) if isinstance(c, str) else c)
        self.components = tuple(comps)
        known = set(self.variables) | set(self.params) | set(CONSTANTS)
        for c in self.components:
            unknown = free_vars(c) - known
            if unknown:
                raise ExprError(
                    f"map '{name}': unbound identifiers {sorted(unknown)}")

    @property
    def n_components(self) -> int:
        return len(self.components)

    def _bindings(self, point):
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        if pt.size != len(self.variables):
            raise ValueError(
                f"map '{self.name}' expects {len(self.variables)} coordinates")
        b = dict(self.params)
        for nm, v in zip(self.variables, pt):
            b[nm] = float(v)
        return b

    def __call__(self, point) -> np.ndarray:
        b = self._bindings(point)
        return np.array([evaluate(c, b) for c in self.components], dtype=float)

    def eval_jet(self, point, order: int = 3):
        from .numkit import Jet
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        nvars = len(self.variables)
        b = {nm: Series.constant(v, nvars, order) for nm, v in self.params.items()}
        for i, nm in enumerate(self.variables):
            b[nm] = Series.variable(i, float(pt[i]), nvars, order)
        series = []
        for c in self.components:
            s = evaluate(c, b)
            if not isinstance(s, Series):
                s = Series.constant(float(s), nvars, order)
            series.append(s)
        return Jet.from_series(series, nvars, order)

    def eval_grid(self, arrays: dict) -> np.ndarray:
        """Evaluate on broadcastable numpy arrays; returns shape (m, ...)."""
        env = dict(self.params)
        env.update(arrays)
        shape = np.broadcast(*[np.asarray(v) for v in arrays.values()]).shape
        out = []
        for c in self.components:
            val = eval_numpy(c, env)
            out.append(np.broadcast_to(np.asarray(val, dtype=float), shape))
        return np.stack(out)

    def diff(self, name: str) -> "MapDef":
        return MapDef(f"d({self.name})/d{name}", self.variables,
                      [diff(c, name) for c in self.components], self.params)

    def sources(self):
        return [to_source(c) for c in self.components]

    def __repr__(self):
        return f"MapDef({self.name!r}, {self.variables}, {self.sources()})"
