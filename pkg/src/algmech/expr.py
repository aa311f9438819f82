"""Arithmetic expressions over named variables with exact derivatives.

Grammar (EBNF)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' INT)?
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')' | '-' atom

Known functions: ``sin cos exp ln sqrt neg``.  The power operator takes a
non-negative integer literal exponent only.

``eval_jet2`` propagates second-order forward jets through the tree, so the
returned gradient and Hessian carry no truncation error.  Each (expression,
variable-order) pair is compiled once into straight-line scalar Python and
cached; the integrators call the compiled form millions of times.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import EvaluationFault, ParseError

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "neg")

__all__ = [
    "Expression",
    "Num",
    "Var",
    "BinOp",
    "Pow",
    "Fun",
    "Neg",
    "parse",
    "evaluate",
    "eval_jet2",
    "compile_jet2",
    "free_variables",
    "FUNCTIONS",
]


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


class Expression:
    """Immutable expression tree node."""

    def __str__(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self})"


class Num(Expression):
    def __init__(self, value: float):
        self.value = float(value)

    def __str__(self) -> str:
        return repr(self.value)

    def __eq__(self, other) -> bool:
        return isinstance(other, Num) and (
            self.value == other.value
            or (math.isnan(self.value) and math.isnan(other.value))
        )


class Var(Expression):
    def __init__(self, name: str):
        self.name = name

    def __str__(self) -> str:
        return self.name

    def __eq__(self, other) -> bool:
        return isinstance(other, Var) and self.name == other.name


class BinOp(Expression):
    def __init__(self, op: str, lhs: Expression, rhs: Expression):
        assert op in "+-*/"
        self.op = op
        self.lhs = lhs
        self.rhs = rhs

    def __str__(self) -> str:
        return f"({self.lhs} {self.op} {self.rhs})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BinOp)
            and self.op == other.op
            and self.lhs == other.lhs
            and self.rhs == other.rhs
        )


class Pow(Expression):
    def __init__(self, base: Expression, exponent: int):
        self.base = base
        self.exponent = int(exponent)

    def __str__(self) -> str:
        return f"{self.base}^{self.exponent}"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Pow)
            and self.exponent == other.exponent
            and self.base == other.base
        )


class Fun(Expression):
    def __init__(self, name: str, arg: Expression):
        assert name in FUNCTIONS
        self.name = name
        self.arg = arg

    def __str__(self) -> str:
        return f"{self.name}({self.arg})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Fun) and self.name == other.name and self.arg == other.arg


class Neg(Expression):
    def __init__(self, arg: Expression):
        self.arg = arg

    def __str__(self) -> str:
        return f"(-{self.arg})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Neg) and self.arg == other.arg


def free_variables(e: Expression) -> frozenset:
    cached = getattr(e, "_fv", None)
    if cached is not None:
        return cached
    if isinstance(e, Num):
        fv = frozenset()
    elif isinstance(e, Var):
        fv = frozenset((e.name,))
    elif isinstance(e, BinOp):
        fv = free_variables(e.lhs) | free_variables(e.rhs)
    elif isinstance(e, Pow):
        fv = free_variables(e.base)
    elif isinstance(e, (Fun, Neg)):
        fv = free_variables(e.arg)
    else:  # pragma: no cover
        raise TypeError(f"not an expression node: {e!r}")
    e._fv = fv
    return fv


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}", offset)
        return self.advance()

    def parse(self) -> Expression:
        e = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {value!r}", offset)
        return e

    def expr(self) -> Expression:
        e = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                e = BinOp(value, e, self.term())
            else:
                return e

    def term(self) -> Expression:
        e = self.factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                e = BinOp(value, e, self.factor())
            else:
                return e

    def factor(self) -> Expression:
        e = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            kind, value, offset = self.peek()
            if kind != "num" or not value.isdigit():
                raise ParseError("exponent must be a non-negative integer literal", offset)
            self.advance()
            e = Pow(e, int(value))
        return e

    def atom(self) -> Expression:
        kind, value, offset = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "ident":
            self.advance()
            nkind, nvalue, _ = self.peek()
            if nkind == "op" and nvalue == "(":
                if value not in FUNCTIONS:
                    raise ParseError(f"unknown function {value!r}", offset)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                if value == "neg":
                    return Neg(arg)
                return Fun(value, arg)
            return Var(value)
        if kind == "op" and value == "(":
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.atom())
        if kind == "end":
            raise ParseError("unexpected end of input", offset)
        raise ParseError(f"unexpected token {value!r}", offset)


def parse(text: str) -> Expression:
    """Parse ``text`` into an expression tree.

    Printing the result with ``str`` and reparsing yields a structurally
    equal tree.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Plain evaluation
# ---------------------------------------------------------------------------


def evaluate(e: Expression, binding) -> float:
    """Evaluate ``e`` at ``binding`` (a mapping name -> value).

    Unbound variables, division by zero, ``ln``/``sqrt`` of an inadmissible
    argument and non-finite results all raise :class:`EvaluationFault`.
    """
    try:
        v = _eval(e, binding)
    except KeyError as exc:
        raise EvaluationFault(f"unbound variable {exc.args[0]!r}") from exc
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise EvaluationFault(str(exc)) from exc
    if not math.isfinite(v):
        raise EvaluationFault(f"non-finite result {v!r}")
    return v


def _eval(e: Expression, b) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(b[e.name])
    if isinstance(e, BinOp):
        x = _eval(e.lhs, b)
        y = _eval(e.rhs, b)
        if e.op == "+":
            return x + y
        if e.op == "-":
            return x - y
        if e.op == "*":
            return x * y
        return x / y
    if isinstance(e, Pow):
        return _eval(e.base, b) ** e.exponent
    if isinstance(e, Neg):
        return -_eval(e.arg, b)
    if isinstance(e, Fun):
        u = _eval(e.arg, b)
        if e.name == "sin":
            return math.sin(u)
        if e.name == "cos":
            return math.cos(u)
        if e.name == "exp":
            return math.exp(u)
        if e.name == "ln":
            return math.log(u)
        return math.sqrt(u)
    raise TypeError(f"not an expression node: {e!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# Second-order forward jets, compiled
# ---------------------------------------------------------------------------

_ZERO = "0.0"


class _Emitter:
    """Accumulates straight-line assignments; folds structural zeros."""

    def __init__(self):
        self.lines = []
        self.n = 0

    def tmp(self, src: str) -> str:
        name = f"t{self.n}"
        self.n += 1
        self.lines.append(f"    {name} = {src}")
        return name

    # token algebra ---------------------------------------------------
    def add(self, a: str, b: str) -> str:
        if a == _ZERO:
            return b
        if b == _ZERO:
            return a
        return self.tmp(f"{a} + {b}")

    def sub(self, a: str, b: str) -> str:
        if b == _ZERO:
            return a
        if a == _ZERO:
            return self.neg(b)
        return self.tmp(f"{a} - {b}")

    def neg(self, a: str) -> str:
        if a == _ZERO:
            return _ZERO
        return self.tmp(f"-{a}")

    def mul(self, a: str, b: str) -> str:
        if a == _ZERO or b == _ZERO:
            return _ZERO
        return self.tmp(f"{a} * {b}")


def _emit(em: _Emitter, e: Expression, index: dict):
    """Emit code for ``e``; returns (value token, grad tokens, hess tokens).

    ``grad`` is a list over the wrt variables, ``hess`` a dict keyed by
    (j, l) with j <= l; entries equal to "0.0" are structurally zero.
    """
    k = len(index)
    zeros_g = [_ZERO] * k
    zeros_h = {(j, l): _ZERO for j in range(k) for l in range(j, k)}

    if isinstance(e, Num):
        return repr(e.value), zeros_g, zeros_h
    if isinstance(e, Var):
        v = f"_v_{e.name}"
        g = list(zeros_g)
        if e.name in index:
            g[index[e.name]] = "1.0"
        return v, g, zeros_h
    if isinstance(e, Neg):
        av, ag, ah = _emit(em, e.arg, index)
        v = em.tmp(f"-{av}")
        return (
            v,
            [em.neg(t) for t in ag],
            {jl: em.neg(t) for jl, t in ah.items()},
        )
    if isinstance(e, BinOp):
        av, ag, ah = _emit(em, e.lhs, index)
        bv, bg, bh = _emit(em, e.rhs, index)
        if e.op == "+":
            v = em.tmp(f"{av} + {bv}")
            return (
                v,
                [em.add(x, y) for x, y in zip(ag, bg)],
                {jl: em.add(ah[jl], bh[jl]) for jl in ah},
            )
        if e.op == "-":
            v = em.tmp(f"{av} - {bv}")
            return (
                v,
                [em.sub(x, y) for x, y in zip(ag, bg)],
                {jl: em.sub(ah[jl], bh[jl]) for jl in ah},
            )
        if e.op == "*":
            v = em.tmp(f"{av} * {bv}")
            g = [em.add(em.mul(av, bg[j]), em.mul(bv, ag[j])) for j in range(k)]
            h = {}
            for (j, l), _ in ah.items():
                terms = em.add(em.mul(av, bh[(j, l)]), em.mul(bv, ah[(j, l)]))
                cross = em.add(em.mul(ag[j], bg[l]), em.mul(ag[l], bg[j]))
                h[(j, l)] = em.add(terms, cross)
            return v, g, h
        # division: f = a / b;  f' = (a' - f b') / b
        v = em.tmp(f"{av} / {bv}")
        needs_w = any(t != _ZERO for t in ag + bg) or any(
            t != _ZERO for t in list(ah.values()) + list(bh.values())
        )
        w = em.tmp(f"1.0 / {bv}") if needs_w else None
        g = []
        for j in range(k):
            num = em.sub(ag[j], em.mul(v, bg[j]))
            g.append(em.mul(num, w) if num != _ZERO else _ZERO)
        h = {}
        for (j, l), _ in ah.items():
            num = em.sub(ah[(j, l)], em.mul(v, bh[(j, l)]))
            num = em.sub(num, em.mul(g[j], bg[l]))
            num = em.sub(num, em.mul(g[l], bg[j]))
            h[(j, l)] = em.mul(num, w) if num != _ZERO else _ZERO
        return v, g, h
    if isinstance(e, Pow):
        n = e.exponent
        if n == 0:
            uv, _, _ = _emit(em, e.base, index)
            return em.tmp(f"{uv} ** 0"), zeros_g, zeros_h
        uv, ug, uh = _emit(em, e.base, index)
        if n == 1:
            return em.tmp(f"{uv} ** 1"), ug, uh
        v = em.tmp(f"{uv} ** {n}")
        live = any(t != _ZERO for t in ug) or any(t != _ZERO for t in uh.values())
        if not live:
            return v, zeros_g, zeros_h
        d1 = em.tmp(f"{float(n)!r} * {uv} ** {n - 1}")
        d2 = em.tmp(f"{float(n * (n - 1))!r} * {uv} ** {n - 2}")
        return _chain(em, v, d1, d2, ug, uh)
    if isinstance(e, Fun):
        uv, ug, uh = _emit(em, e.arg, index)
        live = any(t != _ZERO for t in ug) or any(t != _ZERO for t in uh.values())
        if e.name == "sin":
            v = em.tmp(f"_sin({uv})")
            if not live:
                return v, zeros_g, zeros_h
            d1 = em.tmp(f"_cos({uv})")
            d2 = em.tmp(f"-{v}")
        elif e.name == "cos":
            v = em.tmp(f"_cos({uv})")
            if not live:
                return v, zeros_g, zeros_h
            d1 = em.tmp(f"-_sin({uv})")
            d2 = em.tmp(f"-{v}")
        elif e.name == "exp":
            v = em.tmp(f"_exp({uv})")
            if not live:
                return v, zeros_g, zeros_h
            d1 = v
            d2 = v
        elif e.name == "ln":
            v = em.tmp(f"_log({uv})")
            if not live:
                return v, zeros_g, zeros_h
            d1 = em.tmp(f"1.0 / {uv}")
            d2 = em.tmp(f"-{d1} * {d1}")
        else:  # sqrt
            v = em.tmp(f"_sqrt({uv})")
            if not live:
                return v, zeros_g, zeros_h
            d1 = em.tmp(f"0.5 / {v}")
            d2 = em.tmp(f"-0.5 * {d1} / {uv}")
        return _chain(em, v, d1, d2, ug, uh)
    raise TypeError(f"not an expression node: {e!r}")  # pragma: no cover


def _chain(em: _Emitter, v: str, d1: str, d2: str, ug, uh):
    """Chain rule for a scalar function with first/second derivative tokens."""
    g = [em.mul(d1, t) for t in ug]
    h = {}
    for (j, l), t in uh.items():
        h[(j, l)] = em.add(em.mul(d1, t), em.mul(d2, em.mul(ug[j], ug[l])))
    return v, g, h


def compile_jet2(e: Expression, wrt):
    """Compile ``e`` into a callable ``binding -> (value, grad, hess)``.

    ``grad`` has one entry per name in ``wrt`` (in order); ``hess`` is the
    exactly-symmetric matrix of second derivatives.  Compilation is cached
    on the expression object.
    """
    wrt = tuple(wrt)
    cache = getattr(e, "_jet_cache", None)
    if cache is None:
        cache = {}
        e._jet_cache = cache
    fn = cache.get(wrt)
    if fn is None:
        fn = _build_jet2(e, wrt)
        cache[wrt] = fn
    return fn


def _build_jet2(e: Expression, wrt):
    index = {name: j for j, name in enumerate(wrt)}
    k = len(wrt)
    em = _Emitter()
    header = ["def _jet2(_b):"]
    for name in sorted(free_variables(e)):
        header.append(f"    _v_{name} = _b[{name!r}]")
    v, g, h = _emit(em, e, index)
    ret_h = ", ".join(h[(j, l)] for j in range(k) for l in range(j, k))
    ret_g = ", ".join(g)
    body = "\n".join(header + em.lines)
    body += f"\n    return {v}, ({ret_g}{',' if k == 1 else ''}), ({ret_h}{',' if k == 1 else ''})"
    ns = {
        "_sin": math.sin,
        "_cos": math.cos,
        "_exp": math.exp,
        "_log": math.log,
        "_sqrt": math.sqrt,
    }
    exec(compile(body, f"<jet2:{id(e)}>", "exec"), ns)
    raw = ns["_jet2"]
    pairs = [(j, l) for j in range(k) for l in range(j, k)]

    def jet(binding):
        try:
            v, g, h = raw(binding)
        except KeyError as exc:
            raise EvaluationFault(f"unbound variable {exc.args[0]!r}") from exc
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise EvaluationFault(str(exc)) from exc
        grad = np.array(g, dtype=float)
        hess = np.empty((k, k), dtype=float)
        for (j, l), t in zip(pairs, h):
            hess[j, l] = t
            hess[l, j] = t
        if not (
            math.isfinite(v) and np.isfinite(grad).all() and np.isfinite(hess).all()
        ):
            raise EvaluationFault("non-finite derivative result")
        return v, grad, hess

    jet.raw = raw
    return jet


def eval_jet2(e: Expression, binding, wrt):
    """Value, gradient and Hessian of ``e`` with respect to ``wrt``.

    Derivatives are exact (forward-mode second-order jets over the tree,
    no finite differencing); the Hessian is symmetric by construction and
    the value agrees bit-for-bit with :func:`evaluate`.
    """
    return compile_jet2(e, wrt)(binding)
