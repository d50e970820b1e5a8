"""Control-affine systems from presets or a small expression language.

Expressions are parsed into an immutable tree.  Derivatives of the field
components are obtained by forward propagation of truncated Taylor
coefficients through that tree: :func:`eval_jet` interprets the tree up to
third order at a single point, while :class:`ControlAffineSystem` compiles all
of its components into straight-line code (second order, with structural
sparsity folded away) for the hot loops of the integrators.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from saa.errors import (
    ConfigError,
    DomainError,
    DslSyntaxError,
    MissingParameter,
    UnknownIdentifier,
    UnknownPreset,
)

__all__ = [
    "Const", "Var", "Param", "Unary", "Binary", "Pow", "ExprAst",
    "Jet3", "ControlAffineSystem",
    "parse_field_expr", "pretty", "eval_jet", "builtin_system",
    "system_from_config", "load_system_config", "PRESETS",
]


# --------------------------------------------------------------------------- AST

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # one-based: Var(1) is x1


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # neg | sin | cos | exp | sqrt
    arg: "ExprAst"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * /
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Pow:
    base: "ExprAst"
    exponent: int


ExprAst = Union[Const, Var, Param, Unary, Binary, Pow]

FUNCS = ("sin", "cos", "exp", "sqrt", "neg")


# ------------------------------------------------------------------------ parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(source: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1, source)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


def coordinate_names(n: int) -> dict[str, int]:
    names = {f"x{i + 1}": i + 1 for i in range(n)}
    if n <= 3:
        names.update({a: i + 1 for i, a in enumerate("xyz"[:n])})
    return names


class _Parser:
    def __init__(self, source: str, n: int, params: Sequence[str] | None):
        self.source = source
        self.toks = _tokenize(source)
        self.i = 0
        self.n = n
        self.coords = coordinate_names(n)
        self.params = None if params is None else set(params)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None, cls=DslSyntaxError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.col, self.source)

    def take(self, kind: str, text: str | None = None) -> _Tok:
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            got = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self.error(f"expected {want!r}, got {got}")
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def parse(self) -> ExprAst:
        node = self.expr()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self) -> ExprAst:
        # a leading minus negates the whole first term: "-y/2" -> neg(y/2)
        if self.at("-"):
            self.i += 1
            node: ExprAst = Unary("neg", self.term())
        else:
            node = self.term()
        while self.at("+") or self.at("-"):
            op = self.take("op").text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> ExprAst:
        node = self.factor()
        while self.at("*") or self.at("/"):
            op = self.take("op").text
            if self.at("-"):
                self.i += 1
                rhs: ExprAst = Unary("neg", self.factor())
            else:
                rhs = self.factor()
            node = Binary(op, node, rhs)
        return node

    def factor(self) -> ExprAst:
        node = self.base()
        if self.at("^"):
            self.i += 1
            sign = 1
            if self.at("-"):
                self.i += 1
                sign = -1
            tok = self.tok
            if tok.kind != "num":
                raise self.error("non-constant exponent in pow", tok)
            if not re.fullmatch(r"\d+", tok.text):
                raise self.error("exponent must be an integer", tok)
            self.i += 1
            node = Pow(node, sign * int(tok.text))
        return node

    def base(self) -> ExprAst:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            node = self.expr()
            self.take("op", ")")
            return node
        if tok.kind == "ident":
            self.i += 1
            if tok.text in FUNCS and self.at("("):
                self.i += 1
                arg = self.expr()
                self.take("op", ")")
                return Unary(tok.text, arg)
            if tok.text in self.coords:
                return Var(self.coords[tok.text])
            if self.at("("):
                raise self.error(f"unknown function {tok.text!r}", tok, UnknownIdentifier)
            if re.fullmatch(r"x\d+", tok.text):
                raise self.error(f"coordinate {tok.text} out of range for n={self.n}", tok, UnknownIdentifier)
            if tok.text in FUNCS:
                raise self.error(f"function {tok.text!r} needs an argument", tok)
            if self.params is not None and tok.text not in self.params:
                raise self.error(f"unknown identifier {tok.text!r}", tok, UnknownIdentifier)
            return Param(tok.text)
        got = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise self.error(f"unexpected {got}", tok)


def parse_field_expr(source: str, n: int = 3, params: Sequence[str] | None = None) -> ExprAst:
    """Parse one field component.

    ``n`` fixes the admissible coordinates (``x1..xn``, plus ``x, y, z`` when
    ``n <= 3``).  With ``params=None`` every other identifier becomes a
    parameter; otherwise identifiers outside ``params`` are rejected.
    """
    return _Parser(source, n, params).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: ExprAst) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Pow):
        return 3
    if isinstance(node, Const) and node.value < 0:
        return 0
    return 4


def pretty(node: ExprAst) -> str:
    """Print an expression so that parsing the output gives back ``node``."""
    if isinstance(node, Const):
        if node.value < 0:
            return f"neg({-node.value!r})"
        return repr(abs(float(node.value)))  # drops the sign of -0.0
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Unary):
        return f"{node.op}({pretty(node.arg)})"
    if isinstance(node, Pow):
        b = pretty(node.base)
        if _prec(node.base) < 4:
            b = f"({b})"
        return f"{b}^{node.exponent}"
    p = _PREC[node.op]
    left, right = pretty(node.left), pretty(node.right)
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left}{node.op}{right}"


def _bind(node: ExprAst, params: Mapping[str, float]) -> None:
    if isinstance(node, Param):
        if node.name not in params:
            raise MissingParameter(f"parameter {node.name!r} is not bound")
    elif isinstance(node, Unary):
        _bind(node.arg, params)
    elif isinstance(node, Pow):
        _bind(node.base, params)
    elif isinstance(node, Binary):
        _bind(node.left, params)
        _bind(node.right, params)


def _max_var(node: ExprAst) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Unary):
        return _max_var(node.arg)
    if isinstance(node, Pow):
        return _max_var(node.base)
    if isinstance(node, Binary):
        return max(_max_var(node.left), _max_var(node.right))
    return 0


# ------------------------------------------------------------------ jets (order 3)

@dataclass(frozen=True)
class Jet3:
    value: float
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray


def _sym3(g: np.ndarray, H: np.ndarray) -> np.ndarray:
    t = np.einsum("i,jk->ijk", g, H)
    return t + t.transpose(1, 0, 2) + t.transpose(1, 2, 0)


def _outer3(g: np.ndarray) -> np.ndarray:
    return np.einsum("i,j,k->ijk", g, g, g)


def _compose(j: Jet3, d0: float, d1: float, d2: float, d3: float) -> Jet3:
    g, H = j.grad, j.hess
    return Jet3(
        d0,
        d1 * g,
        d1 * H + d2 * np.outer(g, g),
        d1 * j.third + d2 * _sym3(g, H) + d3 * _outer3(g),
    )


def _power_derivs(x: float, k: int) -> tuple[float, float, float, float]:
    out = []
    c = 1.0
    for order in range(4):
        e = k - order
        if c == 0.0:
            out.append(0.0)
        else:
            out.append(c * x**e)
        c *= e
    return tuple(out)


def eval_jet(expr: ExprAst, point: Sequence[float], params: Mapping[str, float] | None = None) -> Jet3:
    """Value and partial derivatives up to third order of ``expr`` at ``point``."""
    x = np.asarray(point, dtype=float)
    n = x.shape[0]
    if _max_var(expr) > n:
        raise ValueError(f"expression uses coordinate x{_max_var(expr)} but point has dimension {n}")
    params = dict(params or {})
    zero_g, zero_H, zero_T = np.zeros(n), np.zeros((n, n)), np.zeros((n, n, n))

    def const(v: float) -> Jet3:
        return Jet3(float(v), zero_g, zero_H, zero_T)

    def ev(node: ExprAst) -> Jet3:
        if isinstance(node, Const):
            return const(node.value)
        if isinstance(node, Param):
            if node.name not in params:
                raise MissingParameter(f"parameter {node.name!r} is not bound")
            return const(params[node.name])
        if isinstance(node, Var):
            g = np.zeros(n)
            g[node.index - 1] = 1.0
            return Jet3(float(x[node.index - 1]), g, zero_H, zero_T)
        if isinstance(node, Unary):
            a = ev(node.arg)
            u = a.value
            if node.op == "neg":
                return Jet3(-u, -a.grad, -a.hess, -a.third)
            if node.op == "sin":
                s, c = math.sin(u), math.cos(u)
                return _compose(a, s, c, -s, -c)
            if node.op == "cos":
                s, c = math.sin(u), math.cos(u)
                return _compose(a, c, -s, -c, s)
            if node.op == "exp":
                e = math.exp(u)
                return _compose(a, e, e, e, e)
            if node.op == "sqrt":
                if u <= 0.0:
                    raise DomainError(f"sqrt of non-positive value {u!r} in {pretty(node)}", node, x)
                s = math.sqrt(u)
                return _compose(a, s, 0.5 / s, -0.25 / (s * u), 0.375 / (s * u * u))
            raise ValueError(f"unknown unary op {node.op!r}")
        if isinstance(node, Pow):
            a = ev(node.base)
            if node.exponent < 0 and a.value == 0.0:
                raise DomainError(f"negative power of zero in {pretty(node)}", node, x)
            return _compose(a, *_power_derivs(a.value, node.exponent))
        a, b = ev(node.left), ev(node.right)
        if node.op == "+":
            return Jet3(a.value + b.value, a.grad + b.grad, a.hess + b.hess, a.third + b.third)
        if node.op == "-":
            return Jet3(a.value - b.value, a.grad - b.grad, a.hess - b.hess, a.third - b.third)
        if node.op == "/":
            if b.value == 0.0:
                raise DomainError(f"division by zero in {pretty(node)}", node, x)
            v = b.value
            b = _compose(b, 1.0 / v, -1.0 / v**2, 2.0 / v**3, -6.0 / v**4)
        ua, ub = a.value, b.value
        return Jet3(
            ua * ub,
            ua * b.grad + ub * a.grad,
            ua * b.hess + ub * a.hess + np.outer(a.grad, b.grad) + np.outer(b.grad, a.grad),
            ua * b.third + ub * a.third + _sym3(a.grad, b.hess) + _sym3(b.grad, a.hess),
        )

    return ev(expr)


# ------------------------------------------------------- compiled second-order jets

class _Emitter:
    """Generates straight-line code propagating (value, grad, hess) coefficients.

    Coefficients are either Python floats (folded at compile time) or names of
    temporaries; zero entries of gradients and Hessians are never emitted.
    """

    def __init__(self, n: int, params: Mapping[str, float]):
        self.n = n
        self.params = params
        self.lines: list[str] = []
        self.k = 0

    def tmp(self, expr: str) -> str:
        name = f"t{self.k}"
        self.k += 1
        self.lines.append(f"    {name} = {expr}")
        return name

    @staticmethod
    def lit(c) -> str:
        return repr(c) if isinstance(c, float) else c

    def mul(self, a, b):
        if isinstance(a, float) and isinstance(b, float):
            return a * b
        if a == 0.0 or b == 0.0:
            return 0.0
        if a == 1.0:
            return b
        if b == 1.0:
            return a
        if a == -1.0:
            return self.tmp(f"-{b}")
        if b == -1.0:
            return self.tmp(f"-{a}")
        return self.tmp(f"{self.lit(a)}*{self.lit(b)}")

    def add(self, *terms):
        const = sum(t for t in terms if isinstance(t, float))
        names = [t for t in terms if not isinstance(t, float)]
        if not names:
            return float(const)
        parts = names + ([repr(const)] if const != 0.0 else [])
        if len(parts) == 1:
            return parts[0]
        return self.tmp(" + ".join(parts))

    # a jet is (value, {i: coeff}, {(i, j): coeff}) with i <= j
    def const(self, v: float):
        return (float(v), {}, {})

    def compose(self, a, d0, d1, d2):
        _, g, H = a
        grad = {i: self.mul(d1, gi) for i, gi in g.items()}
        hess: dict = {}
        for ij, hij in H.items():
            hess[ij] = [self.mul(d1, hij)]
        keys = sorted(g)
        for ii, i in enumerate(keys):
            for j in keys[ii:]:
                hess.setdefault((i, j), []).append(self.mul(d2, self.mul(g[i], g[j])))
        return (d0, {k: v for k, v in grad.items() if v != 0.0},
                {k: s for k, v in hess.items() if (s := self.add(*v)) != 0.0})

    def product(self, a, b):
        ua, ga, Ha = a
        ub, gb, Hb = b
        val = self.mul(ua, ub)
        grad = {}
        for i in set(ga) | set(gb):
            grad[i] = self.add(self.mul(ua, gb.get(i, 0.0)), self.mul(ub, ga.get(i, 0.0)))
        hess: dict = {}
        for ij in set(Ha) | set(Hb):
            hess[ij] = [self.mul(ua, Hb.get(ij, 0.0)), self.mul(ub, Ha.get(ij, 0.0))]
        for i, gai in ga.items():
            for j, gbj in gb.items():
                key = (min(i, j), max(i, j))
                term = self.mul(gai, gbj)
                hess.setdefault(key, []).append(term)
                if i == j:
                    hess[key].append(term)
        return (val, {k: v for k, v in grad.items() if v != 0.0},
                {k: s for k, v in hess.items() if (s := self.add(*v)) != 0.0})

    def emit(self, node: ExprAst):
        if isinstance(node, Const):
            return self.const(node.value)
        if isinstance(node, Param):
            return self.const(self.params[node.name])
        if isinstance(node, Var):
            return (f"x{node.index - 1}", {node.index - 1: 1.0}, {})
        if isinstance(node, Unary):
            a = self.emit(node.arg)
            u = a[0]
            if node.op == "neg":
                return self.compose(a, self.mul(-1.0, u), -1.0, 0.0)
            if isinstance(u, float):
                return self.const(eval_jet(node, np.zeros(max(self.n, 1)), self.params).value)
            if node.op == "sin":
                s, c = self.tmp(f"sin({u})"), self.tmp(f"cos({u})")
                return self.compose(a, s, c, self.tmp(f"-{s}"))
            if node.op == "cos":
                s, c = self.tmp(f"sin({u})"), self.tmp(f"cos({u})")
                return self.compose(a, c, self.tmp(f"-{s}"), self.tmp(f"-{c}"))
            if node.op == "exp":
                e = self.tmp(f"exp({u})")
                return self.compose(a, e, e, e)
            if node.op == "sqrt":
                s = self.tmp(f"sqrt({u})")
                d1 = self.tmp(f"0.5/{s}")
                d2 = self.tmp(f"-0.5*{d1}/{u}")
                return self.compose(a, s, d1, d2)
            raise ValueError(node.op)
        if isinstance(node, Pow):
            a = self.emit(node.base)
            u, k = a[0], node.exponent
            if isinstance(u, float):
                return self.const(u**k)
            if k == 0:
                return self.const(1.0)
            if k == 1:
                return a
            d0 = self.tmp(f"{u}**{k}")
            d1 = self.tmp(f"{float(k)!r}*{u}**{k - 1}") if k != 2 else self.mul(2.0, u)
            d2 = self.tmp(f"{float(k * (k - 1))!r}*{u}**{k - 2}") if k != 2 else 2.0
            return self.compose(a, d0, d1, d2)
        a, b = self.emit(node.left), self.emit(node.right)
        if node.op in "+-":
            s = 1.0 if node.op == "+" else -1.0
            val = self.add(a[0], self.mul(s, b[0]))
            grad = {i: self.add(a[1].get(i, 0.0), self.mul(s, b[1].get(i, 0.0))) for i in set(a[1]) | set(b[1])}
            hess = {ij: self.add(a[2].get(ij, 0.0), self.mul(s, b[2].get(ij, 0.0))) for ij in set(a[2]) | set(b[2])}
            return (val, {k: v for k, v in grad.items() if v != 0.0}, {k: v for k, v in hess.items() if v != 0.0})
        if node.op == "/":
            v = b[0]
            if isinstance(v, float):
                if v == 0.0:
                    raise DomainError(f"division by constant zero in {pretty(node)}", node)
                b = self.const(1.0 / v)
            else:
                iv = self.tmp(f"1.0/{v}")
                d1 = self.tmp(f"-{iv}*{iv}")
                d2 = self.tmp(f"-2.0*{d1}*{iv}")
                b = self.compose(b, iv, d1, d2)
        return self.product(a, b)


def _compile(components: Sequence[ExprAst], n: int, params: Mapping[str, float]):
    em = _Emitter(n, params)
    em.lines.append("def _jets(x, out):")
    for i in range(n):
        em.lines.append(f"    x{i} = x[{i}]")
    assigns = []
    for c, node in enumerate(components):
        val, g, H = em.emit(node)
        assigns.append(f"    out[{c}, 0] = {em.lit(val)}")
        for i, gi in g.items():
            assigns.append(f"    out[{c}, {1 + i}] = {em.lit(gi)}")
        for (i, j), hij in H.items():
            assigns.append(f"    out[{c}, {1 + n + i * n + j}] = {em.lit(hij)}")
            if i != j:
                assigns.append(f"    out[{c}, {1 + n + j * n + i}] = {em.lit(hij)}")
    src = "\n".join(em.lines + assigns) + "\n"
    scalar_ns = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "sqrt": math.sqrt}
    batch_ns = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
    exec(compile(src, "<saa-jets>", "exec"), scalar_ns)
    exec(compile(src, "<saa-jets>", "exec"), batch_ns)
    return scalar_ns["_jets"], batch_ns["_jets"], src


# ------------------------------------------------------------------------ systems

@dataclass(frozen=True)
class ControlAffineSystem:
    """``q' = f_0(q) + sum_j u_j f_j(q)`` with components given as expression trees.

    ``fields[a][k]`` is component ``k`` of field ``f_a``; ``fields[0]`` is the
    drift.  Parameters are bound at construction and folded into the compiled
    jet evaluator.
    """

    n: int
    m: int
    fields: tuple
    params: tuple = ()
    name: str = "custom"
    _compiled: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("state dimension n must be >= 2")
        if self.m < 1:
            raise ValueError("control dimension m must be >= 1")
        flds = tuple(tuple(comp) for comp in self.fields)
        if len(flds) != self.m + 1 or any(len(f) != self.n for f in flds):
            raise ValueError(f"expected {self.m + 1} fields with {self.n} components each")
        object.__setattr__(self, "fields", flds)
        params = dict(self.params)
        object.__setattr__(self, "params", tuple(sorted((k, float(v)) for k, v in params.items())))
        for f in flds:
            for comp in f:
                if _max_var(comp) > self.n:
                    raise ValueError("field component references a coordinate beyond n")
                _bind(comp, params)
        comps = [comp for f in flds for comp in f]
        object.__setattr__(self, "_compiled", _compile(comps, self.n, params))

    @property
    def param_dict(self) -> dict[str, float]:
        return dict(self.params)

    def component_jet(self, a: int, k: int, q: Sequence[float]) -> Jet3:
        return eval_jet(self.fields[a][k], q, self.param_dict)

    def _locate_domain_error(self, q) -> None:
        for f in self.fields:
            for comp in f:
                eval_jet(comp, q, self.param_dict)

    def jets(self, q) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Field values, Jacobians and second derivatives at ``q``.

        ``q`` may be a single point of shape ``(n,)`` or a batch ``(B, n)``.
        Returns ``F[..., a, k]``, ``DF[..., a, k, i]`` and ``D2F[..., a, k, i, j]``.
        """
        q = np.asarray(q, dtype=float)
        n, nf = self.n, self.m + 1
        width = 1 + n + n * n
        scalar_fn, batch_fn, _ = self._compiled
        if q.ndim == 1:
            out = np.zeros((nf * n, width))
            try:
                scalar_fn(q.tolist(), out)
            except (ZeroDivisionError, ValueError, OverflowError) as exc:
                self._locate_domain_error(q)
                raise DomainError(f"jet evaluation failed ({exc})", None, q) from exc
            if not np.all(np.isfinite(out)):
                self._locate_domain_error(q)
                raise DomainError("non-finite jet", None, q)
            out = out.reshape(nf, n, width)
        else:
            B = q.shape[0]
            out = np.zeros((nf * n, width, B))
            with np.errstate(all="ignore"):
                batch_fn(q.T, out)
            if not np.all(np.isfinite(out)):
                bad = int(np.argmax(~np.all(np.isfinite(out), axis=(0, 1))))
                self._locate_domain_error(q[bad])
                raise DomainError("non-finite jet", None, q[bad])
            out = np.moveaxis(out.reshape(nf, n, width, B), -1, 0)
        F = out[..., 0]
        DF = out[..., 1:1 + n]
        D2F = out[..., 1 + n:].reshape(out.shape[:-1] + (n, n))
        return F, DF, D2F

    def to_config(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "fields": [[pretty(c) for c in f] for f in self.fields],
            "params": self.param_dict,
        }


def _system_from_strings(n: int, m: int, fields: Sequence[Sequence[str]], params: Mapping[str, float],
                         name: str = "custom") -> ControlAffineSystem:
    names = list(params)
    parsed = tuple(tuple(parse_field_expr(s, n, names) for s in f) for f in fields)
    return ControlAffineSystem(n, m, parsed, tuple(params.items()), name)


_SU2_XA = ("sin(z)/cos(y)", "cos(z)", "sin(y)*sin(z)/cos(y)")
_SU2_XB = ("cos(z)/cos(y)", "-sin(z)", "sin(y)*cos(z)/cos(y)")

PRESETS: dict[str, tuple[int, int, list[list[str]]]] = {
    # X = d_x - y/2 d_z, Y = d_y + x/2 d_z, Z = d_z; drift alpha X + beta Y + gamma Z
    "heisenberg_drift": (3, 2, [
        ["alpha", "beta", "-alpha*y/2 + beta*x/2 + gamma"],
        ["1", "0", "-y/2"],
        ["0", "1", "x/2"],
    ]),
    "martinet_drift": (3, 2, [
        ["alpha", "beta", "gamma"],
        ["1", "0", "0"],
        ["0", "1", "x^2/2"],
    ]),
    # left-invariant fields of SU(2) in the chart U = exp(x B) exp(y A) exp(z C)
    "su2_left_invariant": (3, 2, [
        ["alpha*sin(z)/cos(y) + beta*cos(z)/cos(y)",
         "alpha*cos(z) - beta*sin(z)",
         "(alpha*sin(z) + beta*cos(z))*sin(y)/cos(y) + gamma"],
        list(_SU2_XA),
        list(_SU2_XB),
    ]),
}


def builtin_system(name: str, params: Mapping[str, float]) -> ControlAffineSystem:
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    missing = [k for k in ("alpha", "beta", "gamma") if k not in params]
    if missing:
        raise MissingParameter(f"preset {name!r} needs parameters {missing}")
    n, m, fields = PRESETS[name]
    bound = {k: float(params[k]) for k in ("alpha", "beta", "gamma")}
    return _system_from_strings(n, m, fields, bound, name)


def system_from_config(doc: Mapping) -> ControlAffineSystem:
    """Build a system from ``{preset, params}`` or ``{n, m, fields, params}``."""
    if not isinstance(doc, Mapping):
        raise ConfigError("system config must be a JSON object")
    params = doc.get("params", {}) or {}
    if not isinstance(params, Mapping):
        raise ConfigError("'params' must be an object")
    if "preset" in doc:
        return builtin_system(doc["preset"], params)
    try:
        n, m, fields = int(doc["n"]), int(doc["m"]), doc["fields"]
    except KeyError as exc:
        raise ConfigError(f"system config is missing key {exc.args[0]!r}") from exc
    if not isinstance(fields, list) or not all(isinstance(f, list) for f in fields):
        raise ConfigError("'fields' must be a list of lists of strings")
    return _system_from_strings(n, m, fields, {k: float(v) for k, v in params.items()})


def load_system_config(path: str | Path) -> ControlAffineSystem:
    with open(path, encoding="utf-8") as fh:
        return system_from_config(json.load(fh))
