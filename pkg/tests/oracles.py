"""Independent reference computations used by the tests.

Every oracle avoids the package's own numerics: symbolic derivatives come
from sympy, roots from plain bisection, and the SU(2) chart is checked
against matrix exponentials.
"""

from __future__ import annotations

import numpy as np
import sympy as sp
from scipy.linalg import expm
from scipy.optimize import bisect

from saa.field_dsl import Binary, Const, ControlAffineSystem, Param, Pow, Unary, Var

_UNARY = {"neg": lambda a: -a, "sin": sp.sin, "cos": sp.cos, "exp": sp.exp, "log": sp.log, "sqrt": sp.sqrt,
          "tan": sp.tan, "tanh": sp.tanh, "sinh": sp.sinh, "cosh": sp.cosh}


def to_sympy(node, xs, params=None):
    """Expression tree to a sympy expression in the symbols ``xs``."""
    params = params or {}
    if isinstance(node, Const):
        return sp.Float(node.value, 30) if not float(node.value).is_integer() else sp.Integer(int(node.value))
    if isinstance(node, Var):
        return xs[node.index - 1]
    if isinstance(node, Param):
        return sp.Float(params[node.name], 30)
    if isinstance(node, Unary):
        return _UNARY[node.op](to_sympy(node.arg, xs, params))
    if isinstance(node, Pow):
        return to_sympy(node.base, xs, params) ** node.exponent
    if isinstance(node, Binary):
        a, b = to_sympy(node.left, xs, params), to_sympy(node.right, xs, params)
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b}[node.op]
    raise TypeError(type(node))


def sympy_jet(node, point, params=None):
    """Value, gradient, Hessian and third derivative by symbolic differentiation."""
    n = len(point)
    xs = sp.symbols(f"x1:{n + 1}")
    e = to_sympy(node, xs, params)
    sub = dict(zip(xs, [sp.Float(v, 30) for v in point]))
    val = float(e.evalf(subs=sub))
    g = np.array([float(sp.diff(e, a).evalf(subs=sub)) for a in xs])
    H = np.array([[float(sp.diff(e, a, b).evalf(subs=sub)) for b in xs] for a in xs])
    T3 = np.array([[[float(sp.diff(e, a, b, c).evalf(subs=sub)) for c in xs] for b in xs] for a in xs])
    return val, g, H, T3


class SymbolicHamiltonian:
    """Lifted Hamiltonians of a system and their canonical Poisson brackets, symbolically."""

    def __init__(self, sys: ControlAffineSystem):
        n = sys.n
        self.n = n
        self.q = sp.symbols(f"x1:{n + 1}")
        self.p = sp.symbols(f"p1:{n + 1}")
        params = sys.param_dict
        self.fields = [[to_sympy(c, self.q, params) for c in f] for f in sys.fields]
        self.h = [sum(pk * fk for pk, fk in zip(self.p, f)) for f in self.fields]
        self.hc = sum(hi ** 2 for hi in self.h[1:]) / 2

    def bracket(self, a, b):
        """``{a, b} = d_p a . d_q b - d_q a . d_p b``, so ``{h_a, h_b} = <p, [f_a, f_b]>``."""
        return sum(sp.diff(a, pk) * sp.diff(b, qk) - sp.diff(a, qk) * sp.diff(b, pk) for qk, pk in zip(self.q, self.p))

    def evaluate(self, expr, q, p) -> float:
        sub = {**dict(zip(self.q, q)), **dict(zip(self.p, p))}
        return float(sp.N(expr.subs(sub), 25))

    def aggregates(self, q, p) -> dict:
        h0, hc = self.h[0], self.hc
        h0c = self.bracket(h0, hc)
        return {
            "h0c": self.evaluate(h0c, q, p),
            "h00c": self.evaluate(self.bracket(h0, h0c), q, p),
            "hc0c": self.evaluate(self.bracket(hc, h0c), q, p),
        }

    def pair(self, i, j, q, p) -> float:
        return self.evaluate(self.bracket(self.h[i], self.h[j]), q, p)

    def nested(self, a, i, q, p) -> float:
        """``<p, [f_a, [f_0, f_i]]>``."""
        return self.evaluate(self.bracket(self.h[a], self.bracket(self.h[0], self.h[i])), q, p)


# ------------------------------------------------------------------ SU(2)

SU2_A = -0.5j * np.array([[0, 1], [1, 0]])
SU2_B = -0.5j * np.array([[0, -1j], [1j, 0]])
SU2_C = -0.5j * np.array([[1, 0], [0, -1]])


def su2_chart(q) -> np.ndarray:
    """``exp(x B) exp(y A) exp(z C)``."""
    x, y, z = q
    return expm(x * SU2_B) @ expm(y * SU2_A) @ expm(z * SU2_C)


def su2_conjugate_roots(k: float, T: float) -> list[float]:
    """Roots of ``2 - 2 cos(k t) - k t sin(k t)`` in ``(0, T]`` by bisection on a fine bracket grid."""
    f = lambda x: 2.0 - 2.0 * np.cos(x) - x * np.sin(x)
    xs = np.linspace(1e-3, k * T, 20001)
    fx = f(xs)
    roots = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], fx[:-1], fx[1:]):
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            roots.append(bisect(f, a, b, xtol=1e-15))
    return [x / k for x in roots]


# ------------------------------------------------- symplectic linear algebra

def omega(n: int) -> np.ndarray:
    return np.block([[np.zeros((n, n)), -np.eye(n)], [np.eye(n), np.zeros((n, n))]])


def is_lagrangian(B: np.ndarray, tol: float = 1e-10) -> bool:
    n = B.shape[0] // 2
    return B.shape[1] == n and np.linalg.matrix_rank(B, tol) == n and np.abs(B.T @ omega(n) @ B).max() < tol


def in_span(v: np.ndarray, B: np.ndarray, tol: float = 1e-10) -> bool:
    c, *_ = np.linalg.lstsq(B, v, rcond=None)
    return np.linalg.norm(B @ c - v) < tol * max(1.0, np.linalg.norm(v))


# ------------------------------------------------------- random test systems

def _random_poly(rng, names=("x", "y", "z"), max_terms=3) -> str:
    monos = ["1", *names, *(f"{a}*{b}" for i, a in enumerate(names) for b in names[i:])]
    picks = rng.choice(len(monos), size=rng.integers(1, max_terms + 1), replace=False)
    return " + ".join(f"({rng.uniform(-1, 1):.3f})*{monos[k]}" for k in picks)


def random_polynomial_system(rng):
    """Random quadratic system with ``n = 3``, ``m = 2`` as a config document.

    The controlled fields are kept close to a frame of the plane ``x, y`` so
    that ``h_I`` does not vanish on typical covectors.
    """
    drift = [_random_poly(rng) for _ in range(3)]
    f1 = ["1", _random_poly(rng, max_terms=1), _random_poly(rng, max_terms=2)]
    f2 = [_random_poly(rng, max_terms=1), "1", _random_poly(rng, max_terms=2)]
    return {"n": 3, "m": 2, "fields": [drift, f1, f2]}
