"""Boundary expressions with forward-mode derivatives.

An expression such as ``"theta - 2.0944"`` or ``"(y - 1)*(y - 2)"`` is parsed
once into a tree of closures.  The same tree evaluates plain floats, numpy
arrays and (nested) dual numbers, so value, gradient and Hessian all come
from one compiled object.
"""

from __future__ import annotations

import ast
import math
from typing import Callable, Sequence

import numpy as np

from .errors import ExpressionError


class Dual:
    """Dual number ``re + eps * e`` with ``e**2 = 0``.

    Both parts may be floats, numpy arrays or Duals themselves; nesting two
    levels gives exact second derivatives.
    """

    __slots__ = ("re", "eps")

    def __init__(self, re, eps=0.0):
        self.re = re
        self.eps = eps

    def __repr__(self):
        return f"Dual({self.re!r}, {self.eps!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re + other.re, self.eps + other.eps)
        return Dual(self.re + other, self.eps)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re - other.re, self.eps - other.eps)
        return Dual(self.re - other, self.eps)

    def __rsub__(self, other):
        return Dual(other - self.re, -self.eps)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re * other.re, self.re * other.eps + self.eps * other.re)
        return Dual(self.re * other, self.eps * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.re
            return Dual(self.re * inv, (self.eps * other.re - self.re * other.eps) * inv * inv)
        return Dual(self.re / other, self.eps / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.re
        return Dual(other * inv, -other * self.eps * inv * inv)

    def __neg__(self):
        return Dual(-self.re, -self.eps)

    def __pos__(self):
        return self

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)


def _unary(f, df):
    def op(x):
        if isinstance(x, Dual):
            return Dual(op(x.re), df(x.re) * x.eps)
        return f(x)

    return op


sin = _unary(np.sin, lambda a: cos(a))
cos = _unary(np.cos, lambda a: -sin(a))
exp = _unary(np.exp, lambda a: exp(a))
ln = _unary(np.log, lambda a: 1.0 / a)
sqrt = _unary(np.sqrt, lambda a: 0.5 / sqrt(a))
tan = _unary(np.tan, lambda a: 1.0 + tan(a) * tan(a))


def power(base, expo):
    if not isinstance(expo, Dual):
        if not isinstance(base, Dual):
            return np.power(base, expo)
        if expo == 0:
            return 1.0
        return Dual(power(base.re, expo), expo * power(base.re, expo - 1) * base.eps)
    # variable exponent: base**expo = exp(expo * ln(base))
    return exp(expo * ln(base))


FUNCTIONS: dict[str, tuple[Callable, int]] = {
    "sin": (sin, 1),
    "cos": (cos, 1),
    "tan": (tan, 1),
    "exp": (exp, 1),
    "ln": (ln, 1),
    "log": (ln, 1),
    "sqrt": (sqrt, 1),
    "pow": (power, 2),
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: power,
    ast.BitXor: power,  # "x^2" reads as a power, never as xor
}


def _compile(node, names: dict[str, int]):
    if isinstance(node, ast.Expression):
        return _compile(node.body, names)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported literal {node.value!r}")
        val = float(node.value)
        return lambda env: val
    if isinstance(node, ast.Name):
        if node.id in names:
            idx = names[node.id]
            return lambda env: env[idx]
        if node.id in CONSTANTS:
            val = CONSTANTS[node.id]
            return lambda env: val
        raise ExpressionError(f"unknown identifier {node.id!r}; expected one of {sorted(names)}")
    if isinstance(node, ast.UnaryOp):
        inner = _compile(node.operand, names)
        if isinstance(node.op, ast.USub):
            return lambda env: -inner(env)
        if isinstance(node.op, ast.UAdd):
            return inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left = _compile(node.left, names)
        right = _compile(node.right, names)
        return lambda env: op(left(env), right(env))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        if node.func.id not in FUNCTIONS or node.keywords:
            raise ExpressionError(f"unsupported function {node.func.id!r}")
        fn, arity = FUNCTIONS[node.func.id]
        if len(node.args) != arity:
            raise ExpressionError(f"{node.func.id} takes {arity} argument(s)")
        args = [_compile(a, names) for a in node.args]
        if arity == 1:
            (a0,) = args
            return lambda env: fn(a0(env))
        a0, a1 = args
        return lambda env: fn(a0(env), a1(env))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


class PsiExpr:
    """Compiled real-valued expression over chart coordinates.

    Args:
        source: expression text.
        variables: coordinate names, in chart order.
        aliases: extra names mapped onto coordinate indices.
    """

    def __init__(self, source: str, variables: Sequence[str], aliases: dict[str, int] | None = None):
        self.source = source
        self.variables = tuple(variables)
        names = {v: i for i, v in enumerate(self.variables)}
        for k, i in (aliases or {}).items():
            names.setdefault(k, i)
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
        self._fn = _compile(tree, names)
        self._aliases = dict(aliases or {})
        self.dim = len(self.variables)

    def __repr__(self):
        return f"PsiExpr({self.source!r})"

    def negated(self) -> "PsiExpr":
        return PsiExpr(f"-({self.source})", self.variables, self._aliases)

    def _env(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ExpressionError(f"expected {self.dim} coordinates, got shape {x.shape}")
        return [x[..., i] for i in range(self.dim)]

    def value(self, x):
        """Evaluate at a point (shape ``(n,)``) or a batch (shape ``(..., n)``)."""
        env = self._env(x)
        out = self._fn(env)
        return np.broadcast_to(np.asarray(out, dtype=float), env[0].shape) * 1.0

    __call__ = value

    def gradient(self, x):
        """Partial derivatives in chart coordinates, shape ``(..., n)``."""
        env = self._env(x)
        cols = []
        for i in range(self.dim):
            denv = [Dual(c, 1.0 if k == i else 0.0) for k, c in enumerate(env)]
            out = self._fn(denv)
            cols.append(np.broadcast_to(out.eps if isinstance(out, Dual) else 0.0, env[0].shape))
        return np.stack(cols, axis=-1).astype(float)

    def hessian(self, x):
        """Second partials via nested duals, shape ``(..., n, n)``."""
        env = self._env(x)
        n = self.dim
        shape = env[0].shape
        hess = np.zeros(shape + (n, n))
        for i in range(n):
            for j in range(i, n):
                denv = [
                    Dual(Dual(c, 1.0 if k == i else 0.0), Dual(1.0 if k == j else 0.0, 0.0))
                    for k, c in enumerate(env)
                ]
                out = self._fn(denv)
                hij = 0.0
                if isinstance(out, Dual) and isinstance(out.eps, Dual):
                    hij = out.eps.eps
                hess[..., i, j] = hij
                hess[..., j, i] = hij
        return hess

    def value_and_gradient(self, x):
        return self.value(x), self.gradient(x)
