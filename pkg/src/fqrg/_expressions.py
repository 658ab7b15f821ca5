"""Evaluation of fixture expressions such as ``z^2*w1@w1 + (1+z)*w2@w2``.

Only a small arithmetic subset of Python syntax is accepted: names, integer
literals, ``+ - * ^`` and ``@`` for the tensor product. Names resolve to
algebra elements, basis forms or integers (for table parameters).
"""

from __future__ import annotations

import ast
import itertools
from typing import Mapping

import numpy as np

from .algebra import Algebra, Element
from .f2_linalg import as_f2

__all__ = ["Form", "ExpressionError", "evaluate", "basis_forms", "condition_set"]


class ExpressionError(ValueError):
    pass


class Form:
    """Tensor ``coeffs[mu, i1, ..., ir] x^mu w^i1 (x) ... (x) w^ir`` with left coefficients.

    Rank 0 forms are functions. Right multiplication and tensor products
    need the commutation relations ``a`` of a calculus.
    """

    __slots__ = ("algebra", "a", "coeffs")

    def __init__(self, algebra: Algebra, coeffs, a=None):
        self.algebra = algebra
        self.coeffs = as_f2(coeffs)
        self.a = a

    @property
    def rank(self) -> int:
        return self.coeffs.ndim - 1

    @classmethod
    def function(cls, f: Element, a=None) -> "Form":
        return cls(f.algebra, f.coeffs, a)

    def _lift(self, other) -> "Form":
        if isinstance(other, Form):
            return other
        if isinstance(other, Element):
            return Form.function(other, self.a)
        if isinstance(other, (int, np.integer)):
            if self.rank and int(other) & 1:
                raise ExpressionError("cannot add a function to a form")
            if self.rank:
                return Form(self.algebra, np.zeros_like(self.coeffs), self.a)
            return Form.function((int(other) & 1) * self.algebra.one, self.a)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        if other.coeffs.shape != self.coeffs.shape:
            raise ExpressionError("cannot add forms of different degree")
        return Form(self.algebra, self.coeffs ^ other.coeffs, self.a if self.a is not None else other.a)

    __radd__ = __add__
    __sub__ = __add__
    __rsub__ = __add__

    def __neg__(self):
        return self

    def _left(self, f: Element) -> "Form":
        V = self.algebra.V.astype(np.int64)
        out = np.tensordot(np.einsum("c,cmv->mv", f.coeffs.astype(np.int64), V), self.coeffs.astype(np.int64), axes=([0], [0]))
        return Form(self.algebra, out, self.a)

    def _right(self, f: Element) -> "Form":
        return Form(self.algebra, right_multiply(self.algebra, self.a, self.coeffs, f.coeffs), self.a)

    def __mul__(self, other):
        if isinstance(other, (int, np.integer)):
            return self if int(other) & 1 else Form(self.algebra, np.zeros_like(self.coeffs), self.a)
        if isinstance(other, Element):
            return self._right(other)
        if isinstance(other, Form) and other.rank == 0:
            return self._right(Element(self.algebra, other.coeffs))
        if isinstance(other, Form) and self.rank == 0:
            return other._left(Element(self.algebra, self.coeffs))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, np.integer)):
            return self * other
        if isinstance(other, Element):
            return self._left(other)
        return NotImplemented

    def __matmul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return Form(self.algebra, tensor(self.algebra, self.a, self.coeffs, other.coeffs), self.a if self.a is not None else other.a)

    def __rmatmul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other @ self

    def __pow__(self, k):
        if self.rank:
            raise ExpressionError("powers apply to functions only")
        return Form.function(Element(self.algebra, self.coeffs) ** k, self.a)

    def element(self) -> Element:
        if self.rank:
            raise ExpressionError("expected a function")
        return Element(self.algebra, self.coeffs)


def right_multiply(A: Algebra, a, T: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Coefficients of T f, moving f leftwards through each tensor factor."""
    V = A.V.astype(np.int64)
    T = as_f2(T).astype(np.int64)
    f = as_f2(f).astype(np.int64)
    if T.ndim == 1:
        return as_f2(np.einsum("v,m,vmr->r", T, f, V))
    if a is None:
        raise ExpressionError("right multiplication of forms needs a calculus")
    a = np.asarray(a, dtype=np.int64)
    m = T.shape[-1]
    out = np.zeros(T.shape[:-1] + (m,), np.int64)
    for i in range(m):
        # w^i f = c[rho, j] x^rho w^j
        c = np.einsum("m,mrj->rj", f, a[i]) & 1
        head = T[..., i]
        for rho in range(A.n):
            if not c[rho].any():
                continue
            e = np.zeros(A.n, np.int64)
            e[rho] = 1
            moved = right_multiply(A, a, head, e).astype(np.int64)
            out += moved[..., None] * c[rho]
    return as_f2(out)


def tensor(A: Algebra, a, S: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Coefficients of S (x) T."""
    S, T = as_f2(S), as_f2(T)
    out = np.zeros(S.shape + T.shape[1:], np.int64)
    for nu in range(A.n):
        if not T[nu].any():
            continue
        e = np.zeros(A.n, np.uint8)
        e[nu] = 1
        moved = right_multiply(A, a, S, e).astype(np.int64)
        out += np.multiply.outer(moved, T[nu].astype(np.int64))
    return as_f2(out)


def basis_forms(A: Algebra, m: int, a=None) -> list[Form]:
    out = []
    for i in range(m):
        c = np.zeros((A.n, m), np.uint8)
        c[0, i] = 1
        out.append(Form(A, c, a))
    return out


_BINOPS = {ast.Add: "add", ast.Sub: "add", ast.Mult: "mul", ast.Pow: "pow", ast.MatMult: "tensor", ast.BitXor: "pow"}


def _eval(node, names: Mapping[str, object]):
    if isinstance(node, ast.Expression):
        return _eval(node.body, names)
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name):
        if node.id not in names:
            raise ExpressionError(f"unknown name {node.id!r}")
        return names[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        return _eval(node.operand, names)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        left, right = _eval(node.left, names), _eval(node.right, names)
        op = _BINOPS[type(node.op)]
        if op == "add":
            return left + right
        if op == "mul":
            return left * right
        if op == "tensor":
            return left @ right
        if not isinstance(right, int):
            raise ExpressionError("exponent must be an integer")
        return left**right
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)}")


def evaluate(expr: str, names: Mapping[str, object]):
    """Evaluate a fixture expression; ``^`` means power."""
    try:
        tree = ast.parse(expr.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {expr!r}") from exc
    return _eval(tree, names)


def _int_value(x) -> int:
    if isinstance(x, Element):
        raise ExpressionError("conditions are over parameters, not functions")
    return int(x) & 1


def condition_set(text: str, params: tuple[str, ...]) -> set[tuple[int, ...]]:
    """Parameter tuples satisfying comma separated equalities like ``g1=0, g2=g3``.

    ``all`` matches everything and ``never`` matches nothing.
    """
    text = text.strip()
    space = list(itertools.product((0, 1), repeat=len(params)))
    if text == "all":
        return set(space)
    if text == "never":
        return set()
    out = set()
    clauses = [c.strip() for c in text.split(",") if c.strip()]
    for values in space:
        env = dict(zip(params, values))
        ok = True
        for clause in clauses:
            sides = clause.split("=")
            vals = {_int_value(evaluate(s, env)) for s in sides}
            if len(vals) != 1:
                ok = False
                break
        if ok:
            out.add(values)
    return out
