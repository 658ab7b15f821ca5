"""Finite-dimensional unital algebras over F2 given by structure constants.

Basis element 0 is the unit. ``V[mu, nu, rho]`` is the coefficient of
``x^rho`` in ``x^mu x^nu``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .f2_linalg import as_f2, inverse, rank

__all__ = [
    "Algebra",
    "Element",
    "NotAUnit",
    "validate_algebra",
    "mul",
    "try_invert",
    "automorphisms",
    "unit_fixing_maps",
    "transform",
    "find_isomorphism",
    "enumerate_unital_algebras",
    "algebra_from_products",
    "invert_matrix_over",
]


class NotAUnit(ArithmeticError):
    """Raised when an algebra element has no two-sided inverse."""


@dataclass(frozen=True, eq=False)
class Algebra:
    V: np.ndarray
    label: str | None = None
    # generator names for printing, e.g. ("1", "x", "y")
    names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        V = as_f2(self.V)
        if V.ndim != 3 or len(set(V.shape)) != 1:
            raise ValueError("structure constants must have shape (n, n, n)")
        V.setflags(write=False)
        object.__setattr__(self, "V", V)

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @cached_property
    def commutative(self) -> bool:
        return bool((self.V == self.V.transpose(1, 0, 2)).all())

    @property
    def one(self) -> "Element":
        return self.basis(0)

    def basis(self, mu: int) -> "Element":
        c = np.zeros(self.n, np.uint8)
        c[mu] = 1
        return Element(self, c)

    def element(self, coeffs) -> "Element":
        return Element(self, coeffs)

    def elements(self) -> list["Element"]:
        """All 2^n elements, coefficient vectors in lexicographic order."""
        return [Element(self, c) for c in itertools.product((0, 1), repeat=self.n)]

    def left_matrix(self, f) -> np.ndarray:
        """Matrix of ``h -> f h`` acting on coefficient columns."""
        return as_f2(np.einsum("m,mnr->rn", as_f2(f), self.V))

    def right_matrix(self, f) -> np.ndarray:
        return as_f2(np.einsum("n,mnr->rm", as_f2(f), self.V))

    def product(self, f, g) -> np.ndarray:
        return as_f2(np.einsum("m,n,mnr->r", as_f2(f), as_f2(g), self.V))

    def to_json(self) -> dict:
        out = {"schema": 1, "n": self.n, "V": self.V.tolist()}
        if self.label is not None:
            out["label"] = self.label
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "Algebra":
        return cls(np.asarray(doc["V"]), doc.get("label"))

    def __repr__(self) -> str:
        tag = f" {self.label}" if self.label else ""
        return f"<Algebra{tag} n={self.n}>"


class Element:
    """Algebra element ``f = f_mu x^mu`` with arithmetic operators.

    Ints act through the unit, so ``1 + x`` works when ``x`` is an Element.
    """

    __slots__ = ("algebra", "coeffs")

    def __init__(self, algebra: Algebra, coeffs):
        c = as_f2(coeffs).reshape(-1)
        if c.shape != (algebra.n,):
            raise ValueError(f"expected {algebra.n} coefficients")
        self.algebra = algebra
        self.coeffs = c

    def _coerce(self, other) -> "Element":
        if isinstance(other, Element):
            return other
        if isinstance(other, (int, np.integer)):
            return Element(self.algebra, (int(other) & 1) * self.algebra.one.coeffs)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Element(self.algebra, self.coeffs ^ other.coeffs)

    __radd__ = __add__
    __sub__ = __add__
    __rsub__ = __add__

    def __neg__(self):
        return self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    def __rmul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(other, self)

    def __pow__(self, k: int):
        if k < 0:
            return try_invert(self) ** (-k)
        out = self.algebra.one
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return bool((self.coeffs == other.coeffs).all())

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __bool__(self):
        return bool(self.coeffs.any())

    def __repr__(self) -> str:
        names = self.algebra.names or tuple(["1"] + [f"x{k}" for k in range(1, self.algebra.n)])
        terms = [names[k] for k in range(self.algebra.n) if self.coeffs[k]]
        return "+".join(terms) if terms else "0"


def mul(f: Element, g: Element) -> Element:
    if f.algebra is not g.algebra and not np.array_equal(f.algebra.V, g.algebra.V):
        raise ValueError("elements belong to different algebras")
    return Element(f.algebra, f.algebra.product(f.coeffs, g.coeffs))


def try_invert(f: Element) -> Element:
    """Two-sided inverse, or raise NotAUnit."""
    A = f.algebra
    L = A.left_matrix(f.coeffs)
    Linv = inverse(L)
    if Linv is None:
        raise NotAUnit(f"{f!r} is not invertible")
    h = Element(A, Linv[:, 0])
    # f h = 1 from the left inverse; check the other side for noncommutative A
    if h * f != 1:
        raise NotAUnit(f"{f!r} has no two-sided inverse")
    return h


def validate_algebra(A: Algebra) -> dict[str, bool]:
    V = A.V.astype(np.int64)
    n = A.n
    eye = np.eye(n, dtype=np.int64)
    unital = bool((V[0] == eye).all() and (V[:, 0, :] == eye).all())
    # (x^r x^v) x^m versus x^r (x^v x^m)
    left = np.einsum("rvl,lmg->rvmg", V, V) & 1
    right = np.einsum("vml,rlg->rvmg", V, V) & 1
    return {
        "unital": unital,
        "associative": bool((left == right).all()),
        "commutative": A.commutative,
    }


def transform(V: np.ndarray, P: np.ndarray, Pinv: np.ndarray | None = None) -> np.ndarray:
    """Structure constants in the basis whose mu-th vector is column mu of ``P``."""
    if Pinv is None:
        Pinv = inverse(P)
    return as_f2(np.einsum("am,bn,abc,sc->mns", P, P, V.astype(np.int64), Pinv))


def unit_fixing_maps(n: int) -> list[np.ndarray]:
    """All invertible n x n matrices whose first column is the unit vector."""
    out = []
    cols = [np.asarray(c, np.uint8) for c in itertools.product((0, 1), repeat=n)]
    e0 = np.zeros(n, np.uint8)
    e0[0] = 1
    for rest in itertools.product(cols, repeat=n - 1):
        P = np.column_stack([e0, *rest]) if n > 1 else e0.reshape(1, 1)
        if rank(P) == n:
            out.append(P)
    return out


def automorphisms(A: Algebra) -> list[np.ndarray]:
    """Unit-fixing invertible maps preserving the product, as coefficient matrices."""
    out = []
    for P in unit_fixing_maps(A.n):
        # phi(x^mu x^nu) = phi(x^mu) phi(x^nu)
        lhs = np.einsum("mnr,sr->mns", A.V.astype(np.int64), P) & 1
        rhs = np.einsum("am,bn,abs->mns", P, P, A.V.astype(np.int64)) & 1
        if (lhs == rhs).all():
            out.append(P)
    return out


def find_isomorphism(A: Algebra, B: Algebra) -> np.ndarray | None:
    """A matrix P with ``transform(A.V, P) == B.V``, or None."""
    if A.n != B.n:
        return None
    for P in unit_fixing_maps(A.n):
        if np.array_equal(transform(A.V, P), B.V):
            return P
    return None


def algebra_from_products(n: int, products: dict[tuple[int, int], list[int]], label=None, names=None) -> Algebra:
    """Build V from the products of non-unit basis elements.

    ``products[(mu, nu)]`` lists the basis indices appearing in x^mu x^nu;
    unlisted products are zero.
    """
    V = np.zeros((n, n, n), np.uint8)
    for k in range(n):
        V[0, k, k] = V[k, 0, k] = 1
    for (mu, nu), terms in products.items():
        for t in terms:
            V[mu, nu, t] ^= 1
    return Algebra(V, label, names)


def _canonical_key(V: np.ndarray) -> bytes:
    return V.tobytes()


def _raw_solutions(n: int, commutative: bool) -> np.ndarray:
    """All associative unital V tensors, built one product at a time.

    After each product is assigned, every associativity triple is checked
    on the candidates for which all products it touches are already known.
    """
    base = np.zeros((n, n, n), np.uint8)
    for k in range(n):
        base[0, k, k] = base[k, 0, k] = 1
    if n == 1:
        return base[None]
    gens = range(1, n)
    # grow the block of assigned generators one index at a time
    pairs = []
    for top in gens:
        for other in range(1, top + 1):
            for p in ((other, top), (top, other)):
                if p not in pairs and (not commutative or p[0] <= p[1]):
                    pairs.append(p)
    assigned = np.zeros((n, n), bool)
    assigned[0, :] = assigned[:, 0] = True
    cand = base[None].copy()
    choices = np.array(list(itertools.product((0, 1), repeat=n)), np.uint8)
    triples = list(itertools.product(gens, repeat=3))
    for i, j in pairs:
        N = len(cand)
        cand = np.repeat(cand, len(choices), axis=0)
        cand[:, i, j, :] = np.tile(choices, (N, 1))
        assigned[i, j] = True
        if commutative:
            cand[:, j, i, :] = cand[:, i, j, :]
            assigned[j, i] = True
        for a, b, c in triples:
            if not (assigned[a, b] and assigned[b, c]):
                continue
            W = cand.astype(np.int64)
            ab, bc = W[:, a, b, :], W[:, b, c, :]
            # decidable when every product reached through the supports is known
            known = ~((ab & ~assigned[:, c]).any(axis=1) | (bc & ~assigned[a, :]).any(axis=1))
            lhs = np.einsum("kl,klg->kg", ab, W[:, :, c, :] * assigned[:, c][None, :, None]) & 1
            rhs = np.einsum("kl,klg->kg", bc, W[:, a, :, :] * assigned[a, :][None, :, None]) & 1
            cand = cand[~known | (lhs == rhs).all(axis=1)]
    return cand


def enumerate_unital_algebras(n: int, commutative: bool = True) -> list[Algebra]:
    """One representative per isomorphism class, sorted by canonical bits.

    The representative of a class is its lexicographically smallest V.
    With ``commutative=False`` noncommutative algebras are included too.
    """
    if not 1 <= n <= 4:
        raise ValueError("n must be between 1 and 4")
    raw = _raw_solutions(n, commutative)
    maps = [(P, inverse(P)) for P in unit_fixing_maps(n)]
    remaining = {_canonical_key(V): V for V in raw}
    reps = []
    while remaining:
        V = remaining.pop(next(iter(remaining)))
        orbit = [transform(V, P, Pinv) for P, Pinv in maps]
        for W in orbit:
            remaining.pop(_canonical_key(W), None)
        reps.append(min(orbit, key=_canonical_key))
    reps.sort(key=_canonical_key)
    return [Algebra(V) for V in reps]


def invert_matrix_over(A: Algebra, E: np.ndarray) -> np.ndarray | None:
    """Two-sided inverse of an m x m matrix with entries in A.

    ``E[i, j]`` is the coefficient vector of entry (i, j). Returns the
    inverse in the same layout, or None.
    """
    from .f2_linalg import linearize, solve_affine

    E = as_f2(E)
    m = E.shape[0]
    V = A.V.astype(np.int64)
    target = np.zeros((m, m, A.n), np.int64)
    for i in range(m):
        target[i, i, 0] = 1

    def right_eq(flat):
        F = flat.reshape(m, m, A.n).astype(np.int64)
        return np.einsum("ija,jkb,abc->ikc", E.astype(np.int64), F, V) & 1

    M, b = linearize(right_eq, m * m * A.n)
    sol = solve_affine(M, (target.reshape(-1) ^ b) & 1)
    if not sol.consistent:
        return None
    for F in sol.members():
        F = F.reshape(m, m, A.n).astype(np.int64)
        left = np.einsum("ija,jkb,abc->ikc", F, E.astype(np.int64), V) & 1
        if (left == target).all():
            return as_f2(F)
    return None
