"""First-order differential calculi and their degree-two exterior data.

A calculus over an algebra with basis ``x^mu`` has a left basis of
1-forms ``w^i`` and is fixed by two tensors:

* ``a[i, mu, nu, j]``: ``w^i x^mu = a x^nu w^j``
* ``d[mu, nu, i]``: ``d x^mu = d x^nu w^i``

Exterior data adds ``eps[i, j, mu]`` (``w^i ^ w^j = eps x^mu Vol``) and
``tau[i, mu]`` (``d w^i = tau x^mu Vol``), or the marker that the
degree-two forms vanish.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .algebra import Algebra, invert_matrix_over
from .f2_linalg import (
    AffineSolutionSet,
    as_f2,
    coefficient_vectors,
    kernel,
    linearize,
    rank,
    solve_affine,
)

__all__ = [
    "Calculus",
    "ExteriorData",
    "ZERO_EXTERIOR",
    "validate_calculus",
    "coordinate_d",
    "bimodule_defect",
    "leibniz_defect",
    "enumerate_calculi",
    "find_morphism",
    "calculus_iso_classes",
    "exterior_equations",
    "solve_exterior",
    "validate_exterior",
]


def _i(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Calculus:
    algebra: Algebra
    a: np.ndarray
    d: np.ndarray
    label: str | None = None

    def __post_init__(self):
        a, d = as_f2(self.a), as_f2(self.d)
        n = self.algebra.n
        if a.ndim != 4 or a.shape[1:3] != (n, n) or a.shape[0] != a.shape[3]:
            raise ValueError("a must have shape (m, n, n, m)")
        if d.shape != (n, n, a.shape[0]):
            raise ValueError("d must have shape (n, n, m)")
        a.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.algebra.n

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def V(self) -> np.ndarray:
        return self.algebra.V

    def commutation_matrix(self) -> np.ndarray:
        """Rows (i, mu), columns (nu, j): expansion of w^i x^mu in the left basis."""
        return self.a.reshape(self.m * self.n, self.n * self.m)

    def differential_matrix(self) -> np.ndarray:
        """The map f -> df as a (n*m) x n matrix on coefficient columns."""
        return self.d.reshape(self.n, self.n * self.m).T.copy()

    def surjectivity_matrix(self) -> np.ndarray:
        """Rows (mu, nu) hold x^mu dx^nu in the left basis."""
        B = np.einsum("mre,nri->mnei", _i(self.V), _i(self.d)) & 1
        return as_f2(B.reshape(self.n * self.n, self.n * self.m))

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "algebra": self.algebra.label,
            "m": self.m,
            "a": self.a.tolist(),
            "d": self.d.tolist(),
            **({"label": self.label} if self.label else {}),
        }

    def key(self) -> bytes:
        return self.a.tobytes() + self.d.tobytes()

    def __repr__(self) -> str:
        tag = f" {self.label}" if self.label else ""
        return f"<Calculus{tag} n={self.n} m={self.m}>"


@dataclass(frozen=True, eq=False)
class ExteriorData:
    mode: Literal["zero", "free1d"]
    eps: np.ndarray | None = None
    tau: np.ndarray | None = None

    def __post_init__(self):
        if self.mode == "free1d":
            object.__setattr__(self, "eps", as_f2(self.eps))
            object.__setattr__(self, "tau", as_f2(self.tau))
        elif self.mode != "zero":
            raise ValueError(f"unknown exterior mode {self.mode!r}")

    @property
    def free(self) -> bool:
        return self.mode == "free1d"

    def to_json(self) -> dict:
        if not self.free:
            return {"mode": "zero"}
        return {"mode": "free1d", "eps": self.eps.tolist(), "tau": self.tau.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "ExteriorData":
        if doc["mode"] == "zero":
            return ZERO_EXTERIOR
        return cls("free1d", np.asarray(doc["eps"]), np.asarray(doc["tau"]))


ZERO_EXTERIOR = ExteriorData("zero")


def bimodule_defect(V, a) -> np.ndarray:
    """(w^i x^mu) x^nu minus w^i (x^mu x^nu), indexed [i, mu, nu, eta, k]."""
    V, a = _i(V), _i(a)
    lhs = np.einsum("imsj,jntk,ste->imnek", a, a, V)
    rhs = np.einsum("irek,mnr->imnek", a, V)
    return as_f2(lhs + rhs)


def leibniz_defect(V, a, d) -> np.ndarray:
    """d(x^mu x^nu) minus (dx^mu) x^nu + x^mu dx^nu, indexed [mu, nu, sigma, j]."""
    V, a, d = _i(V), _i(a), _i(d)
    lhs = np.einsum("mnr,rsj->mnsj", V, d)
    rhs = np.einsum("mli,inyj,lys->mnsj", d, a, V) + np.einsum("ndj,mds->mnsj", d, V)
    return as_f2(lhs + rhs)


def _unit_relations_hold(a, d) -> bool:
    m, n = a.shape[0], a.shape[1]
    expected = np.zeros((m, n, m), np.uint8)
    for i in range(m):
        expected[i, 0, i] = 1
    return bool((a[:, 0, :, :] == expected).all() and not d[0].any())


def validate_calculus(C: Calculus) -> dict[str, bool]:
    nm = C.n * C.m
    return {
        "unit_relations": _unit_relations_hold(C.a, C.d),
        "bimodule": not bimodule_defect(C.V, C.a).any(),
        "leibniz": not leibniz_defect(C.V, C.a, C.d).any(),
        "surjective": rank(C.surjectivity_matrix()) == nm,
        "connected": len(kernel(C.differential_matrix())) == 1,
        "right_parallelisable": rank(C.commutation_matrix()) == nm,
    }


def coordinate_d(n: int, m: int) -> np.ndarray:
    """d tensor for w^i = dx^(i+1), i < m; the remaining dx^mu are left zero."""
    d = np.zeros((n, n, m), np.uint8)
    for i in range(m):
        d[i + 1, 0, i] = 1
    return d


def _unit_a(m: int, n: int) -> np.ndarray:
    a = np.zeros((m, n, n, m), np.uint8)
    for i in range(m):
        a[i, 0, 0, i] = 1
    return a


def enumerate_calculi(A: Algebra, m: int, basis_is_dx: bool = False) -> list[Calculus]:
    """All left-parallelisable calculi of dimension m, in deterministic order.

    The d tensor is swept over its free bits (or pinned to coordinate form
    when ``basis_is_dx``); for each d the Leibniz rule is linear in a and is
    solved, and the solutions are filtered by the bimodule axiom,
    surjectivity and connectedness. Order: d bits, then a bits.
    """
    n = A.n
    if not 1 <= m <= max(1, n - 1):
        raise ValueError("need 1 <= m <= n-1")
    V = A.V
    a_free = [(i, mu, nu, j) for i in range(m) for mu in range(1, n) for nu in range(n) for j in range(m)]
    if basis_is_dx:
        d_free = [(mu, nu, i) for mu in range(m + 1, n) for nu in range(n) for i in range(m)]
        d_base = coordinate_d(n, m)
    else:
        d_free = [(mu, nu, i) for mu in range(1, n) for nu in range(n) for i in range(m)]
        d_base = np.zeros((n, n, m), np.uint8)
    a_base = _unit_a(m, n)
    a_idx = tuple(np.array(a_free).T)
    out = []
    for dbits in coefficient_vectors(len(d_free)):
        d = d_base.copy()
        if d_free:
            d[tuple(np.array(d_free).T)] = dbits
        if len(kernel(d.reshape(n, n * m).T)) != 1:
            continue

        def leib(x, d=d):
            a = a_base.copy()
            a[a_idx] = x
            return leibniz_defect(V, a, d)

        M, b = linearize(leib, len(a_free))
        sols = solve_affine(M, b)
        if not sols.consistent:
            continue
        for x in sols.members():
            a = a_base.copy()
            a[a_idx] = x
            if bimodule_defect(V, a).any():
                continue
            C = Calculus(A, a, d)
            if rank(C.surjectivity_matrix()) != n * m:
                continue
            out.append(C)
    return out


def find_morphism(C1: Calculus, C2: Calculus) -> np.ndarray | None:
    """An invertible bimodule map intertwining the differentials, or None.

    The map sends w^i to ``phi[i, nu, j] x^nu w'^j``. Both conditions are
    linear in phi; a solution intertwining d between surjective calculi is
    automatically onto, and invertibility is still checked explicitly.
    """
    if C1.n != C2.n or C1.m != C2.m:
        return None
    n, m = C1.n, C1.m
    V = _i(C1.V)

    def eqs(x):
        phi = _i(x.reshape(m, n, m))
        # phi(w^i x^mu) = phi(w^i) x^mu
        right = np.einsum("imnj,jsk,nsr->imrk", _i(C1.a), phi, V) + np.einsum(
            "ivj,jmlk,vlr->imrk", phi, _i(C2.a), V
        )
        # phi(dx^mu) = d' x^mu
        dpart = np.einsum("mvi,isk,vsr->mrk", _i(C1.d), phi, V)
        return np.concatenate([right.reshape(-1), dpart.reshape(-1)])

    M, b = linearize(eqs, m * n * m)
    target = np.concatenate([np.zeros(m * n * n * m, np.uint8), C2.d.reshape(-1)])
    sols = solve_affine(M, target ^ b)
    if not sols.consistent:
        return None
    for x in sols.members():
        phi = x.reshape(m, n, m)
        # as a linear map on the (n*m)-dim space of 1-forms
        big = np.einsum("rsv,isk->rivk", V, _i(phi)) & 1
        if rank(big.reshape(n * m, n * m)) == n * m:
            return as_f2(phi)
    return None


def calculus_iso_classes(calculi: list[Calculus]) -> list[list[int]]:
    """Partition indices into isomorphism classes, ordered by first member."""
    classes: list[list[int]] = []
    for k, C in enumerate(calculi):
        for cls in classes:
            if find_morphism(calculi[cls[0]], C) is not None:
                cls.append(k)
                break
        else:
            classes.append([k])
    return classes


# --- exterior data -------------------------------------------------------


def exterior_equations(C: Calculus, eps, tau) -> dict[str, np.ndarray]:
    """Defects of the three consistency conditions on (eps, tau)."""
    V, a, d = _i(C.V), _i(C.a), _i(C.d)
    eps, tau = _i(eps), _i(tau)
    # Vol central: (w^i ^ w^j) x^mu computed two ways
    central = np.einsum("ija,amb->ijmb", eps, V) + np.einsum(
        "jmvk,ivrl,lka,rab->ijmb", a, a, eps, V
    )
    # d(dx^mu) = 0
    dsq = np.einsum("mvi,vrj,jia,rab->mb", d, d, eps, V) + np.einsum("mvi,iu,vub->mb", d, tau, V)
    # d(w^i x^mu) = d(a x^nu w^j), both sides expanded with the graded Leibniz rule
    lhs = np.einsum("iu,umb->imb", tau, V) + np.einsum("mvj,ivrk,kja,rab->imb", d, a, eps, V)
    rhs = np.einsum("imvj,vrk,kja,rab->imb", a, d, eps, V) + np.einsum("imvj,ju,vub->imb", a, tau, V)
    return {
        "vol_central": as_f2(central),
        "d_squared": as_f2(dsq),
        "leibniz_compatible": as_f2(lhs + rhs),
    }


def validate_exterior(C: Calculus, E: ExteriorData) -> dict[str, bool]:
    if not E.free:
        return {"vol_central": True, "d_squared": True, "leibniz_compatible": True, "eps_invertible": True}
    out = {k: not v.any() for k, v in exterior_equations(C, E.eps, E.tau).items()}
    out["eps_invertible"] = invert_matrix_over(C.algebra, E.eps) is not None
    return out


def exterior_solution_space(C: Calculus, tau_zero: bool = False) -> AffineSolutionSet:
    """All (eps, tau) satisfying the three conditions, flattened eps then tau."""
    n, m = C.n, C.m
    ne = m * m * n

    def eqs(x):
        eps = x[:ne].reshape(m, m, n)
        tau = x[ne:].reshape(m, n)
        parts = [v.reshape(-1) for v in exterior_equations(C, eps, tau).values()]
        if tau_zero:
            parts.append(tau.reshape(-1))
        return np.concatenate(parts)

    M, b = linearize(eqs, ne + m * n)
    return solve_affine(M, b)


def _is_coordinate(C: Calculus) -> bool:
    return bool(np.array_equal(C.d[1 : C.m + 1], coordinate_d(C.n, C.m)[1 : C.m + 1]))


def solve_exterior(C: Calculus, require_metric_qsym=None, tau_zero: bool | None = None) -> list[ExteriorData]:
    """All free rank-one exterior data with invertible eps.

    With ``require_metric_qsym`` (a metric g tensor or QuantumMetric) only
    solutions for which g wedges to zero are kept. When the basis is
    w^i = dx^i, tau is forced to zero.
    """
    n, m = C.n, C.m
    ne = m * m * n
    if tau_zero is None:
        tau_zero = _is_coordinate(C)
    space = exterior_solution_space(C, tau_zero)
    g = None
    if require_metric_qsym is not None:
        g = getattr(require_metric_qsym, "g", require_metric_qsym)
    out = []
    for x in space.members():
        eps = x[:ne].reshape(m, m, n)
        tau = x[ne:].reshape(m, n)
        if invert_matrix_over(C.algebra, eps) is None:
            continue
        if g is not None and wedge_11(C, g, eps).any():
            continue
        out.append(ExteriorData("free1d", eps, tau))
    return out


def wedge_11(C: Calculus, T, eps) -> np.ndarray:
    """Coefficients of the wedge of a tensor T[mu, i, j] x^mu w^i (x) w^j."""
    return as_f2(np.einsum("mij,ijv,mvr->r", _i(T), _i(eps), _i(C.V)))
