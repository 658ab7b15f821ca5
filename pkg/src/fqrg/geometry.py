"""Curvature, Laplacian, lifts of the volume form, Ricci and Einstein tensors.

Index layouts:

* ``rho[i, j, beta]``: ``R w^i = rho x^beta Vol (x) w^j``
* ``I[mu, i, j]``: ``i(Vol) = I x^mu w^i (x) w^j``
* Ricci and Einstein share the metric layout ``[mu, i, j]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import Element
from .calculus import Calculus, ExteriorData, wedge_11
from .connection import _CompatibilityKernel, solve_sigma
from .f2_linalg import as_f2, coefficient_vectors, kernel, linearize, matmul, solve_affine
from .metric import QuantumMetric, centrality_defect, is_quantum_symmetric

__all__ = [
    "CurvatureComponents",
    "LaplacianReport",
    "Lift",
    "RicciReport",
    "curvature",
    "laplacian",
    "enumerate_lifts",
    "lift_gamma",
    "ricci",
    "divergence",
]


def _i(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class CurvatureComponents:
    rho: np.ndarray

    @property
    def flat(self) -> bool:
        return not self.rho.any()

    def to_json(self) -> dict:
        return {"schema": 1, "rho": self.rho.tolist(), "flat": self.flat}


def _d_minus_wedge_nabla(C: Calculus, E: ExteriorData, T, gamma) -> np.ndarray:
    """(d (x) id - id ^ nabla) applied to the 1-1 tensor T, indexed [theta, n]."""
    a, d, V, T = _i(C.a), _i(C.d), _i(C.V), _i(T)
    eps, tau = _i(E.eps), _i(E.tau)
    out = np.einsum("cin,clk,kis,lst->tn", T, d, eps, V, optimize=True)
    out += np.einsum("cin,il,clt->tn", T, tau, V)
    out += np.einsum("cij,ilsr,jlkn,rkb,csz,zbt->tn", T, a, _i(gamma), eps, V, V, optimize=True)
    return out & 1


def curvature(C: Calculus, E: ExteriorData, conn) -> CurvatureComponents:
    """Riemann curvature of a connection with free one-dimensional top forms."""
    gamma = getattr(conn, "gamma", conn)
    if not E.free:
        return CurvatureComponents(np.zeros((C.m, C.m, C.n), np.uint8))
    # R w^i is the same operator as for cotorsion, applied to nabla w^i
    rho = np.stack([_d_minus_wedge_nabla(C, E, gamma[i], gamma).T for i in range(C.m)])
    return CurvatureComponents(as_f2(rho))


@dataclass(frozen=True, eq=False)
class LaplacianReport:
    matrix: np.ndarray
    algebra: object = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> int:
        return int(np.trace(self.matrix) & 1)

    @property
    def kernel_dim(self) -> int:
        return len(kernel(self.matrix))

    @property
    def eigen1_dim(self) -> int:
        return len(kernel(self.matrix ^ np.eye(self.n, dtype=np.uint8)))

    @property
    def diagonalizable(self) -> bool:
        return self.kernel_dim + self.eigen1_dim == self.n

    @property
    def zero(self) -> bool:
        return not self.matrix.any()

    @property
    def massive_eigenvectors(self) -> list:
        """Every nonzero v with Delta v = v, as algebra elements when the algebra is known."""
        basis = kernel(self.matrix ^ np.eye(self.n, dtype=np.uint8))
        vecs = [matmul(c, basis) for c in coefficient_vectors(len(basis))[1:]] if len(basis) else []
        if self.algebra is None:
            return vecs
        return [Element(self.algebra, v) for v in vecs]

    def apply(self, coeffs) -> np.ndarray:
        return matmul(self.matrix, as_f2(coeffs))

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "matrix": self.matrix.tolist(),
            "trace": self.trace,
            "kernel_dim": self.kernel_dim,
            "eigen1_dim": self.eigen1_dim,
            "diagonalizable": self.diagonalizable,
            "massive_eigenvectors": [np.asarray(getattr(v, "coeffs", v)).tolist() for v in self.massive_eigenvectors],
        }


def laplacian(C: Calculus, g: QuantumMetric, conn) -> LaplacianReport:
    """Delta = ( , ) nabla d as an n x n matrix; column mu holds Delta x^mu."""
    if g.ginv is None:
        raise ValueError("laplacian needs an invertible metric")
    gamma = getattr(conn, "gamma", conn)
    d, V, G, gi = _i(C.d), _i(C.V), _i(gamma), _i(g.ginv)
    eye = np.eye(C.m, dtype=np.int64)
    nabla_d = np.einsum("uai,ars,irkm->uskm", d, V, G, optimize=True)
    nabla_d += np.einsum("uai,ask,im->uskm", d, d, eye, optimize=True)
    out = np.einsum("uskm,kmt,stv->vu", nabla_d, gi, V, optimize=True)
    return LaplacianReport(as_f2(out), C.algebra)


@dataclass(frozen=True, eq=False)
class Lift:
    I: np.ndarray
    gamma_offset: object = None

    def gamma_triple(self) -> tuple[int, ...] | None:
        if self.gamma_offset is None:
            return None
        return tuple(int(b) for b in getattr(self.gamma_offset, "coeffs", self.gamma_offset))

    def to_json(self) -> dict:
        out = {"schema": 1, "I": self.I.tolist()}
        if self.gamma_offset is not None:
            out["gamma"] = list(self.gamma_triple())
        return out


def _lift_space(C: Calculus, E: ExteriorData):
    n, m = C.n, C.m
    shape = (n, m, m)
    target = np.zeros(n, np.uint8)
    target[0] = 1

    def equations(x):
        T = x.reshape(shape)
        wedge = wedge_11(C, T, E.eps) ^ target
        return np.concatenate([centrality_defect(C, T).reshape(-1), wedge])

    M, b = linearize(equations, n * m * m)
    return solve_affine(M, b)


def lift_gamma(C: Calculus, I, base, g) -> np.ndarray | None:
    """The gamma with I = base + gamma g, or None if I - base is not a multiple of g."""
    n = C.n
    V, g = _i(C.V), _i(g)
    M, _ = linearize(lambda c: np.einsum("v,uij,vur->rij", _i(c), g, V), n)
    sols = solve_affine(M, (as_f2(I) ^ as_f2(base)).reshape(-1))
    return None if not sols.consistent else sols.particular


def enumerate_lifts(C: Calculus, E: ExteriorData, g=None, base=None) -> list[Lift]:
    """Every central I with wedge(I) = Vol, in enumeration order.

    With a central quantum symmetric ``g`` each lift records the gamma with
    I = base + gamma g. ``base`` defaults to the first lift found.
    """
    if not E.free:
        return []
    space = _lift_space(C, E)
    lifts = [x.reshape(C.n, C.m, C.m) for x in space.members()]
    if g is None or not lifts:
        return [Lift(I) for I in lifts]
    gt = as_f2(getattr(g, "g", g))
    base = lifts[0] if base is None else as_f2(base)
    out = []
    for I in lifts:
        gam = lift_gamma(C, I, base, gt)
        out.append(Lift(I, None if gam is None else Element(C.algebra, gam)))
    if is_quantum_symmetric(gt, E, C) and not centrality_defect(C, gt).any():
        out.sort(key=lambda L: L.gamma_triple() or ())
    return out


@dataclass(frozen=True, eq=False)
class RicciReport:
    ricci: np.ndarray
    scalar: np.ndarray
    einstein: np.ndarray
    ricci_qsym: bool
    div_ricci: np.ndarray
    div_eins: np.ndarray

    @property
    def div_ricci_zero(self) -> bool:
        return not self.div_ricci.any()

    @property
    def div_eins_zero(self) -> bool:
        return not self.div_eins.any()

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "ricci": self.ricci.tolist(),
            "scalar": self.scalar.tolist(),
            "einstein": self.einstein.tolist(),
            "ricci_qsym": self.ricci_qsym,
            "div_ricci_zero": self.div_ricci_zero,
            "div_eins_zero": self.div_eins_zero,
        }


def divergence(C: Calculus, g: QuantumMetric, T, gamma, sigma) -> np.ndarray:
    """( , ) (x) id applied to nabla T for a 1-1 tensor T, indexed [gamma, n]."""
    inner = _CompatibilityKernel(C, T)(gamma, sigma)
    return as_f2(np.einsum("vkmn,vzc,kmz->cn", inner, _i(C.V), _i(g.ginv), optimize=True))


def ricci(C: Calculus, E: ExteriorData, g: QuantumMetric, conn, lift) -> RicciReport:
    """Ricci through the lift, its scalar, the Einstein tensor Ricci + S g and both divergences."""
    if g.ginv is None:
        raise ValueError("ricci needs an invertible metric")
    gamma = getattr(conn, "gamma", conn)
    sigma = getattr(conn, "sigma", None)
    if sigma is None:
        sigma = solve_sigma(C, gamma)
    I = _i(getattr(lift, "I", lift))
    a, d, V = _i(C.a), _i(C.d), _i(C.V)
    gm, gi = _i(g.g), _i(g.ginv)
    rho = _i(curvature(C, E, gamma).rho)
    ric = np.einsum(
        "amn,njb,uli,buv,mvck,kle,acs,sez->zij", gm, rho, I, V, a, gi, V, V, optimize=True
    ) & 1
    S = np.einsum("zij,ijt,ztv->v", ric, gi, V, optimize=True) & 1
    eins = (ric + np.einsum("v,rij,vru->uij", S, gm, V)) & 1
    div_r = divergence(C, g, ric, gamma, sigma)
    dS = np.einsum("u,uvi->vi", S, d) & 1
    return RicciReport(
        ricci=as_f2(ric),
        scalar=as_f2(S),
        einstein=as_f2(eins),
        ricci_qsym=is_quantum_symmetric(ric, E, C),
        div_ricci=div_r,
        div_eins=as_f2(div_r ^ dS),
    )
