"""Quantum metrics: centrality, inverse, quantum symmetry, quantum dimension.

A metric is stored in left form ``g[mu, i, j]`` meaning
``g = g_{mu ij} x^mu w^i (x) w^j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import invert_matrix_over
from .calculus import Calculus, ExteriorData, wedge_11
from .f2_linalg import AffineSolutionSet, as_f2, linearize, solve_affine

__all__ = [
    "QuantumMetric",
    "NotInvertible",
    "centrality_defect",
    "tensor_right_mul",
    "solve_central_metrics",
    "gtilde_from_g",
    "try_invert_metric",
    "pairing_defect",
    "quantum_dimension",
    "is_quantum_symmetric",
    "quantum_metrics",
]


def _i(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


class NotInvertible(ArithmeticError):
    """Metric has no inner-product inverse; ``reason`` says why."""

    def __init__(self, reason: str, message: str = ""):
        super().__init__(message or reason)
        self.reason = reason


@dataclass(frozen=True, eq=False)
class QuantumMetric:
    calculus: Calculus
    g: np.ndarray
    gtilde: np.ndarray | None = None
    # ginv[i, j, mu]: (w^i, w^j) = ginv x^mu
    ginv: np.ndarray | None = None
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "g", as_f2(self.g))

    @property
    def invertible(self) -> bool:
        return self.ginv is not None

    def to_json(self) -> dict:
        out = {"schema": 1, "g": self.g.tolist()}
        if self.ginv is not None:
            out["ginv"] = self.ginv.tolist()
            out["qdim"] = quantum_dimension(self).tolist()
        if self.label:
            out["label"] = self.label
        return out


def tensor_right_mul(C: Calculus, T, mu: int) -> np.ndarray:
    """(T[nu, i, j] x^nu w^i (x) w^j) x^mu in left form."""
    a, V = _i(C.a), _i(C.V)
    return as_f2(np.einsum("vij,jlk,ilsm,vsr->rmk", _i(T), a[:, mu], a, V))


def centrality_defect(C: Calculus, T) -> np.ndarray:
    """T x^nu - x^nu T for each nu, indexed [nu, sigma, m, k]."""
    a, V, T = _i(C.a), _i(C.V), _i(T)
    lhs = np.einsum("uij,jvlk,ilgm,ugs->vsmk", T, a, a, V)
    rhs = np.einsum("rmk,vrs->vsmk", T, V)
    return as_f2(lhs + rhs)


def solve_central_metrics(C: Calculus) -> AffineSolutionSet:
    """All central tensors, flattened as g[mu, i, j]; the zero tensor is included."""
    n, m = C.n, C.m
    M, b = linearize(lambda x: centrality_defect(C, x.reshape(n, m, m)), n * m * m)
    return solve_affine(M, b)


def gtilde_from_g(C: Calculus, g) -> np.ndarray | None:
    """Right form coefficients with g = w^i gt[nu, i, j] x^nu (x) w^j, or None."""
    n, m = C.n, C.m
    a = _i(C.a)

    def expand(x):
        return np.einsum("kvui,vkj->uij", a, _i(x.reshape(n, m, m)))

    M, b = linearize(expand, n * m * m)
    sols = solve_affine(M, as_f2(g).reshape(-1) ^ b)
    if not sols.consistent:
        return None
    return sols.particular.reshape(n, m, m)


def try_invert_metric(C: Calculus, g, label: str | None = None) -> QuantumMetric:
    """Attach the inner product, or raise NotInvertible.

    ``reason`` is ``"no_right_form"`` when g has no right-form expansion,
    ``"singular"`` when the algebra-valued matrix has no inverse and
    ``"not_bimodule"`` when the inverse pairing fails to be right linear.
    """
    g = as_f2(g)
    gt = gtilde_from_g(C, g)
    if gt is None:
        raise NotInvertible("no_right_form", "metric has no expansion in the right basis")
    # matrix over A with entries gt[:, i, j]
    inv = invert_matrix_over(C.algebra, gt.transpose(1, 2, 0))
    if inv is None:
        raise NotInvertible("singular", "metric is not invertible")
    if pairing_defect(C, inv).any():
        raise NotInvertible("not_bimodule", "the inverse pairing is not a bimodule map")
    return QuantumMetric(C, g, gt, inv, label)


def pairing_defect(C: Calculus, ginv) -> np.ndarray:
    """(w^i, w^j x^mu) - (w^i, w^j) x^mu for the pairing with values ginv, indexed [i, j, mu, beta].

    The first term moves x^mu across the tensor product: w^j x^mu = a x^nu w^k
    and then w^i x^nu = a x^rho w^l.
    """
    a, V, gi = _i(C.a), _i(C.V), _i(ginv)
    lhs = np.einsum("jmvk,ivrl,lks,rsb->ijmb", a, a, gi, V, optimize=True)
    rhs = np.einsum("ijs,smb->ijmb", gi, V)
    return as_f2(lhs + rhs)


def quantum_dimension(metric: QuantumMetric) -> np.ndarray:
    """(,)(g) as a coefficient vector."""
    if metric.ginv is None:
        raise NotInvertible("singular", "quantum dimension needs an inverse metric")
    V = _i(metric.calculus.V)
    return as_f2(np.einsum("mij,ijt,mtv->v", _i(metric.g), _i(metric.ginv), V))


def is_quantum_symmetric(metric, E: ExteriorData, C: Calculus | None = None) -> bool:
    """Whether g wedges to zero; always true when the degree-two forms vanish."""
    if not E.free:
        return True
    C = C or metric.calculus
    g = getattr(metric, "g", metric)
    return not wedge_11(C, g, E.eps).any()


def quantum_metrics(C: Calculus, E: ExteriorData | None = None, require_qsym: bool = True) -> list[QuantumMetric]:
    """Nonzero central invertible metrics, optionally quantum symmetric, in solution order."""
    out = []
    space = solve_central_metrics(C)
    for x in space.members():
        if not x.any():
            continue
        g = x.reshape(C.n, C.m, C.m)
        if require_qsym and E is not None and not is_quantum_symmetric(g, E, C):
            continue
        try:
            out.append(try_invert_metric(C, g))
        except NotInvertible:
            continue
    return out
