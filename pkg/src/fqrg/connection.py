"""Bimodule connections and the exhaustive search for Levi-Civita ones.

``gamma[i, nu, k, m]``: ``nabla w^i = gamma x^nu w^k (x) w^m``.
``sigma[i, j, mu, k, m]``: ``sigma(w^i (x) w^j) = sigma x^mu w^k (x) w^m``.

Most formulas accept a leading batch axis on gamma and sigma so that the
sweep can evaluate thousands of candidates per numpy call.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import Literal

import numpy as np

from .calculus import Calculus, ExteriorData
from .f2_linalg import AffineSolutionSet, LinearSolver, as_f2, coefficient_vectors, linearize, matmul

__all__ = [
    "Connection",
    "ConnectionClassification",
    "NoSigma",
    "AmbiguousSigma",
    "SigmaSystem",
    "solve_sigma",
    "right_leibniz_defect",
    "sigma_bimodule_defect",
    "torsion",
    "check_torsion_free",
    "cotorsion",
    "check_cotorsion_free",
    "metric_compatibility_defect",
    "check_metric_compatible",
    "classify_connection",
    "classify_connections",
    "classify_connections_bruteforce",
    "MODES",
]

Mode = Literal["qlc", "wqlc", "metric_compatible_only"]
MODES = ("qlc", "wqlc", "metric_compatible_only")
CHUNK = 1 << 13


def _i(x) -> np.ndarray:
    return np.asarray(x, dtype=np.int64)


class NoSigma(ArithmeticError):
    """The connection admits no braiding map, so it is not a bimodule connection."""


class AmbiguousSigma(ArithmeticError):
    """The braiding equations have more than one solution."""


@dataclass(frozen=True, eq=False)
class Connection:
    gamma: np.ndarray
    sigma: np.ndarray | None = None
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_f2(self.gamma))
        if self.sigma is not None:
            object.__setattr__(self, "sigma", as_f2(self.sigma))

    def key(self) -> tuple[int, ...]:
        return tuple(int(b) for b in self.gamma.reshape(-1))

    def to_json(self) -> dict:
        out = {"schema": 1, "gamma": self.gamma.tolist()}
        out["sigma"] = None if self.sigma is None else self.sigma.tolist()
        if self.label:
            out["label"] = self.label
        return out


@dataclass(frozen=True)
class ConnectionClassification:
    torsion_free: bool
    cotorsion_free: bool | None
    bimodule: bool
    metric_compatible: bool | None

    @property
    def qlc(self) -> bool:
        return bool(self.torsion_free and self.bimodule and self.metric_compatible)

    @property
    def wqlc(self) -> bool:
        return bool(self.torsion_free and self.cotorsion_free)

    def to_json(self) -> dict:
        return {**asdict(self), "qlc": self.qlc, "wqlc": self.wqlc}


# --- braiding -----------------------------------------------------------


def _sigma_image(C: Calculus, sigma) -> np.ndarray:
    """sigma(w^i (x) dx^mu) from sigma, indexed [..., i, mu, rho, k, m]."""
    return np.einsum("ulj,ilgr,...rjbkm,gbp->...iupkm", _i(C.d), _i(C.a), _i(sigma), _i(C.V), optimize=True)


def _leibniz_image(C: Calculus, gamma) -> np.ndarray:
    """nabla(w^i x^mu) - (nabla w^i) x^mu, indexed [..., i, mu, rho, k, m]."""
    a, d, V, G = _i(C.a), _i(C.d), _i(C.V), _i(gamma)
    m = C.m
    eye = np.eye(m, dtype=np.int64)
    left = np.einsum("iuvj,var,...jakm->...iurkm", a, V, G, optimize=True) + np.einsum("iuvj,vrk,jm->iurkm", a, d, eye)
    right = np.einsum("...ivst,tulm,slgk,vgr->...iurkm", G, a, a, V, optimize=True)
    return left + right


class SigmaSystem:
    """The right Leibniz rule as a linear system for sigma, reused across gammas."""

    def __init__(self, C: Calculus):
        self.C = C
        n, m = C.n, C.m
        self.gamma_size = m * n * m * m
        self.sigma_shape = (m, m, n, m, m)
        self.sigma_size = m * m * n * m * m
        L, zero = linearize(lambda s: _sigma_image(C, s.reshape(m, m, n, m, m)), self.sigma_size)
        assert not zero.any()
        self.solver = LinearSolver(L)
        # rhs is affine in gamma: B @ gamma + b0
        self.B, self.b0 = linearize(lambda x: _leibniz_image(C, x.reshape(m, n, m, m)), self.gamma_size)
        # sigma = S @ gamma + s0 whenever the system is solvable
        T = np.zeros((self.sigma_size, L.shape[0]), np.int64)
        T[self.solver.pivots] = self.solver._pivot_transform
        self.S = (T @ self.B.astype(np.int64) & 1).astype(np.uint8)
        self.s0 = (T @ self.b0.astype(np.int64) & 1).astype(np.uint8)
        self.Bm, _ = linearize(lambda s: sigma_bimodule_defect(C, s.reshape(m, m, n, m, m)), self.sigma_size)

    @property
    def unique(self) -> bool:
        return self.solver.kernel_dim == 0

    def bimodule_constraints(self) -> tuple[np.ndarray, np.ndarray]:
        """Linear conditions on gamma for the solved sigma to be a bimodule map."""
        Bm = self.Bm.astype(np.int64)
        return (Bm @ self.S & 1).astype(np.uint8), (Bm @ self.s0 & 1).astype(np.uint8)

    def bimodule_mask(self, sigmas: np.ndarray) -> np.ndarray:
        return ~matmul(sigmas.reshape(len(sigmas), -1), self.Bm.T).any(axis=1)

    def solvability_constraints(self) -> tuple[np.ndarray, np.ndarray]:
        """Linear conditions ``M gamma = r`` equivalent to sigma existing."""
        checks = self.solver.consistency_matrix()
        return (checks.astype(np.int64) @ self.B.astype(np.int64) & 1).astype(np.uint8), (
            checks.astype(np.int64) @ self.b0.astype(np.int64) & 1
        ).astype(np.uint8)

    def solve_batch(self, gammas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Consistency mask and sigma tensors for a stack of flat gammas."""
        rhs = matmul(gammas, self.B.T) ^ self.b0
        ok, sol = self.solver.solve_batch(rhs)
        C = self.C
        return ok, sol.reshape(len(gammas), C.m, C.m, C.n, C.m, C.m)


def solve_sigma(C: Calculus, gamma, system: SigmaSystem | None = None) -> np.ndarray:
    """The unique braiding for gamma; raises NoSigma or AmbiguousSigma."""
    system = system or SigmaSystem(C)
    ok, sig = system.solve_batch(as_f2(gamma).reshape(1, -1))
    if not ok[0]:
        raise NoSigma("right Leibniz rule has no solution")
    if not system.unique:
        raise AmbiguousSigma(f"braiding solution space has dimension {system.solver.kernel_dim}")
    sig = sig[0]
    if sigma_bimodule_defect(C, sig).any():
        raise NoSigma("braiding solution is not a bimodule map")
    return sig


def right_leibniz_defect(C: Calculus, gamma, sigma) -> np.ndarray:
    return as_f2(_leibniz_image(C, gamma) + _sigma_image(C, sigma))


def sigma_bimodule_defect(C: Calculus, sigma) -> np.ndarray:
    """sigma(w^i (x) w^j x^mu) - sigma(w^i (x) w^j) x^mu, indexed [..., i, j, mu, tau, s, t]."""
    a, V, S = _i(C.a), _i(C.V), _i(sigma)
    lhs = np.einsum("jmvk,ivrl,...lkcst,rcz->...ijmzst", a, a, S, V, optimize=True)
    rhs = np.einsum("...ijrkl,lmvt,kvcs,rcz->...ijmzst", S, a, a, V, optimize=True)
    return as_f2(lhs + rhs)


# --- torsion, cotorsion, compatibility -----------------------------------


def torsion(C: Calculus, E: ExteriorData, gamma) -> np.ndarray:
    """Coefficients of (wedge nabla - d) w^i, indexed [..., i, rho]."""
    if not E.free:
        return np.zeros(np.shape(gamma)[:-4] + (C.m, C.n), np.uint8)
    t = np.einsum("...ivkm,kma,var->...ir", _i(gamma), _i(E.eps), _i(C.V), optimize=True)
    return as_f2(t + _i(E.tau))


def check_torsion_free(C: Calculus, E: ExteriorData, gamma) -> bool:
    return not torsion(C, E, gamma).any()


def cotorsion(C: Calculus, E: ExteriorData, g, gamma) -> np.ndarray:
    """Coefficients of (d (x) id - id ^ nabla) g on x^theta Vol (x) w^n, indexed [..., theta, n]."""
    if not E.free:
        return np.zeros(np.shape(gamma)[:-4] + (C.n, C.m), np.uint8)
    a, d, V, g = _i(C.a), _i(C.d), _i(C.V), _i(g)
    eps, tau = _i(E.eps), _i(E.tau)
    first = np.einsum("cin,clk,kis,lst->tn", g, d, eps, V, optimize=True) + np.einsum("cin,il,clt->tn", g, tau, V)
    second = np.einsum("cij,ilsr,...jlkn,rkb,csz,zbt->...tn", g, a, _i(gamma), eps, V, V, optimize=True)
    return as_f2(first + second)


def check_cotorsion_free(C: Calculus, E: ExteriorData, g, gamma) -> bool:
    return not cotorsion(C, E, g, gamma).any()


class _CompatibilityKernel:
    """Precomputed pieces of the nabla g = 0 identity for a fixed metric."""

    def __init__(self, C: Calculus, g):
        a, d, V, g = _i(C.a), _i(C.d), _i(C.V), _i(g)
        self.V = V
        self.const = np.einsum("umn,uvk->vkmn", g, d)
        self.GV = np.einsum("uin,urv->irnv", g, V)
        self.P = np.einsum("uij,ibat,uaz->jbtz", g, a, V, optimize=True)

    def __call__(self, gamma, sigma) -> np.ndarray:
        G, S = _i(gamma), _i(sigma)
        t2 = np.einsum("...irkm,irnv->...vkmn", G, self.GV)
        U = np.einsum("...jbsn,jbtz->...sntz", G, self.P)
        t3 = np.einsum("...sntz,...tsckm,zcv->...vkmn", U, S, self.V, optimize=True)
        return (self.const + t2 + t3) & 1

    def batch_any(self, C: Calculus, gammas: np.ndarray, sigmas: np.ndarray) -> np.ndarray:
        """Per row of flat gammas and sigmas, whether the defect is nonzero."""
        if not hasattr(self, "_mats"):
            self._prepare(C)
        T2, Umat, Wmat, K, n_out = self._mats
        B = len(gammas)
        lin = matmul(gammas, T2) ^ self.const.reshape(-1)
        U = (gammas.astype(np.float32) @ Umat).reshape(B, K, C.m)
        W = (sigmas.reshape(B, -1).astype(np.float32) @ Wmat).reshape(B, K, n_out)
        quad = np.matmul(U.transpose(0, 2, 1), W).astype(np.int64)  # [b, n, (v,k,m)]
        quad = quad.reshape(B, C.m, n_out).transpose(0, 2, 1).reshape(B, -1)
        return ((lin + quad) & 1).any(axis=1)

    def _prepare(self, C: Calculus) -> None:
        m, n = C.m, C.n
        gshape, sshape = (m, n, m, m), (m, m, n, m, m)
        gsize, ssize = int(np.prod(gshape)), int(np.prod(sshape))
        T2, _ = linearize(lambda x: np.einsum("irkm,irnv->vkmn", _i(x.reshape(gshape)), self.GV), gsize)
        # U[s, t, z, n] and W[s, t, z, (v, k, m)] share the contracted index (s, t, z)
        Umat, _ = linearize(lambda x: np.einsum("jbsn,jbtz->stzn", _i(x.reshape(gshape)), self.P), gsize)
        Wmat, _ = linearize(lambda x: np.einsum("tsckm,zcv->stzvkm", _i(x.reshape(sshape)), self.V), ssize)
        K = m * m * n
        self._mats = (T2.T.copy(), Umat.T.astype(np.float32), Wmat.T.astype(np.float32), K, n * m * m)


def metric_compatibility_defect(C: Calculus, g, gamma, sigma) -> np.ndarray:
    """Coefficients of nabla g on x^nu w^k (x) w^m (x) w^n, indexed [..., nu, k, m, n]."""
    return as_f2(_CompatibilityKernel(C, g)(gamma, sigma))


def check_metric_compatible(C: Calculus, g, gamma, sigma) -> bool:
    return not metric_compatibility_defect(C, g, gamma, sigma).any()


def classify_connection(C: Calculus, E: ExteriorData, g, gamma, system: SigmaSystem | None = None):
    """Full flag set for one gamma; returns (Connection, ConnectionClassification)."""
    try:
        sigma = solve_sigma(C, gamma, system)
    except NoSigma:
        sigma = None
    tf = check_torsion_free(C, E, gamma)
    cot = None if g is None else check_cotorsion_free(C, E, g, gamma)
    comp = None
    if g is not None:
        comp = sigma is not None and check_metric_compatible(C, g, gamma, sigma)
    flags = ConnectionClassification(tf, cot, sigma is not None, comp)
    return Connection(gamma, sigma), flags


# --- the sweep ----------------------------------------------------------


def _gamma_shape(C: Calculus) -> tuple[int, int, int, int]:
    return (C.m, C.n, C.m, C.m)


def candidate_space(C: Calculus, E: ExteriorData, g, mode: Mode, system: SigmaSystem | None = None) -> AffineSolutionSet:
    """The affine set of gammas left after the linear necessary conditions.

    Torsion freeness (qlc, wqlc) and cotorsion freeness (wqlc) are linear in
    gamma. For modes needing a braiding, solvability of the sigma system is
    linear in gamma as well and is intersected in.
    """
    N = int(np.prod(_gamma_shape(C)))
    space = AffineSolutionSet(np.zeros(N, np.uint8), np.eye(N, dtype=np.uint8), N)
    shape = _gamma_shape(C)
    if mode in ("qlc", "wqlc") and E.free:
        M, b = linearize(lambda x: torsion(C, E, x.reshape(shape)), N)
        space = space.intersect(M, b)
    if mode == "wqlc" and E.free:
        M, b = linearize(lambda x: cotorsion(C, E, g, x.reshape(shape)), N)
        space = space.intersect(M, b)
    if mode in ("qlc", "metric_compatible_only"):
        system = system or SigmaSystem(C)
        M, r = system.solvability_constraints()
        if len(M):
            space = space.intersect(M, r)
        if system.unique:
            M, r = system.bimodule_constraints()
            space = space.intersect(M, r)
    return space


@dataclass(frozen=True)
class _SweepTask:
    C: Calculus
    g: np.ndarray
    mode: str
    space: AffineSolutionSet

    @cached_property
    def system(self) -> SigmaSystem:
        return SigmaSystem(self.C)

    @cached_property
    def compat(self) -> _CompatibilityKernel:
        return _CompatibilityKernel(self.C, self.g)


def _sweep_range(task: _SweepTask, start: int, stop: int) -> np.ndarray:
    """Members of the candidate space in [start, stop) passing the nonlinear checks."""
    keep = []
    shape = _gamma_shape(task.C)
    for lo in range(start, stop, CHUNK):
        hi = min(stop, lo + CHUNK)
        flat = task.space.members(lo, hi)
        if task.mode == "wqlc":
            keep.append(flat)
            continue
        # the candidate space already forces sigma to exist and be a bimodule map
        sig = (matmul(flat, task.system.S.T) ^ task.system.s0).reshape((len(flat),) + task.system.sigma_shape)
        defect = task.compat.batch_any(task.C, flat, sig)
        keep.append(flat[~defect])
    if not keep:
        return np.zeros((0, int(np.prod(shape))), np.uint8)
    return np.concatenate(keep)


def _sort_rows(rows: np.ndarray) -> np.ndarray:
    if len(rows) == 0:
        return rows
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("FQRG_WORKERS", "1")))
    except ValueError:
        return 1


def classify_connections(
    C: Calculus,
    E: ExteriorData,
    g,
    mode: Mode = "qlc",
    workers: int | None = None,
) -> list[tuple[Connection, ConnectionClassification]]:
    """All connections of the requested kind, ordered lexicographically by gamma bits.

    ``g`` is a metric tensor or QuantumMetric. The candidate set is the
    affine space from :func:`candidate_space`; each member gets its braiding
    solved and the compatibility identity evaluated. With ``workers > 1``
    contiguous index ranges run in separate processes.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    g = getattr(g, "g", g)
    g = as_f2(g)
    system = SigmaSystem(C)
    if mode != "wqlc" and not system.unique:
        raise AmbiguousSigma(f"braiding solution space has dimension {system.solver.kernel_dim}")
    space = candidate_space(C, E, g, mode, system)
    total = space.size
    workers = workers or default_workers()
    task = _SweepTask(C, g, mode, space)
    if workers <= 1 or total < 2 * CHUNK:
        rows = _sweep_range(task, 0, total)
    else:
        bounds = np.linspace(0, total, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sweep_range, [task] * workers, bounds[:-1], bounds[1:]))
        rows = np.concatenate(parts)
    rows = _sort_rows(rows)
    shape = _gamma_shape(C)
    return [classify_connection(C, E, g, r.reshape(shape), system) for r in rows]


def classify_connections_bruteforce(C: Calculus, E: ExteriorData, g, mode: Mode = "qlc"):
    """Reference classifier: every gamma, one at a time, no pruning."""
    g = as_f2(getattr(g, "g", g))
    shape = _gamma_shape(C)
    out = []
    for bits in coefficient_vectors(int(np.prod(shape))):
        conn, flags = classify_connection(C, E, g, bits.reshape(shape))
        hit = {
            "qlc": flags.qlc,
            "wqlc": flags.wqlc,
            "metric_compatible_only": bool(flags.bimodule and flags.metric_compatible),
        }[mode]
        if hit:
            out.append((conn, flags))
    return out
