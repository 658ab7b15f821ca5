"""Dense linear algebra over the two-element field.

Matrices and vectors are numpy ``uint8`` arrays holding 0/1 entries.
Elimination packs each row into a Python int so that row operations are
single XOR instructions regardless of width.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

__all__ = [
    "as_f2",
    "pack_row",
    "unpack_row",
    "rank",
    "kernel",
    "solve_affine",
    "AffineSolutionSet",
    "LinearSolver",
    "linearize",
    "matmul",
    "inverse",
    "coefficient_vectors",
]


def as_f2(a) -> np.ndarray:
    """Coerce to a uint8 array reduced mod 2."""
    return (np.asarray(a, dtype=np.int64) & 1).astype(np.uint8)


def pack_row(row) -> int:
    """Pack a 0/1 vector into an int, entry j at bit j."""
    bits = np.packbits(as_f2(row), bitorder="little")
    return int.from_bytes(bits.tobytes(), "little")


def unpack_row(value: int, width: int) -> np.ndarray:
    nbytes = max(1, (width + 7) // 8)
    raw = np.frombuffer(value.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:width].copy()


def matmul(a, b) -> np.ndarray:
    """Matrix product mod 2."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape[-1] < (1 << 24):
        # float32 sums of 0/1 products are exact below 2^24 and hit BLAS
        prod = a.astype(np.float32) @ b.astype(np.float32)
        return (prod.astype(np.int64) & 1).astype(np.uint8)
    return (a.astype(np.int64) @ b.astype(np.int64) & 1).astype(np.uint8)


def _eliminate(rows: list[int], ncols: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form on packed rows.

    Only bits below ``ncols`` are used as pivots; higher bits ride along,
    which is how augmented columns are carried.
    """
    rows = [r for r in rows if r]
    pivots: list[int] = []
    reduced: list[int] = []
    for col in range(ncols):
        bit = 1 << col
        for k, r in enumerate(rows):
            if r & bit:
                break
        else:
            continue
        pivot = rows.pop(k)
        reduced = [r ^ pivot if r & bit else r for r in reduced]
        rows = [r ^ pivot if r & bit else r for r in rows]
        reduced.append(pivot)
        pivots.append(col)
    # rows left over have no pivot among the first ncols columns
    return pivots, reduced + [r for r in rows if r]


def rank(M) -> int:
    M = as_f2(M)
    if M.size == 0:
        return 0
    pivots, _ = _eliminate([pack_row(r) for r in M], M.shape[1])
    return len(pivots)


def _kernel_from_rref(pivots: list[int], reduced: list[int], ncols: int) -> np.ndarray:
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = np.zeros((len(free), ncols), dtype=np.uint8)
    for b, f in enumerate(free):
        basis[b, f] = 1
        for p, r in zip(pivots, reduced):
            if (r >> f) & 1:
                basis[b, p] = 1
    return basis


def kernel(M) -> np.ndarray:
    """Null space basis as rows, one per free column in increasing order."""
    M = as_f2(M)
    ncols = M.shape[1]
    pivots, reduced = _eliminate([pack_row(r) for r in M], ncols)
    return _kernel_from_rref(pivots, reduced[: len(pivots)], ncols)


@dataclass(frozen=True)
class AffineSolutionSet:
    """Solutions ``particular + span(basis)``; ``particular`` is None when inconsistent."""

    particular: np.ndarray | None
    basis: np.ndarray
    ncols: int

    @property
    def consistent(self) -> bool:
        return self.particular is not None

    @property
    def dim(self) -> int:
        return len(self.basis) if self.consistent else -1

    @property
    def size(self) -> int:
        """Number of members; unlike ``len`` this is exact beyond 2**63."""
        return (1 << len(self.basis)) if self.consistent else 0

    def __len__(self) -> int:
        return self.size

    def element(self, index: int) -> np.ndarray:
        """Member number ``index``; the first basis vector is the most significant coefficient."""
        if not 0 <= index < self.size:
            raise IndexError("member index out of range")
        return self.members(index, index + 1)[0]

    def members(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Members ``start..stop-1`` stacked as rows, in enumeration order."""
        if not self.consistent:
            return np.zeros((0, self.ncols), dtype=np.uint8)
        k = len(self.basis)
        stop = self.size if stop is None else min(stop, self.size)
        idx = np.arange(start, stop, dtype=np.int64)
        if k == 0:
            return np.tile(self.particular, (len(idx), 1))
        shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
        coeffs = (idx[:, None] >> shifts[None, :]) & 1
        return matmul(coeffs, self.basis) ^ self.particular[None, :]

    def __iter__(self) -> Iterator[np.ndarray]:
        for i in range(self.size):
            yield self.element(i)

    def contains(self, x) -> bool:
        if not self.consistent:
            return False
        diff = as_f2(x) ^ self.particular
        if not diff.any():
            return True
        if len(self.basis) == 0:
            return False
        return rank(np.vstack([self.basis, diff])) == len(self.basis)

    def intersect(self, M, rhs) -> "AffineSolutionSet":
        """Restrict to the members that also satisfy ``M x = rhs``."""
        if not self.consistent:
            return self
        M = as_f2(M)
        # substitute x = p + c @ basis and solve for c
        reduced_rhs = as_f2(rhs) ^ matmul(M, self.particular)
        if len(self.basis) == 0:
            if reduced_rhs.any():
                return AffineSolutionSet(None, self.basis, self.ncols)
            return self
        sub = solve_affine(matmul(M, self.basis.T), reduced_rhs)
        if not sub.consistent:
            return AffineSolutionSet(None, np.zeros((0, self.ncols), np.uint8), self.ncols)
        particular = self.particular ^ matmul(sub.particular, self.basis)
        basis = matmul(sub.basis, self.basis) if len(sub.basis) else np.zeros((0, self.ncols), np.uint8)
        return AffineSolutionSet(particular, basis, self.ncols)


def solve_affine(M, rhs) -> AffineSolutionSet:
    M = as_f2(M)
    rhs = as_f2(rhs).reshape(-1)
    if M.ndim != 2 or M.shape[0] != rhs.shape[0]:
        raise ValueError("matrix rows and rhs length differ")
    return LinearSolver(M).solve(rhs)


class LinearSolver:
    """Elimination of a fixed matrix, reusable for many right-hand sides.

    The row operations are recorded as a transform ``T`` with ``T @ M``
    in reduced echelon form, so a batch of right-hand sides costs one
    matrix product.
    """

    def __init__(self, M):
        M = as_f2(M)
        self.M = M
        self.nrows, self.ncols = M.shape
        shift = self.ncols
        rows = [pack_row(r) | (1 << (shift + k)) for k, r in enumerate(M)]
        pivots, reduced = _eliminate(rows, self.ncols)
        # rows without pivots are pure combinations of the identity block
        zero_rows = [r for r in reduced[len(pivots):]]
        reduced = reduced[: len(pivots)]
        mask = (1 << shift) - 1
        self.pivots = np.asarray(pivots, dtype=np.int64)
        self.rank = len(pivots)
        self.basis = _kernel_from_rref(pivots, [r & mask for r in reduced], self.ncols)
        width = self.nrows
        self._pivot_transform = (
            np.vstack([unpack_row(r >> shift, width) for r in reduced])
            if reduced
            else np.zeros((0, width), np.uint8)
        )
        # identity rows that eliminated to zero give the consistency checks
        left = [r >> shift for r in zero_rows]
        self._checks = (
            np.vstack([unpack_row(r, width) for r in left]) if left else np.zeros((0, width), np.uint8)
        )

    @property
    def kernel_dim(self) -> int:
        return self.ncols - self.rank

    def solve(self, rhs) -> AffineSolutionSet:
        ok, part = self.solve_batch(as_f2(rhs).reshape(1, -1))
        if not ok[0]:
            return AffineSolutionSet(None, self.basis, self.ncols)
        return AffineSolutionSet(part[0], self.basis, self.ncols)

    def solve_batch(self, rhs) -> tuple[np.ndarray, np.ndarray]:
        """Solve ``M x = r`` for every row ``r`` of ``rhs``.

        Returns a boolean consistency mask and one particular solution per
        row (free variables set to zero; rows that are inconsistent hold junk).
        """
        rhs = as_f2(rhs)
        ok = ~matmul(rhs, self._checks.T).any(axis=1) if len(self._checks) else np.ones(len(rhs), bool)
        out = np.zeros((len(rhs), self.ncols), dtype=np.uint8)
        if self.rank:
            out[:, self.pivots] = matmul(rhs, self._pivot_transform.T)
        return ok, out

    def consistency_matrix(self) -> np.ndarray:
        """Rows ``c`` with ``c @ rhs = 0`` iff the system is solvable."""
        return self._checks


def linearize(fn: Callable[[np.ndarray], np.ndarray], nvars: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrix form ``fn(x) = A x + b`` of a map that is affine over F2.

    ``fn`` takes a flat 0/1 vector and returns any-shaped array; it is
    probed at zero and at each unit vector.
    """
    zero = np.zeros(nvars, dtype=np.uint8)
    b = as_f2(fn(zero)).reshape(-1)
    cols = []
    for j in range(nvars):
        e = zero.copy()
        e[j] = 1
        cols.append(as_f2(fn(e)).reshape(-1) ^ b)
    A = np.stack(cols, axis=1) if cols else np.zeros((b.size, 0), np.uint8)
    return A, b


def inverse(M) -> np.ndarray | None:
    """Inverse of a square matrix, or None when singular."""
    M = as_f2(M)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("square matrix required")
    solver = LinearSolver(M)
    if solver.rank < n:
        return None
    _, x = solver.solve_batch(np.eye(n, dtype=np.uint8))
    return x.T.copy()


def coefficient_vectors(k: int) -> np.ndarray:
    """All 2^k vectors of length k in lexicographic order (first entry most significant)."""
    idx = np.arange(1 << k, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
