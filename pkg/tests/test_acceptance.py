"""Acceptance criteria 1 to 8, one printed PASS/FAIL line each.

Every criterion is exact: counts, tensors and flags are compared bit for bit
(tolerance 0). Run directly with ``python tests/test_acceptance.py`` or via
pytest, where the summary lines go to the terminal even under capture.
"""

from __future__ import annotations

import sys
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from fqrg import catalog as cat
from fqrg.algebra import enumerate_unital_algebras
from fqrg.calculus import ZERO_EXTERIOR, calculus_iso_classes, enumerate_calculi, solve_exterior
from fqrg.connection import SigmaSystem, classify_connections, classify_connections_bruteforce
from fqrg.f2_linalg import as_f2, inverse, matmul, rank, solve_affine
from fqrg.geometry import curvature, enumerate_lifts, laplacian, ricci
from fqrg.metric import quantum_dimension, quantum_metrics, solve_central_metrics
from fqrg.reproduce import formal_top_form, lift_tensors, reproduce

sys.path.insert(0, str(Path(__file__).parent))
from oracles import brute_rank, sigma_on_w_dx, sigma_via_commutators  # noqa: E402

TOLERANCE = 0  # every comparison is exact equality over F2


class Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.failures: list[str] = []
        self.count = 0

    def check(self, what: str, ok: bool) -> None:
        self.count += 1
        if not ok:
            self.failures.append(what)

    def line(self) -> str:
        status = "PASS" if not self.failures else "FAIL"
        detail = f"{self.count} checks, tolerance {TOLERANCE}"
        if self.failures:
            detail += "; failed: " + "; ".join(self.failures)
        return f"criterion {self.number} [{status}] {self.title}: {detail}"


@pytest.fixture
def criterion(request):
    made = []

    def make(number, title):
        made.append(Criterion(number, title))
        return made[-1]

    yield make
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    for c in made:
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(c.line())
        else:
            print(c.line())


def _finish(c: Criterion) -> None:
    assert not c.failures, c.line()


def _qmetric_setup(mid):
    C = cat.build_calculus(cat.metric_calculus(mid))
    return C, cat.build_exterior(cat.metric_exterior(mid)), cat.build_metric(mid)


@lru_cache(maxsize=None)
def _qlcs(mid):
    C, E, M = _qmetric_setup(mid)
    return tuple(classify_connections(C, E, M.g, "qlc", 1))


QMETRICS = ["g_D.1", "g_D.2", "g_D.3", "g_B", "g_F.1", "g_F.2", "g_F.3", "g_F.4"]


def test_criterion_1_algebras(criterion):
    c = criterion(1, "algebra enumeration")
    c.check("n=2 commutative has 3 classes", len(enumerate_unital_algebras(2, True)) == 3)
    comm3 = enumerate_unital_algebras(3, True)
    c.check("n=3 commutative has 6 classes", len(comm3) == 6)
    c.check("n=3 commutative classes are A to F", sorted(cat.label_algebra(A) for A in comm3) == list("ABCDEF"))
    all3 = enumerate_unital_algebras(3, False)
    c.check("n=3 with noncommutative includes G", "G" in {cat.label_algebra(A) for A in all3})
    _finish(c)


def test_criterion_2_calculi(criterion):
    c = criterion(2, "one-dimensional calculi over n=3 algebras")
    counts = {alg: len(enumerate_calculi(cat.build_algebra(alg), 1)) for alg in "ABCDEFG"}
    for alg, want in {"A": 0, "D": 0, "E": 0, "B": 8, "C": 4, "F": 14, "G": 48}.items():
        c.check(f"{alg} has {want} calculi (found {counts[alg]})", counts[alg] == want)
    classes = calculus_iso_classes(enumerate_calculi(cat.build_algebra("F"), 1))
    c.check("F calculi form 2 classes of 7", sorted(len(k) for k in classes) == [7, 7])
    c.check("C families match the printed table", reproduce("table3", 1).passed)
    _finish(c)


def test_criterion_3_metrics(criterion):
    c = criterion(3, "quantum metrics")
    F = cat.build_calculus("F.univ")
    found = quantum_metrics(F, cat.build_exterior("eps_F"))
    c.check("F has 7 quantum metrics", len(found) == 7)
    A = F.algebra
    V = A.V.astype(np.int64)
    orbit = {as_f2(np.einsum("v,uij,vur->rij", f.coeffs.astype(np.int64), found[0].g, V)).tobytes()
             for f in A.elements() if f.coeffs.any()}
    c.check("F metrics are one scaling orbit", orbit == {M.g.tobytes() for M in found})
    c.check("B has 1 quantum metric", len(quantum_metrics(cat.build_calculus("B.univ"), cat.build_exterior("eps_B"))) == 1)
    D = quantum_metrics(cat.build_calculus("D.univ"), cat.build_exterior("eps_D"))
    printed = {cat.metric_tensor(f"g_D.{k}").tobytes() for k in (1, 2, 3)}
    c.check("D has exactly the 3 printed metrics", {M.g.tobytes() for M in D} == printed and len(D) == 3)
    for tid in ("table2", "table3"):
        c.check(f"{tid} degenerate metrics", reproduce(tid, 1).passed)
    _finish(c)


def test_criterion_4_exteriors(criterion):
    c = criterion(4, "exterior algebra solutions")
    for alg, want in {"D": 3, "B": 1, "F": 7}.items():
        C = cat.build_calculus(f"{alg}.univ")
        ref = cat.metric_tensor(cat.load_fixture(f"eps_{alg}").expectations["qsym_metric"])
        sols = solve_exterior(C, require_metric_qsym=ref)
        c.check(f"{alg} has {want} solutions (found {len(sols)})", len(sols) == want)
        printed = cat.build_exterior(f"eps_{alg}")
        A = C.algebra
        mult = set()
        for E in sols:
            hits = [f for f in A.elements() if f.coeffs.any() and all(
                (A.product(f.coeffs, printed.eps[i, j]) == E.eps[i, j]).all() for i in range(C.m) for j in range(C.m))]
            c.check(f"{alg} solution is a unique multiple of the printed one", len(hits) == 1)
            mult.update(bytes(h.coeffs) for h in hits)
        c.check(f"{alg} multiples are distinct", len(mult) == len(sols))
    _finish(c)


def test_criterion_5_qlcs(criterion):
    c = criterion(5, "QLC classification")
    want = {"g_B": (4, 3), "g_D.1": (4, 1), "g_D.2": (4, 1), "g_D.3": (4, 1),
            "g_F.1": (12, 5), "g_F.2": (12, 5), "g_F.3": (12, 5), "g_F.4": (4, 3)}
    for mid, (n, nflat) in want.items():
        C, E, _ = _qmetric_setup(mid)
        res = _qlcs(mid)
        flat = sum(curvature(C, E, conn).flat for conn, _ in res)
        c.check(f"{mid} has {n} QLCs with {nflat} flat (found {len(res)}, {flat})", (len(res), flat) == (n, nflat))
    for mid, label in {"g_D.1": "nabla_D.1.2", "g_D.2": "nabla_D.2.4", "g_D.3": "nabla_D.3.1"}.items():
        C, E, _ = _qmetric_setup(mid)
        flat = [conn for conn, _ in _qlcs(mid) if curvature(C, E, conn).flat]
        c.check(f"{mid} flat connection is {label}", len(flat) == 1 and (flat[0].gamma == cat.printed_gamma(label)).all())
    F = cat.build_calculus("F.univ")
    E = cat.build_exterior("eps_F")
    labelled = {cat.metric_tensor(f"g_F.{k}").tobytes() for k in range(1, 5)}
    rest = [M for M in quantum_metrics(F, E) if M.g.tobytes() not in labelled]
    c.check("remaining 3 F metrics admit no QLC", len(rest) == 3 and all(not classify_connections(F, E, M, "qlc", 1) for M in rest))
    for tid in ("connections-D", "connections-B", "connections-F"):
        c.check(f"{tid} Christoffel symbols and curvature match bit for bit", reproduce(tid, 1).passed)
    _finish(c)


def test_criterion_6_laplacians(criterion):
    c = criterion(6, "Laplacians")
    one = {"D": cat.context("D.univ").function("1"), "B": cat.context("B.univ").function("1"), "F": cat.context("F.univ").function("1")}
    qdims = {"g_D.1": 1, "g_D.2": 1, "g_D.3": 0, "g_B": 0, "g_F.4": 0, "g_F.1": 1, "g_F.2": 1, "g_F.3": 1}
    for mid, q in qdims.items():
        M = cat.build_metric(mid)
        got = quantum_dimension(M)
        c.check(f"{mid} quantum dimension {q}", (got == (one[mid[2]] if q else 0 * one[mid[2]])).all())
    swept = 0
    massive = {}
    for mid in QMETRICS:
        C, _, M = _qmetric_setup(mid)
        qdim = quantum_dimension(M).any()
        for conn, _ in _qlcs(mid):
            L = laplacian(C, M, conn)
            swept += 1
            c.check(f"{mid}: Laplacian zero exactly when dimension is zero", L.zero == (not qdim))
            if mid.startswith("g_F"):
                massive.setdefault(mid, set()).update(cat.format_element(v.coeffs, "F") for v in L.massive_eigenvectors)
    c.check(f"sweep covered all {swept} classified pairs", swept == 4 * 5 + 12 * 3)
    c.check("massive eigenvectors", massive == {"g_F.1": {"y^2", "1+y+y^2"}, "g_F.2": {"y", "1+y+y^2"},
                                                 "g_F.3": {"y^2", "y"}, "g_F.4": set()})
    for mid in ("g_F.1", "g_F.2", "g_F.3"):
        C, _, M = _qmetric_setup(mid)
        groups = {}
        for conn, _ in _qlcs(mid):
            groups.setdefault(laplacian(C, M, conn).matrix.tobytes(), []).append(conn)
        c.check(f"{mid} QLCs fall into 3 Laplacians of 4", sorted(len(v) for v in groups.values()) == [4, 4, 4])
    c.check("printed Laplacian tables and traces", reproduce("laplacians", 1).passed)
    _finish(c)


def test_criterion_7_ricci(criterion):
    c = criterion(7, "Ricci and Einstein tables")
    for mid in QMETRICS:
        C, E, M = _qmetric_setup(mid)
        lifts = enumerate_lifts(C, E, M.g)
        c.check(f"{mid} has 8 lifts of the form I0 + gamma g", len(lifts) == 8 and all(L.gamma_offset is not None for L in lifts))
    for mid, fid, triple in (("g_D.1", "nabla_D.1.1", (0, 1, 0)), ("g_D.2", "nabla_D.2.1", (0, 0, 0))):
        C, E, M = _qmetric_setup(mid)
        r = ricci(C, E, M, cat.build_connection(fid), lift_tensors("D")[triple])
        c.check(f"{mid} lift {triple}: Ricci = g, S = 1, Einstein = 0",
                (r.ricci == M.g).all() and r.scalar.tolist() == [1, 0, 0] and not r.einstein.any())
    for mid, label in (("g_F.1", "nabla_F.1.10"), ("g_F.2", "nabla_F.2.3"), ("g_F.3", "nabla_F.3.2")):
        C, E, M = _qmetric_setup(mid)
        hits = []
        for conn, _ in _qlcs(mid):
            reps = [ricci(C, E, M, conn, I) for I in lift_tensors("F").values()]
            if any(r.ricci.any() and not r.einstein.any() for r in reps):
                hits.append(conn.gamma.tobytes())
        c.check(f"{label} is the only non Ricci flat QLC with Einstein = 0", hits == [cat.printed_gamma(label).tobytes()])
    for mid, alg in (("g_D.3", "D"), ("g_B", "B"), ("g_F.4", "F")):
        C, E, M = _qmetric_setup(mid)
        reps = [ricci(C, E, M, conn, I) for conn, _ in _qlcs(mid) if not curvature(C, E, conn).flat for I in lift_tensors(alg).values()]
        c.check(f"{mid} never has quantum symmetric Ricci", reps and not any(r.ricci_qsym for r in reps))
        unit = np.zeros(C.n, np.uint8)
        unit[0] = 1
        c.check(f"{mid} has a lift with divergence free Einstein and S = 1",
                any(r.div_eins_zero and (r.scalar == unit).all() for r in reps))
    for tid in ["lifts"] + [f"table{k}" for k in range(4, 16)]:
        c.check(f"{tid} cells", reproduce(tid, 1).passed)
    _finish(c)


def test_criterion_8_properties(criterion):
    c = criterion(8, "property suites")
    rng = np.random.default_rng(20261016)
    for size in (1, 2, 5, 8, 17, 32, 64):
        M = rng.integers(0, 2, (size, size), dtype=np.uint8)
        inv = inverse(M)
        if inv is not None:
            c.check(f"inverse round trip at {size}", (matmul(M, inv) == np.eye(size, dtype=np.uint8)).all())
        x = rng.integers(0, 2, size, dtype=np.uint8)
        sol = solve_affine(M, matmul(M, x[:, None]).reshape(-1))
        c.check(f"solve round trip at {size}", sol.consistent and (matmul(M, sol.particular[:, None]).reshape(-1) == matmul(M, x[:, None]).reshape(-1)).all())
        if size <= 17:
            c.check(f"rank agrees with span count at {size}", rank(M) == brute_rank(M))
    checked = 0
    for alg in ("B", "C", "F", "G"):
        for C in enumerate_calculi(cat.build_algebra(alg), 1):
            for E in (solve_exterior(C) or [ZERO_EXTERIOR])[:1] + [formal_top_form(C.n)]:
                for g in solve_central_metrics(C).members():
                    if not g.any():
                        continue
                    g = g.reshape(C.n, 1, 1)
                    for mode in ("qlc", "wqlc", "metric_compatible_only"):
                        fast = [(x.key(), f) for x, f in classify_connections(C, E, g, mode, 1)]
                        slow = [(x.key(), f) for x, f in classify_connections_bruteforce(C, E, g, mode)]
                        c.check(f"pruned equals exhaustive on {alg} in mode {mode}", fast == slow)
                        checked += 1
    c.check("pruned versus exhaustive covered configurations", checked > 100)
    for mid in QMETRICS:
        C, _, _ = _qmetric_setup(mid)
        c.check(f"{mid} braiding system is unique", SigmaSystem(C).unique)
        for conn, _ in _qlcs(mid):
            agree = all((sigma_on_w_dx(C, conn.sigma, i, mu).coeffs == sigma_via_commutators(C, conn.gamma, i, mu).coeffs).all()
                        for i in range(C.m) for mu in range(C.n))
            c.check(f"{mid} braiding agrees with the commutator formula", agree)
    C, E, M = _qmetric_setup("g_F.2")
    one = [(x.key(), f) for x, f in classify_connections(C, E, M.g, "qlc", 1)]
    two = [(x.key(), f) for x, f in classify_connections(C, E, M.g, "qlc", 2)]
    c.check("identical results for 1 and 2 workers", one == two)
    _finish(c)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
