from functools import lru_cache

import numpy as np
import pytest

from fqrg import catalog as cat
from fqrg.connection import classify_connections, solve_sigma
from fqrg.f2_linalg import coefficient_vectors
from fqrg.geometry import curvature, enumerate_lifts, laplacian, ricci
from fqrg.metric import quantum_dimension
from fqrg.reproduce import lift_tensors
from oracles import bits, commutes, d_of, form, forms, gen, nabla_one_form

ALG_OF = {"D": ("D.univ", "eps_D"), "B": ("B.univ", "eps_B"), "F": ("F.univ", "eps_F")}
METRICS = ["g_D.1", "g_D.2", "g_D.3", "g_B", "g_F.1", "g_F.2", "g_F.3", "g_F.4"]


def setup(mid):
    C = cat.build_calculus(cat.metric_calculus(mid))
    return C, cat.build_exterior(cat.metric_exterior(mid)), cat.build_metric(mid)


@lru_cache(maxsize=None)
def qlcs(mid):
    C, E, M = setup(mid)
    return tuple(c for c, _ in classify_connections(C, E, M.g, "qlc", 1))


def mul(A, u, v):
    return bits(A.product(bits(u), bits(v)))


def unit(n, k):
    e = np.zeros(n, np.int64)
    e[k] = 1
    return e


# --- oracles ---------------------------------------------------------------------


def curvature_oracle(C, E, gamma):
    """(d (x) id - id ^ nabla) nabla w^i term by term, as rho[i, j, beta]."""
    A, n = C.algebra, C.n
    a, d = bits(C.a), bits(C.d)
    rho = np.zeros((C.m, C.m, n), np.int64)
    for i in range(C.m):
        for nu, k, m in zip(*np.nonzero(bits(gamma[i]))):
            x = unit(n, nu)
            # d(x^nu w^k) = dx^nu ^ w^k + x^nu dw^k
            for al, l in zip(*np.nonzero(d[nu])):
                rho[i, m] ^= mul(A, unit(n, al), E.eps[l, k])
            rho[i, m] ^= mul(A, x, E.tau[k])
            # x^nu w^k ^ nabla w^m
            for mu, p, q in zip(*np.nonzero(bits(gamma[m]))):
                for r, l in zip(*np.nonzero(a[k, mu])):
                    rho[i, q] ^= mul(A, x, mul(A, unit(n, r), E.eps[l, p]))
    return rho & 1


def laplacian_oracle(C, M, gamma):
    A = C.algebra
    cols = []
    for mu in range(C.n):
        nd = nabla_one_form(C, gamma, d_of(C, unit(C.n, mu)))
        out = np.zeros(C.n, np.int64)
        for nu, k, m in zip(*np.nonzero(nd.coeffs)):
            out ^= mul(A, unit(C.n, nu), M.ginv[k, m])
        cols.append(out)
    return np.stack(cols, axis=1)


def ricci_oracle(C, M, rho, I):
    """((,) (x) id)(id (x) i (x) id)(id (x) R) g with every function moved by Form."""
    A = C.algebra
    w = forms(C)
    Iform = form(C, I)
    out = np.zeros((C.n, C.m, C.m), np.int64)
    for al, m, nn in zip(*np.nonzero(bits(M.g))):
        for j, b in zip(*np.nonzero(rho[nn])):
            T = gen(C, al) * (w[m] @ (gen(C, b) * Iform) @ w[j])
            for mu, p, q, i, jj in zip(*np.nonzero(T.coeffs)):
                out[:, i, jj] ^= mul(A, unit(C.n, mu), M.ginv[p, q])
    return out & 1


# --- curvature ---------------------------------------------------------------------


@pytest.mark.parametrize("mid", METRICS)
def test_curvature_matches_term_by_term_oracle(mid):
    C, E, _ = setup(mid)
    for conn in qlcs(mid):
        assert (curvature(C, E, conn).rho == curvature_oracle(C, E, conn.gamma)).all()


@pytest.mark.parametrize("fid", [f for f in cat.fixture_ids("connection") if "R" in cat.load_fixture(f).payload])
def test_curvature_matches_printed(fid):
    mid = cat.load_fixture(fid).payload["metric"]
    C, E, _ = setup(mid)
    assert (curvature(C, E, cat.printed_gamma(fid)).rho == cat.printed_curvature(fid)).all()


def test_curvature_examples():
    C, E, _ = setup("g_D.1")
    assert curvature(C, E, cat.printed_gamma("nabla_D.1.2")).flat
    ctx = cat.context("D.univ")
    rho = curvature(C, E, cat.printed_gamma("nabla_D.1.1")).rho
    assert (rho[0, 0] == ctx.function("z^2")).all() and (rho[0, 1] == ctx.function("z")).all()
    assert (rho[1, 0] == ctx.function("1")).all() and not rho[1, 1].any()
    C, E, _ = setup("g_B")
    rho = curvature(C, E, cat.printed_gamma("nabla_B.4")).rho
    one = cat.context("B.univ").function("1")
    assert (rho[0, 0] == one).all() and (rho[1, 1] == one).all() and not rho[0, 1].any() and not rho[1, 0].any()


# --- Laplacian --------------------------------------------------------------------


@pytest.mark.parametrize("mid", METRICS)
def test_laplacian_matches_form_oracle_and_kills_constants(mid):
    C, _, M = setup(mid)
    for conn in qlcs(mid):
        L = laplacian(C, M, conn)
        assert (L.matrix == laplacian_oracle(C, M, conn.gamma)).all()
        assert not L.matrix[:, 0].any()


@pytest.mark.parametrize("mid", METRICS)
def test_laplacian_vanishes_exactly_when_quantum_dimension_does(mid):
    C, _, M = setup(mid)
    qdim = quantum_dimension(M).any()
    for conn in qlcs(mid):
        assert laplacian(C, M, conn).zero == (not qdim)


@pytest.mark.parametrize("mid", METRICS)
def test_spectral_shape_follows_the_trace(mid):
    C, _, M = setup(mid)
    for conn in qlcs(mid):
        L = laplacian(C, M, conn)
        assert L.diagonalizable == (L.kernel_dim + L.eigen1_dim == L.n)
        if L.zero:
            continue
        if L.trace:
            assert (L.kernel_dim, L.eigen1_dim) == (2, 1)
        else:
            assert (L.kernel_dim, L.eigen1_dim, L.diagonalizable) == (1, 0, False)
        for v in L.massive_eigenvectors:
            assert (L.apply(v.coeffs) == v.coeffs).all()


def test_laplacian_examples():
    ctx = cat.context("D.univ")
    C, _, M = setup("g_D.1")
    for conn in qlcs("g_D.1"):
        L = laplacian(C, M, conn)
        assert (L.apply(ctx.function("z")) == ctx.function("1")).all()
        assert (L.apply(ctx.function("z^2")) == ctx.function("z")).all()
        assert L.trace == 0
    C, _, M = setup("g_B")
    assert all(laplacian(C, M, c).zero for c in qlcs("g_B"))
    C, _, M = setup("g_F.1")
    fctx = cat.context("F.univ")
    L = laplacian(C, M, cat.printed_gamma("nabla_F.1.1"))
    assert L.trace == 1
    assert [v.coeffs.tolist() for v in L.massive_eigenvectors] == [fctx.function("y^2").tolist()]


# --- lifts ---------------------------------------------------------------------------


def brute_lifts(C, E):
    A = C.algebra
    shape = (C.n, C.m, C.m)
    out = []
    for v in coefficient_vectors(int(np.prod(shape))):
        I = v.reshape(shape)
        top = np.zeros(C.n, np.int64)
        for mu, i, j in zip(*np.nonzero(I)):
            top ^= mul(A, unit(C.n, mu), E.eps[i, j])
        if (top == unit(C.n, 0)).all() and commutes(C, I):
            out.append(I.astype(np.uint8).tobytes())
    return set(out)


@pytest.mark.parametrize("alg", ["D", "B", "F"])
def test_lifts_match_exhaustive_search(alg):
    C = cat.build_calculus(ALG_OF[alg][0])
    E = cat.build_exterior(ALG_OF[alg][1])
    lifts = enumerate_lifts(C, E)
    assert {L.I.astype(np.uint8).tobytes() for L in lifts} == brute_lifts(C, E)
    assert len(lifts) == 8


@pytest.mark.parametrize("mid", METRICS)
def test_lift_space_is_a_coset_of_functions_times_metric(mid):
    C, E, M = setup(mid)
    lifts = enumerate_lifts(C, E, M.g)
    base = lifts[0].I
    coset = set()
    for gam in coefficient_vectors(C.n):
        offset = form(C, M.g)._left(_el(C, gam)).coeffs
        coset.add((bits(base) ^ bits(offset)).astype(np.uint8).tobytes())
    assert {L.I.tobytes() for L in lifts} == coset
    assert all(L.gamma_offset is not None for L in lifts)


def _el(C, v):
    from fqrg.algebra import Element

    return Element(C.algebra, np.asarray(v, np.uint8))


def test_one_dimensional_lift_is_unique():
    C = cat.build_calculus("n2:A.univ")
    assert len(enumerate_lifts(C, cat.build_exterior("n2:eps_A"))) == 1


# --- Ricci and Einstein --------------------------------------------------------------------


@pytest.mark.parametrize("mid", METRICS)
def test_ricci_matches_form_oracle_for_every_lift(mid):
    C, E, M = setup(mid)
    lifts = enumerate_lifts(C, E, M.g)
    for conn in qlcs(mid)[:4]:
        rho = curvature(C, E, conn).rho
        for L in lifts[::3]:
            rep = ricci(C, E, M, conn, L)
            assert (rep.ricci == ricci_oracle(C, M, rho, L.I)).all()


@pytest.mark.parametrize("mid", METRICS)
def test_einstein_minus_ricci_is_scalar_times_metric(mid):
    C, E, M = setup(mid)
    A = C.algebra
    for conn in qlcs(mid):
        for L in enumerate_lifts(C, E, M.g):
            rep = ricci(C, E, M, conn, L)
            S = np.zeros(C.n, np.int64)
            for z, i, j in zip(*np.nonzero(rep.ricci)):
                S ^= mul(A, unit(C.n, z), M.ginv[i, j])
            assert (rep.scalar == S).all()
            Sg = form(C, M.g)._left(_el(C, rep.scalar)).coeffs
            assert ((rep.einstein ^ rep.ricci) == Sg).all()


@pytest.mark.parametrize("mid", METRICS)
def test_flat_connections_are_ricci_flat_for_every_lift(mid):
    C, E, M = setup(mid)
    lifts = enumerate_lifts(C, E, M.g)
    flat = [c for c in qlcs(mid) if curvature(C, E, c).flat]
    assert flat
    for conn in flat:
        for L in lifts:
            rep = ricci(C, E, M, conn, L)
            assert not rep.ricci.any() and not rep.scalar.any()


def printed_lifts(alg):
    # lifts indexed by the gamma triple in the printed basis
    return lift_tensors(alg)


def test_ricci_examples():
    C, E, M = setup("g_D.1")
    rep = ricci(C, E, M, cat.build_connection("nabla_D.1.1"), printed_lifts("D")[(0, 1, 0)])
    assert (rep.ricci == M.g).all() and rep.scalar.tolist() == [1, 0, 0]
    assert not rep.einstein.any() and rep.div_ricci_zero
    C, E, M = setup("g_F.1")
    conn = cat.build_connection("nabla_F.1.10")
    eins_zero = [t for t, I in printed_lifts("F").items() if not ricci(C, E, M, conn, I).einstein.any()]
    assert eins_zero and all(t[0] == t[1] and t[2] == 0 for t in eins_zero)


def test_b4_ricci_is_never_quantum_symmetric():
    C, E, M = setup("g_B")
    conn = cat.build_connection("nabla_B.4")
    reps = {t: ricci(C, E, M, conn, I) for t, I in printed_lifts("B").items()}
    assert not any(r.ricci_qsym for r in reps.values())
    hits = [t for t, r in reps.items() if r.div_eins_zero]
    assert any(t[1] == t[2] == 1 for t in hits)


def test_one_dimensional_pipeline():
    C = cat.build_calculus("n2:A.univ")
    E = cat.build_exterior("n2:eps_A")
    M = cat.build_metric("n2:g_A.1")
    gamma = cat.context("n2:A.univ").tensor("x*w@w", 2)[None]
    conn = type("Conn", (), {"gamma": gamma, "sigma": solve_sigma(C, gamma)})()
    assert curvature(C, E, gamma).rho.tolist() == [[[1, 0]]]
    (L,) = enumerate_lifts(C, E, M.g)
    rep = ricci(C, E, M, conn, L)
    assert (rep.ricci == M.g).all() and rep.scalar.tolist() == [1, 0] and not rep.einstein.any()


def test_reports_serialise():
    C, E, M = setup("g_D.1")
    conn = cat.build_connection("nabla_D.1.1")
    L = enumerate_lifts(C, E, M.g)[0]
    for obj in (curvature(C, E, conn), laplacian(C, M, conn), L, ricci(C, E, M, conn, L)):
        assert obj.to_json()["schema"] == 1
