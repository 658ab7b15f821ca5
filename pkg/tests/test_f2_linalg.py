import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fqrg import catalog as cat
from fqrg.f2_linalg import (
    AffineSolutionSet,
    as_f2,
    coefficient_vectors,
    inverse,
    kernel,
    linearize,
    matmul,
    pack_row,
    rank,
    solve_affine,
    unpack_row,
)
from fqrg.metric import solve_central_metrics
from oracles import brute_rank, brute_solutions


def f2_matrices(max_rows=64, max_cols=64):
    return st.tuples(st.integers(0, max_rows), st.integers(1, max_cols)).flatmap(
        lambda s: arrays(np.uint8, s, elements=st.integers(0, 1))
    )


def test_rank_identity():
    assert rank(np.eye(3, dtype=np.uint8)) == 3


def test_rank_zero_matrix():
    assert rank(np.zeros((2, 5), np.uint8)) == 0


def test_surjectivity_matrix_of_b_universal_calculus_has_full_rank():
    C = cat.build_calculus("B.univ")
    M = C.surjectivity_matrix()
    assert rank(M) == C.n * C.m == 6


def test_solve_identity_returns_rhs_with_no_kernel():
    v = np.array([1, 0, 1, 1], np.uint8)
    sols = solve_affine(np.eye(4, dtype=np.uint8), v)
    assert (sols.particular == v).all() and sols.dim == 0


def test_solve_zero_system_is_whole_space():
    sols = solve_affine(np.zeros((3, 4), np.uint8), np.zeros(3, np.uint8))
    assert len(sols) == 16
    assert sorted(map(bytes, sols.basis)) == sorted(map(bytes, np.eye(4, dtype=np.uint8)))


def test_inconsistent_system_is_data_not_exception():
    sols = solve_affine(np.zeros((1, 2), np.uint8), np.ones(1, np.uint8))
    assert not sols.consistent and len(sols) == 0 and sols.members().shape == (0, 2)


def test_central_tensors_of_d_form_a_64_element_space():
    assert len(solve_central_metrics(cat.build_calculus("D.univ"))) == 2**6


def test_kernel_of_identity_is_empty():
    assert len(kernel(np.eye(5, dtype=np.uint8))) == 0


@pytest.mark.parametrize("cid", ["A.univ", "B.univ", "C.univ", "D.univ", "E.univ", "F.univ", "G.univ", "n2:A.univ", "n2:B.univ", "n2:C.univ"])
def test_d_of_universal_calculus_kills_only_constants(cid):
    C = cat.build_calculus(cid)
    K = kernel(C.differential_matrix())
    assert len(K) == 1 and (K[0] == np.eye(C.n, dtype=np.uint8)[0]).all()


def test_pack_unpack_round_trip():
    row = np.array([1, 0, 0, 1, 1, 0, 1], np.uint8)
    assert (unpack_row(pack_row(row), 7) == row).all()


def test_coefficient_vectors_are_lexicographic():
    v = coefficient_vectors(3)
    assert [int("".join(map(str, r)), 2) for r in v] == list(range(8))


def test_members_enumerate_in_kernel_coefficient_order():
    basis = np.array([[1, 1, 0], [0, 0, 1]], np.uint8)
    S = AffineSolutionSet(np.array([1, 0, 0], np.uint8), basis, 3)
    assert S.members().tolist() == [[1, 0, 0], [1, 0, 1], [0, 1, 0], [0, 1, 1]]
    assert (S.element(2) == [0, 1, 0]).all()


@given(f2_matrices())
def test_rank_nullity(M):
    assert rank(M) + len(kernel(M)) == M.shape[1]
    assert rank(M) <= min(M.shape)


@given(f2_matrices(12, 12))
def test_rank_matches_span_size(M):
    assert rank(M) == brute_rank(M)


@given(f2_matrices())
def test_rank_is_basis_independent(M):
    # row operations and transposition keep the rank
    assert rank(M) == rank(M.T)
    if M.shape[0] > 1:
        N = M.copy()
        N[0] ^= N[1]
        assert rank(N) == rank(M)


@given(f2_matrices(), st.data())
def test_consistent_systems_every_member_solves(M, data):
    x = data.draw(arrays(np.uint8, M.shape[1], elements=st.integers(0, 1)))
    rhs = matmul(M, x)
    sols = solve_affine(M, rhs)
    assert sols.consistent and sols.contains(x)
    assert sols.size == 2 ** len(kernel(M))
    sample = sols.members(0, min(sols.size, 64))
    assert (matmul(sample, M.T) == rhs[None, :]).all()


@given(f2_matrices(10, 12), st.data())
def test_solve_agrees_with_exhaustive_search(M, data):
    rhs = data.draw(arrays(np.uint8, M.shape[0], elements=st.integers(0, 1)))
    sols = solve_affine(M, rhs)
    want = brute_solutions(M, rhs)
    got = {bytes(r) for r in sols.members()}
    assert got == want


@given(st.integers(1, 24).flatmap(lambda n: arrays(np.uint8, (n, n), elements=st.integers(0, 1))))
def test_inverse_round_trip(M):
    Minv = inverse(M)
    if rank(M) < len(M):
        assert Minv is None
    else:
        eye = np.eye(len(M), dtype=np.uint8)
        assert (matmul(M, Minv) == eye).all() and (matmul(Minv, M) == eye).all()


@given(f2_matrices(16, 16), st.data())
def test_intersect_matches_stacked_system(M, data):
    N = data.draw(arrays(np.uint8, (data.draw(st.integers(0, 6)), M.shape[1]), elements=st.integers(0, 1)))
    x = data.draw(arrays(np.uint8, M.shape[1], elements=st.integers(0, 1)))
    S = solve_affine(M, matmul(M, x)).intersect(N, matmul(N, x))
    T = solve_affine(np.vstack([M, N]), np.concatenate([matmul(M, x), matmul(N, x)]))
    assert len(S) == len(T) and S.contains(x)


@given(arrays(np.uint8, (5, 7), elements=st.integers(0, 1)), arrays(np.uint8, 5, elements=st.integers(0, 1)))
def test_linearize_recovers_affine_map(M, b):
    L, b0 = linearize(lambda x: matmul(M, x) ^ b, 7)
    assert (L == M).all() and (b0 == b).all()


def test_as_f2_reduces_mod_two():
    assert as_f2([2, 3, -1]).tolist() == [0, 1, 1]


def test_size_beyond_index_range():
    sols = solve_affine(np.zeros((1, 70), np.uint8), np.zeros(1, np.uint8))
    assert sols.size == 2**70
    assert sols.members(0, 2).shape == (2, 70)
