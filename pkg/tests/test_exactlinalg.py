import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gext.exactlinalg import (
    CoefficientSpec,
    PolyFp,
    diagonalize_over_local,
    factor_over_prime_field,
    inverse,
    is_invertible,
    kernel,
    minimal_polynomial,
    naive_rank,
    rank,
    row_reduce,
    solve,
    sparse_rank,
    subquotient,
)

Q = CoefficientSpec.rationals()
F2 = CoefficientSpec.prime_field(2)
F3 = CoefficientSpec.prime_field(3)
F5 = CoefficientSpec.prime_field(5)
Z4 = CoefficientSpec.local_ring(2, 2)
Z8 = CoefficientSpec.local_ring(2, 3)
Z9 = CoefficientSpec.local_ring(3, 2)


def matrices(p, max_dim=6):
    return st.integers(1, max_dim).flatmap(
        lambda m: st.integers(1, max_dim).flatmap(
            lambda n: st.lists(st.lists(st.integers(0, p - 1), min_size=n, max_size=n), min_size=m, max_size=m)
        )
    )


# -- coefficient specs ----------------------------------------------------


def test_parse_roundtrip():
    for text in ["Q", "F2", "F5", "Z/8", "Z/9"]:
        assert str(CoefficientSpec.parse(text)) == text
    assert CoefficientSpec.parse("Z/4") == Z4


def test_local_ring_k1_is_prime_field():
    assert CoefficientSpec.local_ring(5, 1) == F5
    A = F5.array([[1, 2], [2, 4]])
    assert rank(A, CoefficientSpec.local_ring(5, 1)) == rank(A, F5) == 1


@pytest.mark.parametrize("p", [1, 4, 9, 2**31 + 11])
def test_rejects_nonprime(p):
    with pytest.raises(ValueError):
        CoefficientSpec.prime_field(p)


def test_rejects_oversized_local_ring():
    with pytest.raises(ValueError):
        CoefficientSpec.local_ring(2, 63)


# -- row_reduce -----------------------------------------------------------


def test_identity_rank_over_f2():
    assert row_reduce(F2.eye(2), F2).rank == 2


def test_proportional_rows_over_q():
    assert row_reduce(Q.array([[1, 2], [2, 4]]), Q).rank == 1


def test_row_reduce_rejects_local_ring():
    with pytest.raises(ValueError):
        row_reduce(Z4.eye(2), Z4)


def test_random_20x20_f5_matches_naive_oracle():
    rng = random.Random(20)
    for _ in range(5):
        rows = [[rng.randrange(5) for _ in range(20)] for _ in range(20)]
        # force a dependency now and then
        rows[7] = [(a + 2 * b) % 5 for a, b in zip(rows[1], rows[2])]
        assert row_reduce(F5.array(rows), F5).rank == naive_rank(rows, 5)


@given(matrices(5))
def test_rank_nullity(rows):
    A = F5.array(rows)
    rr = row_reduce(A, F5)
    K = rr.kernel()
    assert rr.rank + K.shape[1] == A.shape[1]
    assert F5.is_zero_matrix(F5.matmul(A, K))
    assert rr.rank == naive_rank(rows, 5)


@given(matrices(7, 5))
def test_transform_record(rows):
    A = CoefficientSpec.prime_field(7).array(rows)
    C = CoefficientSpec.prime_field(7)
    rr = row_reduce(A, C)
    assert np.array_equal(C.matmul(rr.transform, A), rr.rref)


@given(st.lists(st.lists(st.integers(-4, 4), min_size=3, max_size=3), min_size=1, max_size=4))
def test_rank_nullity_over_q(rows):
    A = Q.array(rows)
    K = kernel(A, Q)
    assert rank(A, Q) + K.shape[1] == 3
    assert all(x == 0 for x in Q.matmul(A, K).reshape(-1))


def test_sparse_rank_agrees_with_dense():
    rng = random.Random(3)
    rows = [[rng.randrange(3) for _ in range(9)] for _ in range(7)]
    sparse = [{j: v for j, v in enumerate(r) if v} for r in rows]
    assert sparse_rank(sparse, F3) == naive_rank(rows, 3)


# -- solve ----------------------------------------------------------------


@given(st.lists(st.integers(0, 4), min_size=3, max_size=3))
def test_solve_identity(b):
    x = solve(F5.eye(3), b, F5)
    assert list(x) == b


def test_solve_zero_divisor_inconsistent():
    assert solve(Z4.array([[2]]), [1], Z4) is None


def test_solve_zero_divisor_consistent():
    x = solve(Z4.array([[2]]), [2], Z4)
    assert int(x[0]) % 4 in (1, 3)


def test_solve_shape_mismatch():
    with pytest.raises(ValueError):
        solve(F2.eye(2), [1, 0, 1], F2)


@given(matrices(9, 4), st.data())
def test_solve_over_z9_is_a_solution(rows, data):
    A = Z9.array(rows)
    x0 = data.draw(st.lists(st.integers(0, 8), min_size=A.shape[1], max_size=A.shape[1]))
    b = Z9.matmul(A, Z9.array(x0).reshape(-1, 1))[:, 0]
    x = solve(A, list(b), Z9)
    assert x is not None
    assert np.array_equal(Z9.matmul(A, x.reshape(-1, 1))[:, 0], b)


# -- diagonalize_over_local -----------------------------------------------


def _diag_valuations(D, C):
    return sorted(C.valuation(D[i, i]) for i in range(min(D.shape)))


def test_diagonalize_near_diagonal():
    U, D, V = diagonalize_over_local(Z8.array([[2, 0], [0, 1]]), Z8)
    assert sorted(int(D[i, i]) for i in range(2)) == [1, 2]
    assert D[0, 1] == D[1, 0] == 0


def test_diagonalize_zero():
    U, D, V = diagonalize_over_local(Z8.zeros(2, 3), Z8)
    assert Z8.is_zero_matrix(D)
    assert np.array_equal(U, Z8.eye(2)) and np.array_equal(V, Z8.eye(3))


def test_diagonalize_random_10x10_z9():
    rng = random.Random(9)
    for _ in range(3):
        A = Z9.array([[rng.choice([0, 3, 6, rng.randrange(9)]) for _ in range(10)] for _ in range(10)])
        U, D, V = diagonalize_over_local(A, Z9)
        assert np.array_equal(Z9.matmul(Z9.matmul(U, A), V), D)
        assert is_invertible(U, Z9) and is_invertible(V, Z9)
        assert all(D[i, j] == 0 for i in range(10) for j in range(10) if i != j)


@given(matrices(8, 5))
def test_diagonalize_property(rows):
    A = Z8.array(rows)
    U, D, V = diagonalize_over_local(A, Z8)
    assert np.array_equal(Z8.matmul(Z8.matmul(U, A), V), D)
    assert is_invertible(U, Z8) and is_invertible(V, Z8)


@given(matrices(4, 4))
def test_inverse_lift_over_z4(rows):
    A = Z4.array(rows)
    if A.shape[0] != A.shape[1] or not is_invertible(A, Z4):
        return
    X = inverse(A, Z4)
    assert np.array_equal(Z4.matmul(A, X), Z4.eye(A.shape[0]))


def test_subquotient_torsion_over_z4():
    # 0 -> Z/4 --2--> Z/4 -> 0 has H = Z/2 in the middle.
    H = subquotient(Z4.array([[2]]), Z4.zeros(0, 1), Z4)
    assert H.orders == [1]
    assert not H.is_free


# -- polynomials ----------------------------------------------------------


def test_minpoly_identity():
    assert minimal_polynomial(Q.eye(4), Q) == [Fraction(-1), Fraction(1)]


def test_minpoly_nilpotent_block():
    assert minimal_polynomial(Q.array([[0, 1], [0, 0]]), Q) == [0, 0, 1]


def test_minpoly_companion_over_f2():
    comp = F2.array([[0, 1], [1, 1]])
    assert [int(c) for c in minimal_polynomial(comp, F2)] == [1, 1, 1]


@given(matrices(3, 4))
def test_minpoly_annihilates(rows):
    A = F3.array(rows)
    if A.shape[0] != A.shape[1]:
        return
    from gext.exactlinalg import poly_eval_matrix

    f = minimal_polynomial(A, F3)
    assert f[-1] == 1
    assert F3.is_zero_matrix(poly_eval_matrix(f, A, F3))


def test_factor_x2_minus_1_over_f3():
    assert factor_over_prime_field([2, 0, 1], 3) == [([1, 1], 1), ([2, 1], 1)]


def test_factor_irreducible_over_f2():
    assert factor_over_prime_field([1, 1, 1], 2) == [([1, 1, 1], 1)]


def test_factor_zero_rejected():
    with pytest.raises(ValueError):
        factor_over_prime_field([0, 0], 5)


def _expand(factors, p):
    P = PolyFp(p)
    out = [1]
    for g, m in factors:
        for _ in range(m):
            out = P.mul(out, g)
    return P.norm(out)


def test_factor_random_degree_12_over_f5():
    rng = random.Random(12)
    for _ in range(5):
        f = [rng.randrange(5) for _ in range(12)] + [1]
        assert _expand(factor_over_prime_field(f, 5), 5) == PolyFp(5).norm(f)


@settings(max_examples=40)
@given(st.lists(st.integers(0, 6), min_size=2, max_size=9), st.integers(0, 10**6))
def test_factor_product_property(f, seed):
    f = f + [1]
    fac = factor_over_prime_field(f, 7, random.Random(seed))
    assert _expand(fac, 7) == PolyFp(7).norm(f)
    assert fac == factor_over_prime_field(f, 7, random.Random(seed + 1))
