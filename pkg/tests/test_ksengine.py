import random

import pytest
from hypothesis import given, settings, strategies as st

from gext.cellposet import boundary_of_simplex, cycle_graph, simplex
from gext.exactlinalg import CoefficientSpec
from gext.fixtures import build
from gext.ksengine import (
    FiniteRing,
    assemble,
    decompose,
    dense_part,
    end_algebra,
    is_isomorphism,
    is_nilpotent_ideal,
    iso_test,
    lift_iso_on_dense,
    primitive_idempotents,
    radical,
    split_idempotent,
    verify_iso,
)
from gext.shcomplex import (
    constant_sheaf,
    direct_sum,
    identity,
    injective_generator,
    random_gen_complex,
)
from gext.sixfunctors import derived_pushforward

Q = CoefficientSpec.rationals()
F2 = CoefficientSpec.prime_field(2)
F5 = CoefficientSpec.prime_field(5)
Z4 = CoefficientSpec.local_ring(2, 2)


def matrix_units(C, n, keep=None):
    """Structure constants of the span of matrix units E_ij, (i, j) in keep."""
    keep = keep or [(i, j) for i in range(n) for j in range(n)]
    idx = {ij: t for t, ij in enumerate(keep)}
    m = len(keep)
    T = []
    for a, b in keep:
        row = []
        for c, d in keep:
            v = [0] * m
            if b == c:
                v[idx[(a, d)]] = 1
            row.append(v)
        T.append(row)
    one = [1 if i == j else 0 for i, j in keep]
    return FiniteRing(C, T, one)


# -- rings ----------------------------------------------------------------


def test_full_matrix_ring_is_semisimple():
    R = matrix_units(F2, 2)
    assert radical(R) == []


def test_upper_triangular_radical():
    R = matrix_units(F2, 2, [(0, 0), (0, 1), (1, 1)])
    J = radical(R)
    assert len(J) == 1
    assert R.is_zero(R.mul(J[0], J[0]))
    assert is_nilpotent_ideal(R, J)


def test_radical_needs_field():
    with pytest.raises(ValueError):
        radical(matrix_units(Z4, 1))


def test_upper_triangular_has_two_primitive_idempotents():
    R = matrix_units(Q, 2, [(0, 0), (0, 1), (1, 1)])
    res = primitive_idempotents(R)
    assert len(res.idempotents) == 2
    total = R.zero
    for e in res.idempotents:
        assert R.eq(R.mul(e, e), e)
        total = R.add(total, e)
    assert R.eq(total, R.one)


@pytest.mark.parametrize("C", [Q, F2, F5])
def test_diagonal_algebra_idempotents_are_orthogonal(C):
    R = matrix_units(C, 3, [(0, 0), (1, 1), (2, 2)])
    ids = primitive_idempotents(R).idempotents
    assert len(ids) == 3
    for a in ids:
        for b in ids:
            assert R.is_zero(R.mul(a, b)) != (a is b)


# -- endomorphism algebras -----------------------------------------------


def test_end_of_injective_generator_is_local():
    G = injective_generator(simplex(2), F2, 0)
    A = end_algebra(G)
    assert A.dim == 1
    assert len(primitive_idempotents(A.ring).idempotents) == 1


def test_end_of_unit_on_triangle():
    A = end_algebra(constant_sheaf(simplex(2), Q).cobar())
    assert A.dim == 1


def test_end_of_double():
    F = random_gen_complex(boundary_of_simplex(2), F2, random.Random(3), kind="I", n_gens=4).minimize().complex
    assert end_algebra(direct_sum([F, F])).dim == 4 * end_algebra(F).dim


# -- splitting and decomposition ----------------------------------------


def test_split_identity():
    G = constant_sheaf(cycle_graph(3), Q).cobar().minimize().complex
    a, b = split_idempotent(G, identity(G))
    assert a.complex.generator_counts() == G.generator_counts()
    assert b.complex.n == 0


def test_unit_is_indecomposable():
    G = constant_sheaf(boundary_of_simplex(3), F2).cobar()
    assert len(decompose(G)) == 1


def test_decompose_sum_with_shift():
    F = constant_sheaf(boundary_of_simplex(2), Q).cobar()
    D = decompose(direct_sum([F, F.shift(1)]))
    assert len(D) == 2
    assert D.certificates["complete"] and D.certificates["orthogonal"]


def test_blowdown_pushforward_splits_over_q():
    fx = build("cone")
    f = fx.maps["resolution"]
    R = derived_pushforward(f, constant_sheaf(f.source, Q))
    D = decompose(R)
    assert len(D) >= 2
    supports = [s.support() for s in D.summands]
    assert fx.cells["apex"] in supports
    assert any(len(s) == f.target.n for s in supports)


def test_product_projection_splits_into_shifted_units():
    fx = build("product", left="sphere", right="circle", right_params={"k": 3})
    pr = fx.maps["pr2"]
    R = derived_pushforward(pr, constant_sheaf(pr.source, F2))
    D = decompose(R)
    one = constant_sheaf(pr.target, F2).cobar()
    assert len(D) == 2
    got = sorted(D.summands, key=lambda s: min(d for d, _ in s.complex.gens))
    assert iso_test(got[0].complex, one.shift(-2)).isomorphic or iso_test(got[0].complex, one).isomorphic
    assert all(any(iso_test(s.complex, one.shift(k)).isomorphic for k in (0, -2)) for s in got)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([Q, F2, Z4]), st.integers(0, 10**6))
def test_decomposition_certificates(C, seed):
    rng = random.Random(seed)
    K = boundary_of_simplex(2)
    F = random_gen_complex(K, C, rng, kind="I", n_gens=5)
    G = random_gen_complex(K, C, rng, kind="I", n_gens=5)
    D = decompose(direct_sum([F, G]))
    assert D.certificates["complete"] and D.certificates["orthogonal"]
    S, inc, prj = assemble(D)
    assert iso_test(S, direct_sum([F, G])).isomorphic


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([Q, F2]), st.integers(0, 10**6))
def test_krull_schmidt_multisets(C, seed):
    # decomposing F ⊕ G and G ⊕ F gives the same multiset of indecomposables
    rng = random.Random(seed)
    K = simplex(2)
    F = random_gen_complex(K, C, rng, kind="I", n_gens=4)
    G = random_gen_complex(K, C, rng, kind="I", n_gens=4)
    a = decompose(direct_sum([F, G]), certify=False)
    b = decompose(direct_sum([G, F]), certify=False)
    assert len(a) == len(b)
    left = [s.complex for s in a.summands]
    right = [s.complex for s in b.summands]
    for s in left:
        hit = next(i for i, t in enumerate(right) if iso_test(s, t).isomorphic)
        right.pop(hit)
    assert right == []


def test_dense_part_drops_point_summand():
    K = simplex(1)
    one = constant_sheaf(K, Q).cobar()
    sky = injective_generator(K, Q, 0)
    D = decompose(direct_sum([one, sky]))
    top = [K.simplex_index((0, 1))]
    dp = dense_part(D, top)
    assert len(dp) == 1 and dp.certificates["maximal"]


# -- isomorphisms ---------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([Q, F2, Z4]), st.integers(0, 10**6))
def test_iso_under_shuffled_presentation(C, seed):
    rng = random.Random(seed)
    F = random_gen_complex(boundary_of_simplex(2), C, rng, kind="I", n_gens=6)
    perm = list(range(F.n))
    rng.shuffle(perm)
    res = iso_test(F, F.permuted(perm))
    assert res.isomorphic
    assert verify_iso(res)


def test_unit_not_iso_to_its_shift():
    F = constant_sheaf(boundary_of_simplex(2), F2).cobar()
    res = iso_test(F, F.shift(1))
    assert not res.isomorphic
    assert res.invariant


def test_identity_is_isomorphism():
    F = constant_sheaf(simplex(2), Q).cobar().minimize().complex
    assert is_isomorphism(identity(F))


def test_lift_on_dense_part():
    K = simplex(1)
    one = constant_sheaf(K, Q).cobar()
    sky = injective_generator(K, Q, 0)
    A = direct_sum([one, sky])
    B = direct_sum([sky, one])
    res = iso_test(A, B)
    top = [K.simplex_index((0, 1))]
    lift = lift_iso_on_dense(res.forward, res.backward, top)
    assert lift.ok
