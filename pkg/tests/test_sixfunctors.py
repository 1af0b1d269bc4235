import random

import pytest
from hypothesis import given, settings, strategies as st

from gext.cellposet import (
    CellularMap,
    boundary_of_simplex,
    cycle_graph,
    identity_map,
    point,
    simplex,
)
from gext.exactlinalg import CoefficientSpec
from gext.fixtures import build, rp2_complex, sphere_complex
from gext.ksengine import iso_test
from gext.shcomplex import (
    GenComplex,
    constant_projective,
    constant_sheaf,
    projective_generator,
    random_gen_complex,
)
from gext.sixfunctors import (
    BMClass,
    borel_moore,
    borel_moore_table,
    certify_orientation,
    closed_pushforward,
    convolution_dimension_check,
    derived_pushforward,
    dualizing_complex,
    extend_by_zero,
    orientation_search,
    pullback,
    push_class,
    restrict_open,
    verdier_dual,
    verdier_dual_literal,
)

Q = CoefficientSpec.rationals()
F2 = CoefficientSpec.prime_field(2)
F3 = CoefficientSpec.prime_field(3)
Z4 = CoefficientSpec.local_ring(2, 2)


def edge_map(K, L, rng):
    """A random simplicial map K -> L landing in one edge of L."""
    e = rng.choice(L.cells_of_dim(1))
    a, b = L.simplices[e]
    return CellularMap.from_vertex_map(K, L, [rng.choice([a, b]) for _ in K.vertices()])


SOURCES = {"circle": cycle_graph(4), "triangle": simplex(2), "sphere": boundary_of_simplex(3)}
map_args = st.tuples(st.sampled_from(sorted(SOURCES)), st.sampled_from([Q, F2, Z4]), st.integers(0, 10**6))


def random_map_and_complex(name, C, seed, n_gens=5):
    rng = random.Random(seed)
    K = SOURCES[name]
    L = boundary_of_simplex(2)
    phi = edge_map(K, L, rng)
    G = random_gen_complex(K, C, rng, kind="I", n_gens=n_gens)
    return phi, G


# -- pullback -------------------------------------------------------------


def test_pullback_of_unit_is_unit():
    K = boundary_of_simplex(3)
    phi = edge_map(K, boundary_of_simplex(2), random.Random(0))
    F = pullback(phi, constant_sheaf(phi.target, F2))
    assert all(F.stalk(x).dims == {0: 1} for x in range(K.n))


def test_pullback_along_identity():
    G = random_gen_complex(simplex(2), Q, random.Random(1), kind="I")
    F = pullback(identity_map(G.space), G)
    assert all(F.stalk(x) == G.stalk(x) for x in range(G.space.n))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([Q, F2, Z4]))
def test_pullback_stalks(seed, C):
    rng = random.Random(seed)
    K, L = boundary_of_simplex(3), boundary_of_simplex(2)
    phi = edge_map(K, L, rng)
    G = random_gen_complex(L, C, rng, kind="I", n_gens=5)
    F = pullback(phi, G)
    assert all(F.stalk(x) == G.stalk(phi(x)) for x in range(K.n))


# -- derived pushforward --------------------------------------------------


def test_pushforward_along_identity():
    G = random_gen_complex(simplex(2), F2, random.Random(5), kind="I")
    assert iso_test(derived_pushforward(identity_map(G.space), G), G).isomorphic


def test_pushforward_to_point_is_global_sections():
    K = sphere_complex(2)
    q = CellularMap(K, point(), [0] * K.n)
    R = derived_pushforward(q, constant_sheaf(K, Q))
    assert R.stalk(0).dims == {0: 1, 2: 1}


def test_blowdown_apex_stalk_over_f2():
    fx = build("cone")
    f = fx.maps["resolution"]
    R = derived_pushforward(f, constant_sheaf(f.source, F2))
    assert R.stalk(0).vector(0, 2) == (1, 0, 1)


@settings(max_examples=25, deadline=None)
@given(map_args)
def test_proper_base_change(args):
    phi, G = random_map_and_complex(*args)
    F = G.to_rep()
    R = derived_pushforward(phi, G)
    T = phi.target
    for t in range(T.n):
        assert R.stalk(t) == F.sections(phi.preimage(T.up(t)))


@settings(max_examples=10, deadline=None)
@given(map_args)
def test_literal_and_injective_routes_agree(args):
    phi, G = random_map_and_complex(*args, n_gens=4)
    A = derived_pushforward(phi, G)
    B = derived_pushforward(phi, G.to_rep(), route="literal")
    assert all(A.stalk(t) == B.stalk(t) for t in range(phi.target.n))


def test_unknown_route():
    with pytest.raises(ValueError):
        derived_pushforward(identity_map(point()), constant_sheaf(point(), Q), route="sideways")


# -- extension by zero ----------------------------------------------------


def _open_inclusion(K, U):
    sub, keep = K.restrict(U)
    return sub, CellularMap(sub, K, keep, check=False)


def test_extend_then_restrict():
    K = sphere_complex(2)
    U = sorted(K.up(0))
    sub, j = _open_inclusion(K, U)
    F = constant_sheaf(sub, F2)
    E = extend_by_zero(j, F)
    R = E.restrict(U)
    assert all(R.stalk(j(c)) == F.stalk(c) for c in range(sub.n))
    assert all(E.stalk(x).is_zero() for x in range(K.n) if x not in set(U))


@pytest.mark.parametrize("C", [Q, F2])
def test_sections_of_extension_by_zero_are_compact_sections(C):
    K = sphere_complex(2)
    U = sorted(set(range(K.n)) - {0})
    sub, j = _open_inclusion(K, U)
    F = constant_sheaf(sub, C)
    assert extend_by_zero(j, F).sections() == F.compact_sections()


def test_extend_by_zero_needs_open_inclusion():
    K = simplex(1)
    sub, keep = K.restrict([0])
    with pytest.raises(ValueError):
        extend_by_zero(CellularMap(sub, K, keep, check=False), constant_sheaf(sub, Q))


def test_closed_pushforward_needs_closed_inclusion():
    K = simplex(1)
    e = K.simplex_index((0, 1))
    sub, keep = K.restrict([e])
    with pytest.raises(ValueError):
        closed_pushforward(CellularMap(sub, K, keep, check=False), constant_sheaf(sub, Q))


# -- dualizing complex and duality ---------------------------------------


def test_dualizing_complex_of_point():
    assert dualizing_complex(point(), Q).stalk(0).dims == {0: 1}


@pytest.mark.parametrize("C", [Q, F2, F3])
def test_dualizing_complex_of_sphere_is_shifted_unit(C):
    K = sphere_complex(2)
    o = orientation_search(K, C)
    assert o is not None and o.certified
    om = dualizing_complex(K, C).complex
    one = constant_sheaf(K, C).cobar().shift(2)
    assert iso_test(om, one).isomorphic


def test_rp2_orientations():
    K = rp2_complex()
    assert orientation_search(K, F2) is not None
    assert orientation_search(K, F3) is None


def test_dual_of_point_unit():
    D = verdier_dual(projective_generator(point(), Q, 0))
    assert D.kind == "I" and D.gens == [(0, 0)]


@pytest.mark.parametrize("C", [Q, F2, Z4])
def test_dual_of_unit_is_omega(C):
    K = sphere_complex(2)
    assert iso_test(verdier_dual(constant_projective(K, C)), dualizing_complex(K, C).complex).isomorphic


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(sorted(SOURCES)), st.sampled_from([Q, F2, Z4]), st.integers(0, 10**6))
def test_double_dual(name, C, seed):
    G = random_gen_complex(SOURCES[name], C, random.Random(seed), kind="I", n_gens=6)
    assert iso_test(verdier_dual(verdier_dual(G)), G).isomorphic


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(sorted(SOURCES)), st.sampled_from([Q, F2]), st.integers(0, 10**6))
def test_duality_exchanges_stalks_and_costalks(name, C, seed):
    G = random_gen_complex(SOURCES[name], C, random.Random(seed), kind="I", n_gens=6)
    D = verdier_dual(G)
    for x in range(G.space.n):
        assert D.stalk(x) == G.point_costalk(x).negated()


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(sorted(SOURCES)), st.sampled_from([Q, F2]), st.integers(0, 10**6))
def test_literal_dual_matches_generator_dual(name, C, seed):
    G = random_gen_complex(SOURCES[name], C, random.Random(seed), kind="I", n_gens=4)
    A = verdier_dual(G)
    B = verdier_dual_literal(G.to_rep())
    assert all(A.stalk(x) == B.stalk(x) for x in range(G.space.n))


# -- Borel-Moore homology -------------------------------------------------


def test_borel_moore_point():
    assert borel_moore_table(point(), Q) == {0: 1}
    assert borel_moore(point(), 1, Q).dim == 0


def test_borel_moore_sphere():
    K = sphere_complex(2)
    assert [borel_moore(K, n, Q).dim for n in (2, 1, 0)] == [1, 0, 1]


def test_borel_moore_open_cone_complement():
    fx = build("cone")
    Y = fx.complex
    sub, _ = Y.restrict(fx.cells["U"])
    table = borel_moore_table(sub, F2)
    assert sorted(n for n, v in table.items() if v) == [1, 2, 3, 4]


# -- orientations and classes --------------------------------------------


def test_orientation_of_singular_cone_over_f2():
    fx = build("cone")
    o = orientation_search(fx.complex, F2, fx.cells["U"], 4)
    assert o is not None and o.certified


def test_push_class_identity():
    K = sphere_complex(2)
    c = orientation_search(K, Q).cls
    assert push_class(identity_map(K), c) == c


def test_push_class_collapse_to_point():
    K = sphere_complex(2)
    q = CellularMap(K, point(), [0] * K.n)
    assert push_class(q, orientation_search(K, Q).cls).is_zero()
    b = borel_moore(K, 0, Q).basis[0]
    img = push_class(q, b)
    assert img == borel_moore(point(), 0, Q).basis[0] or img == BMClass(point(), Q, 0, {0: -1})
    assert not img.is_zero()


def test_push_class_of_resolution_orients_the_cone():
    fx = build("cone")
    f = fx.maps["resolution"].fit_signs()
    o = orientation_search(f.source, F2, None, 4)
    assert certify_orientation(push_class(f, o.cls), fx.cells["U"]).certified


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([Q, F2, Z4]))
def test_push_class_functorial(seed, C):
    rng = random.Random(seed)
    K = boundary_of_simplex(3)
    L = sphere_complex(2)
    M = boundary_of_simplex(2)
    # K -> L through a vertex bijection onto a face, then L -> M on an edge
    f = CellularMap.from_vertex_map(K, L, [0, 2, 4, rng.choice([0, 2])])
    g = edge_map(L, M, rng)
    c = orientation_search(K, C).cls
    for b in borel_moore(K, 0, C).basis + [c]:
        assert push_class(g, push_class(f, b)) == push_class(g.compose(f), b)


# -- convolution dimension check -----------------------------------------


def test_convolution_identity_case():
    K = sphere_complex(2)
    idm = identity_map(K)
    rep = convolution_dimension_check(idm, idm, K, F2)
    assert rep.ok and rep.hom_dims[0] == 1 and rep.hom_dims[2] == 1


def test_convolution_product_projection():
    fx = build("product", left="sphere", right="circle", right_params={"k": 3})
    pr = fx.maps["pr2"]
    B = pr.target
    rep = convolution_dimension_check(pr, identity_map(B), fx.complex, Q, real_dim=1)
    assert rep.ok
    assert any(rep.hom_dims.values())


def test_restrict_open_on_both_models():
    K = sphere_complex(2)
    G = constant_sheaf(K, F2).cobar()
    U = K.up(0)
    assert isinstance(restrict_open(G, U), GenComplex)
    assert restrict_open(constant_sheaf(K, F2), U).cells == frozenset(U)
