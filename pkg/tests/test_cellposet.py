import pytest
from hypothesis import given, settings, strategies as st

from gext.cellposet import (
    CellComplex,
    CellComplexError,
    CellularMap,
    OpenSet,
    Stratification,
    SubdivisionBoundExceeded,
    barycentric,
    betti,
    boundary_of_simplex,
    complement_closed,
    cone,
    cycle_graph,
    face_poset,
    homology,
    identity_map,
    link,
    mapping_cylinder,
    open_star,
    point,
    product,
    simplex,
    stellar_subdivision,
    subdivide_map,
    suspension,
)
from gext.exactlinalg import CoefficientSpec

Q = CoefficientSpec.rationals()
F2 = CoefficientSpec.prime_field(2)
Z4 = CoefficientSpec.local_ring(2, 2)


@st.composite
def simplicial_complexes(draw, max_vertices=6, max_simplices=6):
    nv = draw(st.integers(1, max_vertices))
    sx = draw(st.lists(st.sets(st.integers(0, nv - 1), min_size=1, max_size=4), min_size=1, max_size=max_simplices))
    used = sorted(set().union(*sx))
    pos = {v: k for k, v in enumerate(used)}
    return CellComplex.from_simplices([[pos[v] for v in s] for s in sx])


def padded(b, n):
    return list(b) + [0] * (n - len(b))


def euler_from_betti(K):
    return sum((-1) ** d * b for d, b in enumerate(betti(K)))


# -- face posets ----------------------------------------------------------


def test_face_poset_point():
    P = face_poset(point())
    assert len(P.elements) == 1 and P.height == 1


def test_face_poset_triangle():
    K = simplex(2)
    assert K.f_vector() == [3, 3, 1]
    assert face_poset(K).height == 3


def test_face_poset_tetrahedron_boundary():
    K = boundary_of_simplex(3)
    assert K.f_vector() == [4, 6, 4]
    assert betti(face_poset(K).order_complex()) == [1, 0, 1]


def test_order_relation_is_transitive_closure():
    K = simplex(2)
    v = K.simplex_index((0,))
    assert K.leq(v, K.simplex_index((0, 1, 2)))
    assert not K.leq(K.simplex_index((0, 1)), K.simplex_index((1, 2)))


def test_bad_boundary_rejected():
    # an edge whose two facets are the same vertex twice cannot be regular
    with pytest.raises(CellComplexError):
        CellComplex.from_face_sets([0, 1], [[], [0]])


def test_json_roundtrip():
    K = boundary_of_simplex(2)
    L = CellComplex.from_json(K.to_json())
    assert L.dims == K.dims and L.facets == K.facets


# -- cones, suspensions ---------------------------------------------------


def test_cone_of_empty_is_point():
    C, _, apex = cone(CellComplex([], []))
    assert C.n == 1 and C.dims[apex] == 0


def test_cone_on_two_points_is_contractible():
    two = CellComplex.from_simplices([(0,), (1,)])
    C, q, apex = cone(two)
    assert betti(C) == [1, 0]
    assert q.target.n == 3


def test_cone_on_tetrahedron_boundary():
    S2 = boundary_of_simplex(3)
    C, _, apex = cone(S2)
    assert betti(C) == [1, 0, 0, 0]
    lk = link(C, apex)
    assert betti(C, cells=lk) == [1, 0, 1]
    assert len(lk) == S2.n


def test_suspension_of_circle():
    assert betti(suspension(cycle_graph(3))) == [1, 0, 1]


# -- mapping cylinders ----------------------------------------------------


def test_cylinder_of_identity():
    K = boundary_of_simplex(2)
    cy = mapping_cylinder(identity_map(K))
    assert betti(cy.complex) == padded(betti(K), 3)


def test_cylinder_two_points_to_one_is_a_v():
    two = CellComplex.from_simplices([(0,), (1,)])
    phi = CellularMap.from_vertex_map(two, point(), [0, 0])
    cy = mapping_cylinder(phi)
    assert cy.complex.f_vector() == [3, 2]
    assert betti(cy.complex) == [1, 0]


def test_cylinder_needs_simplicial_map():
    K = boundary_of_simplex(2)
    phi = identity_map(K)
    phi.vertex_map = None
    with pytest.raises(CellComplexError):
        mapping_cylinder(phi)


def test_cylinder_of_frontier_projection_has_target_homology():
    from gext.fixtures import hopf_quotient_map

    h = hopf_quotient_map()
    B = h.target
    assert betti(B) == [1, 0, 1]
    assert betti(h.source, F2) == [1, 1, 1, 1]


@settings(max_examples=25, deadline=None)
@given(simplicial_complexes(5, 4), st.integers(0, 10**6))
def test_cylinder_homology_equals_target(K, seed):
    import random

    rng = random.Random(seed)
    L = boundary_of_simplex(2)
    # constant maps and maps onto an edge are always simplicial
    a, b = rng.sample(range(3), 2)
    vm = [rng.choice([a, b]) for _ in K.vertices()]
    phi = CellularMap.from_vertex_map(K, L, vm)
    h = betti(mapping_cylinder(phi).complex)
    assert h == padded(betti(L), len(h))


# -- products -------------------------------------------------------------


def test_product_with_point():
    K = boundary_of_simplex(2)
    P, p1, p2 = product(point(), K)
    assert P.f_vector() == K.f_vector()


def test_interval_squared_has_two_triangles():
    P, _, _ = product(simplex(1), simplex(1))
    assert P.f_vector()[2] == 2


def test_torus_from_triangles():
    P, p1, p2 = product(cycle_graph(3), cycle_graph(3))
    assert P.f_vector()[2] == 18
    assert betti(P, Q) == [1, 2, 1]


@settings(max_examples=20, deadline=None)
@given(simplicial_complexes(4, 3), simplicial_complexes(4, 3))
def test_kunneth_dimensions(K, L):
    P, _, _ = product(K, L)
    bk, bl = betti(K, F2), betti(L, F2)
    want = [0] * (len(bk) + len(bl) - 1)
    for i, x in enumerate(bk):
        for j, y in enumerate(bl):
            want[i + j] += x * y
    got = betti(P, F2)
    assert padded(got, len(want)) == padded(want, len(got))


# -- subdivision ----------------------------------------------------------


def test_barycentric_interval():
    sd = barycentric(simplex(1))
    assert sd.complex.f_vector() == [3, 2]


def test_barycentric_triangle_boundary_is_hexagon():
    sd = barycentric(boundary_of_simplex(2))
    assert sd.complex.f_vector() == [6, 6]
    assert betti(sd.complex) == [1, 1]


@settings(max_examples=30, deadline=None)
@given(simplicial_complexes())
def test_barycentric_preserves_homology(K):
    assert betti(barycentric(K).complex, F2) == betti(K, F2)


def test_stellar_subdivision_preserves_homology():
    K = boundary_of_simplex(3)
    tops = K.cells_of_dim(2)[:2]
    L, lam = stellar_subdivision(K, tops)
    assert L.f_vector() == [6, 12, 8]
    assert betti(L) == betti(K)
    lam.validate()


def test_stellar_subdivision_rejects_non_maximal():
    K = simplex(2)
    with pytest.raises(CellComplexError):
        stellar_subdivision(K, [K.simplex_index((0, 1))])


def test_subdivide_map_bound():
    # the interval onto a two-edge path: endpoints land on non-adjacent vertices
    I = simplex(1)
    path = CellComplex.from_simplices([(0, 1), (1, 2)])

    def image(c):
        x = c.get(1, 0)
        return 0 if x == 0 else (2 if x == 1 else 1)

    phi, r = subdivide_map(I, path, image, bound=2)
    assert r == 1
    with pytest.raises(SubdivisionBoundExceeded):
        subdivide_map(I, CellComplex.from_simplices([(0,), (1,), (2,)]), image, bound=1)


# -- open sets and stratifications ---------------------------------------


def test_open_star_of_top_cell():
    K = simplex(2)
    top = K.simplex_index((0, 1, 2))
    assert open_star(face_poset(K), top).cells == {top}


def test_open_star_of_vertex():
    K = simplex(2)
    assert len(open_star(K, K.simplex_index((0,)))) == 4


def test_open_star_of_cone_apex():
    C, _, apex = cone(boundary_of_simplex(3))
    assert len(open_star(C, apex)) == 1 + 4 + 6 + 4


def test_open_set_must_be_up_closed():
    K = simplex(1)
    with pytest.raises(CellComplexError):
        OpenSet(K, frozenset([0]))


@settings(max_examples=30, deadline=None)
@given(simplicial_complexes(), st.data())
def test_star_complement_is_closed(K, data):
    c = data.draw(st.integers(0, K.n - 1))
    U = open_star(K, c)
    assert K.is_down_closed(complement_closed(U))


def test_stratification_checks():
    C, _, apex = cone(boundary_of_simplex(3))
    rest = frozenset(range(C.n)) - {apex}
    Stratification(C, [rest, frozenset([apex])], [2, 0], check_dims=False)
    with pytest.raises(CellComplexError):
        Stratification(C, [frozenset([apex]), rest], [0, 2], check_dims=False)
    with pytest.raises(CellComplexError):
        Stratification(C, [rest, frozenset([apex])], [1, 0])


# -- invariants on random complexes --------------------------------------


@settings(max_examples=50, deadline=None)
@given(simplicial_complexes())
def test_euler_characteristic(K):
    assert K.euler_characteristic() == euler_from_betti(K)


@settings(max_examples=30, deadline=None)
@given(simplicial_complexes(5, 5))
def test_local_ring_homology_is_free_for_simplicial_spheres(K):
    # Z/4 homology of a complex with torsion-free integral homology is free
    if K.dim > 2:
        return
    h = homology(K, Z4)
    assert all(e == 2 for hs in h for e in hs)


def test_rp2_torsion_over_z4():
    # H_2(RP^2; Z/4) = Tor(Z/2, Z/4) = Z/2
    from gext.fixtures import rp2_complex

    assert homology(rp2_complex(), Z4) == [[2], [1], [1]]
