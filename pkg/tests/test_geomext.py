import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gext.cellposet import CellComplex, CellularMap, Stratification, cycle_graph, identity_map, point
from gext.exactlinalg import CoefficientSpec
from gext.fixtures import build, sphere_complex
from gext.geomext import (
    NotALocalSystem,
    ResolutionError,
    ResolutionSpec,
    StalkTable,
    are_conjugate,
    canonical_form,
    compare_resolutions,
    condition_D_check,
    constant_model,
    deligne_ic_model,
    extension_report,
    fibre_table,
    geom_cohomology,
    geometric_extension,
    gp_gnp,
    interpolation,
    monodromy,
    parity_report,
    perversity_report,
    rational_canonical_form,
    semismall_obstruction,
    stalk_bound_check,
    stalk_table,
)
from gext.ksengine import iso_test
from gext.shcomplex import PosetRep, constant_sheaf, direct_sum, injective_generator

Q = CoefficientSpec.rationals()
F2 = CoefficientSpec.prime_field(2)
F3 = CoefficientSpec.prime_field(3)
Z4 = CoefficientSpec.local_ring(2, 2)


@pytest.fixture(scope="module")
def cone():
    fx = build("cone")
    spec = ResolutionSpec(fx.maps["resolution"], fx.cells["U"], real_dim=4, name="blow-up")
    return fx, spec


@pytest.fixture(scope="module")
def cone_f2(cone):
    fx, spec = cone
    return geometric_extension(spec, F2)


@pytest.fixture(scope="module")
def cone_q(cone):
    fx, spec = cone
    return geometric_extension(spec, Q)


def smooth_sphere():
    K = sphere_complex(2)
    spec = ResolutionSpec(identity_map(K), frozenset(range(K.n)), real_dim=2, name="identity")
    return K, spec, Stratification(K, [frozenset(range(K.n))], [1])


# -- geometric extensions -------------------------------------------------


@pytest.mark.parametrize("C", [Q, F2, Z4])
def test_identity_resolution_gives_unit(C):
    K, spec, _ = smooth_sphere()
    E = geometric_extension(spec, C)
    assert E.certified
    assert iso_test(E.complex, constant_model(K, C)).isomorphic


def test_cone_over_f2_is_the_whole_pushforward(cone_f2):
    E = cone_f2
    assert E.certified
    assert len(E.decomposition.summands) == 1
    assert E.stalk(0).vector(0, 2) == (1, 0, 1)


def test_cone_over_q_has_point_stalk_in_degree_zero(cone_q):
    E = cone_q
    assert len(E.decomposition.summands) >= 2
    assert E.stalk(0).dims == {0: 1}
    assert len(E.lower) == len(E.decomposition.summands) - 1


def test_resolution_spec_rejects_non_isomorphism():
    K = sphere_complex(2)
    q = CellularMap(K, point(), [0] * K.n)
    with pytest.raises(ResolutionError):
        geometric_extension(ResolutionSpec(q, frozenset([0])), F2)


def test_resolution_spec_rejects_closed_u():
    K = sphere_complex(2)
    spec = ResolutionSpec(identity_map(K), frozenset([0]))
    with pytest.raises(ResolutionError):
        spec.check()


def test_compare_same_spec(cone):
    fx, spec = cone
    c = compare_resolutions(spec, spec, F2)
    assert c.identical_specs and c.isomorphic and c.verified and c.triangle


def test_extension_report_keys(cone_f2, cone):
    rep = extension_report(cone_f2, cone[0].strat)
    assert rep["verdicts"]["parity"] == "even"
    assert set(rep) == {"extension", "verdicts"}


# -- IC -------------------------------------------------------------------


def test_ic_of_smooth_space_is_unit():
    K, _, strat = smooth_sphere()
    assert iso_test(deligne_ic_model(K, strat, Q), constant_model(K, Q)).isomorphic


def test_ic_of_cone_over_q(cone, cone_q):
    fx, _ = cone
    M = deligne_ic_model(fx.complex, fx.strat, Q)
    assert M.stalk(0).dims == {0: 1}
    assert iso_test(M, cone_q.complex).isomorphic


def test_ic_of_cone_over_f2_differs_from_extension(cone, cone_f2):
    fx, _ = cone
    M = deligne_ic_model(fx.complex, fx.strat, F2)
    assert M.stalk(0).vector(0, 2) == (1, 1, 0)
    assert not iso_test(M, cone_f2.complex).isomorphic


def test_ic_routes_agree_on_cone(cone):
    fx, _ = cone
    a = deligne_ic_model(fx.complex, fx.strat, F2)
    b = deligne_ic_model(fx.complex, fx.strat, F2, route="rep")
    assert iso_test(a, b).isomorphic


def test_ic_rejects_odd_strata():
    K = cycle_graph(3)
    with pytest.raises(ValueError):
        deligne_ic_model(K, Stratification(K, [frozenset(range(K.n))], [0], check_dims=False), Q)


# -- parity and perversity ------------------------------------------------


def test_unit_is_even():
    K, _, strat = smooth_sphere()
    assert parity_report(constant_model(K, F2), strat).verdict == "even"


def test_cone_extension_is_even(cone, cone_f2):
    r = parity_report(cone_f2.complex, cone[0].strat)
    assert r.verdict == "even"
    assert r.strata[1] == {"stalk": "even", "costalk": "even"}


def test_unit_plus_shift_is_not_parity():
    K, _, strat = smooth_sphere()
    one = constant_model(K, F2)
    assert parity_report(direct_sum([one, one.shift(1)]), strat).verdict == "not parity"


def test_unit_is_perverse_at_complex_dimension():
    K, _, strat = smooth_sphere()
    r = perversity_report(constant_model(K, F2), strat)
    assert r.perverse and r.shift == 1


def test_cone_extension_perverse_with_shift_two(cone, cone_f2):
    r = perversity_report(cone_f2.complex, cone[0].strat)
    assert r.perverse and r.shift == 2
    assert not semismall_obstruction(cone_f2, cone[0].strat).obstructed


def test_semismall_obstruction_on_constructed_violation(cone):
    fx, _ = cone
    Y = fx.complex
    # point stalk in degree 2d - 1 = 3 on top of the unit
    bad = direct_sum([constant_model(Y, F2), injective_generator(Y, F2, 0, 3)])
    v = semismall_obstruction(bad, fx.strat)
    assert v.obstructed and v.verdict == "no semismall resolution"


# -- stalk bounds ---------------------------------------------------------


def test_bound_against_own_pushforward(cone, cone_f2):
    fx, _ = cone
    T = stalk_table(cone_f2.pushforward, fx.strat, costalks=False)
    v = stalk_bound_check(cone_f2, T, fx.strat)
    assert v.holds and v.equality[1] == [0, 2]


def test_bound_against_fibre_cohomology(cone, cone_f2):
    fx, spec = cone
    ft = fibre_table(spec, F2, fx.strat)
    assert ft.stalks[1] == {0: 1, 2: 1}
    assert stalk_bound_check(cone_f2, ft, fx.strat).holds


def test_truncated_fibre_table_is_violated(cone, cone_f2):
    fx, spec = cone
    ft = fibre_table(spec, F2, fx.strat).truncated(1)
    v = stalk_bound_check(cone_f2, ft, fx.strat)
    assert not v.holds
    assert (1, 2, 1, 0) in v.violations


def test_stalk_table_text_and_json(cone_f2, cone):
    T = stalk_table(cone_f2.complex, cone[0].strat)
    assert "S1" in T.text()
    assert T.to_json()["1"]["stalk"] == {"0": 1, "2": 1}


# -- monodromy ------------------------------------------------------------


def _cycle3():
    K = cycle_graph(3)
    v = [K.simplex_index((i,)) for i in range(3)]
    e = [K.simplex_index(tuple(sorted((i, (i + 1) % 3)))) for i in range(3)]
    return K, [v[0], e[0], v[1], e[1], v[2], e[2]], v, e


def test_monodromy_of_constant_sheaf():
    K, cyc, _, _ = _cycle3()
    assert monodromy(constant_sheaf(K, Q), cyc).is_identity()


def test_moebius_monodromy():
    K, cyc, v, e = _cycle3()
    maps = {(s, t): Q.array([[1]]) for s in v for t in K.cofacets[s]}
    maps[(v[0], e[2])] = Q.array([[-1]])
    L = PosetRep(K, Q, {c: 1 for c in range(K.n)}, maps)
    m = monodromy(L, cyc)
    assert m.matrix.tolist() == [[-1]]


def test_monodromy_rejects_non_local_system():
    K, cyc, v, e = _cycle3()
    maps = {(s, t): Q.array([[1]]) for s in v for t in K.cofacets[s]}
    maps[(v[1], e[1])] = Q.array([[0]])
    L = PosetRep(K, Q, {c: 1 for c in range(K.n)}, maps)
    with pytest.raises(NotALocalSystem):
        monodromy(L, cyc)


def test_monodromy_rejects_incomparable_steps():
    K, _, v, _ = _cycle3()
    with pytest.raises(ValueError):
        monodromy(constant_sheaf(K, Q), [v[0], v[1]])


def test_unipotent_over_z4_not_identity():
    J = Z4.array([[1, 2], [0, 1]])
    assert are_conjugate(J, Z4.array([[1, 0], [2, 1]]), Z4)
    assert not are_conjugate(J, Z4.eye(2), Z4)
    assert are_conjugate(F2.array([[1, 0], [0, 1]]), F2.array([[1, 2], [0, 1]]), F2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=9, max_size=9), st.lists(st.integers(0, 2), min_size=9, max_size=9))
def test_rational_canonical_form_is_a_conjugacy_invariant(a, x):
    A = F3.array(a).reshape(3, 3)
    X = F3.array(x).reshape(3, 3)
    from gext.exactlinalg import inverse, is_invertible

    if not is_invertible(X, F3):
        return
    B = F3.matmul(F3.matmul(X, A), inverse(X, F3))
    assert np.array_equal(rational_canonical_form(A, F3), rational_canonical_form(B, F3))
    assert are_conjugate(A, B, F3)


def test_canonical_form_over_z4_is_orbit_invariant():
    A = Z4.array([[1, 2], [0, 1]])
    B = Z4.array([[1, 0], [2, 1]])
    assert np.array_equal(canonical_form(A, Z4), canonical_form(B, Z4))


# -- interpolation and cohomology ----------------------------------------


def test_interpolation_on_smooth_identity():
    K, spec, _ = smooth_sphere()
    I = interpolation(spec, F3)
    assert I.certified and I.scale == 1
    assert I.composite.cls == spec.orientation(F3).cls


def test_interpolation_orients_the_cone(cone, cone_f2, cone_q):
    _, spec = cone
    assert interpolation(spec, F2, ext=cone_f2).certified
    assert interpolation(spec, Q, ext=cone_q).certified


def test_geom_cohomology_smooth():
    K, spec, _ = smooth_sphere()
    assert geom_cohomology(geometric_extension(spec, Q)) == {0: 1, 2: 1}


def test_geom_cohomology_of_cone(cone_f2, cone_q):
    assert geom_cohomology(cone_f2) == {0: 1, 2: 1}
    assert geom_cohomology(cone_q) == {0: 1}


def test_smooth_compact_space_is_pure():
    K, spec, _ = smooth_sphere()
    r = gp_gnp(spec, F2)
    assert r.cohomology == {0: 1, 1: 0, 2: 1}
    assert not any(r.nonpure.values())


# -- condition (D) --------------------------------------------------------


def test_condition_d_on_product_projection():
    fx = build("product", left="sphere", right="circle", right_params={"k": 3})
    v = condition_D_check(fx.maps["pr2"], F2)
    assert v.holds and v.summands == 2


@pytest.mark.parametrize("C", [Q, F2])
def test_condition_d_on_circle_bundle(C):
    h = build("hopf_quotient").maps["hopf"]
    assert condition_D_check(h, C).holds


def test_condition_d_negative_control():
    # a circle mapped identically plus a stray point glued onto one vertex
    src = CellComplex.from_simplices([(0, 1), (1, 2), (0, 2), (3,)])
    tgt = cycle_graph(3)
    phi = CellularMap.from_vertex_map(src, tgt, [0, 1, 2, 0])
    v = condition_D_check(phi, F2)
    assert not v.holds and v.violations


def test_stalk_table_constancy_flag():
    T = StalkTable({0: {0: 1}}, {}, {0: False})
    assert T.vector(0, 0, 1) == (1, 0)
    assert T.constant[0] is False
