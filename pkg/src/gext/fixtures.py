"""Programmatic fixture library: small complexes, maps and resolution pairs.

Every fixture is built from a few generators and carries a list of checked
invariants (homology tables, manifold and orientability flags).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .cellposet import (
    CellComplex,
    CellularMap,
    Stratification,
    stellar_subdivision,
    betti,
    boundary_of_simplex,
    collapse,
    cone as simplicial_cone,
    cycle_graph,
    frontier_complex,
    full_subcomplex,
    grid_torus,
    is_homology_manifold,
    mapping_cylinder,
    product as simplicial_product,
    simplex,
    suspension as simplicial_suspension,
)
from .exactlinalg import CoefficientSpec

F2 = CoefficientSpec.prime_field(2)
Z4 = CoefficientSpec.local_ring(2, 2)


class FixtureError(ValueError):
    pass


@dataclass
class FixtureManifest:
    name: str
    builder: str
    params: dict = field(default_factory=dict)
    expected: Dict[str, object] = field(default_factory=dict)
    notes: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "builder": self.builder, "params": self.params,
                "expected": {k: _jsonable(v) for k, v in self.expected.items()}, "notes": self.notes}


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    return str(v)


@dataclass
class Fixture:
    """A complex (or a resolution pair) plus the checks it passed."""

    name: str
    complex: CellComplex
    maps: Dict[str, CellularMap] = field(default_factory=dict)
    cells: Dict[str, frozenset] = field(default_factory=dict)
    complexes: Dict[str, CellComplex] = field(default_factory=dict)
    strat: Optional[Stratification] = None
    real_dim: Optional[int] = None
    checks: Dict[str, object] = field(default_factory=dict)
    manifest: Optional[FixtureManifest] = None

    def check(self, name: str, value, expected) -> None:
        self.checks[name] = value
        if value != expected:
            raise FixtureError(f"fixture {self.name}: {name} = {value}, expected {expected}")


# ----------------------------------------------------------------------
# basic spaces
# ----------------------------------------------------------------------


def sphere_complex(n: int) -> CellComplex:
    """Boundary of the (n+1)-dimensional cross-polytope (octahedral n-sphere)."""
    import itertools

    sx = [[2 * i + b for i, b in enumerate(bits)] for bits in itertools.product((0, 1), repeat=n + 1)]
    return CellComplex.from_simplices(sx)


RP2_TRIANGLES = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 1, 5),
                 (1, 2, 4), (2, 3, 5), (1, 3, 4), (1, 3, 5), (2, 4, 5)]


def rp2_complex() -> CellComplex:
    """Six-vertex real projective plane."""
    return CellComplex.from_simplices(RP2_TRIANGLES)


@dataclass
class Blowdown:
    """The 𝔸²/±1 model: tubular neighbourhood of the diagonal sphere in S²×S²."""

    M: CellComplex
    B: frozenset  # diagonal sphere, closed in M
    U: frozenset  # open star of B in M
    X: CellComplex  # U as a locally closed complex
    X_cells: List[int]  # X cell -> M cell
    B_in_X: frozenset
    F: CellComplex  # frontier, a cell model of ℝP³
    F_pairs: List[Tuple[int, int]]
    Y: CellComplex  # X with B collapsed: open cone on F
    f: CellularMap  # X -> Y


def blowdown_model() -> Blowdown:
    S2 = boundary_of_simplex(3)
    M, _, _ = simplicial_product(S2, S2)
    diag = [u * 4 + u for u in range(4)]
    B = full_subcomplex(M, diag)
    U = M.star([M.simplex_index((v,)) for v in diag])
    X, keep = M.restrict(U)
    pos = {c: k for k, c in enumerate(keep)}
    BX = frozenset(pos[c] for c in B)
    q = collapse(X, BX)
    F, pairs = frontier_complex(M, B)
    return Blowdown(M, frozenset(B), frozenset(U), X, keep, BX, F, pairs, q.complex, q.map)


def rp3_complex() -> CellComplex:
    """ℝP³ as the unit normal bundle of the diagonal in S²×S² (40 vertices, product cells)."""
    return blowdown_model().F


def hopf_quotient_map() -> CellularMap:
    """Projection of the frontier ℝP³ onto the diagonal sphere: cell α×β ↦ α."""
    bd = blowdown_model()
    Bc, bkeep = bd.M.restrict(bd.B)
    bpos = {c: k for k, c in enumerate(bkeep)}
    return CellularMap(bd.F, Bc, [bpos[a] for a, _ in bd.F_pairs])


def open_cone_complex(K: CellComplex) -> Tuple[CellComplex, int]:
    """Open cone on a simplicial K: cone cells minus the base.  Returns (complex, apex)."""
    C, _, apex = simplicial_cone(K)
    a = C.simplices[apex][0]
    keep = [i for i, s in enumerate(C.simplices) if a in s]
    sub, kept = C.restrict(keep)
    return sub, kept.index(apex)


# ----------------------------------------------------------------------
# closed mapping cylinder of the frontier projection, doubles and collars
# ----------------------------------------------------------------------


class _FaceBuilder:
    def __init__(self):
        self.dims: List[int] = []
        self.faces: List[List[int]] = []
        self.labels: List[object] = []
        self.index: Dict[object, int] = {}

    def add(self, key, dim: int, faces: Iterable) -> int:
        if key in self.index:
            return self.index[key]
        self.index[key] = len(self.dims)
        self.dims.append(dim)
        self.faces.append([self.index[f] for f in faces])
        self.labels.append(key)
        return self.index[key]

    def build(self) -> CellComplex:
        return CellComplex.from_face_sets(self.dims, self.faces, labels=self.labels)


def _cyl_cells(bd: Blowdown):
    """Cells of the closed cylinder: ('B', α), ('J', α, β) and ('F', α, β), as face lists.

    α*β is read as α × cone(β): its faces are α'*β, α*β' (α when β' is
    empty) and the frontier cell α×β.
    """
    M = bd.M
    bverts = {M.simplices[c][0] for c in bd.B if M.dims[c] == 0}
    out = []
    for c in sorted(bd.B, key=lambda c: (M.dims[c], c)):
        out.append((("B", c), M.dims[c], [("B", f) for f in M.facets[c]]))
    join, front = [], []
    for c in bd.U - bd.B:
        s = M.simplices[c]
        a = M.simplex_index(tuple(v for v in s if v in bverts))
        b = M.simplex_index(tuple(v for v in s if v not in bverts))
        fa = [("J", x, b) for x in M.facets[a]] if M.dims[a] > 0 else []
        fb = [("J", a, y) for y in M.facets[b]] if M.dims[b] > 0 else [("B", a)]
        join.append((("J", a, b), M.dims[c], fa + fb + [("F", a, b)]))
        ga = [("F", x, b) for x in M.facets[a]] if M.dims[a] > 0 else []
        gb = [("F", a, y) for y in M.facets[b]] if M.dims[b] > 0 else []
        front.append((("F", a, b), M.dims[a] + M.dims[b], ga + gb))
    return out, join, front


def _tag(key, side):
    kind = key[0]
    if kind == "F":
        return key
    return (kind + str(side),) + key[1:]


def double_cylinder(bd: Optional[Blowdown] = None, collar: bool = False) -> Tuple[CellComplex, Dict[str, frozenset]]:
    """Two closed cylinders glued along the frontier (optionally with a collar F×I in between).

    Returns the complex and named cell sets: 'B1', 'B2' (the core spheres),
    'F' (the gluing frontier), and with a collar 'F2', 'I' (collar cells).
    """
    bd = bd or blowdown_model()
    base, join, front = _cyl_cells(bd)
    fb = _FaceBuilder()
    items = []
    for side in (1, 2):
        for key, d, faces in base:
            items.append((_tag(key, side), d, [_tag(f, side) for f in faces]))
    for key, d, faces in front:
        items.append((key, d, faces))
    if collar:
        for key, d, faces in front:
            k2 = ("G",) + key[1:]
            items.append((k2, d, [("G",) + f[1:] for f in faces]))
        for key, d, faces in front:
            items.append((("I",) + key[1:], d + 1, [("I",) + f[1:] for f in faces] + [key, ("G",) + key[1:]]))
    for side in (1, 2):
        for key, d, faces in join:
            fs = [_tag(f, side) for f in faces]
            if collar and side == 2:
                fs = [("G",) + f[1:] if f[0] == "F" else f for f in fs]
            items.append((_tag(key, side), d, fs))
    items.sort(key=lambda t: t[1])
    for key, d, faces in items:
        fb.add(key, d, faces)
    K = fb.build()
    named: Dict[str, set] = {}
    for key, i in fb.index.items():
        named.setdefault(key[0], set()).add(i)
    return K, {k: frozenset(v) for k, v in named.items()}


@dataclass
class SuspensionModel:
    """Σℝ P³ with two resolutions by doubled disk bundles over S²."""

    Y: CellComplex
    D: CellComplex
    f: CellularMap  # D -> Y
    Dc: CellComplex  # collared double
    g: CellularMap  # Dc -> Y
    apexes: Tuple[int, int]
    named: Dict[str, frozenset]


def suspension_rp3_model() -> SuspensionModel:
    bd = blowdown_model()
    D, named = double_cylinder(bd)
    q1 = collapse(D, named["B1"])
    B2 = frozenset(q1.map(c) for c in named["B2"])
    q2 = collapse(q1.complex, B2)
    f = q2.map.compose(q1.map)
    Y = q2.complex
    apexes = (q2.map(q1.apex), q2.apex)
    Dc, namedc = double_cylinder(bd, collar=True)
    lab = {D.labels[i]: i for i in range(D.n)}
    cm = []
    for i in range(Dc.n):
        key = Dc.labels[i]
        if key[0] == "G":
            key = ("F",) + key[1:]
        elif key[0] == "I":
            key = ("F",) + key[1:]
        cm.append(f(lab[key]))
    g = CellularMap(Dc, Y, cm)
    return SuspensionModel(Y, D, f.fit_signs(), Dc, g.fit_signs(), apexes, named)


# ----------------------------------------------------------------------
# cone(S³) with the identity and the blow-up resolution
# ----------------------------------------------------------------------


@dataclass
class HopfBlowup:
    S3: CellComplex
    S2: CellComplex
    h: CellularMap  # Hopf map S³ -> S²
    cyl: CellComplex
    X: CellComplex  # open disk bundle (blow-up of 𝔸² at 0)
    X_cells: List[int]
    Y: CellComplex  # open cone on S³ (= 𝔸²)
    f: CellularMap  # X -> Y
    apex: int


def hopf_sphere() -> Tuple[CellComplex, CellComplex, CellularMap]:
    """S³ as two solid tori over the 3×3 grid torus, with a simplicial Hopf map to ΣC₃."""
    C3 = cycle_graph(3)
    T = grid_torus(3, 3)
    pr1 = CellularMap.from_vertex_map(T, C3, [v // 3 for v in range(9)])
    pr2 = CellularMap.from_vertex_map(T, C3, [v % 3 for v in range(9)])
    sx = []
    for phi, off in ((pr1, 9), (pr2, 12)):
        cy = mapping_cylinder(phi)
        for s in cy.complex.simplices:
            sx.append([v if v < 9 else v - 9 + off for v in s])
    S3 = CellComplex.from_simplices(sx)
    S2 = simplicial_suspension(C3)
    vm = [((v // 3) - (v % 3)) % 3 for v in range(9)] + [3] * 3 + [4] * 3
    h = CellularMap.from_vertex_map(S3, S2, vm)
    return S3, S2, h


def hopf_blowup_model() -> HopfBlowup:
    S3, S2, h = hopf_sphere()
    cy = mapping_cylinder(h)
    K = cy.complex
    top = set(cy.include_source.cell_map)
    Xc = [c for c in range(K.n) if c not in top]
    X, keep = K.restrict(Xc)
    pos = {c: k for k, c in enumerate(keep)}
    core = frozenset(pos[c] for c in cy.include_target.cell_map)
    q = collapse(X, core)
    return HopfBlowup(S3, S2, h, K, X, keep, q.complex, q.map, q.apex)


# ----------------------------------------------------------------------
# the I₂ local model
# ----------------------------------------------------------------------


@dataclass
class I2Model:
    T_phi: CellComplex  # mapping torus of a Dehn-twist-squared torus
    X0: CellComplex  # central fibre: two spheres meeting in two points
    c: CellularMap  # T_phi -> X0
    X: CellComplex  # open total space over the disk
    disk: CellComplex  # open 2-disk (cone on C₃ minus its base)
    pi: CellularMap  # X -> disk
    apex: int
    annulus_cycle: List[int]  # cells of disk \ apex forming a circle (zigzag)
    strat: Stratification


_NI, _NJ, _NS = 6, 3, 3
_ANN = {0: 0, 3: 1}


def _i2_simplices():
    NI, NJ, NS = _NI, _NJ, _NS

    def v(i, j, s):
        return (s % NS) * NI * NJ + NJ * (i % NI) + (j % NJ)

    def ctr(a, j, s):
        return NS * NI * NJ + (s % NS) * 6 + a * 3 + (j % NJ)

    def key(p):
        return NJ * (p[0] % NI) + (p[1] % NJ)

    def prism(cell, s):
        t = sorted(cell, key=key)
        return [[v(*p, s) for p in t[: k + 1]] + [v(*p, s + 1) for p in t[k:]] for k in range(len(t))]

    sx = []
    for s in range(NS):
        for i in range(NI):
            if i in _ANN:
                continue
            for j in range(NJ):
                a, b, c, d = (i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)
                sx += prism((a, b, d), s) + prism((a, c, d), s)
        # the two twisted annuli: level s+1 is glued with a shift of one column step
        for L, a in _ANN.items():
            R = L + 1
            for j in range(NJ):
                Lm, L0, R1, R2 = (L, j - 1), (L, j), (R, j + s + 1), (R, j + s + 2)
                bottom = [[v(*p, s) for p in tri] for tri in [(Lm, L0, R1), (L0, R1, R2)]]
                top = [[v(*p, s + 1) for p in tri] for tri in [(Lm, R1, R2), (Lm, L0, R2)]]
                sides = []
                for e in [(Lm, L0), (R1, R2), (Lm, R1), (L0, R2)]:
                    sides += prism(e, s)
                cc = ctr(a, j, s)
                for f in bottom + top + sides:
                    sx.append(f + [cc])
    return sx


def _i2_vertex_image(x: int) -> int:
    """Collapse of the generic torus onto the central fibre (vertex map)."""
    NI, NJ, NS = _NI, _NJ, _NS
    if x >= NS * NI * NJ:
        return ((x - NS * NI * NJ) % 6) // 3
    r = x % (NI * NJ)
    i, j = r // NJ, r % NJ
    if i in (0, 1):
        return 0
    if i in (3, 4):
        return 1
    return 2 + j if i == 2 else 5 + j


def i2_model() -> I2Model:
    T_phi = CellComplex.from_simplices(_i2_simplices())
    X0 = CellComplex.from_simplices([[p, 2 + j, 2 + (j + 1) % 3] for p in (0, 1) for j in range(3)]
                                    + [[p, 5 + j, 5 + (j + 1) % 3] for p in (0, 1) for j in range(3)])
    nT = _NS * _NI * _NJ + _NS * 6
    c = CellularMap.from_vertex_map(T_phi, X0, [_i2_vertex_image(x) for x in range(nT)])
    cy = mapping_cylinder(c)
    K = cy.complex
    top = set(cy.include_source.cell_map)
    keep = [q for q in range(K.n) if q not in top]
    X, kept = K.restrict(keep)
    Dc, _, _ = simplicial_cone(cycle_graph(_NS))
    # Cyl vertices: T_phi first (level s), then X0 (apex)
    level = [((x if x < _NS * _NI * _NJ else x - _NS * _NI * _NJ) // (_NI * _NJ if x < _NS * _NI * _NJ else 6))
             for x in range(nT)]
    vm = level + [_NS] * 8
    pi_full = CellularMap.from_vertex_map(K, Dc, vm)
    disk, dkeep = Dc.restrict([i for i, s in enumerate(Dc.simplices) if _NS in s])
    dpos = {c: k for k, c in enumerate(dkeep)}
    pi = CellularMap(X, disk, [dpos[pi_full(c)] for c in kept])
    apex = dpos[Dc.simplex_index((_NS,))]
    cyc = []
    for s in range(_NS):
        cyc.append(dpos[Dc.simplex_index((s, _NS))])
        cyc.append(dpos[Dc.simplex_index(tuple(sorted((s, (s + 1) % _NS, _NS))))])
    strat = Stratification(disk, [frozenset(range(disk.n)) - {apex}, frozenset([apex])], [1, 0])
    return I2Model(T_phi, X0, c, X, disk, pi, apex, cyc, strat)


def trivial_torus_family() -> Tuple[CellComplex, CellularMap, CellComplex, int]:
    """T² × open disk → open disk, over the same disk complex as the I₂ model."""
    T = grid_torus(3, 3)
    Dc, _, _ = simplicial_cone(cycle_graph(_NS))
    P, _, p2 = simplicial_product(T, Dc)
    disk, dkeep = Dc.restrict([i for i, s in enumerate(Dc.simplices) if _NS in s])
    dpos = {c: k for k, c in enumerate(dkeep)}
    keep = [c for c in range(P.n) if p2(c) in dpos]
    X, kept = P.restrict(keep)
    pi = CellularMap(X, disk, [dpos[p2(c)] for c in kept], smooth_proper=True)
    return X, pi, disk, dpos[Dc.simplex_index((_NS,))]


# ----------------------------------------------------------------------
# registry
# ----------------------------------------------------------------------


def _cone_fixture(bd: Blowdown) -> Fixture:
    Y = bd.Y
    apex = 0
    strat = Stratification(Y, [frozenset(range(1, Y.n)), frozenset([apex])], [2, 0])
    fx = Fixture("cone", Y, maps={"resolution": bd.f}, complexes={"X": bd.X, "F": bd.F},
                 cells={"apex": frozenset([apex]), "U": frozenset(range(1, Y.n)), "B": bd.B_in_X},
                 strat=strat, real_dim=4)
    fx.check("fibre over apex (F2 betti)", betti(bd.X, F2, cells=bd.B_in_X), [1, 0, 1])
    fx.check("regular iso over U", bd.f.is_iso_over(range(1, Y.n)), True)
    return fx


def _check_rp3(F: CellComplex, fx: Fixture) -> None:
    fx.check("F2 homology", betti(F, F2), [1, 1, 1, 1])
    fx.check("Q homology", betti(F), [1, 0, 0, 1])


def build(name: str, **params) -> Fixture:
    """Build a named fixture and run its checks (raises FixtureError on failure)."""
    if name == "simplex":
        n = int(params.get("n", 2))
        K = simplex(n)
        fx = Fixture(name, K, real_dim=n)
        fx.check("betti", betti(K), [1] + [0] * n)
    elif name == "sphere":
        n = int(params.get("n", 2))
        K = sphere_complex(n)
        fx = Fixture(name, K, real_dim=n)
        fx.check("betti", betti(K), [1] + [0] * (n - 1) + [1] if n > 0 else [2])
        fx.check("manifold", is_homology_manifold(K, n)[0], True)
    elif name == "rp2":
        K = rp2_complex()
        fx = Fixture(name, K, real_dim=2)
        fx.check("F2 homology", betti(K, F2), [1, 1, 1])
        fx.check("Q homology", betti(K), [1, 0, 0])
    elif name == "rp3":
        K = rp3_complex()
        fx = Fixture(name, K, real_dim=3)
        _check_rp3(K, fx)
        fx.check("vertices", K.f_vector()[0], 40)
    elif name == "torus":
        K = grid_torus(int(params.get("m", 3)), int(params.get("n", 3)))
        fx = Fixture(name, K, real_dim=2)
        fx.check("betti", betti(K), [1, 2, 1])
    elif name == "circle":
        K = cycle_graph(int(params.get("k", 3)))
        fx = Fixture(name, K, real_dim=1)
        fx.check("betti", betti(K), [1, 1])
    elif name == "cone":
        base = params.get("base", "rp3")
        if base == "rp3":
            return _cone_fixture(blowdown_model())
        inner = build(base, **params.get("base_params", {}))
        K, apex = open_cone_complex(inner.complex)
        fx = Fixture(name, K, cells={"apex": frozenset([apex])})
    elif name == "suspension":
        base = params.get("base", "rp3")
        if base == "rp3":
            sm = suspension_rp3_model()
            U = frozenset(range(sm.Y.n)) - set(sm.apexes)
            strat = Stratification(sm.Y, [U, frozenset(sm.apexes)], [2, 0])
            fx = Fixture(name, sm.Y, maps={"resolution": sm.f, "collared": sm.g},
                         complexes={"D": sm.D, "Dc": sm.Dc}, cells={"apex": frozenset(sm.apexes), "U": U},
                         strat=strat, real_dim=4)
            fx.check("F2 homology", betti(sm.Y, F2), [1, 0, 1, 1, 1])
            fx.check("Q homology", betti(sm.Y), [1, 0, 0, 0, 1])
            fx.check("resolution F2 homology", betti(sm.D, F2), [1, 0, 2, 0, 1])
        else:
            inner = build(base, **params.get("base_params", {}))
            K = simplicial_suspension(inner.complex)
            fx = Fixture(name, K)
    elif name == "cylinder":
        base = params.get("map", "hopf")
        if base != "hopf":
            raise FixtureError(f"unknown cylinder map {base!r}")
        hb = hopf_blowup_model()
        U = frozenset(range(hb.Y.n)) - {hb.apex}
        fx = Fixture(name, hb.Y, maps={"resolution": hb.f, "hopf": hb.h},
                     complexes={"X": hb.X, "S3": hb.S3, "cyl": hb.cyl},
                     cells={"apex": frozenset([hb.apex]), "U": U},
                     strat=Stratification(hb.Y, [U, frozenset([hb.apex])], [2, 0]), real_dim=4)
        fx.check("S3 betti", betti(hb.S3), [1, 0, 0, 1])
        fx.check("X manifold", is_homology_manifold(hb.cyl, 4, hb.X_cells)[0], True)
        fx.check("X Borel-Moore betti", betti(hb.X), [0, 0, 1, 0, 1])
    elif name == "product":
        a = build(params.get("left", "sphere"), **params.get("left_params", {}))
        b = build(params.get("right", "simplex"), **params.get("right_params", {"n": 1}))
        K, p1, p2 = simplicial_product(a.complex, b.complex)
        fx = Fixture(name, K, maps={"pr1": p1, "pr2": p2}, complexes={"left": a.complex, "right": b.complex})
    elif name == "hopf_quotient":
        h = hopf_quotient_map()
        fx = Fixture(name, h.source, maps={"hopf": h}, complexes={"S2": h.target}, real_dim=3)
        _check_rp3(h.source, fx)
        v = h.target.cells_of_dim(0)[0]
        fib = h.source.closure([c for c in range(h.source.n) if h(c) == v])
        fx.check("fibre betti", betti(h.source, cells=fib)[:2], [1, 1])
        fx.check("fibre top betti", sum(betti(h.source, cells=fib)[2:]), 0)
        fx.check("H2 pullback over Z/4", h2_pullback_orders(h),
                 {"target": [2], "source": [1], "image": [1]})
    elif name == "i2_local_model":
        m = i2_model()
        fx = Fixture(name, m.disk, maps={"family": m.pi}, complexes={"X": m.X, "T_phi": m.T_phi, "X0": m.X0},
                     cells={"apex": frozenset([m.apex]), "cycle": frozenset(m.annulus_cycle)},
                     strat=m.strat, real_dim=2)
        fx.check("T_phi manifold", is_homology_manifold(m.T_phi, 3)[0], True)
        fx.check("central fibre betti", betti(m.X0), [1, 1, 2])
        lvl0 = full_subcomplex(m.T_phi, [s for s in range(_NI * _NJ)])
        fx.check("generic fibre betti", betti(m.T_phi, cells=lvl0), [1, 2, 1])
        fx.cells["annulus_order"] = tuple(m.annulus_cycle)
    elif name == "abstract":
        data = params["data"]
        if isinstance(data, str):
            data = json.loads(data)
        K = CellComplex.from_json(data)
        fx = Fixture(name, K)
    else:
        raise FixtureError(f"unknown fixture {name!r}")
    fx.manifest = FixtureManifest(name, f"gext.fixtures.build:{name}", dict(params),
                                  {k: v for k, v in fx.checks.items()})
    return fx


def h2_pullback_orders(h: CellularMap) -> dict:
    """Orders (as p-exponents) of H²(target; ℤ/4), H²(source; ℤ/4) and of the pulled-back generators."""

    from .exactlinalg import subquotient

    C = Z4
    S, T = h.source, h.target

    def delta(K, n):
        # coboundary C^n -> C^{n+1} as a matrix (rows: (n+1)-cells)
        rows, cols = K.cells_of_dim(n + 1), K.cells_of_dim(n)
        rp, cp = {c: i for i, c in enumerate(rows)}, {c: i for i, c in enumerate(cols)}
        M = C.zeros(len(rows), len(cols))
        for c in rows:
            for f, s in K.facets[c].items():
                M[rp[c], cp[f]] = s % C.modulus
        return M, rows, cols

    dS1, _, _ = delta(S, 1)
    dS2, _, s2 = delta(S, 2)
    HS = subquotient(dS1, dS2, C)
    dT1, _, _ = delta(T, 1)
    dT2, _, t2 = delta(T, 2)
    HT = subquotient(dT1, dT2, C)
    tpos = {c: i for i, c in enumerate(t2)}
    # pullback on 2-cochains
    P = C.zeros(len(s2), len(t2))
    for i, c in enumerate(s2):
        t = h(c)
        if t in tpos:
            P[i, tpos[t]] = h.sign(c) % C.modulus
    imgs = []
    for k in range(HT.gens.shape[1]):
        x = C.matmul(P, HT.gens[:, k:k + 1])[:, 0]
        co = HS.coordinates(x)
        if co is None:
            raise FixtureError("pullback of a cocycle is not a cocycle")
        # order of the image element as a p-exponent
        mods = [C.p ** o for o in HS.orders]
        e = 0
        v = [int(a) % m for a, m in zip(co, mods)]
        while any(v):
            v = [(C.p * a) % m for a, m in zip(v, mods)]
            e += 1
        imgs.append(e)
    return {"target": list(HT.orders), "source": list(HS.orders), "image": imgs}


REGISTRY = ["simplex", "sphere", "rp2", "rp3", "torus", "circle", "cone", "suspension",
            "cylinder", "product", "hopf_quotient", "i2_local_model", "abstract"]


def fixture(name: str, params: Optional[dict] = None) -> Fixture:
    return build(name, **(params or {}))


# ----------------------------------------------------------------------
# extra data for the comparison and convolution checks
# ----------------------------------------------------------------------


def refined_blowdown(bd: Optional[Blowdown] = None) -> Tuple[CellComplex, CellularMap]:
    """Stellar refinement of the blow-up source, mapped to the cone through λ and the collapse.

    Every top simplex of S²×S² inside U is starred; λ^{-1}(U) is kept.
    """
    bd = bd or blowdown_model()
    M = bd.M
    tops = [c for c in bd.U if not M.cofacets[c]]
    L, lam = stellar_subdivision(M, tops)
    pre = [c for c in range(L.n) if lam(c) in bd.U]
    Xs, keep = L.restrict(pre)
    xpos = {c: k for k, c in enumerate(bd.X_cells)}
    cm = [bd.f(xpos[lam(c)]) for c in keep]
    return Xs, CellularMap(Xs, bd.Y, cm, check=True)


def fibre_product_blowdown(bd: Optional[Blowdown] = None) -> CellComplex:
    """X ×_Y X for the blow-down: the diagonal copy of X with B×B glued along the diagonal."""
    bd = bd or blowdown_model()
    M = bd.M
    nv = len(M.vertices())
    # B×B is a second copy of S²×S² whose diagonal vertex (u,u) is M's vertex u*4+u
    second = {}
    for w in range(nv):
        u, v = divmod(w, 4)
        second[w] = u * 4 + u if u == v else nv + w
    sx = [list(M.simplices[c]) for c in range(M.n) if not M.cofacets[c]]
    sx += [[second[w] for w in M.simplices[c]] for c in range(M.n) if not M.cofacets[c]]
    K = CellComplex.from_simplices(sx)
    cells = set(K.simplex_index(M.simplices[c]) for c in bd.U)
    cells |= {K.simplex_index(tuple(sorted(second[w] for w in M.simplices[c]))) for c in range(M.n)}
    W, _ = K.restrict(cells)
    return W
