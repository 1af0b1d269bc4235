"""Functor calculus along cellular maps.

Injective models carry most of the work: for any order-preserving cell map
f and injective I_σ, f_* I_σ = I_{f(σ)}, so a derived pushforward is a
relabelling followed by minimization.  The dualizing complex is the complex
of local Borel-Moore chains, ω = ⊕ I_σ in degree -dim σ with the boundary
as differential.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple


from .cellposet import CellComplex, CellularMap
from .exactlinalg import CoefficientSpec, sparse_kernel
from .shcomplex import (
    CohomologyBasis,
    GenComplex,
    GradedModule,
    HomComplex,
    PosetRep,
    RepComplex,
    _axpy,
    _chains,
    constant_sheaf,
    scalar_cohomology,
)


# ----------------------------------------------------------------------
# dualizing complex and Verdier duality
# ----------------------------------------------------------------------


@dataclass
class DualizingComplex:
    """ω_X as an injective model: I_σ in degree -dim σ, boundary differential."""

    space: CellComplex
    coeffs: CoefficientSpec
    complex: GenComplex

    def stalk(self, cell: int) -> GradedModule:
        return self.complex.stalk(cell)

    def rep(self) -> RepComplex:
        return self.complex.to_rep()

    def sections(self, U=None) -> GradedModule:
        return self.complex.sections(U)


def dualizing_complex(K: CellComplex, coeffs: CoefficientSpec) -> DualizingComplex:
    gens = [(-K.dims[c], c) for c in range(K.n)]
    d = [{f: coeffs(s) for f, s in K.facets[c].items()} for c in range(K.n)]
    return DualizingComplex(K, coeffs, GenComplex(K, "I", coeffs, gens, d, check=False))


def verdier_dual(C: GenComplex) -> GenComplex:
    """D(C) for a generator complex; the result has the other kind.

    Generators are pairs (g, τ) with τ >= cell(g), in degree -deg g - dim τ.
    For a projective P_σ this is ω restricted to the open star of σ; for an
    injective I_σ it is the cellular resolution of the simple S_σ[dim σ].
    """
    K, Cf = C.space, C.coeffs
    kind = "I" if C.kind == "P" else "P"
    gens, index = [], {}
    for g, (a, c) in enumerate(C.gens):
        for t in sorted(K.up(c)):
            index[(g, t)] = len(gens)
            gens.append((-a - K.dims[t], t))
    rows = C.rows()
    d = [dict() for _ in gens]
    for (g, t), k in index.items():
        col = d[k]
        s = -1 if C.deg(g) % 2 else 1
        for t2, inc in K.facets[t].items():
            j = index.get((g, t2))
            if j is not None:
                _axpy(Cf, col, s * inc, {j: 1})
        for h, v in rows[g].items():
            j = index.get((h, t))
            if j is not None:
                _axpy(Cf, col, v, {j: 1})
    return GenComplex(K, kind, Cf, gens, d, check=False)


def verdier_dual_literal(F: RepComplex) -> RepComplex:
    """D(F)(σ) = graded dual of the cellular compact sections of F over star σ.

    Generization σ -> τ is the dual of extension by zero from star τ into
    star σ (a coordinate projection).
    """
    K, C = F.space, F.coeffs
    cells = sorted(F.cells)
    # basis of C_c(F, star σ): entries (c, n, b) with c >= σ
    full_degs, full_cols = F.cellular_compact(F.cells)
    entries = []
    for c in sorted(F.cells):
        for n in F.degrees():
            for b in range(F.dim(n, c)):
                entries.append((c, n, b))
    per_cell = {}
    for s in cells:
        sel = [i for i, e in enumerate(entries) if e[0] in K.up(s)]
        per_cell[s] = sel
    degs = sorted({-full_degs[i] for i in range(len(entries))})
    by = {s: {m: [i for i in per_cell[s] if -full_degs[i] == m] for m in degs} for s in cells}
    pos = {s: {m: {i: k for k, i in enumerate(by[s][m])} for m in degs} for s in cells}
    terms, diff = {}, {}
    for m in degs:
        dims = {s: len(by[s][m]) for s in cells}
        maps = {}
        for s in cells:
            for t in K.cofacets[s]:
                if t not in F.cells:
                    continue
                M = C.zeros(dims[t], dims[s])
                for i, k in pos[t][m].items():
                    M[k, pos[s][m][i]] = C.one
                maps[(s, t)] = M
        terms[m] = PosetRep(K, C, dims, maps, F.cells, check=False)
    for m in degs:
        diff[m] = {}
        for s in cells:
            src = pos[s][m]
            tgt = pos[s].get(m + 1, {})
            M = C.zeros(len(tgt), len(src))
            # transpose of the compact differential from degree -(m+1) to -m
            sg = -1 if m % 2 else 1
            for i, row in tgt.items():
                for j, v in full_cols[i].items():
                    if j in src:
                        M[row, src[j]] = C(sg * v)
            diff[m][s] = M
    return RepComplex(K, C, terms, diff, F.cells, check=False)


# ----------------------------------------------------------------------
# pullback and pushforwards
# ----------------------------------------------------------------------


def pullback(phi: CellularMap, G) -> RepComplex:
    """(φ^*G)(σ) = G(φ(σ)) with transported generization."""
    if isinstance(G, GenComplex):
        G = G.to_rep()
    S, C = phi.source, G.coeffs
    cells = [c for c in range(S.n) if phi(c) in G.cells]
    terms, diff = {}, {}
    for n in G.degrees():
        T = G.term(n)
        dims = {c: T.dims[phi(c)] for c in cells}
        maps = {}
        for s in cells:
            for t in S.cofacets[s]:
                if t in dims:
                    maps[(s, t)] = T.transport(phi(s), phi(t))
        terms[n] = PosetRep(S, C, dims, maps, cells, check=False)
        diff[n] = {c: G.diff[n][phi(c)] for c in cells}
    return RepComplex(S, C, terms, diff, cells, check=False)


def injective_model(F, orientation: Optional["Orientation"] = None) -> GenComplex:
    """A minimal injective model of F (GenComplex or RepComplex)."""
    if isinstance(F, GenComplex):
        if F.kind == "I":
            return F
        F = F.to_rep()
    return F.cobar().minimize().complex


def derived_pushforward(phi: CellularMap, F, route: str = "injective"):
    """Rφ_* F.

    route="injective": relabel a minimal injective model (returns GenComplex).
    route="literal": value at τ is the Roos complex of F over φ^{-1}(star τ),
    generization by restriction (returns RepComplex).
    """
    if route == "injective":
        I = injective_model(F)
        return I.relabel(phi.target, phi.cell_map).minimize().complex
    if route != "literal":
        raise ValueError(f"unknown route {route!r}")
    if isinstance(F, GenComplex):
        F = F.to_rep()
    return _pushforward_literal(phi, F)


def _pushforward_literal(phi: CellularMap, F: RepComplex) -> RepComplex:
    T, C = phi.target, F.coeffs
    cells = list(range(T.n))
    pre = {t: frozenset(c for c in F.cells if T.leq(t, phi(c))) for t in cells}
    data = {}
    for t in cells:
        degs, cols = F.roos(pre[t])
        keys = []
        chains = _chains(F.space, pre[t], None)
        for ch in chains:
            for n in F.degrees():
                for b in range(F.dim(n, ch[-1])):
                    keys.append((ch, n, b))
        data[t] = (degs, cols, keys)
    alld = sorted({d for t in cells for d in data[t][0]})
    per = {t: {m: [i for i, d in enumerate(data[t][0]) if d == m] for m in alld} for t in cells}
    loc = {t: {m: {i: k for k, i in enumerate(per[t][m])} for m in alld} for t in cells}
    keypos = {t: {data[t][2][i]: i for i in range(len(data[t][2]))} for t in cells}
    terms, diff = {}, {}
    for m in alld:
        dims = {t: len(per[t][m]) for t in cells}
        maps = {}
        for s in cells:
            for u in T.cofacets[s]:
                M = C.zeros(dims[u], dims[s])
                for i, k in loc[s][m].items():
                    key = data[s][2][i]
                    j = keypos[u].get(key)
                    if j is not None:
                        M[loc[u][m][j], k] = C.one
                maps[(s, u)] = M
        terms[m] = PosetRep(T, C, dims, maps, check=False)
        diff[m] = {}
        for t in cells:
            src = loc[t][m]
            tgt = loc[t].get(m + 1, {})
            M = C.zeros(len(tgt), len(src))
            for i, k in src.items():
                for j, v in data[t][1][i].items():
                    if j in tgt:
                        M[tgt[j], k] = v
            diff[m][t] = M
    return RepComplex(T, C, terms, diff, check=False)


def _embed(j: CellularMap, F: RepComplex) -> RepComplex:
    K, C = j.target, F.coeffs
    img = {c: j(c) for c in F.cells}
    cells = list(range(K.n))
    terms, diff = {}, {}
    for n in F.degrees():
        t = F.term(n)
        dims = {img[c]: t.dims[c] for c in F.cells}
        maps = {(img[a], img[b]): M for (a, b), M in t.maps.items()}
        terms[n] = PosetRep(K, C, dims, maps, cells, check=False)
        diff[n] = {img[c]: M for c, M in F.diff[n].items()}
    return RepComplex(K, C, terms, diff, cells, check=False)


def extend_by_zero(j: CellularMap, F: RepComplex) -> RepComplex:
    """j_! for an open inclusion: F on U, zero elsewhere."""
    if not j.target.is_up_closed(j.cell_map):
        raise ValueError("extension by zero needs an open inclusion")
    return _embed(j, F)


def closed_pushforward(i: CellularMap, F: RepComplex) -> RepComplex:
    """i_* for a closed inclusion: F on Z, zero outside."""
    if not i.target.is_down_closed(i.cell_map):
        raise ValueError("closed pushforward needs a closed inclusion")
    return _embed(i, F)


def restrict_open(F, U: Iterable[int]):
    """j^* for an open set U (on the ambient index set)."""
    if isinstance(F, GenComplex):
        return F.restrict_open(U)
    return F.restrict(U)


# ----------------------------------------------------------------------
# Borel-Moore classes and orientations
# ----------------------------------------------------------------------


def _bm_complex(K: CellComplex, coeffs: CoefficientSpec, cells: Optional[Iterable[int]] = None):
    """Sections of ω over cells: generators = cells in degree -dim, boundary differential."""
    om = dualizing_complex(K, coeffs).complex
    return om.degs, om.d, (None if cells is None else sorted(set(cells)))


@dataclass
class BMClass:
    """An element of S^!_n(X) = H^{-n} Hom(𝟏, ω), stored as a locally finite n-cycle."""

    space: CellComplex
    coeffs: CoefficientSpec
    n: int
    chain: Dict[int, object]

    def is_cycle(self) -> bool:
        K, C = self.space, self.coeffs
        acc: dict = {}
        for c, v in self.chain.items():
            _axpy(C, acc, v, {f: C(s) for f, s in K.facets[c].items()})
        return not acc

    def coordinates(self) -> Optional[List]:
        B = CohomologyBasis(*_bm_complex(self.space, self.coeffs)[:2], self.coeffs, -self.n)
        return B.coords(self.chain)

    def is_zero(self) -> bool:
        c = self.coordinates()
        return c is not None and all(v == 0 for v in c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BMClass) or other.n != self.n:
            return False
        diff = dict(self.chain)
        _axpy(self.coeffs, diff, -1, other.chain)
        return BMClass(self.space, self.coeffs, self.n, diff).is_zero()


@dataclass
class BMResult:
    n: int
    dim: int
    orders: List[int]
    basis: List[BMClass]


def borel_moore(K: CellComplex, n: int, coeffs: CoefficientSpec) -> BMResult:
    degs, cols, _ = _bm_complex(K, coeffs)
    B = CohomologyBasis(degs, cols, coeffs, -n)
    return BMResult(n, B.dim, list(B.orders), [BMClass(K, coeffs, n, dict(z)) for z in B.reps])


def borel_moore_table(K: CellComplex, coeffs: CoefficientSpec) -> Dict[int, int]:
    degs, cols, _ = _bm_complex(K, coeffs)
    H = scalar_cohomology(degs, cols, coeffs)
    return {-m: v for m, v in H.dims.items()}


@dataclass
class Orientation:
    """A fundamental class 𝟏 -> ω[-n], certified to be a quasi-isomorphism over U."""

    cls: BMClass
    U: FrozenSet[int]
    failures: List[int] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.cls.n

    @property
    def certified(self) -> bool:
        return not self.failures


def local_generation_failures(c: BMClass, U: Iterable[int]) -> List[int]:
    """Cells of U where cone(c: 𝟏 -> ω[-n]) has nonzero stalk.

    At σ the stalk of ω must be free of rank one in degree -n and the
    restriction of c to the star of σ must generate it.
    """
    K, C = c.space, c.coeffs
    om = dualizing_complex(K, C).complex
    bad = []
    for s in sorted(set(U)):
        sel = om.stalk_gens(s)
        H = scalar_cohomology(om.degs, om.d, C, sel)
        if H.parts != {-c.n: [C.k if not C.is_field else 1]}:
            bad.append(s)
            continue
        B = CohomologyBasis(om.degs, om.d, C, -c.n, sel)
        z = {g: v for g, v in c.chain.items() if g in set(sel)}
        co = B.coords(z)
        if co is None or not C.is_unit(co[0]):
            bad.append(s)
    return bad


def certify_orientation(c: BMClass, U: Optional[Iterable[int]] = None) -> Orientation:
    U = frozenset(range(c.space.n)) if U is None else frozenset(U)
    return Orientation(c, U, local_generation_failures(c, U))


def orientation_search(K: CellComplex, coeffs: CoefficientSpec, U: Optional[Iterable[int]] = None,
                       n: Optional[int] = None, seed: int = 0) -> Optional[Orientation]:
    """Find an n-cycle generating local homology at every cell of U, or None.

    When every (n-1)-cell has at most two n-dimensional cofaces the cycle is
    determined up to a unit on each adjacency component, so propagation is
    exhaustive.  Otherwise (fields only) the cycle space is computed and a
    vector avoiding the finitely many bad hyperplanes is searched for.
    """
    n = K.dim if n is None else n
    U = frozenset(range(K.n)) if U is None else frozenset(U)
    C = coeffs
    top = [c for c in range(K.n) if K.dims[c] == n]
    ridges = [c for c in range(K.n) if K.dims[c] == n - 1]
    cof = {r: [t for t in K.cofacets[r]] for r in ridges}
    if all(len(v) <= 2 for v in cof.values()):
        chain = _propagate(K, C, top, cof)
        c = BMClass(K, C, n, chain)
        o = certify_orientation(c, U)
        return o if o.certified else None
    if not C.is_field:
        return None
    return _search_linear(K, C, n, top, U, seed)


def _propagate(K: CellComplex, C: CoefficientSpec, top: List[int], cof) -> Dict[int, object]:
    seen: Dict[int, object] = {}
    chain: Dict[int, object] = {}
    for start in top:
        if start in seen:
            continue
        comp = {start: C.one}
        stack = [start]
        ok = True
        while stack:
            a = stack.pop()
            for r, s_a in K.facets[a].items():
                others = [t for t in cof[r] if t != a]
                if not others:
                    ok = False
                    continue
                b = others[0]
                s_b = K.facets[b][r]
                want = C(-1) * comp[a] * C(s_a) * C.inv(C(s_b))
                if C.modulus is not None:
                    want %= C.modulus
                if b in comp:
                    if comp[b] != want:
                        ok = False
                else:
                    comp[b] = want
                    stack.append(b)
        for t in comp:
            seen[t] = True
        if ok:
            chain.update(comp)
    return chain


def _search_linear(K, C, n, top, U, seed) -> Optional[Orientation]:
    bcols = [{f: C(s) for f, s in K.facets[t].items()} for t in top]
    Z = sparse_kernel(bcols, C)
    if not Z:
        return None
    basis = [BMClass(K, C, n, {top[j]: v for j, v in z.items()}) for z in Z]
    om = dualizing_complex(K, C).complex
    rows = []
    for s in sorted(U):
        sel = om.stalk_gens(s)
        H = scalar_cohomology(om.degs, om.d, C, sel)
        if H.parts != {-n: [1]}:
            return None
        B = CohomologyBasis(om.degs, om.d, C, -n, sel)
        ss = set(sel)
        row = [B.coords({g: v for g, v in b.chain.items() if g in ss})[0] for b in basis]
        if all(v == 0 for v in row):
            return None
        rows.append(row)
    m = len(basis)

    def good(x):
        for row in rows:
            v = sum(a * b for a, b in zip(row, x))
            if C.modulus is not None:
                v %= C.modulus
            if v == 0:
                return False
        return True

    def build(x):
        chain: dict = {}
        for a, b in zip(x, basis):
            _axpy(C, chain, a, b.chain)
        return certify_orientation(BMClass(K, C, n, chain), U)

    # moment-curve candidates: each bad hyperplane excludes fewer than m values of t
    distinct = {tuple(r) for r in rows}
    bound = (m - 1) * len(distinct) + 1
    if C.kind == "Q" or C.p > bound:
        for t in range(1, bound + 1):
            x = [C(t) ** i for i in range(m)]
            if good(x):
                return build(x)
        return None
    if C.p ** m <= 1 << 20:
        for x in itertools.product(range(C.p), repeat=m):
            if any(x) and good(list(x)):
                return build(list(x))
        return None
    raise RuntimeError("orientation search space too large for exhaustive enumeration")


def constant_injective(K: CellComplex, coeffs: CoefficientSpec,
                       orientation: Optional[Orientation] = None) -> GenComplex:
    """Injective model of 𝟏_K.

    On a certified oriented homology manifold this is ω[-n]; otherwise the
    minimized cobar resolution.
    """
    if orientation is None:
        orientation = orientation_search(K, coeffs)
    if orientation is not None and orientation.certified and orientation.U == frozenset(range(K.n)):
        return dualizing_complex(K, coeffs).complex.shift(-orientation.n)
    return constant_sheaf(K, coeffs).cobar().minimize().complex


def push_class(phi: CellularMap, c: BMClass) -> BMClass:
    """Pushforward of local chains: σ ↦ deg·φ(σ), zero when the dimension drops."""
    C = c.coeffs
    out: dict = {}
    for s, v in c.chain.items():
        t = phi(s)
        if phi.target.dims[t] == phi.source.dims[s]:
            _axpy(C, out, v * phi.sign(s), {t: 1})
    return BMClass(phi.target, C, c.n, out)


# ----------------------------------------------------------------------
# convolution dimension check
# ----------------------------------------------------------------------


@dataclass
class ConvolutionReport:
    hom_dims: Dict[int, int]
    bm_dims: Dict[int, int]
    shift: int
    ok: bool

    def table(self) -> List[Tuple[int, int, int]]:
        return [(n, self.hom_dims.get(n, 0), self.bm_dims.get(n, 0)) for n in sorted(set(self.hom_dims) | set(self.bm_dims))]


def convolution_dimension_check(f: CellularMap, g: CellularMap, W: CellComplex, coeffs: CoefficientSpec,
                                n_range: Optional[Iterable[int]] = None,
                                source_model: Optional[GenComplex] = None,
                                target_model: Optional[GenComplex] = None,
                                real_dim: Optional[int] = None) -> ConvolutionReport:
    """Compare dim Hom(f_!𝟏_X, g_*𝟏_X'[n]) with dim S^!_{m-n}(W).

    W is a supplied cell model of X ×_Y X' and m the real dimension of the
    smooth space X' whose orientation identifies 𝟏_X' with ω[-m].
    """
    X, Xp = f.source, g.source
    m = Xp.dim if real_dim is None else real_dim
    A = source_model if source_model is not None else constant_injective(X, coeffs)
    B = target_model if target_model is not None else constant_injective(Xp, coeffs)
    fA = A.relabel(f.target, f.cell_map).minimize().complex
    gB = B.relabel(g.target, g.cell_map).minimize().complex
    H = HomComplex(fA, gB)
    hom = H.cohomology().dims
    bm = borel_moore_table(W, coeffs)
    bm_by_n = {m - k: v for k, v in bm.items()}
    ns = sorted(set(hom) | set(bm_by_n)) if n_range is None else list(n_range)
    ok = all(hom.get(n, 0) == bm_by_n.get(n, 0) for n in ns)
    return ConvolutionReport({n: hom.get(n, 0) for n in ns}, {n: bm_by_n.get(n, 0) for n in ns}, m, ok)
