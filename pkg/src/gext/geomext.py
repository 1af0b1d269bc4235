"""Geometric extensions and the diagnostics built on them.

A resolution f: X -> Y with X an oriented homology manifold gives f_*𝟏_X as
a minimal injective model on Y.  Its Krull-Schmidt decomposition splits off
the summands that are nonzero over the dense open U; the dense
indecomposable (or, for local-system inputs, the whole dense part) is the
geometric extension.  Everything else here compares, measures or
interprets that summand.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .cellposet import CellComplex, CellularMap, Stratification
from .exactlinalg import CoefficientSpec, inverse, is_invertible, kernel, rank
from .ksengine import (
    Decomposition,
    IsoResult,
    _pdivmod,
    _pnorm,
    assemble,
    decompose,
    dense_part,
    iso_test,
    lift_iso_on_dense,
    verify_iso,
)
from .shcomplex import (
    CohomologyBasis,
    GenComplex,
    GenMap,
    GradedModule,
    HomComplex,
    PosetRep,
    RepComplex,
    identity,
    scalar_cohomology,
)
from .sixfunctors import (
    BMClass,
    Orientation,
    certify_orientation,
    constant_injective,
    injective_model,
    orientation_search,
    push_class,
)


class ResolutionError(ValueError):
    """A resolution spec fails its preconditions; ``witness`` names a cell when there is one."""

    def __init__(self, msg: str, witness: Optional[int] = None):
        super().__init__(msg if witness is None else f"{msg} (cell {witness})")
        self.witness = witness


class NotALocalSystem(ValueError):
    pass


# ----------------------------------------------------------------------
# resolution specs and extensions
# ----------------------------------------------------------------------


@dataclass
class ResolutionSpec:
    """A proper map from an oriented homology manifold onto Y, with a dense open U ⊆ Y.

    ``resolution`` asks for f to be a cell-level isomorphism over U.  With it
    off, the pushforward is instead certified to be constant of rank one
    over U (this covers refinements whose cells do not match U exactly).
    ``smooth_proper`` marks a geometric local system: the whole dense part
    is then kept.
    """

    f: CellularMap
    U: FrozenSet[int]
    real_dim: Optional[int] = None
    resolution: bool = True
    smooth_proper: bool = False
    name: str = ""
    orientations: Dict[str, Orientation] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.U = frozenset(self.U)
        if self.real_dim is None:
            self.real_dim = self.f.source.dim

    @property
    def source(self) -> CellComplex:
        return self.f.source

    @property
    def target(self) -> CellComplex:
        return self.f.target

    def check(self) -> None:
        Y = self.target
        if not Y.is_up_closed(self.U):
            raise ResolutionError("U is not open")
        if self.resolution and not self.f.is_iso_over(self.U):
            bad = next(x for x in sorted(self.U) if len(self.f.fibre(x)) != 1)
            raise ResolutionError("map is not a cell isomorphism over U", bad)

    def orientation(self, coeffs: CoefficientSpec) -> Orientation:
        key = str(coeffs)
        o = self.orientations.get(key)
        if o is None:
            o = orientation_search(self.source, coeffs, n=self.real_dim)
            if o is None or not o.certified:
                raise ResolutionError(f"source admits no {coeffs}-orientation in dimension {self.real_dim}")
            self.orientations[key] = o
        return o


@dataclass
class GeometricExtension:
    complex: GenComplex
    incl: GenMap  # complex -> pushforward
    proj: GenMap  # pushforward -> complex
    pushforward: GenComplex
    spec: ResolutionSpec
    coeffs: CoefficientSpec
    decomposition: Decomposition
    certificates: Dict[str, bool] = field(default_factory=dict)
    lower: List[GenComplex] = field(default_factory=list)
    undecided: bool = False
    ambiguous: bool = False

    @property
    def space(self) -> CellComplex:
        return self.complex.space

    def stalk(self, x: int) -> GradedModule:
        return self.complex.stalk(x)

    def support(self) -> frozenset:
        return self.complex.support()

    def table(self, strat: Optional[Stratification] = None) -> "StalkTable":
        return stalk_table(self.complex, strat)

    @property
    def certified(self) -> bool:
        return all(self.certificates.values())


def pushforward_model(spec: ResolutionSpec, coeffs: CoefficientSpec) -> Tuple[GenComplex, GenComplex]:
    """(f_*𝟏_X unminimized, minimized) via the orientation model of 𝟏_X."""
    o = spec.orientation(coeffs)
    I = constant_injective(spec.source, coeffs, o)
    raw = I.relabel(spec.target, spec.f.cell_map)
    return raw, raw.minimize().complex


def _unit_section(C: GenComplex) -> Optional[dict]:
    """A generator of H^0 of global sections when that group is cyclic."""
    B = CohomologyBasis(C.degs, C.d, C.coeffs, 0)
    if B.dim != 1:
        return None
    return dict(B.reps[0])


def constant_over(C: GenComplex, U: Iterable[int]) -> Optional[int]:
    """None if C is constant of rank one over U (via one global section); else a witness cell."""
    Cf = C.coeffs
    U = sorted(set(U))
    for x in U:
        if C.stalk(x).parts != {0: [Cf.k if not Cf.is_field else 1]}:
            return x
    g = _unit_section(C)
    if g is None:
        return U[0] if U else None
    for x in U:
        sel = C.stalk_gens(x)
        co = CohomologyBasis(C.degs, C.d, Cf, 0, sel).coords({i: v for i, v in g.items() if i in set(sel)})
        if co is None or not Cf.is_unit(co[0]):
            return x
    return None


def geometric_extension(spec: ResolutionSpec, coeffs: CoefficientSpec, seed: int = 0) -> GeometricExtension:
    spec.check()
    P = pushforward_model(spec, coeffs)[1]
    if not spec.resolution and not spec.smooth_proper:
        w = constant_over(P, spec.U)
        if w is not None:
            raise ResolutionError("pushforward is not constant of rank one over U", w)
    D = decompose(P, seed)
    dp = dense_part(D, spec.U)
    lower = [s.complex for s in D.summands if all(s is not t for t in dp.summands)]
    # a resolution has exactly one dense indecomposable; more is reported, not resolved
    ambiguous = not spec.smooth_proper and len(dp.summands) > 1
    E, inc, prj = assemble(dp)
    ext = GeometricExtension(E, inc, prj, P, spec, coeffs, D, lower=lower,
                             undecided=D.undecided, ambiguous=ambiguous)
    ext.certificates = extension_certificates(ext)
    return ext


def extension_certificates(ext: GeometricExtension) -> Dict[str, bool]:
    """Checks for: restriction to U, no summand off U, split summand of the pushforward."""
    E, P, U = ext.complex, ext.pushforward, ext.spec.U
    cert = {k: v for k, v in ext.decomposition.certificates.items()}
    r = iso_test(E.restrict_open(U), P.restrict_open(U))
    cert["restricts_on_U"] = bool(r) and verify_iso(r)
    dd = dense_part(ext.decomposition, U)
    cert["dense_summands"] = all(any(not s.complex.stalk(x).is_zero() for x in U) for s in dd.summands)
    cert["split_summand"] = HomComplex(E, E).is_nullhomotopic(ext.proj.compose(ext.incl) - identity(E))
    cert["chain_maps"] = ext.incl.is_chain_map() and ext.proj.is_chain_map()
    cert["unique"] = not ext.ambiguous
    return cert


def geom_cohomology(ext: Union[GeometricExtension, GenComplex]) -> Dict[int, int]:
    """Graded dims of H^* Γ(Y, 𝓔)."""
    C = ext.complex if isinstance(ext, GeometricExtension) else ext
    return C.sections().dims


# ----------------------------------------------------------------------
# comparison of two resolutions
# ----------------------------------------------------------------------


@dataclass
class Comparison:
    isomorphic: bool
    iso: IsoResult
    verified: bool
    triangle: bool
    first: GeometricExtension
    second: GeometricExtension
    identical_specs: bool = False
    lifted: Optional[object] = None

    @property
    def invariant(self) -> Optional[str]:
        return self.iso.invariant


def _agree_over_U(s1: ResolutionSpec, s2: ResolutionSpec) -> None:
    if s1.target.n != s2.target.n or s1.U != s2.U:
        raise ResolutionError("specs have different targets or open sets")
    for s in (s1, s2):
        s.check()
    if s1.resolution and s2.resolution:
        # both restrict to cell isomorphisms over U, so the sources agree there
        for x in sorted(s1.U):
            a, b = s1.f.fibre(x), s2.f.fibre(x)
            (ca,), (cb,) = a, b
            if s1.source.dims[ca] != s2.source.dims[cb]:
                raise ResolutionError("sources disagree over U", x)


def _h0_coords(C: GenComplex, z: dict) -> Optional[List]:
    return CohomologyBasis(C.degs, C.d, C.coeffs, 0).coords(z)


def triangle_certificate(e1: GeometricExtension, e2: GeometricExtension, beta: GenMap) -> bool:
    """β∘π₁∘unit₁ equals π₂∘unit₂ up to a unit, checked on H^0 of global sections."""
    g1, g2 = _unit_section(e1.pushforward), _unit_section(e2.pushforward)
    if g1 is None or g2 is None:
        return False
    Cf = e1.coeffs
    a = _h0_coords(e2.complex, beta.apply(e1.proj.apply(g1)))
    b = _h0_coords(e2.complex, e2.proj.apply(g2))
    if a is None or b is None or len(a) != len(b):
        return False
    piv = next((i for i, v in enumerate(b) if Cf.is_unit(v)), None)
    if piv is None or not Cf.is_unit(a[piv]):
        return False
    u = Cf(a[piv] * Cf.inv(b[piv]))
    return all(Cf(x - u * y) == 0 for x, y in zip(a, b))


def compare_resolutions(s1: ResolutionSpec, s2: ResolutionSpec, coeffs: CoefficientSpec, seed: int = 0,
                        maps: Optional[Tuple[GenMap, GenMap]] = None) -> Comparison:
    """Compute both extensions and an explicit isomorphism between them.

    ``maps`` optionally supplies comparison chain maps f_*𝟏 ⇄ g_*𝟏 (on the
    minimized pushforwards) that are inverse over U; they are lifted to the
    dense parts in addition to the direct search.
    """
    _agree_over_U(s1, s2)
    e1 = geometric_extension(s1, coeffs, seed)
    e2 = e1 if s2 is s1 else geometric_extension(s2, coeffs, seed)
    r = iso_test(e1.complex, e2.complex, seed)
    ok = bool(r) and verify_iso(r)
    tri = ok and triangle_certificate(e1, e2, r.forward)
    lifted = None
    if maps is not None:
        lifted = lift_iso_on_dense(maps[0], maps[1], s1.U, seed)
    return Comparison(bool(r), r, ok, tri, e1, e2, s1 is s2, lifted)


# ----------------------------------------------------------------------
# stalk tables
# ----------------------------------------------------------------------


@dataclass
class StalkTable:
    """Graded stalk and point-costalk dims per stratum, with a constancy flag."""

    stalks: Dict[int, Dict[int, int]]
    costalks: Dict[int, Dict[int, int]]
    constant: Dict[int, bool] = field(default_factory=dict)
    labels: Dict[int, str] = field(default_factory=dict)

    def strata(self) -> List[int]:
        return sorted(self.stalks)

    def vector(self, i: int, lo: int, hi: int, costalk: bool = False) -> Tuple[int, ...]:
        src = self.costalks if costalk else self.stalks
        return tuple(src.get(i, {}).get(n, 0) for n in range(lo, hi + 1))

    def truncated(self, top: int) -> "StalkTable":
        """Copy with stalk degrees above ``top`` removed."""
        return StalkTable({i: {n: v for n, v in s.items() if n <= top} for i, s in self.stalks.items()},
                          dict(self.costalks), dict(self.constant), dict(self.labels))

    def to_json(self) -> dict:
        return {str(i): {"stalk": {str(n): v for n, v in sorted(self.stalks[i].items())},
                         "costalk": {str(n): v for n, v in sorted(self.costalks.get(i, {}).items())},
                         "constant": self.constant.get(i, True), "label": self.labels.get(i, "")}
                for i in self.strata()}

    def text(self) -> str:
        degs = sorted({n for s in self.stalks.values() for n in s} | {0})
        lo, hi = min(degs), max(degs)
        head = "stratum".ljust(12) + "".join(f"H^{n}".rjust(6) for n in range(lo, hi + 1))
        rows = [head]
        for i in self.strata():
            name = self.labels.get(i, str(i))
            rows.append(name.ljust(12) + "".join(str(v).rjust(6) for v in self.vector(i, lo, hi)))
        return "\n".join(rows)


def _partition(F, strat: Optional[Stratification]) -> List[Tuple[int, List[int]]]:
    K = F.space
    if strat is None:
        return [(x, [x]) for x in range(K.n)]
    return [(i, sorted(S)) for i, S in enumerate(strat.strata)]


def stalk_table(F, strat: Optional[Stratification] = None, costalks: bool = True) -> StalkTable:
    """Per stratum: stalk dims (constancy checked across cells) and point costalk at one cell."""
    st, co, const, lab = {}, {}, {}, {}
    for i, cells in _partition(F, strat):
        if not cells:
            continue
        first = F.stalk(cells[0]).dims
        st[i] = first
        const[i] = all(F.stalk(x).dims == first for x in cells[1:])
        if costalks:
            rep = max(cells, key=lambda x: F.space.dims[x])
            co[i] = F.point_costalk(rep).dims
        lab[i] = f"S{i}" if strat is not None else f"cell {i}"
    return StalkTable(st, co, const, lab)


def _cochain_complex(K: CellComplex, cells: Iterable[int]):
    sel = sorted(set(cells))
    pos = {c: k for k, c in enumerate(sel)}
    degs = [K.dims[c] for c in sel]
    cols = [dict() for _ in sel]
    for c in sel:
        for f, s in K.facets[c].items():
            if f in pos:
                cols[pos[f]][pos[c]] = s
    return degs, cols


def fibre_table(spec: ResolutionSpec, coeffs: CoefficientSpec, strat: Optional[Stratification] = None) -> StalkTable:
    """Cellular cohomology of the fibre over a vertex of each stratum.

    A vertex has a closed preimage, so its fibre is a subcomplex; cohomology is
    computed from its cellular cochains, independently of any sheaf model.
    """
    Y, X = spec.target, spec.source
    parts = [(i, sorted(S)) for i, S in enumerate(strat.strata)] if strat is not None else \
        [(x, [x]) for x in Y.cells_of_dim(0)]
    st, const, lab = {}, {}, {}
    for i, cells in parts:
        verts = [x for x in cells if Y.dims[x] == 0]
        if not verts:
            continue
        dims = []
        for v in verts:
            fib = spec.f.fibre(v)
            degs, cols = _cochain_complex(X, fib)
            dims.append(scalar_cohomology(degs, [{t: coeffs(s) for t, s in c.items()} for c in cols], coeffs).dims)
        st[i] = dims[0]
        const[i] = all(d == dims[0] for d in dims)
        lab[i] = f"S{i}" if strat is not None else f"vertex {i}"
    return StalkTable(st, {}, const, lab)


@dataclass
class BoundVerdict:
    holds: bool
    violations: List[Tuple[int, int, int, int]]  # (stratum, degree, stalk dim, bound)
    equality: Dict[int, List[int]]  # degrees with equality, per stratum


def stalk_bound_check(E: Union[GeometricExtension, GenComplex], table: StalkTable,
                      strat: Optional[Stratification] = None) -> BoundVerdict:
    """dim H^i(𝓔_y) ≤ table value, for every cell of each tabulated stratum."""
    C = E.complex if isinstance(E, GeometricExtension) else E
    parts = dict(_partition(C, strat))
    viol, eq = [], {}
    for i in table.strata():
        bound = table.stalks[i]
        for x in parts.get(i, []):
            s = C.stalk(x).dims
            for n in sorted(set(s) | set(bound)):
                a, b = s.get(n, 0), bound.get(n, 0)
                if a > b:
                    viol.append((i, n, a, b))
        rep = parts.get(i, [None])[0]
        if rep is not None:
            s = C.stalk(rep).dims
            eq[i] = [n for n in sorted(bound) if s.get(n, 0) == bound[n]]
    return BoundVerdict(not viol, viol, eq)


# ----------------------------------------------------------------------
# parity and perversity
# ----------------------------------------------------------------------


def _parity_of(dims: Dict[int, int]) -> str:
    degs = [n for n, v in dims.items() if v]
    if not degs:
        return "zero"
    if all(n % 2 == 0 for n in degs):
        return "even"
    if all(n % 2 for n in degs):
        return "odd"
    return "mixed"


@dataclass
class ParityReport:
    strata: Dict[int, Dict[str, str]]
    verdict: str  # "even", "odd" or "not parity"


def parity_report(F, strat: Optional[Stratification] = None) -> ParityReport:
    """Per stratum: parity of stalks and of costalks; overall even/odd/not parity."""
    T = stalk_table(F, strat)
    per, seen = {}, set()
    for i in T.strata():
        # constancy is not assumed: every cell of the stratum is inspected
        cells = dict(_partition(F, strat))[i]
        sp = _merge([_parity_of(F.stalk(x).dims) for x in cells])
        cp = _parity_of(T.costalks.get(i, {}))
        per[i] = {"stalk": sp, "costalk": cp}
        seen |= {sp, cp}
    seen.discard("zero")
    verdict = seen.pop() if len(seen) == 1 and seen <= {"even", "odd"} else ("even" if not seen else "not parity")
    return ParityReport(per, verdict)


def _merge(ps: List[str]) -> str:
    s = set(ps) - {"zero"}
    if not s:
        return "zero"
    return s.pop() if len(s) == 1 else "mixed"


@dataclass
class PerversityReport:
    perverse: bool
    shift: Optional[int]
    bounds: Dict[int, Tuple[int, int]]  # stratum -> (max stalk degree, min costalk degree)

    @property
    def verdict(self) -> str:
        return f"perverse with s = {self.shift}" if self.perverse else "not perverse for any shift"


def perversity_report(F, strat: Stratification) -> PerversityReport:
    """Middle perversity up to shift: stalk degrees ≤ s - d_S and costalk degrees ≥ s + d_S.

    Costalks are point costalks, so on a smooth stratum of complex dimension
    d_S they sit 2d_S above the stalk; this is what makes 𝟏 perverse with
    s = dim.
    """
    T = stalk_table(F, strat)
    parts = dict(_partition(F, strat))
    lo, hi = -10**9, 10**9  # admissible range for s
    bounds = {}
    for i in T.strata():
        d = strat.complex_dims[i]
        top = max((n for x in parts[i] for n, v in F.stalk(x).dims.items() if v), default=None)
        bot = min((n for n, v in T.costalks.get(i, {}).items() if v), default=None)
        bounds[i] = (top, bot)
        if top is not None:
            lo = max(lo, top + d)
        if bot is not None:
            hi = min(hi, bot - d)
    if lo > hi:
        return PerversityReport(False, None, bounds)
    s = lo if lo > -10**9 else (hi if hi < 10**9 else 0)
    return PerversityReport(True, s, bounds)


@dataclass
class SemismallVerdict:
    obstructed: bool
    report: PerversityReport

    @property
    def verdict(self) -> str:
        return "no semismall resolution" if self.obstructed else "no obstruction found"


def semismall_obstruction(E: Union[GeometricExtension, GenComplex], strat: Stratification) -> SemismallVerdict:
    C = E.complex if isinstance(E, GeometricExtension) else E
    r = perversity_report(C, strat)
    return SemismallVerdict(not r.perverse, r)


# ----------------------------------------------------------------------
# intersection cohomology by iterated pushforward and truncation
# ----------------------------------------------------------------------


def _check_strat(Y: CellComplex, strat: Stratification) -> None:
    for i, S in enumerate(strat.strata):
        if not S:
            continue
        top = max(Y.dims[c] for c in S)
        if top % 2 or top != 2 * strat.complex_dims[i]:
            raise ValueError(f"stratum {i} has real dimension {top}, not twice its complex dimension")


def _open_model(Y: CellComplex, cells: FrozenSet[int], coeffs: CoefficientSpec,
                L: Optional[PosetRep]) -> GenComplex:
    """Injective model on Y of Rj_*L for L on the open set ``cells``."""
    if L is None:
        sub, keep = Y.restrict(sorted(cells))
        o = orientation_search(sub, coeffs)
        if o is not None and o.certified:
            return constant_injective(sub, coeffs, o).relabel(Y, keep).minimize().complex
        from .shcomplex import constant_sheaf

        return constant_sheaf(Y, coeffs, cells).cobar().minimize().complex
    for (s, t), M in L.maps.items():
        if not is_invertible(M, coeffs):
            raise NotALocalSystem(f"generization {s}->{t} is not invertible")
    return RepComplex.from_rep(L).cobar().minimize().complex


def _point_truncation(M: GenComplex, points: Sequence[int], c: int) -> GenComplex:
    """Cocone of M -> ⊕_x I_x ⊗ H^{≥c}(M_x): kills stalk cohomology in degrees ≥ c at each point."""
    Cf, K = M.coeffs, M.space
    tgt_gens, comps = [], [dict() for _ in range(M.n)]
    for x in points:
        sel = M.stalk_gens(x)
        degs = sorted({M.deg(i) for i in sel if M.deg(i) >= c})
        for n in degs:
            B = CohomologyBasis(M.degs, M.d, Cf, n, sel)
            if B.dim == 0:
                continue
            cur = [i for i in sel if M.deg(i) == n]
            func = _splitting_functionals(M, sel, cur, B)
            base = len(tgt_gens)
            tgt_gens += [(n, x)] * B.dim
            for i, row in func.items():
                for t, v in row.items():
                    if v != 0:
                        comps[i][base + t] = v
    T = GenComplex(K, "I", Cf, tgt_gens, [dict() for _ in tgt_gens], check=False)
    psi = GenMap(M, T, comps)
    if not psi.is_chain_map():
        raise AssertionError("truncation map is not a chain map")
    return psi.cone().shift(-1).minimize().complex


def _splitting_functionals(M: GenComplex, sel, cur, B: CohomologyBasis) -> Dict[int, Dict[int, object]]:
    """ψ on degree-n stalk cochains: zero on boundaries, dual to the cohomology representatives."""
    Cf = M.coeffs
    pos = {g: k for k, g in enumerate(cur)}
    prev = [i for i in sel if M.deg(i) == B.n - 1]
    vecs = []
    for i in prev:
        v = {pos[j]: w for j, w in M.d[i].items() if j in pos}
        if v:
            vecs.append(v)
    nb_rows = []
    from .exactlinalg import SparseRowEchelon

    E = SparseRowEchelon(Cf)
    for v in vecs:
        if E.add_row(v) is None:
            nb_rows.append(v)
    reps = [{pos[g]: w for g, w in z.items() if g in pos} for z in B.reps]
    basis = nb_rows + reps
    for r in reps:
        if E.add_row(r) is not None:
            raise AssertionError("cohomology representative lies in the boundaries")
    # complete to a basis of the degree-n cochains
    for k in range(len(cur)):
        u = {k: Cf.one}
        if E.add_row(u) is None:
            basis.append(u)
    m = len(cur)
    A = Cf.zeros(m, m)
    for t, v in enumerate(basis):
        for k, w in v.items():
            A[k, t] = w
    Ainv = inverse(A, Cf)
    off = len(nb_rows)
    out: Dict[int, Dict[int, object]] = {}
    for k, g in enumerate(cur):
        row = {t: Ainv[off + t, k] for t in range(len(reps)) if Ainv[off + t, k] != 0}
        if row:
            out[g] = row
    return out


def deligne_ic_model(Y: CellComplex, strat: Stratification, coeffs: CoefficientSpec,
                     L: Optional[PosetRep] = None, route: str = "auto") -> GenComplex:
    """Injective model of IC(Y, L), unshifted (L in degree 0 on the open stratum).

    Each added stratum S of complex codimension c gets τ_{≤ c-1} of the open
    pushforward.  Point strata over a field use a cocone onto skyscrapers;
    otherwise (or with route="rep") the truncation is done on representations.
    """
    _check_strat(Y, strat)
    dY = strat.complex_dims[0]
    U = set(strat.strata[0])
    M = _open_model(Y, frozenset(U), coeffs, L)
    for i in range(1, len(strat.strata)):
        S = strat.strata[i]
        c = dY - strat.complex_dims[i]
        U |= S
        points = all(Y.dims[x] == 0 for x in S)
        if route != "rep" and points and coeffs.is_field:
            M = _point_truncation(M, sorted(S), c)
        else:
            R = M.to_rep().restrict(U).truncate_le(c - 1)
            M = R.cobar().minimize().complex
    return M


def deligne_ic(Y: CellComplex, strat: Stratification, coeffs: CoefficientSpec,
               L: Optional[PosetRep] = None, route: str = "auto") -> RepComplex:
    return deligne_ic_model(Y, strat, coeffs, L, route).to_rep()


# ----------------------------------------------------------------------
# monodromy
# ----------------------------------------------------------------------


def _stalk_transport(F: GenComplex, n: int, a: int, b: int, bases) -> np.ndarray:
    """Generization H^n(F_a) -> H^n(F_b) for a ≤ b (restriction of stalk cochains)."""
    Cf = F.coeffs
    Ba, Bb = bases(a), bases(b)
    keep = set(F.stalk_gens(b))
    M = Cf.zeros(Bb.dim, Ba.dim)
    for t, z in enumerate(Ba.reps):
        co = Bb.coords({g: v for g, v in z.items() if g in keep})
        if co is None:
            raise AssertionError("restricted cocycle is not a cocycle")
        for s, v in enumerate(co):
            M[s, t] = v
    return M


@dataclass
class MonodromyResult:
    matrix: np.ndarray
    coeffs: CoefficientSpec
    canonical: Optional[np.ndarray]

    def conjugate_to(self, B) -> bool:
        return are_conjugate(self.matrix, self.coeffs.array(B), self.coeffs)

    def is_identity(self) -> bool:
        C = self.coeffs
        return C.is_zero_matrix(C.sub(self.matrix, C.eye(self.matrix.shape[0])))


def monodromy(F, cycle: Sequence[int], degree: int = 0) -> MonodromyResult:
    """Zigzag transport of H^degree stalks around a closed sequence of cells.

    Consecutive cells must be comparable; a step a ≤ b uses the generization,
    a step a ≥ b inverts it (so every generization on the cycle must be
    invertible).
    """
    cyc = list(cycle)
    if isinstance(F, PosetRep):
        Cf, K = F.coeffs, F.space

        def step(a, b):
            return F.transport(a, b)
    else:
        G = F if isinstance(F, GenComplex) and F.kind == "I" else injective_model(F)
        Cf, K = G.coeffs, G.space
        cache = {}

        def bases(x):
            if x not in cache:
                cache[x] = G.stalk_basis(x, degree)
            return cache[x]

        def step(a, b):
            return _stalk_transport(G, degree, a, b, bases)
    T = None
    for a, b in zip(cyc, cyc[1:] + cyc[:1]):
        if K.leq(a, b):
            M = step(a, b)
            fwd = True
        elif K.leq(b, a):
            M = step(b, a)
            fwd = False
        else:
            raise ValueError(f"cells {a} and {b} are not comparable")
        if M.shape[0] != M.shape[1] or not is_invertible(M, Cf):
            raise NotALocalSystem(f"generization between {a} and {b} is not invertible")
        M = M if fwd else inverse(M, Cf)
        T = M if T is None else Cf.matmul(M, T)
    return MonodromyResult(T, Cf, canonical_form(T, Cf))


def are_conjugate(A: np.ndarray, B: np.ndarray, C: CoefficientSpec, seed: int = 0) -> bool:
    """Is there an invertible X with X A = B X?

    The solutions form a module; X is invertible iff its residue is, and the
    residues of solutions are spanned by the residues of module generators,
    so the search runs over residue-field combinations.
    """
    n = A.shape[0]
    if B.shape != A.shape:
        return False
    if n == 0:
        return True
    # vec(XA - BX) = (A^T ⊗ I - I ⊗ B) vec(X), row-major vec
    M = C.zeros(n * n, n * n)
    for i in range(n):
        for j in range(n):
            r = i * n + j
            for k in range(n):
                M[r, i * n + k] = C(M[r, i * n + k] + A[k, j])
                M[r, k * n + j] = C(M[r, k * n + j] - B[i, k])
    Kmat = kernel(M, C)
    R = C.residue() if not C.is_field else C
    gens = [R.reduce(C.to_residue(Kmat[:, t:t + 1]).reshape(n, n)) if not C.is_field else Kmat[:, t].reshape(n, n)
            for t in range(Kmat.shape[1])]
    if not gens:
        return False
    q = R.p if R.kind == "Fp" else None
    if q is not None and q ** len(gens) <= 1 << 16:
        for coef in itertools.product(range(q), repeat=len(gens)):
            X = R.zeros(n, n)
            for c, g in zip(coef, gens):
                if c:
                    X = R.add(X, R.scale(c, g))
            if is_invertible(X, R):
                return True
        return False
    rng = random.Random(seed)
    for _ in range(64):
        X = R.zeros(n, n)
        for g in gens:
            c = R.random(rng) if R.kind != "Q" else rng.randint(-50, 50)
            X = R.add(X, R.scale(c, g))
        if is_invertible(X, R):
            return True
    # over Q an invertible solution, if any, is found with probability one
    return False


def _poly_smith(C: CoefficientSpec, P: List[List[list]]) -> List[list]:
    """Invariant factors (monic, dividing chain) of a square matrix over C[x]."""
    n = len(P)
    P = [[_pnorm(C, e) for e in row] for row in P]

    def deg(f):
        return len(f) - 1 if f else 10**9

    out = []
    for t in range(n):
        while True:
            cand = [(deg(P[i][j]), i, j) for i in range(t, n) for j in range(t, n) if P[i][j]]
            if not cand:
                return out + [[] for _ in range(n - t)]
            _, i, j = min(cand)
            P[t], P[i] = P[i], P[t]
            for row in P:
                row[t], row[j] = row[j], row[t]
            piv = P[t][t]
            dirty = False
            for i in range(t + 1, n):
                if P[i][t]:
                    q, r = _pdivmod(C, P[i][t], piv)
                    P[i] = [_psub_mul(C, P[i][k], q, P[t][k]) for k in range(n)]
                    dirty |= bool(r)
            for j in range(t + 1, n):
                if P[t][j]:
                    q, r = _pdivmod(C, P[t][j], piv)
                    for row in P:
                        row[j] = _psub_mul(C, row[j], q, row[t])
                    dirty |= bool(r)
            if dirty:
                continue
            bad = next(((i, j) for i in range(t + 1, n) for j in range(t + 1, n)
                        if P[i][j] and _pdivmod(C, P[i][j], piv)[1]), None)
            if bad is None:
                break
            P[t] = [_padd(C, P[t][k], P[bad[0]][k]) for k in range(n)]
        lead = C.inv(P[t][t][-1])
        out.append([C(v * lead) for v in P[t][t]])
    return out


def _padd(C, f, g):
    m = max(len(f), len(g))
    return _pnorm(C, [(f[i] if i < len(f) else 0) + (g[i] if i < len(g) else 0) for i in range(m)])


def _psub_mul(C, f, q, g):
    from .ksengine import _pmul, _psub

    return _psub(C, f, _pmul(C, q, g))


def rational_canonical_form(A: np.ndarray, C: CoefficientSpec) -> np.ndarray:
    """Block diagonal of companion matrices of the nontrivial invariant factors."""
    if not C.is_field:
        raise ValueError("rational canonical form needs a field")
    n = A.shape[0]
    P = [[([C(-A[i, j]), C.one] if i == j else [C(-A[i, j])]) for j in range(n)] for i in range(n)]
    facs = [f for f in _poly_smith(C, P) if len(f) > 1]
    R = C.zeros(n, n)
    off = 0
    for f in facs:
        m = len(f) - 1
        for k in range(1, m):
            R[off + k, off + k - 1] = C.one
        for k in range(m):
            R[off + k, off + m - 1] = C(-f[k])
        off += m
    return R


def _orbit_minimum(A: np.ndarray, C: CoefficientSpec, limit: int = 1 << 17) -> Optional[np.ndarray]:
    n, q = A.shape[0], C.modulus
    if q ** (n * n) > limit:
        return None
    best = None
    for flat in itertools.product(range(q), repeat=n * n):
        X = C.array(list(flat)).reshape(n, n)
        if not is_invertible(X, C):
            continue
        B = C.matmul(C.matmul(X, A), inverse(X, C))
        key = tuple(int(v) for v in B.reshape(-1))
        if best is None or key < best:
            best = key
    return C.array(list(best)).reshape(n, n)


def canonical_form(A: np.ndarray, C: CoefficientSpec) -> Optional[np.ndarray]:
    """A conjugacy invariant representative: rational canonical form over fields,
    the lexicographically least conjugate over small Z/p^k (None when too large)."""
    if C.is_field:
        return rational_canonical_form(A, C)
    return _orbit_minimum(A, C)


# ----------------------------------------------------------------------
# interpolation between 𝟏 and ω
# ----------------------------------------------------------------------


@dataclass
class Interpolation:
    unit_section: dict  # H^0 class of 𝟏_Y -> 𝓔
    scale: object  # the idempotent incl∘proj acts on the unit by this scalar
    composite: Orientation
    extension: GeometricExtension

    @property
    def certified(self) -> bool:
        return self.composite.certified and not self.composite.cls.is_zero()


def interpolation(spec: ResolutionSpec, coeffs: CoefficientSpec, seed: int = 0,
                  ext: Optional[GeometricExtension] = None) -> Interpolation:
    """𝟏_Y → 𝓔 → ω_Y[-2d] and a certificate that the composite orients U.

    The unit and counit of f bracket the idempotent incl∘proj; on H^0 of
    sections that idempotent multiplies the unit by a scalar λ, so the
    composite is λ times the pushed fundamental class of the source.
    """
    E = ext or geometric_extension(spec, coeffs, seed)
    Cf = coeffs
    P = E.pushforward
    g = _unit_section(P)
    if g is None:
        raise ResolutionError("source is not connected")
    e = E.incl.apply(E.proj.apply(g))
    co = _h0_coords(P, e)
    lam = co[0] if co else Cf.zero
    fund = spec.orientation(Cf).cls
    pushed = push_class(spec.f.fit_signs(), fund)
    cls = BMClass(pushed.space, Cf, pushed.n, {c: Cf(lam * v) for c, v in pushed.chain.items() if Cf(lam * v) != 0})
    o = certify_orientation(cls, spec.U)
    return Interpolation(E.proj.apply(g), lam, o, E)


# ----------------------------------------------------------------------
# geometrically pure and non-pure cohomology
# ----------------------------------------------------------------------


@dataclass
class PurityReport:
    cohomology: Dict[int, int]  # H^n(Y)
    pure: Dict[int, int]  # image in 𝓔^n(Y)
    nonpure: Dict[int, int]  # kernel
    kernels: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    agrees: Optional[bool] = None


def constant_model(Y: CellComplex, coeffs: CoefficientSpec) -> GenComplex:
    """Minimal injective model of 𝟏_Y (cobar resolution, then minimized)."""
    from .shcomplex import constant_sheaf

    return constant_sheaf(Y, coeffs).cobar().minimize().complex


def _purity(ext: GeometricExtension, IY: GenComplex, degrees: Sequence[int]):
    """Ranks of H^n Γ(𝟏_Y) → H^n Γ(𝓔) along 𝟏_Y → f_*𝟏 → 𝓔, on global sections."""
    Cf = ext.coeffs
    E, Push = ext.complex, ext.pushforward
    H0 = HomComplex(IY, Push).cohomology_basis(0)
    if H0.dim != 1:
        raise ResolutionError("H^0 Hom(𝟏, f_*𝟏) is not cyclic; source not connected")
    rho = ext.proj.compose(H0.maps[0])
    coh, pure, non, kers = {}, {}, {}, {}
    for n in degrees:
        BY = CohomologyBasis(IY.degs, IY.d, Cf, n)
        BE = CohomologyBasis(E.degs, E.d, Cf, n)
        M = Cf.zeros(BE.dim, BY.dim)
        for t, z in enumerate(BY.reps):
            c = BE.coords(rho.apply(z))
            if c is None:
                raise AssertionError("image of a cocycle is not a cocycle")
            for s_, v in enumerate(c):
                M[s_, t] = v
        r = rank(M, Cf) if M.size else 0
        coh[n], pure[n], non[n] = BY.dim, r, BY.dim - r
        kers[n] = kernel(M, Cf) if BY.dim else Cf.zeros(0, 0)
    return coh, pure, non, kers


def gp_gnp(spec: ResolutionSpec, coeffs: CoefficientSpec, other: Optional[ResolutionSpec] = None,
           seed: int = 0, exts: Optional[Tuple[GeometricExtension, ...]] = None) -> PurityReport:
    """Image and kernel of H^*(Y) → 𝓔^*(Y) induced by 𝟏_Y → f_*𝟏 → 𝓔.

    With a second spec the kernels are compared as subspaces of H^*(Y), in
    the same basis of H^*(Y) (so not only their dimensions).
    """
    Y = spec.target
    IY = constant_model(Y, coeffs)
    degrees = list(range(0, Y.dim + 1))
    e1 = exts[0] if exts else geometric_extension(spec, coeffs, seed)
    coh, pure, non, kers = _purity(e1, IY, degrees)
    rep = PurityReport(coh, pure, non, kers)
    if other is not None:
        e2 = exts[1] if exts and len(exts) > 1 else geometric_extension(other, coeffs, seed)
        c2, p2, n2, k2 = _purity(e2, IY, degrees)
        rep.agrees = n2 == non and all(_same_span(kers[n], k2[n], coeffs) for n in degrees)
    return rep


def _same_span(A: np.ndarray, B: np.ndarray, C: CoefficientSpec) -> bool:
    if A.shape[1] == 0 and B.shape[1] == 0:
        return True
    if A.shape[0] != B.shape[0]:
        return False
    ra, rb = rank(A, C), rank(B, C)
    M = C.zeros(A.shape[0], A.shape[1] + B.shape[1])
    M[:, :A.shape[1]] = A
    M[:, A.shape[1]:] = B
    return ra == rb == rank(M, C)


# ----------------------------------------------------------------------
# condition (D)
# ----------------------------------------------------------------------


@dataclass
class DenseSupportVerdict:
    holds: bool
    summands: int
    violations: List[Tuple[int, int]]  # (summand index, cell of U with zero stalk)
    flagged: bool


def condition_D_check(phi: CellularMap, coeffs: CoefficientSpec, U: Optional[Iterable[int]] = None,
                      seed: int = 0) -> DenseSupportVerdict:
    """Every summand of φ_*𝟏 has nonzero stalk at every cell of U (default: all of the base)."""
    Y = phi.target
    U = sorted(range(Y.n) if U is None else set(U))
    spec = ResolutionSpec(phi, frozenset(U), resolution=False, smooth_proper=True)
    try:
        P = pushforward_model(spec, coeffs)[1]
    except ResolutionError:
        P = injective_model(_constant_rep(phi.source, coeffs)).relabel(Y, phi.cell_map).minimize().complex
    D = decompose(P, seed)
    viol = []
    for k, s in enumerate(D.summands):
        for x in U:
            if s.complex.stalk(x).is_zero():
                viol.append((k, x))
                break
    return DenseSupportVerdict(not viol, len(D.summands), viol, bool(phi.smooth_proper))


def _constant_rep(K: CellComplex, coeffs: CoefficientSpec) -> RepComplex:
    from .shcomplex import constant_sheaf

    return constant_sheaf(K, coeffs)


# ----------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------


def extension_report(ext: GeometricExtension, strat: Optional[Stratification] = None) -> dict:
    T = stalk_table(ext.complex, strat)
    out = {
        "extension": {
            "stalk_table": T.to_json(),
            "support": sorted(int(x) for x in ext.support()),
            "certificates": {k: bool(v) for k, v in sorted(ext.certificates.items())},
            "generators": len(ext.complex.gens),
        },
        "verdicts": {
            "summands_of_pushforward": len(ext.decomposition.summands),
            "dense_summands": len(ext.decomposition.summands) - len(ext.lower),
            "undecided": bool(ext.undecided),
            "ambiguous": bool(ext.ambiguous),
        },
    }
    if strat is not None:
        out["verdicts"]["parity"] = parity_report(ext.complex, strat).verdict
        out["verdicts"]["perversity"] = perversity_report(ext.complex, strat).verdict
    return out
