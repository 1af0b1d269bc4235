"""Complexes of face-poset representations and their homological calculus.

Two presentations are used:

* ``RepComplex``: a bounded complex of representations, stored cellwise as
  matrices.  This is the literal model (stalks, Roos sections, cellular
  compactly supported sections, truncation).
* ``GenComplex``: a bounded complex of indecomposable projectives P_σ or
  injectives I_σ.  P_σ(τ) = Λ for τ >= σ and I_σ(τ) = Λ for τ <= σ; in both
  cases Hom(X_a, X_b) = Λ exactly when b <= a, so a differential is a sparse
  scalar matrix with entries from generator i to generator j only when
  cell(j) <= cell(i).  Minimization, Hom complexes and pushforwards work here.

Degrees are cohomological and the constant sheaf sits in degree 0.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .cellposet import CellComplex
from .exactlinalg import (
    CoefficientSpec,
    SparseRowEchelon,
    kernel,
    solve,
    sparse_kernel,
    sparse_rank,
    subquotient,
)


# ----------------------------------------------------------------------
# sparse helpers
# ----------------------------------------------------------------------


def _axpy(C: CoefficientSpec, y: dict, a, x: dict) -> None:
    """y += a * x in place (sparse)."""
    m = C.modulus
    for k, v in x.items():
        nv = y.get(k, 0) + a * v
        if m is not None:
            nv %= m
        if nv == 0:
            y.pop(k, None)
        else:
            y[k] = nv


def _scale(C: CoefficientSpec, a, x: dict) -> dict:
    m = C.modulus
    out = {}
    for k, v in x.items():
        nv = a * v
        if m is not None:
            nv %= m
        if nv != 0:
            out[k] = nv
    return out


# ----------------------------------------------------------------------
# graded modules and cohomology of scalar complexes
# ----------------------------------------------------------------------


@dataclass
class GradedModule:
    """Graded finitely generated module; ``parts[n]`` lists exponents of cyclic summands.

    Over a field every exponent is 1, so ``dims[n]`` is the dimension.  Over
    Z/p^k a free summand has exponent k.
    """

    coeffs: CoefficientSpec
    parts: Dict[int, List[int]] = field(default_factory=dict)

    def __post_init__(self):
        self.parts = {n: sorted(v) for n, v in self.parts.items() if v}

    @property
    def dims(self) -> Dict[int, int]:
        return {n: len(v) for n, v in sorted(self.parts.items())}

    def dim(self, n: int) -> int:
        return len(self.parts.get(n, []))

    @property
    def total(self) -> int:
        return sum(len(v) for v in self.parts.values())

    def is_zero(self) -> bool:
        return not self.parts

    def degrees(self) -> List[int]:
        return sorted(self.parts)

    def vector(self, lo: int, hi: int) -> Tuple[int, ...]:
        return tuple(self.dim(n) for n in range(lo, hi + 1))

    def shifted(self, k: int) -> "GradedModule":
        """M[k]: degree n of the result is degree n + k of M."""
        return GradedModule(self.coeffs, {n - k: v for n, v in self.parts.items()})

    def negated(self) -> "GradedModule":
        return GradedModule(self.coeffs, {-n: v for n, v in self.parts.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, GradedModule) and self.parts == other.parts

    def __repr__(self) -> str:
        return f"GradedModule({self.dims})"


def _restrict_cols(cols: Sequence[dict], sel: Optional[Iterable[int]]):
    if sel is None:
        return list(range(len(cols))), cols
    sel = sorted(set(sel))
    pos = {g: k for k, g in enumerate(sel)}
    new = []
    for g in sel:
        new.append({pos[t]: v for t, v in cols[g].items() if t in pos})
    return sel, new


def scalar_cohomology(degs: Sequence[int], cols: Sequence[dict], C: CoefficientSpec,
                      sel: Optional[Iterable[int]] = None) -> GradedModule:
    """Cohomology of a scalar complex given by generator degrees and sparse columns.

    ``sel`` picks a subquotient (a set of generators on which the restricted
    differential is again a complex).
    """
    idx, cc = _restrict_cols(cols, sel)
    dg = [degs[g] for g in idx]
    by: Dict[int, List[int]] = {}
    for k, n in enumerate(dg):
        by.setdefault(n, []).append(k)
    if C.is_field:
        rk = {}
        for n, ks in by.items():
            rk[n] = sparse_rank([cc[k] for k in ks if cc[k]], C)
        parts = {}
        for n, ks in by.items():
            h = len(ks) - rk[n] - rk.get(n - 1, 0)
            if h:
                parts[n] = [1] * h
        return GradedModule(C, parts)
    parts = {}
    for n in by:
        f = _dense_block(cc, by.get(n - 1, []), by[n], C)
        g = _dense_block(cc, by[n], by.get(n + 1, []), C)
        H = subquotient(f, g, C)
        if H.orders:
            parts[n] = H.orders
    return GradedModule(C, parts)


def _dense_block(cc, src: List[int], tgt: List[int], C: CoefficientSpec) -> np.ndarray:
    pos = {t: i for i, t in enumerate(tgt)}
    M = C.zeros(len(tgt), len(src))
    for j, s in enumerate(src):
        for t, v in cc[s].items():
            if t in pos:
                M[pos[t], j] = v
    return M


class CohomologyBasis:
    """Representatives of H^n of a scalar complex and coordinates of cocycles.

    Works over fields (sparse) and over Z/p^k (dense, via subquotients).
    Cocycles are dicts over generator indices of the full complex.
    """

    def __init__(self, degs, cols, C: CoefficientSpec, n: int, sel=None):
        self.C = C
        self.n = n
        idx, cc = _restrict_cols(cols, sel)
        self.idx = idx
        self.pos = {g: k for k, g in enumerate(idx)}
        dg = [degs[g] for g in idx]
        cur = [k for k, d in enumerate(dg) if d == n]
        prev = [k for k, d in enumerate(dg) if d == n - 1]
        nxt_pos = {k: i for i, k in enumerate(k for k, d in enumerate(dg) if d == n + 1)}
        self.cur = cur
        if C.is_field:
            bnds = [cc[k] for k in prev if cc[k]]
            ker = sparse_kernel([{nxt_pos[t]: v for t, v in cc[k].items() if t in nxt_pos} for k in cur], C)
            ker = [{cur[j]: v for j, v in vec.items()} for vec in ker]
            E = SparseRowEchelon(C, track=True)
            nb = 0
            for b in bnds:
                if E.add_row(b) is None:
                    nb += 1
            self._bnd_count = E.n_added
            reps = []
            rep_rows = []
            for z in ker:
                if E.add_row(z) is None:
                    reps.append(z)
                    rep_rows.append(E.n_added - 1)
            self._E = E
            self._rep_rows = {r: i for i, r in enumerate(rep_rows)}
            self.reps = [{idx[k]: v for k, v in z.items()} for z in reps]
            self.orders = [1] * len(reps)
        else:
            f = _dense_block(cc, prev, cur, C)
            g = _dense_block(cc, cur, list(nxt_pos), C)
            H = subquotient(f, g, C)
            self._H = H
            self.orders = H.orders
            self.reps = []
            for t in range(H.gens.shape[1]):
                self.reps.append({idx[cur[i]]: int(H.gens[i, t]) for i in range(len(cur)) if H.gens[i, t] != 0})

    @property
    def dim(self) -> int:
        return len(self.reps)

    def coords(self, z: dict) -> Optional[List]:
        """Coordinates of a cocycle in terms of ``reps`` (None if not a cocycle mod boundaries)."""
        C = self.C
        local = {self.pos[g]: v for g, v in z.items() if g in self.pos}
        if C.is_field:
            res, tag = self._E.express(local)
            if res:
                return None
            out = [C.zero] * len(self.reps)
            for r, v in tag.items():
                i = self._rep_rows.get(r)
                if i is not None:
                    out[i] = v
            return out
        cpos = {k: i for i, k in enumerate(self.cur)}
        x = C.zeros(len(self.cur), 1)[:, 0]
        for k, v in local.items():
            x[cpos[k]] = v
        c = self._H.coordinates(x)
        return None if c is None else [int(v) for v in c]


# ----------------------------------------------------------------------
# generator complexes
# ----------------------------------------------------------------------


class GenComplexError(ValueError):
    pass


class GenComplex:
    """Bounded complex of indecomposable projectives ('P') or injectives ('I').

    ``gens[i] = (degree, cell)``; ``d[i]`` maps target generator j to the scalar
    component of the differential from generator i to generator j.
    """

    def __init__(self, space: CellComplex, kind: str, coeffs: CoefficientSpec,
                 gens: Sequence[Tuple[int, int]], d: Sequence[dict], check: bool = True):
        if kind not in ("P", "I"):
            raise GenComplexError("kind must be 'P' or 'I'")
        self.space = space
        self.kind = kind
        self.coeffs = coeffs
        self.gens = [(int(a), int(b)) for a, b in gens]
        self.d = [dict(x) for x in d]
        if check:
            self.validate()

    # -- basics ---------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.gens)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"GenComplex(kind={self.kind}, gens={self.n}, coeffs={self.coeffs})"

    @property
    def degs(self) -> List[int]:
        return [g[0] for g in self.gens]

    def deg(self, i: int) -> int:
        return self.gens[i][0]

    def cell(self, i: int) -> int:
        return self.gens[i][1]

    def rows(self) -> List[dict]:
        r: List[dict] = [dict() for _ in range(self.n)]
        for i, col in enumerate(self.d):
            for j, v in col.items():
                r[j][i] = v
        return r

    def validate(self) -> None:
        K, C = self.space, self.coeffs
        for i, col in enumerate(self.d):
            for j, v in col.items():
                if self.gens[j][0] != self.gens[i][0] + 1:
                    raise GenComplexError(f"differential {i}->{j} has wrong degree")
                if not K.leq(self.gens[j][1], self.gens[i][1]):
                    raise GenComplexError(f"differential {i}->{j} violates the cell order")
                if v == 0:
                    raise GenComplexError("explicit zero stored in differential")
        for i, col in enumerate(self.d):
            acc: dict = {}
            for j, v in col.items():
                _axpy(C, acc, v, self.d[j])
            if acc:
                raise GenComplexError(f"d^2 != 0 at generator {i}")

    def copy(self) -> "GenComplex":
        return GenComplex(self.space, self.kind, self.coeffs, list(self.gens), [dict(c) for c in self.d], check=False)

    # -- stalks and sections -----------------------------------------

    def stalk_gens(self, x: int) -> List[int]:
        K = self.space
        if self.kind == "P":
            return [i for i, (_, c) in enumerate(self.gens) if K.leq(c, x)]
        return [i for i, (_, c) in enumerate(self.gens) if K.leq(x, c)]

    def stalk(self, x: int) -> GradedModule:
        return scalar_cohomology(self.degs, self.d, self.coeffs, self.stalk_gens(x))

    def stalk_basis(self, x: int, n: int) -> CohomologyBasis:
        return CohomologyBasis(self.degs, self.d, self.coeffs, n, self.stalk_gens(x))

    def cell_costalk(self, x: int) -> GradedModule:
        """RHom(S_x, C): sections supported on the cell x."""
        if self.kind == "I":
            sel = [i for i, (_, c) in enumerate(self.gens) if c == x]
            return scalar_cohomology(self.degs, self.d, self.coeffs, sel)
        from .sixfunctors import verdier_dual  # local import: duality lives there

        # D swaps stalks with point costalks
        return verdier_dual(self).stalk(x).negated().shifted(self.space.dims[x])

    def point_costalk(self, x: int) -> GradedModule:
        """Costalk at a point of the open cell x: the cell costalk shifted by -dim x."""
        return self.cell_costalk(x).shifted(-self.space.dims[x])

    def sections(self, U: Optional[Iterable[int]] = None) -> GradedModule:
        """Derived sections over an open set (I-kind only)."""
        if self.kind != "I":
            raise GenComplexError("sections on generators need an injective model")
        if U is None:
            return scalar_cohomology(self.degs, self.d, self.coeffs)
        U = set(U)
        return scalar_cohomology(self.degs, self.d, self.coeffs, [i for i, (_, c) in enumerate(self.gens) if c in U])

    def support(self) -> FrozenSet[int]:
        cells = {c for _, c in self.gens}
        if self.kind == "P":
            cand = self.space.star(cells)
        else:
            cand = self.space.closure(cells)
        return frozenset(x for x in cand if not self.stalk(x).is_zero())

    def stalk_table(self, cells: Optional[Iterable[int]] = None) -> Dict[int, Dict[int, int]]:
        cells = range(self.space.n) if cells is None else cells
        return {x: self.stalk(x).dims for x in cells}

    def is_acyclic(self) -> bool:
        cells = {c for _, c in self.gens}
        cand = self.space.star(cells) if self.kind == "P" else self.space.closure(cells)
        return all(self.stalk(x).is_zero() for x in cand)

    def generator_counts(self) -> Dict[Tuple[int, int], int]:
        out: Dict[Tuple[int, int], int] = {}
        for g in self.gens:
            out[g] = out.get(g, 0) + 1
        return out

    # -- structure ----------------------------------------------------

    def shift(self, k: int) -> "GenComplex":
        """C[k]: generators move to degree deg - k, differential times (-1)^k."""
        s = -1 if k % 2 else 1
        return GenComplex(self.space, self.kind, self.coeffs, [(a - k, c) for a, c in self.gens],
                          [_scale(self.coeffs, s, col) for col in self.d], check=False)

    def subcomplex(self, sel: Sequence[int]) -> "GenComplex":
        """Complex on the chosen generators with the restricted differential (caller ensures d^2 = 0)."""
        sel = list(sel)
        pos = {g: k for k, g in enumerate(sel)}
        d = [{pos[t]: v for t, v in self.d[g].items() if t in pos} for g in sel]
        return GenComplex(self.space, self.kind, self.coeffs, [self.gens[g] for g in sel], d, check=False)

    def restrict_open(self, U: Iterable[int]) -> "GenComplex":
        """j^* for an open set U (injective models only)."""
        if self.kind != "I":
            raise GenComplexError("restriction to an open set needs an injective model")
        U = set(U)
        return self.subcomplex([i for i, (_, c) in enumerate(self.gens) if c in U])

    def permuted(self, perm: Sequence[int]) -> "GenComplex":
        """Same complex with generator i renamed perm[i]."""
        gens = [None] * self.n
        d = [None] * self.n
        for i, p in enumerate(perm):
            gens[p] = self.gens[i]
            d[p] = {perm[j]: v for j, v in self.d[i].items()}
        return GenComplex(self.space, self.kind, self.coeffs, gens, d, check=False)

    def relabel(self, target: CellComplex, cell_map: Sequence[int]) -> "GenComplex":
        """Push generators along an order-preserving cell map (f_* for injectives)."""
        if self.kind != "I":
            raise GenComplexError("relabelling computes f_* only for injective models")
        return GenComplex(target, "I", self.coeffs, [(a, cell_map[c]) for a, c in self.gens],
                          [dict(col) for col in self.d], check=False)

    def change_coeffs(self, coeffs: CoefficientSpec) -> "GenComplex":
        d = []
        for col in self.d:
            nc = {}
            for j, v in col.items():
                w = coeffs(v)
                if w != 0:
                    nc[j] = w
            d.append(nc)
        return GenComplex(self.space, self.kind, coeffs, list(self.gens), d, check=False)

    # -- minimization -------------------------------------------------

    def minimize(self, track: bool = False, rng: Optional[random.Random] = None) -> "Minimized":
        """Cancel unit components between generators at the same cell.

        Returns the minimal complex and, when ``track`` is set, chain maps
        F: self -> min and G: min -> self that are mutually inverse homotopy
        equivalences.
        """
        C = self.coeffs
        n = self.n
        d = [dict(c) for c in self.d]
        rows = self.rows()
        alive = [True] * n
        F = [{i: C.one} for i in range(n)] if track else None
        Frows = [{i} for i in range(n)] if track else None
        G = [{i: C.one} for i in range(n)] if track else None
        order = list(range(n))
        if rng is not None:
            rng.shuffle(order)
        queue = list(reversed(order))
        inq = [True] * n
        cells = [c for _, c in self.gens]
        while queue:
            i = queue.pop()
            inq[i] = False
            if not alive[i]:
                continue
            best = None
            for j, v in d[i].items():
                if cells[j] == cells[i] and C.is_unit(v):
                    key = (len(rows[j]), j) if rng is None else (len(rows[j]), rng.random())
                    if best is None or key < best[0]:
                        best = (key, j)
            if best is None:
                continue
            j = best[1]
            a = d[i][j]
            ainv = C.inv(a)
            col_i = {l: v for l, v in d[i].items() if l != j}
            row_j = {k: v for k, v in rows[j].items() if k != i}
            for k, c in row_j.items():
                f = _neg_mul(C, c, ainv)
                old = d[k]
                for l, v in col_i.items():
                    nv = old.get(l, 0) + f * v
                    if C.modulus is not None:
                        nv %= C.modulus
                    if nv == 0:
                        if l in old:
                            del old[l]
                            del rows[l][k]
                    else:
                        old[l] = nv
                        rows[l][k] = nv
                del old[j]
                if not inq[k]:
                    queue.append(k)
                    inq[k] = True
                if track:
                    _axpy(C, G[k], f, G[i])
            # drop i and j
            for m in list(rows[i]):
                del d[m][i]
            for l in list(d[i]):
                rows[l].pop(i, None)
            for l in list(d[j]):
                rows[l].pop(j, None)
            rows[i] = {}
            rows[j] = {}
            d[i] = {}
            d[j] = {}
            alive[i] = alive[j] = False
            if track:
                step = _scale(C, -ainv, col_i)
                for x in list(Frows[j]):
                    cj = F[x].pop(j)
                    for l, v in step.items():
                        nv = F[x].get(l, 0) + cj * v
                        if C.modulus is not None:
                            nv %= C.modulus
                        if nv == 0:
                            if l in F[x]:
                                del F[x][l]
                                Frows[l].discard(x)
                        else:
                            if l not in F[x]:
                                Frows[l].add(x)
                            F[x][l] = nv
                Frows[j] = set()
                for x in list(Frows[i]):
                    F[x].pop(i, None)
                Frows[i] = set()
                G[i] = {}
                G[j] = {}
        keep = [i for i in range(n) if alive[i]]
        # canonical order: by degree, then cell, then original index
        keep.sort(key=lambda i: (self.gens[i][0], self.gens[i][1], i))
        pos = {g: k for k, g in enumerate(keep)}
        out = GenComplex(self.space, self.kind, C, [self.gens[g] for g in keep],
                         [{pos[t]: v for t, v in d[g].items()} for g in keep], check=False)
        if not track:
            return Minimized(out, None, None)
        Fm = GenMap(self, out, [{pos[t]: v for t, v in F[x].items()} for x in range(n)])
        Gm = GenMap(out, self, [dict(G[g]) for g in keep])
        return Minimized(out, Fm, Gm)

    def is_minimal(self) -> bool:
        C = self.coeffs
        return not any(self.cell(j) == self.cell(i) and C.is_unit(v)
                       for i, col in enumerate(self.d) for j, v in col.items())

    # -- conversions --------------------------------------------------

    def to_rep(self) -> "RepComplex":
        """Materialize as a complex of representations (cellwise bases = generators)."""
        K = self.space
        cells = range(K.n)
        basis = {x: self.stalk_gens(x) for x in cells}
        return RepComplex.from_generator_bases(self, basis)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "coeffs": str(self.coeffs),
            "generators": [[int(a), int(c)] for a, c in self.gens],
            "differential": [[[int(j), str(v)] for j, v in sorted(col.items())] for col in self.d],
        }


def _sc(C: CoefficientSpec, v):
    return int(v) if C.modulus is not None else v


def _neg_mul(C: CoefficientSpec, c, ainv):
    v = -c * ainv
    return v % C.modulus if C.modulus is not None else v


@dataclass
class Minimized:
    complex: GenComplex
    to_min: Optional["GenMap"]
    from_min: Optional["GenMap"]

    def __iter__(self):
        return iter((self.complex, self.to_min, self.from_min))


def direct_sum(parts: Sequence[GenComplex]) -> GenComplex:
    if not parts:
        raise GenComplexError("empty direct sum needs a template")
    K, kind, C = parts[0].space, parts[0].kind, parts[0].coeffs
    gens, d, off = [], [], 0
    for P in parts:
        if P.kind != kind or P.coeffs != C:
            raise GenComplexError("shape mismatch in direct sum")
        gens += P.gens
        d += [{t + off: v for t, v in col.items()} for col in P.d]
        off += P.n
    return GenComplex(K, kind, C, gens, d, check=False)


def zero_complex(space: CellComplex, kind: str, coeffs: CoefficientSpec) -> GenComplex:
    return GenComplex(space, kind, coeffs, [], [], check=False)


# ----------------------------------------------------------------------
# morphisms of generator complexes
# ----------------------------------------------------------------------


def _allowed(K: CellComplex, skind: str, tkind: str, a: int, b: int) -> bool:
    """Is Hom(X_a, Y_b) nonzero, X of kind skind at cell a, Y of kind tkind at b?"""
    if skind == tkind:
        return K.leq(b, a)
    if skind == "P" and tkind == "I":
        return K.leq(a, b)
    raise GenComplexError("maps from injectives to projectives are not modelled")


class GenMap:
    """Graded map between generator complexes: ``comps[i] = {j: scalar}``.

    ``degree`` is the cohomological degree of the map (0 for chain maps).
    """

    def __init__(self, source: GenComplex, target: GenComplex, comps: Sequence[dict], degree: int = 0,
                 check: bool = False):
        self.source = source
        self.target = target
        self.comps = [dict(c) for c in comps]
        self.degree = degree
        if check:
            self.validate()

    @property
    def coeffs(self) -> CoefficientSpec:
        return self.source.coeffs

    def validate(self) -> None:
        S, T = self.source, self.target
        for i, col in enumerate(self.comps):
            for j, v in col.items():
                if T.deg(j) != S.deg(i) + self.degree:
                    raise GenComplexError("map component has wrong degree")
                if not _allowed(S.space, S.kind, T.kind, S.cell(i), T.cell(j)):
                    raise GenComplexError("map component violates the cell order")

    def apply(self, x: dict) -> dict:
        out: dict = {}
        for i, a in x.items():
            _axpy(self.coeffs, out, a, self.comps[i])
        return out

    def compose(self, other: "GenMap") -> "GenMap":
        """self ∘ other; mixed-kind components that vanish are dropped."""
        K = self.source.space
        A, B = other.source, self.target
        comps = []
        for i, col in enumerate(other.comps):
            acc: dict = {}
            for j, a in col.items():
                _axpy(self.coeffs, acc, a, self.comps[j])
            if A.kind != B.kind:
                acc = {k: v for k, v in acc.items() if _allowed(K, A.kind, B.kind, A.cell(i), B.cell(k))}
            comps.append(acc)
        return GenMap(A, B, comps, self.degree + other.degree)

    def __add__(self, other: "GenMap") -> "GenMap":
        comps = []
        for a, b in zip(self.comps, other.comps):
            c = dict(a)
            _axpy(self.coeffs, c, 1, b)
            comps.append(c)
        return GenMap(self.source, self.target, comps, self.degree)

    def scaled(self, a) -> "GenMap":
        return GenMap(self.source, self.target, [_scale(self.coeffs, a, c) for c in self.comps], self.degree)

    def __neg__(self) -> "GenMap":
        return self.scaled(-1)

    def __sub__(self, other: "GenMap") -> "GenMap":
        return self + (-other)

    def is_zero(self) -> bool:
        return not any(self.comps)

    def boundary(self) -> "GenMap":
        """d_T f - (-1)^deg f d_S."""
        S, T = self.source, self.target
        dT = GenMap(T, T, T.d, 1)
        dS = GenMap(S, S, S.d, 1)
        s = -1 if self.degree % 2 else 1
        return dT.compose(self) - self.compose(dS).scaled(s)

    def is_chain_map(self) -> bool:
        return self.boundary().is_zero()

    def cone(self) -> GenComplex:
        """Mapping cone: source[1] ⊕ target with d = [[-d_S, 0], [f, d_T]]."""
        S, T = self.source, self.target
        if S.kind != T.kind:
            raise GenComplexError("cone needs generators of one kind")
        C = self.coeffs
        n = S.n
        gens = [(a - 1, c) for a, c in S.gens] + list(T.gens)
        d = []
        for i in range(n):
            col = _scale(C, -1, S.d[i])
            for j, v in self.comps[i].items():
                col[n + j] = v
            d.append(col)
        for i in range(T.n):
            d.append({n + j: v for j, v in T.d[i].items()})
        return GenComplex(S.space, S.kind, C, gens, d, check=False)

    def as_vector(self, H: "HomComplex") -> dict:
        out = {}
        for i, col in enumerate(self.comps):
            for j, v in col.items():
                out[H.index(self.degree)[(i, j)]] = v
        return out


def identity(Cx: GenComplex) -> GenMap:
    return GenMap(Cx, Cx, [{i: Cx.coeffs.one} for i in range(Cx.n)])


def zero_map(S: GenComplex, T: GenComplex, degree: int = 0) -> GenMap:
    return GenMap(S, T, [dict() for _ in range(S.n)], degree)


class HomComplex:
    """Hom(S, T) between generator complexes: derived Hom for P->P, I->I, P->I."""

    def __init__(self, S: GenComplex, T: GenComplex):
        if S.space is not T.space and S.space.n != T.space.n:
            raise GenComplexError("complexes live on different spaces")
        if S.kind == "I" and T.kind == "P":
            raise GenComplexError("Hom from injectives to projectives is not derived")
        if S.coeffs != T.coeffs:
            raise GenComplexError("coefficient mismatch")
        self.S, self.T = S, T
        self.C = S.coeffs
        self._basis: Dict[int, List[Tuple[int, int]]] = {}
        self._index: Dict[int, Dict[Tuple[int, int], int]] = {}
        self._Trows = None
        self._Srows = S.rows()
        tby: Dict[int, List[int]] = {}
        for j, (a, _) in enumerate(T.gens):
            tby.setdefault(a, []).append(j)
        self._tby = tby

    def basis(self, n: int) -> List[Tuple[int, int]]:
        b = self._basis.get(n)
        if b is None:
            S, T, K = self.S, self.T, self.S.space
            b = []
            for i, (a, c) in enumerate(S.gens):
                for j in self._tby.get(a + n, []):
                    if _allowed(K, S.kind, T.kind, c, T.cell(j)):
                        b.append((i, j))
            self._basis[n] = b
            self._index[n] = {p: k for k, p in enumerate(b)}
        return b

    def index(self, n: int) -> Dict[Tuple[int, int], int]:
        self.basis(n)
        return self._index[n]

    def degrees(self) -> List[int]:
        sd = {a for a, _ in self.S.gens}
        td = {a for a, _ in self.T.gens}
        return sorted({t - s for s in sd for t in td})

    def differential(self, n: int) -> List[dict]:
        """Columns of Hom^n -> Hom^{n+1}, indexed by ``basis(n+1)``."""
        T, C = self.T, self.C
        idx1 = self.index(n + 1)
        sgn = -1 if n % 2 else 1
        cols = []
        for (i, j) in self.basis(n):
            col: dict = {}
            for j2, v in T.d[j].items():
                k = idx1.get((i, j2))
                if k is not None:
                    _axpy(C, col, v, {k: 1})
            for i2, v in self._Srows[i].items():
                k = idx1.get((i2, j))
                if k is not None:
                    _axpy(C, col, -sgn * v, {k: 1})
            cols.append(col)
        return cols

    def _scalar(self, lo: int, hi: int):
        """Assemble degrees lo..hi as one scalar complex (degs, cols, offsets)."""
        degs, cols, off = [], [], {}
        for n in range(lo, hi + 1):
            off[n] = len(degs)
            degs += [n] * len(self.basis(n))
        for n in range(lo, hi + 1):
            dcols = self.differential(n) if n < hi else [dict() for _ in self.basis(n)]
            o1 = off.get(n + 1, 0)
            for col in dcols:
                cols.append({o1 + k: v for k, v in col.items()})
        return degs, cols, off

    def cohomology(self, n: Optional[int] = None) -> GradedModule:
        if n is None:
            ds = self.degrees()
            if not ds:
                return GradedModule(self.C, {})
            degs, cols, _ = self._scalar(ds[0] - 1, ds[-1] + 1)
            return scalar_cohomology(degs, cols, self.C)
        degs, cols, _ = self._scalar(n - 1, n + 1)
        return scalar_cohomology(degs, cols, self.C, [k for k, d in enumerate(degs) if d == n or d == n - 1 or d == n + 1])

    def cohomology_basis(self, n: int) -> "HomBasis":
        degs, cols, off = self._scalar(n - 1, n + 1)
        B = CohomologyBasis(degs, cols, self.C, n)
        return HomBasis(self, n, B, off[n])

    def to_map(self, n: int, vec: dict) -> GenMap:
        comps = [dict() for _ in range(self.S.n)]
        b = self.basis(n)
        for k, v in vec.items():
            i, j = b[k]
            comps[i][j] = v
        return GenMap(self.S, self.T, comps, n)

    def to_vector(self, f: GenMap) -> dict:
        idx = self.index(f.degree)
        out = {}
        for i, col in enumerate(f.comps):
            for j, v in col.items():
                if v != 0:
                    out[idx[(i, j)]] = v
        return out

    def solve_boundary(self, f: GenMap) -> Optional[GenMap]:
        """A map h of degree deg f - 1 with D h = f, or None."""
        n = f.degree
        cols = self.differential(n - 1)
        target = self.to_vector(f)
        C = self.C
        if C.is_field:
            E = SparseRowEchelon(C, track=True)
            for col in cols:
                E.add_row(col)
            res, tag = E.express(target)
            if res:
                return None
            return self.to_map(n - 1, {k: v for k, v in tag.items() if v != 0})
        A = C.zeros(len(self.basis(n)), len(cols))
        for k, col in enumerate(cols):
            for r, v in col.items():
                A[r, k] = v
        b = [C.zero] * len(self.basis(n))
        for r, v in target.items():
            b[r] = v
        x = solve(A, b, C)
        if x is None:
            return None
        return self.to_map(n - 1, {k: int(v) for k, v in enumerate(x) if v != 0})

    def is_nullhomotopic(self, f: GenMap) -> bool:
        return f.is_zero() or self.solve_boundary(f) is not None


class HomBasis:
    """Basis of H^n Hom(S, T) as chain maps, with coordinates of cocycles."""

    def __init__(self, H: HomComplex, n: int, B: CohomologyBasis, offset: int):
        self.H, self.n, self.B, self.offset = H, n, B, offset
        self.maps = [H.to_map(n, {g - offset: v for g, v in z.items()}) for z in B.reps]

    @property
    def dim(self) -> int:
        return len(self.maps)

    @property
    def orders(self) -> List[int]:
        return self.B.orders

    def coords(self, f: GenMap) -> Optional[List]:
        vec = self.H.to_vector(f)
        return self.B.coords({k + self.offset: v for k, v in vec.items()})


def hom_complex(S: GenComplex, T: GenComplex) -> HomComplex:
    return HomComplex(S, T)


# ----------------------------------------------------------------------
# representations
# ----------------------------------------------------------------------


class RepError(ValueError):
    pass


class PosetRep:
    """A representation: module V(σ) per cell and generization V(σ) -> V(τ) per covering σ < τ."""

    def __init__(self, space: CellComplex, coeffs: CoefficientSpec, dims: Dict[int, int],
                 maps: Dict[Tuple[int, int], np.ndarray], cells: Optional[Iterable[int]] = None,
                 check: bool = True):
        self.space = space
        self.coeffs = coeffs
        self.cells = frozenset(range(space.n)) if cells is None else frozenset(cells)
        self.dims = {c: int(dims.get(c, 0)) for c in self.cells}
        self.maps: Dict[Tuple[int, int], np.ndarray] = {}
        for s in self.cells:
            for t in space.cofacets[s]:
                if t in self.cells:
                    M = maps.get((s, t))
                    if M is None:
                        M = coeffs.zeros(self.dims[t], self.dims[s])
                    self.maps[(s, t)] = coeffs.reduce(np.asarray(M))
        self._cache: Dict[Tuple[int, int], np.ndarray] = {}
        if check:
            self.validate()

    def validate(self) -> None:
        K, C = self.space, self.coeffs
        for (s, t), M in self.maps.items():
            if M.shape != (self.dims[t], self.dims[s]):
                raise RepError(f"generization {s}->{t} has shape {M.shape}")
        for s in self.cells:
            for t in self.cells:
                if K.dims[t] == K.dims[s] + 2 and K.leq(s, t):
                    mids = [m for m in K.cofacets[s] if t in K.cofacets[m] and m in self.cells]
                    prods = [C.matmul(self.maps[(m, t)], self.maps[(s, m)]) for m in mids]
                    for P in prods[1:]:
                        if not np.array_equal(C.reduce(P - prods[0]) if C.modulus else P - prods[0], C.zeros(*P.shape)):
                            raise RepError(f"generization maps do not commute on [{s},{t}]")

    def transport(self, s: int, t: int) -> np.ndarray:
        """Composite generization V(s) -> V(t) for s <= t."""
        if s == t:
            return self.coeffs.eye(self.dims[s])
        r = self._cache.get((s, t))
        if r is not None:
            return r
        K = self.space
        for m in K.cofacets[s]:
            if m in self.cells and K.leq(m, t):
                r = self.coeffs.matmul(self.transport(m, t), self.maps[(s, m)])
                break
        else:
            raise RepError(f"{s} is not below {t}")
        self._cache[(s, t)] = r
        return r

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())


def _mat_eq(C: CoefficientSpec, A: np.ndarray, B: np.ndarray) -> bool:
    if A.shape != B.shape:
        return False
    D = C.sub(A, B)
    return C.is_zero_matrix(D)


class RepComplex:
    """Bounded complex of representations on a locally closed cell set.

    ``terms[n]`` is a PosetRep and ``diff[n][σ]`` the matrix F^n(σ) -> F^{n+1}(σ).
    """

    def __init__(self, space: CellComplex, coeffs: CoefficientSpec, terms: Dict[int, PosetRep],
                 diff: Dict[int, Dict[int, np.ndarray]], cells: Optional[Iterable[int]] = None,
                 check: bool = True):
        self.space = space
        self.coeffs = coeffs
        self.cells = frozenset(range(space.n)) if cells is None else frozenset(cells)
        self.terms = {n: t for n, t in terms.items() if t.total_dim > 0}
        self.diff: Dict[int, Dict[int, np.ndarray]] = {}
        C = coeffs
        for n in self.terms:
            self.diff[n] = {}
            for c in self.cells:
                M = diff.get(n, {}).get(c)
                rows = self.dim(n + 1, c)
                cols = self.dim(n, c)
                self.diff[n][c] = C.zeros(rows, cols) if M is None or rows == 0 or cols == 0 else np.asarray(M)
        if check:
            self.validate()

    def dim(self, n: int, c: int) -> int:
        t = self.terms.get(n)
        return 0 if t is None else t.dims.get(c, 0)

    def degrees(self) -> List[int]:
        return sorted(self.terms)

    def term(self, n: int) -> PosetRep:
        t = self.terms.get(n)
        if t is None:
            t = PosetRep(self.space, self.coeffs, {}, {}, self.cells, check=False)
        return t

    def validate(self) -> None:
        C = self.coeffs
        for n in self.terms:
            for c in self.cells:
                M = self.diff[n][c]
                if M.shape != (self.dim(n + 1, c), self.dim(n, c)):
                    raise RepError(f"differential at ({n},{c}) has shape {M.shape}")
                if n + 1 in self.terms:
                    P = C.matmul(self.diff[n + 1][c], M)
                    if not C.is_zero_matrix(P):
                        raise RepError(f"d^2 != 0 at ({n},{c})")
            # differential commutes with generization
            for (s, t), g in self.term(n).maps.items():
                lhs = C.matmul(self.term(n + 1).maps.get((s, t), C.zeros(self.dim(n + 1, t), self.dim(n + 1, s))), self.diff[n][s])
                rhs = C.matmul(self.diff[n][t], g)
                if not _mat_eq(C, lhs, rhs):
                    raise RepError(f"differential does not commute with generization on {s}->{t}")

    # -- construction ---------------------------------------------------

    @classmethod
    def from_rep(cls, F: PosetRep, degree: int = 0) -> "RepComplex":
        return cls(F.space, F.coeffs, {degree: F}, {}, F.cells, check=False)

    @classmethod
    def from_generator_bases(cls, G: GenComplex, basis: Dict[int, List[int]]) -> "RepComplex":
        K, C = G.space, G.coeffs
        cells = list(basis)
        degs = sorted({a for a, _ in G.gens})
        per = {x: {n: [g for g in basis[x] if G.deg(g) == n] for n in degs} for x in cells}
        ppos = {x: {n: {g: k for k, g in enumerate(per[x][n])} for n in degs} for x in cells}
        terms, diff = {}, {}
        for n in degs:
            dims = {x: len(per[x][n]) for x in cells}
            maps = {}
            for s in cells:
                for t in K.cofacets[s]:
                    if t not in basis:
                        continue
                    M = C.zeros(dims[t], dims[s])
                    for g, k in ppos[s][n].items():
                        if g in ppos[t][n]:
                            M[ppos[t][n][g], k] = C.one
                    maps[(s, t)] = M
            terms[n] = PosetRep(K, C, dims, maps, cells, check=False)
            diff[n] = {}
            for x in cells:
                tgt = ppos[x].get(n + 1, {})
                M = C.zeros(len(tgt), dims[x])
                for g, k in ppos[x][n].items():
                    for j, v in G.d[g].items():
                        if j in tgt:
                            M[tgt[j], k] = v
                diff[n][x] = C.reduce(M)
        return cls(K, C, terms, diff, cells, check=False)

    def restrict(self, U: Iterable[int]) -> "RepComplex":
        U = frozenset(U) & self.cells
        terms = {}
        for n, t in self.terms.items():
            terms[n] = PosetRep(self.space, self.coeffs, {c: t.dims[c] for c in U},
                                {k: v for k, v in t.maps.items() if k[0] in U and k[1] in U}, U, check=False)
        diff = {n: {c: self.diff[n][c] for c in U} for n in self.terms}
        return RepComplex(self.space, self.coeffs, terms, diff, U, check=False)

    def shift(self, k: int) -> "RepComplex":
        C = self.coeffs
        s = -1 if k % 2 else 1
        terms = {n - k: t for n, t in self.terms.items()}
        diff = {n - k: {c: C.reduce(M * s) if C.modulus else M * s for c, M in dm.items()} for n, dm in self.diff.items()}
        return RepComplex(self.space, C, terms, diff, self.cells, check=False)

    # -- invariants ---------------------------------------------------

    def _cell_complex(self, c: int):
        C = self.coeffs
        degs, cols, off = [], [], {}
        ns = self.degrees()
        for n in ns:
            off[n] = len(degs)
            degs += [n] * self.dim(n, c)
        for n in ns:
            M = self.diff[n][c]
            o1 = off.get(n + 1, 0)
            for j in range(self.dim(n, c)):
                cols.append({o1 + i: _sc(C, M[i, j]) for i in range(M.shape[0]) if M[i, j] != 0})
        return degs, cols

    def stalk(self, c: int) -> GradedModule:
        degs, cols = self._cell_complex(c)
        return scalar_cohomology(degs, cols, self.coeffs)

    def roos(self, U: Optional[Iterable[int]] = None, first: Optional[int] = None):
        """Order-complex cochains over chains in U; with ``first`` only chains starting there.

        Returns (degs, cols) of a scalar complex.
        """
        K, C = self.space, self.coeffs
        U = self.cells if U is None else frozenset(U)
        chains = _chains(K, U, first)
        index = {}
        degs = []
        entries = []
        for ch in chains:
            top = ch[-1]
            for n in self.degrees():
                for b in range(self.dim(n, top)):
                    index[(ch, n, b)] = len(degs)
                    degs.append(n + len(ch) - 1)
                    entries.append((ch, n, b))
        cols = []
        chainset = set(chains)
        for (ch, n, b) in entries:
            k = len(ch) - 1
            col: dict = {}
            # internal differential with sign (-1)^k
            M = self.diff[n][ch[-1]]
            sk = -1 if k % 2 else 1
            for i in range(M.shape[0]):
                if M[i, b] != 0:
                    _axpy(C, col, sk * _sc(C, M[i, b]), {index[(ch, n + 1, i)]: 1})
            # coface maps: insert one element
            for pos in range(k + 2):
                lo = ch[pos - 1] if pos > 0 else None
                hi = ch[pos] if pos <= k else None
                for x in _between(K, U, lo, hi, first if pos == 0 else None):
                    new = ch[:pos] + (x,) + ch[pos:]
                    if new not in chainset:
                        continue
                    sg = -1 if pos % 2 else 1
                    if pos == k + 1:
                        g = self.term(n).transport(ch[-1], x)
                        for i in range(g.shape[0]):
                            if g[i, b] != 0:
                                _axpy(C, col, sg * _sc(C, g[i, b]), {index[(new, n, i)]: 1})
                    else:
                        _axpy(C, col, sg, {index[(new, n, b)]: 1})
            cols.append(col)
        return degs, cols

    def sections(self, U: Optional[Iterable[int]] = None) -> GradedModule:
        degs, cols = self.roos(U)
        return scalar_cohomology(degs, cols, self.coeffs)

    def cellular_compact(self, U: Optional[Iterable[int]] = None):
        """Cellular compactly supported cochains on U: (degs, cols)."""
        K, C = self.space, self.coeffs
        U = self.cells if U is None else frozenset(U)
        index, degs, entries = {}, [], []
        for c in sorted(U):
            for n in self.degrees():
                for b in range(self.dim(n, c)):
                    index[(c, n, b)] = len(degs)
                    degs.append(n + K.dims[c])
                    entries.append((c, n, b))
        cols = []
        for (c, n, b) in entries:
            col: dict = {}
            k = K.dims[c]
            sk = -1 if k % 2 else 1
            M = self.diff[n][c]
            for i in range(M.shape[0]):
                if M[i, b] != 0:
                    _axpy(C, col, sk * _sc(C, M[i, b]), {index[(c, n + 1, i)]: 1})
            for t, inc in K.cofacets[c].items():
                if t not in U:
                    continue
                g = self.term(n).maps[(c, t)]
                for i in range(g.shape[0]):
                    if g[i, b] != 0:
                        _axpy(C, col, inc * _sc(C, g[i, b]), {index[(t, n, i)]: 1})
            cols.append(col)
        return degs, cols

    def compact_sections(self, U: Optional[Iterable[int]] = None) -> GradedModule:
        degs, cols = self.cellular_compact(U)
        return scalar_cohomology(degs, cols, self.coeffs)

    def cell_costalk(self, c: int) -> GradedModule:
        """Fibre of sections(star c) -> sections(star c minus c), via chains starting at c."""
        degs, cols = self.roos(self.space.up(c) & self.cells, first=c)
        return scalar_cohomology(degs, cols, self.coeffs)

    def point_costalk(self, c: int) -> GradedModule:
        return self.cell_costalk(c).shifted(-self.space.dims[c])

    # -- resolutions ----------------------------------------------------

    def cobar(self) -> GenComplex:
        """Injective model: sum over chains σ0<...<σk of F(σk) ⊗ I_{σ0} in degree n + k."""
        return self._resolution("I")

    def bar(self) -> GenComplex:
        """Projective model: sum over chains σ0<...<σk of F(σ0) ⊗ P_{σk} in degree n - k."""
        return self._resolution("P")

    def _resolution(self, kind: str) -> GenComplex:
        K, C = self.space, self.coeffs
        chains = _chains(K, self.cells, None)
        chainset = set(chains)
        gens, entries, index = [], [], {}
        for ch in chains:
            k = len(ch) - 1
            base = ch[-1] if kind == "I" else ch[0]
            cell = ch[0] if kind == "I" else ch[-1]
            for n in self.degrees():
                for b in range(self.dim(n, base)):
                    index[(ch, n, b)] = len(gens)
                    gens.append((n + k if kind == "I" else n - k, cell))
                    entries.append((ch, n, b))
        d = []
        for (ch, n, b) in entries:
            k = len(ch) - 1
            col: dict = {}
            base = ch[-1] if kind == "I" else ch[0]
            M = self.diff[n][base]
            sk = (-1 if k % 2 else 1)
            for i in range(M.shape[0]):
                if M[i, b] != 0:
                    _axpy(C, col, sk * _sc(C, M[i, b]), {index[(ch, n + 1, i)]: 1})
            if kind == "I":
                for pos in range(k + 2):
                    lo = ch[pos - 1] if pos > 0 else None
                    hi = ch[pos] if pos <= k else None
                    for x in _between(K, self.cells, lo, hi, None):
                        new = ch[:pos] + (x,) + ch[pos:]
                        if new not in chainset:
                            continue
                        sg = -1 if pos % 2 else 1
                        if pos == k + 1:
                            g = self.term(n).transport(ch[-1], x)
                            for i in range(g.shape[0]):
                                if g[i, b] != 0:
                                    _axpy(C, col, sg * _sc(C, g[i, b]), {index[(new, n, i)]: 1})
                        else:
                            _axpy(C, col, sg, {index[(new, n, b)]: 1})
            else:
                # bar: delete one element; deleting σ0 transports F(σ0) -> F(σ1)
                if k > 0:
                    for pos in range(k + 1):
                        new = ch[:pos] + ch[pos + 1:]
                        sg = (-1 if pos % 2 else 1) * sk
                        if pos == 0:
                            g = self.term(n).transport(ch[0], ch[1])
                            for i in range(g.shape[0]):
                                if g[i, b] != 0:
                                    _axpy(C, col, sg * _sc(C, g[i, b]), {index[(new, n, i)]: 1})
                        else:
                            _axpy(C, col, sg, {index[(new, n, b)]: 1})
            d.append(col)
        return GenComplex(K, kind, C, gens, d, check=False)

    def injective_model(self) -> GenComplex:
        return self.cobar().minimize().complex

    def projective_model(self) -> GenComplex:
        return self.bar().minimize().complex

    # -- truncation (fields) -----------------------------------------------

    def truncate_le(self, c: int) -> "RepComplex":
        """τ_{<= c}: keep degrees < c, replace degree c by the cycles."""
        return self._truncate(c, upper=True)

    def truncate_ge(self, c: int) -> "RepComplex":
        """τ_{>= c}: degree c becomes the cokernel of d^{c-1}, lower degrees vanish."""
        return self._truncate(c, upper=False)

    def _truncate(self, c: int, upper: bool) -> "RepComplex":
        C, K = self.coeffs, self.space
        if not C.is_field:
            raise RepError("truncation is implemented over fields")
        cells = self.cells
        terms, diff = {}, {}
        if upper:
            for n in self.degrees():
                if n < c:
                    terms[n] = self.terms[n]
                    diff[n] = dict(self.diff[n])
            # cycles Z^c(σ) with basis columns Zb[σ]
            Zb = {x: kernel(self.diff.get(c, {}).get(x, C.zeros(0, self.dim(c, x))), C)
                  if self.dim(c, x) else C.zeros(0, 0) for x in cells}
            for x in cells:
                if self.dim(c, x) and self.dim(c + 1, x) == 0:
                    Zb[x] = C.eye(self.dim(c, x))
            dims = {x: Zb[x].shape[1] if self.dim(c, x) else 0 for x in cells}
            maps = {}
            T = self.term(c)
            for (s, t), g in T.maps.items():
                if dims[s] == 0 or dims[t] == 0:
                    maps[(s, t)] = C.zeros(dims[t], dims[s])
                    continue
                img = C.matmul(g, Zb[s])
                M = C.zeros(dims[t], dims[s])
                for j in range(dims[s]):
                    sol = solve(Zb[t], list(img[:, j]), C)
                    M[:, j] = sol
                maps[(s, t)] = M
            terms[c] = PosetRep(K, C, dims, maps, cells, check=False)
            if c - 1 in terms:
                # d^{c-1} lands in the cycles: re-express
                newd = {}
                for x in cells:
                    M = self.diff[c - 1][x]
                    R = C.zeros(dims[x], M.shape[1])
                    for j in range(M.shape[1]):
                        if dims[x]:
                            R[:, j] = solve(Zb[x], list(M[:, j]), C)
                    newd[x] = R
                diff[c - 1] = newd
            diff[c] = {x: C.zeros(0, dims[x]) for x in cells}
            return RepComplex(K, C, terms, diff, cells, check=False)
        # lower truncation: quotient by boundaries in degree c
        for n in self.degrees():
            if n > c:
                terms[n] = self.terms[n]
                diff[n] = dict(self.diff[n])
        Q = {}
        for x in cells:
            m = self.dim(c, x)
            B = self.diff.get(c - 1, {}).get(x) if c - 1 in self.terms else None
            if B is None or B.shape[1] == 0:
                B = C.zeros(m, 0)
            # complement basis: choose columns of identity not in span of B
            E = SparseRowEchelon(C)
            for j in range(B.shape[1]):
                E.add_row({i: B[i, j] for i in range(m) if B[i, j] != 0})
            comp = []
            for i in range(m):
                if E.add_row({i: C.one}) is None:
                    comp.append(i)
            Q[x] = (B, comp)
        dims = {x: len(Q[x][1]) for x in cells}

        def proj(x, v):
            B, comp = Q[x]
            Mx = C.zeros(B.shape[0], B.shape[1] + len(comp))
            Mx[:, : B.shape[1]] = B
            for k, i in enumerate(comp):
                Mx[i, B.shape[1] + k] = C.one
            sol = solve(Mx, list(v), C)
            return sol[B.shape[1]:]

        maps = {}
        T = self.term(c)
        for (s, t), g in T.maps.items():
            M = C.zeros(dims[t], dims[s])
            for k, i in enumerate(Q[s][1]):
                if dims[t]:
                    M[:, k] = proj(t, g[:, i])
            maps[(s, t)] = M
        terms[c] = PosetRep(K, C, dims, maps, cells, check=False)
        newd = {}
        for x in cells:
            M = self.diff.get(c, {}).get(x, C.zeros(self.dim(c + 1, x), self.dim(c, x)))
            newd[x] = M[:, Q[x][1]] if dims[x] else C.zeros(M.shape[0], 0)
        diff[c] = newd
        return RepComplex(K, C, terms, diff, cells, check=False)

    # -- JSON -----------------------------------------------------------

    def to_json(self) -> dict:
        out = {"coeffs": str(self.coeffs), "cells": sorted(int(c) for c in self.cells), "degrees": {}}
        for n in self.degrees():
            t = self.terms[n]
            out["degrees"][str(n)] = {
                "dims": {str(c): int(t.dims[c]) for c in sorted(t.cells) if t.dims[c]},
                "generization": [[int(s), int(u), [[str(v) for v in row] for row in M]]
                                 for (s, u), M in sorted(t.maps.items()) if M.size],
                "differential": [[int(c), [[str(v) for v in row] for row in M]]
                                 for c, M in sorted(self.diff[n].items()) if M.size],
            }
        return out

    @classmethod
    def from_json(cls, space: CellComplex, data: dict) -> "RepComplex":
        C = CoefficientSpec.parse(data["coeffs"])
        cells = data.get("cells")
        cells = frozenset(range(space.n)) if cells is None else frozenset(int(c) for c in cells)

        def mat(rows, r, c):
            M = C.zeros(r, c)
            for i, row in enumerate(rows):
                for j, v in enumerate(row):
                    M[i, j] = C(_parse_scalar(v))
            return M

        dims_by = {int(n): {int(c): int(v) for c, v in d.get("dims", {}).items()} for n, d in data["degrees"].items()}
        terms, diff = {}, {}
        for n, d in data["degrees"].items():
            n = int(n)
            dims = dims_by[n]
            maps = {}
            for s, t, rows in d.get("generization", []):
                maps[(int(s), int(t))] = mat(rows, dims.get(int(t), 0), dims.get(int(s), 0))
            terms[n] = PosetRep(space, C, dims, maps, cells)
            diff[n] = {}
            for c, rows in d.get("differential", []):
                diff[n][int(c)] = mat(rows, dims_by.get(n + 1, {}).get(int(c), 0), dims.get(int(c), 0))
        return cls(space, C, terms, diff, cells)


def _parse_scalar(v):
    from fractions import Fraction

    if isinstance(v, str):
        return Fraction(v)
    return v


def _chains(K: CellComplex, U: FrozenSet[int], first: Optional[int]) -> List[Tuple[int, ...]]:
    """Strict chains σ0 < ... < σk inside U (optionally with σ0 fixed)."""
    U = frozenset(U)
    starts = [first] if first is not None else sorted(U)
    out = []
    stack = [(s,) for s in starts if s in U]
    while stack:
        ch = stack.pop()
        out.append(ch)
        for t in K.up(ch[-1]):
            if t != ch[-1] and t in U:
                stack.append(ch + (t,))
    out.sort(key=lambda c: (len(c), c))
    return out


def _between(K: CellComplex, U, lo, hi, first) -> List[int]:
    """Cells x in U with lo < x < hi (None = unbounded)."""
    if first is not None:
        return []
    if lo is not None:
        cand = K.up(lo) - {lo}
    elif hi is not None:
        cand = K.down(hi) - {hi}
    else:
        cand = U
    return [x for x in cand if x in U and (hi is None or (x != hi and K.leq(x, hi)))]


# ----------------------------------------------------------------------
# constant sheaf and simple objects
# ----------------------------------------------------------------------


def constant_sheaf(K: CellComplex, coeffs: CoefficientSpec, cells: Optional[Iterable[int]] = None) -> RepComplex:
    cells = frozenset(range(K.n)) if cells is None else frozenset(cells)
    dims = {c: 1 for c in cells}
    maps = {(s, t): coeffs.eye(1) for s in cells for t in K.cofacets[s] if t in cells}
    F = PosetRep(K, coeffs, dims, maps, cells, check=False)
    return RepComplex.from_rep(F)


def constant_projective(K: CellComplex, coeffs: CoefficientSpec) -> GenComplex:
    """P-model of the constant sheaf on a closed complex: P_σ in degree -dim σ, cellular boundary."""
    if not K.is_closed:
        raise GenComplexError("the cellular projective model needs a closed complex")
    gens = [(-K.dims[c], c) for c in range(K.n)]
    d = [{f: coeffs(s) for f, s in K.facets[c].items()} for c in range(K.n)]
    return GenComplex(K, "P", coeffs, gens, d, check=False)


def projective_generator(K: CellComplex, coeffs: CoefficientSpec, cell: int, degree: int = 0) -> GenComplex:
    return GenComplex(K, "P", coeffs, [(degree, cell)], [{}], check=False)


def injective_generator(K: CellComplex, coeffs: CoefficientSpec, cell: int, degree: int = 0) -> GenComplex:
    return GenComplex(K, "I", coeffs, [(degree, cell)], [{}], check=False)


def skyscraper(K: CellComplex, coeffs: CoefficientSpec, cell: int, degree: int = 0) -> RepComplex:
    """The simple representation S_σ (Λ at one cell) placed in one degree."""
    F = PosetRep(K, coeffs, {cell: 1}, {}, check=False)
    return RepComplex.from_rep(F, degree)


def projective_resolution(F: RepComplex, minimal: bool = True) -> Tuple[GenComplex, "Minimized"]:
    """Bar resolution of F, optionally minimized (with tracked homotopy equivalences)."""
    B = F.bar()
    M = B.minimize(track=True) if minimal else Minimized(B, identity(B), identity(B))
    return M.complex, M


def minimize(C: GenComplex, track: bool = True, rng=None) -> Minimized:
    return C.minimize(track=track, rng=rng)


def stalk(F, c: int) -> GradedModule:
    return F.stalk(c)


def costalk(F, c: int) -> GradedModule:
    """Cell costalk: sections supported on the open cell c (RHom(S_c, F))."""
    return F.cell_costalk(c)


def point_costalk(F, c: int) -> GradedModule:
    return F.point_costalk(c)


def sections(F, U=None) -> GradedModule:
    return F.sections(U)


def compact_sections(F: RepComplex, U=None) -> GradedModule:
    return F.compact_sections(U)


def shift(F, k: int):
    return F.shift(k)


def random_gen_complex(K: CellComplex, coeffs: CoefficientSpec, rng: random.Random, kind: str = "P",
                       n_gens: int = 6, degrees: Sequence[int] = (-1, 0, 1), density: float = 0.5) -> GenComplex:
    """Random complex of generators built by iterated cones.

    Each new generator g is attached with d(g) a random cycle among the
    existing generators it may map to, so d^2 = 0 holds by construction.
    With probability ``density`` a cycle is drawn at all; the result is
    usually neither minimal nor decomposable into single generators.
    """
    from .exactlinalg import kernel

    C = coeffs
    gens: List[Tuple[int, int]] = []
    d: List[dict] = []
    for _ in range(n_gens):
        a, c = rng.choice(list(degrees)), rng.randrange(K.n)
        if gens and rng.random() < density:
            b, e = gens[rng.randrange(len(gens))]
            ups = [t for t in K.up(e) if t != e] or [e]
            a, c = b - 1, rng.choice(sorted(ups))
        cand = [j for j, (b, e) in enumerate(gens) if b == a + 1 and K.leq(e, c)]
        col: dict = {}
        if cand and rng.random() < density:
            pos = {j: r for r, j in enumerate(j for j, (b, _) in enumerate(gens) if b == a + 2)}
            M = C.zeros(max(len(pos), 1), len(cand))
            for t, j in enumerate(cand):
                for k, v in d[j].items():
                    M[pos[k], t] = v
            Z = kernel(M, C)
            for t in range(Z.shape[1]):
                r = C.random(rng)
                if r != 0:
                    for s_, j in enumerate(cand):
                        _axpy(C, col, r, {j: Z[s_, t]} if Z[s_, t] != 0 else {})
        col = {j: _sc(C, v) for j, v in col.items() if v != 0}
        gens.append((a, c))
        d.append(col)
    order = sorted(range(len(gens)), key=lambda i: gens[i])
    inv = {o: k for k, o in enumerate(order)}
    return GenComplex(K, kind, C, [gens[o] for o in order],
                      [{inv[j]: v for j, v in d[o].items()} for o in order])
