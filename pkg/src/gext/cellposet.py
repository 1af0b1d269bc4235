"""Finite regular cell complexes, face posets, cellular maps and constructions.

Cells are numbered 0..n-1 in a canonical order (by dimension, then label).
Order convention: ``a <= b`` means a is a face of b.  Open sets are up-sets,
so the open star of a cell is everything above it.

A complex may be locally closed (an up-set of a larger closed complex); in
that case some cells have faces that are not present, and cellular chains
compute Borel-Moore homology.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exactlinalg import CoefficientSpec, sparse_rank, subquotient


class CellComplexError(ValueError):
    pass


def _perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq`` (distinct entries)."""
    s = 1
    a = list(seq)
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            if a[i] > a[j]:
                s = -s
    return s


class CellComplex:
    """A finite regular cell complex given by signed covering relations.

    ``facets[i]`` maps each codimension-one face of cell i to its incidence
    sign.  Simplicial complexes carry ``simplices[i]``, the sorted vertex tuple
    of cell i; vertices are 0..nv-1 with optional ``vertex_labels``.
    """

    def __init__(
        self,
        dims: Sequence[int],
        facets: Sequence[Dict[int, int]],
        labels: Optional[Sequence] = None,
        simplices: Optional[Sequence[Tuple[int, ...]]] = None,
        vertex_labels: Optional[Sequence] = None,
        check: bool = True,
    ):
        self.dims: Tuple[int, ...] = tuple(int(d) for d in dims)
        self.facets: Tuple[Dict[int, int], ...] = tuple(dict(f) for f in facets)
        self.n = len(self.dims)
        self.labels = tuple(labels) if labels is not None else tuple(range(self.n))
        self.simplices = tuple(simplices) if simplices is not None else None
        self.vertex_labels = tuple(vertex_labels) if vertex_labels is not None else None
        cof: List[Dict[int, int]] = [dict() for _ in range(self.n)]
        for i, f in enumerate(self.facets):
            for j, s in f.items():
                cof[j][i] = s
        self.cofacets: Tuple[Dict[int, int], ...] = tuple(cof)
        self._down: Dict[int, FrozenSet[int]] = {}
        self._up: Dict[int, FrozenSet[int]] = {}
        self._simplex_index = None
        if check:
            self.validate()

    # -- construction -------------------------------------------------

    @classmethod
    def from_face_sets(cls, dims: Sequence[int], faces: Sequence[Iterable[int]], labels=None,
                       check: bool = True) -> "CellComplex":
        """Regular complex from unsigned facet sets; incidence signs are solved for.

        Cells must be listed with faces before cofaces.  Signs are propagated
        across each cell's boundary so that every codimension-two face
        cancels; this is possible exactly for regular complexes.
        """
        dims = [int(d) for d in dims]
        facets: List[Dict[int, int]] = []
        for i, fs in enumerate(faces):
            fs = sorted(set(fs))
            if any(j >= i for j in fs):
                raise CellComplexError("faces must precede cofaces")
            if dims[i] == 0:
                if fs:
                    raise CellComplexError("vertices have no facets")
                facets.append({})
                continue
            if dims[i] == 1:
                if len(fs) != 2:
                    raise CellComplexError(f"edge {i} needs two endpoints")
                facets.append({fs[0]: -1, fs[1]: 1})
                continue
            by_ridge: Dict[int, List[int]] = {}
            for f in fs:
                for g in facets[f]:
                    by_ridge.setdefault(g, []).append(f)
            sign = {fs[0]: 1}
            todo = [fs[0]]
            while todo:
                f = todo.pop()
                for g, sg in facets[f].items():
                    pair = by_ridge[g]
                    if len(pair) != 2:
                        raise CellComplexError(f"cell {i} is not regular at ridge {g}")
                    h = pair[0] if pair[1] == f else pair[1]
                    want = -sign[f] * sg * facets[h][g]
                    if h in sign:
                        if sign[h] != want:
                            raise CellComplexError(f"cell {i}: inconsistent incidence signs")
                    else:
                        sign[h] = want
                        todo.append(h)
            if len(sign) != len(fs):
                raise CellComplexError(f"boundary of cell {i} is disconnected")
            facets.append(sign)
        return cls(dims, facets, labels=labels, check=check)

    @classmethod
    def from_simplices(cls, simplices: Iterable[Iterable[int]], vertex_labels=None, check: bool = True) -> "CellComplex":
        """Simplicial complex generated by the given simplices (faces are added)."""
        allsx = set()
        for s in simplices:
            t = tuple(sorted(set(int(v) for v in s)))
            if not t or t in allsx:
                continue
            for r in range(1, len(t) + 1):
                allsx.update(itertools.combinations(t, r))
        order = sorted(allsx, key=lambda t: (len(t), t))
        index = {t: i for i, t in enumerate(order)}
        facets = []
        for t in order:
            f = {}
            if len(t) > 1:
                for k in range(len(t)):
                    f[index[t[:k] + t[k + 1:]]] = -1 if k % 2 else 1
            facets.append(f)
        cx = cls([len(t) - 1 for t in order], facets, labels=order, simplices=order,
                 vertex_labels=vertex_labels, check=False)
        if check:
            cx.validate()
        return cx

    # -- basic queries ------------------------------------------------

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        counts = self.f_vector()
        return f"CellComplex(cells={self.n}, f={counts})"

    @property
    def is_simplicial(self) -> bool:
        return self.simplices is not None

    @property
    def dim(self) -> int:
        return max(self.dims) if self.n else -1

    def f_vector(self) -> List[int]:
        out = [0] * (self.dim + 1)
        for d in self.dims:
            out[d] += 1
        return out

    def cells_of_dim(self, d: int) -> List[int]:
        return [i for i in range(self.n) if self.dims[i] == d]

    def simplex_index(self, simplex: Iterable[int]) -> int:
        if self._simplex_index is None:
            if not self.is_simplicial:
                raise CellComplexError("complex is not simplicial")
            self._simplex_index = {s: i for i, s in enumerate(self.simplices)}
        return self._simplex_index[tuple(sorted(simplex))]

    def vertices(self) -> List[int]:
        """Cell indices of the 0-cells."""
        return self.cells_of_dim(0)

    def down(self, i: int) -> FrozenSet[int]:
        """All faces of cell i, including i."""
        r = self._down.get(i)
        if r is None:
            acc = {i}
            for j in self.facets[i]:
                acc |= self.down(j)
            r = frozenset(acc)
            self._down[i] = r
        return r

    def up(self, i: int) -> FrozenSet[int]:
        """All cells having i as a face, including i (the open star)."""
        r = self._up.get(i)
        if r is None:
            acc = {i}
            stack = [i]
            while stack:
                a = stack.pop()
                for b in self.cofacets[a]:
                    if b not in acc:
                        acc.add(b)
                        stack.append(b)
            r = frozenset(acc)
            self._up[i] = r
        return r

    def leq(self, a: int, b: int) -> bool:
        return a == b or (self.dims[a] < self.dims[b] and a in self.down(b))

    def closure(self, cells: Iterable[int]) -> FrozenSet[int]:
        acc = set()
        for c in cells:
            acc |= self.down(c)
        return frozenset(acc)

    def star(self, cells: Iterable[int]) -> FrozenSet[int]:
        acc = set()
        for c in cells:
            acc |= self.up(c)
        return frozenset(acc)

    def is_up_closed(self, cells: Iterable[int]) -> bool:
        s = set(cells)
        return all(b in s for a in s for b in self.cofacets[a])

    def is_down_closed(self, cells: Iterable[int]) -> bool:
        s = set(cells)
        return all(b in s for a in s for b in self.facets[a])

    @property
    def is_closed(self) -> bool:
        """True when every cell has its full boundary present (a closed complex)."""
        return all(self._boundary_complete(i) for i in range(self.n))

    def _boundary_complete(self, i: int) -> bool:
        d = self.dims[i]
        if d == 0:
            return True
        if self.is_simplicial:
            return len(self.facets[i]) == d + 1
        return getattr(self, "_complete", None) is None or self._complete[i]

    # -- chains -------------------------------------------------------

    def boundary_columns(self, d: int, cells: Optional[Iterable[int]] = None) -> Tuple[List[int], List[int], List[dict]]:
        """Cellular boundary C_d -> C_{d-1} restricted to ``cells`` (default all).

        Returns (d-cells, (d-1)-cells, columns) with columns indexed by
        position in the (d-1)-cell list.
        """
        sel = set(range(self.n)) if cells is None else set(cells)
        top = sorted(i for i in sel if self.dims[i] == d)
        bot = sorted(i for i in sel if self.dims[i] == d - 1)
        pos = {c: k for k, c in enumerate(bot)}
        cols = []
        for c in top:
            cols.append({pos[f]: s for f, s in self.facets[c].items() if f in pos})
        return top, bot, cols

    def boundary_matrix(self, d: int, coeffs: CoefficientSpec, cells=None) -> np.ndarray:
        top, bot, cols = self.boundary_columns(d, cells)
        M = coeffs.zeros(len(bot), len(top))
        for j, col in enumerate(cols):
            for i, s in col.items():
                M[i, j] = coeffs(s)
        return M

    def validate(self) -> None:
        for i, f in enumerate(self.facets):
            for j, s in f.items():
                if not (0 <= j < self.n):
                    raise CellComplexError(f"cell {i} has unknown face {j}")
                if self.dims[j] != self.dims[i] - 1:
                    raise CellComplexError(f"face {j} of cell {i} has wrong dimension")
                if s not in (1, -1):
                    raise CellComplexError(f"incidence of {j} in {i} must be +-1")
        # d^2 = 0 over Z
        for i, f in enumerate(self.facets):
            acc: Dict[int, int] = {}
            for j, s in f.items():
                for k, t in self.facets[j].items():
                    acc[k] = acc.get(k, 0) + s * t
            if any(v != 0 for v in acc.values()):
                raise CellComplexError(f"boundary of boundary of cell {i} is nonzero")

    def check_regular(self, coeffs: Optional[CoefficientSpec] = None) -> bool:
        """Certify that each closed cell's boundary has the homology of a sphere.

        Only meaningful on closed complexes.  Raises on failure.
        """
        C = coeffs or CoefficientSpec.rationals()
        for i in range(self.n):
            d = self.dims[i]
            bd = self.down(i) - {i}
            if d == 0:
                if bd:
                    raise CellComplexError("vertex with faces")
                continue
            if d == 1:
                if len(self.facets[i]) != 2:
                    raise CellComplexError(f"1-cell {i} is not an arc (non-regular)")
                continue
            h = reduced_homology(self, C, cells=bd)
            want = [0] * (d - 1) + [1]
            if list(h[: d]) + [0] * max(0, d - len(h)) != want or any(h[d:]):
                raise CellComplexError(f"boundary of cell {i} is not a homology sphere")
        return True

    def euler_characteristic(self, cells=None) -> int:
        sel = range(self.n) if cells is None else cells
        return sum((-1) ** self.dims[i] for i in sel)

    # -- subcomplexes -------------------------------------------------

    def restrict(self, cells: Iterable[int]) -> Tuple["CellComplex", List[int]]:
        """Induced complex on a locally closed cell set; returns (sub, old index per new cell)."""
        keep = sorted(set(cells), key=lambda i: (self.dims[i], i))
        pos = {c: k for k, c in enumerate(keep)}
        facets = [{pos[f]: s for f, s in self.facets[c].items() if f in pos} for c in keep]
        simplices = [self.simplices[c] for c in keep] if self.is_simplicial else None
        sub = CellComplex(
            [self.dims[c] for c in keep], facets, labels=[self.labels[c] for c in keep],
            simplices=simplices, vertex_labels=self.vertex_labels, check=False,
        )
        if not self.is_simplicial:
            comp = getattr(self, "_complete", None)
            sub._complete = tuple(
                (comp is None or comp[c]) and len(facets[k]) == len(self.facets[c]) for k, c in enumerate(keep)
            )
        return sub, keep

    # -- JSON ---------------------------------------------------------

    def to_json(self) -> dict:
        if self.is_simplicial:
            nv = 1 + max((v for s in self.simplices for v in s), default=-1)
            maximal = [list(self.simplices[i]) for i in range(self.n) if not self.cofacets[i]]
            return {"vertices": nv, "simplices": maximal}
        return {
            "cells": [{"dim": d, "faces": [[int(j), int(s)] for j, s in sorted(self.facets[i].items())]}
                      for i, d in enumerate(self.dims)]
        }

    @classmethod
    def from_json(cls, data: dict) -> "CellComplex":
        if "simplices" in data:
            nv = int(data.get("vertices", 0))
            sx = [list(s) for s in data["simplices"]]
            for s in sx:
                for v in s:
                    if not (0 <= int(v) < max(nv, 1 + max(s))):
                        raise CellComplexError("vertex out of range")
            return cls.from_simplices(sx + [[v] for v in range(nv)])
        cells = data["cells"]
        dims = [int(c["dim"]) for c in cells]
        facets = [{int(j): int(s) for j, s in c.get("faces", [])} for c in cells]
        cx = cls(dims, facets)
        cx.check_regular()
        return cx


# ----------------------------------------------------------------------
# homology oracle
# ----------------------------------------------------------------------


def homology(K: CellComplex, coeffs: CoefficientSpec, cells=None) -> List:
    """Cellular homology of K (or of a locally closed subset ``cells``).

    Over a field returns Betti numbers; over Z/p^k returns, per degree, the
    sorted list of exponents e of cyclic summands Z/p^e.
    """
    sel = list(range(K.n)) if cells is None else list(cells)
    if not sel:
        return []
    top = max(K.dims[i] for i in sel)
    if coeffs.is_field:
        n = [0] * (top + 2)
        for i in sel:
            n[K.dims[i]] += 1
        r = [0] * (top + 2)
        for d in range(1, top + 1):
            _, _, cols = K.boundary_columns(d, sel)
            r[d] = sparse_rank(cols, coeffs)
        return [n[d] - r[d] - r[d + 1] for d in range(top + 1)]
    out = []
    for d in range(top + 1):
        f = K.boundary_matrix(d + 1, coeffs, sel)
        g = K.boundary_matrix(d, coeffs, sel) if d > 0 else coeffs.zeros(0, f.shape[0] if f.size else sum(1 for i in sel if K.dims[i] == 0))
        if d > 0 and g.shape[1] == 0:
            out.append([])
            continue
        if f.shape[0] == 0:
            f = coeffs.zeros(g.shape[1], 0)
        H = subquotient(f, g, coeffs)
        out.append(sorted(H.orders))
    return out


def reduced_homology(K: CellComplex, coeffs: CoefficientSpec, cells=None) -> List[int]:
    """Reduced homology ranks over a field; the empty set has reduced H_{-1} = 1, reported as [ ] with -1 handled by caller."""
    sel = list(range(K.n)) if cells is None else list(cells)
    if not sel:
        return []
    h = homology(K, coeffs, sel)
    h[0] -= 1
    return h


def betti(K: CellComplex, coeffs: Optional[CoefficientSpec] = None, cells=None) -> List[int]:
    return homology(K, coeffs or CoefficientSpec.rationals(), cells)


# ----------------------------------------------------------------------
# face posets, open sets, stratifications
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class FacePoset:
    complex: CellComplex

    @property
    def elements(self) -> range:
        return range(self.complex.n)

    def leq(self, a: int, b: int) -> bool:
        return self.complex.leq(a, b)

    def up(self, a: int) -> FrozenSet[int]:
        return self.complex.up(a)

    def down(self, a: int) -> FrozenSet[int]:
        return self.complex.down(a)

    @property
    def height(self) -> int:
        """Number of elements in a longest chain."""
        return self.complex.dim + 1 if self.complex.n else 0

    def order_complex(self) -> CellComplex:
        return barycentric(self.complex).complex


def face_poset(K: CellComplex) -> FacePoset:
    return FacePoset(K)


@dataclass(frozen=True)
class OpenSet:
    complex: CellComplex
    cells: FrozenSet[int]

    def __post_init__(self):
        if not self.complex.is_up_closed(self.cells):
            raise CellComplexError("open sets must be up-closed")

    def __contains__(self, c) -> bool:
        return c in self.cells

    def __len__(self) -> int:
        return len(self.cells)


def open_star(K, sigma: int) -> OpenSet:
    cx = K.complex if isinstance(K, FacePoset) else K
    return OpenSet(cx, cx.up(sigma))


def complement_closed(U: OpenSet) -> FrozenSet[int]:
    Z = frozenset(range(U.complex.n)) - U.cells
    assert U.complex.is_down_closed(Z)
    return Z


@dataclass
class Stratification:
    """Ordered partition of the cells; strata[0] is the open stratum.

    Each union strata[0] ∪ ... ∪ strata[i] is open, and each stratum has a
    declared complex dimension d with 2d equal to its top cell dimension.
    """

    complex: CellComplex
    strata: List[FrozenSet[int]]
    complex_dims: List[int]
    check_dims: bool = True

    def __post_init__(self):
        self.strata = [frozenset(s) for s in self.strata]
        K = self.complex
        seen = set()
        for i, S in enumerate(self.strata):
            if seen & S:
                raise CellComplexError("strata overlap")
            seen |= S
            if not K.is_up_closed(seen):
                raise CellComplexError(f"union of the first {i + 1} strata is not open")
            if self.check_dims and S:
                top = max(K.dims[c] for c in S)
                if top != 2 * self.complex_dims[i]:
                    raise CellComplexError(f"stratum {i}: top cell dimension {top} != 2*{self.complex_dims[i]}")
        if len(seen) != K.n:
            raise CellComplexError("strata do not cover the complex")
        self._of = {c: i for i, S in enumerate(self.strata) for c in S}

    def stratum_of(self, cell: int) -> int:
        return self._of[cell]

    @property
    def dimension(self) -> int:
        return max(self.complex_dims) if self.complex_dims else 0

    def to_json(self) -> dict:
        return {"strata": [{"cells": sorted(int(c) for c in S), "complex_dim": int(d)}
                           for S, d in zip(self.strata, self.complex_dims)]}

    @classmethod
    def from_json(cls, K: CellComplex, data: dict, check_dims: bool = True) -> "Stratification":
        strata, dims = [], []
        for s in data["strata"]:
            cells = []
            for c in s["cells"]:
                if isinstance(c, (list, tuple)):
                    cells.append(K.simplex_index(c))
                else:
                    cells.append(int(c))
            strata.append(frozenset(cells))
            dims.append(int(s["complex_dim"]))
        return cls(K, strata, dims, check_dims)


def trivial_stratification(K: CellComplex, complex_dim: Optional[int] = None, check_dims: bool = False) -> Stratification:
    d = complex_dim if complex_dim is not None else (K.dim + 1) // 2
    return Stratification(K, [frozenset(range(K.n))], [d], check_dims=check_dims)


# ----------------------------------------------------------------------
# cellular maps
# ----------------------------------------------------------------------


class CellularMap:
    """An order-preserving cell assignment with dim f(σ) <= dim σ.

    ``signs[σ]`` is the local degree when dim f(σ) == dim σ; for simplicial
    maps it is computed from the vertex map, otherwise it defaults to +1.
    """

    def __init__(self, source: CellComplex, target: CellComplex, cell_map: Sequence[int],
                 vertex_map: Optional[Sequence[int]] = None, signs: Optional[Dict[int, int]] = None,
                 smooth_proper: bool = False, check: bool = True):
        self.source = source
        self.target = target
        self.cell_map = tuple(int(c) for c in cell_map)
        self.vertex_map = tuple(vertex_map) if vertex_map is not None else None
        self.smooth_proper = smooth_proper
        self.proper = True
        self._signs = dict(signs) if signs else {}
        if check:
            self.validate()

    @classmethod
    def from_vertex_map(cls, source: CellComplex, target: CellComplex, vmap: Sequence[int], **kw) -> "CellularMap":
        """Simplicial map from a vertex map (indices of vertices, not cells)."""
        if not (source.is_simplicial and target.is_simplicial):
            raise CellComplexError("vertex maps need simplicial complexes")
        cm, signs = [], {}
        for i, s in enumerate(source.simplices):
            img = [vmap[v] for v in s]
            t = tuple(sorted(set(img)))
            try:
                cm.append(target.simplex_index(t))
            except KeyError:
                raise CellComplexError(f"image of simplex {s} is not a simplex; subdivide first") from None
            if len(t) == len(s):
                signs[i] = _perm_sign(img)
        return cls(source, target, cm, vertex_map=vmap, signs=signs, **kw)

    def __call__(self, cell: int) -> int:
        return self.cell_map[cell]

    def sign(self, cell: int) -> int:
        return self._signs.get(cell, 1)

    def validate(self) -> None:
        S, T = self.source, self.target
        if len(self.cell_map) != S.n:
            raise CellComplexError("cell map has wrong length")
        for i in range(S.n):
            fi = self.cell_map[i]
            if T.dims[fi] > S.dims[i]:
                raise CellComplexError(f"cell {i} maps to higher dimension")
            for j in S.facets[i]:
                if not T.leq(self.cell_map[j], fi):
                    raise CellComplexError(f"map is not order-preserving at {j} < {i}")

    def compose(self, other: "CellularMap") -> "CellularMap":
        """self ∘ other."""
        cm = [self.cell_map[c] for c in other.cell_map]
        signs = {}
        for i in range(other.source.n):
            if self.target.dims[cm[i]] == other.source.dims[i]:
                signs[i] = self.sign(other.cell_map[i]) * other.sign(i)
        vm = None
        if self.vertex_map is not None and other.vertex_map is not None:
            vm = [self.vertex_map[v] for v in other.vertex_map]
        return CellularMap(other.source, self.target, cm, vertex_map=vm, signs=signs,
                           smooth_proper=self.smooth_proper and other.smooth_proper, check=False)

    def fibre(self, cell: int) -> FrozenSet[int]:
        return frozenset(i for i, c in enumerate(self.cell_map) if c == cell)

    def preimage(self, cells: Iterable[int]) -> FrozenSet[int]:
        s = set(cells)
        return frozenset(i for i, c in enumerate(self.cell_map) if c in s)

    def restrict(self, src_cells: Iterable[int], tgt_cells: Optional[Iterable[int]] = None) -> "CellularMap":
        """Restriction to a locally closed source set mapping into a locally closed target set."""
        src_cells = list(src_cells)
        sub, keep = self.source.restrict(src_cells)
        if tgt_cells is None:
            tgt_cells = {self.cell_map[c] for c in keep}
        tsub, tkeep = self.target.restrict(tgt_cells)
        tpos = {c: k for k, c in enumerate(tkeep)}
        cm, signs = [], {}
        for k, c in enumerate(keep):
            if self.cell_map[c] not in tpos:
                raise CellComplexError("restricted map leaves the target set")
            cm.append(tpos[self.cell_map[c]])
            if c in self._signs:
                signs[k] = self._signs[c]
        return CellularMap(sub, tsub, cm, signs=signs, smooth_proper=self.smooth_proper, check=False)

    def fit_signs(self) -> "CellularMap":
        """Recompute local degrees so that the induced cellular chain map commutes with boundaries.

        Cells keeping their dimension get the sign making f(∂σ) = ∂f(σ) on a
        shared facet; vertices get +1.  Returns a new map.
        """
        S, T = self.source, self.target
        signs: Dict[int, int] = {}
        for i in sorted(range(S.n), key=lambda c: S.dims[c]):
            t = self.cell_map[i]
            if T.dims[t] != S.dims[i]:
                continue
            if S.dims[i] == 0:
                signs[i] = 1
                continue
            for j, sj in S.facets[i].items():
                u = self.cell_map[j]
                if j in signs and u in T.facets[t]:
                    signs[i] = sj * signs[j] * T.facets[t][u]
                    break
            else:
                raise CellComplexError(f"cannot fit the local degree of cell {i}")
        return CellularMap(S, T, self.cell_map, vertex_map=self.vertex_map, signs=signs,
                           smooth_proper=self.smooth_proper, check=False)

    def is_iso_over(self, cells: Iterable[int]) -> bool:
        """True when f restricts to a bijection f^{-1}(cells) -> cells."""
        cells = set(cells)
        pre = [i for i, c in enumerate(self.cell_map) if c in cells]
        return len(pre) == len(cells) and {self.cell_map[i] for i in pre} == cells

    def to_json(self) -> dict:
        if self.vertex_map is None:
            return {"cell_map": list(self.cell_map)}
        return {"vertex_map": [int(v) for v in self.vertex_map]}

    @classmethod
    def from_json(cls, source: CellComplex, target: CellComplex, data: dict) -> "CellularMap":
        if "vertex_map" in data:
            return cls.from_vertex_map(source, target, [int(v) for v in data["vertex_map"]])
        return cls(source, target, [int(c) for c in data["cell_map"]])


def identity_map(K: CellComplex) -> CellularMap:
    vm = list(range(len(K.vertices()))) if K.is_simplicial else None
    return CellularMap(K, K, list(range(K.n)), vertex_map=vm, check=False)


def inclusion_map(K: CellComplex, cells: Iterable[int]) -> CellularMap:
    sub, keep = K.restrict(cells)
    return CellularMap(sub, K, keep, check=False)


# ----------------------------------------------------------------------
# constructions
# ----------------------------------------------------------------------


def simplex(n: int) -> CellComplex:
    return CellComplex.from_simplices([range(n + 1)])


def boundary_of_simplex(n: int) -> CellComplex:
    """Boundary of the n-simplex, a triangulated (n-1)-sphere."""
    return CellComplex.from_simplices(itertools.combinations(range(n + 1), n))


def point() -> CellComplex:
    return simplex(0)


def cycle_graph(m: int) -> CellComplex:
    return CellComplex.from_simplices([(i, (i + 1) % m) for i in range(m)])


def _nv(K: CellComplex) -> int:
    return len(K.vertices())


def _maximal(K: CellComplex) -> List[Tuple[int, ...]]:
    return [K.simplices[i] for i in range(K.n) if not K.cofacets[i]]


def cone(K: CellComplex) -> Tuple[CellComplex, CellularMap, int]:
    """Simplicial cone with apex appended as the last vertex.

    Returns (cone, collapse map to the cone on a point, apex cell index).  The
    collapse sends K to the base vertex and the apex to the apex of an interval.
    """
    if K.n and not K.is_simplicial:
        raise CellComplexError("cone needs a simplicial complex")
    a = _nv(K)
    sx = [s + (a,) for s in _maximal(K)] if K.n else []
    C = CellComplex.from_simplices(sx + [(a,)])
    interval = simplex(1)
    if K.n:
        vm = [0] * a + [1]
    else:
        vm = [1]
        interval = CellComplex.from_simplices([(0, 1)])
    q = CellularMap.from_vertex_map(C, interval, vm)
    return C, q, C.simplex_index((a,))


def suspension(K: CellComplex) -> CellComplex:
    a = _nv(K)
    sx = [s + (a,) for s in _maximal(K)] + [s + (a + 1,) for s in _maximal(K)]
    return CellComplex.from_simplices(sx + [(a,), (a + 1,)])


def join(K: CellComplex, L: CellComplex) -> CellComplex:
    a = _nv(K)
    sx = [s + tuple(a + v for v in t) for s in _maximal(K) for t in _maximal(L)]
    return CellComplex.from_simplices(sx)


def _staircases(s: Tuple[int, ...], t: Tuple[int, ...]):
    """Maximal chains of the grid s x t (lattice paths), as lists of pairs."""
    p, q = len(s) - 1, len(t) - 1
    for moves in itertools.combinations(range(p + q), p):
        i = j = 0
        path = [(s[0], t[0])]
        ms = set(moves)
        for k in range(p + q):
            if k in ms:
                i += 1
            else:
                j += 1
            path.append((s[i], t[j]))
        yield path


def product(K: CellComplex, L: CellComplex) -> Tuple[CellComplex, CellularMap, CellularMap]:
    """Staircase triangulation of |K| x |L| with both projections.

    Vertex (u, v) gets index u * nv(L) + v, so the vertex order is
    lexicographic.
    """
    nL = _nv(L)
    sx = []
    for s in _maximal(K):
        for t in _maximal(L):
            for path in _staircases(s, t):
                sx.append([u * nL + v for u, v in path])
    P = CellComplex.from_simplices(sx)
    nK = _nv(K)
    pr1 = CellularMap.from_vertex_map(P, K, [w // nL for w in range(nK * nL)])
    pr2 = CellularMap.from_vertex_map(P, L, [w % nL for w in range(nK * nL)])
    return P, pr1, pr2


@dataclass
class Cylinder:
    complex: CellComplex
    projection: CellularMap  # Cyl -> B
    include_source: CellularMap  # A -> Cyl
    include_target: CellularMap  # B -> Cyl

    def __iter__(self):
        return iter((self.complex, self.projection, self.include_source))


def mapping_cylinder(phi: CellularMap) -> Cylinder:
    """Ordered simplicial mapping cylinder of a simplicial map A -> B.

    Vertices of A come first (indices 0..nA-1), then B (shifted by nA).  For
    each simplex a_0 < ... < a_k of A and each i the simplex
    {a_0..a_i} ∪ φ{a_i..a_k} is added; this is the staircase prism A x I with
    the top copy glued along φ.
    """
    A, B = phi.source, phi.target
    if phi.vertex_map is None or not (A.is_simplicial and B.is_simplicial):
        raise CellComplexError("mapping cylinder needs a simplicial map")
    nA, nB = _nv(A), _nv(B)
    vm = phi.vertex_map
    sx = [tuple(nA + v for v in t) for t in _maximal(B)]
    for s in _maximal(A):
        for i in range(len(s)):
            sx.append(tuple(s[: i + 1]) + tuple(nA + vm[v] for v in s[i:]))
    Cy = CellComplex.from_simplices(sx)
    proj = CellularMap.from_vertex_map(Cy, B, [vm[v] for v in range(nA)] + list(range(nB)))
    incA = CellularMap.from_vertex_map(A, Cy, list(range(nA)))
    incB = CellularMap.from_vertex_map(B, Cy, [nA + v for v in range(nB)])
    return Cylinder(Cy, proj, incA, incB)


@dataclass
class Subdivision:
    complex: CellComplex
    carrier: List[int]  # cell of sd(K) -> smallest cell of K containing it
    last_vertex: Optional[CellularMap]  # sd(K) -> K, when K is simplicial
    vertex_cells: List[int]  # vertex v of sd(K) is the barycentre of K-cell vertex_cells[v]


def barycentric(K: CellComplex, cells: Optional[Iterable[int]] = None) -> Subdivision:
    """Order complex of the face poset (barycentric subdivision).

    With ``cells`` given (an up-set of a closed K), only chains whose top cell
    lies in ``cells`` are kept; this is the subdivision of the open subspace.
    Vertex v of the result is the barycentre of K-cell ``vertex_cells[v]``;
    vertices are ordered by dimension, so simplices are chains listed bottom-up.
    """
    order = list(range(K.n))  # canonical order is already dimension-sorted
    sx = []
    # maximal chains: start from maximal cells and descend
    def chains_down(c):
        if not K.facets[c]:
            yield (c,)
            return
        for f in K.facets[c]:
            for ch in chains_down(f):
                yield ch + (c,)

    tops = [c for c in order if not K.cofacets[c]]
    for c in tops:
        for ch in chains_down(c):
            sx.append(ch)
    full = CellComplex.from_simplices(sx, check=False)
    if cells is not None:
        U = set(cells)
        keep = [i for i, s in enumerate(full.simplices) if s[-1] in U]
        full, _ = full.restrict(keep)
    carrier = [s[-1] for s in full.simplices]
    vertex_cells = list(range(K.n))
    lv = None
    if K.is_simplicial and cells is None:
        vmap = [K.simplices[c][-1] for c in range(K.n)]
        lv = CellularMap.from_vertex_map(full, K, vmap)
    elif K.is_simplicial:
        cm, signs = [], {}
        for i, s in enumerate(full.simplices):
            img = [K.simplices[c][-1] for c in s]
            t = tuple(sorted(set(img)))
            cm.append(K.simplex_index(t))
            if len(t) == len(s):
                signs[i] = _perm_sign(img)
        lv = CellularMap(full, K, cm, signs=signs, check=False)
    return Subdivision(full, carrier, lv, vertex_cells)


def stellar_subdivision(K: CellComplex, tops: Iterable[int]) -> Tuple[CellComplex, CellularMap]:
    """Star each listed maximal simplex at a new barycentre vertex.

    Returns the subdivided complex and the simplicial approximation of the
    identity that sends each new vertex to the last vertex of its simplex.
    """
    if not K.is_simplicial:
        raise CellComplexError("stellar subdivision needs a simplicial complex")
    tops = sorted(set(tops))
    for t in tops:
        if K.cofacets[t]:
            raise CellComplexError(f"cell {t} is not maximal")
    nv = _nv(K)
    chosen = set(tops)
    sx = [K.simplices[c] for c in range(K.n) if not K.cofacets[c] and c not in chosen]
    vmap = list(range(nv))
    for k, t in enumerate(tops):
        s = K.simplices[t]
        b = nv + k
        vmap.append(s[-1])
        sx += [tuple(v for v in s if v != w) + (b,) for w in s]
    L = CellComplex.from_simplices(sx)
    return L, CellularMap.from_vertex_map(L, K, vmap)


class SubdivisionBoundExceeded(CellComplexError):
    pass


def subdivide_map(K: CellComplex, L: CellComplex, image: Callable[[Dict[int, Fraction]], int],
                  bound: int = 3) -> Tuple[CellularMap, int]:
    """Simplicial approximation by repeated barycentric subdivision of K.

    ``image`` receives a point of |K| in barycentric coordinates (a dict from
    original vertex to weight) and returns a vertex index of L.  K is
    subdivided until the induced vertex map is simplicial.  Returns
    (map sd^r K -> L, r).  Raises SubdivisionBoundExceeded past ``bound``.
    """
    coords = [{v: Fraction(1)} for v in range(_nv(K))]
    cur = K
    for r in range(bound + 1):
        vm = [image(c) for c in coords]
        try:
            return CellularMap.from_vertex_map(cur, L, vm), r
        except CellComplexError:
            if r == bound:
                break
        sd = barycentric(cur)
        new = []
        for c in sd.vertex_cells:
            verts = cur.simplices[c]
            acc: Dict[int, Fraction] = {}
            for v in verts:
                for w, x in coords[v].items():
                    acc[w] = acc.get(w, Fraction(0)) + x / len(verts)
            new.append(acc)
        coords, cur = new, sd.complex
    raise SubdivisionBoundExceeded(f"vertex map not simplicial after {bound} subdivisions")


def closed_star(K: CellComplex, cells: Iterable[int]) -> FrozenSet[int]:
    return K.closure(K.star(cells))


def link(K: CellComplex, sigma: int) -> FrozenSet[int]:
    """Simplicial link of a cell: faces of the closed star that miss sigma."""
    if not K.is_simplicial:
        raise CellComplexError("link needs a simplicial complex")
    verts = set(K.simplices[sigma])
    return frozenset(c for c in closed_star(K, [sigma]) if not verts & set(K.simplices[c]))


def full_subcomplex(K: CellComplex, vertex_set: Iterable[int]) -> FrozenSet[int]:
    vs = set(vertex_set)
    return frozenset(i for i, s in enumerate(K.simplices) if set(s) <= vs)


@dataclass
class Quotient:
    complex: CellComplex
    map: CellularMap
    apex: int


def collapse(K: CellComplex, B: Iterable[int]) -> Quotient:
    """Collapse a closed cell set B (closed inside K) to a single point.

    K may be locally closed.  Each cell meeting B must meet it in a single
    closed face (true when B is a full subcomplex of a simplicial complex),
    which keeps the quotient regular; 1-cells with both ends in B are
    rejected.  Incidences to cells of B are dropped except for edges, which
    keep the sign of their endpoint in B.
    """
    B = frozenset(B)
    if not K.is_down_closed(B):
        raise CellComplexError("collapsed set must be closed")
    rest = [c for c in range(K.n) if c not in B]
    rest.sort(key=lambda c: (K.dims[c], c))
    dims = [0] + [K.dims[c] for c in rest]
    pos = {c: k + 1 for k, c in enumerate(rest)}
    facets = [dict()]
    for c in rest:
        f = {}
        hits = [(j, s) for j, s in K.facets[c].items() if j in B]
        for j, s in K.facets[c].items():
            if j not in B:
                f[pos[j]] = s
        if K.dims[c] == 1 and hits:
            if len(hits) > 1:
                raise CellComplexError("edge with both ends in the collapsed set")
            f[0] = hits[0][1]
        facets.append(f)
        if K.is_simplicial:
            meet = [b for b in K.down(c) if b in B]
            if meet:
                top = max(meet, key=lambda b: K.dims[b])
                if not set(meet) <= K.down(top):
                    raise CellComplexError("cell meets the collapsed set in more than one face")
    labels = ["*"] + [K.labels[c] for c in rest]
    Q = CellComplex(dims, facets, labels=labels, check=True)
    # record which cells have their full boundary present
    Q._complete = tuple([True] + [K._boundary_complete(c) for c in rest])
    cm = [0 if c in B else pos[c] for c in range(K.n)]
    m = CellularMap(K, Q, cm, signs={}, check=True)
    return Quotient(Q, m, 0)


def simplicial_subcomplex(K: CellComplex, cells: Iterable[int]) -> Tuple[CellComplex, List[int]]:
    """Closed subcomplex of a simplicial K with vertices renumbered 0..m-1.

    Returns (sub, original vertex index of each new vertex).
    """
    cells = set(cells)
    if not K.is_down_closed(cells):
        raise CellComplexError("subcomplex must be closed")
    verts = sorted({v for c in cells for v in K.simplices[c]})
    pos = {v: k for k, v in enumerate(verts)}
    sub = CellComplex.from_simplices([[pos[v] for v in K.simplices[c]] for c in cells])
    return sub, verts


def simplicial_link(K: CellComplex, sigma: int) -> List[Tuple[int, ...]]:
    """Link of a simplex as vertex tuples (empty list for a top simplex)."""
    s = set(K.simplices[sigma])
    out = []
    for t in K.up(sigma):
        if t != sigma:
            out.append(tuple(v for v in K.simplices[t] if v not in s))
    return out


def is_homology_manifold(K: CellComplex, n: int, cells: Optional[Iterable[int]] = None,
                         coeffs: Optional[CoefficientSpec] = None) -> Tuple[bool, Optional[int]]:
    """Check that the link of every simplex in ``cells`` is a homology (n-dim-1)-sphere.

    Returns (ok, first failing cell).  Links are taken in all of K, so cells
    near a boundary of K count as interior only if their links are spheres.
    """
    C = coeffs or CoefficientSpec.rationals()
    sel = range(K.n) if cells is None else cells
    cache: Dict[tuple, bool] = {}
    for c in sel:
        k = n - K.dims[c] - 1
        lk = simplicial_link(K, c)
        if k == -1:
            if lk:
                return False, c
            continue
        if not lk:
            return False, c
        key = tuple(sorted(lk))
        ok = cache.get(key)
        if ok is None:
            L = CellComplex.from_simplices(lk, check=False)
            h = homology(L, C)
            want = [1] + [0] * k if k > 0 else [2]
            if k > 0:
                want[k] = 1
            ok = h == want
            cache[key] = ok
        if not ok:
            return False, c
    return True, None


def frontier_complex(K: CellComplex, B: Iterable[int]) -> Tuple[CellComplex, List[Tuple[int, int]]]:
    """Level set between a full subcomplex B and its complement in a simplicial K.

    Each simplex α*β with α in B and β disjoint from B (both nonempty)
    contributes the product cell α×β; this is the boundary of the derived
    (regular) neighbourhood of B.  Returns (complex, (α, β) per cell).
    """
    B = frozenset(B)
    bverts = {K.simplices[c][0] for c in B if K.dims[c] == 0}
    pairs = []
    for c in range(K.n):
        s = K.simplices[c]
        a = tuple(v for v in s if v in bverts)
        b = tuple(v for v in s if v not in bverts)
        if a and b:
            pairs.append((K.simplex_index(a), K.simplex_index(b)))
    pairs.sort(key=lambda ab: (K.dims[ab[0]] + K.dims[ab[1]], ab))
    pos = {ab: i for i, ab in enumerate(pairs)}
    facets = []
    for a, b in pairs:
        f = {}
        for fa, sa in K.facets[a].items():
            if (fa, b) in pos:
                f[pos[(fa, b)]] = sa
        sgn = -1 if K.dims[a] % 2 else 1
        for fb, sb in K.facets[b].items():
            if (a, fb) in pos:
                f[pos[(a, fb)]] = sgn * sb
        facets.append(f)
    F = CellComplex([K.dims[a] + K.dims[b] for a, b in pairs], facets, labels=pairs)
    return F, pairs


def grid_torus(m: int, n: int) -> CellComplex:
    """Torus Z/m x Z/n with diagonals (i,j)-(i+1,j+1); vertex (i,j) has index n*i + j."""
    sx = []
    for i in range(m):
        for j in range(n):
            a, b = n * i + j, n * ((i + 1) % m) + j
            c, d = n * i + (j + 1) % n, n * ((i + 1) % m) + (j + 1) % n
            sx += [(a, b, d), (a, c, d)]
    return CellComplex.from_simplices(sx)
