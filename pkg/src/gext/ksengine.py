"""Krull-Schmidt decompositions of complexes of projectives or injectives.

Route: minimal complex -> endomorphism algebra H^0 End -> radical ->
primitive idempotents of the semisimple quotient -> Newton lifting ->
strict splitting.  For a minimal complex, taking the same-cell diagonal
blocks of a degree-0 map is a ring homomorphism whose kernel is nilpotent;
this detects units and drives both the splitting and the isomorphism test.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exactlinalg import (
    CoefficientSpec,
    SparseRowEchelon,
    factor_over_prime_field,
    inverse,
    is_invertible,
    kernel,
    solve,
)
from .shcomplex import GenComplex, GenMap, HomComplex, identity, zero_map


class Undecided(Exception):
    """Raised internally when a rational splitting search is inconclusive."""


# ----------------------------------------------------------------------
# finite rings given by structure constants
# ----------------------------------------------------------------------


class FiniteRing:
    """A ring that is a module ⊕ Λ/p^{orders[i]} with bilinear multiplication.

    Over a field every order is 1.  ``T[i][j]`` lists the coordinates of
    b_i b_j.  Elements are coordinate lists.
    """

    def __init__(self, C: CoefficientSpec, T: Sequence[Sequence[Sequence]], one: Sequence,
                 orders: Optional[Sequence[int]] = None):
        self.C = C
        self.m = len(one)
        self.T = [[list(T[i][j]) for j in range(self.m)] for i in range(self.m)]
        self.orders = list(orders) if orders is not None else [C.k] * self.m
        self._one = self.norm(list(one))

    def _mod(self, i: int):
        C = self.C
        if C.kind == "Q":
            return None
        if C.kind == "Fp":
            return C.p
        return C.p ** self.orders[i]

    def norm(self, x: Sequence) -> List:
        out = []
        for i, v in enumerate(x):
            m = self._mod(i)
            out.append(v % m if m is not None else v)
        return out

    @property
    def one(self) -> List:
        return list(self._one)

    @property
    def zero(self) -> List:
        return [self.C.zero] * self.m

    def add(self, x, y):
        return self.norm([a + b for a, b in zip(x, y)])

    def sub(self, x, y):
        return self.norm([a - b for a, b in zip(x, y)])

    def scale(self, c, x):
        return self.norm([c * a for a in x])

    def mul(self, x, y):
        out = [0] * self.m if self.C.kind != "Q" else [Fraction(0)] * self.m
        for i, a in enumerate(x):
            if a == 0:
                continue
            for j, b in enumerate(y):
                if b == 0:
                    continue
                ab = a * b
                for k, t in enumerate(self.T[i][j]):
                    if t != 0:
                        out[k] += ab * t
        return self.norm(out)

    def is_zero(self, x) -> bool:
        return all(v == 0 for v in self.norm(x))

    def eq(self, x, y) -> bool:
        return self.is_zero(self.sub(x, y))

    def basis(self, i: int) -> List:
        v = self.zero
        v[i] = self.C.one
        return v

    def residue(self) -> "FiniteRing":
        """R/pR over F_p (same basis)."""
        C = self.C
        if C.is_field:
            return self
        F = C.residue()
        T = [[[int(t) % C.p for t in self.T[i][j]] for j in range(self.m)] for i in range(self.m)]
        return FiniteRing(F, T, [int(v) % C.p for v in self._one], [1] * self.m)

    def left_matrix(self, x) -> np.ndarray:
        """Matrix of y ↦ x y (fields only)."""
        C = self.C
        M = C.zeros(self.m, self.m)
        for j in range(self.m):
            col = self.mul(x, self.basis(j))
            for k, v in enumerate(col):
                M[k, j] = v
        return M

    def is_commutative(self) -> bool:
        return all(self.eq(self.T[i][j], self.T[j][i]) for i in range(self.m) for j in range(i))

    def power(self, x, e: int):
        r = self.one
        for _ in range(e):
            r = self.mul(r, x)
        return r

    def newton_idempotent(self, x, max_iter: int = 64):
        """Iterate x <- 3x^2 - 2x^3 until idempotent."""
        for _ in range(max_iter):
            x2 = self.mul(x, x)
            if self.eq(x2, x):
                return x
            x3 = self.mul(x2, x)
            x = self.sub(self.scale(3, x2), self.scale(2, x3))
        raise RuntimeError("idempotent lifting did not converge")


# ----------------------------------------------------------------------
# radical
# ----------------------------------------------------------------------


def _span_basis(vectors: List[List], C: CoefficientSpec) -> List[List]:
    E = SparseRowEchelon(C)
    out = []
    for v in vectors:
        row = {i: a for i, a in enumerate(v) if a != 0}
        if row and E.add_row(row) is None:
            out.append(list(v))
    return out


def _combine(coeffs: Sequence, basis: List[List], R: FiniteRing) -> List:
    out = R.zero
    for c, b in zip(coeffs, basis):
        if c != 0:
            out = R.add(out, R.scale(c, b))
    return out


def _gen_trace(M: np.ndarray, p: int, i: int) -> int:
    """(Tr(M~^{p^i}) mod p^{i+1}) / p^i for an integer lift M~ of M."""
    mod = p ** (i + 1)
    A = np.array([[int(v) % mod for v in row] for row in M], dtype=object)
    e = p**i
    R = np.eye(A.shape[0], dtype=object)
    B = A
    while e:
        if e & 1:
            R = R.dot(B) % mod
        B = B.dot(B) % mod
        e >>= 1
    t = int(sum(R[k, k] for k in range(R.shape[0]))) % mod
    return (t // (p**i)) % p


def radical(R: FiniteRing) -> List[List]:
    """Basis of the Jacobson radical of a finite-dimensional algebra over a field.

    Characteristic 0: kernel of the trace form Tr(L_{xy}).  Characteristic p:
    iterated generalized trace kernels I_i = {x in I_{i-1} : g_i(xy) = 0 for all y}.
    """
    C = R.C
    if not C.is_field:
        raise ValueError("radical needs a field; reduce to the residue field first")
    m = R.m
    Ls = [R.left_matrix(R.basis(j)) for j in range(m)]

    def L(x):
        M = C.zeros(m, m)
        for j, c in enumerate(x):
            if c != 0:
                M = C.add(M, C.scale(c, Ls[j]))
        return M

    if C.kind == "Q":
        G = C.zeros(m, m)
        for i in range(m):
            for j in range(m):
                G[j, i] = sum(L(R.T[i][j])[k, k] for k in range(m))
        K = kernel(G, C)
        return [list(K[:, t]) for t in range(K.shape[1])]
    p = C.p
    I = [R.basis(j) for j in range(m)]
    ell = 0
    while p ** (ell + 1) <= m:
        ell += 1
    for i in range(ell + 1):
        if not I:
            break
        G = C.zeros(m, len(I))
        for a, b in enumerate(I):
            for k in range(m):
                G[k, a] = _gen_trace(L(R.mul(b, R.basis(k))), p, i)
        K = kernel(G, C)
        I = _span_basis([_combine(list(K[:, t]), I, R) for t in range(K.shape[1])], C)
    return I


def is_nilpotent_ideal(R: FiniteRing, J: List[List]) -> bool:
    """J^k = 0 for some k <= dim + 1."""
    if not J:
        return True
    cur = J
    for _ in range(R.m + 1):
        nxt = _span_basis([R.mul(a, b) for a in cur for b in J], R.C)
        if not nxt:
            return True
        cur = nxt
    return False


# ----------------------------------------------------------------------
# polynomials over a field (coefficient lists, low degree first)
# ----------------------------------------------------------------------


def _ptrim(f):
    f = list(f)
    while f and f[-1] == 0:
        f.pop()
    return f


def _pnorm(C, f):
    return _ptrim([C(v) for v in f])


def _pmul(C, f, g):
    if not f or not g:
        return []
    out = [C.zero] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        for j, b in enumerate(g):
            out[i + j] = out[i + j] + a * b
    return _pnorm(C, out)


def _pdivmod(C, f, g):
    f, g = _pnorm(C, f), _pnorm(C, g)
    inv = C.inv(g[-1])
    q = [C.zero] * max(len(f) - len(g) + 1, 0)
    r = list(f)
    while len(r) >= len(g) and r:
        c = C(r[-1] * inv)
        d = len(r) - len(g)
        q[d] = c
        for i, b in enumerate(g):
            r[i + d] = C(r[i + d] - c * b)
        r = _ptrim(r)
    return _pnorm(C, q), r


def _pxgcd(C, f, g):
    """(d, s, t) with s f + t g = d monic."""
    r0, r1 = _pnorm(C, f), _pnorm(C, g)
    s0, s1 = [C.one], []
    t0, t1 = [], [C.one]
    while r1:
        q, r = _pdivmod(C, r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _psub(C, s0, _pmul(C, q, s1))
        t0, t1 = t1, _psub(C, t0, _pmul(C, q, t1))
    inv = C.inv(r0[-1])
    return [C(v * inv) for v in r0], [C(v * inv) for v in s0], [C(v * inv) for v in t0]


def _psub(C, f, g):
    n = max(len(f), len(g))
    return _pnorm(C, [(f[i] if i < len(f) else 0) - (g[i] if i < len(g) else 0) for i in range(n)])


def _rational_roots(f: List[Fraction]) -> List[Fraction]:
    f = _ptrim(f)
    if len(f) <= 1:
        return []
    den = 1
    for c in f:
        den = den * Fraction(c).denominator // math.gcd(den, Fraction(c).denominator)
    g = [int(Fraction(c) * den) for c in f]
    roots = []
    if g[0] == 0:
        roots.append(Fraction(0))
        while g and g[0] == 0:
            g = g[1:]
    if len(g) <= 1:
        return roots
    a0, an = abs(g[0]), abs(g[-1])

    def divisors(n):
        ds = set()
        for d in range(1, int(math.isqrt(n)) + 1):
            if n % d == 0:
                ds.add(d)
                ds.add(n // d)
        return ds

    if a0 > 10**12 or an > 10**12:
        raise Undecided("rational root search bound exceeded")
    for a in divisors(a0):
        for b in divisors(an):
            for s in (1, -1):
                r = Fraction(s * a, b)
                if r not in roots and sum(c * r**i for i, c in enumerate(g)) == 0:
                    roots.append(r)
    return roots


def _split_factor(C: CoefficientSpec, mp: List, rng: random.Random) -> Optional[Tuple[List, List]]:
    """A coprime factorization mp = f g with both factors nonconstant, or None if irreducible.

    Over Q only linear factors are detected; an irreducible answer of degree
    >= 4 is then not certain, which the caller handles.
    """
    if len(mp) <= 2:
        return None
    if C.kind == "Fp":
        facs = factor_over_prime_field([int(v) for v in mp], C.p, rng)
        if len(facs) == 1 and facs[0][1] == 1:
            return None
        if len(facs) == 1:
            return None  # a prime power: no coprime split
        f = [1]
        for g, e in facs[:1]:
            for _ in range(e):
                f = _pmul(C, f, g)
        q, r = _pdivmod(C, mp, f)
        return f, q
    roots = _rational_roots(mp)
    for r in roots:
        f = [C(-r), C.one]
        q, rem = _pdivmod(C, mp, f)
        # mp is squarefree for semisimple algebras; guard anyway
        if _pdivmod(C, q, f)[1]:
            return f, q
    return None


# ----------------------------------------------------------------------
# idempotents
# ----------------------------------------------------------------------


@dataclass
class IdempotentResult:
    idempotents: List[List]
    residue_dims: List[int]
    undecided: bool = False
    radical_dim: int = 0


def _corner(R: FiniteRing, e) -> List[List]:
    """Basis of eRe as vectors of R."""
    return _span_basis([R.mul(R.mul(e, R.basis(i)), e) for i in range(R.m)], R.C)


def _coords_in(vectors: List[List], x, C) -> List:
    M = C.zeros(len(x), len(vectors))
    for j, v in enumerate(vectors):
        for i, a in enumerate(v):
            M[i, j] = a
    sol = solve(M, list(x), C)
    if sol is None:
        raise RuntimeError("element outside the span")
    return list(sol)


def _element_minpoly(R: FiniteRing, corner: List[List], e, a) -> List:
    """Minimal polynomial of a in the corner algebra eRe (unit e)."""
    C = R.C
    powers = [e]
    while True:
        nxt = R.mul(powers[-1], a)
        M = C.zeros(R.m, len(powers))
        for j, v in enumerate(powers):
            for i, x in enumerate(v):
                M[i, j] = x
        sol = solve(M, nxt, C)
        if sol is not None:
            return [C(-x) for x in sol] + [C.one]
        powers.append(nxt)


def _poly_at(R: FiniteRing, f, a, e):
    out = R.zero
    for c in reversed(f):
        out = R.add(R.mul(out, a), R.scale(c, e))
    return out


def _split_semisimple(R: FiniteRing, e, rng: random.Random, tries: int = 200) -> Tuple[List[List], List[int], bool]:
    """Primitive orthogonal idempotents of a semisimple corner algebra eRe.

    Returns (idempotents, corner dims, undecided).
    """
    C = R.C
    corner = _corner(R, e)
    d = len(corner)
    if d <= 1:
        return [e], [d], False
    candidates = list(corner)
    for _ in range(tries):
        candidates.append(_combine([C.random(rng) if C.kind != "Q" else C(rng.randint(-5, 5)) for _ in corner], corner, R))
    certified_field = False
    for a in candidates:
        mp = _element_minpoly(R, corner, e, a)
        sp = _split_factor(C, mp, rng)
        if sp is None:
            deg = len(mp) - 1
            if deg == d and R_corner_commutes(R, corner):
                if C.kind == "Fp" or deg <= 3:
                    certified_field = True
                    break
            continue
        f, g = sp
        dd, s, t = _pxgcd(C, f, g)
        # eps ≡ 0 mod f, ≡ 1 mod g
        eps = _poly_at(R, _pmul(C, s, f), a, e)
        eps = R.newton_idempotent(eps)
        rest = R.sub(e, eps)
        i1, d1, u1 = _split_semisimple(R, eps, rng, tries)
        i2, d2, u2 = _split_semisimple(R, rest, rng, tries)
        return i1 + i2, d1 + d2, u1 or u2
    if certified_field:
        return [e], [d], False
    if C.kind == "Fp":
        raise RuntimeError("no splitting found over a finite field; increase tries")
    return [e], [d], True


def R_corner_commutes(R: FiniteRing, corner: List[List]) -> bool:
    return all(R.eq(R.mul(a, b), R.mul(b, a)) for i, a in enumerate(corner) for b in corner[:i])


def _quotient_ring(R: FiniteRing, J: List[List]):
    """R/J with a complement basis; returns (Q, lift, project)."""
    C = R.C
    E = SparseRowEchelon(C)
    for v in J:
        E.add_row({i: a for i, a in enumerate(v) if a != 0})
    comp = []
    for i in range(R.m):
        if E.add_row({i: C.one}) is None:
            comp.append(i)
    full = [list(v) for v in J] + [R.basis(i) for i in comp]
    M = C.zeros(R.m, R.m)
    for j, v in enumerate(full):
        for i, a in enumerate(v):
            M[i, j] = a
    Minv = inverse(M, C)
    nJ = len(J)

    def project(x):
        y = C.matmul(Minv, C.array(list(x)).reshape(-1, 1))[:, 0]
        return [C(v) for v in y[nJ:]]

    def lift(y):
        x = R.zero
        for k, i in enumerate(comp):
            x[i] = y[k]
        return x

    q = len(comp)
    T = [[project(R.mul(lift(_unit(C, q, a)), lift(_unit(C, q, b)))) for b in range(q)] for a in range(q)]
    Q = FiniteRing(C, T, project(R.one), [1] * q)
    return Q, lift, project


def _unit(C, n, i):
    v = [C.zero] * n
    v[i] = C.one
    return v


def primitive_idempotents(R: FiniteRing, seed: int = 0) -> IdempotentResult:
    """Orthogonal primitive idempotents summing to 1.

    Local rings Z/p^k: computed on R/pR then lifted by Newton iteration in R.
    """
    rng = random.Random(seed)
    C = R.C
    base = R.residue() if not C.is_field else R
    J = radical(base)
    Q, lift, project = _quotient_ring(base, J)
    ids, dims, undecided = _split_semisimple(Q, Q.one, rng)
    ids = [x for x in ids if not Q.is_zero(x)]
    # lift through the radical (and through p for local rings), sequentially orthogonal
    out = []
    f = R.one
    for q in ids[:-1]:
        x = lift(q)
        if not C.is_field:
            x = R.norm([int(v) for v in x])
        x = R.mul(R.mul(f, x), f)
        x = R.newton_idempotent(x)
        out.append(x)
        f = R.sub(f, x)
    out.append(f)
    return IdempotentResult(out, dims, undecided, len(J))


# ----------------------------------------------------------------------
# endomorphism algebras of generator complexes
# ----------------------------------------------------------------------


class EndAlgebra:
    """H^0 End(C) for a generator complex, with structure constants."""

    def __init__(self, C: GenComplex):
        self.complex = C
        self.H = HomComplex(C, C)
        self.HB = self.H.cohomology_basis(0)
        self.maps = self.HB.maps
        m = len(self.maps)
        T = [[self._coords(self.maps[i].compose(self.maps[j])) for j in range(m)] for i in range(m)]
        one = self._coords(identity(C))
        self.ring = FiniteRing(C.coeffs, T, one, self.HB.orders)

    def _coords(self, f: GenMap) -> List:
        c = self.HB.coords(f)
        if c is None:
            raise RuntimeError("composite is not a cocycle")
        return c

    @property
    def dim(self) -> int:
        return len(self.maps)

    def element(self, x: Sequence) -> GenMap:
        out = zero_map(self.complex, self.complex)
        for c, f in zip(x, self.maps):
            if c != 0:
                out = out + f.scaled(c)
        return out

    def coords(self, f: GenMap) -> List:
        return self.ring.norm(self._coords(f))


def end_algebra(C: GenComplex) -> EndAlgebra:
    return EndAlgebra(C)


# ----------------------------------------------------------------------
# diagonal blocks, units, inverses
# ----------------------------------------------------------------------


def _groups(C: GenComplex) -> Dict[Tuple[int, int], List[int]]:
    g: Dict[Tuple[int, int], List[int]] = {}
    for i, key in enumerate(C.gens):
        g.setdefault(key, []).append(i)
    return g


def diagonal_blocks(f: GenMap) -> Dict[Tuple[int, int], np.ndarray]:
    """Same-(degree, cell) blocks of a degree-0 map between complexes with equal generator groups."""
    S, T = f.source, f.target
    Cf = S.coeffs
    gs, gt = _groups(S), _groups(T)
    out = {}
    for key in set(gs) | set(gt):
        src, tgt = gs.get(key, []), gt.get(key, [])
        pos = {j: r for r, j in enumerate(tgt)}
        M = Cf.zeros(len(tgt), len(src))
        for c, i in enumerate(src):
            for j, v in f.comps[i].items():
                r = pos.get(j)
                if r is not None:
                    M[r, c] = v
        out[key] = M
    return out


def is_isomorphism(f: GenMap) -> bool:
    """For minimal complexes: f is an isomorphism iff every diagonal block is invertible."""
    if f.degree != 0 or f.source.generator_counts() != f.target.generator_counts():
        return False
    Cf = f.source.coeffs
    return all(is_invertible(M, Cf) for M in diagonal_blocks(f).values())


def _block_map(S: GenComplex, T: GenComplex, blocks: Dict[Tuple[int, int], np.ndarray]) -> GenMap:
    gs, gt = _groups(S), _groups(T)
    comps = [dict() for _ in range(S.n)]
    for key, M in blocks.items():
        for c, i in enumerate(gs.get(key, [])):
            for r, j in enumerate(gt.get(key, [])):
                if M[r, c] != 0:
                    comps[i][j] = int(M[r, c]) if S.coeffs.modulus else M[r, c]
    return GenMap(S, T, comps)


def _nilpotent_inverse(u: GenMap, max_terms: int = 256) -> GenMap:
    """Inverse of u = 1 + N with N nilpotent."""
    Cx = u.source
    one = identity(Cx)
    N = u - one
    out = one
    term = one
    for _ in range(max_terms):
        term = (-N).compose(term)
        if term.is_zero():
            return out
        out = out + term
    raise RuntimeError("series for the inverse did not terminate")


def inverse_iso(f: GenMap) -> GenMap:
    """Inverse of an isomorphism between minimal complexes."""
    Cf = f.source.coeffs
    blocks = diagonal_blocks(f)
    inv = {k: inverse(M, Cf) if M.size else M.T for k, M in blocks.items()}
    Fd_inv = _block_map(f.target, f.source, inv)
    u = Fd_inv.compose(f)
    return _nilpotent_inverse(u).compose(Fd_inv)


def maps_equal(f: GenMap, g: GenMap) -> bool:
    return (f - g).is_zero()


# ----------------------------------------------------------------------
# splitting idempotents
# ----------------------------------------------------------------------


@dataclass
class Summand:
    complex: GenComplex
    incl: GenMap
    proj: GenMap
    residue_dim: int = 0
    undecided: bool = False

    def support(self) -> frozenset:
        return self.complex.support()

    def stalk_table(self, cells=None):
        return self.complex.stalk_table(cells)


def strictify(e: GenMap, max_iter: int = 64) -> GenMap:
    """Newton iteration on chain maps until e∘e == e exactly."""
    for _ in range(max_iter):
        e2 = e.compose(e)
        if maps_equal(e2, e):
            return e
        e = e2.scaled(3) - e2.compose(e).scaled(2)
    raise AssertionError("idempotent strictification did not converge")


def _image_basis(M: np.ndarray, C: CoefficientSpec) -> List[int]:
    """Column indices of M whose residues are independent (a basis of the image of an idempotent)."""
    R = C.residue() if not C.is_field else C
    E = SparseRowEchelon(R)
    keep = []
    for j in range(M.shape[1]):
        row = {i: R(int(M[i, j]) if C.modulus else M[i, j]) for i in range(M.shape[0])}
        row = {i: v for i, v in row.items() if v != 0}
        if row and E.add_row(row) is None:
            keep.append(j)
    return keep


def _restrict_map(f: GenMap, source: GenComplex, target: GenComplex) -> GenMap:
    return GenMap(source, target, f.comps, f.degree)


def split_idempotent(C: GenComplex, e: GenMap, minimal: bool = True) -> Tuple[Summand, Summand]:
    """Split C ≅ im(e) ⊕ im(1 - e) for e with e∘e ≃ e on a minimal complex."""
    Cf = C.coeffs
    eps = strictify(e)
    one = identity(C)
    blocks = diagonal_blocks(eps)
    groups = _groups(C)
    Ed = _block_map(C, C, blocks)
    u = eps.compose(Ed) + (one - eps).compose(one - Ed)
    uinv = _nilpotent_inverse(u)
    parts = []
    for which in (0, 1):
        gens, cols, rows = [], [], []
        for key in sorted(groups):
            M = blocks[key]
            k = M.shape[0]
            I = Cf.eye(k)
            P = M if which == 0 else Cf.sub(I, M)
            Q = Cf.sub(I, M) if which == 0 else M
            a = _image_basis(P, Cf)
            b = _image_basis(Q, Cf)
            A = Cf.zeros(k, k)
            for t, j in enumerate(a + b):
                A[:, t] = P[:, j] if t < len(a) else Q[:, j]
            Ainv = inverse(A, Cf) if k else A
            for t in range(len(a)):
                gens.append(key)
                cols.append((key, A[:, t]))
                rows.append((key, Ainv[t, :]))
        S = GenComplex(C.space, C.kind, Cf, gens, [dict() for _ in gens], check=False)
        inc = [dict() for _ in gens]
        prj = [dict() for _ in range(C.n)]
        for s, (key, col) in enumerate(cols):
            for r, i in enumerate(groups[key]):
                if col[r] != 0:
                    inc[s][i] = int(col[r]) if Cf.modulus else col[r]
        for s, (key, row) in enumerate(rows):
            for r, i in enumerate(groups[key]):
                if row[r] != 0:
                    prj[i][s] = int(row[r]) if Cf.modulus else row[r]
        iota = u.compose(GenMap(S, C, inc))
        pi = GenMap(C, S, prj).compose(uinv)
        dS = pi.compose(GenMap(C, C, C.d, 1)).compose(iota)
        S.d = [dict(c) for c in dS.comps]
        iota = GenMap(S, C, iota.comps)
        pi = GenMap(C, S, pi.comps)
        if minimal and not S.is_minimal():
            m = S.minimize(track=True)
            S2 = m.complex
            iota = iota.compose(m.from_min)
            pi = m.to_min.compose(pi)
            S = S2
        parts.append(Summand(S, iota, pi))
    return parts[0], parts[1]


# ----------------------------------------------------------------------
# decompositions
# ----------------------------------------------------------------------


@dataclass
class Decomposition:
    complex: GenComplex
    summands: List[Summand]
    undecided: bool = False
    certificates: Dict[str, bool] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.summands)

    def generator_multisets(self) -> List[Tuple]:
        return sorted(tuple(sorted(s.complex.gens)) for s in self.summands)


def decompose(C: GenComplex, seed: int = 0, certify: bool = True) -> Decomposition:
    """Full decomposition into indecomposables with certificates."""
    m = C.minimize(track=True)
    M = m.complex
    if M.n == 0:
        return Decomposition(C, [], False, {"complete": True})
    A = EndAlgebra(M)
    res = primitive_idempotents(A.ring, seed)
    summands = []
    if len(res.idempotents) == 1:
        summands.append(Summand(M, m.from_min, m.to_min, res.residue_dims[0], res.undecided))
    else:
        for x, rd in zip(res.idempotents, res.residue_dims):
            e = A.element(x)
            s, _ = split_idempotent(M, e)
            summands.append(Summand(s.complex, m.from_min.compose(s.incl), s.proj.compose(m.to_min), rd,
                                    res.undecided))
    summands.sort(key=lambda s: (sorted(s.complex.gens), s.complex.n))
    D = Decomposition(C, summands, res.undecided)
    if certify:
        D.certificates = certify_decomposition(D)
    return D


def certify_decomposition(D: Decomposition) -> Dict[str, bool]:
    C = D.complex
    H = HomComplex(C, C)
    total = zero_map(C, C)
    for s in D.summands:
        total = total + s.incl.compose(s.proj)
    complete = H.is_nullhomotopic(total - identity(C))
    orth = True
    for j, a in enumerate(D.summands):
        for k, b in enumerate(D.summands):
            f = a.proj.compose(b.incl)
            Hk = HomComplex(b.complex, a.complex)
            target = identity(a.complex) if j == k else zero_map(b.complex, a.complex)
            if not Hk.is_nullhomotopic(f - target):
                orth = False
    return {"complete": complete, "orthogonal": orth, "local_ends": not D.undecided}


def support(C: GenComplex) -> frozenset:
    return C.support()


def _nonzero_on(C: GenComplex, U) -> bool:
    return any(not C.stalk(x).is_zero() for x in U)


def dense_part(D: Decomposition, U) -> Decomposition:
    """Summands with nonzero restriction to U; discarded ones are certified acyclic on U."""
    U = list(U)
    keep = [s for s in D.summands if _nonzero_on(s.complex, U)]
    drop = [s for s in D.summands if s not in keep]
    cert = dict(D.certificates)
    cert["maximal"] = all(not _nonzero_on(s.complex, U) for s in drop)
    return Decomposition(D.complex, keep, D.undecided, cert)


def assemble(D: Decomposition) -> Tuple[GenComplex, GenMap, GenMap]:
    """Direct sum of the summands of D with inclusion and projection into D.complex."""
    from .shcomplex import direct_sum

    parts = [s.complex for s in D.summands]
    if not parts:
        Z = GenComplex(D.complex.space, D.complex.kind, D.complex.coeffs, [], [], check=False)
        return Z, zero_map(Z, D.complex), zero_map(D.complex, Z)
    S = direct_sum(parts)
    inc = [dict() for _ in range(S.n)]
    prj = [dict() for _ in range(D.complex.n)]
    off = 0
    for s in D.summands:
        for i in range(s.complex.n):
            inc[off + i] = dict(s.incl.comps[i])
        for i, col in enumerate(s.proj.comps):
            for j, v in col.items():
                prj[i][off + j] = v
        off += s.complex.n
    return S, GenMap(S, D.complex, inc), GenMap(D.complex, S, prj)


# ----------------------------------------------------------------------
# isomorphism test
# ----------------------------------------------------------------------


@dataclass
class IsoResult:
    isomorphic: bool
    forward: Optional[GenMap] = None
    backward: Optional[GenMap] = None
    invariant: Optional[str] = None
    undecided: bool = False

    def __bool__(self) -> bool:
        return self.isomorphic


def _distinguish(A: GenComplex, B: GenComplex) -> str:
    cells = sorted({c for _, c in A.gens} | {c for _, c in B.gens})
    K = A.space
    cand = K.star(cells) if A.kind == "P" else K.closure(cells)
    for x in sorted(cand):
        sa, sb = A.stalk(x).dims, B.stalk(x).dims
        if sa != sb:
            return f"stalk at cell {x}: {sa} vs {sb}"
    ga, gb = A.generator_counts(), B.generator_counts()
    for key in sorted(set(ga) | set(gb)):
        if ga.get(key, 0) != gb.get(key, 0):
            return f"minimal generators at (degree, cell) {key}: {ga.get(key, 0)} vs {gb.get(key, 0)}"
    return "hom-system search found no isomorphism"


def iso_test(C: GenComplex, D: GenComplex, seed: int = 0, tries: int = 16) -> IsoResult:
    """Explicit mutually inverse chain maps, or a distinguishing invariant."""
    if C.kind != D.kind or C.coeffs != D.coeffs:
        return IsoResult(False, invariant="different kinds or coefficients")
    mc, md = C.minimize(track=True), D.minimize(track=True)
    A, B = mc.complex, md.complex
    if A.generator_counts() != B.generator_counts():
        return IsoResult(False, invariant=_distinguish(A, B))
    if A.n == 0:
        z = zero_map(C, D)
        return IsoResult(True, z, zero_map(D, C))
    H = HomComplex(A, B)
    HB = H.cohomology_basis(0)
    rng = random.Random(seed)
    Cf = A.coeffs
    cands = list(HB.maps)
    for _ in range(tries):
        f = zero_map(A, B)
        for g in HB.maps:
            f = f + g.scaled(Cf.random(rng) if Cf.kind != "Q" else rng.randint(-3, 3))
        cands.append(f)
    for f in cands:
        if is_isomorphism(f):
            return _wrap(f, mc, md)
    # exact route through decompositions
    dA, dB = decompose(A, seed, certify=False), decompose(B, seed, certify=False)
    used = set()
    pairs = []
    for i, s in enumerate(dA.summands):
        found = None
        for j, t in enumerate(dB.summands):
            if j in used or s.complex.generator_counts() != t.complex.generator_counts():
                continue
            f = _indecomposable_iso(s.complex, t.complex)
            if f is not None:
                found = (j, f)
                break
        if found is None:
            return IsoResult(False, invariant=_distinguish(A, B) + f"; summand {i} unmatched",
                             undecided=dA.undecided or dB.undecided)
        used.add(found[0])
        pairs.append((s, dB.summands[found[0]], found[1]))
    if len(used) != len(dB.summands):
        return IsoResult(False, invariant="summand counts differ")
    f = zero_map(A, B)
    for s, t, g in pairs:
        f = f + t.incl.compose(g).compose(s.proj)
    if not is_isomorphism(f):
        raise RuntimeError("assembled map is not an isomorphism")
    return _wrap(f, mc, md)


def _indecomposable_iso(S: GenComplex, T: GenComplex) -> Optional[GenMap]:
    """For indecomposables: S ≅ T iff some basis element of H^0 Hom(S, T) is an isomorphism."""
    HB = HomComplex(S, T).cohomology_basis(0)
    for f in HB.maps:
        if is_isomorphism(f):
            return f
    return None


def _wrap(f: GenMap, mc, md) -> IsoResult:
    g = inverse_iso(f)
    fwd = md.from_min.compose(f).compose(mc.to_min)
    bwd = mc.from_min.compose(g).compose(md.to_min)
    return IsoResult(True, fwd, bwd)


def verify_iso(res: IsoResult) -> bool:
    """Check g∘f ≃ 1 and f∘g ≃ 1 via the Hom complexes."""
    f, g = res.forward, res.backward
    C, D = f.source, f.target
    ok1 = HomComplex(C, C).is_nullhomotopic(g.compose(f) - identity(C))
    ok2 = HomComplex(D, D).is_nullhomotopic(f.compose(g) - identity(D))
    return ok1 and ok2 and f.is_chain_map() and g.is_chain_map()


# ----------------------------------------------------------------------
# dense-part isomorphism lifting
# ----------------------------------------------------------------------


def restrict_map_open(f: GenMap, U) -> Tuple[GenComplex, GenComplex, GenMap]:
    """j^* of a map of injective models."""
    U = set(U)
    S, T = f.source, f.target
    si = [i for i, (_, c) in enumerate(S.gens) if c in U]
    ti = [j for j, (_, c) in enumerate(T.gens) if c in U]
    tp = {g: k for k, g in enumerate(ti)}
    S2, T2 = S.subcomplex(si), T.subcomplex(ti)
    comps = [{tp[j]: v for j, v in f.comps[i].items() if j in tp} for i in si]
    return S2, T2, GenMap(S2, T2, comps, f.degree)


@dataclass
class DenseLift:
    forward: GenMap
    backward: GenMap
    ok: bool
    residual: Optional[str] = None


def lift_iso_on_dense(f: GenMap, g: GenMap, U, seed: int = 0) -> DenseLift:
    """π_B∘f∘ι_A and π_A∘g∘ι_B between dense parts, certified to be isomorphisms."""
    A, B = f.source, f.target
    if A.kind == "I":
        _, _, fu = restrict_map_open(f, U)
        _, _, gu = restrict_map_open(g, U)
        AU = fu.source
        if not HomComplex(AU, AU).is_nullhomotopic(gu.compose(fu) - identity(AU)):
            return DenseLift(None, None, False, "g∘f is not homotopic to 1 over U")
        BU = fu.target
        if not HomComplex(BU, BU).is_nullhomotopic(fu.compose(gu) - identity(BU)):
            return DenseLift(None, None, False, "f∘g is not homotopic to 1 over U")
    dA = dense_part(decompose(A, seed, certify=False), U)
    dB = dense_part(decompose(B, seed, certify=False), U)
    SA, iA, pA = assemble(dA)
    SB, iB, pB = assemble(dB)
    F = pB.compose(f).compose(iA)
    G = pA.compose(g).compose(iB)
    mA, mB = SA.minimize(track=True), SB.minimize(track=True)
    Fm = mB.to_min.compose(F).compose(mA.from_min)
    Gm = mA.to_min.compose(G).compose(mB.from_min)
    ok = is_isomorphism(Gm.compose(Fm)) and is_isomorphism(Fm.compose(Gm))
    return DenseLift(F, G, ok, None if ok else "composites on dense parts are not invertible")
