"""Exact linear algebra over Q, F_p and Z/p^k.

Scalars are Python ints reduced into [0, m) for the modular rings and
``fractions.Fraction`` for Q.  Dense matrices are numpy arrays (int64 when the
modulus is small enough that products cannot overflow, object otherwise).
Sparse routines work on lists of ``{col: value}`` dicts.
"""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

_INT64_SAFE = 2**62


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for q in small:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class CoefficientSpec:
    """A coefficient ring: ``Q``, ``F_p`` or ``Z/p^k``.

    ``CoefficientSpec.parse`` accepts the canonical strings "Q", "F2", "F5",
    "Z/8", "Z/9".  A local ring with k = 1 is normalised to the prime field.
    """

    kind: str  # "Q", "Fp" or "Zpk"
    p: int = 0
    k: int = 1

    def __post_init__(self):
        if self.kind == "Q":
            return
        if self.kind not in ("Fp", "Zpk"):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if not (2 <= self.p < 2**31) or not is_prime(self.p):
            raise ValueError(f"{self.p} is not a prime below 2^31")
        if self.k < 1 or self.p**self.k >= 2**63:
            raise ValueError("p^k must fit in 63 bits")
        if self.kind == "Zpk" and self.k == 1:
            object.__setattr__(self, "kind", "Fp")

    # -- constructors -------------------------------------------------
    @staticmethod
    def rationals() -> "CoefficientSpec":
        return CoefficientSpec("Q")

    @staticmethod
    def prime_field(p: int) -> "CoefficientSpec":
        return CoefficientSpec("Fp", p, 1)

    @staticmethod
    def local_ring(p: int, k: int) -> "CoefficientSpec":
        return CoefficientSpec("Zpk", p, k)

    @staticmethod
    def parse(text: str) -> "CoefficientSpec":
        t = text.strip()
        if t in ("Q", "QQ"):
            return CoefficientSpec.rationals()
        if t.startswith("F") and t[1:].isdigit():
            return CoefficientSpec.prime_field(int(t[1:]))
        if t.startswith("Z/"):
            body = t[2:]
            if "^" in body:
                p, k = body.split("^")
                return CoefficientSpec.local_ring(int(p), int(k))
            n = int(body)
            for p in range(2, n + 1):
                if n % p == 0:
                    k = 0
                    m = n
                    while m % p == 0:
                        m //= p
                        k += 1
                    if m != 1:
                        raise ValueError(f"{n} is not a prime power")
                    return CoefficientSpec.local_ring(p, k)
        raise ValueError(f"cannot parse coefficient ring {text!r}")

    def __str__(self) -> str:
        if self.kind == "Q":
            return "Q"
        if self.kind == "Fp":
            return f"F{self.p}"
        return f"Z/{self.p ** self.k}"

    # -- basic properties ---------------------------------------------
    @property
    def is_field(self) -> bool:
        return self.kind != "Zpk"

    @property
    def modulus(self) -> Optional[int]:
        return None if self.kind == "Q" else self.p**self.k

    @property
    def characteristic(self) -> int:
        return 0 if self.kind == "Q" else self.p

    def residue(self) -> "CoefficientSpec":
        """Residue field (the ring itself for fields)."""
        return self if self.is_field else CoefficientSpec.prime_field(self.p)

    # -- scalars ------------------------------------------------------
    @property
    def zero(self):
        return Fraction(0) if self.kind == "Q" else 0

    @property
    def one(self):
        return Fraction(1) if self.kind == "Q" else 1

    def __call__(self, x):
        if self.kind == "Q":
            return Fraction(x)
        if isinstance(x, Fraction):
            return (x.numerator * pow(x.denominator, -1, self.modulus)) % self.modulus
        return int(x) % self.modulus

    def is_unit(self, x) -> bool:
        if self.kind == "Q":
            return x != 0
        return x % self.p != 0

    def inv(self, x):
        if self.kind == "Q":
            if x == 0:
                raise ZeroDivisionError("inverse of 0")
            return 1 / Fraction(x)
        if x % self.p == 0:
            raise ZeroDivisionError(f"{x} is not a unit in {self}")
        return pow(int(x), -1, self.modulus)

    def valuation(self, x) -> int:
        """p-adic valuation in Z/p^k, with k for zero (fields: 0 or 1)."""
        if self.is_field:
            return 0 if x != 0 else 1
        x = int(x) % self.modulus
        if x == 0:
            return self.k
        v = 0
        while x % self.p == 0:
            x //= self.p
            v += 1
        return v

    def random(self, rng: random.Random):
        if self.kind == "Q":
            return Fraction(rng.randint(-3, 3))
        return rng.randrange(self.modulus)

    # -- dense arrays -------------------------------------------------
    def _int_dtype_ok(self, inner: int = 1) -> bool:
        m = self.modulus
        return m is not None and (m - 1) * (m - 1) * max(inner, 1) < _INT64_SAFE

    def array(self, data, shape=None) -> np.ndarray:
        if self.kind == "Q":
            a = np.array(data, dtype=object)
            if shape is not None:
                a = a.reshape(shape)
            out = np.empty(a.shape, dtype=object)
            for idx, v in np.ndenumerate(a):
                out[idx] = Fraction(v)
            return out
        a = np.array(data, dtype=object)
        if shape is not None:
            a = a.reshape(shape)
        a = a % self.modulus
        if self._int_dtype_ok():
            return a.astype(np.int64)
        return a

    def zeros(self, rows: int, cols: int) -> np.ndarray:
        if self.kind == "Q":
            out = np.empty((rows, cols), dtype=object)
            out.fill(Fraction(0))
            return out
        if self._int_dtype_ok():
            return np.zeros((rows, cols), dtype=np.int64)
        out = np.empty((rows, cols), dtype=object)
        out.fill(0)
        return out

    def eye(self, n: int) -> np.ndarray:
        a = self.zeros(n, n)
        for i in range(n):
            a[i, i] = self.one
        return a

    def reduce(self, a: np.ndarray) -> np.ndarray:
        if self.kind == "Q":
            return a
        return a % self.modulus

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
        if a.shape[0] == 0 or b.shape[1] == 0 or a.shape[1] == 0:
            return self.zeros(a.shape[0], b.shape[1])
        if self.kind == "Q":
            return a.dot(b)
        if a.dtype == np.int64 and b.dtype == np.int64 and self._int_dtype_ok(a.shape[1]):
            return (a @ b) % self.modulus
        out = a.astype(object).dot(b.astype(object)) % self.modulus
        return self.array(out) if self._int_dtype_ok() else out

    def add(self, a, b):
        return self.reduce(a + b)

    def sub(self, a, b):
        return self.reduce(a - b)

    def scale(self, c, a):
        return self.reduce(a * c)

    def to_residue(self, a: np.ndarray) -> np.ndarray:
        r = self.residue()
        if self.kind == "Zpk":
            return r.array(np.asarray(a, dtype=object) % self.p)
        return a

    def is_zero_matrix(self, a: np.ndarray) -> bool:
        if a.size == 0:
            return True
        if self.kind == "Q":
            return all(x == 0 for x in a.flat)
        return not np.any(a % self.modulus)


Matrix = np.ndarray


# ----------------------------------------------------------------------
# dense elimination over fields
# ----------------------------------------------------------------------


@dataclass
class RowReduction:
    """Result of ``row_reduce``: ``transform @ A == rref``."""

    rank: int
    pivots: List[int]
    rref: np.ndarray
    transform: np.ndarray
    coeffs: CoefficientSpec = field(repr=False, default=None)

    def kernel(self) -> np.ndarray:
        """Columns spanning the right kernel."""
        C = self.coeffs
        n = self.rref.shape[1]
        free = [j for j in range(n) if j not in set(self.pivots)]
        K = C.zeros(n, len(free))
        for t, j in enumerate(free):
            K[j, t] = C.one
            for r, pc in enumerate(self.pivots):
                K[pc, t] = -self.rref[r, j]
        return C.reduce(K)


def row_reduce(A: np.ndarray, coeffs: CoefficientSpec) -> RowReduction:
    """Reduced row echelon form with the accumulated transform."""
    if not coeffs.is_field:
        raise ValueError("row_reduce needs a field; use diagonalize_over_local")
    C = coeffs
    m, n = A.shape
    R = C.array(A) if C.kind != "Q" else C.array(A)
    T = C.eye(m)
    pivots: List[int] = []
    r = 0
    for c in range(n):
        if r == m:
            break
        col = R[r:, c]
        nz = [i for i, v in enumerate(col) if v != 0]
        if not nz:
            continue
        i = r + nz[0]
        if i != r:
            R[[r, i]] = R[[i, r]]
            T[[r, i]] = T[[i, r]]
        inv = C.inv(R[r, c])
        R[r] = C.scale(inv, R[r])
        T[r] = C.scale(inv, T[r])
        others = [i for i in range(m) if i != r and R[i, c] != 0]
        if others:
            f = R[others, c].reshape(-1, 1)
            R[others] = C.reduce(R[others] - f * R[r].reshape(1, -1))
            T[others] = C.reduce(T[others] - f * T[r].reshape(1, -1))
        pivots.append(c)
        r += 1
    return RowReduction(len(pivots), pivots, R, T, C)


def rank(A: np.ndarray, coeffs: CoefficientSpec) -> int:
    if A.size == 0:
        return 0
    if coeffs.is_field:
        return row_reduce(A, coeffs).rank
    _, D, _ = diagonalize_over_local(A, coeffs)
    return sum(1 for i in range(min(D.shape)) if D[i, i] % coeffs.modulus != 0)


def kernel(A: np.ndarray, coeffs: CoefficientSpec) -> np.ndarray:
    """Columns generating the right kernel of A (a basis over a field)."""
    if coeffs.is_field:
        return row_reduce(A, coeffs).kernel()
    U, D, V = diagonalize_over_local(A, coeffs)
    C = coeffs
    n = A.shape[1]
    gens = []
    for j in range(n):
        d = D[j, j] if j < D.shape[0] else 0
        v = C.valuation(d)
        if v >= C.k:
            gens.append((j, 1))
        elif v > 0:
            gens.append((j, C.p ** (C.k - v)))
    K = C.zeros(n, len(gens))
    for t, (j, s) in enumerate(gens):
        K[:, t] = C.reduce(V[:, j] * s)
    return K


def solve(A: np.ndarray, b: Sequence, coeffs: CoefficientSpec) -> Optional[np.ndarray]:
    """One solution x of A x = b, or None when inconsistent."""
    C = coeffs
    b = C.array(list(b)).reshape(-1)
    m, n = A.shape
    if b.shape[0] != m:
        raise ValueError(f"shape mismatch: A is {A.shape}, b has length {b.shape[0]}")
    if C.is_field:
        aug = C.zeros(m, n + 1)
        aug[:, :n] = A
        aug[:, n] = b
        rr = row_reduce(aug, C)
        if n in rr.pivots:
            return None
        x = C.zeros(n, 1)[:, 0]
        for r, pc in enumerate(rr.pivots):
            x[pc] = rr.rref[r, n]
        return x
    U, D, V = diagonalize_over_local(A, C)
    ub = C.matmul(U, b.reshape(-1, 1))[:, 0]
    y = C.zeros(n, 1)[:, 0]
    for i in range(m):
        d = int(D[i, i]) if i < n else 0
        v = C.valuation(d)
        t = int(ub[i]) % C.modulus
        if v >= C.k:
            if t != 0:
                return None
            continue
        pv = C.p**v
        if t % pv != 0:
            return None
        unit = (d // pv) % C.modulus
        y[i] = ((t // pv) * C.inv(unit)) % C.modulus
    return C.matmul(V, y.reshape(-1, 1))[:, 0]


def inverse(A: np.ndarray, coeffs: CoefficientSpec) -> np.ndarray:
    """Inverse of a square matrix; raises ValueError if singular."""
    C = coeffs
    n = A.shape[0]
    if C.is_field:
        rr = row_reduce(A, C)
        if rr.rank != n:
            raise ValueError("matrix is singular")
        return rr.transform
    Ar = C.to_residue(A)
    rr = row_reduce(Ar, C.residue())
    if rr.rank != n:
        raise ValueError("matrix is singular")
    # Newton iteration X <- X(2 - AX) lifts the residue inverse.
    X = C.array(np.asarray(rr.transform, dtype=object))
    I2 = C.scale(2, C.eye(n))
    for _ in range(C.k.bit_length() + 1):
        X = C.matmul(X, C.sub(I2, C.matmul(A, X)))
    if not C.is_zero_matrix(C.sub(C.matmul(A, X), C.eye(n))):
        raise ValueError("inverse lift failed")
    return X


# ----------------------------------------------------------------------
# Smith form over Z/p^k
# ----------------------------------------------------------------------


def diagonalize_over_local(A: np.ndarray, coeffs: CoefficientSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (U, D, V) with U @ A @ V == D diagonal, U and V invertible.

    Diagonal entries are unit multiples of powers of p, in nondecreasing
    valuation.  Works for fields too (then D has 0/1 pattern up to units).
    """
    C = coeffs
    m, n = A.shape
    D = C.array(np.asarray(A, dtype=object)) if A.size else C.zeros(m, n)
    U = C.eye(m)
    V = C.eye(n)
    for t in range(min(m, n)):
        best = None
        bv = None
        sub = D[t:, t:]
        for (i, j), x in np.ndenumerate(sub):
            if x == 0:
                continue
            v = C.valuation(x)
            if bv is None or v < bv:
                best, bv = (i + t, j + t), v
                if v == 0:
                    break
        if best is None:
            break
        i, j = best
        if i != t:
            D[[t, i]] = D[[i, t]]
            U[[t, i]] = U[[i, t]]
        if j != t:
            D[:, [t, j]] = D[:, [j, t]]
            V[:, [t, j]] = V[:, [j, t]]
        piv = D[t, t]
        if C.kind == "Q":
            unit_inv = 1 / piv
            pv = 1
        elif C.kind == "Fp":
            unit_inv = C.inv(piv)
            pv = 1
        else:
            pv = C.p**bv
            unit_inv = C.inv((int(piv) // pv) % C.modulus)
        # make pivot exactly p^v
        D[t] = C.scale(unit_inv, D[t])
        U[t] = C.scale(unit_inv, U[t])
        for r in range(t + 1, m):
            x = D[r, t]
            if x != 0:
                f = (int(x) // pv) % C.modulus if C.kind != "Q" else x
                D[r] = C.reduce(D[r] - f * D[t])
                U[r] = C.reduce(U[r] - f * U[t])
        for c in range(t + 1, n):
            x = D[t, c]
            if x != 0:
                f = (int(x) // pv) % C.modulus if C.kind != "Q" else x
                D[:, c] = C.reduce(D[:, c] - f * D[:, t])
                V[:, c] = C.reduce(V[:, c] - f * V[:, t])
    return U, D, V


def is_invertible(A: np.ndarray, coeffs: CoefficientSpec) -> bool:
    if A.shape[0] != A.shape[1]:
        return False
    if A.shape[0] == 0:
        return True
    Ar = coeffs.to_residue(A)
    return row_reduce(Ar, coeffs.residue()).rank == A.shape[0]


# ----------------------------------------------------------------------
# polynomials (coefficient lists, lowest degree first)
# ----------------------------------------------------------------------


def _trim(f: List) -> List:
    f = list(f)
    while f and f[-1] == 0:
        f.pop()
    return f


def minimal_polynomial(A: np.ndarray, coeffs: CoefficientSpec) -> List:
    """Monic minimal polynomial of a square matrix over a field.

    Builds the Krylov sequence I, A, A^2, ... in the flattened matrix space and
    stops at the first linear dependence.
    """
    C = coeffs
    if not C.is_field:
        raise ValueError("minimal_polynomial needs a field")
    n = A.shape[0]
    if n == 0:
        return [C.one]
    powers = [C.eye(n)]
    while True:
        M = C.zeros(n * n, len(powers))
        for t, P in enumerate(powers):
            M[:, t] = P.reshape(-1)
        nxt = C.matmul(powers[-1], A)
        sol = solve(M, nxt.reshape(-1), C)
        if sol is not None:
            return [C(-x) for x in sol] + [C.one]
        powers.append(nxt)


class PolyFp:
    """Dense polynomial arithmetic over F_p on coefficient lists."""

    def __init__(self, p: int):
        self.p = p

    def norm(self, f):
        return _trim([c % self.p for c in f])

    def add(self, f, g):
        n = max(len(f), len(g))
        return self.norm([(f[i] if i < len(f) else 0) + (g[i] if i < len(g) else 0) for i in range(n)])

    def sub(self, f, g):
        n = max(len(f), len(g))
        return self.norm([(f[i] if i < len(f) else 0) - (g[i] if i < len(g) else 0) for i in range(n)])

    def mul(self, f, g):
        if not f or not g:
            return []
        out = [0] * (len(f) + len(g) - 1)
        for i, a in enumerate(f):
            if a:
                for j, b in enumerate(g):
                    out[i + j] += a * b
        return self.norm(out)

    def divmod(self, f, g):
        f = self.norm(f)
        g = self.norm(g)
        if not g:
            raise ZeroDivisionError("polynomial division by zero")
        inv = pow(g[-1], -1, self.p)
        q = [0] * max(len(f) - len(g) + 1, 0)
        r = list(f)
        while len(r) >= len(g) and r:
            c = r[-1] * inv % self.p
            d = len(r) - len(g)
            q[d] = c
            for i, b in enumerate(g):
                r[i + d] = (r[i + d] - c * b) % self.p
            r = _trim(r)
        return self.norm(q), r

    def mod(self, f, g):
        return self.divmod(f, g)[1]

    def monic(self, f):
        f = self.norm(f)
        if not f:
            return f
        inv = pow(f[-1], -1, self.p)
        return [c * inv % self.p for c in f]

    def gcd(self, f, g):
        f, g = self.norm(f), self.norm(g)
        while g:
            f, g = g, self.mod(f, g)
        return self.monic(f)

    def deriv(self, f):
        return self.norm([i * f[i] for i in range(1, len(f))])

    def powmod(self, f, e, m):
        result = [1]
        base = self.mod(f, m)
        while e:
            if e & 1:
                result = self.mod(self.mul(result, base), m)
            base = self.mod(self.mul(base, base), m)
            e >>= 1
        return result

    def pth_root(self, f):
        # f(x) = g(x^p) in char p; coefficients are fixed by Frobenius on F_p
        return self.norm([f[i] for i in range(0, len(f), self.p)])


def _squarefree(P: PolyFp, f) -> List[Tuple[list, int]]:
    """Squarefree factorisation over F_p: list of (squarefree factor, multiplicity)."""
    out: List[Tuple[list, int]] = []
    f = P.monic(f)
    if len(f) <= 1:
        return out
    df = P.deriv(f)
    if not df:
        for g, m in _squarefree(P, P.pth_root(f)):
            out.append((g, m * P.p))
        return out
    c = P.gcd(f, df)
    w = P.divmod(f, c)[0]
    i = 1
    while len(w) > 1:
        y = P.gcd(w, c)
        z = P.divmod(w, y)[0]
        if len(z) > 1:
            out.append((P.monic(z), i))
        i += 1
        w = y
        c = P.divmod(c, y)[0]
    if len(c) > 1:
        for g, m in _squarefree(P, P.pth_root(c)):
            out.append((g, m * P.p))
    return out


def _distinct_degree(P: PolyFp, f) -> List[Tuple[list, int]]:
    out = []
    h = [0, 1]
    d = 0
    f = P.monic(f)
    while len(f) - 1 >= 2 * (d + 1):
        d += 1
        h = P.powmod(h, P.p, f)
        g = P.gcd(f, P.sub(h, [0, 1]))
        if len(g) > 1:
            out.append((g, d))
            f = P.divmod(f, g)[0]
            h = P.mod(h, f)
    if len(f) > 1:
        out.append((f, len(f) - 1))
    return out


def _equal_degree(P: PolyFp, f, d: int, rng: random.Random) -> List[list]:
    n = len(f) - 1
    if n == d:
        return [P.monic(f)]
    while True:
        a = P.norm([rng.randrange(P.p) for _ in range(n)])
        if len(a) <= 1:
            continue
        if P.p == 2:
            # trace map a + a^2 + ... + a^(2^(d-1))
            t = a
            s = a
            for _ in range(d - 1):
                s = P.mod(P.mul(s, s), f)
                t = P.add(t, s)
            g = P.gcd(f, t)
        else:
            e = (P.p**d - 1) // 2
            g = P.gcd(f, P.sub(P.powmod(a, e, f), [1]))
        if 1 < len(g) < len(f):
            q = P.divmod(f, g)[0]
            return _equal_degree(P, g, d, rng) + _equal_degree(P, q, d, rng)


def factor_over_prime_field(f: Sequence[int], p: int, rng: Optional[random.Random] = None) -> List[Tuple[list, int]]:
    """Factor f over F_p into monic irreducibles with multiplicities.

    The leading coefficient is dropped (factors are monic).  Factors are sorted
    for determinism.
    """
    P = PolyFp(p)
    f = P.norm(list(f))
    if not f:
        raise ValueError("cannot factor the zero polynomial")
    rng = rng or random.Random(0)
    out: Dict[tuple, int] = {}
    for g, m in _squarefree(P, f):
        for h, d in _distinct_degree(P, g):
            for irr in _equal_degree(P, h, d, rng):
                key = tuple(irr)
                out[key] = out.get(key, 0) + m
    return sorted(((list(k), m) for k, m in out.items()), key=lambda t: (len(t[0]), t[0]))


def poly_eval_matrix(f: Sequence, A: np.ndarray, coeffs: CoefficientSpec) -> np.ndarray:
    """f(A) by Horner's rule."""
    C = coeffs
    n = A.shape[0]
    R = C.zeros(n, n)
    for c in reversed(list(f)):
        R = C.add(C.matmul(R, A), C.scale(C(c), C.eye(n)))
    return R


# ----------------------------------------------------------------------
# sparse elimination over fields
# ----------------------------------------------------------------------


class SparseRowEchelon:
    """Incremental sparse row echelon form over a field.

    Rows are dicts ``{col: value}``.  ``add_row`` reduces a new row against the
    stored pivots and keeps it when it is independent; the optional tag list
    records the combination of input rows (used for kernels of transposes).
    """

    def __init__(self, coeffs: CoefficientSpec, track: bool = False):
        if not coeffs.is_field:
            raise ValueError("sparse echelon needs a field")
        self.C = coeffs
        self.pivot_rows: Dict[int, dict] = {}
        self.track = track
        self.pivot_tags: Dict[int, dict] = {}
        self.n_added = 0

    def _reduce(self, row: dict, tag: Optional[dict]):
        # pivot rows have their pivot as smallest column, so eliminating in
        # increasing column order never revisits a column
        m = self.C.modulus
        row = dict(row)
        heap = [c for c in row if c in self.pivot_rows]
        heapq.heapify(heap)
        while heap:
            c = heapq.heappop(heap)
            f = row.get(c)
            if f is None:
                continue
            prow = self.pivot_rows[c]
            for cc, v in prow.items():
                old = row.get(cc)
                nv = (0 if old is None else old) - f * v
                if m is not None:
                    nv %= m
                if nv == 0:
                    if old is not None:
                        del row[cc]
                else:
                    row[cc] = nv
                    if old is None and cc in self.pivot_rows:
                        heapq.heappush(heap, cc)
            if tag is not None:
                for cc, v in self.pivot_tags[c].items():
                    nv = tag.get(cc, 0) - f * v
                    if m is not None:
                        nv %= m
                    if nv == 0:
                        tag.pop(cc, None)
                    else:
                        tag[cc] = nv
        return row, tag

    def add_row(self, row: dict) -> Optional[dict]:
        """Reduce and insert; returns the dependency tag if the row was dependent."""
        tag = {self.n_added: self.C.one} if self.track else None
        self.n_added += 1
        row, tag = self._reduce(row, tag)
        if not row:
            return tag if self.track else {}
        c = min(row)
        inv = self.C.inv(row[c])
        m = self.C.modulus
        row = {k: (v * inv % m if m else v * inv) for k, v in row.items()}
        if tag is not None:
            tag = {k: (v * inv % m if m else v * inv) for k, v in tag.items()}
        self.pivot_rows[c] = row
        if self.track:
            self.pivot_tags[c] = tag
        return None

    @property
    def rank(self) -> int:
        return len(self.pivot_rows)

    def contains(self, row: dict) -> bool:
        r, _ = self._reduce(row, None)
        return not r

    def reduce_vector(self, row: dict) -> dict:
        return self._reduce(row, None)[0]

    def express(self, row: dict) -> Tuple[dict, dict]:
        """(residual, coeffs) with row = residual + sum coeffs[j] * (j-th inserted row).

        Needs ``track=True``; nothing is inserted.
        """
        res, tag = self._reduce(row, {})
        m = self.C.modulus
        return res, {j: ((-v) % m if m else -v) for j, v in tag.items()}


def sparse_rank(rows: Iterable[dict], coeffs: CoefficientSpec) -> int:
    E = SparseRowEchelon(coeffs)
    for r in rows:
        if r:
            E.add_row(r)
    return E.rank


def sparse_kernel(columns: Sequence[dict], coeffs: CoefficientSpec) -> List[dict]:
    """Basis of {x : sum_j x_j columns[j] = 0}, as dicts over column indices.

    Each column is a dict ``{row: value}``.  Dependencies among the columns are
    recorded while inserting them into a row echelon structure.
    """
    E = SparseRowEchelon(coeffs, track=True)
    out = []
    for j, col in enumerate(columns):
        dep = E.add_row(col)
        if dep is not None:
            out.append(dep)
    return out


def sparse_matvec(columns: Sequence[dict], x: dict, coeffs: CoefficientSpec) -> dict:
    m = coeffs.modulus
    out: dict = {}
    for j, a in x.items():
        for i, v in columns[j].items():
            nv = out.get(i, 0) + a * v
            if m is not None:
                nv %= m
            if nv == 0:
                out.pop(i, None)
            else:
                out[i] = nv
    return out


def naive_rank(A: Sequence[Sequence[int]], p: int) -> int:
    """Plain Gaussian elimination mod p on nested lists (independent oracle)."""
    M = [[x % p for x in row] for row in A]
    r = 0
    cols = len(M[0]) if M else 0
    for c in range(cols):
        piv = next((i for i in range(r, len(M)) if M[i][c]), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = pow(M[r][c], -1, p)
        M[r] = [x * inv % p for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [(a - f * b) % p for a, b in zip(M[i], M[r])]
        r += 1
    return r


# ----------------------------------------------------------------------
# homology of a three-term complex of free modules
# ----------------------------------------------------------------------


@dataclass
class Subquotient:
    """H = ker(g) / im(f) for free modules A -f-> B -g-> C.

    ``gens`` has one column per cyclic summand (coordinates in B) and
    ``orders[i]`` is the exponent e with summand Λ/p^e (over a field every
    summand has ``orders[i] == 1`` and means a copy of the field).
    """

    gens: np.ndarray
    orders: List[int]
    coeffs: CoefficientSpec
    _f: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return len(self.orders)

    @property
    def is_free(self) -> bool:
        C = self.coeffs
        return C.is_field or all(o == C.k for o in self.orders)

    def coordinates(self, x: np.ndarray) -> Optional[np.ndarray]:
        """Coordinates of a cycle x modulo boundaries, or None if x is not in ker g + im f span."""
        C = self.coeffs
        W = self.gens
        f = self._f
        M = C.zeros(W.shape[0], W.shape[1] + f.shape[1])
        M[:, : W.shape[1]] = W
        M[:, W.shape[1]:] = f
        sol = solve(M, list(x), C)
        if sol is None:
            return None
        c = sol[: W.shape[1]]
        if not C.is_field:
            c = C.array([int(v) % (C.p**o) for v, o in zip(c, self.orders)])
        return c


def subquotient(f: np.ndarray, g: np.ndarray, coeffs: CoefficientSpec) -> Subquotient:
    """Homology ker(g)/im(f); f is B x A and g is C x B (columns are images)."""
    C = coeffs
    nB = f.shape[0] if f.size or f.shape[0] else g.shape[1]
    if C.is_field:
        K = kernel(g, C) if g.shape[0] else C.eye(nB)
        if f.shape[1] == 0:
            return Subquotient(K, [1] * K.shape[1], C, f)
        # extend a basis of im f to a basis of ker g
        E = SparseRowEchelon(C)
        for j in range(f.shape[1]):
            E.add_row({i: f[i, j] for i in range(nB) if f[i, j] != 0})
        keep = []
        for j in range(K.shape[1]):
            col = {i: K[i, j] for i in range(nB) if K[i, j] != 0}
            if E.add_row(col) is None:
                keep.append(j)
        return Subquotient(K[:, keep], [1] * len(keep), C, f)
    # local ring
    if g.shape[0]:
        U, D, V = diagonalize_over_local(g, C)
    else:
        D = C.zeros(0, nB)
        V = C.eye(nB)
    gens_y = []  # (index, multiplier, order)
    for i in range(nB):
        d = D[i, i] if i < D.shape[0] else 0
        v = C.valuation(d)
        if v >= C.k:
            gens_y.append((i, 1, C.k))
        elif v > 0:
            gens_y.append((i, C.p ** (C.k - v), v))
    W = C.zeros(nB, len(gens_y))
    for t, (i, s, _) in enumerate(gens_y):
        W[:, t] = C.reduce(V[:, i] * s)
    if f.shape[1] == 0 or not gens_y:
        orders = [o for (_, _, o) in gens_y]
        return Subquotient(W, orders, C, f)
    Vinv = inverse(V, C)
    Y = C.matmul(Vinv, f)
    R = C.zeros(len(gens_y), f.shape[1])
    for t, (i, s, _) in enumerate(gens_y):
        for j in range(f.shape[1]):
            R[t, j] = (int(Y[i, j]) // s) % C.modulus
    # presentation: relations diag(p^order) and R
    n = len(gens_y)
    P = C.zeros(n, n + f.shape[1])
    for t, (_, _, o) in enumerate(gens_y):
        P[t, t] = (C.p**o) % C.modulus
    P[:, n:] = R
    U2, D2, _ = diagonalize_over_local(P, C)
    U2inv = inverse(U2, C)
    newW = C.matmul(W, U2inv)
    cols, orders = [], []
    for t in range(n):
        v = C.valuation(D2[t, t])
        if v > 0:
            cols.append(t)
            orders.append(min(v, C.k))
    return Subquotient(newW[:, cols], orders, C, f)


def _hstack(a: np.ndarray, b: np.ndarray, C: CoefficientSpec) -> np.ndarray:
    out = C.zeros(a.shape[0], a.shape[1] + b.shape[1])
    out[:, : a.shape[1]] = a
    out[:, a.shape[1]:] = b
    return out
