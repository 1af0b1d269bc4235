"""Independent oracle for the cohomology of the suspension of RP^3 and its purity kernels.

Only the fixture data is taken from gext: cell dimensions, signed facets, and the
cell maps of the two resolutions with their signs.  All linear algebra is done
here with sparse elimination over F_p or exact rationals.

H^*(ΣRP^3) comes from the suspension long exact sequence, H~^n(ΣK) = H~^{n-1}(K),
applied to cellular cohomology of the RP^3 complex, and is cross-checked against
cellular cohomology of the suspension complex.  For each resolution f: X -> Y the
script reports dim ker(f^*: H^n(Y) -> H^n(X)).  The non-pure part of H^*(Y) is
the kernel of H^*(Y) -> H^*(Y, E); since E is a summand of f_*1 that contains the
image of the unit, this kernel contains ker f^*, and the two agree when the lower
summands of f_*1 receive nothing from H^*(Y), which the pipeline then confirms.

    python scripts/oracle_suspension.py
"""

import json
import sys
from fractions import Fraction

from gext.fixtures import build, rp3_complex


class Field:
    def __init__(self, p=None):
        self.p = p

    def __call__(self, x):
        return x % self.p if self.p else Fraction(x)

    def inv(self, x):
        return pow(x, -1, self.p) if self.p else 1 / x


def rank(rows, F):
    """Rank of sparse rows {col: value}."""
    piv = {}
    r = 0
    for row in rows:
        row = {j: F(v) for j, v in row.items() if F(v) != 0}
        while row:
            j = min(row)
            if j not in piv:
                a = F.inv(row[j])
                piv[j] = {k: F(v * a) for k, v in row.items()}
                r += 1
                break
            c = row[j]
            for k, v in piv[j].items():
                row[k] = F(row.get(k, 0) - c * v)
                if row[k] == 0:
                    del row[k]
    return r


def cells_of_dim(K, n):
    return [c for c in range(K.n) if K.dims[c] == n]


def coboundary_rows(K, n, col_off=0):
    """Rows of δ: C^n -> C^{n+1}, one per (n+1)-cell, columns indexed by n-cells (+ offset)."""
    pos = {c: i for i, c in enumerate(cells_of_dim(K, n))}
    rows = []
    for c in cells_of_dim(K, n + 1):
        rows.append({pos[f] + col_off: s for f, s in K.facets[c].items() if f in pos})
    return rows


def betti(K, F):
    top = max(K.dims) if K.n else -1
    ranks = {n: rank(coboundary_rows(K, n), F) for n in range(-1, top + 1)}
    ranks[-1] = 0
    return [len(cells_of_dim(K, n)) - ranks[n] - ranks[n - 1] for n in range(top + 1)]


def suspension_from_base(b):
    """H^*(ΣK) from H^*(K) for connected K."""
    return [1, 0] + b[1:]


def check_chain_map(f, F):
    """δ f^# = f^# δ on cochains, checked on every cell pair."""
    X, Y = f.source, f.target
    for c in range(X.n):
        lhs = {}
        if X.dims[c] == Y.dims[f(c)]:
            # (f^# δ φ)(c) = sign(c) * Σ_g [f(c):g] φ(g)
            for g, s in Y.facets[f(c)].items():
                lhs[g] = lhs.get(g, 0) + f.sign(c) * s
        rhs = {}
        # (δ f^# φ)(c) = Σ_b [c:b] sign(b) φ(f(b)) over facets b of the same image dimension
        for b, s in X.facets[c].items():
            if X.dims[b] == Y.dims[f(b)]:
                rhs[f(b)] = rhs.get(f(b), 0) + s * f.sign(b)
        keys = set(lhs) | set(rhs)
        if any(F(lhs.get(k, 0) - rhs.get(k, 0)) != 0 for k in keys):
            raise AssertionError(f"cell map is not a chain map at cell {c}")


def pullback_kernel(f, n, F):
    """dim ker(H^n(Y) -> H^n(X)) for a cellular map f: X -> Y."""
    X, Y = f.source, f.target
    yn, xn, xm = cells_of_dim(Y, n), cells_of_dim(X, n), cells_of_dim(X, n - 1)
    ypos = {c: i for i, c in enumerate(yn)}
    # unknowns: z in C^n(Y), then w in C^{n-1}(X); equations δz = 0 and f^# z = δw
    rows = coboundary_rows(Y, n)
    off = len(yn)
    xmpos = {c: i for i, c in enumerate(xm)}
    for c in xn:
        row = {}
        if Y.dims[f(c)] == n:
            row[ypos[f(c)]] = f.sign(c)
        for g, s in X.facets[c].items():
            if g in xmpos:
                row[off + xmpos[g]] = row.get(off + xmpos[g], 0) - s
        rows.append(row)
    total = off + len(xm) - rank(rows, F)
    cycles_w = len(xm) - rank(coboundary_rows(X, n - 1), F) if n > 0 else 0
    coboundaries_y = rank(coboundary_rows(Y, n - 1), F) if n > 0 else 0
    return total - cycles_w - coboundaries_y


def main():
    fx = build("suspension")
    Y = fx.complex
    out = {}
    for name, F in (("F2", Field(2)), ("Q", Field(None))):
        base = betti(rp3_complex(), F)
        via_les = suspension_from_base(base)
        direct = betti(Y, F)
        if via_les != direct:
            raise AssertionError(f"{name}: suspension sequence {via_les} vs cellular {direct}")
        entry = {"rp3": base, "suspension": direct, "kernels": {}}
        for key in ("resolution", "collared"):
            f = fx.maps[key]
            check_chain_map(f, F)
            entry["kernels"][key] = [pullback_kernel(f, n, F) for n in range(Y.dim + 1)]
            entry.setdefault("resolution_cohomology", {})[key] = betti(f.source, F)
        out[name] = entry
    json.dump(out, sys.stdout, indent=2)
    print()


if __name__ == "__main__":
    main()
