"""Offline oracles for the frozen corrector constants in test_enrichment.py.

Corrector values use mpmath at 50 digits. Enriched-matrix entries
B[phi_cor, phi_i] use recursive adaptive Simpson in double precision,
written independently of the package's quadrature.

Run: python3 tests/oracles/corrector_values.py
"""

import math

import mpmath as mp

mp.mp.dps = 50


def corrector_mp(x, eps):
    x, eps = mp.mpf(x), mp.mpf(eps)
    s = x + 1
    return mp.e ** (-s / eps) - (1 - (1 - mp.e ** (-2 / eps)) * s / 2)


def simpson(f, a, b, tol, depth=60):
    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15
        return (rec(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1))
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, depth)


def _cuts(lo, hi, eps):
    # split off the layer so Simpson sees a smooth integrand per piece
    return [lo] + [p for p in (-1 + k * eps for k in (1, 10, 100, 1000)) if lo < p < hi] + [hi]


def _corrector(eps):
    tail = math.exp(-2 / eps) if 2 / eps < 745 else 0.0

    def cor(x):
        s = x + 1
        return (math.exp(-s / eps) if s / eps < 745 else 0.0) - (1 - (1 - tail) * s / 2)

    def dcor(x):
        s = x + 1
        e = math.exp(-s / eps) if s / eps < 745 else 0.0
        return -e / eps + (1 - tail) / 2
    return cor, dcor


def enriched_entries(eps=1e-5, K=32, rows=(0, 1, 2, 30)):
    """Column B[phi_cor, phi_i], row B[phi_i, phi_cor] and corner B[phi_cor, phi_cor]
    for -eps u'' - u' with P1 hats on K cells of [-1, 1]."""
    h = 2.0 / K
    cor, dcor = _corrector(eps)
    col, row = {}, {}
    for i in rows:
        node = -1 + (i + 1) * h
        c_tot = r_tot = 0.0
        for lo, hi, slope in ((node - h, node, 1 / h), (node, node + h, -1 / h)):
            if slope > 0:
                hat = lambda x, lo=lo: (x - lo) / h
            else:
                hat = lambda x, hi=hi: (hi - x) / h
            fc = lambda x, hat=hat, slope=slope: eps * dcor(x) * slope - dcor(x) * hat(x)
            fr = lambda x, slope=slope: eps * dcor(x) * slope - slope * cor(x)
            cuts = _cuts(lo, hi, eps)
            c_tot += sum(simpson(fc, a, b, 1e-15) for a, b in zip(cuts[:-1], cuts[1:]))
            r_tot += sum(simpson(fr, a, b, 1e-15) for a, b in zip(cuts[:-1], cuts[1:]))
        col[i], row[i] = c_tot, r_tot
    fk = lambda x: eps * dcor(x) ** 2 - dcor(x) * cor(x)
    cuts = _cuts(-1.0, 1.0, eps)
    corner = sum(simpson(fk, a, b, 1e-15) for a, b in zip(cuts[:-1], cuts[1:]))
    return col, row, corner


if __name__ == "__main__":
    eps = 1e-5
    for t in (0.5, 1.0, 2.0, 5.0, 10.0):
        print(f"x=-1+{t}*eps", mp.nstr(corrector_mp(-1 + t * eps, eps), 20))
    col, row, corner = enriched_entries()
    for i in col:
        print(f"i={i} B[cor, phi_i]={col[i]!r} B[phi_i, cor]={row[i]!r}")
    print("B[cor, cor]", repr(corner))
