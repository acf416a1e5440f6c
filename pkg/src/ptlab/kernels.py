"""Compiled enumeration kernels working on discrete logarithms.

Elements of F_q are handled as logarithms to a fixed primitive element g:
a nonzero g^k is k in [0, n) with n = q - 1, zero is the sentinel n.
Multiplication is addition of logs, addition uses the Zech table
zech[k] = log(1 + g^k).
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .field import Field, FieldTables

# slots of the constants vector handed to every kernel
K_N, K_Q, K_L2, K_L3, K_L4, K_L27, K_QMOD3 = range(7)


@njit(cache=True, inline="always")
def lmul(a, b, n):
    if a == n or b == n:
        return n
    s = a + b
    if s >= n:
        s -= n
    return s


@njit(cache=True, inline="always")
def linv(a, n):
    return 0 if a == 0 else n - a


@njit(cache=True, inline="always")
def lneg(a, n):
    if a == n:
        return n
    s = a + n // 2
    if s >= n:
        s -= n
    return s


@njit(cache=True, inline="always")
def ladd(a, b, zech, n):
    if a == n:
        return b
    if b == n:
        return a
    d = b - a
    if d < 0:
        d += n
    z = zech[d]
    if z == n:
        return n
    s = a + z
    if s >= n:
        s -= n
    return s


@njit(cache=True, inline="always")
def lscale(a, e, n):
    # a^e for e >= 0
    if e == 0:
        return 0
    if a == n:
        return n
    return (a * e) % n


@njit(cache=True)
def _build_exp(p, r, modulus, gdig, n):
    exp = np.empty(n, dtype=np.int64)
    cur = np.zeros(r, dtype=np.int64)
    cur[0] = 1
    prod = np.zeros(2 * r, dtype=np.int64)
    for k in range(n):
        val = 0
        for i in range(r - 1, -1, -1):
            val = val * p + cur[i]
        exp[k] = val
        for i in range(2 * r):
            prod[i] = 0
        for i in range(r):
            if cur[i] != 0:
                for j in range(r):
                    prod[i + j] += cur[i] * gdig[j]
        for i in range(2 * r - 2, r - 1, -1):
            c = prod[i] % p
            if c != 0:
                for j in range(r + 1):
                    prod[i - r + j] -= c * modulus[j]
            prod[i] = 0
        for i in range(r):
            cur[i] = prod[i] % p
    return exp


@njit(cache=True)
def _build_cube_table(lam, zech, n):
    # T[x] = #{u in F_q : u^3 + g^lam u + x = 0}, x in log domain
    T = np.zeros(n + 1, dtype=np.int64)
    for u in range(n + 1):
        if u == n:
            T[n] += 1
            continue
        u3 = (3 * u) % n
        lu = lmul(lam, u, n)
        val = lneg(ladd(u3, lu, zech, n), n)
        T[val] += 1
    return T


def build_tables(field: Field) -> FieldTables:
    q, p, r = field.q, field.p, field.r
    n = q - 1
    g = field.primitive_element()
    gdig = np.array(field.coeffs(g), dtype=np.int64)
    exp = _build_exp(p, r, np.array(field.modulus, dtype=np.int64), gdig, n)
    log = np.full(q, n, dtype=np.int64)
    log[exp] = np.arange(n, dtype=np.int64)
    d0 = exp % p
    plus1 = exp - d0 + (d0 + 1) % p
    zech = log[plus1]
    cube1 = _build_cube_table(0, zech, n)
    cubeg = _build_cube_table(1, zech, n)
    return FieldTables(q=q, exp=exp, log=log, zech=zech, cube1=cube1, cubeg=cubeg, gen=g)


def constants(field: Field) -> np.ndarray:
    t = field.tables
    lg = t.log
    p = field.p
    return np.array([field.q - 1, field.q, lg[2 % p], lg[3 % p], lg[4 % p], lg[27 % p], field.q % 3],
                    dtype=np.int64)


@njit(cache=True)
def count_roots(c0, c1, c2, c3, zech, cube1, cubeg, K):
    """Distinct roots in F_q of c3 v^3 + c2 v^2 + c1 v + c0 (log-domain coefficients)."""
    n = K[K_N]
    if c3 != n:
        B = lmul(c2, linv(c3, n), n)
        C = lmul(c1, linv(c3, n), n)
        D = lmul(c0, linv(c3, n), n)
        # depressed cubic w^3 + P w + R with v = w - B/3
        il3 = linv(K[K_L3], n)
        P = ladd(C, lneg(lmul(lscale(B, 2, n), il3, n), n), zech, n)
        t1 = lmul(lmul(lscale(B, 3, n), K[K_L2], n), linv(K[K_L27], n), n)
        t2 = lneg(lmul(lmul(B, C, n), il3, n), n)
        R = ladd(ladd(t1, t2, zech, n), D, zech, n)
        if P == n:
            if R == n:
                return 1
            if K[K_QMOD3] == 2:
                return 1
            if lneg(R, n) % 3 == 0:
                return 3
            return 0
        if P % 2 == 0:
            lam = P // 2
            x = R if R == n else (R - 3 * lam) % n
            return cube1[x]
        lam = (P - 1) // 2
        x = R if R == n else (R - 3 * lam) % n
        return cubeg[x]
    if c2 != n:
        disc = ladd(lscale(c1, 2, n), lneg(lmul(lmul(K[K_L4], c2, n), c0, n), n), zech, n)
        if disc == n:
            return 1
        return 2 if disc % 2 == 0 else 0
    if c1 != n:
        return 1
    if c0 != n:
        return 0
    return K[K_Q]


@njit(cache=True)
def _decode(idx, nn, q, out):
    # canonical point number idx of P^nn(F_q) into out (encodings); see field.decode_projective
    block = 1
    for _ in range(nn):
        block *= q
    j = 0
    while idx >= block:
        idx -= block
        block //= q
        j += 1
    for i in range(nn + 1):
        out[i] = 0
    out[j] = 1
    for i in range(nn, j, -1):
        out[i] = idx % q
        idx //= q
    return j


@njit(cache=True)
def _step(pt, j, nn, q):
    # advance to the next canonical point; returns the new leading position
    k = nn
    while k > j and pt[k] == q - 1:
        pt[k] = 0
        k -= 1
    if k > j:
        pt[k] += 1
        return j
    pt[j] = 0
    j += 1
    if j <= nn:
        pt[j] = 1
        for i in range(j + 1, nn + 1):
            pt[i] = 0
    return j


@njit(cache=True, inline="always")
def _monomial(exps, t, ylog, k, c, n):
    mon = c
    for i in range(k):
        e = exps[t, i]
        if e != 0:
            y = ylog[i]
            if y == n:
                return n
            mon = (mon + e * y) % n
    return mon


@njit(cache=True)
def count_hypersurface_rows(exps, clog, k, start, stop, log, zech, cube1, cubeg, K):
    """#{x in P^{k-1}(F_q) : G(x) = 0, x not equal to e_k} summed over prefixes.

    Each canonical prefix y in P^{k-2} with index in [start, stop) contributes
    the number of v in F_q with G(y, v) = 0.  The v-degree must be <= 3.
    """
    n = K[K_N]
    q = K[K_Q]
    nn = k - 2
    T = exps.shape[0]
    pt = np.zeros(k - 1, dtype=np.int64)
    ylog = np.zeros(k - 1, dtype=np.int64)
    coef = np.empty(4, dtype=np.int64)
    total = 0
    if start >= stop:
        return 0
    j = _decode(start, nn, q, pt)
    for idx in range(start, stop):
        for i in range(k - 1):
            ylog[i] = log[pt[i]]
        for e in range(4):
            coef[e] = n
        for t in range(T):
            mon = _monomial(exps, t, ylog, k - 1, clog[t], n)
            if mon != n:
                ev = exps[t, k - 1]
                coef[ev] = ladd(coef[ev], mon, zech, n)
        total += count_roots(coef[0], coef[1], coef[2], coef[3], zech, cube1, cubeg, K)
        j = _step(pt, j, nn, q)
    return total


@njit(cache=True, inline="always")
def _eval_form(exps, clog, lo, hi, ylog, k, zech, n):
    acc = n
    for t in range(lo, hi):
        mon = _monomial(exps, t, ylog, k, clog[t], n)
        if mon != n:
            acc = ladd(acc, mon, zech, n)
    return acc


@njit(cache=True)
def find_common_zeros(exps, clog, offsets, k, start, stop, log, K, zech, max_record):
    """Brute force over canonical points of P^{k-1} with index in [start, stop).

    Forms are stacked: form f uses term rows offsets[f]..offsets[f+1].
    Returns the number of common zeros and the indices of the first
    max_record of them.
    """
    n = K[K_N]
    q = K[K_Q]
    nn = k - 1
    nf = offsets.shape[0] - 1
    pt = np.zeros(k, dtype=np.int64)
    ylog = np.zeros(k, dtype=np.int64)
    rec = np.empty(max(max_record, 1), dtype=np.int64)
    count = 0
    if start >= stop:
        return 0, rec[:0]
    j = _decode(start, nn, q, pt)
    for idx in range(start, stop):
        for i in range(k):
            ylog[i] = log[pt[i]]
        ok = True
        for f in range(nf):
            if _eval_form(exps, clog, offsets[f], offsets[f + 1], ylog, k, zech, n) != n:
                ok = False
                break
        if ok:
            if count < max_record:
                rec[count] = idx
            count += 1
        j = _step(pt, j, nn, q)
    return count, rec[:min(count, max_record)]


@njit(cache=True, inline="always")
def _horner(coef, deg, v, zech, n):
    acc = n
    for e in range(deg, -1, -1):
        acc = ladd(lmul(acc, v, n), coef[e], zech, n)
    return acc


@njit(cache=True)
def count_pair_rows(fexps, fclog, gexps, gclog, k, start, stop, log, zech, cube1, cubeg, K):
    """Common zeros of f (v-degree <= 2) and g (v-degree <= 8) over prefixes.

    Counts points of V(f, g) in P^{k-1} other than e_k, as in
    count_hypersurface_rows.
    """
    n = K[K_N]
    q = K[K_Q]
    nn = k - 2
    pt = np.zeros(k - 1, dtype=np.int64)
    ylog = np.zeros(k - 1, dtype=np.int64)
    fc = np.empty(3, dtype=np.int64)
    gc = np.empty(9, dtype=np.int64)
    total = 0
    if start >= stop:
        return 0
    gdeg = 0
    for t in range(gexps.shape[0]):
        if gexps[t, k - 1] > gdeg:
            gdeg = gexps[t, k - 1]
    il2 = linv(K[K_L2], n)
    j = _decode(start, nn, q, pt)
    for idx in range(start, stop):
        for i in range(k - 1):
            ylog[i] = log[pt[i]]
        for e in range(3):
            fc[e] = n
        for e in range(9):
            gc[e] = n
        for t in range(fexps.shape[0]):
            mon = _monomial(fexps, t, ylog, k - 1, fclog[t], n)
            if mon != n:
                ev = fexps[t, k - 1]
                fc[ev] = ladd(fc[ev], mon, zech, n)
        for t in range(gexps.shape[0]):
            mon = _monomial(gexps, t, ylog, k - 1, gclog[t], n)
            if mon != n:
                ev = gexps[t, k - 1]
                gc[ev] = ladd(gc[ev], mon, zech, n)
        a, b, c = fc[2], fc[1], fc[0]
        if a != n:
            disc = ladd(lscale(b, 2, n), lneg(lmul(lmul(K[K_L4], a, n), c, n), n), zech, n)
            den = linv(lmul(K[K_L2], a, n), n)
            if disc == n:
                v = lmul(lneg(b, n), den, n)
                if _horner(gc, gdeg, v, zech, n) == n:
                    total += 1
            elif disc % 2 == 0:
                s = disc // 2
                nb = lneg(b, n)
                v1 = lmul(ladd(nb, s, zech, n), den, n)
                v2 = lmul(ladd(nb, lneg(s, n), zech, n), den, n)
                if _horner(gc, gdeg, v1, zech, n) == n:
                    total += 1
                if _horner(gc, gdeg, v2, zech, n) == n:
                    total += 1
        elif b != n:
            v = lmul(lneg(c, n), linv(b, n), n)
            if _horner(gc, gdeg, v, zech, n) == n:
                total += 1
        elif c == n:
            if gdeg <= 3:
                total += count_roots(gc[0], gc[1], gc[2], gc[3], zech, cube1, cubeg, K)
            else:
                for v in range(n + 1):
                    if _horner(gc, gdeg, v, zech, n) == n:
                        total += 1
        j = _step(pt, j, nn, q)
    return total


@njit(cache=True)
def vision_minors_vanish(ylog, alog2, alog, zech, K):
    """All 3 x 3 minors of the rows (a_i^2), (2 a_i y_i), (y_i^2) vanish (log-domain input)."""
    n = K[K_N]
    m = ylog.shape[0]
    r2 = np.empty(m, dtype=np.int64)
    r3 = np.empty(m, dtype=np.int64)
    for i in range(m):
        r2[i] = lmul(lmul(K[K_L2], alog[i], n), ylog[i], n)
        r3[i] = lscale(ylog[i], 2, n) if ylog[i] != n else n
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                t1 = ladd(lmul(r2[j], r3[k], n), lneg(lmul(r2[k], r3[j], n), n), zech, n)
                t2 = ladd(lmul(r2[i], r3[k], n), lneg(lmul(r2[k], r3[i], n), n), zech, n)
                t3 = ladd(lmul(r2[i], r3[j], n), lneg(lmul(r2[j], r3[i], n), n), zech, n)
                det = ladd(ladd(lmul(alog2[i], t1, n), lneg(lmul(alog2[j], t2, n), n), zech, n),
                           lmul(alog2[k], t3, n), zech, n)
                if det != n:
                    return False
    return True


@njit(cache=True)
def _lift_point(yp, lift, out, zech, n):
    for i in range(lift.shape[0]):
        acc = n
        for j in range(lift.shape[1]):
            acc = ladd(acc, lmul(lift[i, j], yp[j], n), zech, n)
        out[i] = acc


@njit(cache=True)
def vision_curve_singular(gexps, gclog, hexps, hclog, lift, alog2, alog, start, stop, log, zech, K):
    """Count singular points of Y = V(g, h) in P^3 lifted to P^4, over prefixes [start, stop).

    g has v-degree <= 2 (the quadric), h any v-degree <= 8.  Every point of
    V(g, h) other than e_4 is visited once; its lift y = lift . y' is tested
    with vision_minors_vanish.
    """
    n = K[K_N]
    q = K[K_Q]
    k = 4
    nn = 2
    pt = np.zeros(3, dtype=np.int64)
    yp = np.zeros(4, dtype=np.int64)
    y = np.zeros(lift.shape[0], dtype=np.int64)
    fc = np.empty(3, dtype=np.int64)
    gc = np.empty(9, dtype=np.int64)
    roots = np.empty(n + 1, dtype=np.int64)
    total = 0
    if start >= stop:
        return 0
    gdeg = 0
    for t in range(hexps.shape[0]):
        if hexps[t, k - 1] > gdeg:
            gdeg = hexps[t, k - 1]
    j = _decode(start, nn, q, pt)
    for idx in range(start, stop):
        for i in range(3):
            yp[i] = log[pt[i]]
        for e in range(3):
            fc[e] = n
        for e in range(9):
            gc[e] = n
        for t in range(gexps.shape[0]):
            mon = _monomial(gexps, t, yp, 3, gclog[t], n)
            if mon != n:
                ev = gexps[t, 3]
                fc[ev] = ladd(fc[ev], mon, zech, n)
        for t in range(hexps.shape[0]):
            mon = _monomial(hexps, t, yp, 3, hclog[t], n)
            if mon != n:
                ev = hexps[t, 3]
                gc[ev] = ladd(gc[ev], mon, zech, n)
        nr = 0
        a, b, c = fc[2], fc[1], fc[0]
        if a != n:
            disc = ladd(lscale(b, 2, n), lneg(lmul(lmul(K[K_L4], a, n), c, n), n), zech, n)
            den = linv(lmul(K[K_L2], a, n), n)
            if disc == n:
                roots[0] = lmul(lneg(b, n), den, n)
                nr = 1
            elif disc % 2 == 0:
                s = disc // 2
                nb = lneg(b, n)
                roots[0] = lmul(ladd(nb, s, zech, n), den, n)
                roots[1] = lmul(ladd(nb, lneg(s, n), zech, n), den, n)
                nr = 2
        elif b != n:
            roots[0] = lmul(lneg(c, n), linv(b, n), n)
            nr = 1
        elif c == n:
            for v in range(n + 1):
                roots[nr] = v
                nr += 1
        for ri in range(nr):
            v = roots[ri]
            if _horner(gc, gdeg, v, zech, n) != n:
                continue
            yp[3] = v
            _lift_point(yp, lift, y, zech, n)
            if vision_minors_vanish(y, alog2, alog, zech, K):
                total += 1
        j = _step(pt, j, nn, q)
    return total


@njit(cache=True)
def vision_locus_points(alog, alog2, free_idx, log, zech, K, max_out):
    """Points of V(f1, f2, f3) in P^4 on the rank-deficiency locus of the Jacobian.

    Columns (a_i^2, 2 a_i y_i, y_i^2) are Veronese images of [a_i : y_i];
    three distinct points on a conic are independent, so the rank is <= 2
    iff the nonzero columns come from at most two points of P^1.  For
    a_i != 0 this means y_i = w a_i with w in {w1, w2}; an index with
    a_i = 0 (free_idx, at most one) contributes either y_i = 0 or the
    point at infinity.  All assignments and all (w1 : w2) in P^1 are
    enumerated and every candidate is checked against f1, f2, f3 and
    the minors directly.  Returns canonical points as log-domain rows.
    """
    n = K[K_N]
    m = alog.shape[0]
    out = np.empty((max_out, m), dtype=np.int64)
    cnt = 0
    y = np.empty(m, dtype=np.int64)
    U = np.empty(m, dtype=np.int64)
    nu = 0
    for i in range(m):
        if alog[i] != n:
            U[nu] = i
            nu += 1
    # family A: y_i = w_{class(i)} a_i on U, zero elsewhere; (w1 : w2) in P^1
    # family B: y_U = w1 a_U, y_free = w2 (free index present)
    for fam in range(2):
        if fam == 1 and free_idx < 0:
            break
        nmask = (1 << nu) if fam == 0 else 1
        for mask in range(nmask):
            # mask and its complement give the same points up to scaling
            if fam == 0 and nu > 0 and (mask & 1):
                continue
            for wi in range(n + 2):
                # (w1, w2) = (1, w) for w in F_q (wi <= n), else (0, 1)
                if wi <= n:
                    w1 = 0
                    w2 = wi
                else:
                    w1 = n
                    w2 = 0
                for i in range(m):
                    y[i] = n
                for t in range(nu):
                    i = U[t]
                    if fam == 0 and (mask >> t) & 1:
                        y[i] = lmul(w2, alog[i], n)
                    else:
                        y[i] = lmul(w1, alog[i], n)
                if fam == 1:
                    y[free_idx] = w2
                nonzero = False
                for i in range(m):
                    if y[i] != n:
                        nonzero = True
                if not nonzero:
                    continue
                f1 = n
                for i in range(m):
                    if y[i] != n:
                        f1 = ladd(f1, lmul(alog2[i], y[i], n), zech, n)
                if f1 != n:
                    continue
                f2 = n
                f3 = n
                for i in range(m):
                    if y[i] != n:
                        f2 = ladd(f2, lmul(alog[i], lscale(y[i], 2, n), n), zech, n)
                        f3 = ladd(f3, lscale(y[i], 3, n), zech, n)
                if f2 != n or f3 != n:
                    continue
                if not vision_minors_vanish(y, alog2, alog, zech, K):
                    continue
                # canonical representative: first nonzero coordinate -> 1
                lead = n
                for i in range(m):
                    if y[i] != n:
                        lead = y[i]
                        break
                dup = False
                for i in range(m):
                    if y[i] != n:
                        y[i] = (y[i] - lead) % n
                for r in range(cnt):
                    same = True
                    for i in range(m):
                        if out[r, i] != y[i]:
                            same = False
                            break
                    if same:
                        dup = True
                        break
                if not dup and cnt < max_out:
                    for i in range(m):
                        out[cnt, i] = y[i]
                    cnt += 1
    return out[:cnt]
