"""Independent pure-Python reference arithmetic for the tests.

Nothing here imports the package.  Field elements are plain ints
a_0 + a_1 p + ... in the power basis of the reduction polynomial, so they
line up with ``FieldSpec.index_of``.  Polynomials are int lists, constant
term first.  A series is a pair (N, coeffs) where coeffs[i] is the
coefficient of u^i for 0 <= i < N and u = 1/t; only nonnegative
valuations are needed by the tests.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product

REDUCTIONS = {2: (2, (0, 1)), 3: (3, (0, 1)), 5: (5, (0, 1)), 4: (2, (1, 1, 1)), 8: (2, (1, 1, 0, 1)), 9: (3, (1, 0, 1))}


class GF:
    """Table-driven F_q."""

    def __init__(self, q: int):
        p, red = REDUCTIONS[q]
        self.q, self.p, self.m = q, p, len(red) - 1
        self.red = red
        digits = [self._digits(i) for i in range(q)]
        self.add_t = [[self._index([(x + y) % p for x, y in zip(a, b)]) for b in digits] for a in digits]
        self.mul_t = [[self._index(self._polymulmod(a, b)) for b in digits] for a in digits]
        self.neg_t = [self._index([(-x) % p for x in a]) for a in digits]
        self.inv_t = [0] * q
        for a in range(1, q):
            for b in range(1, q):
                if self.mul_t[a][b] == 1:
                    self.inv_t[a] = b
        self.x = 0 if self.m == 1 else p

    def _digits(self, i):
        out = []
        for _ in range(self.m):
            i, r = divmod(i, self.p)
            out.append(r)
        return out

    def _index(self, digits):
        return sum(d * self.p ** i for i, d in enumerate(digits))

    def _polymulmod(self, a, b):
        p, m = self.p, self.m
        raw = [0] * (2 * m)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                raw[i + j] += x * y
        # x^m = -(red_0 + red_1 x + ... + red_{m-1} x^{m-1})
        for k in range(2 * m - 1, m - 1, -1):
            c = raw[k] % p
            raw[k] = 0
            if c:
                for i in range(m):
                    raw[k - m + i] -= c * self.red[i]
        return [c % p for c in raw[:m]]

    def add(self, a, b):
        return self.add_t[a][b]

    def sub(self, a, b):
        return self.add_t[a][self.neg_t[b]]

    def mul(self, a, b):
        return self.mul_t[a][b]

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError
        return self.inv_t[a]

    def pow(self, a, n):
        r = 1
        for _ in range(n):
            r = self.mul(r, a)
        return r

    def frob(self, a):
        return self.pow(a, self.p)


@lru_cache(maxsize=None)
def gf(q: int) -> GF:
    return GF(q)


# -- polynomials --------------------------------------------------------------------

def ptrim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def padd(F, a, b):
    n = max(len(a), len(b))
    a, b = list(a) + [0] * (n - len(a)), list(b) + [0] * (n - len(b))
    return ptrim(F.add(x, y) for x, y in zip(a, b))


def pneg(F, a):
    return [F.neg_t[x] for x in a]


def psub(F, a, b):
    return padd(F, a, pneg(F, b))


def pmul(F, a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] = F.add(out[i + j], F.mul(x, y))
    return ptrim(out)


def pdivmod(F, a, b):
    b = ptrim(b)
    if not b:
        raise ZeroDivisionError
    r = ptrim(a)
    qt = [0] * max(len(r) - len(b) + 1, 0)
    lead_inv = F.inv(b[-1])
    while len(r) >= len(b):
        shift = len(r) - len(b)
        c = F.mul(r[-1], lead_inv)
        qt[shift] = c
        r = psub(F, r, [0] * shift + [F.mul(c, y) for y in b])
    return ptrim(qt), r


def pgcd(F, a, b):
    a, b = ptrim(a), ptrim(b)
    while b:
        a, b = b, pdivmod(F, a, b)[1]
    if not a:
        return a
    c = F.inv(a[-1])
    return [F.mul(c, x) for x in a]


def ppow(F, a, n):
    r = [1]
    for _ in range(n):
        r = pmul(F, r, a)
    return r


def bracket(F, n):
    """t^{q^n} - t."""
    out = [0] * (F.q ** n + 1)
    out[-1] = 1
    out[1] = F.neg_t[1]
    return out


def monic_polys(F, d):
    for low in product(range(F.q), repeat=d):
        yield list(low) + [1]


# -- series in u = 1/t -----------------------------------------------------------------

def s_mul(F, a, b, n):
    out = [0] * n
    for i, x in enumerate(a[:n]):
        if x:
            for j in range(min(len(b), n - i)):
                y = b[j]
                if y:
                    out[i + j] = F.add(out[i + j], F.mul(x, y))
    return out


def s_inv(F, a, n):
    """1/a for a power series with a[0] != 0, by the coefficient recurrence."""
    c0 = F.inv(a[0])
    out = [0] * n
    for i in range(n):
        acc = 1 if i == 0 else 0
        for j in range(1, min(i, len(a) - 1) + 1):
            acc = F.sub(acc, F.mul(a[j], out[i - j]))
        out[i] = F.mul(acc, c0)
    return out


def s_pow(F, a, k, n):
    r = [1] + [0] * (n - 1)
    base = a[:n] + [0] * max(0, n - len(a))
    while k:
        if k & 1:
            r = s_mul(F, r, base, n)
        base = s_mul(F, base, base, n)
        k >>= 1
    return r


def s_add(F, a, b):
    return [F.add(x, y) for x, y in zip(a, b)]


def inv_power_of_poly(F, a, k, N):
    """u-expansion of 1/a^k to absolute precision N (a monic or not)."""
    d = len(a) - 1
    out = [0] * N
    if k * d >= N:
        return out
    rev = list(reversed(a))  # a = t^d * rev(u)
    body = s_pow(F, s_inv(F, rev, N - k * d), k, N - k * d)
    out[k * d:] = body
    return out


def rational_expansion(F, num, den, N):
    """num/den as a series in u, for deg num <= deg den, to precision N."""
    num, den = ptrim(num), ptrim(den)
    dn, dd = len(num) - 1, len(den) - 1
    if dn > dd:
        raise ValueError("only proper or degree-zero functions")
    out = [0] * N
    if not num:
        return out
    v = dd - dn
    if v >= N:
        return out
    rn = list(reversed(num))
    rd = list(reversed(den))
    body = s_mul(F, rn, s_inv(F, rd, N - v), N - v)
    out[v:] = body
    return out


@lru_cache(maxsize=None)
def S_d(q, d, k, N):
    """S_d(k) by summing 1/a^k over the monic a of degree d."""
    F = gf(q)
    total = [0] * N
    for a in monic_polys(F, d):
        total = s_add(F, total, inv_power_of_poly(F, a, k, N))
    return tuple(total)


def S_iterated_nested(q, d, parts, N):
    """S_d(s_1, ..., s_r) as a nested sum over degrees d > d_2 > ... >= 0."""
    F = gf(q)
    r = len(parts)
    total = [0] * N

    def rec(level, bound, acc):
        nonlocal total
        if level == r:
            total = s_add(F, total, acc)
            return
        for dd in range(bound):
            rec(level + 1, dd, s_mul(F, acc, list(S_d(q, dd, parts[level], N)), N))

    rec(1, d, list(S_d(q, d, parts[0], N)))
    return tuple(total)


def S_iterated_tuples(q, d, parts, N):
    """Same sum, literally over tuples of monics (a_1, ..., a_r) with falling degrees."""
    F = gf(q)
    r = len(parts)
    total = [0] * N

    def rec(level, bound, acc):
        nonlocal total
        if level == r:
            total = s_add(F, total, acc)
            return
        for dd in range(bound):
            for a in monic_polys(F, dd):
                rec(level + 1, dd, s_mul(F, acc, inv_power_of_poly(F, a, parts[level], N), N))

    for a in monic_polys(F, d):
        rec(1, d, inv_power_of_poly(F, a, parts[0], N))
    return tuple(total)


def zeta(q, parts, N):
    F = gf(q)
    total = [0] * N
    d = len(parts) - 1
    while parts[0] * d < N:
        total = s_add(F, total, list(S_iterated_nested(q, d, tuple(parts), N)))
        d += 1
    return tuple(total)


# -- bridges to the package objects -----------------------------------------------------

def series_of(ls):
    """(N, coefficient indices for u^0..u^{N-1}) of a package LaurentSeries with v >= 0."""
    spec = ls.spec
    if ls.v < 0:
        raise ValueError("negative valuation")
    out = [0] * ls.N
    for i, row in enumerate(ls.array):
        out[ls.v + i] = spec.index_of(row)
    return tuple(out)


def poly_of(P):
    spec = P.spec
    return [spec.index_of(row) for row in P.array]
