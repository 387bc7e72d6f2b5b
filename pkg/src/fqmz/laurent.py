"""Truncated Laurent series in u = 1/t over F_q, and continued fractions.

A series f = sum_{i >= v} c_i u^i is known up to (excluding) u^N.  The
precision N is absolute.  A series that vanishes to precision keeps only N
(and has v = N).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _arith
from .field import FieldElem, FieldMismatch, FieldSpec
from .polyring import Poly, RationalFunction

__all__ = [
    "LaurentSeries",
    "CFResult",
    "ls_zero",
    "ls_one",
    "ls_monomial",
    "ls_from_poly",
    "ls_from_rational",
    "ls_from_coeffs",
    "ls_add",
    "ls_sub",
    "ls_neg",
    "ls_mul",
    "ls_inv",
    "ls_div",
    "ls_pow",
    "ls_scale",
    "ls_frobenius",
    "ls_truncate",
    "ls_equal_to_precision",
    "bracket_series",
    "polynomial_part",
    "cf_expand",
    "RATIONAL",
    "INCONCLUSIVE",
]

RATIONAL = "Rational"
INCONCLUSIVE = "Inconclusive"


class LaurentSeries:
    __slots__ = ("spec", "v", "N", "_c")

    def __init__(self, spec: FieldSpec, v: int, N: int, coeffs: np.ndarray):
        # coeffs[i] is the coordinate row of the u^(v+i) coefficient
        self.spec = spec
        n = N - v
        if n <= 0:
            self.v, self.N, self._c = N, N, _arith.zeros(spec, 0)
            return
        c = coeffs[:n]
        nz = np.nonzero(c.any(axis=1))[0]
        if len(nz) == 0:
            self.v, self.N, self._c = N, N, _arith.zeros(spec, 0)
            return
        s = int(nz[0])
        c = c[s:]
        if len(c) < n - s:
            pad = _arith.zeros(spec, n - s - len(c))
            c = np.concatenate([c, pad])
        self.v = v + s
        self.N = N
        self._c = c

    @property
    def array(self) -> np.ndarray:
        return self._c

    @property
    def coeffs(self) -> tuple[FieldElem, ...]:
        return tuple(FieldElem(self.spec, tuple(int(x) for x in row)) for row in self._c)

    def is_zero(self) -> bool:
        """Zero to the known precision."""
        return len(self._c) == 0

    @property
    def rel_precision(self) -> int:
        return self.N - self.v

    def coeff(self, i: int) -> FieldElem:
        if i >= self.N:
            raise IndexError(f"u^{i} is beyond the precision O(u^{self.N})")
        if i < self.v:
            return self.spec.zero
        return FieldElem(self.spec, tuple(int(x) for x in self._c[i - self.v]))

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Coordinate rows for exponents lo..hi-1 (zeros below v)."""
        if hi > self.N:
            raise IndexError(f"u^{hi - 1} is beyond the precision O(u^{self.N})")
        out = _arith.zeros(self.spec, max(hi - lo, 0))
        a, b = max(lo, self.v), hi
        if b > a:
            out[a - lo: b - lo] = self._c[a - self.v: b - self.v]
        return out

    def __add__(self, other):
        return ls_add(self, other)

    def __sub__(self, other):
        return ls_sub(self, other)

    def __neg__(self):
        return ls_neg(self)

    def __mul__(self, other):
        if isinstance(other, LaurentSeries):
            return ls_mul(self, other)
        return ls_scale(self, other)

    def __rmul__(self, other):
        return ls_scale(self, other)

    def __truediv__(self, other):
        return ls_div(self, other)

    def __pow__(self, k: int):
        return ls_pow(self, k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.v == other.v
            and self.N == other.N
            and self._c.shape == other._c.shape
            and bool((self._c == other._c).all())
        )

    def __hash__(self):
        return hash((self.spec, self.v, self.N, self._c.tobytes()))

    def _fmt_coeff(self, row) -> str:
        if self.spec.m == 1:
            return str(int(row[0]))
        return ".".join(str(int(x)) for x in row)

    def __str__(self) -> str:
        if self.is_zero():
            return f"O(u^{self.N})"
        terms = []
        for i, row in enumerate(self._c):
            if not row.any():
                continue
            c = self._fmt_coeff(row)
            if i == 0:
                terms.append(c)
            else:
                mono = "u" if i == 1 else f"u^{i}"
                terms.append(mono if c == "1" else f"{c}*{mono}")
        terms.append(f"O(u^{self.N - self.v})")
        return f"u^{self.v}*(" + " + ".join(terms) + ")"

    def __repr__(self) -> str:
        return f"LaurentSeries(v={self.v}, N={self.N}, {self.spec!r})"

    def to_dict(self) -> dict:
        coeffs = [int(r[0]) if self.spec.m == 1 else self._fmt_coeff(r) for r in self._c]
        return {"v": self.v, "N": self.N, "coeffs": coeffs}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _check(f: LaurentSeries, g: LaurentSeries):
    if f.spec != g.spec:
        raise FieldMismatch(f"{f.spec!r} vs {g.spec!r}")


def ls_from_coeffs(spec: FieldSpec, v: int, N: int, coeffs) -> LaurentSeries:
    """Build from a list of FieldElem / ints / coordinate tuples for u^v, u^(v+1), ..."""
    if isinstance(coeffs, np.ndarray):
        arr = coeffs.reshape(-1, spec.m) % spec.p
    else:
        arr = np.array([spec(c).coeffs for c in coeffs], dtype=np.int64).reshape(-1, spec.m)
    if len(arr) < N - v:
        arr = np.concatenate([arr, _arith.zeros(spec, N - v - len(arr))])
    return LaurentSeries(spec, v, N, arr)


def ls_zero(spec: FieldSpec, N: int) -> LaurentSeries:
    return LaurentSeries(spec, N, N, _arith.zeros(spec, 0))


def ls_monomial(spec: FieldSpec, e: int, N: int, c=1) -> LaurentSeries:
    arr = _arith.zeros(spec, 1)
    arr[0] = spec(c).coeffs
    return LaurentSeries(spec, e, N, arr)


def ls_one(spec: FieldSpec, N: int) -> LaurentSeries:
    return ls_monomial(spec, 0, N)


def ls_truncate(f: LaurentSeries, N: int) -> LaurentSeries:
    if N >= f.N:
        return f
    return LaurentSeries(f.spec, f.v, N, f._c)


def ls_add(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    _check(f, g)
    N = min(f.N, g.N)
    v = min(f.v, g.v)
    if v >= N:
        return ls_zero(f.spec, N)
    out = f.window(v, N) if f.v < N else _arith.zeros(f.spec, N - v)
    if g.v < N:
        out = out + g.window(v, N)
    return LaurentSeries(f.spec, v, N, out % f.spec.p)


def ls_neg(f: LaurentSeries) -> LaurentSeries:
    return LaurentSeries(f.spec, f.v, f.N, (-f._c) % f.spec.p)


def ls_sub(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    return ls_add(f, ls_neg(g))


def ls_scale(f: LaurentSeries, c) -> LaurentSeries:
    c = f.spec(c)
    if not c:
        return ls_zero(f.spec, f.N)
    return LaurentSeries(f.spec, f.v, f.N, _arith.scale(f.spec, c.coeffs, f._c))


def ls_shift(f: LaurentSeries, k: int) -> LaurentSeries:
    """Multiply by u^k (exact)."""
    return LaurentSeries(f.spec, f.v + k, f.N + k, f._c)


def ls_mul(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    _check(f, g)
    N = min(f.v + g.N, g.v + f.N)
    v = f.v + g.v
    if f.is_zero() or g.is_zero() or v >= N:
        return ls_zero(f.spec, N)
    n = N - v
    return LaurentSeries(f.spec, v, N, _arith.convolve(f.spec, f._c, g._c, n))


def ls_inv(f: LaurentSeries) -> LaurentSeries:
    if f.is_zero():
        raise ZeroDivisionError("inverse of a series that is zero to precision")
    n = f.N - f.v
    return LaurentSeries(f.spec, -f.v, f.N - 2 * f.v, _arith.series_inverse(f.spec, f._c, n))


def ls_div(f: LaurentSeries, g: LaurentSeries) -> LaurentSeries:
    return ls_mul(f, ls_inv(g))


def ls_frobenius(f: LaurentSeries, e: int = 1) -> LaurentSeries:
    """f^(p^e): exact, relative precision multiplied by p^e."""
    step = f.spec.p ** e
    if f.is_zero():
        return ls_zero(f.spec, f.N * step)
    return LaurentSeries(f.spec, f.v * step, f.N * step, _arith.spread(f.spec, f._c, e))


def ls_pow(f: LaurentSeries, k: int) -> LaurentSeries:
    if k < 0:
        return ls_pow(ls_inv(f), -k)
    if k == 0:
        return ls_one(f.spec, f.N - f.v)
    p = f.spec.p
    e = 0
    while k % p == 0:
        k //= p
        e += 1
    result = None
    base = f
    while k:
        if k & 1:
            result = base if result is None else ls_mul(result, base)
        k >>= 1
        if k:
            base = ls_mul(base, base)
    if e:
        result = ls_frobenius(result, e)
    return result


def ls_equal_to_precision(f: LaurentSeries, g: LaurentSeries) -> tuple[bool, int | None, int]:
    """Compare on the shared known range.

    Returns (equal, first disagreeing exponent or None, shared precision).
    """
    _check(f, g)
    N = min(f.N, g.N)
    lo = min(f.v, g.v)
    if lo >= N:
        return True, None, N
    diff = (f.window(lo, N) - g.window(lo, N)) % f.spec.p
    bad = np.nonzero(diff.any(axis=1))[0]
    if len(bad) == 0:
        return True, None, N
    return False, lo + int(bad[0]), N


# -- exact expansions ----------------------------------------------------------

def _reverse_unit(p: Poly) -> np.ndarray:
    return p.array[::-1]


def ls_from_poly(f: Poly, N: int) -> LaurentSeries:
    if not f:
        return ls_zero(f.spec, N)
    return LaurentSeries(f.spec, -f.degree, N, _reverse_unit(f))


def ls_from_rational(f, N: int) -> LaurentSeries:
    """1/t-adic expansion of a RationalFunction (or Poly) to absolute precision N."""
    if isinstance(f, Poly):
        return ls_from_poly(f, N)
    num, den = f.num, f.den
    if not den:
        raise ZeroDivisionError("zero denominator")
    spec = num.spec
    if not num:
        return ls_zero(spec, N)
    v = den.degree - num.degree
    n = N - v
    if n <= 0:
        return ls_zero(spec, N)
    inv = _arith.series_inverse(spec, _reverse_unit(den), n)
    return LaurentSeries(spec, v, N, _arith.convolve(spec, _reverse_unit(num), inv, n))


def _binomial_mod_p(n: int, k: int, p: int) -> int:
    # Lucas
    r = 1
    while n or k:
        a, b = n % p, k % p
        if b > a:
            return 0
        c = 1
        for i in range(b):
            c = c * (a - i) // (i + 1)
        r = (r * c) % p
        n //= p
        k //= p
    return r


def bracket_series(spec: FieldSpec, exponents: Mapping[int, int], N: int, coeff: int = 1) -> LaurentSeries:
    """Expansion of coeff * prod_n [n]^{e_n} to absolute precision N.

    Uses [n] = u^{-q^n} (1 - u^{q^n - 1}); each factor is a sparse binomial
    series, so no polynomial of degree q^n is ever formed.
    """
    p, q = spec.p, spec.q
    exps = {n: e for n, e in exponents.items() if e}
    v = -sum(e * q ** n for n, e in exps.items())
    coeff %= p
    if coeff == 0 or v >= N:
        return ls_zero(spec, N)
    n = N - v
    acc = np.zeros(n, dtype=np.int64)
    acc[0] = coeff
    for b, e in sorted(exps.items()):
        step = q ** b - 1
        terms = (n - 1) // step
        fac = np.zeros(n, dtype=np.int64)
        if e > 0:
            for j in range(min(e, terms) + 1):
                c = _binomial_mod_p(e, j, p)
                if c:
                    fac[j * step] = c if j % 2 == 0 else (-c) % p
        else:
            # (1 - x)^{-f} = sum_j C(f + j - 1, j) x^j
            f = -e
            for j in range(terms + 1):
                c = _binomial_mod_p(f + j - 1, j, p)
                if c:
                    fac[j * step] = c
        nzf = np.nonzero(fac)[0]
        if len(nzf) * 8 < n:
            # sparse factor: shift-and-add
            new = np.zeros(n, dtype=np.int64)
            for j in nzf:
                new[j:] += fac[j] * acc[: n - j]
            acc = new % p
        else:
            acc = _arith.fp_convolve(acc, fac)[:n] % p
    arr = _arith.zeros(spec, n)
    arr[:, 0] = acc
    return LaurentSeries(spec, v, N, arr)


def polynomial_part(f: LaurentSeries) -> Poly:
    """The terms u^i with i <= 0, as a polynomial in t."""
    if f.is_zero() or f.v > 0:
        return Poly.zero(f.spec)
    if f.N <= 0:
        raise ValueError("polynomial part is not determined to this precision")
    rows = f._c[: 1 - f.v]
    return Poly._raw(f.spec, rows[::-1].copy())


# -- continued fractions -------------------------------------------------------

@dataclass
class CFResult:
    quotients: list = field(default_factory=list)
    verdict: str = INCONCLUSIVE
    reconstructed: RationalFunction | None = None
    guard_used: int = 0
    reason: str = ""

    @property
    def is_rational(self) -> bool:
        return self.verdict == RATIONAL


def cf_expand(f: LaurentSeries, guard: int = 20, redundancy: int = 2) -> CFResult:
    """Continued fraction of f, with a rationality verdict.

    Rational needs the remainder to vanish to the available precision,
    ``guard`` spare coefficients beyond deg P + deg Q, deg P + deg Q at most
    1/redundancy of the relative precision, and an exact re-expansion match
    of P/Q against f.

    The redundancy rule matters in characteristic 2, where multizeta ratios
    have sporadic partial quotients of degree 20-35; a bare guard of 20
    would accept such a truncated expansion as rational.
    """
    if guard < 1:
        raise ValueError("guard must be >= 1")
    if redundancy < 1:
        raise ValueError("redundancy must be >= 1")
    spec = f.spec
    res = CFResult()
    if f.is_zero():
        res.reason = "input is zero to precision"
        return res
    budget = f.N - f.v
    if f.N <= 0:
        res.reason = "polynomial part not determined"
        return res
    a0 = polynomial_part(f)
    res.quotients.append(a0)
    one = Poly.one(spec)
    P_prev, Q_prev = one, Poly.zero(spec)
    P, Q = a0, one
    B = ls_sub(f, ls_from_poly(a0, f.N)) if a0 else f
    A = None  # stands for the exact series 1
    while True:
        degs = max(P.degree, 0) + Q.degree
        if degs + guard > budget or degs * redundancy > budget:
            res.reason = "degree budget exceeded"
            return res
        if B.is_zero():
            break
        if A is None:
            A = ls_one(spec, B.N - B.v)
        D = B.v - A.v
        need = D + 1
        if A.N - A.v < need or B.N - B.v < need:
            res.reason = "precision exhausted"
            return res
        head = _arith.convolve(spec, A._c[:need], _arith.series_inverse(spec, B._c[:need], need), need)
        a = Poly._raw(spec, head[::-1].copy())
        res.quotients.append(a)
        # a(t) as a series is u^{-D} * head(u)
        aB = LaurentSeries(spec, B.v - D, B.N - D, _arith.convolve(spec, head, B._c, B.N - B.v))
        A, B = B, ls_sub(A, aB)
        P, P_prev = a * P + P_prev, P
        Q, Q_prev = a * Q + Q_prev, Q
    rf = RationalFunction(P, Q)
    again = ls_from_rational(rf, f.N)
    ok, _, _ = ls_equal_to_precision(again, f)
    if not ok:
        res.reason = "re-expansion mismatch"
        return res
    res.verdict = RATIONAL
    res.reconstructed = rf
    res.guard_used = budget - (max(rf.num.degree, 0) + rf.den.degree)
    return res
