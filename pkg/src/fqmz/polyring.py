"""The polynomial ring A = F_q[t] and rational functions over it.

Besides ring arithmetic this module houses the Carlitz building blocks
[n] = t^{q^n} - t, ell_n, L_n and D_n, and exact products of brackets.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Iterator, Mapping

import numpy as np

from . import _arith
from .field import FieldElem, FieldError, FieldMismatch, FieldSpec

__all__ = [
    "Poly",
    "RationalFunction",
    "bracket",
    "ell",
    "L",
    "Dn",
    "monics",
    "bracket_product",
    "irreducible_part",
    "poly_gcd",
    "parse_poly",
]


def _trim(c: np.ndarray) -> np.ndarray:
    nz = np.nonzero(c.any(axis=1))[0]
    if len(nz) == 0:
        return c[:0]
    return c[: nz[-1] + 1]


class Poly:
    """Dense polynomial in t over F_q, constant term first."""

    __slots__ = ("spec", "_c", "_hash")

    def __init__(self, spec: FieldSpec, coeffs=()):
        self.spec = spec
        if isinstance(coeffs, np.ndarray):
            arr = coeffs.astype(np.int64, copy=False) % spec.p
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1) if spec.m == 1 else arr.reshape(-1, spec.m)
        else:
            rows = []
            for c in coeffs:
                if isinstance(c, FieldElem):
                    if c.spec != spec:
                        raise FieldMismatch(f"{c.spec!r} coefficient in {spec!r} polynomial")
                    rows.append(c.coeffs)
                else:
                    rows.append(spec(c).coeffs)
            arr = np.array(rows, dtype=np.int64).reshape(-1, spec.m)
        self._c = _trim(arr)
        self._hash = None

    @classmethod
    def _raw(cls, spec: FieldSpec, arr: np.ndarray) -> "Poly":
        obj = cls.__new__(cls)
        obj.spec = spec
        obj._c = _trim(arr)
        obj._hash = None
        return obj

    @classmethod
    def monomial(cls, spec: FieldSpec, n: int, c=1) -> "Poly":
        arr = _arith.zeros(spec, n + 1)
        arr[n] = spec(c).coeffs
        return cls._raw(spec, arr)

    @classmethod
    def one(cls, spec: FieldSpec) -> "Poly":
        return cls.monomial(spec, 0)

    @classmethod
    def zero(cls, spec: FieldSpec) -> "Poly":
        return cls._raw(spec, _arith.zeros(spec, 0))

    @classmethod
    def t(cls, spec: FieldSpec) -> "Poly":
        return cls.monomial(spec, 1)

    # -- accessors ----------------------------------------------------------
    @property
    def coeffs(self) -> tuple[FieldElem, ...]:
        return tuple(FieldElem(self.spec, tuple(int(x) for x in row)) for row in self._c)

    @property
    def array(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        """Degree; -1 stands in for -infinity on the zero polynomial."""
        return len(self._c) - 1

    def is_zero(self) -> bool:
        return len(self._c) == 0

    def __bool__(self) -> bool:
        return len(self._c) > 0

    def is_one(self) -> bool:
        return len(self._c) == 1 and self[0].is_one()

    def __getitem__(self, i: int) -> FieldElem:
        if 0 <= i < len(self._c):
            return FieldElem(self.spec, tuple(int(x) for x in self._c[i]))
        return self.spec.zero

    @property
    def leading(self) -> FieldElem:
        if not self:
            raise ValueError("zero polynomial has no leading coefficient")
        return self[self.degree]

    def is_monic(self) -> bool:
        return bool(self) and self.leading.is_one()

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.spec != self.spec:
                raise FieldMismatch(f"{self.spec!r} vs {other.spec!r}")
            return other
        if isinstance(other, (int, FieldElem)):
            return Poly(self.spec, [other])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._c, other._c
        if len(a) < len(b):
            a, b = b, a
        out = a.copy()
        out[: len(b)] += b
        return Poly._raw(self.spec, out % self.spec.p)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(self.spec, (-self._c) % self.spec.p)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self or not other:
            return Poly.zero(self.spec)
        return Poly._raw(self.spec, _arith.convolve(self.spec, self._c, other._c))

    __rmul__ = __mul__

    def scale(self, c) -> "Poly":
        c = self.spec(c)
        return Poly._raw(self.spec, _arith.scale(self.spec, c.coeffs, self._c))

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = Poly.one(self.spec)
        if n == 0:
            return result
        # pull out p-power part: f^(p^e) is a coefficient spread
        p = self.spec.p
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        if e:
            result = Poly._raw(self.spec, _arith.spread(self.spec, result._c, e))
        return result

    def frobenius(self, e: int = 1) -> "Poly":
        """Coefficientwise x -> x^(p^e) with t -> t^(p^e), i.e. f^(p^e)."""
        return Poly._raw(self.spec, _arith.spread(self.spec, self._c, e))

    def divrem(self, other: "Poly") -> tuple["Poly", "Poly"]:
        other = self._coerce(other)
        if not other:
            raise ZeroDivisionError("polynomial division by zero")
        spec, p = self.spec, self.spec.p
        db = other.degree
        r = self._c.copy()
        if len(r) - 1 < db:
            return Poly.zero(spec), self
        lead_inv = _arith.inv_coords(spec, other._c[db])
        b = other._c
        if spec.m == 1:
            binv = int(lead_inv[0])
            bb = b[:, 0]
            rr = r[:, 0].copy()
            qq = np.zeros(len(rr) - db, dtype=np.int64)
            for i in range(len(rr) - 1, db - 1, -1):
                c = (rr[i] * binv) % p
                if c:
                    qq[i - db] = c
                    rr[i - db: i + 1] = (rr[i - db: i + 1] - c * bb) % p
            return Poly._raw(spec, qq.reshape(-1, 1)), Poly._raw(spec, rr[:db].reshape(-1, 1))
        qq = _arith.zeros(spec, len(r) - db)
        Minv = spec.mul_matrix(tuple(int(x) for x in lead_inv))
        for i in range(len(r) - 1, db - 1, -1):
            if r[i].any():
                c = (Minv @ r[i]) % p
                qq[i - db] = c
                Mc = spec.mul_matrix(tuple(int(x) for x in c))
                r[i - db: i + 1] = (r[i - db: i + 1] - b @ Mc.T) % p
        return Poly._raw(spec, qq), Poly._raw(spec, r[:db])

    def __floordiv__(self, other):
        return self.divrem(other)[0]

    def __mod__(self, other):
        return self.divrem(other)[1]

    def monic(self) -> "Poly":
        if not self:
            return self
        return self.scale(self.leading.inverse())

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, FieldElem)):
            other = Poly(self.spec, [other])
        if not isinstance(other, Poly):
            return NotImplemented
        return self.spec == other.spec and self._c.shape == other._c.shape and bool(
            (self._c == other._c).all()
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.spec, self._c.tobytes(), self._c.shape))
        return self._hash

    def __call__(self, x: FieldElem) -> FieldElem:
        acc = self.spec.zero
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    # -- formatting ---------------------------------------------------------
    def to_text(self) -> str:
        """``c0,c1,...,cd``; coefficients of F_{p^m} as ``a0.a1...``."""
        if not self:
            return "0"
        return ",".join(str(c) for c in self.coeffs)

    def __str__(self) -> str:
        if not self:
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            c = self[i]
            if not c:
                continue
            prime = not any(c.coeffs[1:])
            cs = str(c.coeffs[0]) if prime else f"({c})"
            if i == 0:
                terms.append(cs)
            else:
                mono = "t" if i == 1 else f"t^{i}"
                terms.append(mono if c.is_one() else f"{cs}*{mono}")
        return " + ".join(terms)

    def __repr__(self) -> str:
        return f"Poly({self}; {self.spec!r})"


def parse_poly(spec: FieldSpec, text: str) -> Poly:
    text = text.strip()
    if text in ("", "0"):
        return Poly.zero(spec)
    coeffs = []
    for tok in text.split(","):
        parts = tok.strip().split(".")
        if len(parts) == 1 and spec.m > 1:
            coeffs.append(int(parts[0]))
        else:
            coeffs.append(tuple(int(x) for x in parts))
    return Poly(spec, coeffs)


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd (zero only when both inputs are zero)."""
    while b:
        a, b = b, a % b
    return a.monic()


class RationalFunction:
    """num/den in lowest terms with den monic."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None, *, reduced: bool = False):
        if den is None:
            den = Poly.one(num.spec)
        if num.spec != den.spec:
            raise FieldMismatch(f"{num.spec!r} vs {den.spec!r}")
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not reduced:
            g = poly_gcd(num, den)
            if not g.is_one():
                num, den = num // g, den // g
            lc = den.leading
            if not lc.is_one():
                inv = lc.inverse()
                num, den = num.scale(inv), den.scale(inv)
        self.num = num
        self.den = den

    @property
    def spec(self) -> FieldSpec:
        return self.num.spec

    @classmethod
    def one(cls, spec: FieldSpec) -> "RationalFunction":
        return cls(Poly.one(spec), Poly.one(spec), reduced=True)

    def is_one(self) -> bool:
        return self.num.is_one() and self.den.is_one()

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        if isinstance(other, Poly):
            other = RationalFunction(other)
        # cross-cancel to keep intermediate degrees down
        g1 = poly_gcd(self.num, other.den)
        g2 = poly_gcd(other.num, self.den)
        num = (self.num // g1) * (other.num // g2)
        den = (self.den // g2) * (other.den // g1)
        lc = den.leading
        if not lc.is_one():
            inv = lc.inverse()
            num, den = num.scale(inv), den.scale(inv)
        return RationalFunction(num, den, reduced=True)

    def inverse(self) -> "RationalFunction":
        if not self.num:
            raise ZeroDivisionError("inverse of zero rational function")
        return RationalFunction(self.den, self.num)

    def __truediv__(self, other: "RationalFunction") -> "RationalFunction":
        return self * other.inverse()

    def __pow__(self, n: int) -> "RationalFunction":
        if n < 0:
            return self.inverse() ** (-n)
        # lowest terms are preserved by powers
        return RationalFunction(self.num ** n, self.den ** n, reduced=True)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    @property
    def degree_budget(self) -> int:
        return max(self.num.degree, 0) + self.den.degree

    def __str__(self) -> str:
        if self.den.is_one():
            return str(self.num)
        return f"({self.num})/({self.den})"

    def __repr__(self) -> str:
        return f"RationalFunction({self})"


# -- Carlitz quantities ------------------------------------------------------

def bracket(spec: FieldSpec, n: int) -> Poly:
    """[n] = t^{q^n} - t."""
    if n < 1:
        raise ValueError(f"[n] needs n >= 1, got {n}")
    arr = _arith.zeros(spec, spec.q ** n + 1)
    arr[-1, 0] = 1
    arr[1, 0] = spec.p - 1
    return Poly._raw(spec, arr)


@lru_cache(maxsize=256)
def L(spec: FieldSpec, n: int) -> Poly:
    """L_n = [n][n-1]...[1]."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return Poly.one(spec)
    return L(spec, n - 1) * bracket(spec, n)


def ell(spec: FieldSpec, n: int) -> Poly:
    """ell_n = prod_{i=1}^n (t - t^{q^i}) = (-1)^n L_n."""
    f = L(spec, n)
    return -f if n % 2 else f


@lru_cache(maxsize=256)
def Dn(spec: FieldSpec, n: int) -> Poly:
    """D_n = prod_{i=0}^{n-1} (t^{q^n} - t^{q^i}) = [n] D_{n-1}^q."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return Poly.one(spec)
    return bracket(spec, n) * Dn(spec, n - 1) ** spec.q


def monics(spec: FieldSpec, d: int) -> Iterator[Poly]:
    """All monic polynomials of degree d, lexicographic in (c_0, ..., c_{d-1})."""
    if d < 0:
        raise ValueError("degree must be >= 0")
    table = spec.element_table
    top = np.zeros((1, spec.m), dtype=np.int64)
    top[0, 0] = 1
    for low in product(range(spec.q), repeat=d):
        # product() varies the last slot fastest; read it as (c_0, ..., c_{d-1})
        arr = np.concatenate([table[list(low)].reshape(-1, spec.m), top])
        yield Poly._raw(spec, arr)


def _mobius(n: int) -> int:
    res, k, x = 1, 2, n
    while k * k <= x:
        if x % k == 0:
            x //= k
            if x % k == 0:
                return 0
            res = -res
        k += 1
    if x > 1:
        res = -res
    return res


@lru_cache(maxsize=256)
def irreducible_part(spec: FieldSpec, n: int) -> Poly:
    """Product of the monic irreducibles whose degree is exactly n.

    [n] is the product of these over the divisors of n, so the pieces are
    pairwise coprime and recovered by Mobius inversion.
    """
    num, den = Poly.one(spec), Poly.one(spec)
    for e in range(1, n + 1):
        if n % e == 0:
            mu = _mobius(n // e)
            if mu == 1:
                num = num * bracket(spec, e)
            elif mu == -1:
                den = den * bracket(spec, e)
    qt, r = num.divrem(den)
    assert not r
    return qt


def bracket_product(spec: FieldSpec, exponents: Mapping[int, int], sign: int = 1) -> RationalFunction:
    """Canonical form of sign * prod_n [n]^{e_n}.

    Works on the coprime irreducible-degree pieces, so no polynomial gcd
    is needed and the result is reduced by construction.
    """
    exps = {int(n): int(e) for n, e in exponents.items() if e}
    for n in exps:
        if n < 1:
            raise ValueError(f"bracket index must be >= 1, got {n}")
    piece: dict[int, int] = {}
    for n, e in exps.items():
        for d in range(1, n + 1):
            if n % d == 0:
                piece[d] = piece.get(d, 0) + e
    num, den = Poly.one(spec), Poly.one(spec)
    for d, e in sorted(piece.items()):
        if e > 0:
            num = num * irreducible_part(spec, d) ** e
        elif e < 0:
            den = den * irreducible_part(spec, d) ** (-e)
    if sign % spec.p != 1:
        num = num.scale(sign)
    return RationalFunction(num, den, reduced=True)
