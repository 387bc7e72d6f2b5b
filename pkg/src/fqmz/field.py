"""Finite fields F_q, q = p^m, in the power basis of a monic irreducible.

Elements are tuples of m integers in [0, p), constant term first.  The
array kernels used by the polynomial and series code work on the same
representation, stored as ``(n, m)`` integer arrays (one row per coefficient).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

__all__ = [
    "FieldError",
    "FieldMismatch",
    "FieldSpec",
    "FieldElem",
    "make_field",
    "parse_field",
    "ff_add",
    "ff_sub",
    "ff_neg",
    "ff_mul",
    "ff_inv",
    "ff_pow",
    "frobenius",
]

# constant-first coefficients of the default reduction polynomials
BUILTIN_REDUCTIONS = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (3, 2): (1, 0, 1),
}


class FieldError(ValueError):
    pass


class FieldMismatch(TypeError):
    """Operands live in different fields."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _fp_poly_mod(a: list[int], b: list[int], p: int) -> list[int]:
    # remainder of a by monic b over F_p, constant-first lists
    a = list(a)
    db = len(b) - 1
    for i in range(len(a) - 1, db - 1, -1):
        c = a[i] % p
        if c:
            for j in range(db + 1):
                a[i - db + j] = (a[i - db + j] - c * b[j]) % p
    r = [x % p for x in a[:db]]
    return r


def _is_irreducible(red: tuple[int, ...], p: int) -> bool:
    m = len(red) - 1
    if m == 1:
        return True
    for deg in range(1, m // 2 + 1):
        for low in product(range(p), repeat=deg):
            if not any(_fp_poly_mod(list(red), list(low) + [1], p)):
                return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    p: int
    m: int
    reduction: tuple[int, ...]

    @property
    def q(self) -> int:
        return self.p ** self.m

    def __repr__(self) -> str:
        if self.m == 1:
            return f"GF({self.p})"
        return f"GF({self.q}; {','.join(map(str, self.reduction))})"

    def designation(self) -> str:
        """Field designation string, e.g. ``q=4:1,1,1``."""
        if self.m == 1:
            return f"q={self.q}"
        return f"q={self.q}:" + ",".join(map(str, self.reduction))

    # -- elements ---------------------------------------------------------
    def __call__(self, value) -> "FieldElem":
        if isinstance(value, FieldElem):
            if value.spec != self:
                raise FieldMismatch(f"{value.spec!r} element used in {self!r}")
            return value
        if isinstance(value, int):
            return FieldElem(self, (value % self.p,) + (0,) * (self.m - 1))
        coeffs = tuple(int(c) % self.p for c in value)
        if len(coeffs) != self.m:
            raise FieldError(f"expected {self.m} coordinates, got {len(coeffs)}")
        return FieldElem(self, coeffs)

    @property
    def zero(self) -> "FieldElem":
        return FieldElem(self, (0,) * self.m)

    @property
    def one(self) -> "FieldElem":
        return FieldElem(self, (1,) + (0,) * (self.m - 1))

    @property
    def gen(self) -> "FieldElem":
        """The class of x in F_p[x]/(reduction)."""
        if self.m == 1:
            return self.one
        return FieldElem(self, (0, 1) + (0,) * (self.m - 2))

    def element(self, index: int) -> "FieldElem":
        digits = []
        for _ in range(self.m):
            index, r = divmod(index, self.p)
            digits.append(r)
        return FieldElem(self, tuple(digits))

    def elements(self) -> list["FieldElem"]:
        return [self.element(i) for i in range(self.q)]

    # -- raw tuple arithmetic ---------------------------------------------
    def _mul(self, a: tuple, b: tuple) -> tuple:
        p, m = self.p, self.m
        if m == 1:
            return ((a[0] * b[0]) % p,)
        raw = [0] * (2 * m - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    raw[i + j] += x * y
        return tuple(_fp_poly_mod(raw, list(self.reduction), p)) if len(raw) > m else tuple(
            c % p for c in raw
        )

    # -- array kernels ------------------------------------------------------
    @cached_property
    def frob_matrix(self) -> np.ndarray:
        """Matrix of a -> a^p on the power basis (F_p-linear)."""
        cols = [self._pow_tuple(_basis(self, i), self.p) for i in range(self.m)]
        return np.array(cols, dtype=np.int64).T

    def _pow_tuple(self, a: tuple, n: int) -> tuple:
        result = self.one.coeffs
        base = a
        while n:
            if n & 1:
                result = self._mul(result, base)
            base = self._mul(base, base)
            n >>= 1
        return result

    def mul_matrix(self, a: tuple) -> np.ndarray:
        """Matrix of multiplication by the element with coordinates ``a``."""
        cols = [self._mul(a, _basis(self, i)) for i in range(self.m)]
        return np.array(cols, dtype=np.int64).T

    @cached_property
    def mul_matrices(self) -> np.ndarray:
        """``(q, m, m)`` stack of multiplication matrices indexed by element."""
        return np.stack([self.mul_matrix(self.element(i).coeffs) for i in range(self.q)])

    @cached_property
    def element_table(self) -> np.ndarray:
        """``(q, m)`` coordinates of every element, by index."""
        return np.array([self.element(i).coeffs for i in range(self.q)], dtype=np.int64)

    @cached_property
    def inv_table(self) -> np.ndarray:
        """``(q, m)`` coordinates of inverses by element index (row 0 unused)."""
        rows = [(0,) * self.m] + [self.element(i).inverse().coeffs for i in range(1, self.q)]
        return np.array(rows, dtype=np.int64)

    def index_of(self, coords) -> int:
        return int(sum(int(c) * self.p ** i for i, c in enumerate(coords)))

    def reduce_slots(self, slots: np.ndarray) -> np.ndarray:
        """Fold raw product slots ``(2m-1, n)`` (powers of x) into ``(m, n)`` mod p."""
        m, p = self.m, self.p
        if m == 1:
            return slots % p
        s = slots.copy()
        red = self.reduction
        for j in range(s.shape[0] - 1, m - 1, -1):
            row = s[j]
            if row.any():
                for i in range(m):
                    if red[i]:
                        s[j - m + i] -= red[i] * row
        return s[:m] % p


def _basis(spec: FieldSpec, i: int) -> tuple:
    v = [0] * spec.m
    v[i] = 1
    return tuple(v)


@dataclass(frozen=True)
class FieldElem:
    spec: FieldSpec
    coeffs: tuple[int, ...]

    def _check(self, other) -> "FieldElem":
        if isinstance(other, int):
            return self.spec(other)
        if not isinstance(other, FieldElem):
            return NotImplemented
        if other.spec != self.spec:
            raise FieldMismatch(f"{self.spec!r} vs {other.spec!r}")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        p = self.spec.p
        return FieldElem(self.spec, tuple((a + b) % p for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        p = self.spec.p
        return FieldElem(self.spec, tuple((-a) % p for a in self.coeffs))

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return FieldElem(self.spec, self.spec._mul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return FieldElem(self.spec, self.spec._pow_tuple(self.coeffs, n))

    def inverse(self) -> "FieldElem":
        if not any(self.coeffs):
            raise ZeroDivisionError("inverse of 0 in " + repr(self.spec))
        return self ** (self.spec.q - 2) if self.spec.q > 2 else self

    def __truediv__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def is_one(self) -> bool:
        return self.coeffs[0] == 1 and not any(self.coeffs[1:])

    @property
    def index(self) -> int:
        return sum(c * self.spec.p ** i for i, c in enumerate(self.coeffs))

    def __str__(self) -> str:
        if self.spec.m == 1:
            return str(self.coeffs[0])
        return ".".join(map(str, self.coeffs))

    def __repr__(self) -> str:
        return f"FieldElem({self}, {self.spec!r})"


def make_field(p: int, m: int = 1, reduction=None) -> FieldSpec:
    """Build F_{p^m}.

    ``reduction`` is the constant-first coefficient list of a monic
    irreducible of degree m over F_p.  It is ignored for m = 1 and defaults
    to a built-in choice for (2,2), (2,3) and (3,2).
    """
    if not is_prime(p):
        raise FieldError(f"characteristic {p} is not prime")
    if m < 1:
        raise FieldError("extension degree must be >= 1")
    if m == 1:
        return FieldSpec(p, 1, (0, 1))
    if reduction is None:
        if (p, m) not in BUILTIN_REDUCTIONS:
            raise FieldError(f"no built-in reduction polynomial for p={p}, m={m}")
        reduction = BUILTIN_REDUCTIONS[(p, m)]
    red = tuple(int(c) for c in reduction)
    if len(red) != m + 1 or red[-1] % p != 1 or any(c < 0 or c >= p for c in red):
        raise FieldError(f"reduction {red} is not a monic degree-{m} polynomial over F_{p}")
    if not _is_irreducible(red, p):
        raise FieldError(f"reduction {red} is reducible over F_{p}")
    return FieldSpec(p, m, red)


def parse_field(text: str) -> FieldSpec:
    """Parse ``q=4``, ``4``, ``q=4:1,1,1`` or ``9:1,0,1``."""
    s = text.strip()
    if s.startswith("q="):
        s = s[2:]
    qpart, _, redpart = s.partition(":")
    try:
        q = int(qpart)
    except ValueError:
        raise FieldError(f"bad field designation {text!r}") from None
    p = next((d for d in range(2, q + 1) if q % d == 0), None)
    if p is None:
        raise FieldError(f"bad field size {q}")
    m, r = 0, q
    while r % p == 0:
        r //= p
        m += 1
    if r != 1:
        raise FieldError(f"{q} is not a prime power")
    reduction = None
    if redpart:
        reduction = [int(c) for c in redpart.split(",")]
    return make_field(p, m, reduction)


def ff_add(a: FieldElem, b: FieldElem) -> FieldElem:
    return a + b


def ff_sub(a: FieldElem, b: FieldElem) -> FieldElem:
    return a - b


def ff_neg(a: FieldElem) -> FieldElem:
    return -a


def ff_mul(a: FieldElem, b: FieldElem) -> FieldElem:
    return a * b


def ff_inv(a: FieldElem) -> FieldElem:
    return a.inverse()


def ff_pow(a: FieldElem, n: int) -> FieldElem:
    if n < 0:
        raise ValueError("ff_pow takes n >= 0; use ff_inv for negatives")
    return a ** n


def frobenius(a: FieldElem) -> FieldElem:
    return a ** a.spec.p
