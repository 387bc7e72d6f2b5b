"""Power sums S_d(k), S_{<d}(k) and iterated sums over monic polynomials.

Three evaluators live here:

* ``sd_bruteforce``: one monic at a time, the reference oracle;
* ``sd_batch``: the same sum, vectorised over all monics of degree d;
* ``sd`` / ``s_below``: dispatchers that prefer exact bracket closed forms
  and fall back to ``sd_batch``.

All results are truncated exactly at the requested absolute precision, so a
closed form and a brute-force sum compare bit for bit.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Iterable

import numpy as np

from . import _arith
from .field import FieldSpec
from .laurent import (
    LaurentSeries,
    bracket_series,
    ls_add,
    ls_equal_to_precision,
    ls_frobenius,
    ls_from_poly,
    ls_inv,
    ls_mul,
    ls_one,
    ls_pow,
    ls_truncate,
    ls_zero,
)
from .polyring import monics

__all__ = [
    "Composition",
    "PowerSumKey",
    "SumKind",
    "BudgetExceeded",
    "BRUTE_FORCE_LIMIT",
    "tail_bound",
    "sd_valuation_bound",
    "sd_bruteforce",
    "sd_bruteforce_many",
    "sd_batch",
    "s_below_batch",
    "sd",
    "sd_rule",
    "s_below",
    "s_below_rule",
    "sd_iterated",
    "s_below_iterated",
    "clear_caches",
    "set_cache_limit",
    "IDENTITIES",
    "IdentityError",
    "identity_instances",
    "verify_identity",
    "Mono",
    "eval_monos",
    "ell_exps",
]

BRUTE_FORCE_LIMIT = 2 ** 22


class BudgetExceeded(RuntimeError):
    """q^d is past the brute-force budget."""


@dataclass(frozen=True, order=True)
class Composition:
    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts)
        if not parts:
            raise ValueError("empty composition")
        if any(x < 1 for x in parts):
            raise ValueError(f"parts must be positive: {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, *parts) -> "Composition":
        if len(parts) == 1 and not isinstance(parts[0], int):
            parts = tuple(parts[0])
        return cls(tuple(parts))

    @classmethod
    def parse(cls, text: str) -> "Composition":
        text = text.strip().strip("()")
        return cls(tuple(int(x) for x in text.split(",") if x.strip()))

    @property
    def depth(self) -> int:
        return len(self.parts)

    @property
    def weight(self) -> int:
        return sum(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __getitem__(self, i):
        return self.parts[i]

    def tail(self) -> "Composition":
        return Composition(self.parts[1:])

    def divisible_by(self, p: int) -> bool:
        return all(x % p == 0 for x in self.parts)

    def scaled(self, c: int) -> "Composition":
        return Composition(tuple(x * c for x in self.parts))

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.parts)) + ")"

    def text(self) -> str:
        return ",".join(map(str, self.parts))


class SumKind(Enum):
    AT_DEGREE = "AtDegree"
    BELOW_DEGREE = "BelowDegree"


@dataclass(frozen=True)
class PowerSumKey:
    d: int
    comp: Composition
    kind: SumKind = SumKind.AT_DEGREE

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be >= 0")


# -- valuation bound -------------------------------------------------------------

@lru_cache(maxsize=None)
def tail_bound(spec: FieldSpec, d: int) -> int:
    """Extra valuation B(d) with v(S_d(k)) >= k*d + B(d).

    Summing (1 + c_1 u + ... + c_d u^d)^{-k} over all c, a monomial
    prod c_i^{e_i} survives only if every e_i is a positive multiple of
    q - 1, and its multinomial coefficient is nonzero mod p only if the e_i
    add without carries in base p.  So the r-th smallest e_i is at least
    max(q - 1, p^floor(r/(p-1))); pairing the largest weights i with the
    smallest exponents gives the bound.
    """
    p, q = spec.p, spec.q
    return sum((d - r) * max(q - 1, p ** (r // (p - 1))) for r in range(d))


def sd_valuation_bound(spec: FieldSpec, d: int, k: int) -> int:
    return k * d + tail_bound(spec, d)


def _check_budget(spec: FieldSpec, d: int):
    if spec.q ** d > BRUTE_FORCE_LIMIT:
        raise BudgetExceeded(f"q^d = {spec.q}^{d} exceeds the brute-force budget 2^22")


# -- oracle ------------------------------------------------------------------------

def sd_bruteforce(spec: FieldSpec, d: int, k: int, N: int) -> LaurentSeries:
    """S_d(k) = sum over monic a of degree d of a^{-k}, one monic at a time."""
    if d < 0 or k < 1:
        raise ValueError("need d >= 0 and k >= 1")
    _check_budget(spec, d)
    if k * d >= N:
        return ls_zero(spec, N)
    rel = N - k * d
    total = ls_zero(spec, N)
    for a in monics(spec, d):
        inv = ls_inv(ls_from_poly(a, rel - d))
        total = ls_add(total, ls_pow(inv, k))
    return ls_truncate(total, N)


def sd_bruteforce_many(spec: FieldSpec, d: int, kmax: int, extra: int) -> dict[int, LaurentSeries]:
    """S_d(k) for k = 1..kmax, each to precision k d + B(d) + extra.

    Same one-monic-at-a-time sum as ``sd_bruteforce``; each monic is
    inverted once and its powers come from running products.
    """
    if d < 0 or kmax < 1 or extra < 0:
        raise ValueError("need d >= 0, kmax >= 1, extra >= 0")
    _check_budget(spec, d)
    rel = tail_bound(spec, d) + extra
    acc = np.zeros((kmax, rel, spec.m), dtype=np.int64)
    for a in monics(spec, d):
        h = _arith.series_inverse(spec, a.array[::-1], rel)
        r = h
        for k in range(kmax):
            acc[k] += r
            if k + 1 < kmax:
                r = _arith.convolve(spec, r, h, rel)
    out = {}
    for k in range(1, kmax + 1):
        N = k * d + rel
        out[k] = ls_truncate(LaurentSeries(spec, k * d, N, acc[k - 1] % spec.p), N)
    return out


# -- vectorised brute force -------------------------------------------------------

_ROW_BUDGET = 1 << 24  # int16 entries per working array


def _chunk_rows(spec: FieldSpec, d: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    digits = np.empty((len(idx), d), dtype=np.int64)
    for i in range(d):
        idx, digits[:, i] = np.divmod(idx, spec.q)
    return digits


def _batch_unit_sum(spec: FieldSpec, d: int, k: int, M: int) -> np.ndarray:
    """sum_c (1 + c_1 u + ... + c_d u^d)^{-k} mod u^M, summed over F_q^d.

    Arrays are time-major, ``(M, rows, m)``; h^{-k} is built from the
    base-p digits of k: h^{-pk'-r} = Frob(h^{-k'}) / h^r.
    """
    p, m = spec.p, spec.m
    rows_total = spec.q ** d
    total = np.zeros((M, m), dtype=np.int64)
    chunk = max(1, _ROW_BUDGET // ((M + d + 1) * m))
    frobM = spec.frob_matrix.astype(np.int16)
    dt = np.int16
    for start in range(0, rows_total, chunk):
        cidx = _chunk_rows(spec, d, start, min(rows_total, start + chunk))
        R = len(cidx)
        # window rows n-d .. n-1 pair with c_d .. c_1
        crev = np.ascontiguousarray(cidx[:, ::-1].T)  # (d, R)
        # coordinates of c_d .. c_1, component-major: (m, d, R)
        ccoord = np.ascontiguousarray(spec.element_table[crev].transpose(2, 0, 1)).astype(dt)
        red = spec.reduction

        def divide(g: np.ndarray) -> np.ndarray:
            n_len = g.shape[0]
            if m == 1:
                c0 = ccoord[0]
                b = np.zeros((d + n_len, R), dtype=dt)
                gg = g[:, :, 0]
                for n in range(n_len):
                    b[d + n] = (gg[n] - (c0 * b[n:n + d]).sum(axis=0)) % p
                return b[d:, :, None]
            # component form: b is (m, d + n_len, R)
            b = np.zeros((m, d + n_len, R), dtype=dt)
            gt = np.ascontiguousarray(g.transpose(2, 0, 1))
            for n in range(n_len):
                slots = [0] * (2 * m - 1)
                for i in range(m):
                    ci = ccoord[i]
                    for j in range(m):
                        slots[i + j] = slots[i + j] + (ci * b[j, n:n + d]).sum(axis=0)
                # fold x^s, s >= m, with the reduction polynomial
                for s_ in range(2 * m - 2, m - 1, -1):
                    top = slots[s_]
                    for i in range(m):
                        if red[i]:
                            slots[s_ - m + i] = slots[s_ - m + i] - red[i] * top
                for i in range(m):
                    b[i, d + n] = (gt[i, n] - slots[i]) % p
            return np.ascontiguousarray(b[:, d:].transpose(1, 2, 0))

        def power(kk: int, n_len: int) -> np.ndarray:
            g = np.zeros((n_len, R, m), dtype=dt)
            if n_len <= 0:
                return g
            k1, r = divmod(kk, p)
            if k1 == 0:
                g[0, :, 0] = 1
            else:
                base = power(k1, -(-n_len // p))
                if m > 1:
                    base = (base @ frobM.T) % p
                g[::p] = base[: len(range(0, n_len, p))]
            for _ in range(r):
                g = divide(g)
            return g

        total += power(k, M).sum(axis=1, dtype=np.int64)
        total %= p
    return total


def _pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 vector (rows) into little-endian uint64 words."""
    n = len(bits)
    W = -(-n // 64)
    padded = np.zeros(W * 64, dtype=np.uint8)
    padded[:n] = bits
    return np.packbits(padded, bitorder="little").view(np.uint64)


def _parity_rows(words: np.ndarray) -> np.ndarray:
    """Parity of the set bits along the last axis (sum mod 2 over rows)."""
    folded = np.bitwise_xor.reduce(words, axis=-1)
    as_bytes = folded.reshape(folded.shape + (1,)).view(np.uint8)
    return (np.unpackbits(as_bytes, axis=-1).sum(axis=-1) & 1).astype(np.int64)


def _batch_unit_sum_char2(spec: FieldSpec, d: int, k: int, M: int) -> np.ndarray:
    """Characteristic-2 version of ``_batch_unit_sum`` with rows bit-sliced.

    Each coordinate of each coefficient is a bit-plane over all monics, so
    F_q arithmetic becomes AND/XOR on uint64 words.
    """
    m = spec.m
    R = spec.q ** d
    cidx = _chunk_rows(spec, d, 0, R)
    coords = spec.element_table[cidx]  # (R, d, m)
    # C[j, a]: plane a of c_{d-j}, so the window b_{n-d} .. b_{n-1} lines up
    C = np.stack([np.stack([_pack_bits(coords[:, d - 1 - j, a]) for a in range(m)]) for j in range(d)])
    W = C.shape[-1]
    valid = _pack_bits(np.ones(R, dtype=np.uint8))
    red = spec.reduction
    frob = spec.frob_matrix
    pairs = [[(i, s - i) for i in range(m) if 0 <= s - i < m] for s in range(2 * m - 1)]

    def divide(g: np.ndarray) -> np.ndarray:
        n_len = g.shape[0]
        b = np.zeros((d + n_len, m, W), dtype=np.uint64)
        if m == 1:
            c0 = C[:, 0]
            for n in range(n_len):
                b[d + n, 0] = g[n, 0] ^ np.bitwise_xor.reduce(c0 & b[n:n + d, 0], axis=0)
            return b[d:]
        for n in range(n_len):
            X = np.bitwise_xor.reduce(C[:, :, None, :] & b[n:n + d, None, :, :], axis=0)  # (m, m, W)
            slots = []
            for pr in pairs:
                acc = X[pr[0]]
                for ij in pr[1:]:
                    acc = acc ^ X[ij]
                slots.append(acc)
            for s_ in range(2 * m - 2, m - 1, -1):
                for i in range(m):
                    if red[i]:
                        slots[s_ - m + i] = slots[s_ - m + i] ^ slots[s_]
            out = b[d + n]
            for i in range(m):
                out[i] = g[n, i] ^ slots[i]
        return b[d:]

    def apply_frob(x: np.ndarray) -> np.ndarray:
        if m == 1:
            return x
        out = np.zeros_like(x)
        for a in range(m):
            for bb in range(m):
                if frob[a, bb]:
                    out[:, a] ^= x[:, bb]
        return out

    def power(kk: int, n_len: int) -> np.ndarray:
        g = np.zeros((n_len, m, W), dtype=np.uint64)
        if n_len <= 0:
            return g
        k1, r = divmod(kk, 2)
        if k1 == 0:
            g[0, 0] = valid
        else:
            base = apply_frob(power(k1, -(-n_len // 2)))
            g[::2] = base[: len(range(0, n_len, 2))]
        for _ in range(r):
            g = divide(g)
        return g

    G = power(k, M) & valid
    return _parity_rows(G)  # (M, m)


def sd_batch(spec: FieldSpec, d: int, k: int, N: int) -> LaurentSeries:
    """S_d(k) by direct summation, vectorised across all monics."""
    if d < 0 or k < 1:
        raise ValueError("need d >= 0 and k >= 1")
    if d == 0:
        return ls_one(spec, N)
    _check_budget(spec, d)
    if k * d >= N:
        return ls_zero(spec, N)
    M = N - k * d
    kernel = _batch_unit_sum_char2 if spec.p == 2 else _batch_unit_sum
    return LaurentSeries(spec, k * d, N, kernel(spec, d, k, M))


def s_below_batch(spec: FieldSpec, d: int, k: int, N: int) -> LaurentSeries:
    total = ls_zero(spec, N)
    for i in range(d):
        total = ls_add(total, sd_batch(spec, i, k, N))
    return total


# -- bracket monomials -------------------------------------------------------------

@dataclass
class Mono:
    """coeff * prod_n [n]^{exps[n]}; coeff is an integer taken mod p."""

    coeff: int
    exps: dict

    def mul_ell(self, n: int, e: int) -> "Mono":
        sign = ell_exps(self.exps, n, e)
        self.coeff *= sign
        return self

    def mul_bracket(self, n: int, e: int) -> "Mono":
        if n == 0 and e > 0:
            self.coeff = 0
        elif n == 0 and e < 0:
            raise ZeroDivisionError("[0] = 0 in a denominator")
        elif e:
            self.exps[n] = self.exps.get(n, 0) + e
        return self

    def powered(self, e: int) -> "Mono":
        return Mono(self.coeff ** e, {n: x * e for n, x in self.exps.items()})

    def times(self, other: "Mono") -> "Mono":
        out = Mono(self.coeff * other.coeff, dict(self.exps))
        for n, x in other.exps.items():
            out.exps[n] = out.exps.get(n, 0) + x
        return out

    def valuation(self, q: int) -> int:
        return -sum(e * q ** n for n, e in self.exps.items())


def ell_exps(exps: dict, n: int, e: int) -> int:
    """Fold ell_n^e = ((-1)^n [n]...[1])^e into exps; returns the sign."""
    for i in range(1, n + 1):
        exps[i] = exps.get(i, 0) + e
    return -1 if (n * e) % 2 else 1


def eval_monos(spec: FieldSpec, monos: Iterable[Mono], N: int) -> LaurentSeries:
    total = ls_zero(spec, N)
    for mono in monos:
        if mono.coeff % spec.p:
            total = ls_add(total, bracket_series(spec, mono.exps, N, mono.coeff))
    return total


def _monos_valuation(spec: FieldSpec, monos: list[Mono]) -> int:
    live = [mo for mo in monos if mo.coeff % spec.p]
    if not live:
        return 10 ** 9
    return min(mo.valuation(spec.q) for mo in live)


def _digits(n: int, q: int) -> list[int]:
    out = []
    while n:
        n, r = divmod(n, q)
        out.append(r)
    return out


# closed forms; each returns (rule name, monomials) or None

def _sd_qj_minus_1(d: int, j: int) -> Mono:
    # ell_{d+j-1} / (ell_{j-1} ell_d^{q^j}) -- the q^j factor is applied by caller
    mo = Mono(1, {})
    mo.mul_ell(d + j - 1, 1)
    mo.mul_ell(j - 1, -1)
    return mo


def _sd_closed(spec: FieldSpec, d: int, k: int):
    q = spec.q
    # (b) k = q^j - 1
    j = round(math.log(k + 1, q)) if k > 0 else 0
    for jj in (j - 1, j, j + 1):
        if jj >= 1 and q ** jj - 1 == k:
            return "Sdqjminus1", [_sd_qj_minus_1(d, jj).mul_ell(d, -(q ** jj))]
    # (c) k = q^K - sum_{i<=s} q^{k_i}, 1 <= s < q, k_i < K
    K = 1
    while q ** K <= k:
        K += 1
    digs = _digits(q ** K - k, q)
    s = sum(digs)
    if 1 <= s < q:
        mo = Mono(1, {}).mul_ell(d, (s - 1) * q ** K)
        for ki, c in enumerate(digs):
            if c:
                f = _sd_qj_minus_1(d, K - ki).mul_ell(d, -(q ** (K - ki))).powered(q ** ki)
                mo = mo.times(f.powered(c))
        return "Sd", [mo]
    # (d) k = q + b, 1 <= b < q
    if q < k < 2 * q and d >= 1:
        b = k - q
        one = Mono(1, {}).mul_ell(d, -k)
        two = Mono(-b, {}).mul_ell(d, -k).mul_bracket(d, q).mul_bracket(1, -1)
        return "Sd-q-plus-b", [one, two]
    return None


def _sltd_qj_minus_1(d: int, j: int, q: int) -> Mono:
    # ell_{d+j-1} / (ell_j ell_{d-1}^{q^j})
    mo = Mono(1, {})
    mo.mul_ell(d + j - 1, 1)
    mo.mul_ell(j, -1)
    mo.mul_ell(d - 1, -(q ** j))
    return mo


def _sltd_split(k: int, q: int) -> tuple[int, list[int]] | None:
    """k = sum_{i=1}^s (q^K - q^{k_i}) with s <= q, k_i < K: smallest K, then s."""
    K = 1
    while q ** (K - 1) * (q - 1) <= k:
        for s in range(1, q + 1):
            r = s * q ** K - k
            if r < s:
                continue
            # exponents < K; split powers until there are exactly s of them
            parts = []
            for e, c in enumerate(_digits(r, q)):
                parts += [e] * c
            if any(e >= K for e in parts):
                hi = [e for e in parts if e >= K]
                parts = [e for e in parts if e < K]
                for e in hi:
                    # q^e = q^{K-1} * q^{e-K+1} copies
                    parts += [K - 1] * q ** (e - K + 1)
            while len(parts) < s:
                top = max(parts)
                if top == 0:
                    break
                parts.remove(top)
                parts += [top - 1] * q
            if len(parts) == s:
                return K, sorted(parts)
        K += 1
    return None


def _mt1_monos(d: int, m: int, q: int) -> list[Mono]:
    """Right side of the generating-function identity, over ell_d^{(q+m)(q-1)}."""
    k = (q + m) * (q - 1)
    one = Mono(-m, {}).mul_ell(d, -k)
    one.mul_bracket(d, q * q + (m - 1) * q).mul_bracket(d - 1, q * q)
    one.mul_bracket(1, -(q + m - 1)).mul_bracket(2, -1)
    two = Mono(1, {}).mul_ell(d, -k).mul_bracket(d, (q + m) * q).mul_bracket(1, -(q + m))
    return [one, two]


def _sb_closed(spec: FieldSpec, d: int, k: int):
    q = spec.q
    for j in range(1, 64):
        if q ** j - 1 == k:
            return "Sltdqjminus1", [_sltd_qj_minus_1(d, j, q)]
        if q ** j - 1 > k:
            break
    if k % (q - 1) == 0:
        mm = k // (q - 1)
        if 1 <= mm <= q:
            mo = Mono(1, {}).mul_ell(d, -k).mul_bracket(d, mm * q).mul_bracket(1, -mm)
            return "Sltd1", [mo]
        if q + 1 <= mm <= 2 * q + 1:
            return "mt1", _mt1_monos(d, mm - q, q)
    split = _sltd_split(k, q)
    if split is not None:
        K, ks = split
        mo = Mono(1, {})
        for ki in ks:
            mo = mo.times(_sltd_qj_minus_1(d, K - ki, q).powered(q ** ki))
        return "Sltd", [mo]
    return None


# -- dispatchers ---------------------------------------------------------------------

_lock = threading.Lock()
_SD: dict = {}
_SB: dict = {}
_IT: dict = {}
_LIMIT = [0]  # entries per cache; 0 means unbounded


def set_cache_limit(n: int):
    """Bound each power-sum cache to n entries (oldest evicted first)."""
    if n < 0:
        raise ValueError("cache limit must be >= 0")
    _LIMIT[0] = n


def clear_caches():
    with _lock:
        _SD.clear()
        _SB.clear()
        _IT.clear()


def _cache_get(cache: dict, key, N: int):
    hit = cache.get(key)
    if hit is not None and hit.N >= N:
        return ls_truncate(hit, N)
    return None


def _cache_put(cache: dict, key, value: LaurentSeries):
    with _lock:
        old = cache.get(key)
        if old is None or old.N < value.N:
            if old is None and _LIMIT[0] and len(cache) >= _LIMIT[0]:
                cache.pop(next(iter(cache)))
            cache[key] = value


def sd_rule(spec: FieldSpec, d: int, k: int) -> str:
    """Which dispatch rule ``sd`` applies first for (d, k)."""
    if d == 0:
        return "degree0"
    if k % spec.p == 0:
        return "frobenius"
    found = _sd_closed(spec, d, k)
    return found[0] if found else "bruteforce"


def sd(spec: FieldSpec, d: int, k: int, N: int) -> LaurentSeries:
    """S_d(k) to absolute precision N."""
    if d < 0 or k < 1:
        raise ValueError("need d >= 0 and k >= 1")
    if d == 0:
        return ls_one(spec, N)
    if sd_valuation_bound(spec, d, k) >= N:
        return ls_zero(spec, N)
    key = (spec, d, k)
    hit = _cache_get(_SD, key, N)
    if hit is not None:
        return hit
    p = spec.p
    if k % p == 0:
        val = ls_truncate(ls_frobenius(sd(spec, d, k // p, -(-N // p))), N)
    else:
        found = _sd_closed(spec, d, k)
        if found is not None:
            val = eval_monos(spec, found[1], N)
        else:
            val = sd_batch(spec, d, k, N)
    _cache_put(_SD, key, val)
    return val


def s_below_rule(spec: FieldSpec, d: int, k: int) -> str:
    if d <= 1:
        return "trivial"
    if k % spec.p == 0:
        return "frobenius"
    found = _sb_closed(spec, d, k)
    return found[0] if found else "prefix"


def s_below(spec: FieldSpec, d: int, k: int, N: int) -> LaurentSeries:
    """S_{<d}(k) = sum_{i<d} S_i(k) to absolute precision N."""
    if k < 1:
        raise ValueError("need k >= 1")
    if d <= 0:
        return ls_zero(spec, N)
    if d == 1:
        return ls_one(spec, N)
    key = (spec, d, k)
    hit = _cache_get(_SB, key, N)
    if hit is not None:
        return hit
    p = spec.p
    if k % p == 0:
        val = ls_truncate(ls_frobenius(s_below(spec, d, k // p, -(-N // p))), N)
    else:
        found = _sb_closed(spec, d, k)
        if found is not None:
            val = eval_monos(spec, found[1], N)
        else:
            val = ls_add(s_below(spec, d - 1, k, N), sd(spec, d - 1, k, N))
    _cache_put(_SB, key, val)
    return val


def _as_comp(comp) -> Composition:
    return comp if isinstance(comp, Composition) else Composition.of(comp)


def sd_iterated(spec: FieldSpec, d: int, comp, N: int) -> LaurentSeries:
    """S_d(k_1, ..., k_r) = S_d(k_1) * S_{<d}(k_2, ..., k_r)."""
    comp = _as_comp(comp)
    if comp.depth == 1:
        return sd(spec, d, comp[0], N)
    if d < comp.depth - 1:
        return ls_zero(spec, N)
    head = sd(spec, d, comp[0], N)
    if head.is_zero():
        return ls_zero(spec, N)
    rest = s_below_iterated(spec, d, comp.tail(), N - head.v)
    return ls_truncate(ls_mul(head, rest), N)


def s_below_iterated(spec: FieldSpec, d: int, comp, N: int) -> LaurentSeries:
    comp = _as_comp(comp)
    if comp.depth == 1:
        return s_below(spec, d, comp[0], N)
    if d <= comp.depth - 1:
        return ls_zero(spec, N)
    key = (spec, d, comp.parts)
    hit = _cache_get(_IT, key, N)
    if hit is not None:
        return hit
    val = ls_add(s_below_iterated(spec, d - 1, comp, N), sd_iterated(spec, d - 1, comp, N))
    _cache_put(_IT, key, val)
    return val


# -- identity registry ----------------------------------------------------------------

class IdentityError(ValueError):
    """Parameters violate an identity's hypotheses."""


@dataclass
class _Identity:
    name: str
    d_min: int
    # params -> (lhs(d, N) -> series, rhs monomials(d) or rhs(d, N), target valuation(d))
    build: Callable
    char2_only: bool = False


def _brute_sd(spec, d, k, N):
    return sd_batch(spec, d, k, N)


def _brute_sb(spec, d, k, N):
    return s_below_batch(spec, d, k, N)


def _need(cond: bool, msg: str):
    if not cond:
        raise IdentityError(msg)


def _id_Sd(spec, params):
    q = spec.q
    K = int(params["K"])
    ks = sorted(int(x) for x in params["ks"])
    s = len(ks)
    _need(K >= 1, "K >= 1")
    _need(1 <= s < q, f"need 1 <= s < q, got s={s}")
    _need(all(0 <= x < K for x in ks), "need 0 <= k_i < K")
    k = q ** K - sum(q ** x for x in ks)

    def lhs(d, N):
        return _brute_sd(spec, d, k, N)

    def rhs(d, N):
        ellpart = Mono(1, {}).mul_ell(d, (s - 1) * q ** K)
        vals = [sd_valuation_exact(spec, d, q ** K - q ** x) for x in ks]
        v_ell = ellpart.valuation(q)
        acc = bracket_series(spec, ellpart.exps, N - sum(vals), ellpart.coeff)
        for i, x in enumerate(ks):
            others = v_ell + sum(vals) - vals[i]
            acc = ls_mul(acc, _brute_sd(spec, d, q ** K - q ** x, N - others))
        return ls_truncate(acc, N)

    def target(d):
        ellpart = Mono(1, {}).mul_ell(d, (s - 1) * q ** K)
        return ellpart.valuation(q) + sum(sd_valuation_exact(spec, d, q ** K - q ** x) for x in ks)

    return lhs, rhs, target


def sd_valuation_exact(spec: FieldSpec, d: int, k: int) -> int:
    """Valuation of S_d(k) read off a closed form (k of the shape q^j * (q^i - 1))."""
    q = spec.q
    e = 0
    while k % q == 0:
        k //= q
        e += 1
    for j in range(1, 64):
        if q ** j - 1 == k:
            return _sd_qj_minus_1(d, j).mul_ell(d, -(q ** j)).valuation(q) * q ** e
    raise ValueError("no closed-form valuation for this k")


def _id_Sltd(spec, params):
    q = spec.q
    K = int(params["K"])
    ks = sorted(int(x) for x in params["ks"])
    s = len(ks)
    _need(K >= 1, "K >= 1")
    _need(1 <= s <= q, f"need 1 <= s <= q, got s={s}")
    _need(all(0 <= x <= K for x in ks), "need 0 <= k_i <= K")
    k = sum(q ** K - q ** x for x in ks)
    _need(k >= 1, "all k_i = K gives weight 0")

    def lhs(d, N):
        return _brute_sb(spec, d, k, N)

    def rhs(d, N):
        acc = ls_one(spec, N)
        for x in ks:
            if x < K:
                acc = ls_mul(acc, _brute_sb(spec, d, q ** K - q ** x, N))
        return ls_truncate(acc, N)

    return lhs, rhs, lambda d: 0


def _ell_norm_lhs(spec, e_ell, k, below):
    # S(k) by brute force; compared against rhs / ell_d^{e_ell}
    def lhs(d, N):
        return (_brute_sb if below else _brute_sd)(spec, d, k, N)

    return lhs


def _monos_identity(spec, lhs, monos_of_d):
    def rhs(d, N):
        return eval_monos(spec, monos_of_d(d), N)

    def target(d):
        return _monos_valuation(spec, monos_of_d(d))

    return lhs, rhs, target


def _id_Sltd1(spec, params):
    q = spec.q
    m = int(params["m"])
    _need(1 <= m <= q, f"need 1 <= m <= q, got m={m}")
    k = m * (q - 1)
    return _monos_identity(
        spec,
        _ell_norm_lhs(spec, k, k, True),
        lambda d: [Mono(1, {}).mul_ell(d, -k).mul_bracket(d, m * q).mul_bracket(1, -m)],
    )


def _id_Sdqjminus1(spec, params):
    q = spec.q
    j = int(params["j"])
    _need(j >= 1, "j >= 1")
    k = q ** j - 1
    return _monos_identity(
        spec, _ell_norm_lhs(spec, 0, k, False), lambda d: [_sd_qj_minus_1(d, j).mul_ell(d, -(q ** j))]
    )


def _id_Sltdqjminus1(spec, params):
    q = spec.q
    j = int(params["j"])
    _need(j >= 1, "j >= 1")
    k = q ** j - 1
    return _monos_identity(spec, _ell_norm_lhs(spec, 0, k, True), lambda d: [_sltd_qj_minus_1(d, j, q)])


def _id_rel1(spec, params):
    q = spec.q
    j = int(params["j"])
    _need(j >= 1, "j >= 1")
    k = q ** j - 1

    def lhs(d, N):
        # S_d(q^j - 1) [d]^{q^j}; S_d has valuation >= 0
        b = bracket_series(spec, {d: q ** j}, N)
        s = _brute_sd(spec, d, k, N + q ** (d + j))
        return ls_truncate(ls_mul(b, s), N)

    def rhs(d, N):
        b = bracket_series(spec, {j: 1}, N)
        s = _brute_sb(spec, d, k, N + q ** j)
        return ls_truncate(ls_mul(b, s), N)

    return lhs, rhs, lambda d: -(q ** j)


def _id_q_plus_b(spec, params):
    q = spec.q
    b = int(params["b"])
    _need(1 <= b < q, f"need 1 <= b < q, got b={b}")
    k = q + b

    def monos(d):
        return [
            Mono(1, {}).mul_ell(d, -k),
            Mono(-b, {}).mul_ell(d, -k).mul_bracket(d, q).mul_bracket(1, -1),
        ]

    return _monos_identity(spec, _ell_norm_lhs(spec, k, k, False), monos)


def _id_mt1(spec, params):
    q = spec.q
    m = int(params["m"])
    _need(1 <= m <= q + 1, f"need 1 <= m <= q+1, got m={m}")
    k = (q + m) * (q - 1)
    return _monos_identity(spec, _ell_norm_lhs(spec, k, k, True), lambda d: _mt1_monos(d, m, q))


def _id_mt1_1(spec, params):
    q = spec.q
    m = q - 1
    k = (q + m) * (q - 1)
    if spec.p == 2:
        def monos(d):
            mo = Mono(1, {}).mul_ell(d, -k).mul_bracket(d + 1, 1).mul_bracket(d, 2 * q * q - 2 * q)
            return [mo.mul_bracket(1, -(q - 1)).mul_bracket(2, -1)]
    else:
        def monos(d):
            return _mt1_monos(d, m, q)
    return _monos_identity(spec, _ell_norm_lhs(spec, k, k, True), monos)


def _aux(spec, k, below, brackets):
    """ell_d^k S(k) = prod [f(d)]^e; ``brackets(d)`` gives (n, e) pairs."""

    def monos(d):
        mo = Mono(1, {}).mul_ell(d, -k)
        for n, e in brackets(d):
            mo.mul_bracket(n, e)
        return [mo]

    return _monos_identity(spec, _ell_norm_lhs(spec, k, k, below), monos)


def _id_aux1(spec, params):
    q = spec.q
    return _aux(spec, q * q - 1, False, lambda d: [(d + 1, 1), (1, -1)])


def _id_aux2(spec, params):
    q = spec.q
    return _aux(spec, q * q - 1, True, lambda d: [(d + 1, 1), (d, q * q), (1, -1), (2, -1)])


def _id_aux3(spec, params):
    q = spec.q
    return _aux(spec, q - 1, True, lambda d: [(d, q), (1, -1)])


def _id_aux4(spec, params):
    q = spec.q
    _need(spec.p == 2, "this evaluation needs q even")
    k = 2 * q * q - 4 * q + 2
    return _aux(spec, k, True, lambda d: [(d, 2 * (q - 1) * q), (1, -2 * (q - 1))])


def _id_aux5(spec, params):
    q = spec.q
    k = 2 * q * q - q - 1
    return _aux(spec, k, True, lambda d: [(d + 1, 1), (d, 2 * q * q), (1, -(q + 1)), (2, -1)])


IDENTITIES = {
    "Sd": _Identity("Sd", 0, _id_Sd),
    "Sltd": _Identity("Sltd", 1, _id_Sltd),
    "Sltd1": _Identity("Sltd1", 1, _id_Sltd1),
    "Sdqjminus1": _Identity("Sdqjminus1", 0, _id_Sdqjminus1),
    "Sltdqjminus1": _Identity("Sltdqjminus1", 1, _id_Sltdqjminus1),
    "rel1": _Identity("rel1", 1, _id_rel1),
    "Sd-q-plus-b": _Identity("Sd-q-plus-b", 1, _id_q_plus_b),
    "mt1": _Identity("mt1", 1, _id_mt1),
    "mt1-1": _Identity("mt1-1", 1, _id_mt1_1),
    "proof-aux-1": _Identity("proof-aux-1", 0, _id_aux1),
    "proof-aux-2": _Identity("proof-aux-2", 1, _id_aux2),
    "proof-aux-3": _Identity("proof-aux-3", 1, _id_aux3),
    "proof-aux-4": _Identity("proof-aux-4", 1, _id_aux4, char2_only=True),
    "proof-aux-5": _Identity("proof-aux-5", 1, _id_aux5),
}


def identity_instances(spec: FieldSpec) -> list[tuple[str, dict]]:
    """The default parameter grid for every identity at this q."""
    q = spec.q
    out: list[tuple[str, dict]] = []
    for K in range(1, 4):
        for s in range(1, q):
            for ks in combinations_with_replacement(range(K), s):
                out.append(("Sd", {"K": K, "ks": list(ks)}))
    for K in range(1, 3):
        for s in range(1, q + 1):
            for ks in combinations_with_replacement(range(K + 1), s):
                if any(x < K for x in ks):
                    out.append(("Sltd", {"K": K, "ks": list(ks)}))
    out += [("Sltd1", {"m": m}) for m in range(1, q + 1)]
    for j in range(1, 4):
        out += [("Sdqjminus1", {"j": j}), ("Sltdqjminus1", {"j": j}), ("rel1", {"j": j})]
    out += [("Sd-q-plus-b", {"b": b}) for b in range(1, q)]
    out += [("mt1", {"m": m}) for m in range(1, q + 2)]
    out.append(("mt1-1", {}))
    for i in range(1, 6):
        name = f"proof-aux-{i}"
        if IDENTITIES[name].char2_only and spec.p != 2:
            continue
        out.append((name, {}))
    return out


def verify_identity(spec: FieldSpec, name: str, params: dict | None, d_values: Iterable[int], N: int = 200) -> list[dict]:
    """Check an identity at each d, comparing N coefficients past the leading term.

    Both sides are evaluated as series at absolute precision v + N, where v
    is the valuation predicted by the closed side.  The power sums are
    summed directly over monics.
    """
    if name not in IDENTITIES:
        raise IdentityError(f"unknown identity {name!r}")
    ident = IDENTITIES[name]
    params = dict(params or {})
    lhs, rhs, target = ident.build(spec, params)
    reports = []
    for d in d_values:
        if d < ident.d_min:
            raise IdentityError(f"{name} needs d >= {ident.d_min}")
        Nabs = target(d) + N
        a = lhs(d, Nabs)
        b = rhs(d, Nabs)
        ok, where, shared = ls_equal_to_precision(a, b)
        rep = {
            "identity": name,
            "params": params,
            "d": d,
            "status": "Pass" if ok else "Fail",
            "precision": shared,
        }
        if not ok:
            rep["first_mismatch_index"] = where
        reports.append(rep)
    return reports
