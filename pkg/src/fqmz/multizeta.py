"""Multizeta values zeta(s_1, ..., s_r) = sum_d S_d(s_1, ..., s_r) in F_q((1/t))."""
from __future__ import annotations

import threading
from dataclasses import dataclass

from .field import FieldSpec
from .laurent import CFResult, LaurentSeries, cf_expand, ls_add, ls_div, ls_inv, ls_mul, ls_truncate, ls_zero
from .powersum import Composition, sd_iterated, sd_valuation_bound

__all__ = [
    "ZetaValue",
    "zeta",
    "zeta_ratio",
    "zeta_inverse",
    "frobenius_twist",
    "terms_needed",
    "default_precision",
    "clear_zeta_cache",
]


@dataclass(frozen=True)
class ZetaValue:
    comp: Composition
    series: LaurentSeries
    terms_summed: int
    N: int


_lock = threading.Lock()
_ZETA: dict = {}
_INV: dict = {}


def clear_zeta_cache():
    with _lock:
        _ZETA.clear()
        _INV.clear()


def default_precision(weight: int) -> int:
    return max(8 * weight, 160)


def terms_needed(spec: FieldSpec, comp: Composition, N: int) -> int:
    """Largest d whose term can reach below u^N.

    v(S_d(s_1, ...)) >= s_1 d + B(d), and the bound increases with d, so
    every term past the first d with s_1 d + B(d) >= N is O(u^N).
    """
    d = 0
    while sd_valuation_bound(spec, d + 1, comp[0]) < N:
        d += 1
    return d


def _comp(c) -> Composition:
    return c if isinstance(c, Composition) else Composition.of(c)


def zeta(spec: FieldSpec, comp, N: int) -> ZetaValue:
    comp = _comp(comp)
    key = (spec, comp.parts)
    hit = _ZETA.get(key)
    if hit is not None and hit.N >= N:
        return ZetaValue(comp, ls_truncate(hit.series, N), min(hit.terms_summed, terms_needed(spec, comp, N)), N)
    D = terms_needed(spec, comp, N)
    total = ls_zero(spec, N)
    for d in range(comp.depth - 1, D + 1):
        total = ls_add(total, sd_iterated(spec, d, comp, N))
    val = ZetaValue(comp, total, D, N)
    with _lock:
        old = _ZETA.get(key)
        if old is None or old.N < N:
            _ZETA[key] = val
    return val


def zeta_inverse(spec: FieldSpec, comp, N: int) -> LaurentSeries:
    comp = _comp(comp)
    key = (spec, comp.parts, N)
    hit = _INV.get(key)
    if hit is None:
        z = zeta(spec, comp, N).series
        if z.is_zero():
            raise ArithmeticError(f"zeta{comp} vanished to precision {N}")
        hit = ls_inv(z)
        with _lock:
            _INV[key] = hit
    return hit


def zeta_ratio(spec: FieldSpec, a, b, N: int, guard: int = 20, redundancy: int = 2) -> tuple[LaurentSeries, CFResult]:
    """zeta(a)/zeta(b) and its continued-fraction verdict.

    If zeta(b) is zero to precision N the ratio is unknown: the returned
    series is zero to precision and the verdict Inconclusive.
    """
    a, b = _comp(a), _comp(b)
    if a.weight != b.weight:
        raise ValueError(f"weights differ: {a} has {a.weight}, {b} has {b.weight}")
    za = zeta(spec, a, N).series
    try:
        inv = zeta_inverse(spec, b, N)
    except ArithmeticError as exc:
        return ls_zero(spec, N), CFResult(reason=str(exc))
    ratio = ls_mul(za, inv)
    return ratio, cf_expand(ratio, guard, redundancy)


def frobenius_twist(comp, e: int = 1, p: int = 2) -> Composition:
    """Multiply every part by p^e; zeta of the result is zeta(comp)^(p^e)."""
    if e < 0:
        raise ValueError("e must be >= 0")
    return _comp(comp).scaled(p ** e)
