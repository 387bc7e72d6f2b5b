"""Array kernels over F_q on ``(n, m)`` coordinate arrays.

Row i holds the power-basis coordinates of the i-th coefficient.  All
results are reduced mod p.
"""
from __future__ import annotations

import numpy as np

from .field import FieldSpec

KARATSUBA_THRESHOLD = 512


def zeros(spec: FieldSpec, n: int) -> np.ndarray:
    return np.zeros((n, spec.m), dtype=np.int64)


def _karatsuba(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # plain integer convolution, no reduction
    if len(a) < len(b):
        a, b = b, a
    if len(b) <= KARATSUBA_THRESHOLD:
        return np.convolve(a, b)
    out = np.zeros(len(a) + len(b) - 1, dtype=np.int64)
    if len(a) > 2 * len(b):
        # unbalanced: chop the long operand
        step = len(b)
        for i in range(0, len(a), step):
            part = _karatsuba(a[i:i + step], b)
            out[i:i + len(part)] += part
        return out
    h = len(a) // 2
    a0, a1 = a[:h], a[h:]
    b0, b1 = b[:h], b[h:]
    z0 = _karatsuba(a0, b0)
    if len(b1) == 0:
        mid = _karatsuba(a1, b0)
        out[:len(z0)] += z0
        out[h:h + len(mid)] += mid
        return out
    z2 = _karatsuba(a1, b1)
    sa = np.zeros(max(len(a0), len(a1)), dtype=np.int64)
    sa[:len(a0)] += a0
    sa[:len(a1)] += a1
    sb = np.zeros(max(len(b0), len(b1)), dtype=np.int64)
    sb[:len(b0)] += b0
    sb[:len(b1)] += b1
    z1 = _karatsuba(sa, sb)
    z1[:len(z0)] -= z0
    z1[:len(z2)] -= z2
    out[:len(z0)] += z0
    out[h:h + len(z1)] += z1
    out[2 * h:2 * h + len(z2)] += z2
    return out


def fp_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Integer convolution; Karatsuba above the threshold."""
    if min(len(a), len(b)) > KARATSUBA_THRESHOLD:
        return _karatsuba(a, b)
    return np.convolve(a, b)


def convolve(spec: FieldSpec, a: np.ndarray, b: np.ndarray, n: int | None = None) -> np.ndarray:
    """Product of coefficient arrays, optionally truncated to n terms."""
    if len(a) == 0 or len(b) == 0:
        return zeros(spec, 0 if n is None else min(n, 0))
    if n is not None:
        a, b = a[:n], b[:n]
    m, p = spec.m, spec.p
    L = len(a) + len(b) - 1
    if m == 1:
        out = fp_convolve(a[:, 0], b[:, 0]) % p
        out = out.reshape(-1, 1)
    else:
        slots = np.zeros((2 * m - 1, L), dtype=np.int64)
        for i in range(m):
            ai = a[:, i]
            if not ai.any():
                continue
            for j in range(m):
                bj = b[:, j]
                if bj.any():
                    slots[i + j] += fp_convolve(ai, bj)
        out = spec.reduce_slots(slots).T.copy()
    if n is not None:
        out = out[:n]
    return out


def scale(spec: FieldSpec, c, a: np.ndarray) -> np.ndarray:
    """Multiply every coefficient by the scalar with coordinates ``c``."""
    if spec.m == 1:
        return (a * int(c[0])) % spec.p
    M = spec.mul_matrix(tuple(int(x) for x in c))
    return (a @ M.T) % spec.p


def frob(spec: FieldSpec, a: np.ndarray) -> np.ndarray:
    """Apply x -> x^p coefficientwise."""
    if spec.m == 1:
        return a
    return (a @ spec.frob_matrix.T) % spec.p


def inv_coords(spec: FieldSpec, c) -> np.ndarray:
    idx = spec.index_of(c)
    if idx == 0:
        raise ZeroDivisionError("inverse of 0")
    return spec.inv_table[idx]


def series_inverse(spec: FieldSpec, h: np.ndarray, n: int) -> np.ndarray:
    """First n coefficients of 1/h for a power series h with h[0] != 0."""
    p = spec.p
    h = h[:n]
    g = zeros(spec, 1)
    g[0] = inv_coords(spec, h[0])
    k = 1
    two = zeros(spec, 1)
    two[0, 0] = 2 % p
    while k < n:
        k2 = min(2 * k, n)
        hg = convolve(spec, h, g, k2)
        # 2 - h*g
        e = (-hg) % p
        e[0] = (e[0] + two[0]) % p
        g = convolve(spec, g, e, k2)
        k = k2
    if len(g) < n:
        # h was a polynomial shorter than n; pad with the known zeros
        g = np.concatenate([g, zeros(spec, n - len(g))])
    return g[:n]


def spread(spec: FieldSpec, a: np.ndarray, e: int = 1) -> np.ndarray:
    """Frobenius on a power series: coefficient i moves to p^e * i."""
    step = spec.p ** e
    if len(a) == 0:
        return a.copy()
    out = zeros(spec, (len(a) - 1) * step + 1)
    b = a
    for _ in range(e):
        b = frob(spec, b)
    out[::step] = b
    return out
