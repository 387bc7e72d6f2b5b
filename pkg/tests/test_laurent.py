import json
import random

import pytest
from hypothesis import given, settings, strategies as st

import oracle
from fqmz.field import make_field
from fqmz.laurent import (
    INCONCLUSIVE,
    RATIONAL,
    cf_expand,
    ls_add,
    ls_equal_to_precision,
    ls_from_coeffs,
    ls_from_rational,
    ls_frobenius,
    ls_inv,
    ls_monomial,
    ls_mul,
    ls_one,
    ls_pow,
    ls_truncate,
    ls_zero,
)
from fqmz.polyring import Poly, RationalFunction, bracket, bracket_product

SPECS = {2: (2, 1), 3: (3, 1), 4: (2, 2), 5: (5, 1)}


def field(q):
    return make_field(*SPECS[q])


def random_series(F, rng, v, N):
    coeffs = [F.element(rng.randrange(1, F.q))] + [F.element(rng.randrange(F.q)) for _ in range(N - v - 1)]
    return ls_from_coeffs(F, v, N, coeffs)


def random_poly(F, rng, deg, monic=False):
    cs = [F.element(rng.randrange(F.q)) for _ in range(deg)]
    top = F.one if monic else F.element(rng.randrange(1, F.q))
    return Poly(F, cs + [top])


# -- expansion examples ---------------------------------------------------------------


def test_one_over_t(F2):
    f = ls_from_rational(RationalFunction(Poly.one(F2), Poly.t(F2)), 5)
    assert (f.v, f.N) == (1, 5)
    assert oracle.series_of(f) == (0, 1, 0, 0, 0)


def test_geometric_expansion(F2):
    f = ls_from_rational(RationalFunction(Poly.one(F2), bracket(F2, 1)), 6)
    assert f.v == 2 and oracle.series_of(f) == (0, 0, 1, 1, 1, 1)


def test_polynomial_expansion(F3):
    f = ls_from_rational(Poly.t(F3), 4)
    assert f.v == -1 and f.N == 4
    assert [c.index for c in f.coeffs] == [1, 0, 0, 0, 0]


def test_zero_denominator(F3):
    with pytest.raises(ZeroDivisionError):
        ls_from_rational(RationalFunction(Poly.t(F3), Poly.zero(F3)), 4)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_expansion_matches_long_division(q):
    F, O = field(q), oracle.gf(q)
    rng = random.Random(q)
    for _ in range(20):
        den = random_poly(F, rng, rng.randrange(1, 12), monic=True)
        num = random_poly(F, rng, rng.randrange(0, den.degree + 1))
        N = 60
        got = ls_from_rational(RationalFunction(num, den), N)
        want = oracle.rational_expansion(O, oracle.poly_of(num), oracle.poly_of(den), N)
        assert oracle.series_of(got) == tuple(want)


# -- arithmetic ----------------------------------------------------------------------


def test_monomial_product(F3):
    a, b = ls_monomial(F3, 2, 10), ls_monomial(F3, 3, 12)
    c = ls_mul(a, b)
    assert c.v == 5 and c.N == min(2 + 12, 3 + 10)
    assert c == ls_monomial(F3, 5, 13)


def test_precision_rules(F3):
    rng = random.Random(7)
    f, g = random_series(F3, rng, 2, 30), random_series(F3, rng, -1, 25)
    assert ls_add(f, g).N == 25
    assert ls_mul(f, g).N == min(2 + 25, -1 + 30)
    inv = ls_inv(f)
    assert inv.v == -2 and inv.N == 30 - 4


def test_inverse_of_zero(F2):
    with pytest.raises(ZeroDivisionError):
        ls_inv(ls_zero(F2, 10))


def test_zero_is_a_state(F2):
    z = ls_zero(F2, 17)
    assert z.is_zero() and z.N == 17 and len(z.coeffs) == 0
    f = ls_one(F2, 17)
    assert ls_add(f, f).is_zero()


def test_series_text_and_json(F2):
    f = ls_from_rational(RationalFunction(Poly.one(F2), bracket(F2, 1)), 6)
    assert str(f) == "u^2*(1 + u + u^2 + u^3 + O(u^4))"
    assert json.loads(f.to_json()) == {"v": 2, "N": 6, "coeffs": [1, 1, 1, 1]}
    assert str(ls_zero(F2, 5)) == "O(u^5)"


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_inverse_round_trip(q):
    F = field(q)
    rng = random.Random(100 + q)
    for _ in range(10):
        f = random_series(F, rng, rng.randrange(-3, 4), 40)
        prod = ls_mul(f, ls_inv(f))
        ok, where, _ = ls_equal_to_precision(prod, ls_one(F, prod.N))
        assert ok, where


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 4]), st.integers(0, 2**32), st.integers(0, 5))
def test_mul_matches_oracle(q, seed, v):
    F, O = field(q), oracle.gf(q)
    rng = random.Random(seed)
    f, g = random_series(F, rng, v, 30), random_series(F, rng, 1, 28)
    h = ls_mul(f, g)
    want = oracle.s_mul(O, list(oracle.series_of(f)), list(oracle.series_of(g)), h.N)
    assert oracle.series_of(h) == tuple(want)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 4]), st.integers(0, 2**32))
def test_pow_p_is_frobenius_and_repeated_mul(q, seed):
    F, O = field(q), oracle.gf(q)
    rng = random.Random(seed)
    f = random_series(F, rng, rng.randrange(0, 3), 24)
    g = f
    for _ in range(F.p - 1):
        g = ls_mul(g, f)
    h = ls_pow(f, F.p)
    ok, where, _ = ls_equal_to_precision(g, h)
    assert ok, where
    assert h == ls_frobenius(f)
    s = oracle.series_of(f)
    spread = [0] * (F.p * len(s))
    for i, c in enumerate(s):
        spread[F.p * i] = O.frob(c)
    assert oracle.series_of(h)[: h.N] == tuple(spread[: h.N])


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3, 4]), st.integers(0, 2**32))
def test_precision_never_optimistic(q, seed):
    rng = random.Random(seed)
    F = field(q)
    f_hi, g_hi = random_series(F, rng, 1, 60), random_series(F, rng, 0, 60)
    f_lo, g_lo = ls_truncate(f_hi, 35), ls_truncate(g_hi, 40)
    for op in (ls_mul, ls_add, lambda a, b: ls_mul(a, ls_inv(b))):
        ok, where, _ = ls_equal_to_precision(op(f_lo, g_lo), op(f_hi, g_hi))
        assert ok, where


def test_equality_examples(F2):
    f = ls_from_rational(bracket_product(F2, {1: 1, 2: -1}), 50)
    g = ls_mul(ls_from_rational(bracket_product(F2, {1: 2, 2: -1}), 50),
               ls_from_rational(bracket_product(F2, {1: -1}), 50))
    assert ls_equal_to_precision(f, f)[0]
    assert ls_equal_to_precision(f, g)[0]
    ok, where, shared = ls_equal_to_precision(ls_monomial(F2, 2, 10), ls_monomial(F2, 3, 10))
    assert not ok and where == 2 and shared == 10


# -- continued fractions ---------------------------------------------------------------


def test_cf_example(F2):
    target = bracket_product(F2, {1: 2, 2: -1})
    res = cf_expand(ls_from_rational(target, 100))
    assert res.verdict == RATIONAL and res.reconstructed == target
    t = Poly.t(F2)
    assert target == RationalFunction((t ** 2 + t) ** 2, t ** 4 + t)


def test_cf_polynomial(F3):
    f = Poly(F3, [1, 2, 0, 1])
    res = cf_expand(ls_from_rational(f, 60))
    assert res.is_rational and res.reconstructed == RationalFunction(f)
    assert len(res.quotients) == 1


def test_cf_random_tail_is_inconclusive(F3):
    rng = random.Random(3)
    res = cf_expand(random_series(F3, rng, 0, 200))
    assert res.verdict == INCONCLUSIVE
    assert all(a.degree >= 1 for a in res.quotients[1:])


def test_cf_guard_rejects_short_agreement(F2):
    # a degree-40 function at precision 60 has no room for the guard
    rng = random.Random(11)
    den = random_poly(F2, rng, 20, monic=True)
    num = random_poly(F2, rng, 20)
    res = cf_expand(ls_from_rational(RationalFunction(num, den), 60))
    assert not res.is_rational


def test_cf_bad_arguments(F2):
    f = ls_one(F2, 30)
    with pytest.raises(ValueError):
        cf_expand(f, guard=0)
    with pytest.raises(ValueError):
        cf_expand(f, redundancy=0)
    assert not cf_expand(ls_zero(F2, 30)).is_rational


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 4]), st.integers(0, 2**32))
def test_cf_round_trip_property(q, seed):
    F, O = field(q), oracle.gf(q)
    rng = random.Random(seed)
    num = random_poly(F, rng, rng.randrange(0, 31))
    den = random_poly(F, rng, rng.randrange(0, 31), monic=True)
    res = cf_expand(ls_from_rational(RationalFunction(num, den), 200))
    assert res.is_rational
    r = res.reconstructed
    a, b = oracle.poly_of(r.num), oracle.poly_of(r.den)
    assert b[-1] == 1 and oracle.pgcd(O, a, b) == [1]
    assert oracle.pmul(O, a, oracle.poly_of(den)) == oracle.pmul(O, b, oracle.poly_of(num))
    assert all(x.degree >= 1 for x in res.quotients[1:])
