import pytest
from hypothesis import given, settings, strategies as st

import oracle
from fqmz.field import make_field
from fqmz.polyring import (
    Dn,
    L,
    Poly,
    RationalFunction,
    bracket,
    bracket_product,
    ell,
    monics,
    parse_poly,
    poly_gcd,
)

SPECS = {2: (2, 1), 3: (3, 1), 4: (2, 2), 5: (5, 1), 9: (3, 2)}


def P(F, *coeffs):
    return Poly(F, list(coeffs))


def poly_strategy(q, max_deg=12):
    return st.lists(st.integers(0, q - 1), max_size=max_deg + 1)


def to_poly(F, idx):
    return Poly(F, [F.element(i) for i in idx])


# -- examples ------------------------------------------------------------------------


def test_square_in_char_2(F2):
    t1 = P(F2, 1, 1)
    assert t1 * t1 == P(F2, 1, 0, 1)


def test_gcd_example(F3):
    assert poly_gcd(P(F3, 0, -1, 1), P(F3, 0, 1)) == Poly.t(F3)


def test_divrem_exact(F3):
    t = Poly.t(F3)
    qt, r = (t ** 3).divrem(t)
    assert qt == t ** 2 and r.is_zero()


def test_divrem_by_zero(F3):
    with pytest.raises(ZeroDivisionError):
        Poly.t(F3).divrem(Poly.zero(F3))


def test_bracket_examples(F2, F3):
    assert bracket(F2, 1) == P(F2, 0, 1, 1)
    assert bracket(F3, 1) == P(F3, 0, 2, 0, 1)
    assert bracket(F2, 2) == P(F2, 0, 1, 0, 0, 1)
    for n in (0, -1):
        with pytest.raises(ValueError):
            bracket(F2, n)


def test_ell_examples(F2, F3):
    assert ell(F2, 0).is_one()
    assert ell(F2, 1) == P(F2, 0, 1, 1)
    t = Poly.t(F3)
    assert ell(F3, 2) == (t - t ** 3) * (t - t ** 9)
    assert ell(F3, 2) == bracket(F3, 2) * bracket(F3, 1)
    assert Dn(F3, 0).is_one()


def test_monics_small(F2, F3):
    assert list(monics(F2, 0)) == [Poly.one(F2)]
    assert list(monics(F2, 1)) == [P(F2, 0, 1), P(F2, 1, 1)]
    assert len(list(monics(F3, 2))) == 9


def test_bracket_product_examples(F2):
    f = bracket_product(F2, {1: 2, 2: -1})
    assert f == RationalFunction(bracket(F2, 1) ** 2, bracket(F2, 2))
    assert bracket_product(F2, {}).is_one()
    g = bracket_product(F2, {1: 4, 2: -2})
    assert g == RationalFunction(bracket(F2, 1) ** 4, bracket(F2, 2) ** 2)
    with pytest.raises(ValueError):
        bracket_product(F2, {0: 1})


def test_text_format(F4):
    f = Poly(F4, [F4.gen, 0, 1])
    assert f.to_text() == "0.1,0.0,1.0"
    assert parse_poly(F4, f.to_text()) == f
    assert parse_poly(F4, "0").is_zero()
    assert str(P(make_field(2), 1, 1, 1)) == "t^2 + t + 1"


def test_zero_degree_sentinel(F3):
    assert Poly.zero(F3).degree == -1
    with pytest.raises(ValueError):
        Poly.zero(F3).leading


def test_rational_function_canonical(F3):
    t = Poly.t(F3)
    f = RationalFunction((t + 1) * t.scale(2), (t + 1) * (t ** 2).scale(2))
    assert f.den == t and f.num.is_one()
    with pytest.raises(ZeroDivisionError):
        RationalFunction(t, Poly.zero(F3))


# -- invariants ----------------------------------------------------------------------


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_bracket_degrees_and_recurrences(q):
    F = make_field(*SPECS[q])
    for n in range(1, 5 if q < 5 else 4):
        assert bracket(F, n).degree == q ** n and bracket(F, n).is_monic()
        assert ell(F, n).degree == sum(q ** i for i in range(1, n + 1))
        # t - t^{q^n} = -[n]
        assert ell(F, n) == -(bracket(F, n) * ell(F, n - 1))
        assert ell(F, n) == (L(F, n) if n % 2 == 0 else -L(F, n))
        assert L(F, n) == bracket(F, n) * L(F, n - 1)
        if n <= 3:
            assert Dn(F, n) == bracket(F, n) * Dn(F, n - 1) ** q


@pytest.mark.parametrize("q", [2, 3, 4])
def test_ell_against_direct_product(q):
    F = make_field(*SPECS[q])
    O = oracle.gf(q)
    for n in range(0, 3):
        direct = [1]
        for i in range(1, n + 1):
            factor = [0] * (q ** i + 1)
            factor[1] = 1
            factor[-1] = O.neg_t[1]
            direct = oracle.pmul(O, direct, factor)
        assert oracle.poly_of(ell(F, n)) == direct


@pytest.mark.parametrize("q", [2, 3, 4])
def test_monics_exhaustive(q):
    F = make_field(*SPECS[q])
    for d in range(0, 6 if q < 4 else 5):
        ms = list(monics(F, d))
        assert len(ms) == q ** d == len(set(ms))
        assert all(m.degree == d and m.is_monic() for m in ms)
        assert [oracle.poly_of(m) for m in ms] == sorted(
            (oracle.poly_of(m) for m in ms), key=lambda c: tuple(c[:-1])
        )


@pytest.mark.parametrize("q", [2, 3, 4])
def test_bracket_product_reduced(q):
    F = make_field(*SPECS[q])
    for exps in ({1: 3, 2: -1}, {1: -2, 3: 1}, {2: 2, 4: -1, 1: -3}, {1: q, 2: -1}):
        f = bracket_product(F, exps)
        assert poly_gcd(f.num, f.den).is_one() and f.den.is_monic()
        num, den = Poly.one(F), Poly.one(F)
        for n, e in exps.items():
            if e > 0:
                num = num * bracket(F, n) ** e
            else:
                den = den * bracket(F, n) ** (-e)
        assert f == RationalFunction(num, den)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 3, 4, 9]), st.data())
def test_ring_ops_match_oracle(q, data):
    F = make_field(*SPECS[q])
    O = oracle.gf(q)
    a = oracle.ptrim(data.draw(poly_strategy(q)))
    b = oracle.ptrim(data.draw(poly_strategy(q)))
    A, B = to_poly(F, a), to_poly(F, b)
    assert oracle.poly_of(A + B) == oracle.padd(O, a, b)
    assert oracle.poly_of(A * B) == oracle.pmul(O, a, b)
    if b:
        qt, r = A.divrem(B)
        assert (oracle.poly_of(qt), oracle.poly_of(r)) == tuple(oracle.pdivmod(O, a, b))
        assert r.degree < B.degree
        assert qt * B + r == A
    if a or b:
        assert oracle.poly_of(poly_gcd(A, B)) == oracle.pgcd(O, a, b)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 3, 4]), st.integers(0, 9), st.data())
def test_pow_and_frobenius(q, n, data):
    F = make_field(*SPECS[q])
    A = to_poly(F, data.draw(poly_strategy(q, 6)))
    r = Poly.one(F)
    for _ in range(n):
        r = r * A
    assert A ** n == r
    assert A.frobenius() == A ** F.p


@pytest.mark.parametrize("q,n", [(2, 1300), (3, 700), (4, 600)])
def test_large_products_cross_the_karatsuba_threshold(q, n):
    import random

    F = make_field(*SPECS[q])
    O = oracle.gf(q)
    rng = random.Random(q * 1000 + n)
    a = [rng.randrange(q) for _ in range(n)] + [1]
    b = [rng.randrange(q) for _ in range(n - 37)] + [1]
    assert oracle.poly_of(to_poly(F, a) * to_poly(F, b)) == oracle.pmul(O, a, b)
