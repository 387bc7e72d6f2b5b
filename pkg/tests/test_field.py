import pytest
from hypothesis import given, strategies as st

import oracle
from fqmz.field import (
    FieldError,
    FieldMismatch,
    ff_add,
    ff_inv,
    ff_mul,
    ff_pow,
    frobenius,
    make_field,
    parse_field,
)

ALL_Q = {2: (2, 1), 3: (3, 1), 4: (2, 2), 5: (5, 1), 8: (2, 3), 9: (3, 2)}


def fields():
    return [make_field(p, m) for p, m in ALL_Q.values()]


# -- construction ----------------------------------------------------------------


def test_prime_field():
    F = make_field(2, 1)
    assert F.q == 2 and F.m == 1


def test_f4_from_explicit_reduction():
    F = make_field(2, 2, (1, 1, 1))
    assert F.q == 4


def test_f9_reduction_has_no_root_mod_3():
    # x^2 + 1 has no root in F_3, so it is irreducible of degree 2
    assert all((x * x + 1) % 3 for x in range(3))
    assert make_field(3, 2, (1, 0, 1)).q == 9


def test_builtin_reductions():
    assert make_field(2, 2).reduction == (1, 1, 1)
    assert make_field(2, 3).reduction == (1, 1, 0, 1)
    assert make_field(3, 2).reduction == (1, 0, 1)


@pytest.mark.parametrize("p", [1, 4, 6, 9, 15])
def test_non_prime_rejected(p):
    with pytest.raises(FieldError):
        make_field(p)


def test_reducible_reduction_rejected():
    # x^2 + 1 = (x + 1)^2 over F_2
    with pytest.raises(FieldError):
        make_field(2, 2, (1, 0, 1))


def test_wrong_degree_reduction_rejected():
    with pytest.raises(FieldError):
        make_field(2, 2, (1, 1, 0, 1))


def test_missing_builtin_rejected():
    with pytest.raises(FieldError):
        make_field(5, 2)


def test_parse_field():
    assert parse_field("q=4") == make_field(2, 2)
    assert parse_field("4:1,1,1") == make_field(2, 2)
    assert parse_field("q=9:1,0,1").q == 9
    assert parse_field("3").designation() == "q=3"
    assert make_field(2, 2).designation() == "q=4:1,1,1"
    for bad in ("q=6", "q=x", "q=1"):
        with pytest.raises(FieldError):
            parse_field(bad)


# -- examples ----------------------------------------------------------------------


def test_one_plus_one_in_f2():
    F = make_field(2)
    assert ff_add(F.one, F.one) == F.zero


def test_x_squared_in_f4():
    F = make_field(2, 2)
    assert ff_mul(F.gen, F.gen) == F((1, 1))


def test_f9_square_of_x_plus_one():
    F = make_field(3, 2, (1, 0, 1))
    a = F((1, 1))
    assert ff_mul(a, a) == F((0, 2))


def test_frobenius_examples():
    F4 = make_field(2, 2)
    assert frobenius(F4.gen) == F4((1, 1))
    F2 = make_field(2)
    assert frobenius(F2.one) == F2.one


def test_inverse_of_zero():
    F = make_field(3)
    with pytest.raises(ZeroDivisionError):
        ff_inv(F.zero)


def test_mixed_fields():
    with pytest.raises(FieldMismatch):
        ff_add(make_field(2).one, make_field(3).one)
    with pytest.raises(FieldMismatch):
        make_field(2, 2).gen * make_field(2, 3).gen


# -- exhaustive properties against the table oracle ------------------------------


@pytest.mark.parametrize("q", sorted(ALL_Q))
def test_tables_match_oracle(q):
    F = make_field(*ALL_Q[q])
    O = oracle.gf(q)
    for a in range(q):
        for b in range(q):
            x, y = F.element(a), F.element(b)
            assert ff_add(x, y).index == O.add(a, b)
            assert ff_mul(x, y).index == O.mul(a, b)
        if a:
            assert ff_inv(F.element(a)).index == O.inv(a)


@pytest.mark.parametrize("F", fields(), ids=repr)
def test_field_axioms_exhaustive(F):
    els = F.elements()
    for a in els:
        assert a + F.zero == a and a * F.one == a
        if a:
            assert a * ff_inv(a) == F.one
            assert ff_pow(a, F.q - 1) == F.one
        for b in els:
            assert a + b == b + a and a * b == b * a
            assert ff_pow(a + b, F.p) == ff_pow(a, F.p) + ff_pow(b, F.p)
            for c in els:
                assert (a + b) + c == a + (b + c)
                assert (a * b) * c == a * (b * c)
                assert a * (b + c) == a * b + a * c


@pytest.mark.parametrize("F", fields(), ids=repr)
def test_frobenius_has_order_m(F):
    for a in F.elements():
        x = a
        for _ in range(F.m):
            x = frobenius(x)
        assert x == a
        assert frobenius(a) == ff_pow(a, F.p)


@given(st.sampled_from(sorted(ALL_Q)), st.integers(0, 80), st.data())
def test_pow_matches_repeated_product(q, n, data):
    F = make_field(*ALL_Q[q])
    a = F.element(data.draw(st.integers(0, q - 1)))
    r = F.one
    for _ in range(n):
        r = r * a
    assert ff_pow(a, n) == r


def test_elements_are_values():
    F = make_field(2, 2)
    assert hash(F((1, 1))) == hash(F.element(3))
    assert F(5) == F.one
    with pytest.raises(FieldError):
        F((1, 0, 1))
