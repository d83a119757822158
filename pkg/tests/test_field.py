import itertools

import pytest
from hypothesis import given, strategies as st

from hetdapac.errors import DimensionError, DivisionByZero, FieldMismatch
from hetdapac.field import FieldElement, FieldPrime, arith, dot, is_prime


def test_add_wraps():
    F = FieldPrime(5)
    assert arith("add", F(3), F(4)) == F(2)


def test_inverse_of_two_mod_five():
    F = FieldPrime(5)
    assert arith("inv", F(2)) == F(3)


def test_every_inverse_mod_seven():
    F = FieldPrime(7)
    for a in range(1, 7):
        assert arith("mul", arith("inv", F(a)), F(a)) == F(1)


def test_inverse_of_zero_raises():
    with pytest.raises(DivisionByZero):
        arith("inv", FieldPrime(7)(0))
    with pytest.raises(ZeroDivisionError):
        FieldPrime(7).inv(0)


def test_mixed_moduli_rejected():
    with pytest.raises(FieldMismatch):
        arith("add", FieldPrime(5)(1), FieldPrime(7)(1))


@pytest.mark.parametrize("q", [1, 4, 9, 65536, 65537, 1 << 16 + 1])
def test_bad_modulus(q):
    with pytest.raises(ValueError):
        FieldPrime(q)


def test_primality_against_sieve():
    sieve = [True] * 2000
    sieve[0] = sieve[1] = False
    for i in range(2, 2000):
        if sieve[i]:
            for j in range(i * i, 2000, i):
                sieve[j] = False
    assert [n for n in range(2000) if is_prime(n)] == [n for n in range(2000) if sieve[n]]


def test_dot_unit_vector_selects_row():
    F = FieldPrime(7)
    assert dot([F(1), F(0)], [[F(5), F(2)], [F(3), F(3)]]) == [F(5), F(2)]


def test_dot_zero_coefficients():
    F = FieldPrime(7)
    assert F.dot([0, 0], [[4, 5, 6], [1, 2, 3]]) == (0, 0, 0)


def test_dot_hand_expansion():
    F = FieldPrime(7)
    assert dot([F(2), F(3)], [[F(1), F(4)], [F(5), F(6)]]) == [F(3), F(5)]


def test_dot_dimension_mismatch():
    with pytest.raises(DimensionError):
        FieldPrime(7).dot([1, 2, 3], [[1], [2]])
    with pytest.raises(DimensionError):
        FieldPrime(7).dot([1, 2], [[1, 2], [3]])


@pytest.mark.parametrize("q", [2, 3, 5, 7])
def test_ring_laws_exhaustive(q):
    F = FieldPrime(q)
    for a, b, c in itertools.product(range(q), repeat=3):
        assert F.add(a, b) == F.add(b, a)
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert sorted(F.inv(a) for a in range(1, q)) == list(range(1, q))


@given(st.sampled_from([2, 3, 257, 65521]), st.integers(0, 1 << 20), st.integers(0, 1 << 20))
def test_element_operators_match_int_arithmetic(q, x, y):
    F = FieldPrime(q)
    a, b = F(x % q), F(y % q)
    assert int(a + b) == (x + y) % q
    assert int(a - b) == (x - y) % q
    assert int(a * b) == (x * y) % q
    assert int(-a) == (-x) % q
    if int(b):
        assert (a / b) * b == a


def test_element_range_invariant():
    F = FieldPrime(5)
    assert F(12) == F(2)
    with pytest.raises(ValueError):
        FieldElement(5, F)
    with pytest.raises(ValueError):
        F.check(5)
