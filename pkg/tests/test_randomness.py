import itertools
from collections import Counter
from fractions import Fraction

import pytest

from hetdapac.errors import DomainTooLarge
from hetdapac.randomness import CoeffSpec, Odometer, UserRandom, derive_seed, enumerate_distribution


def test_derive_seed_separates_domains():
    assert derive_seed(1, "msg") != derive_seed(1, "pool")
    assert derive_seed(1, "msg") == derive_seed(1, "msg")
    assert derive_seed(1, "msg") != derive_seed(2, "msg")


def test_odometer_visits_every_leaf_once():
    def fn(src):
        a = src.choice(3)
        b = src.choice(2) if a else 0
        return a, b
    dist, leaves = enumerate_distribution(fn)
    assert leaves == 5
    assert dist == {(0, 0): Fraction(1, 3), (1, 0): Fraction(1, 6), (1, 1): Fraction(1, 6),
                    (2, 0): Fraction(1, 6), (2, 1): Fraction(1, 6)}


def test_odometer_bound():
    with pytest.raises(DomainTooLarge):
        enumerate_distribution(lambda s: (s.choice(100), s.choice(100)), bound=999)


@pytest.mark.parametrize("order", [(0, 1, 2, 3), (3, 1, 0, 2), (2, 0)])
def test_lazy_permutation_is_uniform(order):
    P = 4

    def fn(src):
        r = UserRandom.enumerating(src, 2)
        return tuple(r.perm_value("v", s, P) for s in order)
    dist, _ = enumerate_distribution(fn)
    outcomes = list(itertools.permutations(range(P), len(order)))
    assert set(dist) == set(outcomes)
    assert set(dist.values()) == {Fraction(1, len(outcomes))}


def test_identity_hook():
    r = UserRandom(Odometer(), Odometer(), 5, identity_perms=True)
    assert r.permutation("v", 6) == tuple(range(6))


def test_nonzero_coefficients():
    dist, _ = enumerate_distribution(lambda s: UserRandom.enumerating(s, 3).coeffs("k", CoeffSpec(2, (1,))))
    assert set(dist) == {(a, b) for a in range(3) for b in (1, 2)}
    assert set(dist.values()) == {Fraction(1, 6)}


def test_coefficients_memoized_by_key():
    r = UserRandom.seeded(4, 257)
    assert r.coeffs("k", CoeffSpec(3)) == r.coeffs("k", CoeffSpec(3))


def test_seeded_permutations_roughly_uniform():
    counts = Counter(UserRandom.seeded(s, 2).permutation("v", 3) for s in range(3000))
    assert len(counts) == 6
    assert min(counts.values()) > 400
