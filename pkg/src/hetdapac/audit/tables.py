"""Exact probability tables and the distances computed between them."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Sequence

from ..errors import DomainTooLarge
from ..randomness import DEFAULT_ENUMERATION_BOUND, Odometer, enumerate_distribution


@dataclass
class DistributionTable:
    probs: dict[Hashable, Fraction]
    domain: dict = field(default_factory=dict)

    def __post_init__(self):
        total = sum(self.probs.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @classmethod
    def enumerate(cls, fn: Callable[[Odometer], Hashable], bound: int = DEFAULT_ENUMERATION_BOUND,
                  **domain) -> "DistributionTable":
        probs, leaves = enumerate_distribution(fn, bound)
        return cls(probs, {"states": leaves, **domain})

    @classmethod
    def point(cls, outcome: Hashable) -> "DistributionTable":
        return cls({outcome: Fraction(1)}, {"states": 1})

    def __eq__(self, other):
        return isinstance(other, DistributionTable) and self.probs == other.probs

    def __len__(self):
        return len(self.probs)


def tv_distance(p: DistributionTable, q: DistributionTable) -> Fraction:
    keys = set(p.probs) | set(q.probs)
    zero = Fraction(0)
    return sum((abs(p.probs.get(k, zero) - q.probs.get(k, zero)) for k in keys), zero) / 2


def max_pairwise_tv(tables: Sequence[DistributionTable]) -> Fraction:
    best = Fraction(0)
    for a, b in itertools.combinations(tables, 2):
        if a.probs is b.probs:
            continue
        best = max(best, tv_distance(a, b))
    return best


def product(tables: Sequence[DistributionTable], bound: int = DEFAULT_ENUMERATION_BOUND) -> DistributionTable:
    """Joint table of independent components; outcomes are tuples."""
    size = math.prod(len(t) for t in tables)
    if size > bound:
        raise DomainTooLarge(f"product table of {size} outcomes exceeds bound {bound}")
    probs: dict = {(): Fraction(1)}
    for t in tables:
        probs = {o + (x,): p * px for o, p in probs.items() for x, px in t.probs.items()}
    return DistributionTable(probs, {"states": size})


def mutual_information_bits(conditionals: Sequence[DistributionTable]) -> float:
    """I(X; H) for H uniform over the conditioning values, in bits."""
    n = len(conditionals)
    if n <= 1:
        return 0.0
    marginal: dict = {}
    for t in conditionals:
        for x, p in t.probs.items():
            marginal[x] = marginal.get(x, Fraction(0)) + p / n
    mi = 0.0
    for t in conditionals:
        for x, p in t.probs.items():
            if p:
                mi += float(p / n) * math.log2(p / marginal[x])
    return max(mi, 0.0)


Signature = dict[tuple[Fraction, ...], int]


def signature(tables: Sequence[DistributionTable]) -> Signature:
    """Histogram of per-outcome probability tuples across aligned tables.

    Entry ``(p_1, ..., p_n) -> c`` means ``c`` outcomes have probability
    ``p_i`` under table ``i``. Distances between the tables and their mutual
    information depend only on this histogram.
    """
    zero = Fraction(0)
    outcomes = set().union(*(t.probs for t in tables))
    hist: Signature = {}
    for x in outcomes:
        key = tuple(t.probs.get(x, zero) for t in tables)
        hist[key] = hist.get(key, 0) + 1
    return hist


def signature_product(sigs: Sequence[Signature]) -> Signature:
    """Signature of the product of independent factors, from the factors' signatures."""
    out: Signature = {(): 1} if not sigs else None
    for sig in sigs:
        if out is None:
            out = dict(sig)
            continue
        nxt: Signature = {}
        for a, ca in out.items():
            for b, cb in sig.items():
                key = tuple(x * y for x, y in zip(a, b))
                nxt[key] = nxt.get(key, 0) + ca * cb
        out = nxt
    return out


def signature_max_tv(sig: Signature) -> Fraction:
    n = len(next(iter(sig)))
    best = Fraction(0)
    for i, j in itertools.combinations(range(n), 2):
        d = sum((c * abs(k[i] - k[j]) for k, c in sig.items()), Fraction(0)) / 2
        best = max(best, d)
    return best


def signature_mi_bits(sig: Signature) -> float:
    """I(X; H) in bits for H uniform over the signature's columns."""
    n = len(next(iter(sig)))
    if n <= 1:
        return 0.0
    mi = 0.0
    for k, c in sig.items():
        m = sum(k, Fraction(0)) / n
        for p in k:
            if p:
                mi += c * float(p / n) * math.log2(p / m)
    return max(mi, 0.0)
