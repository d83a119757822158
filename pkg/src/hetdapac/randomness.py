"""Random sources.

Every random decision in the package goes through ``source.choice(n)``,
which returns an integer uniform on ``range(n)``. Two sources implement it:

* :class:`SeededSource` for ordinary runs, a domain-separated PRNG stream;
* :class:`Odometer` for exact audits, which replays a function once per
  leaf of its decision tree so every outcome is visited exactly once.

:class:`UserRandom` builds the user's private permutations and coefficient
vectors on top of a source, lazily and memoized by key, so that a
computation that only looks at part of the user's randomness only
enumerates that part.
"""
from __future__ import annotations

import hashlib
import random
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable

from .errors import DomainTooLarge

DEFAULT_ENUMERATION_BOUND = 1 << 24


def derive_seed(master: int, *domain) -> int:
    """64-bit seed for a named sub-stream of ``master``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master)).encode())
    for part in domain:
        h.update(b"\x1f")
        h.update(repr(part).encode())
    return int.from_bytes(h.digest(), "big")


class SeededSource:
    def __init__(self, seed: int):
        self.seed = seed
        self._rng = random.Random(seed)

    def choice(self, n: int) -> int:
        return self._rng.randrange(n)


class Odometer:
    """Depth-first walk over every sequence of choices a function makes.

    The function under enumeration must be deterministic given its
    choices. Each completed pass contributes one leaf whose probability is
    the product of ``1/n`` over the choices taken on that path.
    """

    def __init__(self):
        self._path: list[list[int]] = []
        self._pos = 0

    def choice(self, n: int) -> int:
        i = self._pos
        self._pos += 1
        if i < len(self._path):
            c, m = self._path[i]
            if m == n:
                return c
            del self._path[i:]
        self._path.append([0, n])
        return 0

    def _leaf_denominator(self) -> int:
        d = 1
        for _, n in self._path[: self._pos]:
            d *= n
        return d

    def _advance(self) -> bool:
        del self._path[self._pos:]
        while self._path:
            last = self._path[-1]
            if last[0] + 1 < last[1]:
                last[0] += 1
                return True
            self._path.pop()
        return False

    def run(self, fn: Callable[["Odometer"], Hashable], bound: int = DEFAULT_ENUMERATION_BOUND):
        """Yield ``(outcome, denominator)`` for every leaf of ``fn``."""
        first = True
        while True:
            self._pos = 0
            outcome = fn(self)
            denom = self._leaf_denominator()
            if first:
                # leaf count equals the first path's denominator when the
                # branching structure does not depend on the values drawn
                if denom > bound:
                    raise DomainTooLarge(f"enumeration domain of {denom} states exceeds bound {bound}")
                first = False
            yield outcome, denom
            if not self._advance():
                return


def enumerate_distribution(fn: Callable[[Odometer], Hashable],
                           bound: int = DEFAULT_ENUMERATION_BOUND) -> tuple[dict, int]:
    """Exact distribution of ``fn``'s outcome, plus the number of leaves visited."""
    counts: dict = defaultdict(lambda: defaultdict(int))
    leaves = 0
    for outcome, denom in Odometer().run(fn, bound):
        counts[outcome][denom] += 1
        leaves += 1
        if leaves > bound:
            raise DomainTooLarge(f"enumeration exceeded {bound} states")
    dist = {o: sum(Fraction(c, d) for d, c in per.items()) for o, per in counts.items()}
    return dist, leaves


@dataclass(frozen=True)
class CoeffSpec:
    """Shape of one coefficient vector: its length and which coordinates must be nonzero."""
    length: int
    nonzero: tuple[int, ...] = ()


class UserRandom:
    """The user's private randomness: sub-packet permutations and coefficient vectors.

    ``perm_value(v, slot, P)`` returns the real sub-packet index that the
    permutation of message ``v`` places at position ``slot``. Values are
    drawn lazily one slot at a time, uniformly among the indices not yet
    taken, which yields a uniform permutation however the slots are visited.
    """

    def __init__(self, perm_source, coeff_source, q: int, identity_perms: bool = False):
        self.perm_source = perm_source
        self.coeff_source = coeff_source
        self.q = q
        # test hook: every permutation is the identity, so indices equal slots
        self.identity_perms = identity_perms
        self._perms: dict[Hashable, dict[int, int]] = {}
        self._coeffs: dict[Hashable, tuple[int, ...]] = {}

    @classmethod
    def seeded(cls, seed: int, q: int) -> "UserRandom":
        return cls(SeededSource(derive_seed(seed, "user-perm")),
                   SeededSource(derive_seed(seed, "user-coeff")), q)

    @classmethod
    def enumerating(cls, source: Odometer, q: int) -> "UserRandom":
        return cls(source, source, q)

    def perm_value(self, v: Hashable, slot: int, P: int) -> int:
        taken = self._perms.setdefault(v, {})
        if slot in taken:
            return taken[slot]
        if not 0 <= slot < P:
            raise ValueError(f"slot {slot} outside [0, {P})")
        if self.identity_perms:
            taken[slot] = slot
            return slot
        used = set(taken.values())
        free = [i for i in range(P) if i not in used]
        value = free[self.perm_source.choice(len(free))]
        taken[slot] = value
        return value

    def permutation(self, v: Hashable, P: int) -> tuple[int, ...]:
        return tuple(self.perm_value(v, s, P) for s in range(P))

    def coeffs(self, key: Hashable, spec: CoeffSpec) -> tuple[int, ...]:
        got = self._coeffs.get(key)
        if got is None:
            nz = set(spec.nonzero)
            q = self.q
            got = tuple(1 + self.coeff_source.choice(q - 1) if j in nz else self.coeff_source.choice(q)
                        for j in range(spec.length))
            self._coeffs[key] = got
        return got
