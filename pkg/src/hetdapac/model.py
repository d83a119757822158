"""System configuration, attribute vectors, database views and protocol carriers.

Attribute vectors are tuples of 0-based value indices, one per attribute;
``v[n - 1]`` indexes the alphabet of attribute ``n``. Servers are numbered
``1..D`` (dedicated) and ``D + 1`` (central), as in the protocol description.
Message keys are attribute vectors, so a view is a set of such tuples.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

from .errors import ConfigError, VerificationFailed
from .field import FieldPrime
from .randomness import derive_seed

Key = tuple[int, ...]


@dataclass(frozen=True)
class SystemConfig:
    N: int
    D: int
    K: int
    q: int = 257
    L: int = 1
    alphabets: tuple[tuple[str, ...], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.N < 1 or self.K < 1:
            raise ConfigError("N and K must be positive")
        if not 1 <= self.D <= self.N:
            raise ConfigError(f"need 1 <= D <= N, got D={self.D}, N={self.N}")
        if self.L < 1:
            raise ConfigError("message length L must be positive")
        try:
            FieldPrime(self.q)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.alphabets:
            object.__setattr__(self, "alphabets", tuple(
                tuple(str(k + 1) for k in range(self.K)) for _ in range(self.N)))
        alph = tuple(tuple(str(x) for x in a) for a in self.alphabets)
        object.__setattr__(self, "alphabets", alph)
        if len(alph) != self.N:
            raise ConfigError(f"expected {self.N} alphabets, got {len(alph)}")
        for n, a in enumerate(alph, 1):
            if len(a) != self.K or len(set(a)) != self.K:
                raise ConfigError(f"alphabet {n} must list {self.K} distinct labels, got {a}")

    @property
    def field(self) -> FieldPrime:
        return FieldPrime(self.q)

    def replace(self, **changes) -> "SystemConfig":
        params = dict(N=self.N, D=self.D, K=self.K, q=self.q, L=self.L,
                      alphabets=self.alphabets, seed=self.seed)
        if "N" in changes or "K" in changes:
            params["alphabets"] = ()
        params.update(changes)
        return SystemConfig(**params)

    def keys(self) -> Iterator[Key]:
        """All ``K**N`` message keys in canonical order."""
        return itertools.product(range(self.K), repeat=self.N)

    def label(self, v: Sequence[int]) -> str:
        labels = [self.alphabets[n][k] for n, k in enumerate(v)]
        sep = "" if all(len(x) == 1 for x in labels) else ","
        return sep.join(labels)

    def parse_vector(self, text: str | Sequence[str]) -> Key:
        """Parse labels such as ``"a2y"``, ``"a,2,y"`` or ``["a", "2", "y"]``."""
        if isinstance(text, str):
            parts = text.split(",") if "," in text else list(text)
        else:
            parts = [str(x) for x in text]
        parts = [p.strip() for p in parts]
        if len(parts) != self.N:
            raise ConfigError(f"attribute vector needs {self.N} labels, got {parts}")
        out = []
        for n, p in enumerate(parts):
            try:
                out.append(self.alphabets[n].index(p))
            except ValueError:
                raise ConfigError(f"{p!r} is not in alphabet {n + 1} {self.alphabets[n]}") from None
        return tuple(out)


def validate_vector(cfg: SystemConfig, v: Sequence[int]) -> Key:
    v = tuple(v)
    if len(v) != cfg.N or any(not isinstance(k, int) or not 0 <= k < cfg.K for k in v):
        raise ConfigError(f"{v} is not a valid attribute vector for N={cfg.N}, K={cfg.K}")
    return v


def canonical_order(keys: Iterable[Key]) -> list[Key]:
    """Lexicographic order on attribute index tuples, shared by user and servers."""
    out = sorted(set(keys))
    if not out:
        raise ValueError("cannot order an empty key set")
    return out


def keys_matching(cfg: SystemConfig, fixed: Mapping[int, int]) -> list[Key]:
    """Canonically ordered keys whose 0-based coordinates match ``fixed``."""
    ranges = [(fixed[i],) if i in fixed else range(cfg.K) for i in range(cfg.N)]
    return list(itertools.product(*ranges))


def tail_fixed(cfg: SystemConfig, vstar: Key) -> dict[int, int]:
    return {i: vstar[i] for i in range(cfg.D, cfg.N)}


@dataclass(frozen=True)
class DatabaseView:
    server: int
    keys: frozenset

    def __contains__(self, key) -> bool:
        return key in self.keys

    def __len__(self):
        return len(self.keys)


def build_views(cfg: SystemConfig, vstar: Sequence[int]) -> list[DatabaseView]:
    """Per-server accessible message sets; index ``n - 1`` holds server ``n``."""
    vstar = validate_vector(cfg, vstar)
    tail = tail_fixed(cfg, vstar)
    views = []
    for n in range(1, cfg.D + 1):
        views.append(DatabaseView(n, frozenset(keys_matching(cfg, {**tail, n - 1: vstar[n - 1]}))))
    views.append(DatabaseView(cfg.D + 1, frozenset(keys_matching(cfg, tail))))
    return views


def dedicated_view(cfg: SystemConfig, n: int, vn: int, tail: Mapping[int, int]) -> DatabaseView:
    return DatabaseView(n, frozenset(keys_matching(cfg, {**tail, n - 1: vn})))


@dataclass(frozen=True)
class VerificationOutcome:
    user: str
    # server id -> {0-based attribute position: value index} the server learned
    knowledge: dict
    relayed: dict

    def __eq__(self, other):
        return (isinstance(other, VerificationOutcome) and self.user == other.user
                and self.knowledge == other.knowledge and self.relayed == other.relayed)


def verify_attributes(cfg: SystemConfig, user: str, claims: Sequence[int] | Mapping[int, Mapping[int, int]],
                      registry: Mapping[str, Sequence[int]]) -> VerificationOutcome:
    """Check a user's attribute claims against a trusted registry.

    ``claims`` is either the asserted attribute vector, sent consistently
    to every server, or a mapping ``server -> {position: value}`` giving
    exactly what the user asserted to each server. Dedicated server ``n``
    checks position ``n - 1`` only; the central server checks positions
    ``D..N-1`` and relays them to all dedicated servers.
    """
    if user not in registry:
        raise ConfigError(f"user {user!r} is not in the registry")
    truth = validate_vector(cfg, registry[user])
    D = cfg.D
    if isinstance(claims, Mapping):
        per_server = {int(s): dict(c) for s, c in claims.items()}
    else:
        claims = validate_vector(cfg, claims)
        per_server = {n: {n - 1: claims[n - 1]} for n in range(1, D + 1)}
        per_server[D + 1] = {i: claims[i] for i in range(D, cfg.N)}
    for n in range(1, D + 2):
        expected = set(range(D, cfg.N)) if n == D + 1 else {n - 1}
        got = per_server.get(n, {})
        if set(got) != expected:
            raise VerificationFailed(n, f"expected claims for positions {sorted(expected)}, got {sorted(got)}")
        for i, k in got.items():
            if truth[i] != k:
                raise VerificationFailed(n, f"attribute {i + 1} does not match registry")
    relayed = dict(per_server[D + 1])
    knowledge = {n: {n - 1: per_server[n][n - 1], **relayed} for n in range(1, D + 1)}
    knowledge[D + 1] = dict(relayed)
    return VerificationOutcome(user, knowledge, relayed)


class MessageStore(Mapping):
    """``K**N`` independent messages of ``L`` symbols, generated per key from a seed.

    Messages are produced on first access, each from its own
    domain-separated stream, so sparse use of a large store stays cheap.
    ``overrides`` replaces individual messages (used by secrecy audits).
    """

    def __init__(self, cfg: SystemConfig, seed: int, overrides: Mapping[Key, Sequence[int]] | None = None,
                 start: int = 0, stop: int | None = None):
        self.cfg = cfg
        self.seed = seed
        self.start = start
        self.stop = cfg.L if stop is None else stop
        self._overrides = {tuple(k): tuple(v) for k, v in (overrides or {}).items()}
        self._cache: dict[Key, tuple[int, ...]] = {}

    @property
    def length(self) -> int:
        return self.stop - self.start

    def _full(self, key: Key) -> tuple[int, ...]:
        if key in self._overrides:
            return self._overrides[key]
        got = self._cache.get(key)
        if got is None:
            rng = random.Random(derive_seed(self.seed, "msg", key))
            got = tuple(rng.randrange(self.cfg.q) for _ in range(self.cfg.L))
            self._cache[key] = got
        return got

    def __getitem__(self, key) -> tuple[int, ...]:
        key = tuple(key)
        validate_vector(self.cfg, key)
        return self._full(key)[self.start:self.stop]

    def __iter__(self):
        return self.cfg.keys()

    def __len__(self):
        return self.cfg.K ** self.cfg.N

    def subpacket(self, key: Key, index: int, parts: int) -> tuple[int, ...]:
        size = self.length // parts
        msg = self[key]
        return msg[index * size:(index + 1) * size]

    def slice(self, start: int, stop: int) -> "MessageStore":
        """Store restricted to symbols ``[start, stop)`` of every message."""
        return MessageStore(self.cfg, self.seed, self._overrides, self.start + start, self.start + stop)

    def with_messages(self, overrides: Mapping[Key, Sequence[int]]) -> "MessageStore":
        """Copy with whole (full-length) messages replaced."""
        merged = dict(self._overrides)
        for k, v in overrides.items():
            if len(v) != self.cfg.L:
                raise ValueError("override must have the full message length")
            merged[tuple(k)] = tuple(v)
        return MessageStore(self.cfg, self.seed, merged, self.start, self.stop)


class RandomnessPool:
    """Common randomness shared by the servers and hidden from the user.

    Chunks are addressed by a canonical key (the member tuple of the
    message subset a chunk protects) and regenerated deterministically
    from the seed, so every server derives identical pads independently.
    ``touched`` records each key served, for common-randomness accounting.
    """

    def __init__(self, seed: int, q: int, namespace: str = ""):
        self.seed = seed
        self.q = q
        self.namespace = namespace
        self.touched: dict[Hashable, int] = {}

    def chunk(self, key, length: int) -> tuple[int, ...]:
        rng = random.Random(derive_seed(self.seed, "pool", self.namespace, key))
        self.touched[key] = length
        return tuple(rng.randrange(self.q) for _ in range(length))

    @property
    def symbols_used(self) -> int:
        return sum(self.touched.values())


class EnumeratingPool(RandomnessPool):
    """Pool whose symbols are drawn from an enumeration source, for exact audits."""

    def __init__(self, source, q: int):
        super().__init__(0, q)
        self.source = source
        self._memo: dict = {}

    def chunk(self, key, length: int) -> tuple[int, ...]:
        got = self._memo.get(key)
        if got is None:
            got = tuple(self.source.choice(self.q) for _ in range(length))
            self._memo[key] = got
            self.touched[key] = length
        return got


@dataclass(frozen=True)
class QueryGroup:
    """One message group: member keys, real sub-packet indices, coefficients."""
    members: tuple[Key, ...]
    indices: tuple[int, ...]
    coeffs: tuple[int, ...]


Query = tuple[QueryGroup, ...]
Answer = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Exchange:
    server: int
    query: Query
    answer: Answer


@dataclass
class Transcript:
    scheme: str
    N: int
    D: int
    K: int
    q: int
    L: int
    vstar: Key
    user_seed: int
    subpacket_len: int
    exchanges: list[Exchange] = field(default_factory=list)
    decoded: tuple[int, ...] = ()
    lam: tuple[int, int] | None = None
    parts: list["Transcript"] = field(default_factory=list)

    def downloads(self) -> dict[int, int]:
        """Downloaded symbols per server id, summed over sub-protocol parts."""
        out: dict[int, int] = {n: 0 for n in range(1, self.D + 2)}
        for t in self.parts:
            for n, c in t.downloads().items():
                out[n] += c
        for ex in self.exchanges:
            out[ex.server] += sum(len(a) for a in ex.answer)
        return out

    def answer_count(self) -> dict[int, int]:
        out: dict[int, int] = {n: 0 for n in range(1, self.D + 2)}
        for t in self.parts:
            for n, c in t.answer_count().items():
                out[n] += c
        for ex in self.exchanges:
            out[ex.server] += len(ex.answer)
        return out

    def exchange(self, server: int) -> Exchange:
        for ex in self.exchanges:
            if ex.server == server:
                return ex
        raise KeyError(server)
