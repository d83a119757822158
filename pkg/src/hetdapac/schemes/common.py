"""Machinery shared by all retrieval schemes.

A scheme is described in two stages. Its *layout* is a deterministic
function of the configuration and the user's attribute vector: for every
server, an ordered list of message groups, each naming its members, the
permutation *slot* each member's sub-packet is taken from, the coefficient
vector(s) it uses and an optional unit offset. *Realizing* a layout against
:class:`~hetdapac.randomness.UserRandom` turns slots into real sub-packet
indices and coefficient keys into vectors, producing the wire queries.

Servers never see slots or coefficient keys, only the realized query.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

from ..errors import AccessViolation, ConfigError, DecodeError
from ..field import FieldPrime
from ..model import (DatabaseView, Exchange, Key, MessageStore, Query, QueryGroup,
                     RandomnessPool, SystemConfig, Transcript, build_views)
from ..randomness import CoeffSpec, UserRandom


@dataclass(frozen=True)
class GroupSpec:
    gid: Hashable
    members: tuple[Key, ...]
    slots: tuple[int, ...]
    coeff_keys: tuple[Hashable, ...]
    offset: int | None = None


@dataclass
class Layout:
    scheme: str
    cfg: SystemConfig
    vstar: Key
    parts: int
    # pad block size: a group's pad is the sum of chunks over consecutive
    # member blocks of this size; None means the whole group is one block
    block: int | None
    groups: dict[int, list[GroupSpec]]
    coeff_specs: dict[Hashable, CoeffSpec]
    meta: dict = field(default_factory=dict)

    def locate(self, server: int, gid: Hashable) -> int:
        for i, g in enumerate(self.groups[server]):
            if g.gid == gid:
                return i
        raise KeyError((server, gid))

    def group(self, server: int, gid: Hashable) -> GroupSpec:
        return self.groups[server][self.locate(server, gid)]


class SlotCursor:
    """Per-message counter handing out unused permutation slots."""

    def __init__(self, parts: int):
        self.parts = parts
        self._next: dict[Key, int] = {}

    def take(self, v: Key) -> int:
        s = self._next.get(v, 0)
        if s >= self.parts:
            raise AssertionError(f"message {v} needs more than {self.parts} sub-packets")
        self._next[v] = s + 1
        return s

    def used(self, v: Key) -> int:
        return self._next.get(v, 0)


def group_coeffs(layout: Layout, g: GroupSpec, rng: UserRandom) -> tuple[int, ...]:
    vec: list[int] = []
    for k in g.coeff_keys:
        vec.extend(rng.coeffs(k, layout.coeff_specs[k]))
    if len(vec) != len(g.members):
        raise AssertionError(f"group {g.gid}: {len(vec)} coefficients for {len(g.members)} members")
    if g.offset is not None:
        vec[g.offset] = (vec[g.offset] + 1) % layout.cfg.q
    return tuple(vec)


def group_indices(layout: Layout, g: GroupSpec, rng: UserRandom) -> tuple[int, ...]:
    return tuple(rng.perm_value(v, s, layout.parts) for v, s in zip(g.members, g.slots))


def realize_group(layout: Layout, g: GroupSpec, rng: UserRandom) -> QueryGroup:
    return QueryGroup(g.members, group_indices(layout, g, rng), group_coeffs(layout, g, rng))


def realize(layout: Layout, rng: UserRandom, servers: Sequence[int] | None = None) -> dict[int, Query]:
    servers = sorted(layout.groups) if servers is None else servers
    return {s: tuple(realize_group(layout, g, rng) for g in layout.groups[s]) for s in servers}


@dataclass
class UserPlan:
    """The user's private state for one retrieval: layout plus realized randomness."""
    layout: Layout
    rng: UserRandom
    queries: dict[int, Query]

    def real_index(self, slot: int) -> int:
        return self.rng.perm_value(self.layout.vstar, slot, self.layout.parts)


def build_plan(layout: Layout, rng: UserRandom) -> UserPlan:
    return UserPlan(layout, rng, realize(layout, rng))


def pad_keys(members: Sequence[Key], block: int | None) -> list[tuple[Key, ...]]:
    """Chunk keys protecting a group: the member tuple of each pad block."""
    members = tuple(members)
    if block is None or block >= len(members):
        return [members]
    if len(members) % block:
        raise AccessViolation(f"group of {len(members)} members does not split into blocks of {block}")
    return [members[i:i + block] for i in range(0, len(members), block)]


def answer_query(view: DatabaseView, query: Query, store: MessageStore, pool: RandomnessPool,
                 parts: int, block: int | None, pad: bool = True) -> tuple[tuple[int, ...], ...]:
    """Server-side answer: per group, coefficient-weighted sub-packets plus pads."""
    F = FieldPrime(store.cfg.q)
    size = store.length // parts
    out = []
    for g in query:
        if len(g.indices) != len(g.members) or len(g.coeffs) != len(g.members):
            raise AccessViolation("malformed group: members, indices and coefficients differ in length")
        for v in g.members:
            if v not in view:
                raise AccessViolation(f"server {view.server} holds no accessible message {v}")
        for i in g.indices:
            if not 0 <= i < parts:
                raise AccessViolation(f"sub-packet index {i} outside [0, {parts})")
        rows = [store.subpacket(v, i, parts) for v, i in zip(g.members, g.indices)]
        val = F.dot(g.coeffs, rows)
        if pad:
            for key in pad_keys(g.members, block):
                val = F.vadd(val, pool.chunk(key, size))
        out.append(val)
    return tuple(out)


def subpacket_len(cfg: SystemConfig, length: int, parts: int, scheme: str) -> int:
    if length % parts:
        raise ConfigError(f"{scheme}: message length {length} is not divisible by {parts} sub-packets")
    return length // parts


def assemble(plan: UserPlan, recovered: dict[int, tuple[int, ...]]) -> tuple[int, ...]:
    """Undo the user's permutation of the designated message's sub-packets."""
    P = plan.layout.parts
    if sorted(recovered) != list(range(P)):
        raise DecodeError(f"recovered slots {sorted(recovered)} do not cover all {P} sub-packets")
    pieces: list = [None] * P
    for slot, vec in recovered.items():
        pieces[plan.real_index(slot)] = vec
    out: list[int] = []
    for p in pieces:
        out.extend(p)
    return tuple(out)


def answer_of(transcript: Transcript, plan: UserPlan, server: int, gid: Hashable) -> tuple[int, ...]:
    try:
        ex = transcript.exchange(server)
        pos = plan.layout.locate(server, gid)
        if ex.query[pos] != plan.queries[server][pos]:
            raise DecodeError(f"server {server} answered a different query than the user sent")
        return ex.answer[pos]
    except (KeyError, IndexError):
        raise DecodeError(f"transcript lacks the answer to group {gid} at server {server}") from None


def views_by_server(cfg: SystemConfig, vstar: Key) -> dict[int, DatabaseView]:
    return {v.server: v for v in build_views(cfg, vstar)}


def run_layout(layout: Layout, decode: Callable, store: MessageStore, pool: RandomnessPool,
               rng: UserRandom, user_seed: int = 0, answer: Callable | None = None) -> tuple[Transcript, UserPlan]:
    """Execute a layout in-process: realize, answer at every server, decode."""
    cfg = layout.cfg
    size = subpacket_len(cfg, store.length, layout.parts, layout.scheme)
    plan = build_plan(layout, rng)
    views = views_by_server(cfg, layout.vstar)
    answer = answer or (lambda view, query: answer_query(view, query, store, pool, layout.parts, layout.block))
    t = Transcript(layout.scheme, cfg.N, cfg.D, cfg.K, cfg.q, store.length, layout.vstar, user_seed, size)
    for s in sorted(plan.queries):
        q = plan.queries[s]
        t.exchanges.append(Exchange(s, q, answer(views[s], q)))
    t.decoded = decode(t, plan)
    return t, plan
