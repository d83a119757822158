"""Scheme for three dedicated servers: rate 2/(3K), load ratio 2/3.

Messages are cut into 6 sub-packets. The unit of work is a *K-subset*:
the ``K`` central-view messages that agree on two of the first three
attributes (a fixed pair) and range over the third. There are ``3K^2`` of
them and each owns one pad chunk.

Dedicated server ``n`` handles the ``2K`` subsets whose fixed pair contains
``n`` at value ``v*_n``, organised as two collections ``G(n, 1)`` and
``G(n, 2)`` (one per pair type, each covering the ``K^2`` messages with
``v_n = v*_n``). Servers are processed 1, 2, 3; a subset already sent to an
earlier server is sent again with the same coefficients and indices except
for the designated message, which moves to a fresh sub-packet.

The central server gets ``3K`` groups of ``K^2`` messages, one per position
``n`` and value ``k`` of ``v_n``, each split into ``K`` subsets of the pair
``{n, n mod 3 + 1}``. The group with ``k = v*_n`` reuses server ``n``'s
indices and coefficients for ``G(n, .)`` plus a unit offset, so it cancels
against the sum of server ``n``'s answers to leave one designated
sub-packet. The shared subset of each pair then yields a second one by
dividing the difference of its two dedicated answers by the coefficient
at the designated position, which is therefore drawn nonzero.
"""
from __future__ import annotations

from ..errors import ConfigError, DecodeError, DivisionByZero
from ..field import FieldPrime
from ..model import Key, MessageStore, RandomnessPool, SystemConfig, Transcript, keys_matching, tail_fixed, validate_vector
from ..randomness import CoeffSpec, UserRandom
from .common import (GroupSpec, Layout, SlotCursor, UserPlan, answer_of, answer_query, assemble,
                     build_plan, run_layout)

NAME = "d3"
PARTS = 6
CENTRAL = 4


def partner(n: int) -> int:
    """Pair choice making the central server's designated collections pairwise disjoint."""
    return n % 3 + 1


def disjoint_choice() -> list[tuple[int, int]]:
    """``(n, i)`` of the collection ``G(n, i)`` reused for each designated central group."""
    return [(n, others(n).index(partner(n)) + 1) for n in (1, 2, 3)]


def others(n: int) -> list[int]:
    return [m for m in (1, 2, 3) if m != n]


def subset_id(n: int, vn: int, m: int, vm: int) -> tuple:
    a, b = sorted((n, m))
    va, vb = (vn, vm) if n < m else (vm, vn)
    return ("sub", a, b, va, vb)


def subset_members(cfg: SystemConfig, vstar: Key, sid: tuple) -> tuple[Key, ...]:
    _, a, b, va, vb = sid
    return tuple(keys_matching(cfg, {**tail_fixed(cfg, vstar), a - 1: va, b - 1: vb}))


def collection(cfg: SystemConfig, vstar: Key, n: int, i: int, vn: int | None = None) -> list[tuple]:
    """Subset ids of ``G(n, i)``, ordered by the value of the other fixed attribute."""
    vn = vstar[n - 1] if vn is None else vn
    m = others(n)[i - 1]
    return [subset_id(n, vn, m, k) for k in range(cfg.K)]


def is_shared(vstar: Key, sid: tuple) -> bool:
    _, a, b, va, vb = sid
    return vstar[a - 1] == va and vstar[b - 1] == vb


def _check(cfg: SystemConfig):
    if cfg.D != 3:
        raise ConfigError(f"d3 scheme requires D = 3, got D = {cfg.D}")


def layout(cfg: SystemConfig, vstar: Key) -> Layout:
    _check(cfg)
    vstar = validate_vector(cfg, vstar)
    K = cfg.K
    cursor = SlotCursor(PARTS)
    specs: dict = {}
    first: dict[tuple, tuple[int, ...]] = {}
    versions: dict[tuple[int, tuple], tuple[int, ...]] = {}
    groups: dict[int, list[GroupSpec]] = {}

    for n in (1, 2, 3):
        mine = []
        for i in (1, 2):
            for sid in collection(cfg, vstar, n, i):
                members = subset_members(cfg, vstar, sid)
                if sid in first:
                    # reappearing subset: only the designated message moves on
                    slots = tuple(cursor.take(v) if v == vstar else s for v, s in zip(members, first[sid]))
                else:
                    slots = tuple(cursor.take(v) for v in members)
                    first[sid] = slots
                    nonzero = (members.index(vstar),) if is_shared(vstar, sid) else ()
                    specs[sid] = CoeffSpec(K, nonzero)
                versions[(n, sid)] = slots
                mine.append(GroupSpec(("sub",) + sid[1:], members, slots, (sid,)))
        groups[n] = mine

    central = []
    for n in (1, 2, 3):
        m = partner(n)
        for k in range(K):
            sids = [subset_id(n, k, m, j) for j in range(K)]
            members = tuple(v for sid in sids for v in subset_members(cfg, vstar, sid))
            if k == vstar[n - 1]:
                slots = tuple(s for sid in sids for s in versions[(n, sid)])
                central.append(GroupSpec(("c", n, k), members, slots, tuple(sids), members.index(vstar)))
            else:
                ckey = ("c", n, k)
                specs[ckey] = CoeffSpec(K * K)
                slots = tuple(cursor.take(v) for v in members)
                central.append(GroupSpec(("c", n, k), members, slots, (ckey,)))
    groups[CENTRAL] = central
    return Layout(NAME, cfg, vstar, PARTS, K, groups, specs, meta={"versions": versions})


def build_queries(cfg: SystemConfig, vstar: Key, rng: UserRandom) -> UserPlan:
    return build_plan(layout(cfg, vstar), rng)


def answer(view, query, store: MessageStore, pool: RandomnessPool):
    return answer_query(view, query, store, pool, PARTS, store.cfg.K)


def decode(transcript: Transcript, plan: UserPlan) -> tuple[int, ...]:
    lay = plan.layout
    cfg, vstar = lay.cfg, lay.vstar
    F = FieldPrime(cfg.q)
    versions = lay.meta["versions"]
    recovered: dict[int, tuple[int, ...]] = {}

    def put(slot, vec):
        if slot in recovered:
            raise DecodeError(f"sub-packet slot {slot} recovered twice")
        recovered[slot] = vec

    for n in (1, 2, 3):
        m = partner(n)
        sids = [subset_id(n, vstar[n - 1], m, j) for j in range(cfg.K)]
        shared = sids[vstar[m - 1]]
        members = subset_members(cfg, vstar, shared)
        pos = members.index(vstar)

        total = answer_of(transcript, plan, CENTRAL, ("c", n, vstar[n - 1]))
        for sid in sids:
            total = F.vsub(total, answer_of(transcript, plan, n, ("sub",) + sid[1:]))
        slot_n = versions[(n, shared)][pos]
        put(slot_n, total)

        h = plan.rng.coeffs(shared, lay.coeff_specs[shared])[pos]
        try:
            h_inv = F.inv(h)
        except DivisionByZero:
            raise DecodeError(f"coefficient at the designated position of {shared} is zero") from None
        diff = F.vsub(answer_of(transcript, plan, m, ("sub",) + shared[1:]),
                      answer_of(transcript, plan, n, ("sub",) + shared[1:]))
        slot_m = versions[(m, shared)][pos]
        put(slot_m, F.vadd(total, F.vscale(h_inv, diff)))
    return assemble(plan, recovered)


def run(cfg: SystemConfig, vstar: Key, store: MessageStore, pool: RandomnessPool,
        user_seed: int = 0, rng: UserRandom | None = None):
    _check(cfg)
    if store.length % PARTS:
        raise ConfigError(f"d3: message length {store.length} is not divisible by {PARTS}")
    rng = rng or UserRandom.seeded(user_seed, cfg.q)
    return run_layout(layout(cfg, vstar), decode, store, pool, rng, user_seed)
