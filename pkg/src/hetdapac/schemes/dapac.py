"""Baseline distributed scheme over the dedicated servers, rate 1/(2K).

Each dedicated server ``n`` is asked, for every other position ``m`` and
every value ``k``, for a combination of the group of messages with
``v_n = v*_n`` and ``v_m = k``. The group with ``k = v*_m`` is the same
set at servers ``n`` and ``m``; both receive it with the same sub-packet
indices and pad, and the higher-numbered server's coefficients carry a
unit offset at the designated message. The difference of the two answers
is one sub-packet of the designated message, giving ``D(D-1)/2``
sub-packets from ``K D (D-1)`` downloads.

With ``D < N`` the scheme runs on the messages whose trailing ``N - D``
attributes equal the user's (the central server only verifies them).
"""
from __future__ import annotations

from ..errors import ConfigError, DecodeError
from ..field import FieldPrime
from ..model import Key, MessageStore, RandomnessPool, SystemConfig, Transcript, keys_matching, tail_fixed, validate_vector
from ..randomness import CoeffSpec, UserRandom
from .common import (GroupSpec, Layout, SlotCursor, UserPlan, answer_of, answer_query, assemble,
                     build_plan, run_layout)

NAME = "dapac"


def subpackets(D: int) -> int:
    return D * (D - 1) // 2


def layout(cfg: SystemConfig, vstar: Key) -> Layout:
    vstar = validate_vector(cfg, vstar)
    D, K = cfg.D, cfg.K
    if D < 2:
        raise ConfigError("the pairwise scheme needs at least two dedicated servers")
    P = subpackets(D)
    tail = tail_fixed(cfg, vstar)
    cursor = SlotCursor(P)
    shared_slots: dict[tuple[int, int], tuple[int, ...]] = {}
    specs: dict = {}
    groups: dict[int, list[GroupSpec]] = {}
    for n in range(1, D + 1):
        mine = []
        for m in range(1, D + 1):
            if m == n:
                continue
            for k in range(K):
                members = tuple(keys_matching(cfg, {**tail, n - 1: vstar[n - 1], m - 1: k}))
                shared = k == vstar[m - 1]
                offset = None
                if shared:
                    pair = (min(n, m), max(n, m))
                    ckey = ("pair",) + pair
                    if pair not in shared_slots:
                        shared_slots[pair] = tuple(cursor.take(v) for v in members)
                    slots = shared_slots[pair]
                    if n > m:
                        offset = members.index(vstar)
                    gid = ckey
                else:
                    ckey = ("grp", n, m, k)
                    slots = tuple(cursor.take(v) for v in members)
                    gid = ckey
                specs[ckey] = CoeffSpec(len(members))
                mine.append(GroupSpec(gid, members, slots, (ckey,), offset))
        groups[n] = mine
    return Layout(NAME, cfg, vstar, P, None, groups, specs)


def build_queries(cfg: SystemConfig, vstar: Key, rng: UserRandom) -> UserPlan:
    return build_plan(layout(cfg, vstar), rng)


def answer(view, query, store: MessageStore, pool: RandomnessPool):
    return answer_query(view, query, store, pool, subpackets(store.cfg.D), None)


def decode(transcript: Transcript, plan: UserPlan) -> tuple[int, ...]:
    lay = plan.layout
    F = FieldPrime(lay.cfg.q)
    recovered: dict[int, tuple[int, ...]] = {}
    D = lay.cfg.D
    for n in range(1, D + 1):
        for m in range(n + 1, D + 1):
            gid = ("pair", n, m)
            g = lay.group(m, gid)
            diff = F.vsub(answer_of(transcript, plan, m, gid), answer_of(transcript, plan, n, gid))
            slot = g.slots[g.offset]
            if slot in recovered:
                raise DecodeError(f"sub-packet slot {slot} recovered twice")
            recovered[slot] = diff
    return assemble(plan, recovered)


def run(cfg: SystemConfig, vstar: Key, store: MessageStore, pool: RandomnessPool,
        user_seed: int = 0, rng: UserRandom | None = None):
    rng = rng or UserRandom.seeded(user_seed, cfg.q)
    return run_layout(layout(cfg, vstar), decode, store, pool, rng, user_seed)
