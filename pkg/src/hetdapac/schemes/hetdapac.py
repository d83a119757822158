"""Dedicated-plus-central scheme: rate 1/(K+1), load ratio 1/(KD).

Messages are cut into ``D`` sub-packets. For each position ``n <= D`` and
value ``k`` the group ``U(n, k)`` holds the central-view messages with
``v_n = k``; every message lies in exactly one group per position, and
takes permutation slot ``n - 1`` there. The central server combines all
``KD`` groups; dedicated server ``n`` combines only ``U(n, v*_n)`` (its
whole database) with the same coefficients plus a unit offset at the
designated message. Subtracting the matching central answer yields one
designated sub-packet per dedicated server.
"""
from __future__ import annotations

from ..errors import ConfigError
from ..field import FieldPrime
from ..model import Key, MessageStore, RandomnessPool, SystemConfig, Transcript, keys_matching, tail_fixed, validate_vector
from ..randomness import CoeffSpec, UserRandom
from .common import GroupSpec, Layout, UserPlan, answer_of, answer_query, assemble, build_plan, run_layout

NAME = "hetdapac"


def u_group(cfg: SystemConfig, vstar: Key, n: int, k: int) -> tuple[Key, ...]:
    """Members of ``U(n, k)`` in canonical order."""
    return tuple(keys_matching(cfg, {**tail_fixed(cfg, vstar), n - 1: k}))


def layout(cfg: SystemConfig, vstar: Key) -> Layout:
    vstar = validate_vector(cfg, vstar)
    D, K = cfg.D, cfg.K
    central = D + 1
    specs = {}
    groups: dict[int, list[GroupSpec]] = {central: []}
    for n in range(1, D + 1):
        for k in range(K):
            members = u_group(cfg, vstar, n, k)
            ckey = ("h", n, k)
            specs[ckey] = CoeffSpec(len(members))
            # each message meets position n exactly once, so slot n-1 is fresh
            slots = (n - 1,) * len(members)
            groups[central].append(GroupSpec(("u", n, k), members, slots, (ckey,)))
    for n in range(1, D + 1):
        g = groups[central][(n - 1) * K + vstar[n - 1]]
        groups[n] = [GroupSpec(("ded", n), g.members, g.slots, g.coeff_keys, g.members.index(vstar))]
    return Layout(NAME, cfg, vstar, D, None, groups, specs)


def build_queries(cfg: SystemConfig, vstar: Key, rng: UserRandom) -> UserPlan:
    return build_plan(layout(cfg, vstar), rng)


def answer(view, query, store: MessageStore, pool: RandomnessPool):
    return answer_query(view, query, store, pool, store.cfg.D, None)


def decode(transcript: Transcript, plan: UserPlan) -> tuple[int, ...]:
    lay = plan.layout
    F = FieldPrime(lay.cfg.q)
    D = lay.cfg.D
    recovered = {}
    for n in range(1, D + 1):
        ded = answer_of(transcript, plan, n, ("ded", n))
        cen = answer_of(transcript, plan, D + 1, ("u", n, lay.vstar[n - 1]))
        recovered[n - 1] = F.vsub(ded, cen)
    return assemble(plan, recovered)


def run(cfg: SystemConfig, vstar: Key, store: MessageStore, pool: RandomnessPool,
        user_seed: int = 0, rng: UserRandom | None = None):
    if store.length % cfg.D:
        raise ConfigError(f"hetdapac: message length {store.length} is not divisible by D={cfg.D}")
    rng = rng or UserRandom.seeded(user_seed, cfg.q)
    return run_layout(layout(cfg, vstar), decode, store, pool, rng, user_seed)
