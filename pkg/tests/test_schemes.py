"""Scheme layouts against hand-transcribed example tables, plus run-time behaviour.

Tables are written with 1-based sub-packet slots, as produced with every
permutation fixed to the identity.
"""
from collections import Counter

import pytest

from hetdapac.errors import AccessViolation, ConfigError, DecodeError
from hetdapac.model import MessageStore, RandomnessPool, build_views
from hetdapac.randomness import SeededSource, UserRandom, derive_seed
from hetdapac.schemes import d3, dapac, get, hetdapac
from hetdapac.schemes.common import answer_query, build_plan, pad_keys
from hetdapac.simulate import make_pool, make_store, run_scheme


def rows(cfg, lay, server):
    return [" ; ".join(f"{cfg.label(v)}({s + 1})" for v, s in zip(g.members, g.slots))
            for g in lay.groups[server]]


def offsets(lay, server):
    return [g.offset for g in lay.groups[server]]


def identity_rng(cfg, seed=3):
    return UserRandom(SeededSource(seed), SeededSource(seed + 1), cfg.q, identity_perms=True)


# -- baseline ---------------------------------------------------------------

def test_baseline_first_server_table(cfg32):
    lay = dapac.layout(cfg32, cfg32.parse_vector("a2y"))
    assert rows(cfg32, lay, 1) == ["a1x(1) ; a1y(1)", "a2x(1) ; a2y(1)", "a1x(2) ; a2x(2)", "a1y(2) ; a2y(2)"]
    assert offsets(lay, 1) == [None] * 4


def test_baseline_shared_groups_and_offsets(cfg32):
    lay = dapac.layout(cfg32, cfg32.parse_vector("a2y"))
    shared = {g.gid: (rows(cfg32, lay, s)[i], g.offset)
              for s in (1, 2, 3) for i, g in enumerate(lay.groups[s]) if g.gid[0] == "pair" and g.offset is not None}
    # offsets sit at the higher-numbered server: e_2, e_2 and e_1
    assert shared == {("pair", 1, 2): ("a2x(1) ; a2y(1)", 1),
                      ("pair", 1, 3): ("a1y(2) ; a2y(2)", 1),
                      ("pair", 2, 3): ("a2y(3) ; b2y(2)", 0)}


def test_baseline_group_member_sets(cfg32):
    lay = dapac.layout(cfg32, cfg32.parse_vector("a2y"))

    def members(s):
        return {frozenset(cfg32.label(v) for v in g.members) for g in lay.groups[s]}
    assert members(2) == {frozenset(x) for x in (("a2x", "a2y"), ("a2x", "b2x"), ("b2x", "b2y"), ("a2y", "b2y"))}
    assert members(3) == {frozenset(x) for x in (("a1y", "a2y"), ("a1y", "b1y"), ("b1y", "b2y"), ("a2y", "b2y"))}
    assert 4 not in lay.groups or not lay.groups[4]


def test_baseline_shared_descriptor_identical_at_both_servers(cfg32):
    lay = dapac.layout(cfg32, (0, 1, 1))
    plan = build_plan(lay, UserRandom.seeded(5, cfg32.q))
    for (a, b) in ((1, 2), (1, 3), (2, 3)):
        ga = plan.queries[a][lay.locate(a, ("pair", a, b))]
        gb = plan.queries[b][lay.locate(b, ("pair", a, b))]
        assert (ga.members, ga.indices) == (gb.members, gb.indices)
        diff = [(y - x) % cfg32.q for x, y in zip(ga.coeffs, gb.coeffs)]
        assert sorted(diff) == [0] * (len(diff) - 1) + [1]


def test_baseline_counts_four_attributes():
    from hetdapac.model import SystemConfig
    cfg = SystemConfig(4, 4, 2, L=6)
    lay = dapac.layout(cfg, (0, 0, 0, 0))
    for s in range(1, 5):
        assert len(lay.groups[s]) == 6
        assert all(len(g.members) == 4 for g in lay.groups[s])
    pairs = {g.gid for s in range(1, 5) for g in lay.groups[s] if g.gid[0] == "pair"}
    assert len(pairs) == 6


def test_baseline_run(cfg32):
    vstar = cfg32.parse_vector("a2y")
    store, pool = make_store(cfg32), make_pool(cfg32)
    t, _ = dapac.run(cfg32, vstar, store, pool, 7)
    assert t.decoded == store[vstar]
    assert sum(t.downloads().values()) == 12
    assert pool.symbols_used == 9


def test_baseline_zero_coefficients_give_bare_pad(cfg32):
    from hetdapac.model import QueryGroup
    view = build_views(cfg32, (0, 1, 1))[0]
    members = tuple(sorted(view.keys))[:2]
    g = QueryGroup(members, (0, 0), (0, 0))
    pool = RandomnessPool(1, cfg32.q)
    out = answer_query(view, (g,), make_store(cfg32), pool, 3, None)
    assert out == (RandomnessPool(1, cfg32.q).chunk(members, 1),)


def test_baseline_rejects_bad_length(cfg32):
    with pytest.raises(ConfigError):
        dapac.run(cfg32.replace(L=4), (0, 0, 0), MessageStore(cfg32.replace(L=4), 0), RandomnessPool(0, 257))


# -- two dedicated servers plus central -------------------------------------

def test_hetdapac_table(cfg322):
    lay = hetdapac.layout(cfg322, cfg322.parse_vector("a2y"))
    assert rows(cfg322, lay, 1) == ["a1y(1) ; a2y(1)"]
    assert offsets(lay, 1) == [1]
    assert rows(cfg322, lay, 2) == ["a2y(2) ; b2y(2)"]
    assert offsets(lay, 2) == [0]
    assert rows(cfg322, lay, 3) == ["a1y(1) ; a2y(1)", "b1y(1) ; b2y(1)", "a1y(2) ; b1y(2)", "a2y(2) ; b2y(2)"]
    assert offsets(lay, 3) == [None] * 4


def test_hetdapac_dedicated_coefficients_are_offset_central(cfg322):
    lay = hetdapac.layout(cfg322, (0, 1, 1))
    plan = build_plan(lay, UserRandom.seeded(2, cfg322.q))
    h1 = plan.queries[1][0].coeffs
    c = plan.queries[3][lay.locate(3, ("u", 1, 0))].coeffs
    assert h1 == (c[0], (c[1] + 1) % cfg322.q)


def test_hetdapac_counts_four_attributes(cfg432):
    lay = hetdapac.layout(cfg432.replace(L=3), (0, 1, 0, 1))
    assert len(lay.groups[4]) == 6 and all(len(g.members) == 4 for g in lay.groups[4])
    assert [len(lay.groups[n]) for n in (1, 2, 3)] == [1, 1, 1]


def test_hetdapac_every_message_in_D_groups_with_distinct_indices(cfg432):
    cfg = cfg432.replace(L=3)
    lay = hetdapac.layout(cfg, (1, 0, 1, 0))
    plan = build_plan(lay, UserRandom.seeded(9, cfg.q))
    seen = {}
    for g in plan.queries[4]:
        for v, i in zip(g.members, g.indices):
            seen.setdefault(v, []).append(i)
    assert all(sorted(ix) == [0, 1, 2] for ix in seen.values())


def test_hetdapac_example_run(cfg322):
    vstar = cfg322.parse_vector("a2y")
    store, pool = make_store(cfg322), make_pool(cfg322)
    t, _ = hetdapac.run(cfg322, vstar, store, pool, 1)
    assert t.decoded == store[vstar]
    assert t.downloads() == {1: 1, 2: 1, 3: 4}
    assert pool.symbols_used == 4


def test_same_seed_servers_derive_same_pads(cfg322):
    vstar = (0, 1, 1)
    a, _ = hetdapac.run(cfg322, vstar, make_store(cfg322), make_pool(cfg322), 1)
    b, _ = hetdapac.run(cfg322, vstar, make_store(cfg322), make_pool(cfg322), 1)
    assert a == b


# -- three dedicated servers, special scheme --------------------------------

D3_TABLE = {
    1: ["a1uy(1) ; a1vy(1)", "a2uy(1) ; a2vy(1)", "a1uy(2) ; a2uy(2)", "a1vy(2) ; a2vy(2)"],
    # the printed table has a2vy(2) in the last row, which collides with the
    # slot already used at server 1; the reuse rule gives the next free slot
    2: ["a2uy(3) ; a2vy(1)", "b2uy(1) ; b2vy(1)", "a2uy(4) ; b2uy(2)", "a2vy(3) ; b2vy(2)"],
    3: ["a1uy(2) ; a2uy(5)", "b1uy(1) ; b2uy(3)", "a1uy(3) ; b1uy(2)", "a2uy(6) ; b2uy(2)"],
}


def test_d3_dedicated_tables(cfg432):
    lay = d3.layout(cfg432, cfg432.parse_vector("a2uy"))
    for n, expected in D3_TABLE.items():
        assert rows(cfg432, lay, n) == expected


def test_d3_designated_slots_cover_all_parts(cfg432):
    lay = d3.layout(cfg432, (0, 1, 0, 1))
    slots = {s for n in (1, 2, 3) for g in lay.groups[n] for v, s in zip(g.members, g.slots) if v == (0, 1, 0, 1)}
    assert slots == set(range(6))


def test_d3_no_slot_assigned_twice_except_reuse(cfg432):
    for vstar in cfg432.keys():
        lay = d3.layout(cfg432, vstar)
        firsts = {}
        for n in (1, 2, 3):
            for g in lay.groups[n]:
                prev = firsts.setdefault(g.gid, g.slots)
                if prev is not g.slots:
                    changed = [v for v, a, b in zip(g.members, prev, g.slots) if a != b]
                    assert changed == [vstar]
        per_msg = {}
        for g in lay.groups[4]:
            if g.offset is None:
                for v, s in zip(g.members, g.slots):
                    per_msg.setdefault(v, []).append(s)
        for g in (g for n in (1, 2, 3) for g in lay.groups[n]):
            for v, s in zip(g.members, g.slots):
                assert s not in per_msg.get(v, [])


def test_d3_disjoint_choice():
    assert d3.disjoint_choice() == [(1, 1), (2, 2), (3, 1)]


def test_d3_central_groups(cfg432):
    vstar = cfg432.parse_vector("a2uy")
    lay = d3.layout(cfg432, vstar)
    central = {g.gid: g for g in lay.groups[4]}
    g = central[("c", 1, 0)]
    assert rows(cfg432, lay, 4)[0] == "a1uy(1) ; a1vy(1) ; a2uy(1) ; a2vy(1)"
    assert g.offset == 2 and g.coeff_keys == (("sub", 1, 2, 0, 0), ("sub", 1, 2, 0, 1))
    assert central[("c", 2, 1)].offset == 0
    assert central[("c", 3, 0)].offset == 1
    w41 = rows(cfg432, lay, 4)[1]
    assert w41 == "b1uy(3) ; b1vy(1) ; b2uy(4) ; b2vy(3)"
    assert rows(cfg432, lay, 4)[2] == "a1uy(4) ; b1uy(4) ; a1vy(3) ; b1vy(2)"


def test_d3_pad_blocks(cfg432):
    lay = d3.layout(cfg432, cfg432.parse_vector("a2uy"))
    w41 = lay.groups[4][1]
    keys = pad_keys(w41.members, lay.block)
    labels = [[cfg432.label(v) for v in k] for k in keys]
    assert labels == [["b1uy", "b1vy"], ["b2uy", "b2vy"]]


def test_d3_designated_coefficient_concatenates_and_offsets(cfg432):
    lay = d3.layout(cfg432, (0, 1, 0, 1))
    plan = build_plan(lay, UserRandom.seeded(4, cfg432.q))
    g = lay.groups[4][0]
    concat = plan.rng.coeffs(g.coeff_keys[0], lay.coeff_specs[g.coeff_keys[0]]) + \
        plan.rng.coeffs(g.coeff_keys[1], lay.coeff_specs[g.coeff_keys[1]])
    got = plan.queries[4][0].coeffs
    assert got[:2] == concat[:2] and got[3] == concat[3] and got[2] == (concat[2] + 1) % cfg432.q


def test_d3_shared_coefficient_never_zero(cfg432):
    vstar = (0, 1, 0, 1)
    lay = d3.layout(cfg432.replace(q=2), vstar)
    shared = [k for k, spec in lay.coeff_specs.items() if spec.nonzero]
    assert len(shared) == 3
    for seed in range(50):
        rng = UserRandom.seeded(seed, 2)
        for k in shared:
            assert rng.coeffs(k, lay.coeff_specs[k])[lay.coeff_specs[k].nonzero[0]] == 1


def test_d3_example_run(cfg432):
    vstar = cfg432.parse_vector("a2uy")
    store, pool = make_store(cfg432), make_pool(cfg432)
    t, _ = d3.run(cfg432, vstar, store, pool, 2)
    assert t.decoded == store[vstar]
    assert t.downloads() == {1: 4, 2: 4, 3: 4, 4: 6}
    assert pool.symbols_used == 12


def test_d3_three_chunks_shared_between_dedicated_servers(cfg432):
    lay = d3.layout(cfg432, (0, 1, 0, 1))
    used = Counter()
    for n in (1, 2, 3):
        for key in {k for g in lay.groups[n] for k in pad_keys(g.members, lay.block)}:
            used[key] += 1
    assert sum(1 for c in used.values() if c == 2) == 3


def test_d3_k3_downloads():
    from hetdapac.model import SystemConfig
    cfg = SystemConfig(4, 3, 3, L=6)
    t, _ = run_scheme(cfg, "d3", (2, 0, 1, 1))
    assert sum(len(a) for ex in t.exchanges for a in ex.answer) == 27
    assert t.decoded == make_store(cfg)[(2, 0, 1, 1)]


def test_d3_requires_three_dedicated(cfg322):
    with pytest.raises(ConfigError):
        d3.layout(cfg322, (0, 0, 0))


def test_d3_zero_coefficient_is_decode_error(cfg432, monkeypatch):
    vstar = (0, 1, 0, 1)
    orig = UserRandom.coeffs

    def zeroing(self, key, spec):
        return tuple(0 for _ in range(spec.length)) if spec.nonzero else orig(self, key, spec)
    monkeypatch.setattr(UserRandom, "coeffs", zeroing)
    with pytest.raises(DecodeError):
        d3.run(cfg432, vstar, make_store(cfg432), make_pool(cfg432), 0)


# -- shared behaviour --------------------------------------------------------

def test_server_refuses_inaccessible_member(cfg322):
    from hetdapac.model import QueryGroup
    view = build_views(cfg322, (0, 1, 1))[0]
    outsider = (1, 1, 1)
    with pytest.raises(AccessViolation):
        answer_query(view, (QueryGroup((outsider,), (0,), (1,)),), make_store(cfg322), make_pool(cfg322), 2, None)


def test_tampered_transcript_is_decode_error(cfg322):
    t, plan = run_scheme(cfg322, "hetdapac", (0, 1, 1))
    t.exchanges.pop()
    with pytest.raises(DecodeError):
        hetdapac.decode(t, plan)


def test_unknown_scheme():
    with pytest.raises(ConfigError):
        get("nope")


@pytest.mark.parametrize("scheme,fixture", [("dapac", "cfg32"), ("hetdapac", "cfg322"), ("d3", "cfg432")])
def test_every_vstar_decodes(scheme, fixture, request):
    cfg = request.getfixturevalue(fixture)
    for vstar in cfg.keys():
        for seed in range(5):
            store = MessageStore(cfg, derive_seed(seed, "msg"))
            t, _ = run_scheme(cfg, scheme, vstar, store, RandomnessPool(seed, cfg.q), seed)
            assert t.decoded == store[vstar]


def test_identity_permutation_run_decodes(cfg432):
    vstar = (1, 0, 1, 0)
    store = make_store(cfg432)
    t, _ = d3.run(cfg432, vstar, store, make_pool(cfg432), 0, rng=identity_rng(cfg432))
    assert t.decoded == store[vstar]
