import itertools

import pytest

from hetdapac.errors import ConfigError, VerificationFailed
from hetdapac.model import (MessageStore, RandomnessPool, SystemConfig, build_views, canonical_order,
                            verify_attributes)


def labels(cfg, view):
    return {cfg.label(k) for k in view.keys}


def test_views_for_two_dedicated_servers(cfg322):
    vstar = cfg322.parse_vector("a2y")
    v1, v2, v3 = build_views(cfg322, vstar)
    assert labels(cfg322, v1) == {"a1y", "a2y"}
    assert labels(cfg322, v2) == {"a2y", "b2y"}
    assert labels(cfg322, v3) == {"a1y", "a2y", "b1y", "b2y"}


def test_central_view_is_everything_without_trailing_attributes(cfg32):
    views = build_views(cfg32, (0, 0, 0))
    assert len(views[-1]) == 8


def test_view_sizes_four_attributes(cfg432):
    views = build_views(cfg432, (0, 1, 0, 1))
    assert [len(v) for v in views] == [4, 4, 4, 8]
    for a, b in itertools.combinations(views[:3], 2):
        assert len(a.keys & b.keys) == 2


@pytest.mark.parametrize("N,D,K", [(3, 2, 2), (3, 3, 2), (4, 3, 2), (4, 2, 2), (3, 2, 3), (2, 1, 3)])
def test_view_invariants_every_vstar(N, D, K):
    cfg = SystemConfig(N, D, K)
    for vstar in cfg.keys():
        views = build_views(cfg, vstar)
        central = views[-1]
        assert len(central) == K ** D
        for v in views[:-1]:
            assert len(v) == K ** (D - 1)
            assert v.keys <= central.keys
            assert vstar in v
        if D >= 2:
            for a, b in itertools.combinations(views[:-1], 2):
                assert len(a.keys & b.keys) == K ** (D - 2)
        assert vstar in central


def test_invalid_vstar_rejected(cfg322):
    with pytest.raises(ConfigError):
        build_views(cfg322, (0, 2, 0))
    with pytest.raises(ConfigError):
        build_views(cfg322, (0, 1))


def test_canonical_order(cfg322):
    a1y, a2y = cfg322.parse_vector("a1y"), cfg322.parse_vector("a2y")
    assert canonical_order({a2y, a1y}) == [a1y, a2y]
    a2x = cfg322.parse_vector("a2x")
    # a2y sits second, where the offset of the second server points
    assert canonical_order({a2y, a2x}).index(a2y) == 1


def test_parse_and_label_round_trip(cfg432):
    v = cfg432.parse_vector("a2uy")
    assert v == (0, 1, 0, 1)
    assert cfg432.parse_vector("a,2,u,y") == v
    assert cfg432.label(v) == "a2uy"
    with pytest.raises(ConfigError):
        cfg432.parse_vector("c2uy")


def test_config_validation():
    with pytest.raises(ConfigError):
        SystemConfig(3, 4, 2)
    with pytest.raises(ConfigError):
        SystemConfig(3, 2, 2, q=256)
    with pytest.raises(ConfigError):
        SystemConfig(3, 2, 2, alphabets=(("a", "a"), ("1", "2"), ("x", "y")))


REGISTRY = {"alice": (0, 1, 1)}


def test_honest_verification(cfg322):
    out = verify_attributes(cfg322, "alice", (0, 1, 1), REGISTRY)
    assert out.relayed == {2: 1}
    assert out.knowledge[1] == {0: 0, 2: 1}
    assert out.knowledge[2] == {1: 1, 2: 1}
    assert out.knowledge[3] == {2: 1}


def test_wrong_claim_names_rejecting_server(cfg322):
    claims = {1: {0: 0}, 2: {1: 0}, 3: {2: 1}}
    with pytest.raises(VerificationFailed) as err:
        verify_attributes(cfg322, "alice", claims, REGISTRY)
    assert err.value.server == 2


def test_extra_claim_to_dedicated_server_rejected(cfg322):
    claims = {1: {0: 0, 1: 1}, 2: {1: 1}, 3: {2: 1}}
    with pytest.raises(VerificationFailed) as err:
        verify_attributes(cfg322, "alice", claims, REGISTRY)
    assert err.value.server == 1


def test_no_relay_when_every_attribute_is_dedicated(cfg32):
    out = verify_attributes(cfg32, "alice", (0, 1, 1), REGISTRY)
    assert out.relayed == {}


def test_unknown_user(cfg322):
    with pytest.raises(ConfigError):
        verify_attributes(cfg322, "mallory", (0, 1, 1), REGISTRY)


def test_store_is_deterministic_and_complete(cfg322):
    a, b = MessageStore(cfg322, 5), MessageStore(cfg322, 5)
    assert dict(a) == dict(b)
    assert len(a) == 8 and all(len(m) == 2 for m in a.values())
    assert dict(MessageStore(cfg322, 6)) != dict(a)


def test_store_slices_and_overrides(cfg432):
    s = MessageStore(cfg432, 1)
    k = (0, 1, 0, 1)
    assert s.slice(2, 5)[k] == s[k][2:5]
    assert s.subpacket(k, 3, 6) == s[k][3:4]
    before = s[k]
    t = s.with_messages({k: [1] * 6})
    assert t[k] == (1,) * 6
    assert s[k] == before
    with pytest.raises(ValueError):
        s.with_messages({k: [1]})


def test_pool_identical_across_instances():
    a, b = RandomnessPool(99, 257), RandomnessPool(99, 257)
    keys = [((0, 0, 0),), ((0, 1, 0), (1, 1, 0)), "x"]
    assert [a.chunk(k, 3) for k in keys] == [b.chunk(k, 3) for k in keys]
    assert a.symbols_used == 9
    assert RandomnessPool(99, 257, "other").chunk("x", 3) != a.chunk("x", 3)
