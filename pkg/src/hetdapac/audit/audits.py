"""Exhaustive checks of correctness, attribute privacy and database secrecy.

Privacy verdicts come from exact enumeration of every random choice the
relevant party cannot see, never from sampling. For attribute privacy the
server's query is split into independent factors before enumerating:

* the group member lists, fixed by the layout;
* per message, the real sub-packet indices at its positions, which depend
  only on that message's permutation;
* per block of groups sharing coefficient keys, their coefficient vectors.

Independent factors multiply, and a factor that has the same distribution
for every hidden attribute assignment drops out of both the total
variation distance and the mutual information. The varying factors are
combined through their probability signatures (see
:func:`~hetdapac.audit.tables.signature`), which keeps the product exact
without listing its outcomes. ``method="joint"`` skips the factorization and
enumerates the whole query at once; it is the reference the factored
path is tested against.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from ..errors import ConfigError
from ..model import (EnumeratingPool, Exchange, MessageStore, RandomnessPool, SystemConfig, Transcript,
                     build_views, validate_vector)
from ..randomness import DEFAULT_ENUMERATION_BOUND, UserRandom, derive_seed
from ..schemes import get
from ..schemes.common import Layout, answer_query, build_plan, group_coeffs, realize
from .tables import (DistributionTable, max_pairwise_tv, mutual_information_bits, signature, signature_max_tv,
                     signature_mi_bits, signature_product, tv_distance)

DEFAULT_SEEDS = tuple(range(100))


@dataclass
class AuditReport:
    audit: str
    scheme: str
    verdict: str
    distance: Fraction | None = None
    mi_bits: float | None = None
    domain: dict = field(default_factory=dict)
    wall_time: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict in ("PASS", "REPORTED")

    def to_text(self) -> str:
        lines = [f"audit: {self.audit}", f"scheme: {self.scheme}", f"verdict: {self.verdict}"]
        if self.distance is not None:
            lines.append(f"distance: {self.distance}")
        if self.mi_bits is not None:
            lines.append(f"mutual_information_bits: {self.mi_bits:.6g}")
        for k, v in self.domain.items():
            lines.append(f"domain.{k}: {v}")
        lines.append(f"wall_time_s: {self.wall_time:.3f}")
        for k, v in self.details.items():
            lines.append(f"{k}: {v}")
        return "\n".join(lines) + "\n"


def _verdict(distance: Fraction, target: Fraction | None) -> str:
    if target is None:
        return "REPORTED"
    return "PASS" if distance <= target else "FAIL"


def default_vstar(cfg: SystemConfig) -> tuple[int, ...]:
    return (0,) * cfg.N


# -- correctness -----------------------------------------------------------

def audit_correctness(scheme: str, cfg: SystemConfig, seeds: Sequence[int] = DEFAULT_SEEDS,
                      vstars=None, fault: Callable[[Transcript], None] | None = None) -> AuditReport:
    """Decode every attribute vector under every seed and compare with the store.

    ``fault`` may tamper with the transcript before decoding.
    """
    t0 = time.perf_counter()
    mod = get(scheme)
    vstars = list(cfg.keys()) if vstars is None else [validate_vector(cfg, v) for v in vstars]
    failures = []
    runs = 0
    for vstar in vstars:
        lay = mod.layout(cfg, vstar)
        views = {v.server: v for v in build_views(cfg, vstar)}
        for seed in seeds:
            store = MessageStore(cfg, derive_seed(seed, "msg"))
            pool = RandomnessPool(derive_seed(seed, "pool"), cfg.q)
            plan = build_plan(lay, UserRandom.seeded(seed, cfg.q))
            t = Transcript(scheme, cfg.N, cfg.D, cfg.K, cfg.q, cfg.L, vstar, seed, cfg.L // lay.parts)
            for s in sorted(plan.queries):
                q = plan.queries[s]
                t.exchanges.append(Exchange(s, q, answer_query(views[s], q, store, pool, lay.parts, lay.block)))
            if fault is not None:
                fault(t)
            runs += 1
            try:
                ok = mod.decode(t, plan) == store[vstar]
            except Exception as exc:  # decode errors count as failures
                ok = False
                failures.append((vstar, seed, repr(exc)))
                continue
            if not ok:
                failures.append((vstar, seed, "wrong message"))
    return AuditReport("correctness", scheme, "PASS" if not failures else "FAIL",
                       Fraction(len(failures)), None,
                       {"vstars": len(vstars), "seeds": len(seeds), "runs": runs},
                       time.perf_counter() - t0,
                       {"failures": len(failures), "first_failures": failures[:5]})


# -- attribute privacy -----------------------------------------------------

def hidden_assignments(cfg: SystemConfig, server: int, base: Sequence[int]):
    """Group the attribute vectors a server must not distinguish.

    Yields ``(known, [vstar, ...])``: for every value of what the server
    legitimately learns (its own attribute, for a dedicated server), all
    vectors that differ only in attributes hidden from it. The trailing
    attributes are taken from ``base``.
    """
    D = cfg.D
    if not 1 <= server <= D + 1:
        raise ConfigError(f"no server {server} in a system with D = {D}")
    tail = tuple(base[D:])
    if server == D + 1:
        contexts = [None]
    else:
        contexts = list(range(cfg.K))
    for known in contexts:
        group = []
        for head in itertools.product(range(cfg.K), repeat=D):
            if known is not None and head[server - 1] != known:
                continue
            group.append(head + tail)
        yield known, group


def query_table_joint(lay: Layout, server: int, bound: int) -> DistributionTable:
    groups = lay.groups.get(server, [])
    sub = Layout(lay.scheme, lay.cfg, lay.vstar, lay.parts, lay.block, {server: groups}, lay.coeff_specs)

    def observe(src):
        return realize(sub, UserRandom.enumerating(src, lay.cfg.q))[server]
    return DistributionTable.enumerate(observe, bound)


def _coeff_blocks(layouts: Sequence[Layout], server: int) -> list[tuple[int, ...]]:
    """Group positions whose coefficients share draws under any of the layouts."""
    n = len(layouts[0].groups.get(server, []))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for lay in layouts:
        owner: dict = {}
        for i, g in enumerate(lay.groups.get(server, [])):
            for k in g.coeff_keys:
                if k in owner:
                    parent[find(i)] = find(owner[k])
                else:
                    owner[k] = i
    blocks: dict[int, list[int]] = {}
    for i in range(n):
        blocks.setdefault(find(i), []).append(i)
    return sorted(tuple(b) for b in blocks.values())


def query_factors(lay: Layout, server: int, blocks: Sequence[tuple[int, ...]], bound: int) -> dict:
    """Independent factors of one server's query distribution, keyed stably."""
    groups = lay.groups.get(server, [])
    q = lay.cfg.q
    factors = {"skeleton": DistributionTable.point(tuple(g.members for g in groups))}
    slots_of: dict = {}
    for g in groups:
        for v, s in zip(g.members, g.slots):
            slots_of.setdefault(v, []).append(s)
    for v, slots in sorted(slots_of.items()):
        def perm_obs(src, v=v, slots=tuple(slots)):
            rng = UserRandom.enumerating(src, q)
            return tuple(rng.perm_value(v, s, lay.parts) for s in slots)
        factors[("perm", v)] = DistributionTable.enumerate(perm_obs, bound)
    for block in blocks:
        def coeff_obs(src, block=block):
            rng = UserRandom.enumerating(src, q)
            return tuple(group_coeffs(lay, groups[i], rng) for i in block)
        factors[("coef", block)] = DistributionTable.enumerate(coeff_obs, bound)
    return factors


def audit_attribute_privacy(scheme: str, cfg: SystemConfig, server: int, base_vstar=None,
                            method: str = "factored", bound: int = DEFAULT_ENUMERATION_BOUND,
                            target: Fraction | None = Fraction(0)) -> AuditReport:
    """Max total-variation distance between a server's query distributions
    across attribute vectors that agree on everything the server may know."""
    t0 = time.perf_counter()
    mod = get(scheme)
    base = validate_vector(cfg, base_vstar if base_vstar is not None else default_vstar(cfg))
    worst = Fraction(0)
    worst_mi = 0.0
    states = 0
    contexts = 0
    per_context = []
    for known, vstars in hidden_assignments(cfg, server, base):
        layouts = [mod.layout(cfg, v) for v in vstars]
        tables = None
        if method == "joint":
            tables = [query_table_joint(lay, server, bound) for lay in layouts]
            states += sum(t.domain["states"] for t in tables)
        elif method == "factored":
            skeletons = {tuple(g.members for g in lay.groups.get(server, [])) for lay in layouts}
            if len(skeletons) > 1:
                tables = [DistributionTable.point(tuple(g.members for g in lay.groups.get(server, [])))
                          for lay in layouts]
            else:
                blocks = _coeff_blocks(layouts, server)
                factor_sets = [query_factors(lay, server, blocks, bound) for lay in layouts]
                states += sum(f.domain["states"] for fs in factor_sets for f in fs.values())
                varying = [k for k in factor_sets[0] if any(fs[k] != factor_sets[0][k] for fs in factor_sets)]
                sig = signature_product([signature([fs[k] for fs in factor_sets]) for k in varying])
                d, mi = signature_max_tv(sig), signature_mi_bits(sig)
        else:
            raise ValueError(f"unknown method {method!r}")
        if tables is not None:
            d = max_pairwise_tv(tables)
            mi = mutual_information_bits(tables)
        per_context.append((known, str(d)))
        worst = max(worst, d)
        worst_mi = max(worst_mi, mi)
        contexts += 1
    return AuditReport(f"attribute_privacy[server={server}]", scheme, _verdict(worst, target), worst, worst_mi,
                       {"method": method, "contexts": contexts, "enumerated_states": states},
                       time.perf_counter() - t0, {"per_context_distance": per_context})


# -- database secrecy ------------------------------------------------------

def _secrecy_stores(cfg: SystemConfig, base: MessageStore, others, mode: str):
    if mode == "all":
        for values in itertools.product(range(cfg.q), repeat=len(others) * cfg.L):
            over = {v: values[i * cfg.L:(i + 1) * cfg.L] for i, v in enumerate(others)}
            yield base.with_messages(over)
    else:
        yield base
        for v in others:
            for j in range(cfg.L):
                msg = list(base[v])
                msg[j] = (msg[j] + 1) % cfg.q
                yield base.with_messages({v: msg})


def audit_database_secrecy(scheme: str, cfg: SystemConfig, vstar=None, user_seed: int = 0,
                           mode: str = "auto", pad: bool = True, bound: int = DEFAULT_ENUMERATION_BOUND,
                           store_seed: int = 0) -> AuditReport:
    """Compare answer distributions over the pool for stores that agree only on the designated message.

    ``mode`` is ``"all"`` (every assignment of the other accessible
    messages), ``"substitutions"`` (the base store and each single-symbol
    change to one other accessible message) or ``"auto"``.
    """
    t0 = time.perf_counter()
    mod = get(scheme)
    vstar = validate_vector(cfg, vstar if vstar is not None else default_vstar(cfg))
    lay = mod.layout(cfg, vstar)
    if cfg.L != lay.parts:
        raise ConfigError(f"secrecy audit needs one symbol per sub-packet: set L = {lay.parts}")
    plan = build_plan(lay, UserRandom.seeded(user_seed, cfg.q))
    views = {v.server: v for v in build_views(cfg, vstar)}
    servers = sorted(plan.queries)
    accessible = set()
    for s in servers:
        accessible |= views[s].keys
    others = sorted(accessible - {vstar})
    base = MessageStore(cfg, derive_seed(store_seed, "msg"))

    def answers_for(store):
        def observe(src):
            pool = EnumeratingPool(src, cfg.q)
            return tuple(answer_query(views[s], plan.queries[s], store, pool, lay.parts, lay.block, pad=pad)
                         for s in servers)
        return DistributionTable.enumerate(observe, bound)

    base_table = answers_for(base)
    pool_states = base_table.domain["states"]
    if mode == "auto":
        mode = "all" if cfg.q ** (len(others) * cfg.L) * pool_states <= bound else "substitutions"
    tables = [base_table if s is base else answers_for(s) for s in _secrecy_stores(cfg, base, others, mode)]
    if mode == "all":
        distinct = {tuple(sorted(t.probs.items())): t for t in tables}
        d = max_pairwise_tv(list(distinct.values()))
    else:
        d = max((tv_distance(tables[0], t) for t in tables[1:]), default=Fraction(0))
    return AuditReport("database_secrecy", scheme, "PASS" if d == 0 else "FAIL", d, None,
                       {"mode": mode, "stores": len(tables), "pool_states": pool_states,
                        "other_accessible_messages": len(others)},
                       time.perf_counter() - t0, {"pad": pad})


# -- query / content independence ------------------------------------------

def default_query_bytes(scheme: str, cfg: SystemConfig, vstar, store: MessageStore, user_seed: int, lam=None) -> bytes:
    from ..netsim.codec import encode_query
    from ..simulate import run_scheme
    pool = RandomnessPool(derive_seed(user_seed, "pool"), cfg.q)
    t, _ = run_scheme(cfg, scheme, vstar, store, pool, user_seed, lam)
    parts = t.parts or [t]
    return b"".join(encode_query(ex.query, cfg.q) for p in parts for ex in p.exchanges)


def audit_query_message_independence(scheme: str, cfg: SystemConfig, vstar=None, user_seeds=(0, 1, 2),
                                     builder: Callable | None = None, lam=None) -> bool:
    """True iff the query bytes are identical when run against two different message stores."""
    vstar = validate_vector(cfg, vstar if vstar is not None else default_vstar(cfg))
    builder = builder or (lambda c, v, store, seed: default_query_bytes(scheme, c, v, store, seed, lam))
    a = MessageStore(cfg, derive_seed(1, "msg"))
    b = MessageStore(cfg, derive_seed(2, "msg"))
    return all(builder(cfg, vstar, a, s) == builder(cfg, vstar, b, s) for s in user_seeds)
