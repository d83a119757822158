"""Rate, load ratio and common-randomness figures, closed-form and measured.

Everything is exact: rates and load ratios are :class:`~fractions.Fraction`
values and an unbounded load ratio (no central download) is ``math.inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError
from .model import Key, MessageStore, RandomnessPool, SystemConfig, Transcript
from .randomness import UserRandom, derive_seed
from .schemes import dapac, hetdapac
from .schemes.common import pad_keys

SCHEME_NAMES = ("dapac", "hetdapac", "d3", "timeshare")


@dataclass(frozen=True)
class SchemeMetrics:
    scheme: str
    rate: Fraction
    load_ratio: Fraction | float
    cr_symbols: Fraction
    downloads: tuple[int, ...] = ()
    lam: Fraction | None = None
    # set when the randomness figure is the one stated for the prior
    # pairwise scheme rather than what the construction here consumes
    cr_flagged: bool = False


def parse_lambda(text: str | Fraction | None) -> Fraction | None:
    if text is None or isinstance(text, Fraction):
        return text
    try:
        lam = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse lambda {text!r}; use a/b") from None
    if not 0 <= lam <= 1:
        raise ConfigError(f"lambda must lie in [0, 1], got {lam}")
    return lam


def timeshare_rate(K: int, lam: Fraction) -> Fraction:
    return 1 / (K * (1 + lam) + (1 - lam))


def timeshare_load_ratio(K: int, D: int, lam: Fraction) -> Fraction | float:
    if lam == 1:
        return math.inf
    return Fraction(1, K * D) + 2 * lam / (D * (1 - lam))


def rate_from_load_ratio(K: int, D: int, ell: Fraction) -> Fraction:
    """Time-sharing trade-off: the rate reachable at load ratio ``ell``."""
    return 1 / (K + (ell * K * K * D + K) / (ell * K * D + 2 * K - 1))


def closed_form(scheme: str, K: int, D: int, lam=None, L: int = 1) -> SchemeMetrics:
    if K < 2 or D < 1:
        raise ConfigError("closed forms need K >= 2 and D >= 1")
    L = Fraction(L)
    if scheme == "hetdapac":
        return SchemeMetrics(scheme, Fraction(1, K + 1), Fraction(1, K * D), K * L)
    if scheme == "dapac":
        return SchemeMetrics(scheme, Fraction(1, 2 * K), math.inf, K * K * L, cr_flagged=True)
    if scheme == "d3":
        if D != 3:
            raise ConfigError("d3 closed form needs D = 3")
        return SchemeMetrics(scheme, Fraction(2, 3 * K), Fraction(2, 3), K * K * L / 2)
    if scheme == "timeshare":
        lam = parse_lambda(lam)
        if lam is None:
            raise ConfigError("timeshare needs lambda")
        cr = lam * K * K * L + (1 - lam) * K * L
        return SchemeMetrics(scheme, timeshare_rate(K, lam), timeshare_load_ratio(K, D, lam), cr,
                             lam=lam, cr_flagged=lam > 0)
    raise ConfigError(f"unknown scheme {scheme!r}")


def _block(t: Transcript) -> int | None:
    return t.K if t.scheme == "d3" else None


def _cr_symbols(t: Transcript) -> int:
    if t.parts:
        return sum(_cr_symbols(p) for p in t.parts)
    keys = set()
    for ex in t.exchanges:
        for g in ex.query:
            keys.update(pad_keys(g.members, _block(t)))
    return len(keys) * t.subpacket_len


def measure(t: Transcript) -> SchemeMetrics:
    """Metrics counted from a transcript."""
    down = t.downloads()
    D = t.D
    dedicated = [down[n] for n in range(1, D + 1)]
    central = down[D + 1]
    total = sum(down.values())
    if len(set(dedicated)) == 1:
        per = dedicated[0]
    else:
        per = max(dedicated)
    load = math.inf if central == 0 else Fraction(per, central)
    lam = Fraction(*t.lam) if t.lam else None
    return SchemeMetrics(t.scheme, Fraction(t.L, total), load, Fraction(_cr_symbols(t)),
                         tuple(dedicated) + (central,), lam)


@dataclass
class TimesharePlan:
    parts: list


def timeshare_run(cfg: SystemConfig, vstar: Key, lam, store: MessageStore, pool: RandomnessPool,
                  user_seed: int = 0):
    """Pairwise scheme on the first ``lam*L`` symbols, hetdapac on the rest."""
    lam = parse_lambda(lam)
    if lam is None:
        raise ConfigError("timeshare needs lambda")
    L = store.length
    first = lam * L
    if first.denominator != 1:
        raise ConfigError(f"lambda*L = {first} is not an integer")
    first = int(first)
    rest = L - first
    if first and (cfg.D < 2 or first % dapac.subpackets(cfg.D)):
        raise ConfigError(f"lambda*L = {first} is not divisible by D(D-1)/2 = {dapac.subpackets(cfg.D)}")
    if rest % cfg.D:
        raise ConfigError(f"(1-lambda)*L = {rest} is not divisible by D = {cfg.D}")

    t = Transcript("timeshare", cfg.N, cfg.D, cfg.K, cfg.q, L, tuple(vstar), user_seed, 0,
                   lam=(lam.numerator, lam.denominator))
    plans = []
    decoded: list[int] = []
    for mod, lo, hi in ((dapac, 0, first), (hetdapac, first, L)):
        if hi == lo:
            continue
        part_pool = RandomnessPool(pool.seed, pool.q, f"{pool.namespace}/ts-{mod.NAME}")
        rng = UserRandom.seeded(derive_seed(user_seed, "ts", mod.NAME), cfg.q)
        sub, plan = mod.run(cfg, vstar, store.slice(lo, hi), part_pool, user_seed, rng=rng)
        pool.touched.update({(mod.NAME, k): v for k, v in part_pool.touched.items()})
        t.parts.append(sub)
        plans.append(plan)
        decoded.extend(sub.decoded)
    t.decoded = tuple(decoded)
    return t, TimesharePlan(plans)


def csv_row(m: SchemeMetrics, cfg: SystemConfig, L: int | None = None) -> dict:
    lam = m.lam
    if m.load_ratio == math.inf:
        ln, ld = 1, 0
    else:
        ln, ld = m.load_ratio.numerator, m.load_ratio.denominator
    down = m.downloads
    return {
        "scheme": m.scheme, "N": cfg.N, "D": cfg.D, "K": cfg.K, "q": cfg.q, "L": cfg.L if L is None else L,
        "lambda": "" if lam is None else str(lam),
        "rate_num": m.rate.numerator, "rate_den": m.rate.denominator,
        "load_num": ln, "load_den": ld,
        "cr_symbols": str(m.cr_symbols),
        "downloads_dedicated": down[0] if down else "",
        "downloads_central": down[-1] if down else "",
    }


CSV_COLUMNS = ["scheme", "N", "D", "K", "q", "L", "lambda", "rate_num", "rate_den", "load_num", "load_den",
               "cr_symbols", "downloads_dedicated", "downloads_central"]
