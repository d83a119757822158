"""In-process protocol runs: one call from configuration to decoded transcript."""
from __future__ import annotations

from .errors import ConfigError
from .metrics import timeshare_run
from .model import Key, MessageStore, RandomnessPool, SystemConfig, validate_vector
from .randomness import derive_seed
from .schemes import get


def make_store(cfg: SystemConfig, seed: int | None = None) -> MessageStore:
    return MessageStore(cfg, derive_seed(cfg.seed if seed is None else seed, "msg"))


def make_pool(cfg: SystemConfig, seed: int | None = None) -> RandomnessPool:
    return RandomnessPool(derive_seed(cfg.seed if seed is None else seed, "pool"), cfg.q)


def run_scheme(cfg: SystemConfig, scheme: str, vstar: Key, store: MessageStore | None = None,
               pool: RandomnessPool | None = None, user_seed: int | None = None, lam=None):
    """Run ``scheme`` for ``vstar`` and return ``(transcript, plan)``."""
    vstar = validate_vector(cfg, vstar)
    store = store if store is not None else make_store(cfg)
    pool = pool if pool is not None else make_pool(cfg)
    user_seed = cfg.seed if user_seed is None else user_seed
    if scheme == "timeshare":
        return timeshare_run(cfg, vstar, lam, store, pool, user_seed)
    if lam is not None:
        raise ConfigError("lambda only applies to the timeshare scheme")
    return get(scheme).run(cfg, vstar, store, pool, user_seed)
