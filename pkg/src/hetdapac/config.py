"""Experiment configuration files (INI syntax) and user registries (JSON).

See ``docs/config.md`` for the schema.
"""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError
from .metrics import parse_lambda
from .model import Key, SystemConfig

INT_KEYS = ("N", "D", "K", "q", "L", "seed")


@dataclass
class RunConfig:
    system: SystemConfig
    scheme: str | None = None
    user: str | None = None
    registry: dict[str, Key] = field(default_factory=dict)
    lam: Fraction | None = None
    path: Path | None = None

    @property
    def vstar(self) -> Key | None:
        """The configured user's registered attribute vector, if any."""
        if self.user is None:
            return None
        try:
            return self.registry[self.user]
        except KeyError:
            raise ConfigError(f"user {self.user!r} is not in the registry") from None


def load_registry(path: str | Path, cfg: SystemConfig) -> dict[str, Key]:
    """Read ``{"user": ["a", "2", "y"], ...}`` into attribute index vectors."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read registry {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("registry must be a JSON object mapping user names to label lists")
    return {str(user): cfg.parse_vector(labels) for user, labels in raw.items()}


def parse_config(text: str, base: Path | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keep N, D, K case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if not cp.has_section("system"):
        raise ConfigError("config needs a [system] section")
    sysec = cp["system"]
    params = {}
    for k in INT_KEYS:
        if k in sysec:
            try:
                params[k] = int(sysec[k], 0)
            except ValueError:
                raise ConfigError(f"{k} must be an integer, got {sysec[k]!r}") from None
    for k in ("N", "D", "K"):
        if k not in params:
            raise ConfigError(f"[system] is missing {k}")
    unknown = set(sysec) - set(INT_KEYS) - {"scheme", "user", "registry", "lambda"}
    if unknown:
        raise ConfigError(f"unknown [system] keys: {sorted(unknown)}")
    if cp.has_section("alphabets"):
        alph = cp["alphabets"]
        try:
            params["alphabets"] = tuple(tuple(alph[str(n)].split()) for n in range(1, params["N"] + 1))
        except KeyError as exc:
            raise ConfigError(f"[alphabets] is missing attribute {exc.args[0]}") from None
    cfg = SystemConfig(**params)
    run = RunConfig(cfg, sysec.get("scheme"), sysec.get("user"), lam=parse_lambda(sysec.get("lambda")))
    if "registry" in sysec:
        reg = Path(sysec["registry"])
        if base is not None and not reg.is_absolute():
            reg = base / reg
        run.registry = load_registry(reg, cfg)
    return run


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    run = parse_config(text, path.parent)
    run.path = path
    return run
