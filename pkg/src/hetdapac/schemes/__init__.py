"""Retrieval schemes, keyed by their command-line names."""
from . import d3, dapac, hetdapac

SCHEMES = {m.NAME: m for m in (dapac, hetdapac, d3)}


def get(name: str):
    from ..errors import ConfigError
    try:
        return SCHEMES[name]
    except KeyError:
        raise ConfigError(f"unknown scheme {name!r}; choose from {sorted(SCHEMES)}") from None
