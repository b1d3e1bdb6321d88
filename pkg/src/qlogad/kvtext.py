"""The ``key = value`` text grammar used by configs and checkpoint sidecars.

One assignment per line, ``#`` starts a comment, blank lines are ignored,
keys are case-sensitive and a repeated key is an error.
"""
from __future__ import annotations

from .errors import ConfigurationError


def parse_key_values(text: str) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigurationError(f"line {n}: expected 'key = value', got {raw.strip()!r}")
        if key in out:
            raise ConfigurationError(f"line {n}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def format_key_values(values: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def parse_bool(raw: str) -> bool:
    low = str(raw).strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigurationError(f"expected a boolean, got {raw!r}")
