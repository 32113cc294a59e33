"""Flat ``key = value`` configuration files for :class:`PipelineConfig`."""
from __future__ import annotations

import dataclasses
from pathlib import Path

from .pipeline import PipelineConfig

# short names as they appear in the literature
ALIASES = {
    "m": "patch_size",
    "o": "overlap",
    "b": "border",
    "s": "interval",
    "l": "search_size",
    "K_b": "k_new",
    "K_o": "k_track",
    "L": "max_iter",
    "eps": "tol",
    "epsilon": "tol",
}

_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _convert(name, raw):
    raw = raw.strip()
    default = _FIELDS[name].default
    if name == "rank_max":
        return None if raw.lower() in ("", "none") else int(raw)
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    return float(raw)


def canonical_key(key):
    key = key.strip()
    key = ALIASES.get(key, key)
    key = key.replace("-", "_")
    if key not in _FIELDS:
        raise ValueError(f"unknown configuration key {key!r}")
    return key


def parse_config_text(text, source="<config>"):
    """Parse ``key = value`` lines (``#`` starts a comment) into field overrides."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, raw = line.split("=", 1)
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ValueError(f"{source}:{lineno}: expected 'key = value'")
            key, raw = parts
        try:
            name = canonical_key(key)
            values[name] = _convert(name, raw)
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from exc
    return values


def load_config(path=None, **overrides):
    """Defaults, then the file at ``path``, then non-None ``overrides``."""
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file {path} does not exist")
        values.update(parse_config_text(path.read_text(), str(path)))
    for key, val in overrides.items():
        if val is not None:
            values[canonical_key(key)] = val
    return PipelineConfig(**values)


def dump_config(cfg: PipelineConfig):
    return "".join(f"{f.name} = {getattr(cfg, f.name)}\n" for f in dataclasses.fields(cfg))
