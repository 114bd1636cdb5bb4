"""Run configuration files and command-line overrides."""

from __future__ import annotations

import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from gp_skrl.errors import ConfigError
from gp_skrl.schemas.config import RunConfig

_DATA_DIR = Path(__file__).resolve().parents[3] / "data"
DEFAULT_CONFIG = _DATA_DIR / "configs" / "default.json"


def strip_annotations(tree: Any) -> Any:
    """Drop every mapping key that starts with an underscore."""
    if isinstance(tree, dict):
        return {k: strip_annotations(v) for k, v in tree.items() if not k.startswith("_")}
    if isinstance(tree, list):
        return [strip_annotations(v) for v in tree]
    return tree


def parse_override(text: str) -> tuple[list[str], Any]:
    """``section.field=value``; the value is JSON when it parses, a bare string otherwise."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {text!r} is not of the form section.field=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(tree: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    out = json.loads(json.dumps(tree))
    for text in overrides:
        keys, value = parse_override(text)
        node = out
        for part in keys[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"override {text!r}: {part!r} is not a config section")
            node = child
        node[keys[-1]] = value
    return out


def load_run_config(path: str | Path | None = None, overrides: Sequence[str] = (), **fields: Any) -> RunConfig:
    """Defaults file (or ``path``), then overrides, then explicit fields; validated once at the end."""
    source = Path(path) if path is not None else DEFAULT_CONFIG
    if not source.is_file():
        raise ConfigError(f"config file not found: {source}")
    try:
        tree = strip_annotations(json.loads(source.read_text()))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {source} is not valid JSON: {exc}") from exc
    tree = apply_overrides(tree, overrides)
    tree.update({k: v for k, v in fields.items() if v is not None})
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration from {source}:\n{exc}") from exc
