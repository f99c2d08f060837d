"""
Flat ``key = value`` experiment files.

Lines are ``key = value`` pairs; ``#`` starts a comment. Scalars are decoded
with YAML rules; ``scheme`` and ``dims`` take comma-separated lists. Values
given as CLI flags override the file.
"""

from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml
from loguru import logger
from pydantic import ValidationError

from hhmala.config import Config
from hhmala.errors import ConfigError

from ..schemas.experiment import ExperimentConfig

LIST_KEYS = {"scheme", "dims"}


def _decode(key: str, raw: str) -> Any:
    raw = raw.strip()
    if key in LIST_KEYS:
        return [_decode_scalar(key, item) for item in raw.split(",") if item.strip()]
    return _decode_scalar(key, raw)


def _decode_scalar(key: str, raw: str) -> Any:
    try:
        return yaml.safe_load(raw.strip())
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse value of {key!r}: {raw!r}", key=key) from e


def library_defaults(config: Config) -> Dict[str, Any]:
    """Experiment keys seeded from the library config (adaptation and VI sections)."""
    a, v = config.adaptation, config.vi
    defaults = {
        "m": a.m, "alpha_pca": a.alpha_pca, "c_pca": a.c_pca, "alpha_general": a.alpha_general,
        "alpha_star": a.alpha_star, "sigma0": a.sigma0,
        "vi_iterations": v.iterations, "vi_batch_size": v.batch_size, "vi_gamma_mu": v.gamma_mu,
        "vi_gamma_delta": v.gamma_delta, "vi_gamma_v": v.gamma_v,
    }
    return {k: value for k, value in defaults.items() if value is not None}


def read_config_file(path: str | Path) -> Dict[str, str]:
    """Raw key/value strings of a config file, in file order."""
    config_file = Path(path)
    if not config_file.exists():
        raise ConfigError(f"Configuration file not found: {path}")
    values: Dict[str, str] = {}
    for lineno, line in enumerate(config_file.read_text().splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"{config_file}:{lineno}: expected 'key = value', got {content!r}")
        key, raw = (part.strip() for part in content.split("=", 1))
        if key in values:
            raise ConfigError(f"{config_file}:{lineno}: duplicate key {key!r}", key=key)
        values[key] = raw
    return values


def parse_config(
    path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, str]] = None,
    defaults: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """
    Build and validate an ExperimentConfig.

    Args:
        path: Flat config file; optional when every required key comes from overrides.
        overrides: Raw string values (from CLI flags) that replace file values.
        defaults: Typed values used for keys neither the file nor the overrides set.

    Raises:
        ConfigError: naming the unknown, missing or ill-typed key.
    """
    raw = read_config_file(path) if path is not None else {}
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})

    known = set(ExperimentConfig.model_fields)
    for key in raw:
        if key not in known:
            raise ConfigError(f"Unknown configuration key: {key!r}", key=key)

    decoded = dict(defaults or {})
    decoded.update({key: _decode(key, value) for key, value in raw.items()})
    try:
        config = ExperimentConfig(**decoded)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first["loc"] else None
        if first["type"] == "missing":
            raise ConfigError(f"Missing required key: {key!r}", key=key) from e
        raise ConfigError(f"Invalid value for {key!r}: {first['msg']}", key=key) from e
    logger.debug(f"Resolved experiment config {config.config_hash()}: {config.model_dump()}")
    return config
