"""
Settings
Defaults from config.json (or a YAML file), overridden by TINDEP_* environment
variables and then by command-line flags
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml

from group_core import DEFAULT_MAX_ORDER

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = Path(__file__).resolve().parent / "config.json"

ENV_OVERRIDES = {
    "TINDEP_BUDGET": "budget",
    "TINDEP_THREADS": "threads",
    "TINDEP_MAX_ORDER": "max_group_order",
    "TINDEP_LOG_LEVEL": "log_level",
}

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
TABLE_FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Raised for unreadable or invalid settings"""


@dataclass(frozen=True)
class Settings:
    budget: int = 10 ** 8
    max_group_order: int = DEFAULT_MAX_ORDER
    threads: int = 1
    negation_pruning: bool = True
    cross_check: bool = True
    log_level: str = "WARNING"
    table_format: str = "csv"

    def validate(self) -> "Settings":
        if self.budget <= 0:
            raise ConfigError(f"budget must be positive, got {self.budget}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.max_group_order < 2:
            raise ConfigError(f"max_group_order must be >= 2, got {self.max_group_order}")
        if self.log_level.upper() not in LOG_LEVELS:
            raise ConfigError(f"unknown log level {self.log_level!r}")
        if self.table_format not in TABLE_FORMATS:
            raise ConfigError(f"table_format must be one of {TABLE_FORMATS}, got {self.table_format!r}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_INT_FIELDS = {"budget", "max_group_order", "threads"}
_BOOL_FIELDS = {"negation_pruning", "cross_check"}


def _coerce(key: str, value: Any, source: str) -> Any:
    if key in _INT_FIELDS:
        if isinstance(value, bool):
            raise ConfigError(f"{source}: {key} must be an integer, got {value!r}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{source}: {key} must be an integer, got {value!r}") from None
    if key in _BOOL_FIELDS:
        if isinstance(value, bool):
            return value
        if str(value).lower() in ("1", "true", "yes", "on"):
            return True
        if str(value).lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{source}: {key} must be a boolean, got {value!r}")
    return str(value)


def _read_file(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            if path.suffix.lower() in (".yaml", ".yml"):
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping, got {type(data).__name__}")
    return data


def settings_from_mapping(data: Mapping[str, Any], source: str = "settings") -> Settings:
    known = {f.name for f in fields(Settings)}
    values = {}
    for key, value in data.items():
        if key not in known:
            logger.warning("%s: ignoring unknown setting %r", source, key)
            continue
        values[key] = _coerce(key, value, source)
    return Settings(**values)


def load_settings(path: Optional[str] = None,
                  environ: Optional[Mapping[str, str]] = None) -> Settings:
    """Settings from a file (default config.json if present) plus env overrides"""
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigError(f"config file not found: {path}")
        data = _read_file(config_path)
    elif DEFAULT_CONFIG.is_file():
        config_path = DEFAULT_CONFIG
        data = _read_file(DEFAULT_CONFIG)
    else:
        config_path, data = None, {}

    settings = settings_from_mapping(data, str(config_path or "defaults"))

    env = os.environ if environ is None else environ
    overrides = {}
    for var, key in ENV_OVERRIDES.items():
        if env.get(var):
            overrides[key] = _coerce(key, env[var], var)
    if overrides:
        logger.debug("environment overrides: %s", overrides)
        settings = replace(settings, **overrides)
    return settings.validate()
