"""
Configuration management: process settings from the environment and
experiment configs from flat key-value or JSON files
"""

import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict

from dotenv import dotenv_values
from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from tradenet.exceptions import ConfigurationError, InputFormatError
from tradenet.schemas import RunConfig

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Process settings from environment variables"""

    app_name: str = "tradenet"
    log_level: str = "INFO"

    # Conservation sweep after every settlement
    debug: bool = False

    # Batch execution
    default_jobs: int = 1
    output_dir: str = "runs"

    # Cascades at or above this many collapsed agents are logged at INFO
    cascade_log_threshold: int = 50

    model_config = SettingsConfigDict(
        env_file=".env", env_prefix="TRADENET_", case_sensitive=False
    )


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


def _nest(flat: Dict[str, Any]) -> Dict[str, Any]:
    """Turn dotted keys into nested dictionaries"""
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        parts = key.strip().split(".")
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigurationError(f"{key}: '{part}' is both a value and a section")
            node = child
        node[parts[-1]] = None if value in ("", None) else value
    return nested


def _flatten(data: Dict[str, Any], prefix: str = "") -> Dict[str, str]:
    flat: Dict[str, str] = {}
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        elif isinstance(value, list):
            flat[dotted] = ",".join(str(item) for item in value)
        elif value is None:
            flat[dotted] = ""
        else:
            flat[dotted] = str(value)
    return flat


def validate_run_config(data: Dict[str, Any]) -> RunConfig:
    """
    Validate raw config data

    Raises:
        ConfigurationError: naming the first offending dotted key
    """
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(part) for part in error["loc"])
        raise ConfigurationError(f"{key}: {error['msg']}") from e


def load_run_config(path: str | Path) -> RunConfig:
    """
    Load a run config from a flat `section.key=value` file or a JSON file

    Args:
        path: Config file path (`.json` is parsed as JSON)

    Returns:
        Validated RunConfig

    Raises:
        InputFormatError: If the file cannot be read
        ConfigurationError: If a key is unknown or a value is invalid
    """
    path = Path(path)
    if not path.is_file():
        raise InputFormatError(str(path), "config file not found")

    if path.suffix.lower() == ".json":
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigurationError(
                f"{path}:{e.lineno}: invalid JSON ({e.msg})"
            ) from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top level must be an object")
        if any("." in key for key in data):
            data = _nest(data)
    else:
        data = _nest(dict(dotenv_values(path)))

    config = validate_run_config(data)
    logger.info(f"Loaded run config from {path}")
    return config


def dump_run_config(config: RunConfig) -> str:
    """Serialize a run config to the flat key-value format"""
    lines = [f"{key}={value}" for key, value in _flatten(config.model_dump()).items()]
    return "\n".join(lines) + "\n"
