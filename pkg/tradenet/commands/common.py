"""
Options and config resolution shared by every command
"""

import argparse
from pathlib import Path
from typing import Any, Optional

from tradenet.config import load_run_config, validate_run_config
from tradenet.schemas import RunConfig


def add_common_arguments(parser: argparse.ArgumentParser, seed: bool = True) -> None:
    parser.add_argument("--config", type=str, help="Run config file (key=value or .json)")
    parser.add_argument("--out", type=str, help="Output directory")
    if seed:
        parser.add_argument("--seed", type=int, help="Master seed, overrides the config")


def resolve_config(args: argparse.Namespace, **sections: dict[str, Any]) -> RunConfig:
    """
    Load the run config named by --config (defaults otherwise) and apply
    command-line overrides; None values leave the config untouched

    Raises:
        ConfigurationError: If an override is invalid, naming its dotted key
    """
    config = load_run_config(args.config) if args.config else RunConfig()
    data = config.model_dump()
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    for section, values in sections.items():
        for key, value in values.items():
            if value is not None:
                data[section][key] = value
    return validate_run_config(data)


def output_dir(args: argparse.Namespace, config: RunConfig, fallback: Optional[Path] = None) -> Path:
    if args.out:
        return Path(args.out)
    if fallback is not None:
        return fallback
    return Path(config.output_dir)
