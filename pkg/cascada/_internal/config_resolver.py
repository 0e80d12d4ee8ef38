"""
Configuration resolver for Cascada.

This module implements the layered configuration used by the command line:
settings cascade from library defaults to values carried by the instance
(its budget), then to a ``--config`` JSON file, then to explicit flags.
"""

import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, TypeVar

from cascada.exceptions import UsageError

logger = logging.getLogger(__name__)

C = TypeVar("C")

LEVELS = ("flag", "file", "instance", "default")


@dataclass
class ResolvedConfig:
    """
    Resolved configuration after merging all levels.

    ``origin`` records which level each value came from.
    """

    values: dict[str, Any]
    origin: dict[str, str] = field(default_factory=dict)

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def build(self, config_type: type[C]) -> C:
        """
        Instantiate a configuration dataclass from the resolved values.

        Keys the dataclass does not declare are ignored; validation errors of
        the dataclass surface as ``UsageError``.
        """
        names = {f.name for f in fields(config_type)}  # type: ignore[arg-type]
        kwargs = {k: v for k, v in self.values.items() if k in names}
        try:
            return config_type(**kwargs)
        except (TypeError, ValueError) as e:
            raise UsageError(str(e)) from e


class ConfigResolver:
    """
    Resolves configuration by merging four levels, highest first:

    1. Command-line flags
    2. The ``--config`` file
    3. Instance-level values
    4. Library defaults

    A level only counts for a key when its value is not None.
    """

    @staticmethod
    def load_file(path: str | Path | None) -> dict[str, Any]:
        """
        Read a JSON config file.

        Raises:
            UsageError: If the file cannot be read or is not a JSON object
        """
        if path is None:
            return {}
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"Cannot read config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise UsageError(f"Config file {path} must hold a JSON object")
        # CLI spellings use dashes
        return {key.replace("-", "_"): value for key, value in data.items()}

    @staticmethod
    def resolve(
        flags: dict[str, Any],
        file_config: dict[str, Any],
        instance_config: dict[str, Any],
        defaults: dict[str, Any],
    ) -> ResolvedConfig:
        """
        Resolve every key found at any level.

        Args:
            flags: Values given on the command line (None when absent)
            file_config: Values from the config file
            instance_config: Values carried by the instance
            defaults: Library defaults

        Returns:
            Resolved configuration
        """
        levels = dict(zip(LEVELS, (flags, file_config, instance_config, defaults), strict=True))
        keys: list[str] = []
        for config in levels.values():
            keys.extend(k for k in config if k not in keys)

        resolved = ResolvedConfig(values={})
        for key in keys:
            for level, config in levels.items():
                value = config.get(key)
                if value is not None:
                    resolved.values[key] = value
                    resolved.origin[key] = level
                    break
        logger.debug("Resolved configuration: %s", resolved.origin)
        return resolved

