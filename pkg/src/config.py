"""Configuration loader for realopt.

Loads configuration from YAML file with environment variable substitution.
Command-line flags override the values loaded here.
"""

import os
import re
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# Default config file locations (in order of priority)
CONFIG_PATHS = [
    "config.local.yaml",  # Local overrides (not in git)
    "config.yaml",        # Default config
]

# Caps simulation worker threads; never changes results
THREADS_ENV_VAR = "REALOPT_THREADS"

SIMULATION_MODES = ("expectation_form", "branch_sampling")
QUANTILE_MODES = ("exact", "paper")
REPORT_FORMATS = ("table", "csv")


@dataclass
class SimulationConfig:
    """Monte Carlo defaults."""
    samples: int = 100000
    seed: int = 0
    alpha: float = 0.05
    mode: str = "expectation_form"
    histogram_buckets: int = 50
    # Worker threads; results are identical for any value
    threads: int = 1


@dataclass
class RiskConfig:
    """Analytic risk report defaults."""
    alpha: float = 0.05
    quantile: str = "exact"


@dataclass
class ReportingConfig:
    """Output rendering."""
    format: str = "table"


@dataclass
class LoggingConfig:
    """Logging configuration."""
    level: str = "INFO"
    file: str = ""  # Empty: console only
    max_size_mb: int = 10
    backup_count: int = 5


@dataclass
class Config:
    """Main configuration container.

    This is the root configuration object containing all settings.
    """
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    risk: RiskConfig = field(default_factory=RiskConfig)
    reporting: ReportingConfig = field(default_factory=ReportingConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    # Internal: base path for resolving relative paths
    _base_path: Path = field(default_factory=Path.cwd)

    def resolve_path(self, path: str) -> Path:
        """Resolve a path relative to the config file location."""
        p = Path(path)
        if p.is_absolute():
            return p
        return self._base_path / p


def _substitute_env_vars(value: Any) -> Any:
    """Recursively substitute ${VAR} patterns with environment variables.

    Args:
        value: Value to process (can be str, dict, list, or other)

    Returns:
        Value with environment variables substituted
    """
    if isinstance(value, str):
        pattern = r'\$\{([^}]+)\}'

        def replace_env(match):
            var_name = match.group(1)
            env_value = os.environ.get(var_name, "")
            if not env_value:
                logger.warning(f"Environment variable {var_name} not set")
            return env_value

        return re.sub(pattern, replace_env, value)

    elif isinstance(value, dict):
        return {k: _substitute_env_vars(v) for k, v in value.items()}

    elif isinstance(value, list):
        return [_substitute_env_vars(item) for item in value]

    return value


def _coerce(value: Any, default: Any) -> Any:
    """Convert substituted strings back to the type of the field default."""
    if not isinstance(value, str) or isinstance(default, str):
        return value
    try:
        if isinstance(default, bool):
            return value.strip().lower() in ("true", "1", "yes")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError:
        logger.warning(f"Cannot convert {value!r} to {type(default).__name__}, using default {default!r}")
        return default
    return value


def _dict_to_dataclass(cls, data: Dict[str, Any]):
    """Convert a dictionary to a dataclass, handling nested structures.

    Args:
        cls: The dataclass type to create
        data: Dictionary of values

    Returns:
        Instance of cls populated with data
    """
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ValueError(f"Expected a mapping for {cls.__name__}, got {type(data).__name__}")

    defaults = cls()
    kwargs = {}
    for name, f in cls.__dataclass_fields__.items():
        if name.startswith('_') or name not in data:
            continue

        value = data[name]
        default = getattr(defaults, name)

        # Handle nested dataclasses
        if hasattr(default, '__dataclass_fields__'):
            kwargs[name] = _dict_to_dataclass(type(default), value)
        else:
            kwargs[name] = _coerce(value, default)

    unknown = sorted(k for k in data if k not in cls.__dataclass_fields__)
    if unknown:
        logger.warning(f"Ignoring unknown {cls.__name__} keys: {', '.join(unknown)}")

    return cls(**kwargs)


def _apply_env_overrides(config: Config) -> None:
    """Apply REALOPT_THREADS, ignoring values that are not positive integers."""
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return
    try:
        threads = int(raw)
    except ValueError:
        logger.warning(f"{THREADS_ENV_VAR}={raw!r} is not an integer, ignoring")
        return
    if threads < 1:
        logger.warning(f"{THREADS_ENV_VAR} must be at least 1, ignoring {threads}")
        return
    logger.debug(f"{THREADS_ENV_VAR} set - using {threads} simulation thread(s)")
    config.simulation.threads = threads


def load_config(config_path: Optional[str] = None, base_path: Optional[Path] = None) -> Config:
    """Load configuration from YAML file.

    Args:
        config_path: Path to config file. If None, searches default locations
            and falls back to defaults when none exists.
        base_path: Base path for resolving relative paths. Defaults to cwd.

    Returns:
        Config object with all settings loaded

    Raises:
        FileNotFoundError: If an explicit config_path does not exist
        yaml.YAMLError: If config file is invalid YAML
        ValueError: If the config structure is unusable
    """
    # Load .env file if present
    env_path = Path(base_path or Path.cwd()) / ".env"
    if env_path.exists():
        load_dotenv(env_path)
        logger.debug(f"Loaded environment from {env_path}")

    # Find config file
    if config_path:
        config_file = Path(config_path)
        if not config_file.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")
    else:
        base = base_path or Path.cwd()
        config_file = None
        for path in CONFIG_PATHS:
            candidate = base / path
            if candidate.exists():
                config_file = candidate
                break

    if config_file is None:
        logger.debug(f"No config file found (searched: {', '.join(CONFIG_PATHS)}), using defaults")
        config = get_default_config()
    else:
        logger.info(f"Loading config from {config_file}")
        with open(config_file, 'r') as f:
            raw_config = yaml.safe_load(f)

        if raw_config is None:
            raw_config = {}

        # Substitute environment variables
        config_data = _substitute_env_vars(raw_config)

        config = _dict_to_dataclass(Config, config_data)
        config._base_path = config_file.parent

    _apply_env_overrides(config)
    _validate_config(config)

    return config


def _validate_config(config: Config) -> None:
    """Validate configuration settings.

    Out-of-range values are clamped or reset with a warning; only
    unrecoverable settings raise.

    Args:
        config: Config object to validate

    Raises:
        ValueError: If settings are invalid beyond repair
    """
    errors = []
    sim = config.simulation

    if sim.samples < 1:
        logger.warning("simulation.samples must be at least 1, using 1")
        sim.samples = 1

    if not 0 <= sim.seed <= 2 ** 64 - 1:
        errors.append(f"simulation.seed must be in [0, 2^64 - 1], got {sim.seed}")

    if sim.histogram_buckets < 1:
        logger.warning("simulation.histogram_buckets must be at least 1, using 50")
        sim.histogram_buckets = 50

    if sim.threads < 1:
        logger.warning("simulation.threads must be at least 1, using 1")
        sim.threads = 1

    if sim.mode not in SIMULATION_MODES:
        errors.append(f"simulation.mode must be one of {', '.join(SIMULATION_MODES)}, got {sim.mode!r}")

    for section, cfg in (("simulation", sim), ("risk", config.risk)):
        if not 0 < cfg.alpha <= 0.5:
            logger.warning(f"{section}.alpha must be in (0, 0.5], using 0.05")
            cfg.alpha = 0.05

    if config.risk.quantile == "paper_compat":
        config.risk.quantile = "paper"
    if config.risk.quantile not in QUANTILE_MODES:
        errors.append(f"risk.quantile must be one of {', '.join(QUANTILE_MODES)}, got {config.risk.quantile!r}")

    if config.reporting.format not in REPORT_FORMATS:
        logger.warning(f"reporting.format must be one of {', '.join(REPORT_FORMATS)}, using table")
        config.reporting.format = "table"

    if errors:
        raise ValueError("Configuration errors:\n  " + "\n  ".join(errors))


def get_default_config() -> Config:
    """Get a Config object with all default values.

    Useful for testing or when no config file exists.

    Returns:
        Config with default values
    """
    return Config()
