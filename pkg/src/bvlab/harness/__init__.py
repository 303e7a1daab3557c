"""Configuration, run persistence, verification suites and the command line."""

from .config import ConfigError, load_config, shipped, shipped_configs
from .runner import convergence, limit, run

__all__ = ["ConfigError", "load_config", "shipped", "shipped_configs", "run", "convergence", "limit"]
