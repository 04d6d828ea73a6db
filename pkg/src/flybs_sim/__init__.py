from .base import ConfigError, DomainError, ExportError, FlyBSError, InfeasibleError
from .config import ScenarioConfig, settings
from .harness import run, sweep

__all__ = [
    "ConfigError",
    "DomainError",
    "ExportError",
    "FlyBSError",
    "InfeasibleError",
    "ScenarioConfig",
    "run",
    "settings",
    "sweep",
]
