import importlib
from pathlib import Path
from typing import Any, Optional

from .base import BaseScheme, ConfigError, logger
from .config import ScenarioConfig
from .utils import camel_to_snake


class SchemeManager:
    """
    Discovers `BaseScheme` subclasses in the schemes package and instantiates them by snake-case name.
    """

    def __init__(self, package: str = "flybs_sim.schemes"):
        self.package = package
        self.schemes: dict[str, type[BaseScheme]] = {}

    def discover(self) -> dict[str, type[BaseScheme]]:
        if self.schemes:
            return self.schemes
        pkg = importlib.import_module(self.package)
        for file in sorted(Path(pkg.__file__).parent.glob("*.py")):
            if file.name.startswith("__"):
                continue
            mod = importlib.import_module(f"{self.package}.{file.stem}")

            # Register valid BaseScheme subclasses defined in this module
            scheme_classes = [
                cls
                for cls in mod.__dict__.values()
                if isinstance(cls, type)
                and issubclass(cls, BaseScheme)
                and cls is not BaseScheme
                and cls.__module__ == mod.__name__
            ]
            if not scheme_classes:
                logger.warning(f"⚠️ No BaseScheme found in {file.stem}")
            for scheme_class in scheme_classes:
                self.schemes[camel_to_snake(scheme_class.__name__)] = scheme_class
        logger.debug(f"Schemes available: {sorted(self.schemes)}")
        return self.schemes

    def names(self) -> list[str]:
        return sorted(self.discover())

    def create(self, name: str, scenario: ScenarioConfig, shared: Optional[dict[str, Any]] = None) -> BaseScheme:
        schemes = self.discover()
        if name not in schemes:
            raise ConfigError(f"unknown scheme `{name}`, expected one of {sorted(schemes)}")
        shared = shared if shared is not None else {}
        shared.setdefault("metadata", {"scheme": name})
        return schemes[name](name=name, scenario=scenario, logger=logger, shared=shared)
