import sys
import logging
from typing import TYPE_CHECKING, Any, Optional

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    handlers=[logging.StreamHandler(sys.stdout)],
)
logger = logging.getLogger("flybs")

if TYPE_CHECKING:
    from .config import ScenarioConfig
    from .model import FlyBSState, NodeState, StepReport


class FlyBSError(Exception):
    pass


class DomainError(FlyBSError, ValueError):
    """Singular or out-of-domain numerical input."""


class InfeasibleError(FlyBSError):
    def __init__(self, reason: str, deficit: Optional[float] = None):
        super().__init__(reason)
        self.reason = reason
        self.deficit = deficit


class ConfigError(FlyBSError):
    pass


class ExportError(FlyBSError):
    pass


# Abstract class that each scheme must inherit
class BaseScheme:
    def __init__(self, name: str, scenario: "ScenarioConfig", logger: logging.Logger, shared: dict[str, Any]):
        self.name = name
        self.scenario = scenario
        self.logger = logger.getChild(name)
        self.shared = shared
        self.limits = scenario.limits()

    def setup(self, nodes: list["NodeState"]) -> "FlyBSState":
        """
        Place the FlyBS before the mission clock starts.
        """
        raise NotImplementedError("Scheme must implement setup()")

    def step(self, k: int, state: "FlyBSState", nodes: list["NodeState"]) -> "StepReport":
        raise NotImplementedError("Scheme must implement step()")

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r})"
