from ..base import BaseScheme
from ..model import FlyBSState, NodeState, StepReport
from ..optimizer import pre_mission, step


class Proposed(BaseScheme):
    """Alternating water-filling and surrogate positioning with QoS guarantees."""

    def setup(self, nodes: list[NodeState]) -> FlyBSState:
        report = pre_mission(nodes, self.scenario.optimizer, self.limits)
        self.logger.info(f"Pre-mission position {tuple(round(c, 2) for c in report.position)}")
        return FlyBSState(position=report.position, previous_position=report.position, power=report.power)

    def step(self, k: int, state: FlyBSState, nodes: list[NodeState]) -> StepReport:
        return step(state.position, state.power, nodes, self.scenario.optimizer, self.limits, k)
