from ..baselines import BaselineKind, BaselineScheme, mmc_step
from ..model import FlyBSState, NodeState
from ..optimizer import SETUP_DELTA_T, initial_placement


class Mmc(BaselineScheme):
    """Max-min capacity: the common capacity target is found by bisection each step."""

    kind = BaselineKind.MMC

    def setup(self, nodes: list[NodeState]) -> FlyBSState:
        q0, p0 = initial_placement(nodes, self.limits)
        relaxed = self.limits.model_copy(update={"delta_t": SETUP_DELTA_T})
        report = mmc_step(q0, p0, nodes, relaxed, self.scenario.cmin, k=0)
        return FlyBSState(position=report.position, previous_position=report.position, power=report.power)
