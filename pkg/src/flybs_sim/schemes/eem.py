from ..baselines import BaselineKind, BaselineScheme
from ..model import FlyBSState, NodeState


class Eem(BaselineScheme):
    """Energy-efficient power allocation at a fixed position."""

    kind = BaselineKind.EEM

    def setup(self, nodes: list[NodeState]) -> FlyBSState:
        q = self.scenario.fixed_position()
        power = [self.limits.p_max_total / len(nodes)] * len(nodes)
        return FlyBSState(position=q, previous_position=q, power=power)
