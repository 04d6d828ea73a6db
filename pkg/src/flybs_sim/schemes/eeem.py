from ..baselines import BaselineKind, BaselineScheme, kmeans_position
from ..model import FlyBSState, NodeState, as_vec3


class Eeem(BaselineScheme):
    """EEM at the K-means centroid of the nodes, tracked within the speed limit."""

    kind = BaselineKind.EEEM

    def setup(self, nodes: list[NodeState]) -> FlyBSState:
        q = as_vec3(kmeans_position(nodes, self.limits, self.shared.get("seed", 0)))
        power = [self.limits.p_max_total / len(nodes)] * len(nodes)
        return FlyBSState(position=q, previous_position=q, power=power)
