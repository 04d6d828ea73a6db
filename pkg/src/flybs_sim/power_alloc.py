"""
Water-filling power split at a fixed FlyBS position.

Maximizes sum_i B_i log2(1 + a_i p_i) (minus price * sum_i p_i when a price is
given) subject to p_i >= floor_i and sum_i p_i <= p_max.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .base import DomainError, InfeasibleError, logger
from .channel import LN2, as_arrays, snr_threshold
from .model import NodeState

log = logger.getChild("power_alloc")


@dataclass(frozen=True, eq=False)
class AllocationProblem:
    link_gain: np.ndarray
    floor: np.ndarray
    p_max: float
    bandwidth: np.ndarray

    def __len__(self):
        return len(self.link_gain)

    def objective(self, p) -> float:
        return float(np.sum(self.bandwidth * np.log1p(self.link_gain * np.asarray(p, dtype=float)) / LN2))

    def marginal_utility(self, p) -> np.ndarray:
        return self.bandwidth * self.link_gain / ((1.0 + self.link_gain * np.asarray(p, dtype=float)) * LN2)


def allocation_problem(q, nodes, p_max: float) -> AllocationProblem:
    arrays = as_arrays(nodes)
    a = arrays.link_gains(q)
    return AllocationProblem(link_gain=a, floor=arrays.snr_thresholds() / a, p_max=p_max, bandwidth=arrays.bandwidth)


def qos_floor(node: NodeState, d: float) -> float:
    if d <= 0:
        raise DomainError(f"distance must be positive, got {d}")
    ch = node.channel
    return d**ch.pathloss_exp * ch.noise_plus_interference * snr_threshold(node.qos_min, ch) / ch.gain_coeff


def _water_level(prob: AllocationProblem, lam: float) -> np.ndarray:
    return np.maximum(prob.floor, prob.bandwidth / (lam * LN2) - 1.0 / prob.link_gain)


def allocate(prob: AllocationProblem, price: float = 0.0) -> np.ndarray:
    """
    Closed-form KKT solution p_i = max(floor_i, B_i / (lambda ln2) - 1/a_i).

    lambda is bracketed between the marginal utilities at the floors and at
    floor + p_max, bisected in log space, then fixed exactly from the active set.
    With a positive `price` the budget only binds when the priced optimum exceeds it.

    Raises:
        InfeasibleError: the floors alone exceed p_max; `deficit` holds the gap in W.
    """
    floor, a, bw = prob.floor, prob.link_gain, prob.bandwidth
    total_floor = math.fsum(floor)
    if total_floor > prob.p_max * (1.0 + 1e-12):
        raise InfeasibleError(
            f"QoS floors need {total_floor:.6g} W but the budget is {prob.p_max:.6g} W",
            deficit=total_floor - prob.p_max,
        )
    if price > 0:
        p = _water_level(prob, price)
        if p.sum() <= prob.p_max:
            return p
    if total_floor >= prob.p_max:
        return floor.copy()

    lam_hi = float(np.max(prob.marginal_utility(floor)))
    lam_lo = float(np.min(bw * a / ((1.0 + a * (floor + prob.p_max)) * LN2)))

    def residual(log_lam: float) -> float:
        return float(_water_level(prob, math.exp(log_lam)).sum() - prob.p_max)

    lam = math.exp(bisect(residual, math.log(lam_lo), math.log(lam_hi), xtol=1e-12))

    # exact level for the active set, repeated until the set is stable
    for _ in range(len(floor) + 1):
        active = bw / (lam * LN2) - 1.0 / a > floor
        if not active.any():
            break
        budget = prob.p_max - floor[~active].sum() + np.sum(1.0 / a[active])
        new_lam = bw[active].sum() / (budget * LN2)
        if new_lam == lam or np.array_equal(bw / (new_lam * LN2) - 1.0 / a > floor, active):
            lam = new_lam
            break
        lam = new_lam

    p = _water_level(prob, lam)
    log.debug(f"water level lambda={lam:.6g}, {int((p > floor).sum())}/{len(p)} nodes above floor")
    return p
