"""
Comparison schemes: max-min capacity (MMC), energy-efficiency maximization at a
fixed position (EEM) and EEM at the K-means centroid of the nodes (EEEM).

All of them share the constraint machinery of the proposed scheme.
"""

import math
from enum import Enum

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.optimize import bisect

from .base import BaseScheme, InfeasibleError, logger
from .channel import NodeArrays, as_arrays
from .feasibility import build_region, is_feasible, lemma1_quantities
from .config import ScenarioConfig
from .model import FlyBSState, Limits, NodeState, StepReport
from .optimizer import hold_report, make_report
from .positioning import closest_feasible_point
from .power_alloc import AllocationProblem, allocate, allocation_problem

log = logger.getChild("baselines")

MMC_TOL = 100.0
# tangent grid spacing for the floor-weighted centroid
CENTROID_SIGMA = 1e-6
CENTROID_ITERS = 20
DINKELBACH_RTOL = 1e-6
DINKELBACH_ITERS = 50
UNCONSTRAINED_DELTA_T = 1e6


class BaselineKind(str, Enum):
    MMC = "mmc"
    EEM = "eem"
    EEEM = "eeem"


def speed_region(q_prev, arrays: NodeArrays, limits: Limits):
    """Region with only the speed window and the altitude slab."""
    return build_region(q_prev, arrays.with_qos(0.0), np.zeros(len(arrays)), limits)


def floor_centroid(q_start, arrays: NodeArrays, region, h_min: float) -> np.ndarray:
    """
    Minimizer of the summed floor powers over the region, by re-weighted centroids:
    each pass weights the nodes by the floor slope at the current point and projects
    the weighted centroid back into the region.
    """
    q = np.asarray(q_start, dtype=float)
    for _ in range(CENTROID_ITERS):
        lq = lemma1_quantities(q, arrays, math.inf, h_min, CENTROID_SIGMA)
        if lq.vacuous:
            return q
        q_new = closest_feasible_point(lq.theta0, region, witness=q)
        moved = float(np.linalg.norm(q_new - q))
        q = q_new
        if moved < 1e-3:
            break
    return q


def _capacity_ceiling(arrays: NodeArrays, h_min: float, p_max: float) -> float:
    """Min over nodes of the capacity with the whole budget at the nearest admissible height."""
    d = np.maximum(h_min - arrays.positions[:, 2], 1e-3)
    snr = arrays.gain * p_max * d ** (-arrays.alpha) / arrays.noise
    return float(np.min(arrays.bandwidth * np.log2(1.0 + snr)))


def mmc_allocation(q, arrays: NodeArrays, c: float, p_max: float) -> np.ndarray:
    """Floors for a common target c, plus the leftover budget split in proportion to them."""
    floors = allocation_problem(q, arrays.with_qos(c), p_max).floor
    spare = p_max - floors.sum()
    share = floors / floors.sum() if floors.sum() > 0 else np.full(len(floors), 1.0 / len(floors))
    return floors + max(spare, 0.0) * share


def mmc_step(q_prev, p_prev, nodes, limits: Limits, cmin, k: int = 0, unconstrained_speed: bool = False) -> StepReport:
    """
    Bisection on a common capacity target c. For each c the position minimizing the
    summed floors is found, and c is admissible when those floors fit the budget.
    """
    arrays = as_arrays(nodes)
    q_prev = np.asarray(q_prev, dtype=float)
    move_limits = limits.model_copy(update={"delta_t": UNCONSTRAINED_DELTA_T}) if unconstrained_speed else limits
    region = speed_region(q_prev, arrays, move_limits)
    verdict = is_feasible(region)
    if not verdict.feasible:
        return hold_report(k, q_prev, p_prev, arrays, limits, verdict.reason or "no admissible move", CENTROID_SIGMA)
    start = np.asarray(verdict.witness, dtype=float)
    p_max = limits.p_max_total

    def best_position(c: float) -> np.ndarray:
        return floor_centroid(start, arrays.with_qos(c), region, limits.h_min)

    def overshoot(c: float) -> float:
        q = best_position(c)
        return float(allocation_problem(q, arrays.with_qos(c), p_max).floor.sum() - p_max)

    hi = _capacity_ceiling(arrays, limits.h_min, p_max)
    if overshoot(hi) <= 0:
        c_star = hi
    else:
        c_star = bisect(overshoot, 0.0, hi, xtol=MMC_TOL)
        while c_star > 0 and overshoot(c_star) > 0:
            c_star = max(c_star - MMC_TOL, 0.0)

    q = best_position(c_star)
    p = mmc_allocation(q, arrays, c_star, p_max)
    qos = np.broadcast_to(np.asarray(cmin, dtype=float), (len(arrays),))
    feasible = bool(c_star >= qos.max() * (1.0 - 1e-9))
    reason = None if feasible else f"max-min capacity {c_star:.4g} bit/s is below the QoS requirement"
    if not feasible:
        log.warning(f"step {k}: {reason}")
    report = make_report(k, q, q_prev, p, arrays, move_limits, feasible=feasible, iterations=1, reason=reason)
    log.debug(f"step {k}: common capacity {c_star:.6g} bit/s")
    return report


def dinkelbach(prob: AllocationProblem) -> tuple[np.ndarray, float]:
    """
    Maximizes sum capacity per watt. Each pass solves the priced water-filling for
    the current ratio eta and updates eta to the ratio of the new solution.

    Returns:
        tuple[np.ndarray, float]: powers and the final ratio eta.
    """
    p = allocate(prob)
    eta = prob.objective(p) / p.sum()
    for _ in range(DINKELBACH_ITERS):
        p = allocate(prob, price=eta)
        c = prob.objective(p)
        gap = c - eta * p.sum()
        if abs(gap) <= DINKELBACH_RTOL * max(c, 1.0):
            return p, eta
        eta = c / p.sum()
    log.warning(f"Dinkelbach stopped after {DINKELBACH_ITERS} passes with ratio {eta:.6g}")
    return p, eta


def energy_efficiency(prob: AllocationProblem, p) -> float:
    p = np.asarray(p, dtype=float)
    return prob.objective(p) / p.sum()


def eem_step(q, q_prev, p_prev, nodes, limits: Limits, k: int = 0) -> StepReport:
    """Energy-efficient powers at the given position; the position itself is not optimized."""
    arrays = as_arrays(nodes)
    q = np.asarray(q, dtype=float)
    try:
        p, _ = dinkelbach(allocation_problem(q, arrays, limits.p_max_total))
    except InfeasibleError as e:
        log.warning(f"step {k}: {e.reason}")
        p = np.asarray(p_prev, dtype=float)
        p = p * min(1.0, limits.p_max_total / p.sum()) if p.sum() > 0 else p
        return make_report(k, q, q_prev, p, arrays, limits, feasible=False, reason=e.reason)
    return make_report(k, q, q_prev, p, arrays, limits, feasible=True, iterations=1)


def kmeans_position(nodes, limits: Limits, seed: int = 0) -> np.ndarray:
    """Single K-means centroid of the nodes with the altitude clamped into the slab."""
    arrays = as_arrays(nodes)
    centroid, _ = kmeans2(arrays.positions, 1, iter=10, minit="points", seed=seed % 2**32)
    q = centroid[0].astype(float)
    q[2] = np.clip(q[2], limits.h_min, limits.h_max)
    return q


def eeem_step(q_prev, p_prev, nodes, limits: Limits, k: int = 0, seed: int = 0) -> StepReport:
    arrays = as_arrays(nodes)
    q_prev = np.asarray(q_prev, dtype=float)
    target = kmeans_position(arrays, limits, seed)
    region = speed_region(q_prev, arrays, limits)
    verdict = is_feasible(region)
    if not verdict.feasible:
        return hold_report(k, q_prev, p_prev, arrays, limits, verdict.reason or "no admissible move", CENTROID_SIGMA)
    q = closest_feasible_point(target, region, witness=np.asarray(verdict.witness))
    return eem_step(q, q_prev, p_prev, arrays, limits, k)


def baseline_step(kind: BaselineKind, state: FlyBSState, nodes, scenario: ScenarioConfig, k: int = 0, seed: int = 0) -> StepReport:
    limits = scenario.limits()
    if kind is BaselineKind.MMC:
        return mmc_step(
            state.position, state.power, nodes, limits, scenario.cmin, k, unconstrained_speed=scenario.mmc_unconstrained_speed
        )
    if kind is BaselineKind.EEM:
        return eem_step(state.position, state.position, state.power, nodes, limits, k)
    return eeem_step(state.position, state.power, nodes, limits, k, seed=seed)


class BaselineScheme(BaseScheme):
    """Comparison scheme; subclasses pick the baseline through `kind` and only place the FlyBS."""

    kind: BaselineKind

    def step(self, k: int, state: FlyBSState, nodes: list[NodeState]) -> StepReport:
        return baseline_step(self.kind, state, nodes, self.scenario, k, seed=self.shared.get("seed", 0))
