"""
Per-timestep alternating optimization: water-filling at a fixed position, then a
move towards the radial surrogate's peak inside the constraint region, until the
FlyBS stops moving.
"""

from typing import Optional

import numpy as np

from .base import InfeasibleError, logger
from .channel import NodeArrays, as_arrays
from .feasibility import build_region, is_feasible, lemma1_quantities
from .model import Limits, OptimizerConfig, StepReport, as_vec3
from .positioning import build_radial_approx, position_update
from .power_alloc import allocate, allocation_problem
from .propulsion import flight_speed, propulsion_power, speed_interval

log = logger.getChild("optimizer")

GUARD_RTOL = 1e-9
SETUP_DELTA_T = 1e3
ENVELOPE_SLACKS = ("altitude_low", "altitude_high", "speed", "propulsion")
ENVELOPE_ATOL = 1e-6


def constraint_slacks(q, q_prev, p, nodes, limits: Limits) -> dict[str, float]:
    """Signed margins of every constraint at (q, p); negative means violated."""
    arrays = as_arrays(nodes)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    v = flight_speed(q, q_prev, limits.delta_t)
    return {
        "qos": float(np.min(arrays.capacities(q, p) - arrays.qos_min)),
        "altitude_low": float(q[2] - limits.h_min),
        "altitude_high": float(limits.h_max - q[2]),
        "speed": float(limits.v_max - v),
        "propulsion": float(limits.p_pr_th - propulsion_power(v, limits.propulsion)),
        "power": float(limits.p_max_total - p.sum()),
    }


def make_report(
    k: int,
    q,
    q_prev,
    p,
    arrays: NodeArrays,
    limits: Limits,
    feasible: bool,
    iterations: int = 0,
    reason: Optional[str] = None,
    trace: Optional[list[float]] = None,
) -> StepReport:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    caps = arrays.capacities(q, p)
    return StepReport(
        k=k,
        position=as_vec3(q),
        power=p.tolist(),
        capacities=caps.tolist(),
        c_tot=float(caps.sum()),
        iterations=iterations,
        feasible=feasible,
        reason=reason,
        slacks=constraint_slacks(q, q_prev, p, arrays, limits),
        iteration_capacities=trace or [],
        propulsion_power=propulsion_power(flight_speed(q, q_prev, limits.delta_t), limits.propulsion),
    )


def clip_to_envelope(q_prev, target, limits: Limits) -> np.ndarray:
    """Moves from q_prev towards target by a step length inside the speed window, then clamps altitude."""
    q_prev = np.asarray(q_prev, dtype=float)
    target = np.asarray(target, dtype=float).copy()
    target[2] = np.clip(target[2], limits.h_min, limits.h_max)
    try:
        window = speed_interval(limits.p_pr_th, limits.v_max, limits.propulsion)
        lo, hi = window.v_lo * limits.delta_t, window.v_hi * limits.delta_t
    except InfeasibleError:
        lo = hi = 0.0
    step = target - q_prev
    dist = float(np.linalg.norm(step))
    direction = step / dist if dist > 0 else np.array([1.0, 0.0, 0.0])
    q = q_prev + direction * min(max(dist, lo), hi)
    q[2] = np.clip(q[2], limits.h_min, limits.h_max)
    return q


def greedy_floors(floor: np.ndarray, p_prev: np.ndarray, p_max: float) -> np.ndarray:
    """Grants QoS floors in order of largest deficit against the previous powers while budget remains."""
    p = np.zeros_like(floor)
    budget = p_max
    for i in np.argsort(-(floor - p_prev), kind="stable"):
        if floor[i] <= budget:
            p[i] = floor[i]
            budget -= floor[i]
    return p


def hold_report(k: int, q_prev, p_prev, arrays: NodeArrays, limits: Limits, reason: str, sigma: float) -> StepReport:
    """
    Fallback when no admissible position exists: drift towards the QoS-bound centroid
    within the speed window and hand out what floors the budget covers.
    """
    lq = lemma1_quantities(q_prev, arrays, limits.p_max_total, limits.h_min, sigma)
    q = clip_to_envelope(q_prev, lq.theta0, limits)
    prob = allocation_problem(q, arrays, limits.p_max_total)
    try:
        p = allocate(prob)
    except InfeasibleError as e:
        p = greedy_floors(prob.floor, np.asarray(p_prev, dtype=float), limits.p_max_total)
        log.warning(f"step {k}: infeasible ({reason}); floors short by {e.deficit:.4g} W")
        return make_report(k, q, q_prev, p, arrays, limits, feasible=False, reason=reason)
    report = make_report(k, q, q_prev, p, arrays, limits, feasible=True)
    if min(report.slacks[key] for key in ENVELOPE_SLACKS) < -ENVELOPE_ATOL:
        log.warning(f"step {k}: infeasible ({reason})")
        return report.model_copy(update={"feasible": False, "reason": reason})
    return report


def _entry_point(q_prev, p_prev, arrays: NodeArrays, cfg: OptimizerConfig, limits: Limits):
    """Start of the alternation: q_prev when it is admissible, else a witness of the previous-power region."""
    window = speed_interval(limits.p_pr_th, limits.v_max, limits.propulsion)
    if window.v_lo == 0 and limits.h_min <= q_prev[2] <= limits.h_max:
        try:
            prob = allocation_problem(q_prev, arrays, limits.p_max_total)
            return q_prev.copy(), allocate(prob)
        except InfeasibleError:
            pass
    verdict = is_feasible(build_region(q_prev, arrays, p_prev, limits, cfg.sigma))
    if not verdict.feasible:
        raise InfeasibleError(verdict.reason or "empty constraint region")
    q = np.asarray(verdict.witness, dtype=float)
    return q, allocate(allocation_problem(q, arrays, limits.p_max_total))


def step(q_prev, p_prev, nodes, cfg: OptimizerConfig, limits: Limits, k: int = 0) -> StepReport:
    arrays = as_arrays(nodes)
    q_prev = np.asarray(q_prev, dtype=float)
    p_prev = np.asarray(p_prev, dtype=float)

    try:
        q_cur, p_cur = _entry_point(q_prev, p_prev, arrays, cfg, limits)
    except InfeasibleError as e:
        return hold_report(k, q_prev, p_prev, arrays, limits, e.reason, cfg.sigma)

    c_cur = float(arrays.capacities(q_cur, p_cur).sum())
    trace = [c_cur]
    iterations = 0
    for _ in range(cfg.max_iters):
        iterations += 1
        region = build_region(q_prev, arrays, p_cur, limits, cfg.sigma)
        if region.empty_reason:
            log.debug(f"step {k}: region empty at iteration {iterations}: {region.empty_reason}")
            break
        witness = q_cur if region.contains_point(q_cur) else None
        if witness is None:
            verdict = is_feasible(region)
            if not verdict.feasible:
                break
            witness = np.asarray(verdict.witness)
        approx = build_radial_approx(q_cur, arrays, p_cur, cfg.sigma, cfg.xi, limits.h_min)
        q_new = position_update(approx, region, witness)
        try:
            p_new = allocate(allocation_problem(q_new, arrays, limits.p_max_total))
        except InfeasibleError:
            log.debug(f"step {k}: move rejected, floors do not fit at the new position")
            break
        c_new = float(arrays.capacities(q_new, p_new).sum())
        if cfg.monotonicity_guard and c_new < c_cur * (1.0 - GUARD_RTOL):
            log.debug(f"step {k}: move rejected, capacity {c_new:.6g} < {c_cur:.6g}")
            break
        moved = float(np.linalg.norm(q_new - q_cur))
        q_cur, p_cur, c_cur = q_new, p_new, c_new
        trace.append(c_cur)
        if moved < cfg.epsilon:
            break

    return make_report(k, q_cur, q_prev, p_cur, arrays, limits, feasible=True, iterations=iterations, trace=trace)


def initial_placement(nodes, limits: Limits) -> tuple[np.ndarray, np.ndarray]:
    """Node centroid at H_min with the budget split equally."""
    arrays = as_arrays(nodes)
    q0 = arrays.positions.mean(axis=0)
    q0[2] = limits.h_min
    return q0, np.full(len(arrays), limits.p_max_total / len(arrays))


def pre_mission(nodes, cfg: OptimizerConfig, limits: Limits) -> StepReport:
    """One optimization pass from the initial placement with the speed limit lifted."""
    q0, p0 = initial_placement(nodes, limits)
    relaxed = limits.model_copy(update={"delta_t": SETUP_DELTA_T})
    report = step(q0, p0, nodes, cfg, relaxed, k=0)
    if not report.feasible:
        log.warning(f"pre-mission placement infeasible: {report.reason}")
    return report


def qos_satisfied(report: StepReport, qos_min, rtol: float = 1e-6) -> bool:
    caps = np.asarray(report.capacities)
    qos = np.broadcast_to(np.asarray(qos_min, dtype=float), caps.shape)
    return bool(np.all(caps >= qos * (1.0 - rtol)))
