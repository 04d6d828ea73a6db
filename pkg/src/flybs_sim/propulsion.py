"""
Rotary-wing propulsion power and the speed window it allows under a power cap.
"""

import math
from functools import lru_cache

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .base import DomainError, InfeasibleError, logger
from .model import PropulsionParams, SpeedInterval

log = logger.getChild("propulsion")

SPEED_XTOL = 1e-4


def propulsion_power(v, pp: PropulsionParams):
    """
    Propulsion power in W at horizontal speed `v` (scalar or array, m/s).

    Sum of blade profile, parasite and induced terms. The induced radicand
    sqrt(1 + x^2) - x is evaluated as 1/(sqrt(1 + x^2) + x) to stay accurate at speed.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise DomainError("speed must be non-negative")
    blade = pp.blade_profile_power * (1.0 + 3.0 * v**2 / pp.tip_speed**2)
    parasite = 0.5 * pp.fuselage_drag_ratio * pp.air_density * pp.rotor_solidity * pp.rotor_disc_area * v**3
    x = v**2 / (2.0 * pp.hover_induced_velocity**2)
    induced = pp.induced_power * np.sqrt(1.0 / (np.sqrt(1.0 + x**2) + x))
    out = blade + parasite + induced
    return float(out) if out.ndim == 0 else out


def min_power_speed(pp: PropulsionParams) -> tuple[float, float]:
    """Speed minimizing propulsion power and that minimum, searched over [0, U_tip]."""
    res = minimize_scalar(
        lambda v: propulsion_power(v, pp), bounds=(0.0, pp.tip_speed), method="bounded", options={"xatol": 1e-8}
    )
    return float(res.x), float(res.fun)


@lru_cache(maxsize=256)
def speed_interval(p_cap: float, v_max: float, pp: PropulsionParams) -> SpeedInterval:
    """
    Largest speed window inside [0, v_max] where propulsion_power(v) <= p_cap.

    Raises:
        InfeasibleError: no speed in [0, v_max] keeps the propulsion power under the cap.
    """
    if p_cap <= 0:
        raise DomainError(f"propulsion cap must be positive, got {p_cap}")
    if v_max < 0:
        raise DomainError(f"v_max must be non-negative, got {v_max}")
    if math.isinf(p_cap):
        return SpeedInterval(v_lo=0.0, v_hi=v_max)

    v_star, p_star = min_power_speed(pp)
    if p_star > p_cap:
        if p_star - p_cap <= 1e-9 * p_cap and v_star <= v_max:
            return SpeedInterval(v_lo=v_star, v_hi=v_star)
        raise InfeasibleError(
            f"propulsion cap {p_cap:.2f} W is below the minimum propulsion power {p_star:.2f} W",
            deficit=p_star - p_cap,
        )

    def excess(v: float) -> float:
        return propulsion_power(v, pp) - p_cap

    if excess(0.0) <= 0:
        v_lo = 0.0
    else:
        root = bisect(excess, 0.0, v_star, xtol=SPEED_XTOL)
        v_lo = min(root + 2 * SPEED_XTOL, v_star)
    if v_lo > v_max:
        raise InfeasibleError(f"no speed up to v_max={v_max} m/s keeps propulsion under {p_cap:.2f} W")

    if v_max <= v_star or excess(v_max) <= 0:
        v_hi = v_max
    else:
        root = bisect(excess, v_star, v_max, xtol=SPEED_XTOL)
        v_hi = max(root - 2 * SPEED_XTOL, v_star)

    log.debug(f"speed window for cap {p_cap:.2f} W: [{v_lo:.4f}, {v_hi:.4f}] m/s")
    return SpeedInterval(v_lo=v_lo, v_hi=v_hi)


def flight_speed(q, q_prev, delta_t: float) -> float:
    """Constant-velocity speed of the segment q_prev -> q over one timestep."""
    return float(np.linalg.norm(np.asarray(q, dtype=float) - np.asarray(q_prev, dtype=float)) / delta_t)
