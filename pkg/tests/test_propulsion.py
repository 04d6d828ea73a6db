import math

import numpy as np
import pytest

from flybs_sim.base import DomainError, InfeasibleError
from flybs_sim.propulsion import flight_speed, min_power_speed, propulsion_power, speed_interval


def _reference_power(v, pp) -> float:
    blade = pp.blade_profile_power * (1 + 3 * v**2 / pp.tip_speed**2)
    induced = pp.induced_power * math.sqrt(
        math.sqrt(1 + v**4 / (4 * pp.hover_induced_velocity**4)) - v**2 / (2 * pp.hover_induced_velocity**2)
    )
    parasite = 0.5 * pp.fuselage_drag_ratio * pp.air_density * pp.rotor_solidity * pp.rotor_disc_area * v**3
    return blade + induced + parasite


def test_hover_power(propulsion):
    assert propulsion_power(0.0, propulsion) == pytest.approx(79.86 + 88.63, rel=1e-12)


@pytest.mark.parametrize("v", [1.0, 10.0, 18.5, 25.0])
def test_power_matches_scalar_formula(propulsion, v):
    assert propulsion_power(v, propulsion) == pytest.approx(_reference_power(v, propulsion), rel=1e-9)


def test_power_accepts_arrays(propulsion):
    v = np.array([0.0, 5.0, 30.0])
    out = propulsion_power(v, propulsion)
    assert out.shape == (3,)
    np.testing.assert_allclose(out, [_reference_power(x, propulsion) for x in v], rtol=1e-9)


def test_negative_speed_rejected(propulsion):
    with pytest.raises(DomainError):
        propulsion_power(-1.0, propulsion)


def test_min_power_speed_matches_grid(propulsion):
    grid = np.linspace(0.0, 40.0, 40_001)
    powers = propulsion_power(grid, propulsion)
    v_star, p_star = min_power_speed(propulsion)
    assert v_star == pytest.approx(grid[np.argmin(powers)], abs=5e-3)
    assert p_star <= powers.min() + 1e-9


def test_reference_cap_allows_hover_up_to_vmax(propulsion):
    window = speed_interval(250.0, 25.0, propulsion)
    assert window.v_lo == 0.0
    assert window.v_hi == 25.0


def test_upper_speed_matches_grid_scan(propulsion):
    window = speed_interval(250.0, 40.0, propulsion)
    grid = np.linspace(0.0, 40.0, 10_001)
    admissible = grid[propulsion_power(grid, propulsion) <= 250.0]
    assert window.v_lo == 0.0
    assert window.v_hi == pytest.approx(admissible.max(), abs=40.0 / 10_000 + 1e-3)
    assert propulsion_power(window.v_hi, propulsion) <= 250.0


def test_lower_speed_when_hover_exceeds_cap(propulsion):
    window = speed_interval(150.0, 25.0, propulsion)
    assert window.v_lo > 0.0
    assert propulsion_power(window.v_lo, propulsion) <= 150.0
    assert propulsion_power(window.v_hi, propulsion) <= 150.0


def test_cap_at_curve_minimum_is_degenerate(propulsion):
    v_star, p_star = min_power_speed(propulsion)
    window = speed_interval(p_star, 25.0, propulsion)
    assert window.v_lo == pytest.approx(v_star, abs=1e-3)
    assert window.v_hi == pytest.approx(v_star, abs=1e-3)


def test_cap_below_minimum_is_infeasible(propulsion):
    _, p_star = min_power_speed(propulsion)
    with pytest.raises(InfeasibleError) as err:
        speed_interval(p_star - 5.0, 25.0, propulsion)
    assert err.value.deficit == pytest.approx(5.0, rel=1e-6)


def test_nonpositive_cap_rejected(propulsion):
    with pytest.raises(DomainError):
        speed_interval(0.0, 25.0, propulsion)


def test_unbounded_cap(propulsion):
    window = speed_interval(math.inf, 25.0, propulsion)
    assert (window.v_lo, window.v_hi) == (0.0, 25.0)


def test_flight_speed():
    assert flight_speed((3.0, 4.0, 0.0), (0.0, 0.0, 0.0), 0.5) == pytest.approx(10.0)
