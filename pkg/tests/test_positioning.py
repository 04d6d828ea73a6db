import math

import numpy as np
import pytest

from flybs_sim.channel import LN2, NodeArrays
from flybs_sim.feasibility import ConstraintRegion
from flybs_sim.geometry import Sphere
from flybs_sim.positioning import (
    _pick,
    build_radial_approx,
    closest_feasible_point,
    position_update,
    surrogate_error,
)


def _region(spheres, center, radius, h_min=100.0, h_max=300.0, inner=0.0) -> ConstraintRegion:
    return ConstraintRegion(
        qos_spheres=list(spheres),
        qos_index=np.arange(len(spheres)),
        speed_outer=Sphere.of(center, radius),
        speed_inner_radius=inner,
        lemma1_sphere=None,
        h_min=h_min,
        h_max=h_max,
    )


def _ring_nodes(make_nodes, h: float = 100.0):
    # every node sits at d^2 - H^2 = 2.49 H^2 from the anchor straight above the ring center
    r = math.sqrt(2.49) * h
    return make_nodes([(300 + r, 300, 0), (300 - r, 300, 0), (300, 300 + r, 0), (300, 300 - r, 0)])


def test_surrogate_matches_termwise_expansion(rng, random_nodes):
    nodes = random_nodes(rng, 5)
    p = rng.uniform(0.05, 0.3, 5)
    anchor = np.array([310.0, 290.0, 130.0])
    sigma = xi = 0.05
    approx = build_radial_approx(anchor, nodes, p, sigma, xi, 100.0)

    def termwise(q) -> float:
        total = 0.0
        for n, p_i in zip(nodes, p):
            ch = n.channel
            k_gain = ch.gain_coeff * p_i / ch.noise_plus_interference
            half = ch.pathloss_exp / 2
            u0 = sum((a - b) ** 2 for a, b in zip(anchor, n.position))
            mu = 100.0**2 * (1 + max(math.floor((u0 - 100.0**2) / (100.0**2 * sigma)), 0) * sigma)
            x0 = math.floor(k_gain * u0**-half / sigma) * xi
            x_lin = k_gain * (mu**-half * (1 + half) - half * mu ** (-1 - half) * sum((a - b) ** 2 for a, b in zip(q, n.position)))
            total += ch.bandwidth * (math.log(1 + x0) + (x_lin - x0) / (1 + x0)) / LN2
        return total

    for q in (anchor, anchor + [5.0, -3.0, 10.0], anchor + [-20.0, 15.0, -10.0]):
        assert approx.value(q) == pytest.approx(termwise(q), rel=1e-9)


def test_surrogate_tightens_with_smaller_parameters(make_nodes):
    nodes = _ring_nodes(make_nodes)
    arrays = NodeArrays.from_nodes(nodes)
    p = np.full(4, 0.25)
    anchor = np.array([300.0, 300.0, 100.0])
    points = [anchor] + [anchor + 0.1 * e for e in np.vstack([np.eye(3), -np.eye(3)])]

    errors = []
    for s in (0.5, 0.1, 0.02):
        approx = build_radial_approx(anchor, nodes, p, s, s, 100.0)
        errors.append(max(surrogate_error(approx, q, float(arrays.capacities(q, p).sum())) for q in points))
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.01


def test_peak_is_capacity_weighted_centroid(make_nodes):
    approx = build_radial_approx((300.0, 300.0, 100.0), _ring_nodes(make_nodes), np.full(4, 0.25))
    np.testing.assert_allclose(approx.s0, [300.0, 300.0, 0.0], atol=1e-9)
    assert approx.zeta > 0
    assert approx.value(approx.s0) >= approx.value((310.0, 300.0, 0.0))


def test_unpowered_nodes_do_not_move_the_flybs(make_nodes):
    approx = build_radial_approx((300.0, 300.0, 150.0), _ring_nodes(make_nodes), np.zeros(4))
    assert approx.no_move
    region = _region([], (300.0, 300.0, 150.0), 25.0)
    np.testing.assert_allclose(position_update(approx, region), [300.0, 300.0, 150.0])


def test_update_clamps_peak_into_slab(make_nodes):
    anchor = (300.0, 300.0, 150.0)
    approx = build_radial_approx(anchor, _ring_nodes(make_nodes), np.array([0.1, 0.2, 0.3, 0.4]))
    q = position_update(approx, _region([], anchor, 1e4))
    np.testing.assert_allclose(q, [approx.s0[0], approx.s0[1], 100.0], atol=1e-9)


def test_admissible_target_is_returned_unchanged():
    region = _region([Sphere.of((0, 0, 150), 50)], (0.0, 0.0, 150.0), 25.0)
    target = np.array([3.0, -4.0, 160.0])
    np.testing.assert_array_equal(closest_feasible_point(target, region), target)


def test_target_inside_inner_speed_sphere():
    center = (0.0, 0.0, 200.0)
    region = _region([], center, 25.0, inner=5.0)
    q = closest_feasible_point(center, region)
    assert np.linalg.norm(q - center) == pytest.approx(5.0, abs=1e-6)


def test_closest_point_beats_rejection_sampling(rng):
    q_prev = np.array([300.0, 300.0, 150.0])
    for _ in range(30):
        spheres = []
        for _ in range(int(rng.integers(2, 5))):
            offset = rng.normal(size=3)
            offset *= rng.uniform(10, 40) / np.linalg.norm(offset)
            spheres.append(Sphere.of(q_prev + offset, np.linalg.norm(offset) + rng.uniform(2, 20)))
        region = _region(spheres, q_prev, 25.0, h_min=float(rng.uniform(130, 150)))
        direction = rng.normal(size=3)
        target = q_prev + 60.0 * direction / np.linalg.norm(direction)

        q = closest_feasible_point(target, region)
        assert region.contains_point(q)

        samples = q_prev + rng.uniform(-25, 25, (200_000, 3))
        inside = samples[region.contains(samples)]
        oracle = np.linalg.norm(inside - target, axis=1).min()
        assert np.linalg.norm(q - target) <= oracle + 1e-2


def test_ties_prefer_lowest_then_smallest_x():
    target = np.zeros(3)
    points = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [-1.0, 0.0, 0.0]])
    np.testing.assert_array_equal(_pick(points, target), [0.0, 0.0, -1.0])
    np.testing.assert_array_equal(_pick(points[[0, 3]], target), [-1.0, 0.0, 0.0])
