import numpy as np
import pytest

from flybs_sim.base import InfeasibleError
from flybs_sim.channel import LN2, capacity, received_power
from flybs_sim.power_alloc import AllocationProblem, allocate, allocation_problem, qos_floor


def _problem(rng, n: int = 4, p_max: float = 1.0) -> AllocationProblem:
    return AllocationProblem(
        link_gain=rng.uniform(50.0, 2e3, n),
        floor=rng.uniform(0.0, 0.1, n),
        p_max=p_max,
        bandwidth=np.full(n, 1e6),
    )


def test_budget_is_spent_and_floors_hold(rng):
    prob = _problem(rng)
    p = allocate(prob)
    assert p.sum() == pytest.approx(prob.p_max, rel=1e-9)
    assert np.all(p >= prob.floor)


def test_kkt_conditions(rng):
    for _ in range(20):
        prob = _problem(rng, n=int(rng.integers(2, 8)))
        p = allocate(prob)
        utility = prob.marginal_utility(p)
        above = p > prob.floor * (1 + 1e-9) + 1e-15
        lam = utility[above].mean()
        np.testing.assert_allclose(utility[above], lam, rtol=1e-6)
        assert np.all(utility[~above] <= lam * (1 + 1e-6))


def test_two_node_optimum_matches_scan():
    prob = AllocationProblem(
        link_gain=np.array([900.0, 150.0]), floor=np.array([0.05, 0.2]), p_max=1.0, bandwidth=np.array([1e6, 2e6])
    )
    p = allocate(prob)
    first = np.linspace(0.05, 0.8, 100_001)
    scan = np.array([prob.objective((x, 1.0 - x)) for x in first])
    assert prob.objective(p) >= scan.max() * (1 - 1e-12)
    assert prob.objective(p) == pytest.approx(scan.max(), rel=1e-6)


def test_dominates_random_feasible_splits(rng):
    for _ in range(20):
        prob = _problem(rng, n=5)
        best = prob.objective(allocate(prob))
        spare = prob.p_max - prob.floor.sum()
        shares = rng.dirichlet(np.ones(5), 5_000) * rng.uniform(0, 1, (5_000, 1))
        candidates = prob.floor + spare * shares
        values = np.sum(prob.bandwidth * np.log1p(prob.link_gain * candidates) / LN2, axis=1)
        assert values.max() <= best * (1 + 1e-12)


def test_floors_above_budget_raise(rng):
    prob = AllocationProblem(
        link_gain=np.ones(3), floor=np.array([0.5, 0.4, 0.3]), p_max=1.0, bandwidth=np.full(3, 1e6)
    )
    with pytest.raises(InfeasibleError) as err:
        allocate(prob)
    assert err.value.deficit == pytest.approx(0.2)


def test_floors_exactly_at_budget():
    prob = AllocationProblem(link_gain=np.ones(2), floor=np.array([0.5, 0.5]), p_max=1.0, bandwidth=np.full(2, 1e6))
    np.testing.assert_allclose(allocate(prob), [0.5, 0.5])


def test_high_price_keeps_floors(rng):
    prob = _problem(rng)
    p = allocate(prob, price=1e12)
    np.testing.assert_allclose(p, prob.floor)


def test_floor_reproduces_requirement(make_nodes):
    node = make_nodes([(0.0, 0.0, 0.0)], qos_min=2e6)[0]
    d = 180.0
    p_floor = qos_floor(node, d)
    assert capacity(received_power(p_floor, d, node.channel), node.channel) == pytest.approx(2e6, rel=1e-9)


def test_problem_from_positions(rng, random_nodes):
    nodes = random_nodes(rng, 6)
    q = (300.0, 300.0, 120.0)
    prob = allocation_problem(q, nodes, 1.0)
    p = allocate(prob)
    caps = np.array(
        [capacity(received_power(p_i, float(np.linalg.norm(np.subtract(q, n.position))), n.channel), n.channel) for n, p_i in zip(nodes, p)]
    )
    assert np.all(caps >= 1e6 * (1 - 1e-9))
    assert prob.objective(p) == pytest.approx(caps.sum(), rel=1e-9)


def _project(v: np.ndarray, floor: np.ndarray, budget: float) -> np.ndarray:
    """Euclidean projection onto {p >= floor, sum p = budget}."""
    y = v - floor
    spare = budget - floor.sum()
    u = np.sort(y)[::-1]
    cum = np.cumsum(u) - spare
    rho = np.nonzero(u - cum / np.arange(1, len(u) + 1) > 0)[0][-1]
    return floor + np.maximum(y - cum[rho] / (rho + 1), 0.0)


def test_matches_projected_gradient_ascent(rng):
    for _ in range(5):
        prob = AllocationProblem(
            link_gain=rng.uniform(2.0, 8.0, 6), floor=rng.uniform(0.0, 0.05, 6), p_max=1.0, bandwidth=np.ones(6)
        )
        lipschitz = float(np.max(prob.link_gain**2) / LN2)
        p = _project(np.full(6, 1 / 6), prob.floor, prob.p_max)
        for _ in range(5000):
            p = _project(p + prob.marginal_utility(p) / lipschitz, prob.floor, prob.p_max)
        assert prob.objective(allocate(prob)) == pytest.approx(prob.objective(p), rel=1e-6)
        assert prob.objective(allocate(prob)) >= prob.objective(p) * (1 - 1e-12)
