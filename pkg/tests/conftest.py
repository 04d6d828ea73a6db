import numpy as np
import pytest

from flybs_sim.config import ScenarioConfig
from flybs_sim.model import ChannelParams, Limits, NodeState, PropulsionParams
from flybs_sim.utils import dbm_to_watt, noise_power

# 100 MHz shared by 60 nodes, -174 dBm/Hz noise, -100 dBm interference
BANDWIDTH = 100e6 / 60


def _channel(bandwidth: float = BANDWIDTH, **kw) -> ChannelParams:
    return ChannelParams(
        bandwidth=bandwidth,
        noise_power=noise_power(-174.0, bandwidth),
        interference=dbm_to_watt(-100.0),
        **kw,
    )


@pytest.fixture
def propulsion() -> PropulsionParams:
    return PropulsionParams()


@pytest.fixture
def limits() -> Limits:
    return Limits()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def channel():
    return _channel


@pytest.fixture
def make_nodes():
    def factory(positions, qos_min: float = 1e6, **channel_kw) -> list[NodeState]:
        ch = _channel(**channel_kw)
        return [
            NodeState(id=i, position=tuple(float(c) for c in pos), qos_min=qos_min, channel=ch)
            for i, pos in enumerate(positions)
        ]

    return factory


@pytest.fixture
def random_nodes(make_nodes):
    def factory(rng: np.random.Generator, n: int, arena: float = 600.0, qos_min: float = 1e6) -> list[NodeState]:
        xy = rng.uniform(0.0, arena, (n, 2))
        return make_nodes(np.column_stack([xy, np.zeros(n)]), qos_min=qos_min)

    return factory


@pytest.fixture
def scenario():
    def factory(**overrides) -> ScenarioConfig:
        base = {"n_nodes": 6, "duration": 4.0, "seed": 7}
        base.update(overrides)
        return ScenarioConfig(**base)

    return factory
