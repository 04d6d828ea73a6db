"""
Deterministic link budget: received power, Shannon capacity and the QoS radius.

All optimization runs on the mean channel (fading factor fixed to 1). Rician
fading is only sampled by `sample_fading` for reporting.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import DomainError
from .model import ChannelParams, NodeState

LN2 = math.log(2.0)


def received_power(p_tx: float, distance: float, ch: ChannelParams) -> float:
    if distance <= 0:
        raise DomainError(f"singular pathloss at distance={distance}")
    return ch.gain_coeff * p_tx * distance ** (-ch.pathloss_exp)


def capacity(p_rx: float, ch: ChannelParams) -> float:
    return ch.bandwidth * math.log1p(p_rx / ch.noise_plus_interference) / LN2


def snr_threshold(qos_min: float, ch: ChannelParams) -> float:
    """2^(C_min/B) - 1, the SNR a node needs to reach its minimum capacity."""
    return math.expm1(qos_min / ch.bandwidth * LN2)


def qos_radius(node: NodeState, p_i: float) -> float:
    """
    Largest FlyBS-to-node distance at which `node` still gets its minimum capacity.

    Returns +inf when the node has no requirement and 0 when it has one but no power.
    """
    if node.qos_min <= 0:
        return math.inf
    if p_i <= 0:
        return 0.0
    ch = node.channel
    base = ch.gain_coeff * p_i / (snr_threshold(node.qos_min, ch) * ch.noise_plus_interference)
    return base ** (1.0 / ch.pathloss_exp)


def sum_capacity(q, nodes: Sequence[NodeState], p) -> float:
    p = np.asarray(p, dtype=float)
    if len(p) != len(nodes):
        raise DomainError(f"power vector has {len(p)} entries for {len(nodes)} nodes")
    return float(NodeArrays.from_nodes(nodes).capacities(q, p).sum())


def sample_fading(rng: np.random.Generator, rician_factor, n: int) -> np.ndarray:
    """
    Draws |gamma/(gamma+1) h_los + 1/(gamma+1) h_nlos|^2 per node, with |h_los| = 1
    and h_nlos ~ CN(0, 1).
    """
    gamma = np.broadcast_to(np.asarray(rician_factor, dtype=float), (n,))
    h_nlos = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    h = gamma / (gamma + 1.0) + h_nlos / (gamma + 1.0)
    return np.abs(h) ** 2


@dataclass(frozen=True)
class NodeArrays:
    """Column view of a node list for the vectorized per-timestep math."""

    ids: np.ndarray
    positions: np.ndarray
    gain: np.ndarray
    alpha: np.ndarray
    bandwidth: np.ndarray
    noise: np.ndarray
    qos_min: np.ndarray
    rician: np.ndarray

    @classmethod
    def from_nodes(cls, nodes: Sequence[NodeState]) -> "NodeArrays":
        return cls(
            ids=np.array([n.id for n in nodes], dtype=int),
            positions=np.array([n.position for n in nodes], dtype=float).reshape(-1, 3),
            gain=np.array([n.channel.gain_coeff for n in nodes], dtype=float),
            alpha=np.array([n.channel.pathloss_exp for n in nodes], dtype=float),
            bandwidth=np.array([n.channel.bandwidth for n in nodes], dtype=float),
            noise=np.array([n.channel.noise_plus_interference for n in nodes], dtype=float),
            qos_min=np.array([n.qos_min for n in nodes], dtype=float),
            rician=np.array([n.channel.rician_factor for n in nodes], dtype=float),
        )

    def __len__(self):
        return len(self.ids)

    def with_qos(self, qos_min) -> "NodeArrays":
        return NodeArrays(
            ids=self.ids, positions=self.positions, gain=self.gain, alpha=self.alpha,
            bandwidth=self.bandwidth, noise=self.noise,
            qos_min=np.broadcast_to(np.asarray(qos_min, dtype=float), self.ids.shape).copy(),
            rician=self.rician,
        )

    def sq_distances(self, q) -> np.ndarray:
        diff = self.positions - np.asarray(q, dtype=float)
        return np.einsum("ij,ij->i", diff, diff)

    def distances(self, q) -> np.ndarray:
        d = np.sqrt(self.sq_distances(q))
        if np.any(d <= 0):
            raise DomainError(f"FlyBS position {tuple(q)} coincides with a node")
        return d

    def snr_thresholds(self) -> np.ndarray:
        return np.expm1(self.qos_min / self.bandwidth * LN2)

    def floor_coefficients(self) -> np.ndarray:
        """Q_i^-1 (N_i + I)(2^(C_i^min/B_i) - 1): floor power per unit d^alpha."""
        return self.noise * self.snr_thresholds() / self.gain

    def link_gains(self, q) -> np.ndarray:
        """a_i = Q_i d_i^-alpha_i / (N_i + I), the SNR per watt at `q`."""
        return self.gain * self.distances(q) ** (-self.alpha) / self.noise

    def qos_floors(self, q) -> np.ndarray:
        return self.floor_coefficients() * self.distances(q) ** self.alpha

    def qos_radii(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        radii = np.full(len(self), np.inf)
        required = self.qos_min > 0
        powered = required & (p > 0)
        radii[required & ~powered] = 0.0
        base = self.gain[powered] * p[powered] / (self.snr_thresholds()[powered] * self.noise[powered])
        radii[powered] = base ** (1.0 / self.alpha[powered])
        return radii

    def capacities(self, q, p, fading=None) -> np.ndarray:
        snr = self.link_gains(q) * np.asarray(p, dtype=float)
        if fading is not None:
            snr = snr * fading
        return self.bandwidth * np.log1p(snr) / LN2


def as_arrays(nodes) -> NodeArrays:
    return nodes if isinstance(nodes, NodeArrays) else NodeArrays.from_nodes(nodes)
