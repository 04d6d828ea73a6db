"""
Ground node motion: random walkers plus crowds following moving cluster centers,
all reflected at the arena edges.
"""

import math
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from .base import ExportError, logger
from .model import ChannelParams, MobilitySpec, NodeState

log = logger.getChild("mobility")

TRAJECTORY_COLUMNS = ["k", "node_id", "x", "y", "z"]
# weight of the way back to the anchor, per member_spread of distance
CLUSTER_PULL = 2.0


class MobilityKind(str, Enum):
    RANDOM_WALK = "random_walk"
    CLUSTER = "cluster"


class MobilityModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: MobilityKind
    speed: float = Field(default=1.0, ge=0.0, description="Random-walk speed in m/s")
    cluster: Optional[int] = None
    speed_range: Optional[tuple[float, float]] = None


def assign_models(spec: MobilitySpec, n_nodes: int) -> list[MobilityModel]:
    """The first walk_fraction of the nodes walk; the rest join the clusters round-robin."""
    n_walk = int(math.floor(n_nodes * spec.walk_fraction)) if spec.n_clusters else n_nodes
    models = [MobilityModel(kind=MobilityKind.RANDOM_WALK, speed=spec.walk_speed)] * n_walk
    for j in range(n_nodes - n_walk):
        c = j % spec.n_clusters
        models.append(MobilityModel(kind=MobilityKind.CLUSTER, cluster=c, speed_range=spec.member_speed_ranges[c]))
    return models


def _headings(rng: np.random.Generator, n: int) -> np.ndarray:
    theta = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.column_stack([np.cos(theta), np.sin(theta)])


class MobilityEngine:
    def __init__(self, spec: MobilitySpec, n_nodes: int, arena_size: float, rng_seed: int = 0, track: bool = False):
        self.spec = spec
        self.arena = float(arena_size)
        self.rng = np.random.default_rng(rng_seed)
        self.models = assign_models(spec, n_nodes)
        self.track = track
        self.history: list[tuple[int, int, float, float, float]] = []

        self.walk = np.array([m.kind is MobilityKind.RANDOM_WALK for m in self.models])
        self.cluster_of = np.array([-1 if m.cluster is None else m.cluster for m in self.models])
        self.center_speed = np.asarray(spec.cluster_center_speeds, dtype=float)
        self.last_speeds = np.zeros(n_nodes)

        n_clusters = spec.n_clusters
        self.centers = self.rng.uniform(0.0, self.arena, (n_clusters, 2))
        self.waypoints = self.rng.uniform(0.0, self.arena, (n_clusters, 2))
        self.center_velocity = np.zeros((n_clusters, 2))

        xy = np.empty((n_nodes, 2))
        xy[self.walk] = self.rng.uniform(0.0, self.arena, (int(self.walk.sum()), 2))
        # offset of each member from its cluster center; walkers keep zeros
        self.anchor = np.zeros((n_nodes, 2))
        members = ~self.walk
        if members.any():
            self.anchor[members] = self.rng.normal(0.0, spec.member_spread, (int(members.sum()), 2))
            xy[members] = np.clip(self.centers[self.cluster_of[members]] + self.anchor[members], 0.0, self.arena)
        self.initial_xy = xy

    def initial_nodes(self, channels: list[ChannelParams], qos_min: float) -> list[NodeState]:
        z = self.spec.node_altitude
        return [
            NodeState(id=i, position=(float(x), float(y), z), qos_min=qos_min, channel=ch)
            for i, ((x, y), ch) in enumerate(zip(self.initial_xy, channels))
        ]

    def _move_centers(self, dt: float):
        start = self.centers.copy()
        for c in range(len(self.centers)):
            travel = self.center_speed[c] * dt
            to_go = self.waypoints[c] - self.centers[c]
            dist = float(np.hypot(*to_go))
            if dist <= travel:
                self.centers[c] = self.waypoints[c]
                self.waypoints[c] = self.rng.uniform(0.0, self.arena, 2)
            else:
                self.centers[c] += to_go / dist * travel
        self.center_velocity = (self.centers - start) / dt

    def _member_velocities(self, members: np.ndarray, xy: np.ndarray, speed: np.ndarray) -> np.ndarray:
        """
        Center velocity plus an offset along a heading drawn around the way back to
        the member's anchor. The offset length is the root of |vc + m h| = s with the
        smallest |m|; headings that cannot reach s fall back to s along vc.
        """
        cluster = self.cluster_of[members]
        vc = self.center_velocity[cluster]
        pull = (self.centers[cluster] + self.anchor[members] - xy) / max(self.spec.member_spread, 1.0)
        h = _headings(self.rng, len(members)) + CLUSTER_PULL * pull
        h_norm = np.linalg.norm(h, axis=1, keepdims=True)
        h = np.where(h_norm > 1e-12, h / np.maximum(h_norm, 1e-12), np.array([1.0, 0.0]))

        c = np.einsum("ij,ij->i", vc, h)
        disc = c * c - np.einsum("ij,ij->i", vc, vc) + speed * speed
        m = -c + np.where(c >= 0, 1.0, -1.0) * np.sqrt(np.maximum(disc, 0.0))
        vel = vc + m[:, None] * h
        vc_norm = np.linalg.norm(vc, axis=1, keepdims=True)
        along = speed[:, None] * vc / np.maximum(vc_norm, 1e-12)
        return np.where((disc >= 0)[:, None], vel, along)

    def _velocities(self, xy: np.ndarray) -> np.ndarray:
        n = len(self.models)
        speed = np.zeros(n)
        speed[self.walk] = [m.speed for m, w in zip(self.models, self.walk) if w]
        vel = _headings(self.rng, n) * speed[:, None]

        members = np.flatnonzero(~self.walk)
        if len(members):
            ranges = np.array([self.models[i].speed_range for i in members])
            speed[members] = self.rng.uniform(ranges[:, 0], ranges[:, 1])
            vel[members] = self._member_velocities(members, xy[members], speed[members])
        self.last_speeds = speed
        return vel

    def advance(self, nodes: list[NodeState], dt: float) -> list[NodeState]:
        """
        Moves every node by its drawn speed times dt. A velocity component that
        would leave the arena is flipped first, so the displacement length is exact.
        """
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self._move_centers(dt)
        xy = np.array([n.position[:2] for n in nodes], dtype=float)
        vel = self._velocities(xy)
        moved = xy + vel * dt
        outside = (moved < 0.0) | (moved > self.arena)
        vel = np.where(outside, -vel, vel)
        moved = np.clip(xy + vel * dt, 0.0, self.arena)

        out = []
        for node, (x, y), (vx, vy) in zip(nodes, moved, vel):
            out.append(
                node.model_copy(update={"position": (float(x), float(y), node.position[2]), "velocity": (float(vx), float(vy), 0.0)})
            )
        return out

    def record(self, k: int, nodes: list[NodeState]):
        if self.track:
            self.history.extend((k, n.id, *n.position) for n in nodes)

    def trajectory_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history, columns=TRAJECTORY_COLUMNS)


def export_trajectory(frame: pd.DataFrame, path: Path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
    except OSError as e:
        raise ExportError(f"cannot write trajectory to {path}: {e}") from e
    log.info(f"📝 Trajectory of {frame['node_id'].nunique() if len(frame) else 0} nodes written to {path}")
