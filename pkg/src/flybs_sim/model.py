import math
from typing import Annotated, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator


Vec3 = tuple[float, float, float]
Positive = Annotated[float, Field(gt=0)]


def as_vec3(x) -> Vec3:
    x = np.asarray(x, dtype=float)
    return (float(x[0]), float(x[1]), float(x[2]))


class ChannelParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    gain_coeff: Positive = Field(default=1.0, title="Q_i", description="Aggregated antenna gains and frequency term")
    pathloss_exp: float = Field(default=2.4, ge=2.0, title="alpha_i")
    bandwidth: Positive = Field(title="B_i", description="Channel bandwidth in Hz")
    noise_power: Positive = Field(title="N_i", description="Noise power over the channel in W")
    interference: float = Field(default=0.0, ge=0.0, title="I", description="Background interference in W")
    rician_factor: float = Field(default=0.0, ge=0.0, title="gamma", description="Only used by the fading evaluation mode")

    @property
    def noise_plus_interference(self) -> float:
        return self.noise_power + self.interference


class NodeState(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    position: Vec3
    velocity: Vec3 = (0.0, 0.0, 0.0)
    qos_min: float = Field(default=0.0, ge=0.0, title="C_i^min", description="Minimum capacity in bit/s")
    channel: ChannelParams

    @field_validator("position")
    @classmethod
    def _finite(cls, v: Vec3) -> Vec3:
        if not all(math.isfinite(c) for c in v):
            raise ValueError("node position must be finite")
        return v


class PropulsionParams(BaseModel):
    """Rotary-wing propulsion constants; defaults are the common reference airframe."""

    model_config = ConfigDict(frozen=True)

    blade_profile_power: Positive = Field(default=79.86, title="L_0")
    induced_power: Positive = Field(default=88.63, title="L_i")
    tip_speed: Positive = Field(default=120.0, title="U_tip")
    hover_induced_velocity: Positive = Field(default=4.03, title="v_0,h")
    fuselage_drag_ratio: Positive = Field(default=0.6, title="eta_0")
    air_density: Positive = Field(default=1.225, title="rho")
    rotor_solidity: Positive = Field(default=0.05, title="s_r")
    rotor_disc_area: Positive = Field(default=0.503, title="A")


class SpeedInterval(BaseModel):
    model_config = ConfigDict(frozen=True)

    v_lo: float = Field(ge=0.0)
    v_hi: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.v_lo > self.v_hi:
            raise ValueError(f"empty speed interval [{self.v_lo}, {self.v_hi}]")
        return self


class Limits(BaseModel):
    """Per-timestep flight and transmit envelope of the FlyBS."""

    model_config = ConfigDict(frozen=True)

    h_min: Positive = 100.0
    h_max: Positive = 300.0
    v_max: Positive = 25.0
    p_pr_th: Positive = 250.0
    p_max_total: Positive = 1.0
    delta_t: Positive = 1.0
    propulsion: PropulsionParams = Field(default_factory=PropulsionParams)

    @model_validator(mode="after")
    def _altitude(self):
        if self.h_min > self.h_max:
            raise ValueError(f"h_min={self.h_min} exceeds h_max={self.h_max}")
        return self


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: Positive = Field(default=0.1, description="Displacement convergence threshold in m")
    max_iters: int = Field(default=10, ge=1)
    sigma: Positive = Field(default=0.05, description="Distance-expansion approximation parameter")
    xi: Positive = Field(default=0.05, description="Log-expansion approximation parameter")
    monotonicity_guard: bool = True


class FlyBSState(BaseModel):
    position: Vec3
    previous_position: Vec3
    power: list[float]
    propulsion_power: float = 0.0

    def advance(self, report: "StepReport") -> "FlyBSState":
        return FlyBSState(
            position=report.position,
            previous_position=self.position,
            power=report.power,
            propulsion_power=report.propulsion_power,
        )


class StepReport(BaseModel):
    k: int
    position: Vec3
    power: list[float]
    capacities: list[float]
    c_tot: float
    iterations: int = 0
    feasible: bool
    reason: Optional[str] = None
    slacks: dict[str, float] = Field(default_factory=dict)
    iteration_capacities: list[float] = Field(default_factory=list)
    propulsion_power: float = 0.0
    faded_c_tot: Optional[float] = None

    @computed_field
    @property
    def min_capacity(self) -> float:
        return min(self.capacities) if self.capacities else 0.0

    @computed_field
    @property
    def power_sum(self) -> float:
        return float(math.fsum(self.power))


class CapacityStats(BaseModel):
    min: float = 0.0
    mean: float = 0.0
    max: float = 0.0


class RunSummary(BaseModel):
    schema_version: int = 1
    scheme: str
    n_nodes: int
    n_steps: int = 0
    n_drops: int = 1
    seed: int
    mean_c_tot: float = 0.0
    final_c_tot: float = 0.0
    node_capacity: CapacityStats = Field(default_factory=CapacityStats)
    qos_violations: int = 0
    infeasible_steps: int = 0
    mean_iterations: float = 0.0
    mean_propulsion_power: float = 0.0
    trajectory: list[Vec3] = Field(default_factory=list)
    steps: list[StepReport] = Field(default_factory=list)
    drops: list["RunSummary"] = Field(default_factory=list)


class FeasibilityVerdict(BaseModel):
    feasible: bool
    witness: Optional[Vec3] = None
    reason: Optional[str] = None


class MobilitySpec(BaseModel):
    """Node motion: a random-walking share of the nodes plus clustered crowds around moving centers."""

    model_config = ConfigDict(frozen=True)

    walk_fraction: float = Field(default=0.5, ge=0.0, le=1.0, description="Share of nodes on a random walk")
    walk_speed: float = Field(default=1.0, ge=0.0, description="Random-walk speed in m/s")
    cluster_center_speeds: tuple[float, ...] = Field(
        default=(1.0, 1.0, 1.0, 1.6, 1.6, 1.6), description="One entry per cluster, in m/s"
    )
    member_speed_ranges: tuple[tuple[float, float], ...] = Field(
        default=((0.6, 1.4),) * 3 + ((1.2, 2.0),) * 3, description="Uniform member speed law per cluster"
    )
    member_spread: float = Field(default=20.0, ge=0.0, description="Std of the initial member offset in m")
    node_altitude: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _clusters(self):
        if len(self.cluster_center_speeds) != len(self.member_speed_ranges):
            raise ValueError("cluster_center_speeds and member_speed_ranges must have the same length")
        if any(s < 0 for s in self.cluster_center_speeds):
            raise ValueError("cluster center speeds must be non-negative")
        for lo, hi in self.member_speed_ranges:
            if not 0 <= lo <= hi:
                raise ValueError(f"invalid member speed range ({lo}, {hi})")
        return self

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_center_speeds)


class FeasibilitySnapshot(BaseModel):
    """A single-timestep region description, as read by `feasibility-check`."""

    q_prev: Vec3
    nodes: list[NodeState] = Field(min_length=1)
    power: list[float]
    limits: Limits = Field(default_factory=Limits)
    sigma: Positive = 0.05

    @model_validator(mode="after")
    def _sizes(self):
        if len(self.power) != len(self.nodes):
            raise ValueError(f"power has {len(self.power)} entries for {len(self.nodes)} nodes")
        return self
