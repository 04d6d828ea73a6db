import json
from pathlib import Path
from typing import Any, Optional

from pydantic import Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .base import ConfigError
from .model import ChannelParams, Limits, MobilitySpec, OptimizerConfig, PropulsionParams, Vec3
from .utils import dbm_to_watt, noise_power


class ScenarioConfig(BaseSettings):
    """
    Everything one simulation needs. Values come from init kwargs (CLI flags and
    the JSON file), then FLYBS_* environment variables and `.env`, then defaults.
    """

    arena_size: float = Field(default=600.0, gt=0, description="Side of the square arena in m")
    n_nodes: int = Field(default=100, ge=1)
    mobility: MobilitySpec = Field(default_factory=MobilitySpec)

    total_bandwidth: float = Field(default=100e6, gt=0, description="Split equally unless `bandwidths` is set")
    bandwidths: Optional[list[float]] = Field(default=None, description="Per-node bandwidth override in Hz")
    noise_density_dbm_hz: float = -174.0
    interference_dbm: float = -100.0
    pathloss_exp: float = Field(default=2.4, ge=2.0)
    gain_coeff: float = Field(default=1.0, gt=0)
    rician_factor: float = Field(default=10.0, ge=0)
    evaluate_fading: bool = False

    h_min: float = Field(default=100.0, gt=0)
    h_max: float = Field(default=300.0, gt=0)
    p_max_total: float = Field(default=1.0, gt=0)
    v_max: float = Field(default=25.0, gt=0)
    p_pr_th: float = Field(default=250.0, gt=0)
    propulsion: PropulsionParams = Field(default_factory=PropulsionParams)

    cmin: float = Field(default=1e6, ge=0, description="Minimum capacity of every node in bit/s")
    duration: float = Field(default=1200.0, ge=0)
    delta_t: float = Field(default=1.0, gt=0)
    n_drops: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    scheme: str = "proposed"
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)

    mmc_unconstrained_speed: bool = False
    eem_position: Optional[Vec3] = Field(default=None, description="Fixed EEM position, arena center at mid altitude if unset")

    model_config = SettingsConfigDict(
        env_prefix="FLYBS_", env_file=".env", env_nested_delimiter="__", case_sensitive=False, extra="ignore"
    )

    @model_validator(mode="after")
    def _consistent(self):
        if self.h_min > self.h_max:
            raise ValueError(f"h_min={self.h_min} exceeds h_max={self.h_max}")
        if self.bandwidths is not None:
            if len(self.bandwidths) != self.n_nodes:
                raise ValueError(f"bandwidths has {len(self.bandwidths)} entries for n_nodes={self.n_nodes}")
            if any(b <= 0 for b in self.bandwidths):
                raise ValueError("bandwidths must be positive")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.delta_t))

    def limits(self, delta_t: Optional[float] = None) -> Limits:
        return Limits(
            h_min=self.h_min,
            h_max=self.h_max,
            v_max=self.v_max,
            p_pr_th=self.p_pr_th,
            p_max_total=self.p_max_total,
            delta_t=self.delta_t if delta_t is None else delta_t,
            propulsion=self.propulsion,
        )

    def channel_params(self) -> list[ChannelParams]:
        bws = self.bandwidths or [self.total_bandwidth / self.n_nodes] * self.n_nodes
        interference = dbm_to_watt(self.interference_dbm)
        return [
            ChannelParams(
                gain_coeff=self.gain_coeff,
                pathloss_exp=self.pathloss_exp,
                bandwidth=bw,
                noise_power=noise_power(self.noise_density_dbm_hz, bw),
                interference=interference,
                rician_factor=self.rician_factor,
            )
            for bw in bws
        ]

    def fixed_position(self) -> Vec3:
        if self.eem_position is not None:
            return self.eem_position
        half = self.arena_size / 2
        return (half, half, (self.h_min + self.h_max) / 2)

    def with_overrides(self, **overrides: Any) -> "ScenarioConfig":
        """Returns a validated copy; `None` overrides are ignored."""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return build_scenario(data)

    @classmethod
    def from_file(cls, path: Optional[Path] = None, **overrides: Any) -> "ScenarioConfig":
        data: dict[str, Any] = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text())
            except OSError as e:
                raise ConfigError(f"cannot read config {path}: {e}") from e
            except json.JSONDecodeError as e:
                raise ConfigError(f"config {path} is not valid JSON: {e}") from e
            if not isinstance(data, dict):
                raise ConfigError(f"config {path} must hold a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return build_scenario(data)


def build_scenario(data: dict[str, Any]) -> ScenarioConfig:
    try:
        return ScenarioConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid scenario: {e}") from e


class Settings(BaseSettings):
    """Runtime knobs that do not change simulation results."""

    log_level: str = Field(default="INFO")
    workers: int = Field(default=1, ge=1)
    out_dir: Path = Field(default=Path("results"))

    model_config = SettingsConfigDict(
        env_prefix="FLYBS_", env_file=".env", env_nested_delimiter="__", case_sensitive=False, extra="ignore"
    )


settings = Settings()
