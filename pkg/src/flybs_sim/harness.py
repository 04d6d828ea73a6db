"""
Mission loop, drop aggregation, parameter sweeps and result export.
"""

from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from .base import ConfigError, ExportError, InfeasibleError, logger
from .channel import NodeArrays, sample_fading
from .config import ScenarioConfig
from .feasibility import build_region, is_feasible
from .mobility import MobilityEngine, export_trajectory
from .model import CapacityStats, FeasibilitySnapshot, FeasibilityVerdict, RunSummary, StepReport
from .optimizer import hold_report, qos_satisfied
from .scheme_manager import SchemeManager
from .utils import derive_seeds

log = logger.getChild("harness")

STEP_COLUMNS = ["k", "x", "y", "z", "c_tot", "min_c", "iterations", "feasible", "p_pr", "p_sum"]
SWEEP_PARAMS = ("n_nodes", "cmin")


class ExportFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def summarize(cfg: ScenarioConfig, seed: int, reports: list[StepReport]) -> RunSummary:
    summary = RunSummary(scheme=cfg.scheme, n_nodes=cfg.n_nodes, n_steps=len(reports), seed=seed)
    if not reports:
        return summary
    caps = np.array([r.capacities for r in reports])
    c_tot = np.array([r.c_tot for r in reports])
    return summary.model_copy(
        update={
            "mean_c_tot": float(c_tot.mean()),
            "final_c_tot": float(c_tot[-1]),
            "node_capacity": CapacityStats(min=float(caps.min()), mean=float(caps.mean()), max=float(caps.max())),
            "qos_violations": sum(1 for r in reports if r.feasible and not qos_satisfied(r, cfg.cmin)),
            "infeasible_steps": sum(1 for r in reports if not r.feasible),
            "mean_iterations": float(np.mean([r.iterations for r in reports])),
            "mean_propulsion_power": float(np.mean([r.propulsion_power for r in reports])),
            "trajectory": [r.position for r in reports],
            "steps": reports,
        }
    )


def run_drop(cfg: ScenarioConfig, seed: int, drop: int = 0, trajectory_path: Optional[Path] = None) -> RunSummary:
    """One seeded mission of cfg.n_steps timesteps."""
    n_steps = cfg.n_steps
    if n_steps == 0:
        return summarize(cfg, seed, [])

    mobility_seed, fading_seed = derive_seeds(seed, 2)
    engine = MobilityEngine(cfg.mobility, cfg.n_nodes, cfg.arena_size, mobility_seed, track=trajectory_path is not None)
    nodes = engine.initial_nodes(cfg.channel_params(), cfg.cmin)
    scheme = SchemeManager().create(cfg.scheme, cfg, shared={"seed": seed, "drop": drop})
    state = scheme.setup(nodes)
    engine.record(0, nodes)
    fading_rng = np.random.default_rng(fading_seed) if cfg.evaluate_fading else None

    reports = []
    for k in range(1, n_steps + 1):
        nodes = engine.advance(nodes, cfg.delta_t)
        engine.record(k, nodes)
        try:
            report = scheme.step(k, state, nodes)
        except InfeasibleError as e:
            log.warning(f"drop {drop} step {k}: {e.reason}")
            arrays = NodeArrays.from_nodes(nodes)
            report = hold_report(k, state.position, state.power, arrays, scheme.limits, e.reason, cfg.optimizer.sigma)
            report = report.model_copy(update={"feasible": False, "reason": e.reason})
        if fading_rng is not None:
            arrays = NodeArrays.from_nodes(nodes)
            fading = sample_fading(fading_rng, arrays.rician, len(arrays))
            faded = float(arrays.capacities(report.position, report.power, fading).sum())
            report = report.model_copy(update={"faded_c_tot": faded})
        reports.append(report)
        state = state.advance(report)

    if trajectory_path is not None:
        export_trajectory(engine.trajectory_frame(), trajectory_path)
    summary = summarize(cfg, seed, reports)
    log.info(
        f"✅ Drop {drop} ({cfg.scheme}): mean C_tot {summary.mean_c_tot / 1e6:.3f} Mbit/s, "
        f"{summary.infeasible_steps} infeasible of {n_steps} steps"
    )
    return summary


def aggregate(cfg: ScenarioConfig, drops: list[RunSummary]) -> RunSummary:
    """Averages per-drop metrics in drop order; counts are summed."""
    def mean(field: str) -> float:
        return float(np.mean([getattr(d, field) for d in drops]))

    return RunSummary(
        scheme=cfg.scheme,
        n_nodes=cfg.n_nodes,
        n_steps=cfg.n_steps,
        n_drops=len(drops),
        seed=cfg.seed,
        mean_c_tot=mean("mean_c_tot"),
        final_c_tot=mean("final_c_tot"),
        node_capacity=CapacityStats(
            min=float(min(d.node_capacity.min for d in drops)),
            mean=float(np.mean([d.node_capacity.mean for d in drops])),
            max=float(max(d.node_capacity.max for d in drops)),
        ),
        qos_violations=sum(d.qos_violations for d in drops),
        infeasible_steps=sum(d.infeasible_steps for d in drops),
        mean_iterations=mean("mean_iterations"),
        mean_propulsion_power=mean("mean_propulsion_power"),
        drops=drops,
    )


def validate_scheme(cfg: ScenarioConfig):
    names = SchemeManager().names()
    if cfg.scheme not in names:
        raise ConfigError(f"unknown scheme `{cfg.scheme}`, expected one of {names}")


def run(cfg: ScenarioConfig, workers: int = 1, trajectory_path: Optional[Path] = None) -> RunSummary:
    validate_scheme(cfg)
    log.info(f"🚀 Running {cfg.scheme}: {cfg.n_nodes} nodes, {cfg.n_steps} steps, {cfg.n_drops} drop(s)")
    if cfg.n_drops == 1:
        return run_drop(cfg, cfg.seed, 0, trajectory_path)

    seeds = derive_seeds(cfg.seed, cfg.n_drops)
    paths = [trajectory_path] + [None] * (cfg.n_drops - 1)
    indices = range(cfg.n_drops)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            drops = list(pool.map(run_drop, [cfg] * cfg.n_drops, seeds, indices, paths))
    else:
        drops = [run_drop(cfg, s, i, p) for s, i, p in zip(seeds, indices, paths)]
    return aggregate(cfg, drops)


def step_frame(summary: RunSummary) -> pd.DataFrame:
    steps = summary.steps or [s for d in summary.drops for s in d.steps]
    rows = [
        (s.k, *s.position, s.c_tot, s.min_capacity, s.iterations, s.feasible, s.propulsion_power, s.power_sum)
        for s in steps
    ]
    return pd.DataFrame(rows, columns=STEP_COLUMNS)


def export(summary: RunSummary, path: Path, fmt: ExportFormat = ExportFormat.CSV):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if ExportFormat(fmt) is ExportFormat.CSV:
            step_frame(summary).to_csv(path, index=False)
        else:
            path.write_text(summary.model_dump_json(indent=2))
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e}") from e
    log.info(f"📝 Wrote {fmt} summary to {path}")


def sweep(cfg: ScenarioConfig, param: str, values: Sequence[float], workers: int = 1) -> pd.DataFrame:
    """Runs the scenario once per value of `param` and tabulates the summaries."""
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"cannot sweep `{param}`, expected one of {list(SWEEP_PARAMS)}")
    rows = []
    for value in values:
        point = cfg.with_overrides(**{param: int(value) if param == "n_nodes" else float(value)})
        summary = run(point, workers)
        rows.append(
            {
                param: value,
                "scheme": point.scheme,
                "n_drops": point.n_drops,
                "mean_c_tot": summary.mean_c_tot,
                "final_c_tot": summary.final_c_tot,
                "min_capacity": summary.node_capacity.min,
                "qos_violations": summary.qos_violations,
                "infeasible_steps": summary.infeasible_steps,
                "mean_iterations": summary.mean_iterations,
                "mean_propulsion_power": summary.mean_propulsion_power,
            }
        )
    return pd.DataFrame(rows)


def check_snapshot(path: Path) -> FeasibilityVerdict:
    try:
        snapshot = FeasibilitySnapshot.model_validate_json(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read snapshot {path}: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"invalid snapshot {path}: {e}") from e
    region = build_region(snapshot.q_prev, snapshot.nodes, snapshot.power, snapshot.limits, snapshot.sigma)
    return is_feasible(region)
