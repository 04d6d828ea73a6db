import logging
from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.console import Console
from rich.table import Table

from .base import ConfigError, ExportError
from .config import ScenarioConfig, settings
from .harness import ExportFormat, check_snapshot, export, run, sweep as run_sweep
from .model import RunSummary

app = typer.Typer(help="QoS-aware FlyBS positioning and power allocation simulator.", no_args_is_help=True)
console = Console()

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_EXPORT = 1

ConfigOption = Annotated[Optional[Path], typer.Option("--config", "-c", help="JSON scenario file")]
SchemeOption = Annotated[Optional[str], typer.Option("--scheme", help="proposed | mmc | eem | eeem")]
OutOption = Annotated[Path, typer.Option("--out", "-o", help="Output directory")]
WorkersOption = Annotated[int, typer.Option("--workers", min=1, help="Drops run in parallel")]


@app.callback()
def main(log_level: Annotated[str, typer.Option("--log-level", help="Logging level")] = settings.log_level):
    logging.getLogger("flybs").setLevel(log_level.upper())


def _fail(kind: str, err: Exception, code: int):
    console.print(f"[bold red]{kind}:[/bold red] {err}")
    raise typer.Exit(code=code)


def _summary_table(summary: RunSummary) -> Table:
    table = Table(title=f"{summary.scheme} · {summary.n_nodes} nodes · {summary.n_drops} drop(s)")
    table.add_column("metric")
    table.add_column("value", justify="right")
    table.add_row("steps", str(summary.n_steps))
    table.add_row("mean sum capacity [Mbit/s]", f"{summary.mean_c_tot / 1e6:.3f}")
    table.add_row("final sum capacity [Mbit/s]", f"{summary.final_c_tot / 1e6:.3f}")
    table.add_row("min node capacity [Mbit/s]", f"{summary.node_capacity.min / 1e6:.3f}")
    table.add_row("QoS violations", str(summary.qos_violations))
    table.add_row("infeasible steps", str(summary.infeasible_steps))
    table.add_row("mean iterations", f"{summary.mean_iterations:.2f}")
    table.add_row("mean propulsion power [W]", f"{summary.mean_propulsion_power:.2f}")
    return table


@app.command()
def simulate(
    config: ConfigOption = None,
    scheme: SchemeOption = None,
    n_nodes: Annotated[Optional[int], typer.Option("--n-nodes")] = None,
    cmin: Annotated[Optional[float], typer.Option("--cmin", help="Minimum capacity in bit/s")] = None,
    seed: Annotated[Optional[int], typer.Option("--seed")] = None,
    n_drops: Annotated[Optional[int], typer.Option("--n-drops")] = None,
    duration: Annotated[Optional[float], typer.Option("--duration", help="Mission length in s")] = None,
    out: OutOption = settings.out_dir,
    workers: WorkersOption = settings.workers,
    trajectory: Annotated[bool, typer.Option("--trajectory", help="Also write node trajectories")] = False,
):
    """
    Run one scenario and write the per-step CSV and the JSON summary.
    """
    try:
        cfg = ScenarioConfig.from_file(
            config, scheme=scheme, n_nodes=n_nodes, cmin=cmin, seed=seed, n_drops=n_drops, duration=duration
        )
        summary = run(cfg, workers, trajectory_path=out / "trajectory.csv" if trajectory else None)
        export(summary, out / f"{cfg.scheme}_steps.csv", ExportFormat.CSV)
        export(summary, out / f"{cfg.scheme}_summary.json", ExportFormat.JSON)
    except ConfigError as e:
        _fail("Config error", e, EXIT_CONFIG)
    except ExportError as e:
        _fail("Export error", e, EXIT_EXPORT)
    console.print(_summary_table(summary))


@app.command()
def sweep(
    param: Annotated[str, typer.Option("--param", help="n_nodes | cmin")],
    values: Annotated[str, typer.Option("--values", help="Comma-separated values")],
    config: ConfigOption = None,
    scheme: SchemeOption = None,
    out: OutOption = settings.out_dir,
    workers: WorkersOption = settings.workers,
):
    """
    Run the scenario once per value and write one tidy CSV of summaries.
    """
    try:
        points = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as e:
        _fail("Config error", ConfigError(f"cannot parse --values: {e}"), EXIT_CONFIG)
    try:
        if not points:
            raise ConfigError("--values is empty")
        cfg = ScenarioConfig.from_file(config, scheme=scheme)
        frame = run_sweep(cfg, param, points, workers)
        path = out / f"sweep_{param}_{cfg.scheme}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
    except ConfigError as e:
        _fail("Config error", e, EXIT_CONFIG)
    except OSError as e:
        _fail("Export error", e, EXIT_EXPORT)
    console.print(frame.to_string(index=False))
    typer.echo(f"📝 Sweep written to {path}")


@app.command("feasibility-check")
def feasibility_check(snapshot: Annotated[Path, typer.Option("--snapshot", help="Region snapshot JSON")]):
    """
    Decide whether a single-timestep constraint region is empty.
    """
    try:
        verdict = check_snapshot(snapshot)
    except ConfigError as e:
        _fail("Config error", e, EXIT_CONFIG)
    typer.echo(verdict.model_dump_json(exclude_none=True))
    if not verdict.feasible:
        raise typer.Exit(code=EXIT_INFEASIBLE)
