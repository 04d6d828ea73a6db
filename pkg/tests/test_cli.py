import json

from typer.testing import CliRunner

from flybs_sim.cli import app
from flybs_sim.model import FeasibilitySnapshot, Limits

runner = CliRunner()


def test_simulate_writes_results(tmp_path):
    result = runner.invoke(app, ["simulate", "--n-nodes", "5", "--duration", "3", "--seed", "2", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "proposed_steps.csv").exists()
    summary = json.loads((tmp_path / "proposed_summary.json").read_text())
    assert summary["n_steps"] == 3
    assert "QoS violations" in result.output


def test_simulate_with_trajectory(tmp_path):
    args = ["simulate", "--scheme", "eem", "--n-nodes", "4", "--duration", "2", "--out", str(tmp_path), "--trajectory"]
    result = runner.invoke(app, args)
    assert result.exit_code == 0, result.output
    assert (tmp_path / "trajectory.csv").exists()


def test_unknown_scheme_exit_code(tmp_path):
    result = runner.invoke(app, ["simulate", "--scheme", "bogus", "--duration", "1", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_bad_config_file_exit_code(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text("{broken")
    result = runner.invoke(app, ["simulate", "--config", str(path), "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_sweep(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"duration": 2, "n_nodes": 4}))
    result = runner.invoke(
        app, ["sweep", "--param", "cmin", "--values", "1e6,2e6", "--config", str(path), "--out", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "sweep_cmin_proposed.csv").exists()


def test_sweep_rejects_bad_values(tmp_path):
    result = runner.invoke(app, ["sweep", "--param", "cmin", "--values", "a,b", "--out", str(tmp_path)])
    assert result.exit_code == 2


def _write_snapshot(tmp_path, limits: Limits):
    nodes = [
        {
            "id": i,
            "position": [x, 0.0, 0.0],
            "qos_min": 1e6,
            "channel": {"bandwidth": 1e6, "noise_power": 4e-15, "interference": 1e-13},
        }
        for i, x in enumerate([0.0, 40.0])
    ]
    snapshot = FeasibilitySnapshot(q_prev=(20.0, 0.0, 150.0), nodes=nodes, power=[0.5, 0.5], limits=limits)
    path = tmp_path / "snapshot.json"
    path.write_text(snapshot.model_dump_json())
    return path


def test_feasibility_check_feasible(tmp_path):
    result = runner.invoke(app, ["feasibility-check", "--snapshot", str(_write_snapshot(tmp_path, Limits()))])
    assert result.exit_code == 0, result.output
    verdict = json.loads(result.output.strip().splitlines()[-1])
    assert verdict["feasible"] is True
    assert len(verdict["witness"]) == 3


def test_feasibility_check_infeasible(tmp_path):
    result = runner.invoke(app, ["feasibility-check", "--snapshot", str(_write_snapshot(tmp_path, Limits(p_pr_th=100.0)))])
    assert result.exit_code == 3
    verdict = json.loads(result.output.strip().splitlines()[-1])
    assert verdict["feasible"] is False


def test_feasibility_check_missing_file(tmp_path):
    result = runner.invoke(app, ["feasibility-check", "--snapshot", str(tmp_path / "none.json")])
    assert result.exit_code == 2
