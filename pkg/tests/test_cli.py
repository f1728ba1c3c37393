import json
from pathlib import Path

import numpy as np
import pytest

from fieldplan import cli
from fieldplan.field import load_field
from fieldplan.gridmap import OccupancyBitmap, load_complete_map, save_bitmap_pgm
from fieldplan.sim import load_trajectory
from fieldplan.wavefront import load_cost_map

STAGE_FILES = (
    "complete_map.csv",
    "cost_map.csv",
    "field_raw.csv",
    "field_transition.csv",
    "field_smoothed.csv",
)


@pytest.fixture
def workspace(tmp_path):
    """A 16x16-cell map at 8 m resolution with one small obstacle block,
    plus a single-goal config pointing at it."""
    occ = np.zeros((16, 16), np.uint8)
    occ[2:4, 11:13] = 1  # off the start->goal diagonal
    save_bitmap_pgm(OccupancyBitmap(occ, 8.0), tmp_path / "map.pgm")
    config = {
        "map_path": str(tmp_path / "map.pgm"),
        "map_format": "PGM",
        "resolution": 8.0,
        "alpha": 2.0,
        "v": 10.0,
        "r_min": 4.0,
        "sigma": 2.0,
        "k_gain": 2.0,
        "dt": 0.05,
        "t_max": 120.0,
        "mission": {"type": "single_goal", "goal": [100.0, 100.0], "beta": 2.0},
        "start": [12.0, 12.0, 0.5],
        "out_dir": str(tmp_path / "out"),
    }
    (tmp_path / "config.json").write_text(json.dumps(config, indent=2))
    return tmp_path


def run(*argv):
    return cli.main([str(a) for a in argv])


class TestGenField:
    def test_writes_all_stages(self, workspace):
        out = workspace / "gen"
        rc = run("gen-field", "--config", workspace / "config.json", "--out", out)
        assert rc == cli.EXIT_OK
        for name in STAGE_FILES:
            assert (out / name).exists(), name
            assert (out / name).with_suffix(".json").exists(), name

    def test_outputs_round_trip(self, workspace):
        out = workspace / "gen"
        run("gen-field", "--config", workspace / "config.json", "--out", out)
        m = load_complete_map(out / "complete_map.csv")
        cm = load_cost_map(out / "cost_map.csv")
        assert cm.cost.shape == m.classes.shape
        for name in ("field_raw", "field_transition", "field_smoothed"):
            f = load_field(out / f"{name}.csv")
            assert f.angles.shape == m.classes.shape

    def test_goal_in_buffer_exits_3_naming_stage(self, workspace, capsys):
        rc = run(
            "gen-field",
            "--config",
            workspace / "config.json",
            "--out",
            workspace / "bad",
            "--set",
            "mission.goal=[92.0, 12.0]",  # one cell south of the obstacle
        )
        assert rc == cli.EXIT_PIPELINE
        err = capsys.readouterr().err
        assert "complete_map" in err

    def test_deterministic_outputs(self, workspace):
        for d in ("a", "b"):
            run(
                "gen-field",
                "--config",
                workspace / "config.json",
                "--out",
                workspace / d,
            )
        for name in STAGE_FILES:
            assert (workspace / "a" / name).read_bytes() == (
                workspace / "b" / name
            ).read_bytes(), name

    def test_set_override_changes_output(self, workspace):
        run(
            "gen-field",
            "--config",
            workspace / "config.json",
            "--out",
            workspace / "s2",
        )
        run(
            "gen-field",
            "--config",
            workspace / "config.json",
            "--out",
            workspace / "s6",
            "--set",
            "sigma=6.0",
        )
        a = (workspace / "s2" / "field_smoothed.csv").read_bytes()
        b = (workspace / "s6" / "field_smoothed.csv").read_bytes()
        assert a != b


class TestSimulate:
    def test_reaches_goal(self, workspace, capsys):
        out = workspace / "sim"
        rc = run(
            "simulate",
            "--config",
            workspace / "config.json",
            "--out",
            out,
            "--require-goal",
        )
        assert rc == cli.EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["runs"][0]["outcome"] == "GoalReached"
        traj = load_trajectory(out / "trajectory_000.csv")
        assert len(traj.samples) == len(traj.commands) + 1
        report = json.loads((out / "metrics_000.json").read_text())
        assert report["time_to_goal"] is not None

    def test_require_goal_exit_4_on_timeout(self, workspace):
        rc = run(
            "simulate",
            "--config",
            workspace / "config.json",
            "--out",
            workspace / "sim_to",
            "--set",
            "t_max=0.3",
            "--require-goal",
        )
        assert rc == cli.EXIT_OUTCOME

    def test_seed_states_csv(self, workspace):
        seeds = workspace / "seeds.csv"
        seeds.write_text("x,y,theta\n12.0,12.0,0.0\n12.0,100.0,1.0\n")
        out = workspace / "sim_multi"
        rc = run(
            "simulate",
            "--config",
            workspace / "config.json",
            "--out",
            out,
            "--seed-states",
            seeds,
        )
        assert rc == cli.EXIT_OK
        assert (out / "trajectory_000.csv").exists()
        assert (out / "trajectory_001.csv").exists()

    def test_missing_config_key_exits_2(self, workspace):
        bad = workspace / "bad.json"
        bad.write_text(json.dumps({"resolution": 8.0}))
        rc = run("simulate", "--config", bad, "--out", workspace / "x")
        assert rc == cli.EXIT_CONFIG

    def test_invalid_value_exits_2(self, workspace):
        rc = run(
            "simulate",
            "--config",
            workspace / "config.json",
            "--out",
            workspace / "x",
            "--set",
            "alpha=1.0",
        )
        assert rc == cli.EXIT_CONFIG


class TestSweep:
    def test_sigma_sweep_outputs(self, workspace):
        out = workspace / "sweep"
        rc = run(
            "sweep",
            "--config",
            workspace / "config.json",
            "--out",
            out,
            "--parameter",
            "sigma",
            "--values",
            "1,3",
        )
        assert rc == cli.EXIT_OK
        table = (out / "comparison.csv").read_text().splitlines()
        assert len(table) == 3  # header + one row per value
        assert "heading_total_variation" in table[0]
        assert (out / "paths.svg").exists()
        assert (out / "heading.svg").exists()
        for v in ("1", "3"):
            assert (out / f"sigma_{v}" / "trajectory.csv").exists()
            assert (out / f"sigma_{v}" / "metrics.json").exists()

    def test_resolution_sweep_refines(self, workspace):
        out = workspace / "sweep_res"
        rc = run(
            "sweep",
            "--config",
            workspace / "config.json",
            "--out",
            out,
            "--parameter",
            "resolution",
            "--values",
            "8,4",
        )
        assert rc == cli.EXIT_OK
        coarse = load_complete_map(out / "resolution_8" / "complete_map.csv")
        fine = load_complete_map(out / "resolution_4" / "complete_map.csv")
        assert fine.classes.shape == (32, 32)
        assert coarse.classes.shape == (16, 16)

    def test_single_value_rejected(self, workspace):
        rc = run(
            "sweep",
            "--config",
            workspace / "config.json",
            "--out",
            workspace / "x",
            "--parameter",
            "sigma",
            "--values",
            "2",
        )
        assert rc == cli.EXIT_CONFIG


class TestMetricsCommand:
    def test_reports_stored_trajectory(self, workspace, capsys):
        out = workspace / "sim"
        run("simulate", "--config", workspace / "config.json", "--out", out)
        capsys.readouterr()
        rc = run("metrics", "--traj", out / "trajectory_000.csv")
        assert rc == cli.EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["path_length"] > 0


class TestPlotCommand:
    def test_plots_from_run_dir(self, workspace):
        out = workspace / "sim"
        run("simulate", "--config", workspace / "config.json", "--out", out)
        rc = run("plot", "--run-dir", out)
        assert rc == cli.EXIT_OK
        assert (out / "paths.svg").exists()

    def test_empty_dir_exits_3(self, workspace):
        (workspace / "empty").mkdir()
        rc = run("plot", "--run-dir", workspace / "empty")
        assert rc == cli.EXIT_PIPELINE
