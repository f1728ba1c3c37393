"""Command-line front end.

Subcommands: gen-field, simulate, sweep, metrics, plot.  A single JSON
config drives everything; individual keys can be overridden on the
command line with --set.  Exit codes: 0 success, 2 config error,
3 pipeline error, 4 simulation outcome failure under --require-goal.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import gridmap, metrics as metricsmod, pipeline, sim as simmod
from .errors import ConstraintError, FieldPlanError
from .sim import Outcome, VehicleState

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PIPELINE = 3
EXIT_OUTCOME = 4


def _parse_overrides(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConstraintError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _load_config(args) -> pipeline.RunConfig:
    return pipeline.load_config(args.config, _parse_overrides(args.set))


def _read_start_states(config, path):
    if path:
        states = []
        for line in Path(path).read_text().splitlines():
            if not line.strip() or line.lower().startswith("x"):
                continue
            x, y, th = (float(v) for v in line.split(",")[:3])
            states.append(VehicleState(x, y, th))
        if not states:
            raise ConstraintError(f"no start states in {path}")
        return states
    if config.start is None:
        raise ConstraintError("no start state: set config 'start' or --seed-states")
    x, y, th = config.start
    return [VehicleState(float(x), float(y), float(th))]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen_field(args) -> int:
    config = _load_config(args)
    out = Path(args.out or config.out_dir)
    stage = "complete_map"
    try:
        stages = pipeline.generate_stages(config)
        stage = "write"
        pipeline.write_stages(stages, out, config)
    except FieldPlanError as e:
        print(f"gen-field failed at stage {stage!r}: {e}", file=sys.stderr)
        return EXIT_PIPELINE
    print(f"wrote field stages to {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load_config(args)
    out = Path(args.out or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        stages = pipeline.generate_stages(config)
        starts = _read_start_states(config, args.seed_states)
        summary = {"runs": [], "outcomes": {}}
        for k, start in enumerate(starts):
            traj, report = pipeline.run_simulation(config, stages, start)
            simmod.save_trajectory(
                traj,
                out / f"trajectory_{k:03d}.csv",
                metrics=json.loads(report.to_json()),
            )
            metricsmod.save_report(report, out / f"metrics_{k:03d}.json")
            summary["runs"].append(
                {
                    "start": [start.x, start.y, start.theta],
                    "outcome": traj.outcome.value,
                    "t_final": traj.samples[-1].t,
                }
            )
            summary["outcomes"][traj.outcome.value] = (
                summary["outcomes"].get(traj.outcome.value, 0) + 1
            )
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    except FieldPlanError as e:
        print(f"simulate failed: {e}", file=sys.stderr)
        return EXIT_PIPELINE
    print(json.dumps(summary["outcomes"]))
    if args.require_goal and summary["outcomes"].get(
        Outcome.GOAL_REACHED.value, 0
    ) != len(summary["runs"]):
        return EXIT_OUTCOME
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load_config(args)
    out = Path(args.out or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    values = [float(v) for v in args.values.split(",")]
    if len(values) < 2:
        print("sweep needs >= 2 values", file=sys.stderr)
        return EXIT_CONFIG

    rows = []
    runs = []
    for value in values:
        label = f"{args.parameter}_{value:g}"
        run_dir = out / label
        try:
            if args.parameter == "sigma":
                stages = pipeline.generate_stages(config, sigma=value)
                sigma = value
            else:  # resolution
                base = gridmap.load_bitmap(
                    config.map_path, config.map_format, config.resolution
                )
                factor = config.resolution / value
                if abs(factor - round(factor)) > 1e-9 or factor < 1:
                    raise ConstraintError(
                        f"resolution {value} must divide the base {config.resolution}"
                    )
                bm = base.refine(int(round(factor)))
                sigma = config.sigma * factor  # keep smoothing width in meters
                stages = pipeline.generate_stages(config, bm=bm, sigma=sigma)
            pipeline.write_stages(stages, run_dir, config, sigma=sigma)
            starts = _read_start_states(config, args.seed_states)
            traj, report = pipeline.run_simulation(config, stages, starts[0])
        except FieldPlanError as e:
            print(f"sweep value {value} failed: {e}", file=sys.stderr)
            rows.append({"value": value, "error": str(e)})
            continue
        simmod.save_trajectory(traj, run_dir / "trajectory.csv")
        metricsmod.save_report(report, run_dir / "metrics.json")
        rows.append(
            {
                "value": value,
                "outcome": traj.outcome.value,
                **json.loads(report.to_json()),
            }
        )
        runs.append((value, stages, traj))

    _write_comparison_csv(rows, out / "comparison.csv")
    if runs:
        _emit_plots(runs, out)
    print(f"sweep results in {out}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    traj = simmod.load_trajectory(args.traj)
    path_points = None
    if args.path_csv:
        path_points = [
            tuple(float(v) for v in line.split(",")[:2])
            for line in Path(args.path_csv).read_text().splitlines()
            if line.strip()
        ]
    report = metricsmod.evaluate(traj, path_points, args.approach_radius)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_plot(args) -> int:
    run_dir = Path(args.run_dir)
    trajs = sorted(run_dir.glob("trajectory*.csv")) or sorted(
        run_dir.glob("*/trajectory*.csv")
    )
    if not trajs:
        print(f"no trajectories under {run_dir}", file=sys.stderr)
        return EXIT_PIPELINE
    runs = []
    for p in trajs:
        traj = simmod.load_trajectory(p)
        runs.append((p.parent.name or p.stem, None, traj))
    _emit_plots(runs, Path(args.out or run_dir))
    return EXIT_OK


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _write_comparison_csv(rows, path):
    keys = sorted({k for r in rows for k in r})
    lines = [",".join(keys)]
    for r in rows:
        lines.append(",".join(str(r.get(k, "")) for k in keys))
    Path(path).write_text("\n".join(lines) + "\n")


def _emit_plots(runs, out_dir):
    """SVG overlays: trajectories over the map, heading vs time, and (for
    path missions) cross-track vs time.  Timestamps are suppressed so
    identical runs produce identical files."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save = dict(format="svg", metadata={"Date": None})

    fig, ax = plt.subplots(figsize=(6, 6))
    for label, stages, traj in runs:
        xy = traj.xy
        ax.plot(xy[:, 0], xy[:, 1], label=str(label))
    first_stages = next((s for _, s, _ in runs if s is not None), None)
    if first_stages is not None:
        m = first_stages.complete_map
        res = m.resolution
        ax.imshow(
            m.classes,
            origin="lower",
            extent=(0, m.width_cells * res, 0, m.height_cells * res),
            cmap="Greys",
            alpha=0.4,
        )
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend()
    fig.savefig(out_dir / "paths.svg", **save)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4))
    for label, _, traj in runs:
        ax.plot(traj.t, np.unwrap(traj.theta), label=str(label))
    ax.set_xlabel("t [s]")
    ax.set_ylabel("heading [rad]")
    ax.legend()
    fig.savefig(out_dir / "heading.svg", **save)
    plt.close(fig)

    path_pts = next(
        (s.path_states for _, s, _ in runs if s is not None and s.path_states),
        None,
    )
    if path_pts:
        fig, ax = plt.subplots(figsize=(7, 4))
        for label, _, traj in runs:
            _, _, series = metricsmod.cross_track(traj, path_pts)
            ax.plot(traj.t, series, label=str(label))
        ax.set_xlabel("t [s]")
        ax.set_ylabel("cross-track [m]")
        ax.legend()
        fig.savefig(out_dir / "cross_track.svg", **save)
        plt.close(fig)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fieldplan",
        description="Precomputed vector-field motion plans for bounded-"
        "curvature vehicles, with closed-loop verification.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--out", help="output directory")
        sp.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override a config key (dotted paths allowed)",
        )

    sp = sub.add_parser("gen-field", help="generate all field stages")
    common(sp)
    sp.set_defaults(func=cmd_gen_field)

    sp = sub.add_parser("simulate", help="closed-loop simulation")
    common(sp)
    sp.add_argument("--seed-states", help="CSV of start states x,y,theta")
    sp.add_argument(
        "--require-goal",
        action="store_true",
        help="exit 4 unless every run reaches the goal",
    )
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="parameter sweep with comparison table")
    common(sp)
    sp.add_argument(
        "--parameter", choices=("sigma", "resolution"), required=True
    )
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.add_argument("--seed-states", help="CSV of start states x,y,theta")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("metrics", help="evaluate a stored trajectory")
    sp.add_argument("--traj", required=True)
    sp.add_argument("--path-csv", help="reference path points x,y per line")
    sp.add_argument("--approach-radius", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("plot", help="SVG plots for stored runs")
    sp.add_argument("--run-dir", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConstraintError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FieldPlanError as e:
        print(f"pipeline error: {e}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
