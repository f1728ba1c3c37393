"""End-to-end wiring: config loading, field generation, and simulation runs.

The generation chain is bitmap -> complete map -> cost map -> raw field ->
transition field -> smoothed field; every stage can be written to disk for
inspection.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import field as fieldmod
from . import gridmap, grids, metrics as metricsmod, sim as simmod, wavefront
from .errors import ConstraintError, FieldPlanError
from .field import TransitionParams, VectorField
from .gridmap import CompleteMap, GoalCells, GoalKind, OccupancyBitmap
from .plan import LookupMode, PlanParams
from .sim import (
    GoalRadiusInterpretation,
    Integrator,
    PathGoal,
    SingleGoal,
    VehicleState,
)
from .wavefront import CostMap


@dataclass
class RunConfig:
    map_path: str
    map_format: str = "PGM"
    resolution: float = 8.0
    mission: dict = dc_field(default_factory=dict)
    alpha: float = 2.0
    v: float = 10.0
    r_min: float = 20.0
    transition: dict = dc_field(
        default_factory=lambda: {
            "mu_p": 0.5,
            "sigma_p": 1.5,
            "mu_b": 0.5,
            "sigma_b": 1.5,
        }
    )
    sigma: float = 4.0  # Gaussian filter std, in cells
    k_gain: float = 2.0
    dt: float = 0.05
    t_max: float = 600.0
    integrator: str = "rk4"
    lookup_mode: str = "bilinear"
    goal_radius_interpretation: str = "radius"
    start: list = None  # [x, y, theta]
    out_dir: str = "out"

    def __post_init__(self):
        # re-validate every domain constraint at load time
        self.plan_params()
        self.transition_params()
        if self.alpha < 2:
            raise ConstraintError(f"alpha must be >= 2, got {self.alpha}")
        if self.resolution <= 0:
            raise ConstraintError("resolution must be > 0")
        if self.sigma <= 0:
            raise ConstraintError("sigma must be > 0")
        if self.dt <= 0 or self.t_max <= 0:
            raise ConstraintError("dt and t_max must be > 0")
        Integrator(self.integrator)
        GoalRadiusInterpretation(self.goal_radius_interpretation)
        mtype = self.mission.get("type")
        if mtype == "single_goal":
            x, y = self.mission["goal"]
            if self.mission.get("beta", 2.0) < 2:
                raise ConstraintError("beta must be >= 2")
        elif mtype == "path":
            if len(self.mission.get("waypoint_cells", [])) < 2:
                raise ConstraintError("path mission needs >= 2 waypoint cells")
        else:
            raise ConstraintError(f"unknown mission type {mtype!r}")

    def plan_params(self) -> PlanParams:
        mode = (
            LookupMode.BILINEAR
            if self.lookup_mode == "bilinear"
            else LookupMode.NEAREST_CELL
        )
        return PlanParams(self.v, self.r_min, self.k_gain, mode)

    def transition_params(self) -> TransitionParams:
        t = self.transition
        return TransitionParams(
            t.get("mu_p", 0.5),
            t.get("sigma_p", 1.5),
            t.get("mu_b", 0.5),
            t.get("sigma_b", 1.5),
            self.r_min,
        )


def load_config(path, overrides: dict = None) -> RunConfig:
    raw = json.loads(Path(path).read_text())
    if overrides:
        for key, value in overrides.items():
            _set_dotted(raw, key, value)
    try:
        return RunConfig(**raw)
    except TypeError as e:
        raise ConstraintError(f"bad config key: {e}") from None


def _set_dotted(d: dict, dotted: str, value):
    parts = dotted.split(".")
    for p in parts[:-1]:
        d = d.setdefault(p, {})
    d[parts[-1]] = value


@dataclass
class FieldStages:
    """Everything the simulator needs, plus the intermediate stages."""

    bitmap: OccupancyBitmap
    complete_map: CompleteMap
    cost_map: CostMap
    field_raw: VectorField
    field_transition: VectorField
    field_smoothed: VectorField
    goals: GoalCells
    goal_spec: object  # SingleGoal or PathGoal
    path_states: tuple = None  # reference states for path missions


def _mission_goals(config: RunConfig, bm: OccupancyBitmap):
    """GoalCells + goal spec for the configured mission at the bitmap's
    resolution (which may differ from the config's during sweeps)."""
    res = bm.resolution
    m = config.mission
    if m["type"] == "single_goal":
        x_g, y_g = m["goal"]
        i, j = grids.cell_of(x_g, y_g, res)
        goals = GoalCells(((i, j),), GoalKind.SINGLE_GOAL)
        spec = SingleGoal(float(x_g), float(y_g), float(m.get("beta", 2.0)))
        return goals, spec
    # path mission: waypoint cells are given at the config resolution;
    # convert to world points so any refined bitmap rasterizes consistently
    base = config.resolution
    waypoints = [((i + 0.5) * base, (j + 0.5) * base) for i, j in m["waypoint_cells"]]
    goals = gridmap.rasterize_path(waypoints, res)
    dx, dy, dth = m.get("deltas", [2 * res, 2 * res, math.pi])
    return goals, (waypoints, float(dx), float(dy), float(dth))


def generate_stages(
    config: RunConfig, bm: OccupancyBitmap = None, sigma: float = None
) -> FieldStages:
    """Run the full generation chain for a config; `bm` and `sigma` may be
    overridden for sweeps."""
    if bm is None:
        bm = gridmap.load_bitmap(
            config.map_path, config.map_format, config.resolution
        )
    sigma = config.sigma if sigma is None else sigma
    goals, spec = _mission_goals(config, bm)
    tparams = config.transition_params()

    m = gridmap.generate_complete_map(bm, goals, config.alpha, config.r_min)
    cm = wavefront.expand_wavefront(m)
    f_raw = fieldmod.raw_field(cm, m, goals)

    f_t = f_raw
    path_states = None
    if goals.kind == GoalKind.PATH:
        pe = fieldmod.path_edges(goals, m)
        f_t = fieldmod.apply_transition(f_t, pe, tparams)
        path_states = tuple(
            ((i + 0.5) * bm.resolution, (j + 0.5) * bm.resolution, ang)
            for (i, j), ang in zip(pe.cells, pe.angles)
        )
        waypoints, dx, dy, dth = spec
        spec = PathGoal(path_states, dx, dy, dth)
    be = fieldmod.border_edges(m, f_raw)
    if be.cells:
        f_t = fieldmod.apply_transition(f_t, be, tparams)
    f_s = fieldmod.smooth_field(f_t, sigma)
    return FieldStages(bm, m, cm, f_raw, f_t, f_s, goals, spec, path_states)


def write_stages(stages: FieldStages, out_dir, config: RunConfig, sigma=None):
    """Write every intermediate stage for inspection; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sigma = config.sigma if sigma is None else sigma
    paths = {}
    gridmap.save_complete_map(stages.complete_map, out / "complete_map.csv")
    paths["complete_map"] = out / "complete_map.csv"
    wavefront.save_cost_map(stages.cost_map, out / "cost_map.csv")
    paths["cost_map"] = out / "cost_map.csv"
    tp = config.transition
    for name, f in (
        ("field_raw", stages.field_raw),
        ("field_transition", stages.field_transition),
        ("field_smoothed", stages.field_smoothed),
    ):
        fieldmod.save_field(f, out / f"{name}.csv", sigma=sigma, params=tp)
        paths[name] = out / f"{name}.csv"
    return paths


def run_simulation(
    config: RunConfig, stages: FieldStages, start: VehicleState
) -> tuple:
    """Simulate one start state; returns (trajectory, metrics report)."""
    params = config.plan_params()
    traj = simmod.simulate(
        start,
        stages.complete_map,
        stages.field_smoothed,
        params,
        stages.goal_spec,
        dt=config.dt,
        t_max=config.t_max,
        integrator=Integrator(config.integrator),
        interpretation=GoalRadiusInterpretation(config.goal_radius_interpretation),
    )
    path_pts = stages.path_states
    report = metricsmod.evaluate(
        traj,
        path_points=path_pts,
        approach_radius=2 * stages.bitmap.resolution if path_pts else None,
    )
    return traj, report
