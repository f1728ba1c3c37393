"""Closed-loop kinematic simulation under the feedback plan.

The vehicle model is the constant-speed unicycle: x' = v cos(theta),
y' = v sin(theta), theta' = omega.  Fixed-step Euler or RK4 integration;
each simulation is deterministic and replayable from its command log.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConstraintError, OutOfBoundsError
from .field import TWO_PI, VectorField
from .gridmap import CellClass, CompleteMap
from .plan import LookupMode, PlanParams, plan_action, wrap_signed


class Integrator(Enum):
    EULER = "euler"
    RK4 = "rk4"


class Outcome(Enum):
    GOAL_REACHED = "GoalReached"
    TIMEOUT = "Timeout"
    COLLISION = "Collision"
    OUT_OF_BOUNDS = "OutOfBounds"


class GoalRadiusInterpretation(Enum):
    # squared distance compared against beta * r_min, exactly as the goal
    # cylinder is written
    AS_PRINTED = "as_printed"
    # disc of radius beta * r_min
    RADIUS = "radius"


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    theta: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", self.theta % TWO_PI)


@dataclass(frozen=True)
class SingleGoal:
    """Goal disc around p_g; beta >= 2 scales the radius by r_min."""

    x_g: float
    y_g: float
    beta: float = 2.0

    def __post_init__(self):
        if self.beta < 2:
            raise ConstraintError(f"beta must be >= 2, got {self.beta}")


@dataclass(frozen=True)
class PathGoal:
    """Reference states along a path with per-axis acceptance tolerances."""

    path_states: tuple  # ((x, y, theta), ...)
    delta_x: float
    delta_y: float
    delta_theta: float

    def __post_init__(self):
        if min(self.delta_x, self.delta_y, self.delta_theta) <= 0:
            raise ConstraintError("path tolerances must be positive")
        object.__setattr__(
            self,
            "path_states",
            tuple((float(x), float(y), float(t)) for x, y, t in self.path_states),
        )


@dataclass
class Trajectory:
    samples: list  # VehicleState, time-ordered
    commands: list  # omega per step, len(samples) - 1
    outcome: Outcome
    dt: float

    @property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def xy(self) -> np.ndarray:
        return np.array([[s.x, s.y] for s in self.samples])

    @property
    def theta(self) -> np.ndarray:
        return np.array([s.theta for s in self.samples])


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

def step(
    state: VehicleState,
    omega_cmd: float,
    v: float,
    dt: float,
    integrator: Integrator = Integrator.RK4,
) -> VehicleState:
    """One fixed-step integration of the unicycle model."""
    if dt <= 0:
        raise ConstraintError("dt must be > 0")
    x, y, th = state.x, state.y, state.theta
    if integrator == Integrator.EULER:
        nx = x + v * math.cos(th) * dt
        ny = y + v * math.sin(th) * dt
    else:
        # theta' is constant, so the RK4 stages use exactly known headings
        t1 = th
        t2 = th + 0.5 * omega_cmd * dt
        t4 = th + omega_cmd * dt
        nx = x + v * dt / 6.0 * (
            math.cos(t1) + 4.0 * math.cos(t2) + math.cos(t4)
        )
        ny = y + v * dt / 6.0 * (
            math.sin(t1) + 4.0 * math.sin(t2) + math.sin(t4)
        )
    nth = th + omega_cmd * dt
    return VehicleState(nx, ny, nth, state.t + dt)


# ---------------------------------------------------------------------------
# goal membership
# ---------------------------------------------------------------------------

def in_goal(
    state: VehicleState,
    goal,
    r_min: float,
    interpretation: GoalRadiusInterpretation = GoalRadiusInterpretation.RADIUS,
) -> bool:
    """Goal-set membership test for either mission variant."""
    if isinstance(goal, SingleGoal):
        d2 = (state.x - goal.x_g) ** 2 + (state.y - goal.y_g) ** 2
        if interpretation == GoalRadiusInterpretation.AS_PRINTED:
            return d2 <= goal.beta * r_min
        return d2 <= (goal.beta * r_min) ** 2
    if isinstance(goal, PathGoal):
        for xs, ys, ts in goal.path_states:
            if (
                abs(state.x - xs) < goal.delta_x
                and abs(state.y - ys) < goal.delta_y
                and abs(wrap_signed(state.theta - ts)) < goal.delta_theta
            ):
                return True
        return False
    raise ConstraintError(f"unknown goal spec {type(goal).__name__}")


def _terminal_goal(goal):
    """The membership test simulate() terminates on: for a path mission
    only the final path state counts, so the whole path gets tracked."""
    if isinstance(goal, PathGoal):
        return PathGoal(
            goal.path_states[-1:], goal.delta_x, goal.delta_y, goal.delta_theta
        )
    return goal


# ---------------------------------------------------------------------------
# closed loop
# ---------------------------------------------------------------------------

def simulate(
    start: VehicleState,
    m: CompleteMap,
    f: VectorField,
    params: PlanParams,
    goal,
    dt: float = 0.05,
    t_max: float = 600.0,
    integrator: Integrator = Integrator.RK4,
    interpretation: GoalRadiusInterpretation = GoalRadiusInterpretation.RADIUS,
) -> Trajectory:
    """Run the feedback plan in closed loop until the goal is reached, the
    time budget runs out, or the vehicle collides or leaves the workspace."""
    res = m.resolution
    h, w = m.classes.shape
    if not (0.0 <= start.x < w * res and 0.0 <= start.y < h * res):
        raise OutOfBoundsError(f"start {(start.x, start.y)} outside workspace")
    if m.classes[int(start.y / res), int(start.x / res)] == CellClass.OBSTACLE:
        raise ConstraintError("start position lies inside an obstacle cell")

    term = _terminal_goal(goal)
    state = start
    samples = [state]
    commands: list[float] = []
    while True:
        if in_goal(state, term, params.r_min, interpretation):
            outcome = Outcome.GOAL_REACHED
            break
        if state.t > t_max:
            outcome = Outcome.TIMEOUT
            break
        omega = plan_action((state.x, state.y, state.theta), m, f, params)
        state = step(state, omega, params.v, dt, integrator)
        commands.append(omega)
        samples.append(state)
        if not (0.0 <= state.x < w * res and 0.0 <= state.y < h * res):
            outcome = Outcome.OUT_OF_BOUNDS
            break
        if m.classes[int(state.y / res), int(state.x / res)] == CellClass.OBSTACLE:
            outcome = Outcome.COLLISION
            break
    return Trajectory(samples, commands, outcome, dt)


def simulate_batch(
    starts: np.ndarray,
    m: CompleteMap,
    f: VectorField,
    params: PlanParams,
    goal: SingleGoal,
    dt: float = 0.05,
    t_max: float = 600.0,
    interpretation: GoalRadiusInterpretation = GoalRadiusInterpretation.RADIUS,
):
    """Advance many single-goal simulations in lockstep (RK4, bilinear
    lookup).  Returns (outcomes, t_final) arrays aligned with `starts`,
    an (N, 3) array of (x, y, theta).

    This is the batch form of the plan's selling point: every start state
    is verified against the same precomputed field simultaneously.
    """
    if not isinstance(goal, SingleGoal):
        raise ConstraintError("simulate_batch supports single-goal missions only")
    starts = np.asarray(starts, dtype=np.float64)
    n = len(starts)
    res = m.resolution
    h, w = m.classes.shape
    classes = m.classes
    angles = f.angles
    cosg = np.cos(angles)
    sing = np.sin(angles)
    v = params.v
    omega_max = params.omega_max
    k = params.k_gain

    x = starts[:, 0].copy()
    y = starts[:, 1].copy()
    th = np.mod(starts[:, 2], TWO_PI)
    t = np.zeros(n)
    outcomes = np.full(n, -1, dtype=np.int8)  # -1 active
    goal_r2 = (
        goal.beta * params.r_min
        if interpretation == GoalRadiusInterpretation.AS_PRINTED
        else (goal.beta * params.r_min) ** 2
    )

    if ((x < 0) | (x >= w * res) | (y < 0) | (y >= h * res)).any():
        raise OutOfBoundsError("batch start outside workspace")
    if (classes[(y / res).astype(int), (x / res).astype(int)] == CellClass.OBSTACLE).any():
        raise ConstraintError("batch start inside an obstacle cell")

    OUT = {o: i for i, o in enumerate(Outcome)}
    while (outcomes == -1).any():
        act = outcomes == -1
        xa, ya, tha = x[act], y[act], th[act]

        d2 = (xa - goal.x_g) ** 2 + (ya - goal.y_g) ** 2
        reached = d2 <= goal_r2
        timed = ~reached & (t[act] > t_max)

        sub = np.full(reached.shape, -1, dtype=np.int8)
        sub[reached] = OUT[Outcome.GOAL_REACHED]
        sub[timed] = OUT[Outcome.TIMEOUT]

        run = sub == -1
        if run.any():
            xr, yr, thr = xa[run], ya[run], tha[run]
            # bilinear field lookup with half-cell edge clamping
            u = np.clip(xr / res - 0.5, 0.0, w - 1.0)
            vv = np.clip(yr / res - 0.5, 0.0, h - 1.0)
            i0 = np.minimum(u.astype(int), max(w - 2, 0))
            j0 = np.minimum(vv.astype(int), max(h - 2, 0))
            fx = u - i0
            fy = vv - j0
            i1 = np.minimum(i0 + 1, w - 1)
            j1 = np.minimum(j0 + 1, h - 1)
            cx = (
                (1 - fx) * (1 - fy) * cosg[j0, i0]
                + fx * (1 - fy) * cosg[j0, i1]
                + (1 - fx) * fy * cosg[j1, i0]
                + fx * fy * cosg[j1, i1]
            )
            cy = (
                (1 - fx) * (1 - fy) * sing[j0, i0]
                + fx * (1 - fy) * sing[j0, i1]
                + (1 - fx) * fy * sing[j1, i0]
                + fx * fy * sing[j1, i1]
            )
            mag = np.hypot(cx, cy)
            theta_f = np.mod(np.arctan2(cy, cx), TWO_PI)
            near = mag < 1e-9
            if near.any():
                ic = np.minimum((xr[near] / res).astype(int), w - 1)
                jc = np.minimum((yr[near] / res).astype(int), h - 1)
                theta_f[near] = angles[jc, ic]

            err = np.mod(theta_f - thr, TWO_PI)
            err[err > math.pi] -= TWO_PI

            ic = np.minimum((xr / res).astype(int), w - 1)
            jc = np.minimum((yr / res).astype(int), h - 1)
            cls = classes[jc, ic]
            bang = (cls == CellClass.BUFFER) | (cls == CellClass.OBSTACLE)
            omega = np.clip(k * err, -omega_max, omega_max)
            omega[bang] = omega_max * np.sign(err[bang])

            t1 = thr
            t2 = thr + 0.5 * omega * dt
            t4 = thr + omega * dt
            nx = xr + v * dt / 6.0 * (np.cos(t1) + 4.0 * np.cos(t2) + np.cos(t4))
            ny = yr + v * dt / 6.0 * (np.sin(t1) + 4.0 * np.sin(t2) + np.sin(t4))
            nth = np.mod(thr + omega * dt, TWO_PI)

            oob = (nx < 0) | (nx >= w * res) | (ny < 0) | (ny >= h * res)
            sub_run = np.full(nx.shape, -1, dtype=np.int8)
            sub_run[oob] = OUT[Outcome.OUT_OF_BOUNDS]
            inb = ~oob
            if inb.any():
                ci = (nx[inb] / res).astype(int)
                cj = (ny[inb] / res).astype(int)
                hit = classes[cj, ci] == CellClass.OBSTACLE
                tmp = sub_run[inb]
                tmp[hit] = OUT[Outcome.COLLISION]
                sub_run[inb] = tmp

            xa[run] = nx
            ya[run] = ny
            tha[run] = nth
            sub[run] = sub_run

        x[act] = xa
        y[act] = ya
        th[act] = tha
        t[act] = t[act] + np.where(run, dt, 0.0)
        outcomes[act] = sub

    out = np.array([list(Outcome)[i].value for i in outcomes])
    return out, t


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def save_trajectory(traj: Trajectory, csv_path, summary_path=None, metrics=None):
    """CSV of (t, x, y, theta, omega_cmd) plus a JSON summary."""
    csv_path = Path(csv_path)
    buf = io.StringIO()
    buf.write("t,x,y,theta,omega_cmd\n")
    for k, s in enumerate(traj.samples):
        omega = repr(traj.commands[k]) if k < len(traj.commands) else ""
        buf.write(f"{s.t!r},{s.x!r},{s.y!r},{s.theta!r},{omega}\n")
    csv_path.write_text(buf.getvalue())
    summary = Path(summary_path) if summary_path else csv_path.with_suffix(".json")
    payload = {
        "outcome": traj.outcome.value,
        "t_final": traj.samples[-1].t,
        "dt": traj.dt,
        "n_samples": len(traj.samples),
    }
    if metrics is not None:
        payload["metrics"] = metrics
    summary.write_text(json.dumps(payload, indent=2) + "\n")


def load_trajectory(csv_path, summary_path=None) -> Trajectory:
    csv_path = Path(csv_path)
    lines = csv_path.read_text().splitlines()
    samples, commands = [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        t, x, y, theta, omega = line.split(",")
        samples.append(VehicleState(float(x), float(y), float(theta), float(t)))
        if omega.strip():
            commands.append(float(omega))
    summary = Path(summary_path) if summary_path else csv_path.with_suffix(".json")
    meta = json.loads(summary.read_text())
    dt = float(meta["dt"])
    return Trajectory(samples, commands, Outcome(meta["outcome"]), dt)


def replay(traj: Trajectory, v: float, integrator: Integrator = Integrator.RK4):
    """Re-integrate a trajectory's command log from its first sample;
    returns the regenerated samples."""
    state = traj.samples[0]
    out = [state]
    for omega in traj.commands:
        state = step(state, omega, v, traj.dt, integrator)
        out.append(state)
    return out
