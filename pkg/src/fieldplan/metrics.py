"""Trajectory evaluation: heading smoothness and cross-track error."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .errors import ConstraintError
from .plan import wrap_signed
from .sim import Outcome, Trajectory

# A command sign change only counts as an oscillation once at least this
# much turning has accumulated since the last counted change; raw sign
# flips are dominated by numerical jitter.
OSCILLATION_HYSTERESIS = 0.01


@dataclass
class MetricsReport:
    heading_total_variation: float
    oscillation_count: int
    mean_cross_track: float
    max_cross_track: float
    time_to_goal: float  # inf unless the trajectory reached the goal
    path_length: float

    def to_json(self) -> str:
        d = asdict(self)
        if math.isinf(d["time_to_goal"]):
            d["time_to_goal"] = None
        return json.dumps(d, indent=2) + "\n"


def heading_metrics(traj: Trajectory) -> tuple:
    """(total variation of heading, hysteretic command sign-change count)."""
    if len(traj.samples) < 2:
        raise ConstraintError("heading metrics need at least 2 samples")
    thetas = traj.theta
    steps = np.array([wrap_signed(d) for d in np.diff(thetas)])
    total_variation = float(np.abs(steps).sum())

    count = 0
    last_sign = 0
    accumulated = math.inf  # first sign change always counts
    for omega, dth in zip(traj.commands, steps):
        s = 0 if omega == 0.0 else (1 if omega > 0 else -1)
        if s != 0:
            if last_sign != 0 and s != last_sign and accumulated >= OSCILLATION_HYSTERESIS:
                count += 1
                accumulated = 0.0
            if last_sign == 0:
                accumulated = 0.0
            last_sign = s
        accumulated += abs(dth)
    return total_variation, count


def _point_segment_distance(p, a, b) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def cross_track(
    traj: Trajectory, path_points, approach_radius: float = None
) -> tuple:
    """(mean, max, per-sample series) of distance to the path polyline.

    The mean and max are taken over samples after the first approach, i.e.
    from the first sample whose distance drops below `approach_radius`
    (callers typically pass 2 * resolution).  With no approach_radius, or
    if the path is never approached, the whole run is aggregated.
    """
    path_points = [tuple(p[:2]) for p in path_points]
    if len(path_points) < 2:
        raise ConstraintError("cross-track needs a path of >= 2 points")
    series = np.array(
        [
            min(
                _point_segment_distance((s.x, s.y), a, b)
                for a, b in zip(path_points, path_points[1:])
            )
            for s in traj.samples
        ]
    )
    window = series
    if approach_radius is not None:
        below = np.nonzero(series < approach_radius)[0]
        if len(below):
            window = series[below[0] :]
    return float(window.mean()), float(window.max()), series


def evaluate(
    traj: Trajectory, path_points=None, approach_radius: float = None
) -> MetricsReport:
    """Full report for one trajectory; cross-track terms are 0 for
    single-goal missions (no reference path)."""
    tv, osc = heading_metrics(traj)
    if path_points is not None:
        mean_ct, max_ct, _ = cross_track(traj, path_points, approach_radius)
    else:
        mean_ct = max_ct = 0.0
    xy = traj.xy
    path_length = float(np.hypot(*np.diff(xy, axis=0).T).sum())
    ttg = (
        traj.samples[-1].t if traj.outcome == Outcome.GOAL_REACHED else math.inf
    )
    return MetricsReport(tv, osc, mean_ct, max_ct, ttg, path_length)


def save_report(report: MetricsReport, path) -> None:
    Path(path).write_text(report.to_json())
