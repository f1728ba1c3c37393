"""The feedback plan: map a vehicle state to a commanded turn rate.

Inside the buffer (or an obstacle cell, which should only happen through
simulation error) the vehicle turns at its maximum rate toward the field
direction; elsewhere a saturated proportional law corrects the heading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConstraintError, OutOfBoundsError
from .field import TWO_PI, VectorField
from .gridmap import CellClass, CompleteMap


class LookupMode(Enum):
    NEAREST_CELL = "nearest"
    BILINEAR = "bilinear"


@dataclass(frozen=True)
class PlanParams:
    """Vehicle and control-law parameters; omega_max = v / r_min."""

    v: float = 10.0
    r_min: float = 20.0
    k_gain: float = 2.0
    lookup_mode: LookupMode = LookupMode.BILINEAR

    def __post_init__(self):
        if self.v <= 0 or self.r_min <= 0 or self.k_gain <= 0:
            raise ConstraintError("v, r_min and k_gain must all be > 0")

    @property
    def omega_max(self) -> float:
        return self.v / self.r_min


def wrap_signed(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    a = math.fmod(angle, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


def heading_error(theta_v: float, theta_f: float) -> float:
    """Signed heading error from the vehicle heading to the field
    direction, in (-pi, pi]; positive means turn left."""
    return wrap_signed(theta_f - theta_v)


def field_direction(
    f: VectorField, position, mode: LookupMode = LookupMode.BILINEAR
) -> float:
    """Field angle at a continuous position.

    Nearest-cell mode returns the containing cell's angle; bilinear mode
    interpolates the cos/sin components of the four surrounding cell
    centers and renormalizes.  The outermost half-cell ring clamps to the
    edge cells.
    """
    x, y = position
    res = f.resolution
    h, w = f.angles.shape
    if not (0.0 <= x < w * res and 0.0 <= y < h * res):
        raise OutOfBoundsError(f"position {(x, y)} outside the workspace")
    if mode == LookupMode.NEAREST_CELL:
        i = min(int(x / res), w - 1)
        j = min(int(y / res), h - 1)
        return float(f.angles[j, i])

    u = min(max(x / res - 0.5, 0.0), w - 1.0)
    v = min(max(y / res - 0.5, 0.0), h - 1.0)
    i0 = min(int(u), w - 2) if w > 1 else 0
    j0 = min(int(v), h - 2) if h > 1 else 0
    fx = u - i0
    fy = v - j0
    i1 = min(i0 + 1, w - 1)
    j1 = min(j0 + 1, h - 1)

    a = f.angles
    cx = (
        (1 - fx) * (1 - fy) * math.cos(a[j0, i0])
        + fx * (1 - fy) * math.cos(a[j0, i1])
        + (1 - fx) * fy * math.cos(a[j1, i0])
        + fx * fy * math.cos(a[j1, i1])
    )
    cy = (
        (1 - fx) * (1 - fy) * math.sin(a[j0, i0])
        + fx * (1 - fy) * math.sin(a[j0, i1])
        + (1 - fx) * fy * math.sin(a[j1, i0])
        + fx * fy * math.sin(a[j1, i1])
    )
    if math.hypot(cx, cy) < 1e-9:
        # opposing neighbors cancelled; fall back to the containing cell
        i = min(int(x / res), w - 1)
        j = min(int(y / res), h - 1)
        return float(f.angles[j, i])
    return math.atan2(cy, cx) % TWO_PI


def cell_class_at(m: CompleteMap, position) -> CellClass:
    """Classification of the cell containing a world position."""
    x, y = position
    res = m.resolution
    h, w = m.classes.shape
    if not (0.0 <= x < w * res and 0.0 <= y < h * res):
        raise OutOfBoundsError(f"position {(x, y)} outside the workspace")
    return CellClass(m.classes[int(y / res), int(x / res)])


def plan_action(
    state, m: CompleteMap, f: VectorField, params: PlanParams
) -> float:
    """Commanded turn rate for a state (x, y, theta).

    Buffer and obstacle cells get bang-bang turning at omega_max; free and
    goal cells get the saturated proportional law.
    """
    x, y, theta = state
    theta_f = field_direction(f, (x, y), params.lookup_mode)
    err = heading_error(theta, theta_f)
    cls = cell_class_at(m, (x, y))
    if cls in (CellClass.BUFFER, CellClass.OBSTACLE):
        return params.omega_max * float(np.sign(err))
    return float(np.clip(params.k_gain * err, -params.omega_max, params.omega_max))
