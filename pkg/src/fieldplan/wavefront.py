"""Cost-map generation by 8-point-connectivity wavefront expansion.

Costs propagate outward from the goal cells (seeded at 2) in synchronous
waves: a still-empty cell first looks at its vertical/horizontal neighbors
(step cost 1) and only if none of those carries a cost yet at its diagonal
neighbors (step cost 1.41).  Buffer and obstacle cells act as walls.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import ConstraintError, MapParseError
from .gridmap import CellClass, CompleteMap
from .grids import DIAG_COST, NEIGHBORS_D, NEIGHBORS_VH, shifted


class CellMark(IntEnum):
    """What a cost-map cell holds besides (or instead of) a finite cost."""

    COSTED = 0
    OBSTACLE = 1
    BUFFER = 2
    UNREACHABLE = 3


_MARK_SENTINELS = {
    CellMark.OBSTACLE: "OBS",
    CellMark.BUFFER: "BUF",
    CellMark.UNREACHABLE: "UNR",
}
_SENTINEL_MARKS = {v: k for k, v in _MARK_SENTINELS.items()}


@dataclass(frozen=True)
class CostMap:
    """Wavefront costs from the goal set.

    `cost` is finite exactly where `marks == CellMark.COSTED`; goal cells
    hold cost 2.  `all_unreachable` flags maps whose free space could not
    be reached at all.
    """

    cost: np.ndarray  # float64, np.inf where not costed
    marks: np.ndarray  # int8 grid of CellMark values
    resolution: float
    all_unreachable: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cost", np.asarray(self.cost, dtype=np.float64))
        object.__setattr__(self, "marks", np.asarray(self.marks, dtype=np.int8))
        self.cost.setflags(write=False)
        self.marks.setflags(write=False)

    @property
    def width_cells(self) -> int:
        return self.cost.shape[1]

    @property
    def height_cells(self) -> int:
        return self.cost.shape[0]


def expand_wavefront(m: CompleteMap) -> CostMap:
    """Propagate costs from the goal cells over the free cells of `m`.

    Terminates when a wave assigns no new cell; free cells never reached
    are marked unreachable.  Emits a warning (and sets `all_unreachable`)
    if no free cell received a cost.
    """
    classes = m.classes
    if not (classes == CellClass.GOAL).any():
        raise ConstraintError("complete map contains no goal cell")

    # Working grid mirrors the pseudocode encoding: goal = 2 seeds, free = 0,
    # obstacle = 1 and buffer = -1 never reach the >= 2 source threshold.
    cm = classes.astype(np.float64)
    while True:
        vh = np.stack([shifted(cm, di, dj, 0.0) for di, dj in NEIGHBORS_VH])
        dg = np.stack([shifted(cm, di, dj, 0.0) for di, dj in NEIGHBORS_D])
        vh_masked = np.where(vh >= 2.0, vh, np.inf)
        dg_masked = np.where(dg >= 2.0, dg, np.inf)
        vh_min = vh_masked.min(axis=0)
        dg_min = dg_masked.min(axis=0)
        zero = cm == 0.0
        take_vh = zero & np.isfinite(vh_min)
        take_dg = zero & ~np.isfinite(vh_min) & np.isfinite(dg_min)
        if not (take_vh.any() or take_dg.any()):
            break
        new = cm.copy()
        new[take_vh] = vh_min[take_vh] + 1.0
        new[take_dg] = dg_min[take_dg] + DIAG_COST
        cm = new

    marks = np.full(classes.shape, CellMark.COSTED, dtype=np.int8)
    marks[classes == CellClass.OBSTACLE] = CellMark.OBSTACLE
    marks[classes == CellClass.BUFFER] = CellMark.BUFFER
    marks[(classes == CellClass.FREE) & (cm == 0.0)] = CellMark.UNREACHABLE

    cost = np.where(marks == CellMark.COSTED, cm, np.inf)

    reached = (marks == CellMark.COSTED) & (classes == CellClass.FREE)
    all_unreachable = bool((classes == CellClass.FREE).any() and not reached.any())
    if all_unreachable:
        warnings.warn("wavefront reached no free cell; map is fully blocked")
    return CostMap(cost, marks, m.resolution, all_unreachable)


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def save_cost_map(cm: CostMap, csv_path, sidecar_path=None) -> None:
    """Write costs as CSV with sentinel strings OBS/BUF/UNR."""
    csv_path = Path(csv_path)
    buf = io.StringIO()
    for j in range(cm.height_cells):
        fields = []
        for i in range(cm.width_cells):
            mark = CellMark(cm.marks[j, i])
            if mark == CellMark.COSTED:
                fields.append(repr(float(cm.cost[j, i])))
            else:
                fields.append(_MARK_SENTINELS[mark])
        buf.write(",".join(fields))
        buf.write("\n")
    csv_path.write_text(buf.getvalue())
    sidecar = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    sidecar.write_text(json.dumps({"resolution": cm.resolution}, indent=2) + "\n")


def load_cost_map(csv_path, sidecar_path=None) -> CostMap:
    csv_path = Path(csv_path)
    cost_rows, mark_rows = [], []
    for lineno, line in enumerate(csv_path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        costs, marks = [], []
        for f in line.split(","):
            f = f.strip()
            if f in _SENTINEL_MARKS:
                costs.append(np.inf)
                marks.append(int(_SENTINEL_MARKS[f]))
            else:
                try:
                    costs.append(float(f))
                except ValueError:
                    raise MapParseError(
                        f"invalid cost value {f!r} on line {lineno}"
                    ) from None
                marks.append(int(CellMark.COSTED))
        cost_rows.append(costs)
        mark_rows.append(marks)
    sidecar = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    meta = json.loads(sidecar.read_text())
    return CostMap(
        np.array(cost_rows, dtype=np.float64),
        np.array(mark_rows, dtype=np.int8),
        float(meta["resolution"]),
    )
