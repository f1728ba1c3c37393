"""Occupancy bitmaps, goal cells, and complete-map generation.

The complete map classifies every cell as free, obstacle, buffer, or goal.
The buffer band is grown from the obstacles with a synchronous brushfire
sweep (8-point connectivity, diagonal step cost 1.41) wide enough that a
vehicle entering it can still turn away with its minimum turning radius.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import AssumptionViolation, ConstraintError, MapParseError
from .grids import DIAG_COST, NEIGHBORS_D, NEIGHBORS_VH, shifted

PGM_OBSTACLE_THRESHOLD = 128


class CellClass(IntEnum):
    """Cell classification with the integer encodings used on disk."""

    FREE = 0
    OBSTACLE = 1
    BUFFER = -1
    GOAL = 2


class GoalKind(IntEnum):
    SINGLE_GOAL = 0
    PATH = 1


@dataclass(frozen=True)
class OccupancyBitmap:
    """Binary workspace grid: 0 = free, 1 = obstacle.

    `cells` has shape (height_cells, width_cells) and is indexed [j, i];
    `resolution` is the cell side in meters.
    """

    cells: np.ndarray
    resolution: float

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.uint8)
        if cells.ndim != 2:
            raise ConstraintError("bitmap cells must be a 2-D grid")
        if not np.isin(cells, (0, 1)).all():
            raise ConstraintError("bitmap cells must be 0 or 1")
        if not self.resolution > 0:
            raise ConstraintError(f"resolution must be > 0, got {self.resolution}")
        object.__setattr__(self, "cells", cells)
        self.cells.setflags(write=False)

    @property
    def width_cells(self) -> int:
        return self.cells.shape[1]

    @property
    def height_cells(self) -> int:
        return self.cells.shape[0]

    def refine(self, factor: int) -> "OccupancyBitmap":
        """Subdivide every cell into factor x factor cells of resolution
        res/factor; the occupied region is unchanged."""
        if factor < 1:
            raise ConstraintError("refinement factor must be >= 1")
        cells = np.repeat(np.repeat(self.cells, factor, axis=0), factor, axis=1)
        return OccupancyBitmap(cells, self.resolution / factor)


@dataclass(frozen=True)
class GoalCells:
    """Ordered goal-cell indices; for a path mission consecutive cells must
    be 8-adjacent."""

    cells: tuple
    kind: GoalKind

    def __post_init__(self):
        cells = tuple((int(i), int(j)) for i, j in self.cells)
        if not cells:
            raise ConstraintError("goal set must be non-empty")
        if self.kind == GoalKind.PATH:
            for (i0, j0), (i1, j1) in zip(cells, cells[1:]):
                if max(abs(i1 - i0), abs(j1 - j0)) != 1:
                    raise ConstraintError(
                        f"path cells {(i0, j0)} and {(i1, j1)} are not 8-adjacent"
                    )
        object.__setattr__(self, "cells", cells)

    def validate_bounds(self, width_cells: int, height_cells: int) -> None:
        for i, j in self.cells:
            if not (0 <= i < width_cells and 0 <= j < height_cells):
                raise ConstraintError(f"goal cell {(i, j)} out of bounds")


@dataclass(frozen=True)
class CompleteMap:
    """Per-cell classification produced by the brushfire sweep."""

    classes: np.ndarray  # int8 grid of CellClass values, shape (h, w)
    resolution: float
    alpha: float
    r_min: float

    def __post_init__(self):
        classes = np.asarray(self.classes, dtype=np.int8)
        object.__setattr__(self, "classes", classes)
        self.classes.setflags(write=False)

    @property
    def width_cells(self) -> int:
        return self.classes.shape[1]

    @property
    def height_cells(self) -> int:
        return self.classes.shape[0]


def buffer_width_cells(alpha: float, r_min: float, res: float) -> int:
    """Buffer band width in cells: ceil(alpha * r_min / res)."""
    if alpha < 2:
        raise ConstraintError(f"alpha must be >= 2, got {alpha}")
    if r_min <= 0 or res <= 0:
        raise ConstraintError("r_min and res must be > 0")
    return math.ceil(alpha * r_min / res)


# ---------------------------------------------------------------------------
# bitmap I/O
# ---------------------------------------------------------------------------

def _as_bytes(source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, (str, Path)):
        return Path(source).read_bytes()
    return source.read()


def _parse_pgm(data: bytes) -> np.ndarray:
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break

    def token() -> bytes:
        nonlocal pos
        skip_ws()
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MapParseError(f"unexpected end of PGM header at byte {start}")
        return data[start:pos]

    magic = token()
    if magic not in (b"P2", b"P5"):
        raise MapParseError(f"not a PGM file: magic {magic!r} at byte 0")
    try:
        width = int(token())
        height = int(token())
        maxval = int(token())
    except ValueError:
        raise MapParseError(f"non-numeric PGM header token near byte {pos}") from None
    if width <= 0 or height <= 0:
        raise MapParseError(f"invalid PGM dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise MapParseError(f"unsupported PGM maxval {maxval}")

    if magic == b"P5":
        pos += 1  # exactly one whitespace byte after maxval
        payload = data[pos : pos + width * height]
        if len(payload) != width * height:
            raise MapParseError(
                f"P5 payload truncated at byte {pos + len(payload)}: "
                f"expected {width * height} bytes"
            )
        values = np.frombuffer(payload, dtype=np.uint8)
    else:
        try:
            tokens = [int(token()) for _ in range(width * height)]
        except MapParseError:
            raise MapParseError("P2 payload truncated") from None
        except ValueError:
            raise MapParseError(f"non-numeric P2 sample near byte {pos}") from None
        values = np.array(tokens, dtype=np.int64)
    if (values > maxval).any():
        raise MapParseError("PGM sample exceeds declared maxval")
    occ = (values >= PGM_OBSTACLE_THRESHOLD).astype(np.uint8)
    return occ.reshape(height, width)


def _parse_csv_bitmap(data: bytes) -> np.ndarray:
    rows = []
    width = None
    for lineno, line in enumerate(data.decode("ascii").splitlines(), start=1):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(",")]
        row = []
        for f in fields:
            if f not in ("0", "1"):
                raise MapParseError(f"non-binary CSV value {f!r} on line {lineno}")
            row.append(int(f))
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MapParseError(
                f"CSV row length mismatch on line {lineno}: "
                f"expected {width}, got {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise MapParseError("empty CSV bitmap")
    return np.array(rows, dtype=np.uint8)


def load_bitmap(source, format: str, resolution: float) -> OccupancyBitmap:
    """Load an occupancy bitmap from PGM (P2/P5, sample >= 128 means
    obstacle) or CSV (rows of comma-separated 0/1)."""
    data = _as_bytes(source)
    fmt = format.upper()
    if fmt == "PGM":
        cells = _parse_pgm(data)
    elif fmt == "CSV":
        cells = _parse_csv_bitmap(data)
    else:
        raise ConstraintError(f"unknown bitmap format {format!r}")
    return OccupancyBitmap(cells, resolution)


def save_bitmap_pgm(bm: OccupancyBitmap, path) -> None:
    """Write a P5 PGM (obstacle cells as 255, free as 0)."""
    header = f"P5\n{bm.width_cells} {bm.height_cells}\n255\n".encode("ascii")
    payload = (bm.cells * 255).astype(np.uint8).tobytes()
    Path(path).write_bytes(header + payload)


# ---------------------------------------------------------------------------
# complete-map generation (brushfire)
# ---------------------------------------------------------------------------

def _brushfire_values(occ: np.ndarray, n_waves: int) -> np.ndarray:
    """Run n_waves synchronous brushfire waves from obstacle seeds (value 1)
    over free cells (value 0); returns the accumulated value grid."""
    m = occ.astype(np.float64)
    for _ in range(n_waves):
        vh = np.stack([shifted(m, di, dj, 0.0) for di, dj in NEIGHBORS_VH])
        dg = np.stack([shifted(m, di, dj, 0.0) for di, dj in NEIGHBORS_D])
        vh_masked = np.where(vh >= 1.0, vh, np.inf)
        dg_masked = np.where(dg >= 1.0, dg, np.inf)
        vh_min = vh_masked.min(axis=0)
        dg_min = dg_masked.min(axis=0)
        zero = m == 0.0
        new = m.copy()
        take_vh = zero & np.isfinite(vh_min)
        take_dg = zero & ~np.isfinite(vh_min) & np.isfinite(dg_min)
        new[take_vh] = vh_min[take_vh] + 1.0
        new[take_dg] = dg_min[take_dg] + DIAG_COST
        if not (take_vh.any() or take_dg.any()):
            break
        m = new
    return m


def generate_complete_map(
    bm: OccupancyBitmap, goals: GoalCells, alpha: float, r_min: float
) -> CompleteMap:
    """Classify cells into free/obstacle/buffer/goal.

    The buffer is the set of free cells reached by at most
    buffer_width_cells synchronous brushfire waves grown from the obstacle
    cells.  Raises AssumptionViolation if any goal cell lands in the buffer
    or on an obstacle.
    """
    goals.validate_bounds(bm.width_cells, bm.height_cells)
    width = buffer_width_cells(alpha, r_min, bm.resolution)
    values = _brushfire_values(bm.cells, width)

    classes = np.zeros_like(bm.cells, dtype=np.int8)
    classes[bm.cells == 1] = CellClass.OBSTACLE
    classes[values > 1.0] = CellClass.BUFFER

    for i, j in goals.cells:
        cls = CellClass(classes[j, i])
        if cls in (CellClass.OBSTACLE, CellClass.BUFFER):
            raise AssumptionViolation(
                f"goal cell {(i, j)} lies in the {cls.name.lower()} region"
            )
    for i, j in goals.cells:
        classes[j, i] = CellClass.GOAL
    return CompleteMap(classes, bm.resolution, float(alpha), float(r_min))


# ---------------------------------------------------------------------------
# complete-map I/O
# ---------------------------------------------------------------------------

def save_complete_map(m: CompleteMap, csv_path, sidecar_path=None) -> None:
    """Write the class grid as integer CSV plus a JSON sidecar with the
    resolution and sweep parameters."""
    csv_path = Path(csv_path)
    buf = io.StringIO()
    for row in m.classes:
        buf.write(",".join(str(int(v)) for v in row))
        buf.write("\n")
    csv_path.write_text(buf.getvalue())
    sidecar = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    sidecar.write_text(
        json.dumps(
            {"resolution": m.resolution, "alpha": m.alpha, "r_min": m.r_min},
            indent=2,
        )
        + "\n"
    )


def load_complete_map(csv_path, sidecar_path=None) -> CompleteMap:
    csv_path = Path(csv_path)
    rows = []
    valid = {int(c) for c in CellClass}
    for lineno, line in enumerate(csv_path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        row = [int(f) for f in line.split(",")]
        for v in row:
            if v not in valid:
                raise MapParseError(f"invalid class value {v} on line {lineno}")
        rows.append(row)
    sidecar = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    meta = json.loads(sidecar.read_text())
    return CompleteMap(
        np.array(rows, dtype=np.int8),
        float(meta["resolution"]),
        float(meta["alpha"]),
        float(meta["r_min"]),
    )


# ---------------------------------------------------------------------------
# path rasterization
# ---------------------------------------------------------------------------

def rasterize_path(waypoints_m: Sequence[tuple], res: float) -> GoalCells:
    """Turn a polyline of world waypoints (meters) into the ordered,
    8-adjacent chain of cells it traverses."""
    if len(waypoints_m) < 2:
        raise ConstraintError("a path needs at least 2 waypoints")
    cells: list[tuple[int, int]] = []
    for (x0, y0), (x1, y1) in zip(waypoints_m, waypoints_m[1:]):
        i0, j0 = int(math.floor(x0 / res)), int(math.floor(y0 / res))
        i1, j1 = int(math.floor(x1 / res)), int(math.floor(y1 / res))
        for c in _bresenham(i0, j0, i1, j1):
            if not cells or cells[-1] != c:
                cells.append(c)
    # drop later revisits so the chain stays simple
    seen = set()
    unique = []
    for c in cells:
        if c not in seen:
            seen.add(c)
            unique.append(c)
    return GoalCells(tuple(unique), GoalKind.PATH)


def _bresenham(i0: int, j0: int, i1: int, j1: int) -> Iterable[tuple]:
    di = abs(i1 - i0)
    dj = abs(j1 - j0)
    si = 1 if i1 >= i0 else -1
    sj = 1 if j1 >= j0 else -1
    err = di - dj
    i, j = i0, j0
    while True:
        yield (i, j)
        if i == i1 and j == j1:
            return
        e2 = 2 * err
        if e2 > -dj:
            err -= dj
            i += si
        if e2 < di:
            err += di
            j += sj
