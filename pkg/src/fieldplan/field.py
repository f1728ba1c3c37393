"""Vector-field synthesis from a cost map.

Three stages:
  1. raw field: gradient descent on the cost map in free space, plus
     border-pointing vectors inside obstacles and the buffer band;
  2. transition: vectors near a path or near the buffer border are rotated
     toward the edge direction, by an amount that decays with distance and
     angular disagreement, to suppress inward flows;
  3. smoothing: Gaussian filtering of the component grids, then
     renormalization back to unit vectors.
"""

from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ConstraintError
from .gridmap import CellClass, CompleteMap, GoalCells, GoalKind
from .grids import NEIGHBORS_8, neighbor_angle, shifted
from .wavefront import CellMark, CostMap

TWO_PI = 2.0 * math.pi

# Smoothed vectors shorter than this keep their pre-smoothing angle: the
# components have effectively cancelled and the angle would be noise.
MAGNITUDE_GUARD = 1e-6

_NEIGHBOR_ANGLES = np.array([neighbor_angle(di, dj) for di, dj in NEIGHBORS_8])


def _canonical_angles(angles: np.ndarray) -> np.ndarray:
    out = np.mod(angles, TWO_PI)
    out[out >= TWO_PI] = 0.0
    return out


class EdgeKind(IntEnum):
    PATH = 0
    BORDER = 1


@dataclass(frozen=True)
class VectorField:
    """Unit-vector field stored as one orientation angle per cell.

    `unreachable` flags cells whose direction is a best-effort escape hint
    rather than a descent direction (no finite cost in reach).
    """

    angles: np.ndarray  # float64 (h, w), radians in [0, 2*pi)
    resolution: float
    unreachable: np.ndarray = None  # bool (h, w)
    stage: str = "raw"

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64)
        if not np.isfinite(angles).all():
            raise ConstraintError("vector field contains non-finite angles")
        unreachable = self.unreachable
        if unreachable is None:
            unreachable = np.zeros(angles.shape, dtype=bool)
        unreachable = np.asarray(unreachable, dtype=bool)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "unreachable", unreachable)
        self.angles.setflags(write=False)
        self.unreachable.setflags(write=False)

    @property
    def width_cells(self) -> int:
        return self.angles.shape[1]

    @property
    def height_cells(self) -> int:
        return self.angles.shape[0]

    def components(self):
        """(cos, sin) grids of the stored unit vectors."""
        return np.cos(self.angles), np.sin(self.angles)


@dataclass(frozen=True)
class TransitionParams:
    """Tuning of the two transition bands (path and border)."""

    mu_p: float = 0.5
    sigma_p: float = 1.5
    mu_b: float = 0.5
    sigma_b: float = 1.5
    r_min: float = 20.0

    def __post_init__(self):
        for name in ("mu_p", "mu_b"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConstraintError(f"{name} must be in (0, 1], got {v}")
        for name in ("sigma_p", "sigma_b"):
            v = getattr(self, name)
            if not 1.0 <= v <= 2.0:
                raise ConstraintError(f"{name} must be in [1, 2], got {v}")
        if self.r_min <= 0:
            raise ConstraintError("r_min must be > 0")

    def for_kind(self, kind: EdgeKind) -> tuple[float, float]:
        """(mu, sigma) pair selected by edge kind."""
        if kind == EdgeKind.PATH:
            return self.mu_p, self.sigma_p
        return self.mu_b, self.sigma_b


@dataclass(frozen=True)
class EdgeSet:
    """Cells that act as attractors for a transition band, with the
    direction the flow should take at each."""

    cells: tuple  # ((i, j), ...)
    angles: tuple  # radians, aligned with cells
    kind: EdgeKind

    def __post_init__(self):
        if len(self.cells) != len(self.angles):
            raise ConstraintError("edge cells and angles must align")


# ---------------------------------------------------------------------------
# raw field
# ---------------------------------------------------------------------------

def _nearest_targets(
    query_ij: np.ndarray, target_ij: np.ndarray, chunk: int = 1024
) -> np.ndarray:
    """Index into target_ij of the nearest target for each query cell.

    Works on integer cell offsets so distance ties are exact; ties resolve
    to the earliest target in the given order.
    """
    out = np.empty(len(query_ij), dtype=np.int64)
    tq = target_ij.astype(np.int64)
    for s in range(0, len(query_ij), chunk):
        q = query_ij[s : s + chunk].astype(np.int64)
        d2 = (q[:, None, 0] - tq[None, :, 0]) ** 2 + (
            q[:, None, 1] - tq[None, :, 1]
        ) ** 2
        out[s : s + chunk] = d2.argmin(axis=1)
    return out


def _cells_of_mask(mask: np.ndarray) -> np.ndarray:
    """(N, 2) array of (i, j) cell indices where mask holds, row-major."""
    jj, ii = np.nonzero(mask)
    return np.column_stack([ii, jj])


def border_cells_mask(m: CompleteMap) -> np.ndarray:
    """Free cells 8-adjacent to a buffer cell (the buffer's outer border)."""
    buffer = (m.classes == CellClass.BUFFER).astype(np.uint8)
    dilated = ndimage.binary_dilation(buffer, structure=np.ones((3, 3), dtype=bool))
    return dilated & (m.classes == CellClass.FREE)


def raw_field(cm: CostMap, m: CompleteMap, goals: GoalCells = None) -> VectorField:
    """Vector field by gradient descent on the cost map.

    Free and goal cells point at their minimum-cost 8-neighbor (fixed
    tie-break order E, NE, N, NW, W, SW, S, SE); obstacle and buffer cells
    point at the nearest border cell; unreachable cells point at the
    nearest costed cell and are flagged.  For a path mission pass `goals`
    so path cells get their tangent directions.
    """
    if cm.cost.shape != m.classes.shape:
        raise ConstraintError("cost map and complete map dimensions differ")
    h, w = cm.cost.shape
    classes = m.classes
    costed = cm.marks == CellMark.COSTED

    neigh_cost = np.stack(
        [
            np.where(
                _shift_bool(costed, di, dj),
                _shift_cost(cm.cost, di, dj),
                np.inf,
            )
            for di, dj in NEIGHBORS_8
        ]
    )
    best = neigh_cost.argmin(axis=0)
    best_finite = np.isfinite(neigh_cost.min(axis=0))

    angles = np.zeros((h, w), dtype=np.float64)
    unreachable = np.zeros((h, w), dtype=bool)

    descent = ((classes == CellClass.FREE) | (classes == CellClass.GOAL)) & costed
    angles[descent & best_finite] = _NEIGHBOR_ANGLES[best[descent & best_finite]]

    # isolated costed cells with no costed neighbor: flag, point at nearest cost
    isolated = descent & ~best_finite
    unreachable |= isolated

    unreached = cm.marks == CellMark.UNREACHABLE
    unreachable |= unreached
    escape = isolated | unreached
    if escape.any() and costed.any():
        esc_ij = _cells_of_mask(escape)
        tgt_ij = _cells_of_mask(costed & ~escape)
        if len(tgt_ij):
            idx = _nearest_targets(esc_ij, tgt_ij)
            d = tgt_ij[idx] - esc_ij
            angles[esc_ij[:, 1], esc_ij[:, 0]] = np.mod(
                np.arctan2(d[:, 1], d[:, 0]), TWO_PI
            )

    # obstacle/buffer cells point at the buffer's outer border
    solid = (classes == CellClass.OBSTACLE) | (classes == CellClass.BUFFER)
    if solid.any():
        border = border_cells_mask(m)
        if border.any():
            solid_ij = _cells_of_mask(solid)
            border_ij = _cells_of_mask(border)
            idx = _nearest_targets(solid_ij, border_ij)
            d = border_ij[idx] - solid_ij
            angles[solid_ij[:, 1], solid_ij[:, 0]] = np.mod(
                np.arctan2(d[:, 1], d[:, 0]), TWO_PI
            )
        else:
            warnings.warn("no border cells found; solid cells keep angle 0")

    f = VectorField(_canonical_angles(angles), cm.resolution, unreachable, "raw")
    if goals is not None and goals.kind == GoalKind.PATH:
        path = path_edges(goals, m)
        a = np.array(f.angles)
        for (i, j), ang in zip(path.cells, path.angles):
            a[j, i] = ang
        f = VectorField(a, cm.resolution, unreachable, "raw")
    return f


def _shift_cost(cost: np.ndarray, di: int, dj: int) -> np.ndarray:
    return shifted(cost, di, dj, np.inf)


def _shift_bool(mask: np.ndarray, di: int, dj: int) -> np.ndarray:
    return shifted(mask, di, dj, False)


# ---------------------------------------------------------------------------
# edges
# ---------------------------------------------------------------------------

def path_edges(goals: GoalCells, m: CompleteMap) -> EdgeSet:
    """Tangent direction at every path cell: toward the next cell's center;
    the final cell reuses the preceding direction."""
    if goals.kind != GoalKind.PATH or len(goals.cells) < 2:
        raise ConstraintError("path edges need a path goal with >= 2 cells")
    goals.validate_bounds(m.width_cells, m.height_cells)
    angles = []
    cells = goals.cells
    for (i0, j0), (i1, j1) in zip(cells, cells[1:]):
        angles.append(math.atan2(j1 - j0, i1 - i0) % TWO_PI)
    angles.append(angles[-1])
    return EdgeSet(cells, tuple(angles), EdgeKind.PATH)


def border_edges(m: CompleteMap, f_raw: VectorField) -> EdgeSet:
    """Buffer outer-border cells, each carrying the raw-field direction
    already present there."""
    border = border_cells_mask(m)
    cells_ij = _cells_of_mask(border)
    cells = tuple((int(i), int(j)) for i, j in cells_ij)
    angles = tuple(float(f_raw.angles[j, i]) for i, j in cells)
    return EdgeSet(cells, angles, EdgeKind.BORDER)


# ---------------------------------------------------------------------------
# transition
# ---------------------------------------------------------------------------

def apply_transition(
    f: VectorField, edges: EdgeSet, params: TransitionParams
) -> VectorField:
    """Rotate vectors inside the transition band toward the nearest edge's
    direction.

    A cell at distance d <= sigma*r_min from its nearest edge rotates by
    (1 - a) of its angular disagreement with the edge, toward the edge,
    where a = mu * (d / (sigma*r_min)) * (disagreement / pi).  Cells
    beyond the band are returned bit-identical.
    """
    if not edges.cells:
        warnings.warn("empty edge set; transition is the identity")
        return VectorField(f.angles, f.resolution, f.unreachable, "transition")

    mu, sigma = params.for_kind(edges.kind)
    band = sigma * params.r_min
    h, w = f.angles.shape

    edge_ij = np.array(edges.cells, dtype=np.int64)
    edge_angles = np.array(edges.angles, dtype=np.float64)
    # tie-break by lowest row-major cell index regardless of edge ordering
    order = np.argsort(edge_ij[:, 1] * w + edge_ij[:, 0], kind="stable")
    edge_ij = edge_ij[order]
    edge_angles = edge_angles[order]

    jj, ii = np.mgrid[0:h, 0:w]
    all_ij = np.column_stack([ii.ravel(), jj.ravel()])
    idx = _nearest_targets(all_ij, edge_ij)
    d = edge_ij[idx] - all_ij
    dist = np.sqrt((d * d).sum(axis=1).astype(np.float64)) * f.resolution

    theta_c = f.angles.ravel()
    theta_e = edge_angles[idx]
    diff = np.mod(theta_e - theta_c, TWO_PI)
    diff[diff > math.pi] -= TWO_PI  # signed shortest difference, (-pi, pi]
    dtheta = np.abs(diff)

    a = mu * (dist / band) * (dtheta / math.pi)
    rot = (1.0 - a) * diff

    in_band = dist <= band
    new = theta_c.copy()
    new[in_band] = np.mod(theta_c[in_band] + rot[in_band], TWO_PI)
    new = new.reshape(h, w)
    new[new >= TWO_PI] = 0.0
    return VectorField(new, f.resolution, f.unreachable, "transition")


# ---------------------------------------------------------------------------
# smoothing
# ---------------------------------------------------------------------------

def gaussian_kernel(sigma: float) -> np.ndarray:
    """Square Gaussian kernel of side 2*ceil(2*sigma) + 1, normalized to
    sum exactly 1."""
    if sigma <= 0:
        raise ConstraintError(f"sigma must be > 0, got {sigma}")
    half = math.ceil(2.0 * sigma)
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    xx, yy = np.meshgrid(offsets, offsets)
    g = np.exp(-(xx**2 + yy**2) / (2.0 * sigma**2)) / (2.0 * math.pi * sigma**2)
    return g / g.sum()


def smooth_components(cx: np.ndarray, cy: np.ndarray, sigma: float):
    """Convolve both component grids with the Gaussian kernel using
    replicate-edge padding; returns the unnormalized smoothed grids."""
    k = gaussian_kernel(sigma)
    return (
        ndimage.convolve(cx, k, mode="nearest"),
        ndimage.convolve(cy, k, mode="nearest"),
    )


def smooth_field(f: VectorField, sigma: float) -> VectorField:
    """Gaussian-smooth the field and renormalize to unit vectors.

    Cells whose smoothed vector nearly cancels (magnitude below the guard)
    keep their pre-smoothing angle.
    """
    cx, cy = f.components()
    sx, sy = smooth_components(cx, cy, sigma)
    mag = np.hypot(sx, sy)
    angles = np.mod(np.arctan2(sy, sx), TWO_PI)
    angles = np.where(mag < MAGNITUDE_GUARD, f.angles, angles)
    angles[angles >= TWO_PI] = 0.0
    return VectorField(angles, f.resolution, f.unreachable, "smoothed")


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def save_field(f: VectorField, csv_path, sidecar_path=None, **meta) -> None:
    """Angles as CSV (full precision) plus a JSON sidecar with resolution,
    stage, flagged cells, and any extra metadata."""
    csv_path = Path(csv_path)
    buf = io.StringIO()
    for row in f.angles:
        buf.write(",".join(repr(float(v)) for v in row))
        buf.write("\n")
    csv_path.write_text(buf.getvalue())
    flagged = [[int(i), int(j)] for i, j in _cells_of_mask(f.unreachable)]
    sidecar = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    sidecar.write_text(
        json.dumps(
            {
                "resolution": f.resolution,
                "stage": f.stage,
                "unreachable_cells": flagged,
                **meta,
            },
            indent=2,
        )
        + "\n"
    )


def load_field(csv_path, sidecar_path=None) -> VectorField:
    csv_path = Path(csv_path)
    rows = [
        [float(v) for v in line.split(",")]
        for line in csv_path.read_text().splitlines()
        if line.strip()
    ]
    sidecar = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
    meta = json.loads(sidecar.read_text())
    angles = np.array(rows, dtype=np.float64)
    unreachable = np.zeros(angles.shape, dtype=bool)
    for i, j in meta.get("unreachable_cells", []):
        unreachable[j, i] = True
    return VectorField(angles, float(meta["resolution"]), unreachable, meta["stage"])
