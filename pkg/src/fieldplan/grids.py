"""Shared grid conventions and low-level neighbor machinery.

Cell (i, j) covers the world box [i*res, (i+1)*res) x [j*res, (j+1)*res);
its representative point is the center ((i+0.5)*res, (j+0.5)*res).  Arrays
are stored row-major with shape (height_cells, width_cells) and indexed
``grid[j, i]``, so row j sweeps the y axis bottom-up.
"""

from __future__ import annotations

import math

import numpy as np

# Fixed 8-neighbor order used for deterministic tie-breaking: E, NE, N, NW,
# W, SW, S, SE as (di, dj) offsets.
NEIGHBORS_8 = (
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
)

NEIGHBORS_VH = ((1, 0), (0, 1), (-1, 0), (0, -1))
NEIGHBORS_D = ((1, 1), (-1, 1), (-1, -1), (1, -1))

# Diagonal step cost is the literal constant used by the grid algorithms,
# not sqrt(2).
DIAG_COST = 1.41


def neighbor_angle(di: int, dj: int) -> float:
    """Direction angle of the (di, dj) offset in [0, 2*pi)."""
    return math.atan2(dj, di) % (2.0 * math.pi)


def shifted(grid: np.ndarray, di: int, dj: int, fill) -> np.ndarray:
    """Grid of neighbor values: out[j, i] = grid[j + dj, i + di], with
    out-of-bounds neighbors replaced by `fill`."""
    h, w = grid.shape
    out = np.full_like(grid, fill)
    src_i = slice(max(di, 0), w + min(di, 0))
    src_j = slice(max(dj, 0), h + min(dj, 0))
    dst_i = slice(max(-di, 0), w + min(-di, 0))
    dst_j = slice(max(-dj, 0), h + min(-dj, 0))
    if src_i.start < src_i.stop and src_j.start < src_j.stop:
        out[dst_j, dst_i] = grid[src_j, src_i]
    return out


def cell_centers(width_cells: int, height_cells: int, res: float):
    """Meshgrids (x, y) of cell-center coordinates in meters, shape (h, w)."""
    xs = (np.arange(width_cells) + 0.5) * res
    ys = (np.arange(height_cells) + 0.5) * res
    return np.meshgrid(xs, ys)


def cell_of(x: float, y: float, res: float) -> tuple[int, int]:
    """Cell (i, j) containing the world point (x, y)."""
    return int(math.floor(x / res)), int(math.floor(y / res))
