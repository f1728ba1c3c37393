"""Regenerate the bundled cluttered map and its mission definitions.

The map is a 600 m x 600 m workspace at 8 m resolution (75 x 75 cells)
with a border wall and seven irregular obstacle blobs, placed so that the
single-goal route and the reference path keep clear of the buffer band
(alpha = 2, r_min = 20 m).  Deterministic: seeded RNG, fixed geometry.
"""

import json
import math
from pathlib import Path

import numpy as np

from fieldplan.gridmap import OccupancyBitmap, save_bitmap_pgm

SIZE = 75
RES = 8.0
SEED = 9
N_BLOBS = 7

START = [60.0, 100.0, 0.6]
GOAL = [540.0, 420.0]
PATH_WP = [(80, 160), (300, 160), (300, 360), (120, 360), (120, 520), (480, 520)]


def _seg_dist(p, a, b):
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0 if L2 == 0 else max(0, min(1, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def make_map():
    rng = np.random.default_rng(SEED)
    occ = np.zeros((SIZE, SIZE), np.uint8)
    occ[0, :] = 1
    occ[-1, :] = 1
    occ[:, 0] = 1
    occ[:, -1] = 1
    route = [(START[0], START[1]), tuple(GOAL)]
    blobs = []
    tries = 0
    while len(blobs) < N_BLOBS and tries < 6000:
        tries += 1
        cx, cy = rng.uniform(80, 520, 2)
        base = rng.uniform(16, 32)
        margin = base + 48 + 8  # blob radius + buffer width + clearance
        if math.hypot(cx - START[0], cy - START[1]) < margin + 40:
            continue
        if math.hypot(cx - GOAL[0], cy - GOAL[1]) < margin + 40:
            continue
        if _seg_dist((cx, cy), *route) < margin - 8:
            continue
        if any(
            _seg_dist((cx, cy), a, b) < margin
            for a, b in zip(PATH_WP, PATH_WP[1:])
        ):
            continue
        if any(
            math.hypot(cx - bx, cy - by) < base + bb + 72
            for bx, by, bb, _ in blobs
        ):
            continue
        k = int(rng.integers(2, 5))
        ph = rng.uniform(0, 2 * math.pi)
        amp = rng.uniform(0.25, 0.45)
        blobs.append((cx, cy, base, (k, ph, amp)))
    ii, jj = np.meshgrid(np.arange(SIZE), np.arange(SIZE))
    X = (ii + 0.5) * RES
    Y = (jj + 0.5) * RES
    for cx, cy, base, (k, ph, amp) in blobs:
        th = np.arctan2(Y - cy, X - cx)
        r = base * (1 + amp * np.sin(k * th + ph))
        occ[np.hypot(X - cx, Y - cy) <= r] = 1
    return occ


def main():
    out = Path(__file__).resolve().parents[1] / "src" / "fieldplan" / "maps"
    out.mkdir(parents=True, exist_ok=True)
    occ = make_map()
    save_bitmap_pgm(OccupancyBitmap(occ, RES), out / "cluttered_600.pgm")
    missions = {
        "resolution": RES,
        "single_goal": {"start": START, "goal": GOAL, "beta": 2.0},
        "path": {
            "start": [PATH_WP[0][0], PATH_WP[0][1], 0.0],
            "waypoint_cells": [[int(x / RES), int(y / RES)] for x, y in PATH_WP],
            "deltas": [24.0, 24.0, 3.2],
        },
    }
    (out / "cluttered_600_missions.json").write_text(
        json.dumps(missions, indent=2) + "\n"
    )
    print(f"wrote {out / 'cluttered_600.pgm'} ({occ.sum()} obstacle cells)")


if __name__ == "__main__":
    main()
