import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fieldplan.gridmap import GoalCells, GoalKind, OccupancyBitmap


@pytest.fixture
def empty_bitmap():
    """10 x 10 all-free map at 8 m resolution."""
    return OccupancyBitmap(np.zeros((10, 10), np.uint8), 8.0)


@pytest.fixture
def center_goal():
    return GoalCells(((5, 5),), GoalKind.SINGLE_GOAL)


def random_bitmap(rng, size, density, res=8.0):
    cells = (rng.random((size, size)) < density).astype(np.uint8)
    return OccupancyBitmap(cells, res)
