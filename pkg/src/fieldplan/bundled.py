"""Access to the bundled example map and its mission definitions."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path


def bundled_map_path(name: str = "cluttered_600.pgm") -> Path:
    """Filesystem path of a bundled map file."""
    return Path(resources.files("fieldplan") / "maps" / name)


def bundled_missions(name: str = "cluttered_600_missions.json") -> dict:
    """Mission definitions (start, goal, reference path) for the bundled
    cluttered map."""
    return json.loads(bundled_map_path(name).read_text())
