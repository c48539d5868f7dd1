"""Synthetic street-grid city maps for desk-scale experiments and tests."""

from __future__ import annotations

import numpy as np

from .mapgrid import OBSTACLE, ROAD

# Desk-scale setup: make_city(200, 200, seed=DESK_CITY_SEED) with 100-200 devices.
# The proximity radius was calibrated once on this map and is fixed from here on.
DESK_CITY_SEED = 0
DESK_RADIUS = 2.5
DESK_RESET_ON_DISCONNECT = False


def _spans(rng, extent, block, street):
    spans = []
    pos = int(rng.integers(street[0], street[1] + 1))
    while pos < extent:
        size = int(rng.integers(block[0], block[1] + 1))
        spans.append((pos, min(pos + size, extent)))
        pos += size + int(rng.integers(street[0], street[1] + 1))
    return spans


def make_city(
    height: int = 200,
    width: int = 200,
    block: tuple[int, int] = (8, 16),
    street: tuple[int, int] = (4, 8),
    plaza_fraction: float = 0.1,
    seed: int = 0,
) -> np.ndarray:
    """Return a ``(height, width)`` uint8 raster of buildings (255) separated by streets (0).

    Block and street widths are drawn uniformly from the given inclusive
    ranges, with one column layout shared by every block row so avenues run
    straight. A ``plaza_fraction`` of blocks is left open.
    """
    rng = np.random.default_rng(seed)
    rows = _spans(rng, height, block, street)
    cols = _spans(rng, width, block, street)
    raster = np.full((height, width), ROAD, dtype=np.uint8)
    for r0, r1 in rows:
        for c0, c1 in cols:
            if rng.random() >= plaza_fraction:
                raster[r0:r1, c0:c1] = OBSTACLE
    return raster


def street_attraction(raster: np.ndarray, hot_every: int = 3, warm_every: int = 0) -> np.ndarray:
    """Attraction levels for a street-grid raster.

    Full-length streets (rows or columns with no building) are numbered in
    order; every ``hot_every``-th one becomes a hot spot (10) and, if
    ``warm_every`` is set, every ``warm_every``-th remaining one warm (5).
    All other road cells are cold (1). Obstacle cells get 0.
    """
    road = raster == ROAD
    weights = np.where(road, 1, 0).astype(np.uint8)

    def streets(full):
        groups, start = [], None
        for i, f in enumerate(list(full) + [False]):
            if f and start is None:
                start = i
            elif not f and start is not None:
                groups.append((start, i))
                start = None
        return groups

    for axis, full in ((0, road.all(axis=1)), (1, road.all(axis=0))):
        for k, (a, b) in enumerate(streets(full)):
            level = 0
            if hot_every and k % hot_every == hot_every // 2:
                level = 10
            elif warm_every and k % warm_every == 0:
                level = 5
            if level:
                sl = (slice(a, b), slice(None)) if axis == 0 else (slice(None), slice(a, b))
                weights[sl] = np.maximum(weights[sl], level)
    return np.where(road, weights, 0).astype(np.uint8)
