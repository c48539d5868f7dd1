import numpy as np
import pytest

from epidemigrid.citygen import make_city
from epidemigrid.engine import build_world
from epidemigrid.mapgrid import AttractionGrid, OccupancyGrid, load_attraction, write_pgm


def world_from_cells(cells, weights=None, band=0.05, static=False):
    cells = np.asarray(cells, dtype=np.uint8)
    h, w = cells.shape
    grid = OccupancyGrid(w, h, cells)
    if weights is None:
        att = load_attraction(None, grid)
    else:
        att = AttractionGrid(w, h, np.where(cells == 0, weights, 0).astype(np.int64))
    return build_world(grid, att, band, static)


@pytest.fixture(scope="session")
def small_city():
    return make_city(48, 48, block=(4, 8), street=(2, 4), seed=5)


@pytest.fixture(scope="session")
def small_world(small_city):
    return world_from_cells(small_city, band=0.1)


@pytest.fixture(scope="session")
def corridor_world():
    return world_from_cells(np.zeros((1, 5)), static=True)


@pytest.fixture
def city_file(tmp_path, small_city):
    path = tmp_path / "city.pgm"
    write_pgm(path, small_city)
    return path
