import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epidemigrid.errors import NoBoundaryRoad, NoDestination
from epidemigrid.mobility import (
    SECTOR_NAMES,
    BoundarySectors,
    DevicePosition,
    Fleet,
    advance,
    assign_destination,
    build_boundary_sectors,
    spawn_devices,
)
from epidemigrid.rng import Streams
from oracles import make_graph


def cells_of(g, verts):
    return {tuple(int(x) for x in g.coords[v]) for v in verts}


def single_sector(vertex):
    sectors = {name: np.empty(0, np.int64) for name in SECTOR_NAMES}
    sectors["N"] = np.array([vertex], np.int64)
    return BoundarySectors(sectors)


class TestSectors:
    def test_ten_by_ten(self):
        g = make_graph(np.zeros((10, 10)))
        s = build_boundary_sectors(g, 0.1)
        assert cells_of(g, s["NW"]) == {(0, 0)}
        assert cells_of(g, s["N"]) == {(0, c) for c in range(1, 9)}
        assert cells_of(g, s["SE"]) == {(9, 9)}
        assert cells_of(g, s["W"]) == {(r, 0) for r in range(1, 9)}

    def test_central_roads_only(self):
        cells = np.full((10, 10), 255)
        cells[4:6, 4:6] = 0
        with pytest.raises(NoBoundaryRoad):
            build_boundary_sectors(make_graph(cells), 0.1)

    def test_wide_band_covers_everything(self):
        # an odd side leaves no middle row or column outside both bands
        g = make_graph(np.zeros((11, 11)))
        s = build_boundary_sectors(g, 0.5 - 1e-6)
        assert len(s.all_vertices()) == g.vertex_count

    @pytest.mark.parametrize("band", [0.0, 0.5, -0.1])
    def test_band_range(self, band):
        with pytest.raises(ValueError):
            build_boundary_sectors(make_graph(np.zeros((4, 4))), band)


class TestDestinations:
    def test_interior_device_goes_to_boundary(self):
        g = make_graph(np.zeros((20, 20)))
        s = build_boundary_sectors(g, 0.1)
        boundary = set(s.all_vertices().tolist())
        start = g.vertex_at(10, 10)
        rng = np.random.default_rng(0)
        for _ in range(50):
            dev = assign_destination(DevicePosition(0, start, np.array([start])), s, g, rng)
            assert dev.trace[0] == start
            assert int(dev.trace[-1]) in boundary
            assert dev.trace_index == 0

    def test_forced_choice(self):
        g = make_graph(np.zeros((3, 3)))
        dev = assign_destination(DevicePosition(0, 4, np.array([4])), single_sector(0), g, np.random.default_rng(1))
        assert dev.trace[-1] == 0

    def test_no_destination(self):
        g = make_graph(np.zeros((3, 3)))
        with pytest.raises(NoDestination):
            assign_destination(DevicePosition(0, 0, np.array([0])), single_sector(0), g, np.random.default_rng(1))

    def test_never_current_vertex(self):
        g = make_graph(np.zeros((6, 6)))
        s = build_boundary_sectors(g, 0.2)
        rng = np.random.default_rng(3)
        start = g.vertex_at(0, 0)
        for _ in range(100):
            dev = assign_destination(DevicePosition(0, start, np.array([start])), s, g, rng)
            assert dev.trace[-1] != start


class TestAdvance:
    def setup_method(self):
        self.g = make_graph(np.zeros((12, 12)))
        self.s = build_boundary_sectors(self.g, 0.1)

    def test_mid_trace(self):
        trace = np.array([0, 1, 2, 3])
        dev = advance(DevicePosition(0, 1, trace, 1), self.s, self.g, np.random.default_rng(0))
        assert (dev.trace_index, dev.vertex) == (2, 2)

    def test_reassign_at_end(self):
        trace = np.array([0, 1, 2])
        dev = advance(DevicePosition(0, 2, trace, 2), self.s, self.g, np.random.default_rng(0))
        assert dev.trace_index == 1
        assert dev.trace[0] == 2
        assert dev.vertex == dev.trace[1]

    def test_static(self):
        d0 = DevicePosition(0, 1, np.array([0, 1, 2]), 1)
        assert advance(d0, self.s, self.g, np.random.default_rng(0), static=True) is d0

    def test_speed_two(self):
        dev = advance(DevicePosition(0, 0, np.array([0, 1, 2, 3]), 0), self.s, self.g, np.random.default_rng(0), speed=2)
        assert (dev.trace_index, dev.vertex) == (2, 2)


class TestSpawn:
    def test_counts_and_determinism(self):
        g = make_graph(np.zeros((30, 30)))
        s = build_boundary_sectors(g, 0.05)
        a = spawn_devices(g, 20, 80, Streams(7), s)
        b = spawn_devices(g, 20, 80, Streams(7), s)
        assert len(a) == 100
        for x, y in zip(a, b):
            assert x.vertex == y.vertex
            assert np.array_equal(x.trace, y.trace)
        c = spawn_devices(g, 20, 80, Streams(8), s)
        assert [d.vertex for d in a] != [d.vertex for d in c]

    def test_placement_roughly_uniform(self):
        g = make_graph(np.zeros((4, 4)))
        devs = spawn_devices(g, 0, 4000, Streams(1), None)
        counts = np.bincount([d.vertex for d in devs], minlength=16)
        # 250 expected per cell, binomial sd ~15.3
        assert np.all(np.abs(counts - 250) < 5 * 15.3)

    def test_single_device(self):
        g = make_graph(np.zeros((5, 5)))
        devs = spawn_devices(g, 0, 1, Streams(1), build_boundary_sectors(g, 0.2))
        assert len(devs) == 1

    def test_explicit_positions(self):
        g = make_graph(np.zeros((1, 5)))
        devs = spawn_devices(g, 1, 1, Streams(0), None, positions=[(0, 2), (0, 3)])
        assert [d.vertex for d in devs] == [2, 3]


@given(st.integers(0, 10_000), st.integers(1, 3))
@settings(max_examples=15, deadline=None)
def test_fleet_walks_road_edges(seed, speed):
    cells = np.zeros((25, 25))
    cells[5:10, 5:20] = 255
    cells[14:20, 3:12] = 255
    g = make_graph(cells)
    s = build_boundary_sectors(g, 0.1)
    streams = Streams(seed)
    fleet = Fleet(spawn_devices(g, 3, 7, streams, s), g, s, streams, speed=speed)
    prev = fleet.positions().copy()
    last_seen = np.zeros(len(fleet), dtype=int)
    for step in range(1, 150):
        fleet.step()
        pos = fleet.positions()
        assert (cells[pos[:, 0], pos[:, 1]] == 0).all()
        hops = np.abs(pos - prev).max(axis=1)
        assert (hops <= speed).all()
        moved = (pos != prev).any(axis=1)
        last_seen[moved] = step
        prev = pos.copy()
    # every device kept moving
    assert (last_seen > 100).all()


def test_fleet_same_seed_same_traces():
    g = make_graph(np.zeros((20, 20)))
    s = build_boundary_sectors(g, 0.05)

    def run(seed):
        st_ = Streams(seed)
        fleet = Fleet(spawn_devices(g, 2, 3, st_, s), g, s, st_)
        out = []
        for _ in range(80):
            fleet.step()
            out.append(fleet.vertex.copy())
        return np.array(out)

    assert np.array_equal(run(4), run(4))
    assert not np.array_equal(run(4), run(5))
