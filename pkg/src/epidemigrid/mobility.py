"""Device placement and movement along shortest-path traces.

Each device walks a trace towards a destination on one of the eight map
boundaries (NW, N, NE, W, E, SW, S, SE). When it arrives it is given a new
destination, so devices never stop moving.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NoBoundaryRoad, NoDestination
from .mapgraph import MapGraph, trace_array
from .rng import Streams

SECTOR_NAMES = ("NW", "N", "NE", "W", "E", "SW", "S", "SE")
DEFAULT_BAND = 0.05


@dataclass(frozen=True)
class BoundarySectors:
    sectors: dict  # name -> sorted int64 array of vertex ids

    def __getitem__(self, name: str) -> np.ndarray:
        return self.sectors[name]

    def non_empty(self) -> list[str]:
        return [name for name in SECTOR_NAMES if len(self.sectors[name])]

    def all_vertices(self) -> np.ndarray:
        return np.unique(np.concatenate([self.sectors[n] for n in SECTOR_NAMES]))


@dataclass(frozen=True)
class DevicePosition:
    device_id: int
    vertex: int
    trace: np.ndarray
    trace_index: int = 0

    def __post_init__(self):
        if not 0 <= self.trace_index < len(self.trace):
            raise ValueError(f"trace_index {self.trace_index} outside trace of length {len(self.trace)}")

    @property
    def at_destination(self) -> bool:
        return self.trace_index == len(self.trace) - 1


def build_boundary_sectors(g: MapGraph, band_fraction: float = DEFAULT_BAND) -> BoundarySectors:
    if not 0 < band_fraction < 0.5:
        raise ValueError(f"band_fraction must lie in (0, 0.5), got {band_fraction}")
    rows = g.coords[:, 0]
    cols = g.coords[:, 1]
    north = rows < band_fraction * g.height
    south = rows >= (1 - band_fraction) * g.height
    west = cols < band_fraction * g.width
    east = cols >= (1 - band_fraction) * g.width
    mid_r = ~north & ~south
    mid_c = ~west & ~east
    masks = {
        "NW": north & west,
        "N": north & mid_c,
        "NE": north & east,
        "W": west & mid_r,
        "E": east & mid_r,
        "SW": south & west,
        "S": south & mid_c,
        "SE": south & east,
    }
    sectors = {name: np.flatnonzero(masks[name]).astype(np.int64) for name in SECTOR_NAMES}
    if not any(len(v) for v in sectors.values()):
        raise NoBoundaryRoad(f"no road vertex within a {band_fraction:g} boundary band")
    return BoundarySectors(sectors)


def choose_destination(current: int, sectors: BoundarySectors, rng: np.random.Generator) -> int:
    """Uniform sector among those offering a vertex other than ``current``, then a uniform vertex in it."""
    eligible = []
    for name in SECTOR_NAMES:
        verts = sectors.sectors[name]
        if len(verts) > 1 or (len(verts) == 1 and verts[0] != current):
            eligible.append(verts)
    if not eligible:
        raise NoDestination(f"no boundary vertex other than the current vertex {current}")
    verts = eligible[int(rng.integers(len(eligible)))]
    k = int(np.searchsorted(verts, current))
    if k < len(verts) and verts[k] == current:
        # skip the current vertex by drawing from the remaining len-1 slots
        j = int(rng.integers(len(verts) - 1))
        return int(verts[j + 1 if j >= k else j])
    return int(verts[int(rng.integers(len(verts)))])


def assign_destination(
    dev: DevicePosition, sectors: BoundarySectors, g: MapGraph, rng: np.random.Generator
) -> DevicePosition:
    dst = choose_destination(dev.vertex, sectors, rng)
    return replace(dev, trace=trace_array(g, dev.vertex, dst), trace_index=0)


def advance(
    dev: DevicePosition,
    sectors: BoundarySectors,
    g: MapGraph,
    rng: np.random.Generator,
    speed: int = 1,
    static: bool = False,
) -> DevicePosition:
    """Move ``speed`` edges along the trace, re-targeting whenever the trace is exhausted."""
    if static:
        return dev
    for _ in range(speed):
        if dev.at_destination:
            dev = assign_destination(dev, sectors, g, rng)
        k = dev.trace_index + 1
        dev = replace(dev, vertex=int(dev.trace[k]), trace_index=k)
    return dev


def spawn_devices(
    g: MapGraph,
    n_infected: int,
    n_susceptible: int,
    streams: Streams,
    sectors: BoundarySectors | None,
    positions=None,
) -> list[DevicePosition]:
    """Place devices uniformly at random on road vertices (or at explicit ``positions``).

    Devices ``0 .. n_infected-1`` are the initially infected ones; callers
    assign epidemic states by index. When ``sectors`` is None (static mode)
    each device gets a single-vertex trace.
    """
    total = n_infected + n_susceptible
    if total < 1:
        raise ValueError("at least one device is required")
    if positions is not None and len(positions) != total:
        raise ValueError(f"{len(positions)} positions given for {total} devices")
    devices = []
    for i in range(total):
        if positions is None:
            v = int(streams.placement(i).integers(g.vertex_count))
        else:
            v = g.vertex_at(*positions[i])
        dev = DevicePosition(i, v, np.array([v], dtype=np.int64), 0)
        if sectors is not None:
            dev = assign_destination(dev, sectors, g, streams.destination(i))
        devices.append(dev)
    return devices


class Fleet:
    """Mutable array view of all devices, used by the simulation loop."""

    def __init__(self, devices, g: MapGraph, sectors, streams: Streams, speed: int = 1, static: bool = False):
        if speed < 1:
            raise ValueError(f"speed must be >= 1, got {speed}")
        self.g = g
        self.sectors = sectors
        self.streams = streams
        self.speed = speed
        self.static = static
        self.traces = [d.trace for d in devices]
        self.index = np.array([d.trace_index for d in devices], dtype=np.int64)
        self.vertex = np.array([d.vertex for d in devices], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.vertex)

    def device(self, i: int) -> DevicePosition:
        return DevicePosition(i, int(self.vertex[i]), self.traces[i], int(self.index[i]))

    def positions(self) -> np.ndarray:
        """``(n, 2)`` array of current ``(row, col)`` cells."""
        return self.g.coords[self.vertex]

    def step(self) -> None:
        if self.static:
            return
        g, sectors, streams = self.g, self.sectors, self.streams
        traces, index, vertex = self.traces, self.index, self.vertex
        for i in range(len(vertex)):
            k = index[i]
            trace = traces[i]
            for _ in range(self.speed):
                if k == len(trace) - 1:
                    dst = choose_destination(int(trace[k]), sectors, streams.destination(i))
                    trace = traces[i] = trace_array(g, int(trace[k]), dst)
                    k = 0
                k += 1
            index[i] = k
            vertex[i] = trace[k]
