"""Seeded simulation loop, time-series recording and outcome classification.

Each step runs five phases in a fixed order: move every device, build the
infected/susceptible contact graph, deliver packets (marking new
infections), repair devices whose response time has elapsed, and record the
population metrics. A device infected at step k transmits from step k + 1.
"""

from __future__ import annotations

import enum
import functools
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import epidemic as ep
from .errors import ConfigInvalid
from .mapgraph import MapGraph, build_map_graph
from .mapgrid import binarize, largest_component, load_attraction, load_gray_image
from .mobility import DEFAULT_BAND, BoundarySectors, Fleet, build_boundary_sectors, spawn_devices
from .rng import Streams

CSV_HEADER = "step,susceptible,infected,repaired,cover_i,cover_s,rate_is,rate_si,density,cumulative_infected"


@dataclass(frozen=True)
class SimulationConfig:
    map_path: str | None = None
    attraction_path: str | None = None
    threshold: int = 128
    invert: bool = False
    n_infected: int = 20
    n_susceptible: int = 80
    packets: int = 3
    rt_min: int = 1
    rt_max: int = 5
    radius: float = 3.0
    speed: int = 1
    band_fraction: float = DEFAULT_BAND
    max_steps: int = 5000
    seed: int = 0
    reset_on_disconnect: bool = False
    static_devices: bool = False
    # explicit (row, col) start cells, one per device; uniform placement when None
    positions: tuple | None = None

    def validate(self) -> None:
        problems = []
        if self.n_infected < 0 or self.n_susceptible < 0:
            problems.append("device counts must be >= 0")
        if self.n_infected + self.n_susceptible < 1:
            problems.append("at least one device is required")
        if self.packets < 1:
            problems.append("packets must be >= 1")
        if not 1 <= self.rt_min <= self.rt_max:
            problems.append(f"need 1 <= rt_min <= rt_max, got {self.rt_min}:{self.rt_max}")
        if not self.radius > 0:
            problems.append("radius must be > 0")
        if self.speed < 1:
            problems.append("speed must be >= 1")
        if not 0 < self.band_fraction < 0.5:
            problems.append("band fraction must lie in (0, 0.5)")
        if self.max_steps < 1:
            problems.append("max_steps must be >= 1")
        if self.seed < 0:
            problems.append("seed must be >= 0")
        if not 0 <= self.threshold <= 255:
            problems.append("threshold must lie in [0, 255]")
        if self.positions is not None and len(self.positions) != self.n_infected + self.n_susceptible:
            problems.append("positions must list one cell per device")
        if problems:
            raise ConfigInvalid("; ".join(problems))

    @property
    def total(self) -> int:
        return self.n_infected + self.n_susceptible

    def describe(self) -> str:
        return (
            f"seed={self.seed} infected={self.n_infected} susceptible={self.n_susceptible} "
            f"packets={self.packets} rt={self.rt_min}:{self.rt_max} radius={self.radius:g} "
            f"speed={self.speed} band={self.band_fraction:g} max_steps={self.max_steps} "
            f"reset_on_disconnect={int(self.reset_on_disconnect)} static={int(self.static_devices)}"
        )


@dataclass(frozen=True, eq=False)
class World:
    """Immutable map data shared by every run on the same city."""

    graph: MapGraph
    sectors: BoundarySectors | None


def build_world(grid, attraction, band_fraction: float = DEFAULT_BAND, static: bool = False) -> World:
    graph = build_map_graph(grid, attraction, largest_component(grid))
    sectors = None if static else build_boundary_sectors(graph, band_fraction)
    return World(graph, sectors)


@functools.lru_cache(maxsize=8)
def _cached_world(map_path, attraction_path, threshold, invert, band_fraction, static, stamp):
    grid = binarize(load_gray_image(map_path), threshold, invert)
    attraction = load_attraction(attraction_path, grid)
    return build_world(grid, attraction, band_fraction, static)


def load_world(cfg: SimulationConfig) -> World:
    if cfg.map_path is None:
        raise ConfigInvalid("a map file is required")
    stamp = tuple(
        os.stat(p).st_mtime_ns if p is not None else None for p in (cfg.map_path, cfg.attraction_path)
    )
    return _cached_world(
        os.fspath(cfg.map_path),
        None if cfg.attraction_path is None else os.fspath(cfg.attraction_path),
        cfg.threshold,
        cfg.invert,
        cfg.band_fraction,
        cfg.static_devices,
        stamp,
    )


class TimeSeries:
    """Per-step population counts and derived metrics; row 0 is the initial state."""

    columns = tuple(CSV_HEADER.split(","))

    def __init__(self):
        self._rows: list[tuple] = []

    def record(self, step: int, counts: ep.PopulationCounts, map_vertices: int) -> None:
        if step != len(self._rows):
            raise ValueError(f"expected step {len(self._rows)}, got {step}")
        self._rows.append(
            (
                step,
                counts.susceptible,
                counts.infected,
                counts.repaired,
                ep.state_cover(counts, "I"),
                ep.state_cover(counts, "S"),
                ep.state_rate(counts.infected, counts.susceptible),
                ep.state_rate(counts.susceptible, counts.infected),
                ep.network_density(counts, map_vertices),
                counts.cumulative_infected,
            )
        )

    def __len__(self) -> int:
        return len(self._rows)

    def __getitem__(self, step: int) -> dict:
        return dict(zip(self.columns, self._rows[step]))

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([row[k] for row in self._rows])

    @property
    def steps(self) -> np.ndarray:
        return self.column("step")

    @property
    def susceptible(self) -> np.ndarray:
        return self.column("susceptible")

    @property
    def infected(self) -> np.ndarray:
        return self.column("infected")

    @property
    def repaired(self) -> np.ndarray:
        return self.column("repaired")

    @property
    def cumulative_infected(self) -> np.ndarray:
        return self.column("cumulative_infected")

    def to_csv_text(self, comment: str | None = None) -> str:
        lines = []
        if comment:
            lines.append(f"# {comment}")
        lines.append(CSV_HEADER)
        for step, s, i, rp, ci, cs, ris, rsi, d, cum in self._rows:
            lines.append(f"{step},{s},{i},{rp},{ci:.6f},{cs:.6f},{ris:.6f},{rsi:.6f},{d:.6f},{cum}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path, comment: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text(comment))

    @classmethod
    def from_counts(cls, rows, map_vertices: int = 1) -> "TimeSeries":
        """Build a series from ``(S, I, Rp, cumulative)`` tuples (mainly for tests)."""
        ts = cls()
        for step, (s, i, rp, cum) in enumerate(rows):
            ts.record(step, ep.PopulationCounts(s, i, rp, cum), map_vertices)
        return ts


class OutcomeKind(str, enum.Enum):
    PREVENTED = "Prevented"
    PANDEMIC = "Pandemic"
    CENSORED = "Censored"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    extinction_step: int | None
    pandemic_step: int | None
    peak_infected: int
    peak_step: int

    def summary(self) -> str:
        ext = "-" if self.extinction_step is None else self.extinction_step
        pan = "-" if self.pandemic_step is None else self.pandemic_step
        return (
            f"outcome={self.kind.value} peak_infected={self.peak_infected} peak_step={self.peak_step} "
            f"extinction_step={ext} pandemic_step={pan}"
        )


def classify_outcome(ts: TimeSeries, total: int, max_steps: int | None = None) -> Outcome:
    if len(ts) == 0:
        raise ValueError("empty time series")
    infected = ts.infected
    cumulative = ts.cumulative_infected
    if max_steps is not None:
        infected = infected[: max_steps + 1]
        cumulative = cumulative[: max_steps + 1]
    extinct = np.flatnonzero(infected == 0)
    full = np.flatnonzero(cumulative >= total)
    extinction_step = int(extinct[0]) if len(extinct) else None
    pandemic_step = int(full[0]) if len(full) else None
    if pandemic_step is not None:
        kind = OutcomeKind.PANDEMIC
    elif extinction_step is not None:
        kind = OutcomeKind.PREVENTED
    else:
        kind = OutcomeKind.CENSORED
    peak_step = int(np.argmax(infected))
    return Outcome(kind, extinction_step, pandemic_step, int(infected[peak_step]), peak_step)


@dataclass
class SimulationResult:
    timeseries: TimeSeries
    outcome: Outcome
    config: SimulationConfig
    events: list = field(default_factory=list)  # (step, "infected" | "repaired", device id)

    def __iter__(self):
        yield self.timeseries
        yield self.outcome

    def csv_comment(self) -> str:
        return f"epidemigrid {self.config.describe()}"

    def write_csv(self, path) -> None:
        self.timeseries.write_csv(path, self.csv_comment())

    def event_log_text(self) -> str:
        return "step,event,device_id\n" + "".join(f"{s},{e},{d}\n" for s, e, d in self.events)


def simulate(cfg: SimulationConfig, world: World | None = None, trace_log=None) -> SimulationResult:
    """Run one simulation to extinction or ``max_steps``.

    ``trace_log``, if given, is a writable text stream that receives one
    ``step,device_id,row,col`` line per device per step.
    """
    cfg.validate()
    if world is None:
        world = load_world(cfg)
    graph = world.graph
    sectors = None if cfg.static_devices else world.sectors
    if sectors is None and not cfg.static_devices:
        sectors = build_boundary_sectors(graph, cfg.band_fraction)

    streams = Streams(cfg.seed)
    malware = ep.Malware(cfg.packets)
    policy = ep.CounterMeasurePolicy(cfg.rt_min, cfg.rt_max)
    devices = spawn_devices(graph, cfg.n_infected, cfg.n_susceptible, streams, sectors, cfg.positions)
    fleet = Fleet(devices, graph, sectors, streams, cfg.speed, cfg.static_devices)
    pop = ep.Population(cfg.n_infected, cfg.n_susceptible)
    events = []
    for d in range(cfg.n_infected):
        pop.response_steps[d] = ep.draw_response_steps(policy, malware, streams.response(d))
        events.append((0, "infected", d))

    ts = TimeSeries()
    n_vertices = graph.vertex_count
    counts = pop.counts()
    ts.record(0, counts, n_vertices)
    if trace_log is not None:
        _log_positions(trace_log, 0, fleet)

    r = float(cfg.radius)
    step = 0
    while counts.infected > 0 and step < cfg.max_steps:
        step += 1
        fleet.step()
        positions = fleet.positions()
        near, _, sus = ep.contact_matrix(positions, pop.state, r)
        exposed = sus[near.any(axis=0)] if near.size else sus[:0]
        for d in ep.transmit(exposed, pop, malware, policy, streams, step, cfg.reset_on_disconnect):
            events.append((step, "infected", d))
        for d in ep.apply_countermeasure(pop, step):
            events.append((step, "repaired", d))
        counts = pop.counts()
        ts.record(step, counts, n_vertices)
        if trace_log is not None:
            _log_positions(trace_log, step, fleet)

    outcome = classify_outcome(ts, cfg.total, cfg.max_steps)
    return SimulationResult(ts, outcome, cfg, events)


def _log_positions(fh, step: int, fleet: Fleet) -> None:
    pos = fleet.positions()
    fh.write("".join(f"{step},{i},{r},{c}\n" for i, (r, c) in enumerate(pos.tolist())))


def config_from_dict(values: dict) -> SimulationConfig:
    known = {f.name for f in fields(SimulationConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
    return SimulationConfig(**values)


def config_to_dict(cfg: SimulationConfig) -> dict:
    return asdict(cfg)
