"""Packet-based infection with counter-measure repair (S -> I -> Rp).

A susceptible device in range of at least one infected device receives one
malware packet per step. Once it holds all ``p`` packets it becomes infected
and is assigned a response time; when that many steps have elapsed the
counter-measure sanitizes it and it stays immune for the rest of the run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import Streams

SUSCEPTIBLE = 0
INFECTED = 1
REPAIRED = 2

STATE_NAMES = {SUSCEPTIBLE: "S", INFECTED: "I", REPAIRED: "Rp"}


@dataclass(frozen=True)
class Malware:
    packets: int

    def __post_init__(self):
        if self.packets < 1:
            raise ValueError(f"malware needs at least one packet, got {self.packets}")


@dataclass(frozen=True)
class CounterMeasurePolicy:
    """Response-time interval, in units of full-malware transmissions."""

    rt_min: int
    rt_max: int

    def __post_init__(self):
        if not 1 <= self.rt_min <= self.rt_max:
            raise ValueError(f"need 1 <= rt_min <= rt_max, got [{self.rt_min}, {self.rt_max}]")


@dataclass(frozen=True)
class ProximityGraph:
    edges: frozenset  # {(infected id, susceptible id)}
    r: float

    def neighbors_of(self, device: int) -> set[int]:
        return {i for i, s in self.edges if s == device} | {s for i, s in self.edges if i == device}


@dataclass(frozen=True)
class PopulationCounts:
    susceptible: int
    infected: int
    repaired: int
    cumulative_infected: int = 0

    @property
    def total(self) -> int:
        return self.susceptible + self.infected + self.repaired


class Population:
    """Epidemic state of every device, held as parallel arrays.

    ``packets`` is meaningful only for susceptible devices, ``infected_at`` and
    ``response_steps`` only for devices that have been infected (else -1).
    """

    def __init__(self, n_infected: int, n_susceptible: int):
        n = n_infected + n_susceptible
        self.state = np.full(n, SUSCEPTIBLE, dtype=np.int8)
        self.state[:n_infected] = INFECTED
        self.packets = np.zeros(n, dtype=np.int64)
        self.infected_at = np.full(n, -1, dtype=np.int64)
        self.response_steps = np.full(n, -1, dtype=np.int64)
        self.infected_at[:n_infected] = 0

    def __len__(self) -> int:
        return len(self.state)

    def counts(self) -> PopulationCounts:
        c = np.bincount(self.state, minlength=3)
        return PopulationCounts(
            int(c[SUSCEPTIBLE]),
            int(c[INFECTED]),
            int(c[REPAIRED]),
            int(np.count_nonzero(self.infected_at >= 0)),
        )

    def infect(self, device: int, step: int, response_steps: int) -> None:
        self.state[device] = INFECTED
        self.packets[device] = 0
        self.infected_at[device] = step
        self.response_steps[device] = response_steps


def contact_matrix(positions: np.ndarray, state: np.ndarray, r: float):
    """Boolean (infected x susceptible) in-range matrix plus the two id arrays."""
    inf = np.flatnonzero(state == INFECTED)
    sus = np.flatnonzero(state == SUSCEPTIBLE)
    if len(inf) == 0 or len(sus) == 0:
        return np.zeros((len(inf), len(sus)), dtype=bool), inf, sus
    pi = positions[inf].astype(np.float64)
    ps = positions[sus].astype(np.float64)
    d2 = ((pi[:, None, :] - ps[None, :, :]) ** 2).sum(axis=2)
    return d2 < r * r, inf, sus


def build_proximity_graph(positions: np.ndarray, state: np.ndarray, r: float) -> ProximityGraph:
    """Infected-susceptible pairs whose cell centres are strictly closer than ``r``."""
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    near, inf, sus = contact_matrix(np.asarray(positions), np.asarray(state), r)
    a, b = np.nonzero(near)
    return ProximityGraph(frozenset(zip(inf[a].tolist(), sus[b].tolist())), r)


def draw_response_steps(policy: CounterMeasurePolicy, malware: Malware, rng: np.random.Generator) -> int:
    t = int(rng.integers(policy.rt_min, policy.rt_max + 1))
    return t * malware.packets


def exposed_devices(graph: ProximityGraph) -> np.ndarray:
    return np.array(sorted({s for _, s in graph.edges}), dtype=np.int64)


def transmit(
    exposed,
    pop: Population,
    malware: Malware,
    policy: CounterMeasurePolicy,
    streams: Streams,
    step: int,
    reset_on_disconnect: bool = False,
) -> list[int]:
    """Deliver one packet to each exposed susceptible device and return the newly infected ids.

    ``exposed`` is either a ProximityGraph or an array of susceptible ids with
    at least one infected neighbour. Progress is kept while out of range unless
    ``reset_on_disconnect`` is set.
    """
    if isinstance(exposed, ProximityGraph):
        exposed = exposed_devices(exposed)
    exposed = np.asarray(exposed, dtype=np.int64)
    if len(exposed) and (pop.state[exposed] != SUSCEPTIBLE).any():
        raise ValueError("only susceptible devices can receive packets")
    if reset_on_disconnect:
        lost = np.ones(len(pop), dtype=bool)
        lost[exposed] = False
        pop.packets[lost & (pop.state == SUSCEPTIBLE)] = 0
    pop.packets[exposed] += 1
    newly = exposed[pop.packets[exposed] >= malware.packets]
    for d in newly.tolist():
        pop.infect(d, step, draw_response_steps(policy, malware, streams.response(d)))
    return newly.tolist()


def apply_countermeasure(pop: Population, step: int) -> list[int]:
    """Repair every infected device whose response time has elapsed; return their ids."""
    due = (pop.state == INFECTED) & (step - pop.infected_at >= pop.response_steps)
    ids = np.flatnonzero(due)
    pop.state[ids] = REPAIRED
    return ids.tolist()


def state_cover(counts: PopulationCounts, which: str) -> float:
    """Fraction of all devices currently in state ``which`` ("S", "I" or "Rp")."""
    total = counts.total
    if total < 1:
        raise ValueError("state cover of an empty population")
    value = {"S": counts.susceptible, "I": counts.infected, "Rp": counts.repaired}[which]
    return value / total


def state_rate(a: int, b: int) -> float:
    if a < 0 or b < 0:
        raise ValueError("state counts must be non-negative")
    return a / (b + 1)


def network_density(counts: PopulationCounts, map_vertices: int) -> float:
    if map_vertices < 1:
        raise ValueError("road graph has no vertices")
    return (counts.infected + counts.susceptible) / map_vertices
