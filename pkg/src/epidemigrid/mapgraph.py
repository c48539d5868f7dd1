"""Weighted 8-neighbourhood road graph and shortest-path traces.

Vertices are the road cells of the largest connected component, numbered
row-major. Two vertices are joined when their cells touch (including
diagonally); the edge cost falls as the attraction of its endpoints rises,
so traces bend towards hot spots.
"""

from __future__ import annotations

import heapq
import os
from dataclasses import dataclass

import numba
import numpy as np

from .errors import EmptyGraph, IllegalWeight, Unreachable
from .mapgrid import ATTRACTION_LEVELS, AttractionGrid, ComponentMask, OccupancyGrid

# forward half of the 8-neighbourhood; the reverse arcs are added by symmetry
_FORWARD = ((0, 1), (1, -1), (1, 0), (1, 1))


def edge_weight(w_u: int, w_v: int) -> int:
    """Cost of the edge between cells with attraction levels ``w_u`` and ``w_v``."""
    if w_u not in ATTRACTION_LEVELS or w_v not in ATTRACTION_LEVELS:
        raise IllegalWeight(f"attraction levels must be in {ATTRACTION_LEVELS}, got ({w_u}, {w_v})")
    return (10 - w_u) + (10 - w_v) + 1


@dataclass(frozen=True)
class Path:
    vertices: tuple[int, ...]
    total_cost: int

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def first(self) -> int:
        return self.vertices[0]

    @property
    def last(self) -> int:
        return self.vertices[-1]


@dataclass(frozen=True, eq=False)
class MapGraph:
    """Road graph in CSR form.

    ``ids[row, col]`` gives the vertex id of a cell (-1 when the cell is not a
    vertex) and ``coords[v]`` the ``(row, col)`` of vertex ``v``. Neighbours of
    ``v`` are ``indices[indptr[v]:indptr[v + 1]]`` in increasing id order with
    matching ``weights``.
    """

    height: int
    width: int
    coords: np.ndarray
    ids: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    @property
    def vertex_count(self) -> int:
        return len(self.coords)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def min_weight(self) -> int:
        return int(self.weights.min()) if len(self.weights) else 1

    def neighbors(self, v: int) -> list[tuple[int, int]]:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return [(int(u), int(w)) for u, w in zip(self.indices[lo:hi], self.weights[lo:hi])]

    def adjacency(self) -> list[list[tuple[int, int]]]:
        return [self.neighbors(v) for v in range(self.vertex_count)]

    def vertex_at(self, row: int, col: int) -> int:
        v = int(self.ids[row, col])
        if v < 0:
            raise KeyError(f"cell ({row}, {col}) is not a road vertex of the graph")
        return v

    def edges(self):
        """Yield each undirected edge once as ``(u, v, weight)`` with ``u < v``."""
        for u in range(self.vertex_count):
            for v, w in self.neighbors(u):
                if u < v:
                    yield u, v, w

    def write_edge_list(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            for u, v, w in self.edges():
                fh.write(f"{u} {v} {w}\n")


def build_map_graph(grid: OccupancyGrid, attraction: AttractionGrid, mask: ComponentMask) -> MapGraph:
    shapes = {grid.cells.shape, attraction.weights.shape, mask.labels.shape}
    if len(shapes) != 1:
        raise ValueError(f"inconsistent grid shapes: {sorted(shapes)}")
    height, width = grid.cells.shape
    member = mask.largest & grid.road
    if not member.any():
        raise EmptyGraph("largest component has no road cell")

    coords = np.argwhere(member)  # row-major order
    ids = np.full((height, width), -1, dtype=np.int64)
    ids[coords[:, 0], coords[:, 1]] = np.arange(len(coords))

    w = attraction.weights
    src_parts, dst_parts, wt_parts = [], [], []
    for dr, dc in _FORWARD:
        r0 = slice(0, height - dr)
        r1 = slice(dr, height)
        c0 = slice(max(0, -dc), width - max(0, dc))
        c1 = slice(max(0, dc), width - max(0, -dc))
        both = member[r0, c0] & member[r1, c1]
        a = ids[r0, c0][both]
        b = ids[r1, c1][both]
        wa = w[r0, c0][both]
        wb = w[r1, c1][both]
        if not (np.isin(wa, ATTRACTION_LEVELS).all() and np.isin(wb, ATTRACTION_LEVELS).all()):
            raise IllegalWeight("road cell with attraction outside {1, 5, 10}")
        cost = (10 - wa) + (10 - wb) + 1
        src_parts += [a, b]
        dst_parts += [b, a]
        wt_parts += [cost, cost]

    src = np.concatenate(src_parts) if src_parts else np.empty(0, np.int64)
    dst = np.concatenate(dst_parts) if dst_parts else np.empty(0, np.int64)
    wt = np.concatenate(wt_parts) if wt_parts else np.empty(0, np.int64)
    order = np.lexsort((dst, src))
    src, dst, wt = src[order], dst[order], wt[order]
    indptr = np.zeros(len(coords) + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=len(coords)), out=indptr[1:])
    return MapGraph(
        height=height,
        width=width,
        coords=coords.astype(np.int64),
        ids=ids,
        indptr=indptr,
        indices=dst.astype(np.int64),
        weights=wt.astype(np.int64),
    )


@numba.njit(cache=True)
def _search(indptr, indices, weights, coords, src, dst, hscale):
    # A* with an admissible, consistent Chebyshev heuristic (hscale is the
    # cheapest edge). Heap entries are ordered by (f, g, id): every optimal
    # predecessor of a vertex is closed before the vertex itself, so keeping
    # the lowest-id optimal predecessor reproduces plain Dijkstra exactly.
    n = len(indptr) - 1
    big = np.iinfo(np.int64).max
    g = np.full(n, big, dtype=np.int64)
    pred = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.bool_)
    tr = coords[dst, 0]
    tc = coords[dst, 1]
    g[src] = 0
    h0 = hscale * max(abs(coords[src, 0] - tr), abs(coords[src, 1] - tc))
    heap = [(h0, np.int64(0), np.int64(src))]
    while len(heap) > 0:
        f, gu, u = heapq.heappop(heap)
        if closed[u] or gu != g[u]:
            continue
        closed[u] = True
        if u == dst:
            break
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if closed[v]:
                continue
            nd = gu + weights[k]
            if nd < g[v]:
                g[v] = nd
                pred[v] = u
                hv = hscale * max(abs(coords[v, 0] - tr), abs(coords[v, 1] - tc))
                heapq.heappush(heap, (nd + hv, nd, v))
            elif nd == g[v] and u < pred[v]:
                pred[v] = u
    if not closed[dst]:
        return np.empty(0, dtype=np.int64), np.int64(-1)
    length = 1
    v = dst
    while v != src:
        v = pred[v]
        length += 1
    out = np.empty(length, dtype=np.int64)
    v = dst
    for i in range(length - 1, -1, -1):
        out[i] = v
        v = pred[v]
    return out, g[dst]


def shortest_path(g: MapGraph, src: int, dst: int) -> Path:
    """Minimum-cost path from ``src`` to ``dst``.

    Among equal-cost routes the one whose vertices have the lowest-id
    predecessor (walking back from ``dst``) wins, which makes traces
    reproducible across platforms.
    """
    n = g.vertex_count
    if not (0 <= src < n and 0 <= dst < n):
        raise IndexError(f"vertex ids must lie in [0, {n}), got {src} and {dst}")
    if src == dst:
        return Path((int(src),), 0)
    verts, cost = _search(g.indptr, g.indices, g.weights, g.coords, int(src), int(dst), g.min_weight)
    if cost < 0:
        raise Unreachable(f"no path from {src} to {dst}")
    return Path(tuple(int(v) for v in verts), int(cost))


def trace_array(g: MapGraph, src: int, dst: int) -> np.ndarray:
    """Vertex sequence of ``shortest_path`` as an int array (hot path for mobility)."""
    if src == dst:
        return np.array([src], dtype=np.int64)
    verts, cost = _search(g.indptr, g.indices, g.weights, g.coords, int(src), int(dst), g.min_weight)
    if cost < 0:
        raise Unreachable(f"no path from {src} to {dst}")
    return verts


def path_cost(g: MapGraph, vertices) -> int:
    """Sum of edge weights along ``vertices``; raises if two consecutive vertices are not adjacent."""
    total = 0
    for u, v in zip(vertices[:-1], vertices[1:]):
        lo, hi = g.indptr[u], g.indptr[u + 1]
        k = np.searchsorted(g.indices[lo:hi], v)
        if k >= hi - lo or g.indices[lo + k] != v:
            raise ValueError(f"vertices {u} and {v} are not adjacent")
        total += int(g.weights[lo + k])
    return total
