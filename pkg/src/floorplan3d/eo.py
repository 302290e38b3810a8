"""tau-extremal optimisation of a component arrangement on a 3D cell grid.

Every component is a solution feature.  Its fitness compares the Manhattan
radius that encloses all of its neighbours with the smallest radius a
von Neumann ball could possibly offer for that many neighbours.  Each step
ranks features worst-first, draws rank k with probability proportional to
k**-tau and relocates the drawn component next to its neighbours' centroid,
swapping with whatever occupies the target cell.  Moves are never rejected.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, NamedTuple

import numpy as np

from .hypergraph import LayoutHypergraph, UnknownComponent
from .wirelength import NetIndex

__all__ = [
    "GridShape",
    "GridPlacement",
    "ComponentFitness",
    "EOParams",
    "TracePoint",
    "GridTooSmall",
    "von_neumann_size",
    "min_range",
    "fitness",
    "total_fitness",
    "rank_probabilities",
    "initial_placement",
    "eo_step",
    "run_eo",
    "default_grid",
]

Cell = tuple[int, int, int]


class GridTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class GridShape:
    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError(f"grid dimensions must be >= 1, got {self.as_tuple()}")

    @property
    def volume(self) -> int:
        return self.nx * self.ny * self.nz

    def as_tuple(self) -> Cell:
        return (self.nx, self.ny, self.nz)

    def contains(self, cell: Cell) -> bool:
        x, y, z = cell
        return 0 <= x < self.nx and 0 <= y < self.ny and 0 <= z < self.nz

    def cells(self):
        return itertools.product(range(self.nx), range(self.ny), range(self.nz))

    @classmethod
    def parse(cls, text: str) -> GridShape:
        parts = [int(v) for v in text.replace("x", ",").replace("×", ",").split(",")]
        if len(parts) != 3:
            raise ValueError(f"grid needs three sizes, got {text!r}")
        return cls(*parts)


@dataclass(frozen=True)
class GridPlacement:
    shape: GridShape
    cells: tuple[Cell, ...]  # indexed by component id

    def __post_init__(self):
        if len(set(self.cells)) != len(self.cells):
            raise ValueError("two components share a cell")
        for c in self.cells:
            if not self.shape.contains(c):
                raise ValueError(f"cell {c} outside grid {self.shape.as_tuple()}")

    @property
    def occupant(self) -> dict[Cell, int]:
        return {cell: i for i, cell in enumerate(self.cells)}

    def cell_of(self, c: int) -> Cell:
        return self.cells[c]

    def to_json(self, h: LayoutHypergraph, fitness: float | None = None) -> dict:
        out: dict = {
            "shape": list(self.shape.as_tuple()),
            "cells": {label: list(cell) for label, cell in zip(h.labels(), self.cells)},
        }
        if fitness is not None:
            out["fitness"] = fitness
        return out

    @classmethod
    def from_json(cls, data: Mapping, h: LayoutHypergraph) -> GridPlacement:
        cells = data["cells"]
        missing = [lbl for lbl in h.labels() if lbl not in cells]
        if missing:
            raise UnknownComponent(f"placement lacks components: {missing[:5]}")
        return cls(GridShape(*data["shape"]), tuple(tuple(int(v) for v in cells[lbl]) for lbl in h.labels()))


@dataclass(frozen=True)
class ComponentFitness:
    component: int
    actual_range: int
    min_range: int
    lam: float


@dataclass(frozen=True)
class EOParams:
    shape: GridShape
    tau: float = 1.5
    max_iters: int | None = None  # None: 100 * m**2
    seed: int = 0

    def __post_init__(self):
        if not self.tau > 1:
            raise ValueError(f"tau must be > 1, got {self.tau}")
        if self.max_iters is not None and self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")

    def iterations(self, m: int) -> int:
        return 100 * m * m if self.max_iters is None else self.max_iters


class TracePoint(NamedTuple):
    iteration: int
    fitness: float
    best_fitness: float


def von_neumann_size(r: int) -> int:
    """Cells within Manhattan distance r of the origin on Z^3, origin excluded."""
    return (2 * r + 1) * (2 * r * r + 2 * r + 3) // 3 - 1


@lru_cache(maxsize=None)
def min_range(neighbor_count: int) -> int:
    if neighbor_count < 0:
        raise ValueError("neighbor_count must be >= 0")
    r = 0
    while von_neumann_size(r) < neighbor_count:
        r += 1
    return r


@lru_cache(maxsize=None)
def _ball_offsets(r: int) -> np.ndarray:
    rng = range(-r, r + 1)
    return np.array(
        [(dx, dy, dz) for dx in rng for dy in rng for dz in rng if abs(dx) + abs(dy) + abs(dz) <= r],
        dtype=np.int64,
    ).reshape(-1, 3)


@lru_cache(maxsize=None)
def _ball_tuples(r: int) -> tuple[tuple[int, int, int], ...]:
    return tuple(tuple(int(v) for v in row) for row in _ball_offsets(r))


def rank_probabilities(m: int, tau: float) -> np.ndarray:
    k = np.arange(1, m + 1, dtype=float)
    w = k ** (-tau)
    return w / w.sum()


def fitness(h: LayoutHypergraph, p: GridPlacement, c: int) -> ComponentFitness:
    if not 0 <= c < h.m:
        raise UnknownComponent(c)
    x, y, z = p.cells[c]
    nbrs = h.adjacency[c]
    rmin = min_range(len(nbrs))
    if not nbrs:
        return ComponentFitness(c, 0, 0, 1.0)
    r = max(abs(x - a) + abs(y - b) + abs(z - d) for a, b, d in (p.cells[n] for n in nbrs))
    return ComponentFitness(c, r, rmin, rmin / max(r, rmin))


def total_fitness(h: LayoutHypergraph, p: GridPlacement) -> float:
    return float(sum(fitness(h, p, c).lam for c in range(h.m)))


def initial_placement(m: int, shape: GridShape) -> GridPlacement:
    if shape.volume < m:
        raise GridTooSmall(f"{m} components do not fit a {shape.as_tuple()} grid")
    return GridPlacement(shape, tuple(itertools.islice(shape.cells(), m)))


@dataclass
class _State:
    """Mutable working copy used inside the optimisation loop."""

    h: LayoutHypergraph
    shape: GridShape
    pos: np.ndarray  # (m, 3) int
    occupant: dict[Cell, int]
    adj: np.ndarray = field(init=False)
    rmin: np.ndarray = field(init=False)

    def __post_init__(self):
        m = self.h.m
        self.adj = np.zeros((m, m), dtype=np.int64)
        for i, nbrs in enumerate(self.h.adjacency):
            self.adj[i, list(nbrs)] = 1
        self.rmin = np.array([min_range(len(n)) for n in self.h.adjacency], dtype=np.int64)
        self._upper = np.array(self.shape.as_tuple()) - 1
        self._bounds = tuple(int(v) for v in self._upper)

    @classmethod
    def of(cls, h: LayoutHypergraph, p: GridPlacement) -> _State:
        pos = np.array(p.cells, dtype=np.int64).reshape(h.m, 3)
        return cls(h, p.shape, pos, p.occupant)

    def ranges(self) -> np.ndarray:
        d = np.abs(self.pos[:, None, :] - self.pos[None, :, :]).sum(axis=2)
        return (d * self.adj).max(axis=1) if len(self.pos) else np.zeros(0, dtype=np.int64)

    def lambdas(self, ranges: np.ndarray) -> np.ndarray:
        return np.where(self.rmin == 0, 1.0, self.rmin / np.maximum(ranges, np.maximum(self.rmin, 1)))

    def placement(self) -> GridPlacement:
        return GridPlacement(self.shape, tuple(tuple(int(v) for v in row) for row in self.pos))

    def move(self, c: int, rng: np.random.Generator) -> None:
        nbrs = self.h.adjacency[c]
        if not nbrs:
            return
        pts = self.pos[list(nbrs)].tolist()
        n = len(pts)
        upper = self._bounds
        centre = [min(max(math.floor(sum(p[a] for p in pts) / n + 0.5), 0), upper[a]) for a in range(3)]
        cx, cy, cz = centre
        cand = [
            (cx + dx, cy + dy, cz + dz)
            for dx, dy, dz in _ball_tuples(int(self.rmin[c]))
            if 0 <= cx + dx <= upper[0] and 0 <= cy + dy <= upper[1] and 0 <= cz + dz <= upper[2]
        ]
        here = self.pos[c]
        here_t = (int(here[0]), int(here[1]), int(here[2]))
        others = [t for t in cand if t != here_t]
        if others:
            cand = others
        target = cand[rng.integers(len(cand))]
        source = tuple(int(v) for v in here)
        if target == source:
            return
        other = self.occupant.pop(target, None)
        self.occupant[target] = c
        self.pos[c] = target
        if other is None:
            del self.occupant[source]
        else:
            self.occupant[source] = other
            self.pos[other] = source


def _draw(order: np.ndarray, cdf: np.ndarray, rng: np.random.Generator) -> int:
    k = int(np.searchsorted(cdf, rng.random(), side="right"))
    return int(order[min(k, len(order) - 1)])


def eo_step(
    h: LayoutHypergraph, p: GridPlacement, params: EOParams, rng: np.random.Generator
) -> GridPlacement:
    if h.m == 0:
        return p
    state = _State.of(h, p)
    lam = state.lambdas(state.ranges())
    cdf = np.cumsum(rank_probabilities(h.m, params.tau))
    state.move(_draw(np.argsort(lam, kind="stable"), cdf, rng), rng)
    return state.placement()


def run_eo(
    h: LayoutHypergraph, params: EOParams, initial: GridPlacement | None = None
) -> tuple[GridPlacement, list[TracePoint]]:
    """Evolve one placement; return the best one seen and the fitness trace.

    Best is ranked by total fitness (higher first), then by grid
    wire-length (lower first).  Stops early once every component sits at
    its optimal range.
    """
    m = h.m
    if params.shape.volume < m:
        raise GridTooSmall(f"{m} components do not fit a {params.shape.as_tuple()} grid")
    p0 = initial if initial is not None else initial_placement(m, params.shape)
    rng = np.random.default_rng(params.seed)
    state = _State.of(h, p0)
    nets = NetIndex.of(h)
    cdf = np.cumsum(rank_probabilities(m, params.tau))

    ranges = state.ranges()
    lam = state.lambdas(ranges)
    best_fit = float(lam.sum())
    best_wl = float(nets.per_net(state.pos.astype(float)).sum())
    best = state.placement()
    trace = [TracePoint(0, best_fit, best_fit)]

    for it in range(1, params.iterations(m) + 1):
        if np.all(ranges <= state.rmin):
            break
        state.move(_draw(np.argsort(lam, kind="stable"), cdf, rng), rng)
        ranges = state.ranges()
        lam = state.lambdas(ranges)
        fit = float(lam.sum())
        if fit >= best_fit:
            wl = float(nets.per_net(state.pos.astype(float)).sum())
            if fit > best_fit or wl < best_wl:
                best_fit, best_wl, best = fit, wl, state.placement()
        trace.append(TracePoint(it, fit, best_fit))
    return best, trace


def default_grid(m: int, max_layers: int = 4) -> GridShape:
    """Smallest cuboid nx >= ny >= nz, nz <= max_layers, holding m cells."""
    if m < 1:
        raise ValueError("need at least one component")
    best = None
    for nz in range(1, max_layers + 1):
        for ny in range(nz, m + 1):
            nx = max(ny, -(-m // (ny * nz)))
            key = (nx * ny * nz, nx, ny)
            if best is None or key < best[0]:
                best = (key, GridShape(nx, ny, nz))
    assert best is not None
    return best[1]
