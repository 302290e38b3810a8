"""Shared generators and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
import random

from floorplan3d.eo import GridShape
from floorplan3d.hypergraph import from_nets
from floorplan3d.squeeze import GeometricPlacement, PlacedBox, RallyPoint, find_overlaps

EPS = 1e-9


def random_layout(r: random.Random, max_boxes: int = 20, max_layers: int = 3) -> GeometricPlacement:
    """Overlap-free boxes on up to ``max_layers`` layers, rally somewhere in or on the bounding box."""
    n = r.randint(1, max_boxes)
    layers = r.randint(1, max_layers)
    boxes: list[PlacedBox] = []
    tries = 0
    while len(boxes) < n and tries < 2000:
        tries += 1
        w, h = r.randint(1, 8), r.randint(1, 8)
        b = PlacedBox(f"b{len(boxes)}", r.randint(0, 40), r.randint(0, 40), r.randrange(layers), w, h)
        if not find_overlaps(boxes + [b]):
            boxes.append(b)
    x0, x1 = min(b.x for b in boxes), max(b.right for b in boxes)
    y0, y1 = min(b.y for b in boxes), max(b.top for b in boxes)
    if r.random() < 0.5:
        rally = RallyPoint(r.uniform(x0, x1), r.uniform(y0, y1))
    else:
        rally = RallyPoint(r.choice([x0, x1]), r.choice([y0, y1]))
    return GeometricPlacement(tuple(boxes), layers, rally)


def side(a0: float, a1: float, b0: float, b1: float) -> int:
    """-1 if [a0,a1) lies before [b0,b1), +1 if after, 0 if they overlap."""
    if a1 <= b0 + EPS:
        return -1
    if a0 >= b1 - EPS:
        return 1
    return 0


def rally_gap(lo: float, hi: float, target: float) -> float:
    return max(0.0, lo - target, target - hi)


def pairwise_hpwl(points) -> float:
    """max |c' - c''| per axis over all endpoint pairs."""
    total = 0.0
    for axis in range(3):
        total += max((abs(p[axis] - q[axis]) for p, q in itertools.product(points, repeat=2)), default=0.0)
    return total


def lattice_min_range(count: int) -> int:
    """Smallest r whose 3D diamond holds ``count`` cells besides its centre, by enumeration."""
    r = 0
    while True:
        cells = sum(
            1
            for dx in range(-r, r + 1)
            for dy in range(-r, r + 1)
            for dz in range(-r, r + 1)
            if 0 < abs(dx) + abs(dy) + abs(dz) <= r
        )
        if cells >= count:
            return r
        r += 1


def check_squeeze(g: GeometricPlacement, out: GeometricPlacement) -> None:
    """Assert the squeezer invariants between an input and its output."""
    assert [b.name for b in out.boxes] == [b.name for b in g.boxes]
    assert not find_overlaps(out.boxes)
    px, py = g.rally.px, g.rally.py
    for a, b in zip(g.boxes, out.boxes):
        assert a.layer == b.layer and a.width == b.width and a.height == b.height
        assert rally_gap(b.x, b.right, px) <= rally_gap(a.x, a.right, px) + EPS
        assert rally_gap(b.y, b.top, py) <= rally_gap(a.y, a.top, py) + EPS
    n = len(g.boxes)
    for i in range(n):
        for j in range(i + 1, n):
            a, b, A, B = g.boxes[i], g.boxes[j], out.boxes[i], out.boxes[j]
            if a.layer != b.layer:
                continue
            for along, across in (("x", "y"), ("y", "x")):
                def span(q, ax):
                    return (q.x, q.right) if ax == "x" else (q.y, q.top)

                if side(*span(a, across), *span(b, across)) == 0 or side(*span(A, across), *span(B, across)) == 0:
                    before = side(*span(a, along), *span(b, along))
                    assert before != 0
                    assert side(*span(A, along), *span(B, along)) == before


BLOCKED = ("K1", "K2", "K3")


def layout(*boxes, rally=(0, 0), layers=None):
    bs = tuple(PlacedBox(*b) for b in boxes)
    return GeometricPlacement(bs, layers or max(b.layer for b in bs) + 1, RallyPoint(*rally))


def staircase():
    """Three blocked boxes along the left wall and four mobile boxes to their right."""
    return layout(
        ("K1", 0, 0, 0, 2, 2),
        ("K2", 0, 2, 0, 1, 4),
        ("K3", 0, 6, 0, 6, 2),
        ("blue", 4, 2, 0, 2, 2),
        ("green", 6, 3, 0, 2, 2),
        ("orange", 8, 4, 0, 3, 3),
        ("M4", 3, 0, 0, 2, 2),
    )


def unit_step_packing(g: GeometricPlacement, mobile: list[str]) -> set[tuple]:
    """Every terminal state reachable by unit steps toward x=0 (depth-first, exhaustive)."""
    boxes = {b.name: b for b in g.boxes}
    start = tuple(int(boxes[n].x) for n in mobile)
    fixed = [b for b in g.boxes if b.name not in mobile]

    def free(state, k, nx):
        b = boxes[mobile[k]]
        if nx < 0:
            return False
        others = [(o.x, o.width, o.y, o.height) for o in fixed]
        others += [(state[q], boxes[mobile[q]].width, boxes[mobile[q]].y, boxes[mobile[q]].height)
                   for q in range(len(mobile)) if q != k]
        for ox, ow, oy, oh in others:
            if nx < ox + ow and ox < nx + b.width and b.y < oy + oh and oy < b.y + b.height:
                return False
        return True

    seen, terminal, stack = {start}, set(), [start]
    while stack:
        state = stack.pop()
        moved = False
        for k in range(len(mobile)):
            nx = state[k] - 1
            if free(state, k, nx):
                moved = True
                nxt = state[:k] + (nx,) + state[k + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if not moved:
            terminal.add(state)
    return terminal


MOBILE = ["blue", "green", "orange", "M4"]


def complete(m):
    return from_nets([(f"c{i}", 1, 1) for i in range(m)], [("all", [f"c{i}" for i in range(m)])])


def brute_force_optimum(h, shape: GridShape) -> float:
    """Best total fitness over every injective placement, scored independently."""
    nbrs = [set() for _ in range(h.m)]
    for net in h.nets_as_members():
        for a in net:
            nbrs[a] |= set(net) - {a}
    rmin = [lattice_min_range(len(n)) for n in nbrs]
    best = -1.0
    for cells in itertools.permutations(list(shape.cells()), h.m):
        total = 0.0
        for c in range(h.m):
            if not nbrs[c]:
                total += 1
                continue
            r = max(sum(abs(u - v) for u, v in zip(cells[c], cells[n])) for n in nbrs[c])
            total += rmin[c] / max(r, rmin[c])
        best = max(best, total)
    return best
