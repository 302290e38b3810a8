"""Volume optimisation by squeezing.

A grid placement is first blown up to real module sizes on a uniform cell
pitch.  Components are then slid, one axis at a time, towards a rallying
point until they touch a neighbour or line up with the point.  Layers never
change.

Relative arrangement is kept pairwise: two boxes on the same layer start
out separated along X, along Y or both, and every accepted slide keeps at
least one of those original separations intact.  Two boxes that overlap on
Y therefore never change their order along X, and vice versa.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .eo import GridPlacement

__all__ = [
    "PlacedBox",
    "RallyPoint",
    "GeometricPlacement",
    "MoveQueue",
    "OverlappingInput",
    "MissingDimensions",
    "EmptyPlacement",
    "UnknownComponent",
    "Squeezer",
    "seed_geometry",
    "rally_point",
    "max_slide",
    "squeeze",
    "squeeze_bundles",
    "bounding_volume",
    "find_overlaps",
]

EPS = 1e-9
AXES = ("x", "y")


class OverlappingInput(ValueError):
    pass


class MissingDimensions(KeyError):
    pass


class EmptyPlacement(ValueError):
    pass


class UnknownComponent(KeyError):
    pass


@dataclass(frozen=True)
class PlacedBox:
    name: str
    x: float
    y: float
    layer: int
    width: float
    height: float

    @property
    def right(self) -> float:
        return self.x + self.width

    @property
    def top(self) -> float:
        return self.y + self.height

    def to_json(self) -> dict:
        return {"name": self.name, "x": self.x, "y": self.y, "layer": self.layer, "w": self.width, "h": self.height}


@dataclass(frozen=True)
class RallyPoint:
    px: float = 0.0
    py: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.px) and math.isfinite(self.py)):
            raise ValueError("rally point must be finite")


@dataclass(frozen=True)
class GeometricPlacement:
    boxes: tuple[PlacedBox, ...]
    layers: int
    rally: RallyPoint = RallyPoint()

    def box(self, name: str) -> PlacedBox:
        for b in self.boxes:
            if b.name == name:
                return b
        raise UnknownComponent(name)

    def names(self) -> list[str]:
        return [b.name for b in self.boxes]

    def to_json(self) -> dict:
        return {
            "layers": self.layers,
            "rally": [self.rally.px, self.rally.py],
            "boxes": [b.to_json() for b in self.boxes],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> GeometricPlacement:
        boxes = tuple(
            PlacedBox(b["name"], float(b["x"]), float(b["y"]), int(b["layer"]), float(b["w"]), float(b["h"]))
            for b in data["boxes"]
        )
        px, py = data.get("rally", (0.0, 0.0))
        return cls(boxes, int(data["layers"]), RallyPoint(float(px), float(py)))


@dataclass
class MoveQueue:
    entries: list[tuple[int, str]]
    immobile_x: set[int] = field(default_factory=set)
    immobile_y: set[int] = field(default_factory=set)

    @property
    def immobile(self) -> set[int]:
        return self.immobile_x & self.immobile_y

    def blocked(self, c: int, axis: str) -> bool:
        return c in (self.immobile_x if axis == "x" else self.immobile_y)

    def block(self, c: int, axis: str) -> bool:
        """Mark c immobile along axis; True if that makes it immobile on both."""
        (self.immobile_x if axis == "x" else self.immobile_y).add(c)
        try:
            self.entries.remove((c, axis))
        except ValueError:
            pass
        return c in self.immobile_x and c in self.immobile_y


def _overlap(lo1: float, hi1: float, lo2: float, hi2: float) -> bool:
    # half-open: touching edges do not overlap
    return lo1 < hi2 - EPS and lo2 < hi1 - EPS


def find_overlaps(boxes: Sequence[PlacedBox]) -> list[tuple[str, str]]:
    out = []
    for i, a in enumerate(boxes):
        for b in boxes[i + 1 :]:
            if a.layer == b.layer and _overlap(a.x, a.right, b.x, b.right) and _overlap(a.y, a.top, b.y, b.top):
                out.append((a.name, b.name))
    return out


def dims_of(components: Iterable[tuple[str, float, float]]) -> dict[str, tuple[float, float]]:
    return {name: (w, h) for name, w, h in components}


def seed_geometry(
    p: GridPlacement,
    dims: Mapping[str, tuple[float, float]] | Sequence[tuple[str, float, float]],
    rally: RallyPoint | None = None,
) -> GeometricPlacement:
    """Place every component in its grid cell using a uniform cell pitch.

    ``dims`` lists components in component-id order (a mapping keeps its
    insertion order).  Pitch is the largest width by the largest height.
    """
    items = list(dims.items()) if isinstance(dims, Mapping) else [(n, (w, h)) for n, w, h in dims]
    if len(items) < len(p.cells):
        raise MissingDimensions(f"{len(p.cells) - len(items)} components have no dimensions")
    items = items[: len(p.cells)]
    for name, (w, h) in items:
        if not (w > 0 and h > 0):
            raise MissingDimensions(f"component {name!r} has no usable dimensions")
    pitch_x = max((w for _, (w, _) in items), default=0.0)
    pitch_y = max((h for _, (_, h) in items), default=0.0)
    boxes = tuple(
        PlacedBox(name, cx * pitch_x, cy * pitch_y, cz, float(w), float(h))
        for (name, (w, h)), (cx, cy, cz) in zip(items, p.cells)
    )
    return GeometricPlacement(boxes, p.shape.nz, rally or RallyPoint(0.0, 0.0))


def rally_point(boxes: Sequence[PlacedBox], mode: str | tuple[float, float] = "corner") -> RallyPoint:
    """Resolve a rally mode: 'corner' (left-bottom), 'center', or explicit (px, py)."""
    if not isinstance(mode, str):
        return RallyPoint(float(mode[0]), float(mode[1]))
    if not boxes:
        return RallyPoint()
    x0, y0 = min(b.x for b in boxes), min(b.y for b in boxes)
    if mode == "corner":
        return RallyPoint(x0, y0)
    if mode == "center":
        x1, y1 = max(b.right for b in boxes), max(b.top for b in boxes)
        return RallyPoint((x0 + x1) / 2, (y0 + y1) / 2)
    raise ValueError(f"unknown rally mode {mode!r}")


def bounding_volume(g: GeometricPlacement) -> tuple[float, float, int]:
    if not g.boxes:
        raise EmptyPlacement("no boxes")
    vx = max(b.right for b in g.boxes) - min(b.x for b in g.boxes)
    vy = max(b.top for b in g.boxes) - min(b.y for b in g.boxes)
    return (vx, vy, g.layers)


def _sep(lo1: float, hi1: float, lo2: float, hi2: float) -> int:
    """-1 if interval 1 lies before interval 2, +1 if after, 0 if they overlap."""
    if hi1 <= lo2 + EPS:
        return -1
    if lo1 >= hi2 - EPS:
        return 1
    return 0


@dataclass
class _Slide:
    direction: int  # -1 towards smaller coordinates, +1 towards larger, 0 aligned
    limit: float  # distance left to the rally coordinate
    distance: float  # what is actually possible
    contacts: list[int]  # boxes that stop the slide, empty if the rally does


class Squeezer:
    """One squeezing run over a geometric placement.

    ``axes`` restricts the move directions; an axis left out counts as
    already blocked for every component.  ``immobile`` pre-blocks
    components on both axes.  With ``check`` set, overlap-freedom and
    monotone approach are verified after every move.

    Every slide keeps, for each same-layer pair, at least one of the
    separations (left/right/below/above) the pair has in ``arrangement``,
    which defaults to the input itself.  Passing the original input when
    re-squeezing an output continues the same run.
    """

    def __init__(
        self,
        g: GeometricPlacement,
        p1: float = 0.5,
        p2: float | None = None,
        seed: int = 0,
        bundles: bool = False,
        axes: Sequence[str] = AXES,
        immobile: Iterable[str] = (),
        check: bool = False,
        arrangement: GeometricPlacement | None = None,
    ):
        p2 = 1.0 - p1 if p2 is None else p2
        if not (0 <= p1 <= 1 and 0 <= p2 <= 1 and abs(p1 + p2 - 1) < 1e-9):
            raise ValueError(f"p1 and p2 must be probabilities summing to 1, got {p1}, {p2}")
        if not set(axes) <= set(AXES) or not axes:
            raise ValueError(f"axes must be a non-empty subset of {AXES}")
        overlaps = find_overlaps(g.boxes)
        if overlaps:
            raise OverlappingInput(f"overlapping boxes: {overlaps[:3]}")

        self.g0 = g
        self.p1 = p1
        self.rng = np.random.default_rng(seed)
        self.bundles = bundles
        self.axes = tuple(a for a in AXES if a in axes)
        self.check = check
        self.rally = g.rally

        n = len(g.boxes)
        self.names = [b.name for b in g.boxes]
        self.index = {name: i for i, name in enumerate(self.names)}
        self.x = [b.x for b in g.boxes]
        self.y = [b.y for b in g.boxes]
        self.w = [b.width for b in g.boxes]
        self.h = [b.height for b in g.boxes]
        self.layer = [b.layer for b in g.boxes]
        self.peers = [[j for j in range(n) if j != i and self.layer[j] == self.layer[i]] for i in range(n)]
        # original pairwise separations, the arrangement to preserve
        ref = g if arrangement is None else arrangement
        try:
            rb = [ref.box(name) for name in self.names]
        except UnknownComponent as exc:
            raise ValueError(f"arrangement lacks component {exc}") from None
        self.sep0 = {
            "x": {(i, j): _sep(rb[i].x, rb[i].right, rb[j].x, rb[j].right) for i in range(n) for j in self.peers[i]},
            "y": {(i, j): _sep(rb[i].y, rb[i].top, rb[j].y, rb[j].top) for i in range(n) for j in self.peers[i]},
        }

        self.queue = MoveQueue([(i, a) for i in range(n) for a in self.axes])
        for a in AXES:
            if a not in self.axes:
                (self.queue.immobile_x if a == "x" else self.queue.immobile_y).update(range(n))
        for name in immobile:
            i = self.index[name]
            self.queue.block(i, "x")
            self.queue.block(i, "y")
        self._preset = {a: set(self.queue.immobile_x if a == "x" else self.queue.immobile_y) for a in AXES}

        self.moves = 0
        self.bundle_moves = 0
        self.passes = 0

    # geometry helpers -------------------------------------------------

    def _span(self, i: int, axis: str) -> tuple[float, float]:
        if axis == "x":
            return self.x[i], self.x[i] + self.w[i]
        return self.y[i], self.y[i] + self.h[i]

    def _rally_distance(self, i: int, axis: str) -> float:
        lo, hi = self._span(i, axis)
        target = self.rally.px if axis == "x" else self.rally.py
        return max(0.0, lo - target, target - hi)

    def _slide(self, i: int, axis: str, ignore: frozenset[int] | set[int] = frozenset()) -> _Slide:
        lo, hi = self._span(i, axis)
        target = self.rally.px if axis == "x" else self.rally.py
        if lo > target + EPS:
            direction, limit = -1, lo - target
        elif hi < target - EPS:
            direction, limit = 1, target - hi
        else:
            return _Slide(0, 0.0, 0.0, [])
        other = "y" if axis == "x" else "x"
        sep_along, sep_across = self.sep0[axis], self.sep0[other]
        olo, ohi = self._span(i, other)
        gaps: list[tuple[float, int]] = []
        for j in self.peers[i]:
            if j in ignore:
                continue
            keep = sep_across[(i, j)]
            if keep and _sep(olo, ohi, *self._span(j, other)) == keep:
                continue  # still separated across the move axis as originally
            side = sep_along[(i, j)]
            jlo, jhi = self._span(j, axis)
            if direction < 0 and side > 0:
                gaps.append((max(0.0, lo - jhi), j))
            elif direction > 0 and side < 0:
                gaps.append((max(0.0, jlo - hi), j))
        nearest = min((gp for gp, _ in gaps), default=math.inf)
        if nearest > limit + EPS:
            return _Slide(direction, limit, limit, [])
        return _Slide(direction, limit, nearest, sorted(j for gp, j in gaps if gp <= nearest + EPS))

    def _shift(self, members: Iterable[int], axis: str, delta: float) -> None:
        coords = self.x if axis == "x" else self.y
        before = [(i, self._rally_distance(i, "x"), self._rally_distance(i, "y")) for i in members] if self.check else []
        for i in members:
            coords[i] += delta
        if self.check:
            for i, dx, dy in before:
                if self._rally_distance(i, "x") > dx + EPS or self._rally_distance(i, "y") > dy + EPS:
                    raise AssertionError(f"{self.names[i]} moved away from the rally point")
            overlaps = find_overlaps(self._boxes())
            if overlaps:
                raise AssertionError(f"move produced overlaps {overlaps[:3]}")

    def _boxes(self) -> tuple[PlacedBox, ...]:
        return tuple(
            PlacedBox(n, self.x[i], self.y[i], self.layer[i], self.w[i], self.h[i]) for i, n in enumerate(self.names)
        )

    def placement(self) -> GeometricPlacement:
        return replace(self.g0, boxes=self._boxes())

    # algorithm --------------------------------------------------------

    def max_slide(self, name: str, axis: str) -> tuple[float, str | None]:
        if name not in self.index:
            raise UnknownComponent(name)
        s = self._slide(self.index[name], axis)
        blocker = self.names[s.contacts[0]] if s.contacts else None
        return s.distance, blocker

    def run(self) -> GeometricPlacement:
        move_possible = True
        while move_possible:
            self.passes += 1
            order = self.rng.permutation(len(self.queue.entries))
            self.queue.entries = [self.queue.entries[k] for k in order]
            current = deque(self.queue.entries)
            move_possible = False
            if self.bundles and self._bundle_phase():
                move_possible = True
            while current:
                i, axis = current.popleft()
                if self.queue.blocked(i, axis):
                    continue
                s = self._slide(i, axis)
                if s.limit <= EPS:
                    self.queue.block(i, axis)
                    continue
                if s.distance <= EPS:
                    if any(j in self.queue.immobile for j in s.contacts):
                        self.queue.block(i, axis)
                    continue  # collides with a mobile box: reconsider later
                self._shift([i], axis, s.direction * s.distance)
                self.moves += 1
                move_possible = True
                if self.rng.random() < self.p1:
                    current.appendleft((i, axis))
                else:
                    current.append((i, axis))
            if not move_possible:
                move_possible = self._release_stale()
        return self.placement()

    def _release_stale(self) -> bool:
        """Unblock entries that can move again.  A box stopped by an immobile
        neighbour may regain its original across-axis separation after a
        move along the other axis, which clears the way."""
        released = False
        for axis in self.axes:
            blocked = self.queue.immobile_x if axis == "x" else self.queue.immobile_y
            for i in sorted(blocked - self._preset[axis]):
                if self._slide(i, axis).distance > EPS:
                    blocked.discard(i)
                    self.queue.entries.append((i, axis))
                    released = True
        return released

    def _front(self, i: int, axis: str) -> list[int]:
        s = self._slide(i, axis)
        return s.contacts if s.limit > EPS and s.distance <= EPS else []

    def _bundle(self, root: int, axis: str) -> tuple[list[int], dict[int, list[int]]]:
        """Root plus every box it pushes against, transitively, along axis."""
        members, edges = [root], {}
        todo = [root]
        while todo:
            i = todo.pop()
            edges[i] = self._front(i, axis)
            for j in edges[i]:
                if j not in edges and j not in todo:
                    members.append(j)
                    todo.append(j)
        return members, edges

    def _bundle_phase(self) -> bool:
        moved_any = False
        while True:
            candidates = []
            for i, axis in self.queue.entries:
                members, edges = self._bundle(i, axis)
                if len(members) > 1:
                    candidates.append((len(members), i, axis, members, edges))
            candidates.sort(key=lambda c: -c[0])  # stable: shuffled order breaks ties
            progressed = False
            for _, root, axis, members, edges in candidates:
                if self.queue.blocked(root, axis):
                    continue
                group = set(members)
                slides = {j: self._slide(j, axis, ignore=group) for j in members}
                directions = {s.direction for s in slides.values()}
                distance = min(s.distance for s in slides.values())
                if len(directions) == 1 and 0 not in directions and distance > EPS:
                    self._shift(members, axis, directions.pop() * distance)
                    self.moves += 1
                    self.bundle_moves += 1
                    moved_any = progressed = True
                    break
                if self._block_bundle(members, edges, slides, axis):
                    progressed = True
            if not progressed:
                return moved_any

    def _block_bundle(self, members, edges, slides, axis) -> bool:
        """Block members stopped by the rally or by immobile boxes, then
        everything that pushes against a box that became fully immobile."""
        changed = False
        stuck = []
        for j in members:
            s = slides[j]
            if not self.queue.blocked(j, axis) and (
                s.limit <= EPS or (s.distance <= EPS and any(k in self.queue.immobile for k in s.contacts))
            ):
                self.queue.block(j, axis)
                changed = True
            if j in self.queue.immobile:
                stuck.append(j)
        while stuck:
            k = stuck.pop()
            for j in members:
                if k in edges.get(j, ()) and not self.queue.blocked(j, axis):
                    self.queue.block(j, axis)
                    changed = True
                    if j in self.queue.immobile:
                        stuck.append(j)
        return changed


def max_slide(g: GeometricPlacement, name: str, axis: str) -> tuple[float, str | None]:
    return Squeezer(g).max_slide(name, axis)


def squeeze(
    g: GeometricPlacement, p1: float = 0.5, p2: float | None = None, seed: int = 0, **kwargs
) -> GeometricPlacement:
    return Squeezer(g, p1=p1, p2=p2, seed=seed, **kwargs).run()


def squeeze_bundles(
    g: GeometricPlacement, p1: float = 0.5, p2: float | None = None, seed: int = 0, **kwargs
) -> GeometricPlacement:
    return Squeezer(g, p1=p1, p2=p2, seed=seed, bundles=True, **kwargs).run()
