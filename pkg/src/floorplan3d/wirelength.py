"""Half-perimeter wire-length extended to three axes.

Per net: (max x - min x) + (max y - min y) + (max z - min z) over the
endpoint positions.  Endpoints are component box centres; z is the layer
index times the die height.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .eo import GridPlacement
    from .hypergraph import LayoutHypergraph
    from .squeeze import GeometricPlacement

__all__ = [
    "NetEndpoint",
    "WirelengthReport",
    "EmptyNet",
    "UnplacedComponent",
    "NetIndex",
    "net_hpwl",
    "total_wirelength",
    "grid_wirelength",
]


class EmptyNet(ValueError):
    pass


class UnplacedComponent(KeyError):
    pass


@dataclass(frozen=True)
class NetEndpoint:
    component: int | str
    cx: float
    cy: float
    cz: float


@dataclass(frozen=True)
class WirelengthReport:
    per_net: dict[str, float]
    total: float
    die_height: float = 1.0

    def to_json(self, per_net: bool = True) -> dict:
        out: dict = {"total": self.total, "die_height": self.die_height, "nets": len(self.per_net)}
        if per_net:
            out["per_net"] = dict(self.per_net)
        return out


def net_hpwl(endpoints: Sequence[NetEndpoint]) -> float:
    if not endpoints:
        raise EmptyNet("net has no endpoints")
    xs = [e.cx for e in endpoints]
    ys = [e.cy for e in endpoints]
    zs = [e.cz for e in endpoints]
    return (max(xs) - min(xs)) + (max(ys) - min(ys)) + (max(zs) - min(zs))


class NetIndex:
    """Padded member matrix so all nets of a hypergraph evaluate in one shot."""

    def __init__(self, nets: Sequence[Sequence[int]]):
        self.count = len(nets)
        width = max((len(n) for n in nets), default=1)
        self.members = np.zeros((self.count, max(width, 1)), dtype=np.intp)
        self.mask = np.zeros_like(self.members, dtype=bool)
        for k, net in enumerate(nets):
            self.members[k, : len(net)] = net
            self.mask[k, : len(net)] = True

    @classmethod
    def of(cls, h: LayoutHypergraph) -> NetIndex:
        return cls(h.nets_as_members())

    def per_net(self, positions: np.ndarray) -> np.ndarray:
        """Wire-length of every net given an (m, 3) array of endpoint positions."""
        if self.count == 0:
            return np.zeros(0)
        pts = positions[self.members]  # (nets, k, 3)
        mask = self.mask[:, :, None]
        hi = np.where(mask, pts, -np.inf).max(axis=1)
        lo = np.where(mask, pts, np.inf).min(axis=1)
        return (hi - lo).sum(axis=1)


def _centres(h: LayoutHypergraph, g: GeometricPlacement, die_height: float) -> np.ndarray:
    by_name = {b.name: b for b in g.boxes}
    pos = np.empty((h.m, 3))
    for i, comp in enumerate(h.component_edges):
        box = by_name.get(comp.label)
        if box is None:
            raise UnplacedComponent(comp.label)
        pos[i] = (box.x + box.width / 2, box.y + box.height / 2, box.layer * die_height)
    return pos


def total_wirelength(
    h: LayoutHypergraph, g: GeometricPlacement, die_height: float = 1.0
) -> WirelengthReport:
    pos = _centres(h, g, die_height)
    values = NetIndex.of(h).per_net(pos)
    per_net = {rel.label: float(v) for rel, v in zip(h.relation_edges, values)}
    return WirelengthReport(per_net, float(sum(per_net.values())), die_height)


def grid_wirelength(h: LayoutHypergraph, p: GridPlacement) -> float:
    if len(p.cells) != h.m:
        raise UnplacedComponent(f"{h.m - len(p.cells)} components have no cell")
    pos = np.asarray(p.cells, dtype=float).reshape(h.m, 3)
    return float(NetIndex.of(h).per_net(pos).sum())
