"""Layout hypergraph: components and wire relations are both hyperedges.

Nodes are pin points; each belongs to exactly one component hyperedge and
is attached to the relation hyperedge of the signal bound at that pin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .yal import Netlist

__all__ = [
    "ComponentEdge",
    "RelationEdge",
    "LayoutHypergraph",
    "NeighborStats",
    "EmptyNetlist",
    "UnknownComponent",
    "from_netlist",
    "from_nets",
    "neighbors",
    "stats",
]


class EmptyNetlist(ValueError):
    pass


class UnknownComponent(KeyError):
    pass


@dataclass(frozen=True)
class ComponentEdge:
    label: str
    nodes: tuple[int, ...]
    width: float
    height: float


@dataclass(frozen=True)
class RelationEdge:
    label: str
    nodes: tuple[int, ...]


@dataclass(frozen=True)
class LayoutHypergraph:
    component_edges: tuple[ComponentEdge, ...]
    relation_edges: tuple[RelationEdge, ...]
    node_owner: tuple[tuple[int, str], ...]  # node id -> (component id, terminal name)
    # per-component sorted neighbour ids; filled by the constructors
    adjacency: tuple[tuple[int, ...], ...] = ()

    @property
    def nodes(self) -> range:
        return range(len(self.node_owner))

    @property
    def m(self) -> int:
        return len(self.component_edges)

    def labels(self) -> list[str]:
        return [c.label for c in self.component_edges]

    def index(self, label: str) -> int:
        for i, c in enumerate(self.component_edges):
            if c.label == label:
                return i
        raise UnknownComponent(label)

    def net_members(self, net_id: int) -> tuple[int, ...]:
        """Distinct component ids on a relation edge, ascending."""
        owners = {self.node_owner[n][0] for n in self.relation_edges[net_id].nodes}
        return tuple(sorted(owners))

    def nets_as_members(self) -> list[tuple[int, ...]]:
        return [self.net_members(k) for k in range(len(self.relation_edges))]


@dataclass(frozen=True)
class NeighborStats:
    blocks: int
    nets: int
    neighbor_min: int
    neighbor_max: int
    neighbor_avg: float

    @property
    def neighbor_avg_rounded(self) -> int:
        # round half up, Table-style integer
        return int(self.neighbor_avg + 0.5)

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.blocks, self.nets, self.neighbor_min, self.neighbor_max, self.neighbor_avg_rounded)

    def to_json(self) -> dict:
        return {
            "blocks": self.blocks,
            "nets": self.nets,
            "neighbors": {
                "min": self.neighbor_min,
                "max": self.neighbor_max,
                "avg": self.neighbor_avg_rounded,
                "avg_exact": self.neighbor_avg,
            },
        }


def from_nets(
    components: Iterable[tuple[str, float, float]],
    nets: Iterable[tuple[str, Iterable[str | tuple[str, str]]]],
) -> LayoutHypergraph:
    """Build a hypergraph from plain data.

    ``components`` yields ``(label, width, height)``; ``nets`` yields
    ``(signal, members)`` where a member is a component label or a
    ``(label, terminal)`` pair.  Nets touching fewer than two distinct
    components are dropped; a member naming no component is an error.
    """
    comps = list(components)
    if not comps:
        raise EmptyNetlist("no placeable blocks")
    ids = {}
    for i, (label, _, _) in enumerate(comps):
        if label in ids:
            raise ValueError(f"duplicate component label {label!r}")
        ids[label] = i

    owner: list[tuple[int, str]] = []
    comp_nodes: list[list[int]] = [[] for _ in comps]
    relations: list[RelationEdge] = []
    for signal, members in nets:
        pins: list[tuple[int, str]] = []
        seen = set()
        for mem in members:
            label, term = (mem, signal) if isinstance(mem, str) else mem
            if label not in ids:
                raise UnknownComponent(label)
            # one pin point per (component, signal) incidence
            if ids[label] in seen:
                continue
            seen.add(ids[label])
            pins.append((ids[label], term))
        if len({c for c, _ in pins}) < 2:
            continue
        node_ids = []
        for cid, term in sorted(pins):
            node_ids.append(len(owner))
            comp_nodes[cid].append(len(owner))
            owner.append((cid, term))
        relations.append(RelationEdge(signal, tuple(node_ids)))

    adj: list[set[int]] = [set() for _ in comps]
    for rel in relations:
        members = {owner[n][0] for n in rel.nodes}
        for a in members:
            adj[a] |= members - {a}

    return LayoutHypergraph(
        component_edges=tuple(
            ComponentEdge(label, tuple(comp_nodes[i]), float(w), float(h))
            for i, (label, w, h) in enumerate(comps)
        ),
        relation_edges=tuple(relations),
        node_owner=tuple(owner),
        adjacency=tuple(tuple(sorted(a)) for a in adj),
    )


def from_netlist(netlist: Netlist) -> LayoutHypergraph:
    blocks = [i for i in netlist.instances if netlist.modules[i.module].placeable]
    comps = []
    pins: dict[str, list[tuple[str, str]]] = {}
    order: list[str] = []
    for inst in blocks:
        mod = netlist.modules[inst.module]
        comps.append((inst.name, mod.width, mod.height))
        for pos, sig in enumerate(inst.signals):
            term = mod.terminals[pos].name if pos < len(mod.terminals) else f"#{pos}"
            if sig not in pins:
                pins[sig] = []
                order.append(sig)
            pins[sig].append((inst.name, term))
    return from_nets(comps, ((sig, pins[sig]) for sig in order))


def neighbors(h: LayoutHypergraph, c: int) -> set[int]:
    if not 0 <= c < h.m:
        raise UnknownComponent(c)
    return set(h.adjacency[c])


def stats(h: LayoutHypergraph) -> NeighborStats:
    counts = [len(a) for a in h.adjacency]
    if not counts:
        raise EmptyNetlist("no components")
    return NeighborStats(
        blocks=h.m,
        nets=len(h.relation_edges),
        neighbor_min=min(counts),
        neighbor_max=max(counts),
        neighbor_avg=sum(counts) / len(counts),
    )
