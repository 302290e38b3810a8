import random

import pytest
from hypothesis import given, strategies as st

from floorplan3d.eo import GridPlacement, GridShape
from floorplan3d.hypergraph import from_nets
from floorplan3d.squeeze import GeometricPlacement, PlacedBox, RallyPoint
from floorplan3d.wirelength import (
    EmptyNet,
    NetEndpoint,
    UnplacedComponent,
    grid_wirelength,
    net_hpwl,
    total_wirelength,
)
from helpers import pairwise_hpwl


def ep(*pts):
    return [NetEndpoint(k, *p) for k, p in enumerate(pts)]


def test_examples():
    assert net_hpwl(ep((4, 5, 6))) == 0
    assert net_hpwl(ep((0, 0, 0), (3, 4, 1))) == 8
    assert net_hpwl(ep((0, 0, 0), (2, 5, 0), (1, 1, 2))) == 9


def test_empty_net():
    with pytest.raises(EmptyNet):
        net_hpwl([])


coord = st.floats(-1e4, 1e4, allow_nan=False)
points = st.lists(st.tuples(coord, coord, coord), min_size=1, max_size=50)


@given(points)
def test_matches_pairwise_oracle(pts):
    assert net_hpwl(ep(*pts)) == pytest.approx(pairwise_hpwl(pts), rel=1e-12, abs=1e-9)


@given(points, st.tuples(coord, coord, coord))
def test_translation_invariant(pts, shift):
    moved = [tuple(a + b for a, b in zip(p, shift)) for p in pts]
    assert net_hpwl(ep(*moved)) == pytest.approx(net_hpwl(ep(*pts)), abs=1e-6)


@given(points, st.randoms(use_true_random=False))
def test_permutation_invariant(pts, rnd):
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    assert net_hpwl(ep(*shuffled)) == net_hpwl(ep(*pts))


@given(points, st.floats(0, 1))
def test_shrinking_never_increases(pts, f):
    # pull every endpoint towards the first one
    c = pts[0]
    shrunk = [tuple(ci + f * (pi - ci) for pi, ci in zip(p, c)) for p in pts]
    assert net_hpwl(ep(*shrunk)) <= net_hpwl(ep(*pts)) + 1e-6


def _layout(*boxes):
    return GeometricPlacement(tuple(PlacedBox(*b) for b in boxes), 3, RallyPoint(0, 0))


def test_total_uses_centres_and_die_height():
    h = from_nets([("a", 2, 2), ("b", 4, 2), ("c", 1, 1)], [("n1", ["a", "b"]), ("n2", ["a", "b", "c"])])
    g = _layout(("a", 0, 0, 0, 2, 2), ("b", 10, 0, 2, 4, 2), ("c", 0, 20, 1, 1, 1))
    # centres (1,1,0), (12,1,2d), (0.5,20.5,d)
    rep = total_wirelength(h, g, die_height=5)
    assert rep.per_net == {"n1": 11 + 0 + 10, "n2": 11.5 + 19.5 + 10}
    assert rep.total == sum(rep.per_net.values())
    assert total_wirelength(h, g).per_net["n1"] == 13
    doc = rep.to_json()
    assert doc["total"] == rep.total and doc["die_height"] == 5 and doc["per_net"]["n1"] == 21


def test_identical_centres_give_zero():
    h = from_nets([("a", 2, 2), ("b", 2, 2)], [("n", ["a", "b"])])
    g = GeometricPlacement((PlacedBox("a", 0, 0, 0, 2, 2), PlacedBox("b", 0, 0, 1, 2, 2)), 2, RallyPoint(0, 0))
    assert total_wirelength(h, g, die_height=0).total == 0


def test_unplaced_component():
    h = from_nets([("a", 2, 2), ("b", 2, 2)], [("n", ["a", "b"])])
    with pytest.raises(UnplacedComponent):
        total_wirelength(h, _layout(("a", 0, 0, 0, 2, 2)))


def test_grid_examples():
    h = from_nets([("a", 1, 1), ("b", 1, 1), ("c", 1, 1)], [("n", ["a", "b", "c"]), ("m", ["a", "b"])])
    column = GridPlacement(GridShape(1, 3, 2), ((0, 0, 0), (0, 2, 0), (0, 1, 1)))
    assert grid_wirelength(h, column) == (2 + 1) + 2
    adj = GridPlacement(GridShape(2, 2, 1), ((0, 0, 0), (1, 0, 0), (1, 1, 0)))
    assert grid_wirelength(h, adj) == 2 + 1


def test_grid_matches_pairwise_oracle():
    for seed in range(100):
        r = random.Random(seed)
        m = r.randint(2, 12)
        shape = GridShape(4, 4, 3)
        cells = r.sample(list(shape.cells()), m)
        nets = [r.sample(range(m), r.randint(2, m)) for _ in range(r.randint(1, 8))]
        h = from_nets([(f"c{i}", 1, 1) for i in range(m)], [(f"n{k}", [f"c{i}" for i in net]) for k, net in enumerate(nets)])
        expected = sum(pairwise_hpwl([cells[i] for i in net]) for net in nets)
        assert grid_wirelength(h, GridPlacement(shape, tuple(cells))) == expected
