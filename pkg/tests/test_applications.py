import pytest
from hypothesis import given, strategies as st

from netdecomp.applications import (InvalidDecomposition, coloring_via_decomposition, mis_via_decomposition,
                                    parse_coloring, parse_mis)
from netdecomp.decomposition import Decomposition, decompose
from netdecomp.graph import Graph, assign_ids, gen
from netdecomp.sim import ModelConfig
from netdecomp.verify import check_coloring, check_mis

from test_graph import graphs

SUITE = [
    ("path1", lambda: gen("path", n=1)),
    ("k3", lambda: gen("complete", n=3)),
    ("edgeless5", lambda: Graph(5, [])),
    ("star9", lambda: gen("star", n=9)),
    ("grid8", lambda: gen("grid", rows=8, cols=8)),
    ("cycle30", lambda: gen("cycle", n=30)),
    ("tree300", lambda: gen("tree", n=300, seed=4)),
    ("gnp512", lambda: gen("gnp", n=512, p=0.05, seed=2)),
]


def _all_maximal_independent_sets(g):
    """Every maximal independent set of a tiny graph, by subset enumeration."""
    n = g.n
    nb = [0] * n
    for u, v in g.edges:
        nb[u] |= 1 << v
        nb[v] |= 1 << u
    out = set()
    for mask in range(1 << n):
        if any(mask >> v & 1 and nb[v] & mask for v in range(n)):
            continue
        if all(mask >> v & 1 or nb[v] & mask for v in range(n)):
            out.add(frozenset(v for v in range(n) if mask >> v & 1))
    return out


def _setup(g, variant="fast"):
    ids = assign_ids(g)
    return ids, decompose(g, ids, variant, measure=False)


@pytest.mark.parametrize("name,make", SUITE)
def test_mis_suite(name, make):
    g = make()
    ids, d = _setup(g)
    res = mis_via_decomposition(g, ids, d)
    assert check_mis(g, res.selected).ok


@pytest.mark.parametrize("name,make", SUITE)
def test_coloring_suite(name, make):
    g = make()
    ids, d = _setup(g)
    delta = g.max_degree()
    res = coloring_via_decomposition(g, ids, d, delta)
    assert check_coloring(g, res.color, delta + 1).ok
    assert res.palette == delta + 1


def test_edgeless_all_selected():
    g = Graph(5, [])
    ids, d = _setup(g)
    assert mis_via_decomposition(g, ids, d).selected == [0, 1, 2, 3, 4]


def test_triangle():
    g = gen("complete", n=3)
    ids, d = _setup(g)
    assert len(mis_via_decomposition(g, ids, d).selected) == 1
    col = coloring_via_decomposition(g, ids, d, 2).color
    assert sorted(col) == [1, 2, 3]


def test_star_coloring():
    g = gen("star", n=9)
    ids, d = _setup(g)
    col = coloring_via_decomposition(g, ids, d, 8).color
    assert all(col[0] != col[v] for v in range(1, 9))


def test_grid_coloring_five():
    g = gen("grid", rows=8, cols=8)
    ids, d = _setup(g)
    col = coloring_via_decomposition(g, ids, d, 4).color
    assert check_coloring(g, col, 5).ok


@given(graphs(max_n=10), st.sampled_from(["fast", "rg", "slow", "fast-id"]))
def test_mis_brute_force(g, variant):
    ids, d = _setup(g, variant)
    sel = frozenset(mis_via_decomposition(g, ids, d).selected)
    assert sel in _all_maximal_independent_sets(g)


@given(graphs(max_n=20), st.integers(0, 3))
def test_coloring_property(g, slack):
    ids, d = _setup(g)
    delta = g.max_degree() + slack
    res = coloring_via_decomposition(g, ids, d, delta)
    assert check_coloring(g, res.color, delta + 1).ok


def test_delta_too_small():
    g = gen("star", n=5)
    ids, d = _setup(g)
    with pytest.raises(ValueError):
        coloring_via_decomposition(g, ids, d, 3)


def test_invalid_decomposition():
    g = gen("path", n=3)
    ids = assign_ids(g)
    d = Decomposition("fast", 3, ids.b, [1, 1, 1], [0, 1, 2], {c: (c, {c: -1}) for c in range(3)})
    with pytest.raises(InvalidDecomposition):
        mis_via_decomposition(g, ids, d)
    with pytest.raises(InvalidDecomposition):
        coloring_via_decomposition(g, ids, d, 2)


@pytest.mark.parametrize("seed", [1, 2])
def test_modes_agree(seed):
    g = gen("gnp", n=64, p=0.1, seed=seed)
    ids, d = _setup(g)
    faithful = ModelConfig(mode="faithful", bandwidth=32)
    a = mis_via_decomposition(g, ids, d)
    b = mis_via_decomposition(g, ids, d, faithful)
    assert a.selected == b.selected
    assert b.metrics.rounds_total > 0
    delta = g.max_degree()
    c1 = coloring_via_decomposition(g, ids, d, delta)
    c2 = coloring_via_decomposition(g, ids, d, delta, faithful)
    assert c1.color == c2.color


def test_serialization_round_trip():
    g = gen("cycle", n=7)
    ids, d = _setup(g)
    m = mis_via_decomposition(g, ids, d)
    assert parse_mis(m.dumps()) == m.selected
    c = coloring_via_decomposition(g, ids, d, 2)
    assert parse_coloring(c.dumps(), 7) == c.color
    with pytest.raises(ValueError):
        parse_mis("x 1\n")
    with pytest.raises(ValueError):
        parse_coloring("col 9 1\n", 7)
