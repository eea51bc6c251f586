import pytest
from hypothesis import given, strategies as st

from netdecomp.graph import (Graph, GraphFormatError, SpecError, assign_ids, format_graph, gen, generate,
                             parse_graph, parse_spec, load_graph_with_ids, save_graph)


def test_complete_triangle():
    g = gen("complete", n=3)
    assert g.n == 3 and sorted(g.edges) == [(0, 1), (0, 2), (1, 2)]


def test_path_four():
    assert sorted(gen("path", n=4).edges) == [(0, 1), (1, 2), (2, 3)]


def test_gnp_p_zero_is_empty():
    g = gen("gnp", n=100, p=0, seed=1)
    assert g.n == 100 and g.m == 0


def test_gnp_p_out_of_range():
    with pytest.raises(SpecError):
        gen("gnp", n=10, p=1.5, seed=1)


def test_ids_sequential_and_padded():
    g = gen("path", n=4)
    a = assign_ids(g, 2, "sequential")
    assert a.ids == (0, 1, 2, 3) and a.b == 2
    p = assign_ids(g, 10, "padded")
    assert p.ids == (0, 1, 2, 3) and p.b == 10


@pytest.mark.parametrize("scheme", ["sequential", "shuffled", "padded"])
def test_ids_width_too_small(scheme):
    with pytest.raises(SpecError, match="2\\^1 < 3"):
        assign_ids(gen("path", n=3), 1, scheme)


def test_shuffled_is_a_seeded_permutation():
    g = gen("path", n=50)
    a, b = assign_ids(g, None, "shuffled", 4), assign_ids(g, None, "shuffled", 4)
    assert a == b and sorted(a.ids) == list(range(50))
    assert assign_ids(g, None, "shuffled", 5).ids != a.ids


def test_parse_k2_and_single():
    g, _ = parse_graph("p 2 1\ne 0 1")
    assert g.n == 2 and list(g.edges) == [(0, 1)]
    g1, _ = parse_graph("p 1 0")
    assert g1.n == 1 and g1.m == 0


@pytest.mark.parametrize("text,line", [
    ("p 2 1\ne 0 5", 2),
    ("p 3 2\ne 0 1\ne 1 0", 3),
    ("p 2 1\nx 0 1", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(GraphFormatError) as ei:
        parse_graph(text)
    assert str(line) in str(ei.value)


def test_comments_and_id_sidecar(tmp_path):
    g = gen("cycle", n=5)
    ids = assign_ids(g, 9, "shuffled", 2)
    path = tmp_path / "c.txt"
    save_graph(g, path, ids)
    text = "# a comment\n" + path.read_text()
    g2, ids2 = parse_graph(text)
    assert g2.edges == g.edges and ids2.ids == ids.ids and ids2.b == 9
    g3, ids3 = load_graph_with_ids(path)
    assert g3.edges == g.edges and ids3.ids == ids.ids


def test_spec_strings():
    s = parse_spec("gen:gnp:n=20,p=0.2", 3)
    assert s.family == "gnp" and s.seed == 3
    assert generate(s).edges == generate(parse_spec("gen:gnp:n=20,p=0.2", 3)).edges
    assert parse_spec("some/file.txt").family == "file"
    with pytest.raises(SpecError):
        parse_spec("gen:hypercube:n=3")
    with pytest.raises(SpecError):
        parse_spec("gen:path:n")


@st.composite
def graphs(draw, max_n=30):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=60)) if pairs else []
    return Graph(n, chosen)


@given(graphs())
def test_adjacency_sorted_and_symmetric(g):
    deg = [0] * g.n
    for u, v in g.edges:
        deg[u] += 1
        deg[v] += 1
    for v in range(g.n):
        assert list(g.adj[v]) == sorted(g.adj[v])
        assert len(g.adj[v]) == deg[v]
        for w in g.adj[v]:
            assert v in g.adj[w]


@given(graphs(), st.integers(0, 3))
def test_round_trip(g, extra):
    ids = assign_ids(g, g.n.bit_length() + extra, "shuffled", extra)
    g2, ids2 = parse_graph(format_graph(g, ids))
    assert g2.n == g.n and sorted(g2.edges) == sorted(g.edges)
    assert ids2.ids == ids.ids and ids2.b == ids.b


@given(st.integers(2, 80), st.floats(0, 1), st.integers(0, 2 ** 63))
def test_gnp_deterministic(n, p, seed):
    a = gen("gnp", n=n, p=p, seed=seed)
    b = gen("gnp", n=n, p=p, seed=seed)
    assert a.edges == b.edges
    assert all(u < v for u, v in a.edges)


def test_tree_family_is_a_tree():
    g = gen("tree", n=40, seed=9)
    assert g.m == 39
