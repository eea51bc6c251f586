import random

import numpy as np
from hypothesis import given, strategies as st

from netdecomp.carving import BLUE, RED, UNCOLORED, CarveTrace, carve
from netdecomp.decomposition import Decomposition, decompose
from netdecomp.graph import IdAssignment, assign_ids, gen
from netdecomp.verify import (Bounds, all_pairs_hops, brute_force_mis_ok, check_balance, check_carve_trace,
                              check_coloring, check_decomposition, check_mis)

from test_graph import graphs


# --- balance ----------------------------------------------------------------------

def test_balance_examples():
    assert check_balance({0: RED, 1: BLUE}).ok
    rep = check_balance({k: BLUE for k in range(4)})
    assert not rep.ok and "balance" in rep.failures()
    assert check_balance({0: BLUE, 1: BLUE, 2: BLUE, 3: RED}).ok


def test_balance_scope_and_uncolored():
    col = {0: RED, 1: BLUE, 2: BLUE, 3: BLUE, 4: UNCOLORED, 5: BLUE}
    assert check_balance(col).measures["uncolored"] == 1
    assert not check_balance(col, scope=[[1, 2, 3, 5], [0, 4]]).ok
    assert check_balance(col, scope=[[0, 1, 2, 3]]).ok
    # ceil rounding lets a group of 3 be monochromatic; floor does not
    assert check_balance(col, scope=[[1, 2, 3]]).ok
    assert not check_balance(col, scope=[[1, 2, 3]], rounding="floor").ok


def test_balance_floor_rounding():
    col = {0: BLUE, 1: BLUE, 2: BLUE, 3: RED, 4: RED}
    assert check_balance(col).ok
    assert check_balance(col, rounding="floor").ok
    col = {0: BLUE, 1: BLUE, 2: BLUE, 3: BLUE, 4: RED}
    assert check_balance(col).ok           # 4 <= ceil(3.75)
    assert not check_balance(col, rounding="floor").ok


# --- decompositions -------------------------------------------------------------------

def _singleton_decomp(n, colors):
    return Decomposition("fast", n, 1, list(colors), list(range(n)), {v: (v, {v: -1}) for v in range(n)})


def test_k2_valid():
    g = gen("path", n=2)
    d = decompose(g, IdAssignment(1, (0, 1)))
    rep = check_decomposition(g, d, Bounds(D=1, R=1, overlap=1, colors=1))
    assert rep.ok, rep.failures()


def test_adjacent_same_color_witness():
    g = gen("path", n=3)
    rep = check_decomposition(g, _singleton_decomp(3, [1, 1, 2]))
    assert not rep.ok
    assert "0-1" in rep.failures()["nonadjacent"]


def test_weak_diameter_nine():
    g = gen("path", n=10)
    color = [1] + [2 + (v % 2) for v in range(1, 9)] + [1]
    cluster_of = [0] + list(range(1, 9)) + [0]
    trees = {0: (0, {v: v - 1 for v in range(1, 10)})}
    trees.update({v: (v, {v: -1}) for v in range(1, 9)})
    d = Decomposition("fast", 10, 4, color, cluster_of, trees)
    rep = check_decomposition(g, d, Bounds(D=8))
    assert not rep.ok
    assert "weak diameter 9 > 8" in rep.failures()["weak_diameter"]
    assert check_decomposition(g, d, Bounds(D=9)).ok


def test_bad_steiner_trees():
    g = gen("path", n=4)
    d = Decomposition("fast", 4, 2, [1, 1, 1, 1], [0, 0, 0, 0], {0: (0, {1: 0, 3: 1})})
    f = check_decomposition(g, d).failures()
    assert "steiner_edges" in f and "steiner_terminals" in f
    d = Decomposition("fast", 4, 2, [1, 1, 1, 1], [0, 0, 0, 0], {0: (0, {1: 2, 2: 1, 3: 2})})
    assert "steiner_tree" in check_decomposition(g, d).failures()


def test_overlap_and_colors_bounds():
    g = gen("path", n=3)
    d = Decomposition("fast", 3, 2, [1, 2, 1], [0, 1, 2],
                      {0: (0, {0: -1, 1: 0}), 1: (1, {1: -1}), 2: (2, {2: -1, 1: 2})})
    rep = check_decomposition(g, d, Bounds(overlap=1, colors=1))
    assert {"overlap", "colors"} <= set(rep.failures())
    assert check_decomposition(g, d, Bounds(overlap=2, colors=2)).ok


def test_mismatched_n():
    g = gen("path", n=3)
    assert "format" in check_decomposition(g, _singleton_decomp(2, [1, 2])).failures()


@given(graphs(max_n=10), st.integers(0, 10 ** 6))
def test_decomposition_checker_brute_force(g, seed):
    rng = random.Random(seed)
    n = g.n
    cluster_of = [rng.randrange(max(1, n // 2)) for _ in range(n)]
    ccol = {c: rng.randint(1, 3) for c in set(cluster_of)}
    color = [ccol[c] for c in cluster_of]
    # Steiner trees: BFS over all of g from the first member, so relays may be non-members
    trees = {}
    D = all_pairs_hops(g)
    for c in set(cluster_of):
        mem = [v for v in range(n) if cluster_of[v] == c]
        root = mem[0]
        parent = {root: -1}
        order = [root]
        for v in order:
            for w in g.adj[v]:
                if w not in parent:
                    parent[w] = v
                    order.append(w)
        trees[c] = (root, parent)
    d = Decomposition("fast", n, 4, color, cluster_of, trees)
    rep = check_decomposition(g, d)
    adjacent_clash = any(cluster_of[u] != cluster_of[v] and color[u] == color[v] for u, v in g.edges)
    assert ("nonadjacent" in rep.failures()) == adjacent_clash
    connected_members = all(np.isfinite(D[mem[0], v]) for mem in [[v for v in range(n) if cluster_of[v] == c]
                                                                 for c in set(cluster_of)] for v in mem)
    assert ("steiner_terminals" in rep.failures()) == (not connected_members)
    want = max(max(D[u, v] for u in range(n) for v in range(n) if cluster_of[u] == cluster_of[v] == c)
               for c in set(cluster_of))
    assert rep.measures["max_weak_diameter"] == want


# --- MIS / colouring ----------------------------------------------------------------

def test_mis_checker():
    g = gen("path", n=4)
    assert check_mis(g, [0, 2]).ok and check_mis(g, [0, 3]).ok
    assert "independent" in check_mis(g, [0, 1, 3]).failures()
    assert "maximal" in check_mis(g, [0]).failures()


@given(graphs(max_n=10), st.integers(0, 10 ** 6))
def test_mis_checker_brute_force(g, seed):
    rng = random.Random(seed)
    sel = [v for v in range(g.n) if rng.random() < 0.4]
    assert check_mis(g, sel).ok == brute_force_mis_ok(g, sel)


def test_coloring_checker():
    g = gen("complete", n=3)
    assert check_coloring(g, [1, 2, 3], 3).ok
    assert "proper" in check_coloring(g, [1, 1, 3], 3).failures()
    assert "palette" in check_coloring(g, [1, 2, 4], 3).failures()


# --- carve traces and injected faults --------------------------------------------------------

def _k2_trace():
    g = gen("path", n=2)
    return g, carve(g, IdAssignment(1, (0, 1)), [0, 1]).trace


def _forge(trace, records):
    t = CarveTrace(trace.header)
    t.records = list(records)
    return t


def test_k2_trace_passes():
    g, tr = _k2_trace()
    rep = check_carve_trace(g, tr)
    assert rep.ok, rep.failures()


def test_trace_text_round_trip():
    g, tr = _k2_trace()
    assert CarveTrace.loads(tr.dumps()) == tr


def test_forged_token_decrement():
    g = gen("path", n=16)
    tr = carve(g, assign_ids(g, 4), range(16)).trace
    assert check_carve_trace(g, tr).ok
    recs = tr.records
    # a cluster still unfinished when phase 2 starts
    p2 = recs.index(("P", 2))
    finished = {r[1] for r in recs[:p2] if r[0] == "F"}
    gone = {r[1] for r in recs[:p2] if r[0] == "D"}
    c = next(r[1] for r in recs if r[0] == "I" and r[1] not in finished | gone)
    bad = _forge(tr, recs[:p2] + [("T", c, -10 ** 6)] + recs[p2:])
    f = check_carve_trace(g, bad).failures()
    assert "invariant1" in f and "phase 2" in f["invariant1"]


def test_forged_move_to_lower_potential():
    g, tr = _k2_trace()
    recs = tr.records
    k = recs.index(("M", 0, 0, 1, 1))
    bad = _forge(tr, recs[:k + 1] + [("M", 0, 1, 0, 0)] + recs[k + 1:])
    f = check_carve_trace(g, bad).failures()
    assert "invariant2" in f and "phi 4" in f["invariant2"]


def test_forged_steiner_readd():
    g, tr = _k2_trace()
    recs = tr.records
    k = recs.index(("M", 0, 0, 1, 1))
    bad = _forge(tr, recs[:k + 1] + [recs[k]] + recs[k + 1:])
    assert "steiner_tree" in check_carve_trace(g, bad).failures()


def test_forged_extra_kills():
    g = gen("path", n=4)
    tr = carve(g, assign_ids(g), range(4)).trace
    recs = [r for r in tr.records if r[0] != "E"] + [("X", 0, 1), ("X", 1, 1), ("X", 2, 1)]
    assert "kill_bound" in check_carve_trace(g, _forge(tr, recs)).failures()


@given(graphs(max_n=18), st.integers(0, 1000))
def test_trace_checker_accepts_real_traces(g, seed):
    ids = assign_ids(g, 6, "shuffled", seed)
    rep = check_carve_trace(g, carve(g, ids, range(g.n)).trace)
    assert rep.ok, rep.failures()


def test_every_failure_has_a_witness():
    g, tr = _k2_trace()
    recs = tr.records
    k = recs.index(("M", 0, 0, 1, 1))
    rep = check_carve_trace(g, _forge(tr, recs[:k + 1] + [("M", 0, 1, 0, 0), recs[k]] + recs[k + 1:]))
    assert rep.failures() and all(w for w in rep.failures().values())
