"""Instance generators shared by the test modules."""
import random

from netdecomp.aggregation import (RootedTree, bound_broadcast, bound_convergecast, bound_min, bound_sum,
                                   pipelined_broadcast, pipelined_convergecast, pipelined_min, pipelined_sum,
                                   plan_channels, sum_width)
from netdecomp.graph import Graph
from netdecomp.sim import ModelConfig


def random_connected_graph(rng: random.Random, n: int, extra: int) -> Graph:
    edges = set()
    for v in range(1, n):
        u = rng.randrange(v)
        edges.add((u, v))
    for _ in range(extra):
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return Graph(n, sorted(edges))


def bfs_tree(g: Graph, root: int, limit: int, rng: random.Random) -> RootedTree:
    """A BFS tree from root over at most `limit` nodes, neighbours visited in random order."""
    parent = {root: -1}
    order = [root]
    for v in order:
        nb = list(g.adj[v])
        rng.shuffle(nb)
        for w in nb:
            if w not in parent and len(parent) < limit:
                parent[w] = v
                order.append(w)
    return RootedTree(root, parent)


def overlapping_instance(seed: int, max_n: int = 200, max_trees: int = 16):
    """(graph, trees, bandwidth) with at most max_trees trees, so P <= 16."""
    rng = random.Random(seed)
    n = rng.randint(1, max_n)
    g = random_connected_graph(rng, n, rng.randint(0, n))
    k = rng.randint(1, max_trees)
    trees = [bfs_tree(g, rng.randrange(n), rng.randint(1, n), rng) for _ in range(k)]
    B = rng.choice([k, k + 3, 32, 64, float("inf")])
    return g, trees, B, rng


def check_aggregation_instance(seed):
    """Faithful sum/min/broadcast/convergecast against direct computation, plus the round bounds."""
    g, trees, B, rng = overlapping_instance(seed)
    cfg = ModelConfig(bandwidth=B, mode="faithful")
    plan = plan_channels(trees, B)
    r = plan.R
    m = rng.randint(1, 12)
    vals = [{v: rng.randrange(1 << m) for v in t.nodes if rng.random() < 0.7} for t in trees]
    size = max(t.size for t in trees)
    M = sum_width(m, size)
    sums, met = pipelined_sum(g, trees, vals, m, plan, cfg)
    assert sums == [sum(vm.values()) % (1 << M) for vm in vals]
    assert met.rounds_total <= bound_sum(r, m, plan.chunk_width(M), size)
    assert met.max_bits <= B
    mins, met = pipelined_min(g, trees, vals, m, plan, cfg)
    assert mins == [min(vm.values()) if vm else None for vm in vals]
    assert met.rounds_total <= bound_min(r, m + 1, plan.chunk_width(m + 1))
    msgs = [rng.randrange(1 << m) for _ in trees]
    rec, met = pipelined_broadcast(g, trees, msgs, m, plan, cfg)
    assert all(rec[i] == {v: msgs[i] for v in t.nodes} for i, t in enumerate(trees))
    assert met.rounds_total <= bound_broadcast(r, m, plan.chunk_width(m))
    cap = rng.randint(1, 4)
    spec = [{v: [rng.randrange(1 << m)] for v in rng.sample(sorted(t.nodes), min(t.size, rng.randint(0, 5)))}
            for t in trees]
    got, met = pipelined_convergecast(g, trees, spec, m, plan, cap, cfg)
    assert got == [sorted(x for xs in s.values() for x in xs)[:cap] for s in spec]
    assert met.rounds_total <= bound_convergecast(r, m, plan.chunk_width(m + 1), cap)
    return trees, plan
