"""Balanced red/blue colourings and the log-star MIS underneath them.

linial_mis runs on a virtual graph of bounded degree:

  1. Linial reduction.  A colour c >= q^2 is read as a polynomial of degree d
     over F_q (its base-q digits) and replaced by q^2 + x*q + p_c(x) for the
     first x where no recoloured neighbour's polynomial agrees.  Colours below
     q^2 are kept, so small identifiers pass through unchanged whatever their
     declared width.  Steps repeat while they shrink the palette.
  2. Kuhn-Wattenhofer: blocks of 2D colours (D = delta + 1) are folded to D
     colours in D rounds, level by level, starting from the fixed palette
     K_FIX(delta) so the round count of this stage never depends on b.
  3. D rounds of colour-class greedy MIS.

The node and cluster colourings follow the out-edge / heavy-light / MIS-of-
H'^2 construction; heavy clusters pair tokens along their Steiner tree.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ._util import ceil_div, lg, log_star
from .aggregation import RootedTree, bound_broadcast, bound_convergecast, bound_min
from .graph import Graph, IdAssignment
from .sim import ModelConfig, NodeProgram, RoundMetrics, declared, run_protocol

RED, BLUE, UNCOLORED = 0, 1, -1
HEAVY = 10                # in-degree that makes an entity heavy
DELTA_BOUND = 121         # virtual degree bound for MIS of H'^2
LINIAL_A = 4              # declared slope of rounds in log* b (criterion-style bound)
NODE_FIXED_ROUNDS = 12    # node lemma rounds outside the MIS
CAP = 11                  # incoming-edge descriptors kept per cluster


class DegreeError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


# --- number theory --------------------------------------------------------------

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


def _is_prime(x: int) -> bool:
    """Miller-Rabin; the fixed bases are a proof below 3.3e24 and a strong test above."""
    if x < 2:
        return False
    for p in _MR_BASES:
        if x % p == 0:
            return x == p
    d, s = x - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        y = pow(a, d, x)
        if y in (1, x - 1):
            continue
        for _ in range(s - 1):
            y = y * y % x
            if y == x - 1:
                break
        else:
            return False
    return True


def next_prime(x: int) -> int:
    """Smallest prime strictly greater than x."""
    y = x + 1
    while not _is_prime(y):
        y += 1
    return y


def _iroot_ceil(K: int, k: int) -> int:
    """Smallest x >= 1 with x**k >= K."""
    if K <= 1:
        return 1
    x = 1 << -(-K.bit_length() // k)      # an upper bound, then integer Newton down
    while True:
        y = ((k - 1) * x + K // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k < K:
        x += 1
    while x > 1 and (x - 1) ** k >= K:
        x -= 1
    return x


def k_fix(delta: int) -> int:
    q = next_prime(2 * delta)
    return 2 * q * q


def linial_schedule(b: int, delta: int) -> List[Tuple[int, int, int]]:
    """Reduction steps (palette before, d, q) starting from 2^b colours."""
    K = 1 << b
    steps = []
    while True:
        # next_prime is monotone, so compare lower bounds and take the first d reaching the best prime
        lbs = []
        d = 2
        while True:
            lbs.append((d, max(delta * d, _iroot_ceil(K, d + 1) - 1)))
            if (delta * d) ** (d + 1) >= K:
                break
            d += 1
        q = next_prime(min(lb for _, lb in lbs))
        best = next((d, q) for d, lb in lbs if lb < q)
        d, q = best
        if 2 * q * q >= K:
            return steps
        steps.append((K, d, q))
        K = 2 * q * q


def kw_levels(delta: int) -> List[int]:
    """Palette sizes entering each Kuhn-Wattenhofer level."""
    D = delta + 1
    K = k_fix(delta)
    out = []
    while K > D:
        out.append(K)
        K = ceil_div(K, 2 * D) * D
    return out


def _digits(c: int, q: int, d: int) -> List[int]:
    out = []
    for _ in range(d + 1):
        c, r = divmod(c, q)
        out.append(r)
    return out


def _peval(dig: Sequence[int], x: int, q: int) -> int:
    acc = 0
    for a in reversed(dig):
        acc = (acc * x + a) % q
    return acc


def linial_recolor(c: int, nbr: Iterable[int], d: int, q: int) -> int:
    """One reduction step for a single node."""
    qq = q * q
    if c < qq:
        return c
    mine = _digits(c, q, d)
    others = [_digits(x, q, d) for x in nbr if x >= qq]
    for x in range(q):
        v = _peval(mine, x, q)
        if all(_peval(o, x, q) != v for o in others):
            return qq + x * q + v
    raise AssertionError("no free evaluation point; degree bound violated")


def _kw_pick(c: int, nbr: Iterable[int], D: int) -> int:
    blk, off = divmod(c, 2 * D)
    used = {x % (2 * D) for x in nbr if x // (2 * D) == blk}
    for o in range(D):
        if o not in used:
            return blk * 2 * D + o
    raise AssertionError("no free low colour in the block")


def _fold(c: int, D: int) -> int:
    blk, off = divmod(c, 2 * D)
    return blk * D + off


def mis_schedule(b: int, delta: int):
    D = delta + 1
    ops = [("linial", d, q) for _K, d, q in linial_schedule(b, delta)]
    for lvl, _K in enumerate(kw_levels(delta)):
        for t in range(D, 2 * D):
            ops.append(("kw", t, t == 2 * D - 1))
    for k in range(D):
        ops.append(("mis", k, None))
    return ops


def mis_rounds(b: int, delta: int = DELTA_BOUND) -> int:
    return len(mis_schedule(b, delta))


def linial_c(delta: int = DELTA_BOUND) -> int:
    """Additive constant of the declared MIS bound: the b-free KW and greedy stages."""
    return (len(kw_levels(delta)) + 1) * (delta + 1)


def mis_round_bound(b: int, delta: int = DELTA_BOUND) -> int:
    """Declared bound LINIAL_A * log*(b) + linial_c on virtual MIS rounds."""
    return LINIAL_A * log_star(b) + linial_c(delta)


class _LinialProgram(NodeProgram):
    def __init__(self, ops, D, width):
        self.ops = ops
        self.D = D
        self.width = width

    def _msg(self, st):
        return format(st["c"], f"0{self.width}b") + ("1" if st["in"] else "0")

    def init(self, node, ident, degree, params):
        st = {"c": ident, "in": False, "r": 0, "nbrs": params[node]}
        return st, {w: self._msg(st) for w in st["nbrs"]}

    def transition(self, st, inbox):
        op = self.ops[st["r"]]
        st["r"] += 1
        cols = [int(m[:-1], 2) for m in inbox.values()]
        flags = [m[-1] == "1" for m in inbox.values()]
        kind = op[0]
        D = self.D
        if kind == "linial":
            st["c"] = linial_recolor(st["c"], cols, op[1], op[2])
        elif kind == "kw":
            if st["c"] % (2 * D) == op[1]:
                st["c"] = _kw_pick(st["c"], cols, D)
            if op[2]:
                st["c"] = _fold(st["c"], D)
        else:
            if st["c"] == op[1] and not any(flags):
                st["in"] = True
        done = st["r"] == len(self.ops)
        return st, ({} if done else {w: self._msg(st) for w in st["nbrs"]}), done

    def output(self, st):
        return st["in"]


def linial_mis(gv: Graph, ids: IdAssignment, cfg: ModelConfig = ModelConfig(),
               delta: int = DELTA_BOUND, relay: int = 1, label: str = "mis"):
    """Maximal independent set of the virtual graph gv.

    Returns (sorted node list, metrics).  Every virtual round is billed as
    `relay` real rounds (2 when gv is a square graph simulated by relaying).
    """
    if gv.n and gv.max_degree() > delta:
        raise DegreeError(f"virtual degree {gv.max_degree()} exceeds the bound {delta}")
    ops = mis_schedule(ids.b, delta)
    D = delta + 1
    if cfg.faithful:
        width = max(ids.b, (k_fix(delta) - 1).bit_length(), 1)
        for _K, d, q in linial_schedule(ids.b, delta):
            width = max(width, (2 * q * q - 1).bit_length())
        outs, met = run_protocol(gv, ids, _LinialProgram(ops, D, width),
                                 ModelConfig(mode=cfg.mode), params=gv.adj, label=label)
        sel = [v for v in range(gv.n) if outs[v]]
        if gv.n == 0:
            met = RoundMetrics(mode=cfg.mode)
        virt = met.rounds_total
    else:
        sel = _linial_logical(gv, ids, ops, D)
        virt = len(ops) if gv.n else 0
    return sel, declared(cfg.mode, virt * relay, label)


def _linial_logical(gv: Graph, ids: IdAssignment, ops, D: int) -> List[int]:
    n = gv.n
    adj = gv.adj
    col = [ids[v] for v in range(n)]
    for op in ops:
        if op[0] == "linial":
            col = [linial_recolor(col[v], [col[w] for w in adj[v]], op[1], op[2]) for v in range(n)]
            continue
        if op[0] == "kw":
            t, last = op[1], op[2]
            new = list(col)
            for v in range(n):
                if col[v] % (2 * D) == t:
                    new[v] = _kw_pick(col[v], [col[w] for w in adj[v]], D)
            col = [_fold(c, D) for c in new] if last else new
            continue
        break
    # colour-class greedy, classes 0..D-1
    ins = [False] * n
    for v in sorted(range(n), key=lambda x: col[x]):
        if not any(ins[w] for w in adj[v]):
            ins[v] = True
    return [v for v in range(n) if ins[v]]


# --- shared pieces -------------------------------------------------------------

@dataclass
class RBColoring:
    color: Dict[int, int]
    metrics: RoundMetrics
    info: Dict[str, object] = field(default_factory=dict)

    def count(self, col: int) -> int:
        return sum(1 for c in self.color.values() if c == col)


def _split(ents: Sequence[int], key) -> Dict[int, int]:
    """Blue for the first ceil(k/2) entities in ascending key order, red for the rest."""
    order = sorted(ents, key=key)
    h = ceil_div(len(order), 2)
    return {e: (BLUE if k < h else RED) for k, e in enumerate(order)}


def _square(nodes: List[int], adj: Dict[int, set]) -> Graph:
    """(H')^2 on `nodes` (indices into the list)."""
    idx = {v: k for k, v in enumerate(nodes)}
    edges = set()
    for v in nodes:
        near = set(adj[v])
        for w in adj[v]:
            near |= adj[w]
        near.discard(v)
        for w in near:
            a, b = idx[v], idx[w]
            if a < b:
                edges.add((a, b))
    return Graph(len(nodes), edges)


def _nearest_center(nodes: List[int], adj: Dict[int, set], centers: Iterable[int], key) -> Dict[int, int]:
    """Multi-source BFS in H'; ties go to the smallest center key."""
    own = {c: c for c in centers}
    frontier = sorted(own, key=key)
    dist = 0
    while frontier:
        dist += 1
        nxt: Dict[int, int] = {}
        for u in frontier:
            for w in adj[u]:
                if w in own:
                    continue
                c = own[u]
                if w not in nxt or key(c) < key(nxt[w]):
                    nxt[w] = c
        own.update(nxt)
        frontier = sorted(nxt, key=key)
    missing = [v for v in nodes if v not in own]
    if missing:
        raise AssertionError(f"nodes {missing[:3]} have no center")
    return own


def _light_groups(light: List[int], hadj: Dict[int, set], key, sub_ids: IdAssignment,
                  cfg: ModelConfig, delta: int):
    """MIS of H'^2 on the non-isolated light entities, nearest-center groups, balanced split."""
    gsq = _square(light, hadj)
    sel, met = linial_mis(gsq, sub_ids, cfg, delta=delta, relay=2, label="mis")
    centers = [light[k] for k in sel]
    own = _nearest_center(light, hadj, centers, key)
    groups: Dict[int, List[int]] = {}
    for v in light:
        groups.setdefault(own[v], []).append(v)
    color: Dict[int, int] = {}
    for c, mem in groups.items():
        color.update(_split(mem, key))
    return color, groups, met


def _width(P: int, B: float, m: int) -> int:
    if B == math.inf:
        return max(m, 1)
    return max(1, int(B) // max(P, 1))


# --- node lemma -------------------------------------------------------------------

def balanced_color_nodes(g: Graph, ids: IdAssignment, cfg: ModelConfig = ModelConfig(),
                         delta: int = DELTA_BOUND) -> RBColoring:
    """Red/blue colouring of all nodes with every class at most floor(3n/4)."""
    n = g.n
    iso = [v for v in range(n) if not g.adj[v]]
    if iso:
        raise PreconditionError(f"node {iso[0]} is isolated")
    key = lambda v: ids[v]
    out = [min(g.adj[v], key=key) for v in range(n)]
    indeg = np.bincount(np.asarray(out, dtype=np.int64), minlength=n) if n else np.zeros(0, dtype=np.int64)
    heavy = indeg >= HEAVY
    hadj: Dict[int, set] = {v: set() for v in range(n) if not heavy[v]}
    for v in range(n):
        w = out[v]
        if not heavy[v] and not heavy[w]:
            hadj[v].add(w)
            hadj[w].add(v)
    light = sorted((v for v in hadj if hadj[v]), key=key)
    lonely = [v for v in hadj if not hadj[v]]
    color: Dict[int, int] = {}
    stars: Dict[int, List[int]] = {int(h): [int(h)] for h in np.nonzero(heavy)[0]}
    for v in lonely:
        if not heavy[out[v]]:
            raise AssertionError(f"isolated light node {v} points to light node {out[v]}")
        stars[out[v]].append(v)
    for h, mem in stars.items():
        color.update(_split(mem, key))
    met = declared(cfg.mode, 0, "local")
    groups: Dict[int, List[int]] = {}
    if light:
        sub = IdAssignment(ids.b, tuple(ids[v] for v in light), ids.scheme)
        c2, groups, m2 = _light_groups(light, hadj, key, sub, cfg, delta)
        color.update(c2)
        met = m2
    else:
        met = declared(cfg.mode, 2 * mis_rounds(ids.b, delta), "mis")
    met.absorb(declared(cfg.mode, NODE_FIXED_ROUNDS, "local"))
    info = {"heavy": int(heavy.sum()), "stars": len(stars), "groups": len(groups),
            "group_sizes": sorted(len(x) for x in groups.values()), "group_members": groups,
            "out_edge": out}
    return RBColoring(color, met, info)


# --- cluster lemma ------------------------------------------------------------

def _tree_stats(trees: Dict[int, RootedTree]) -> Tuple[int, int]:
    R = max((t.r for t in trees.values()), default=0)
    load: Dict[Tuple[int, int], int] = {}
    for t in trees.values():
        for v, p in t.edges():
            e = (min(v, p), max(v, p))
            load[e] = load.get(e, 0) + 1
    return R, max(load.values(), default=1)


def cluster_round_cost(R: int, P: int, B: float, b: int) -> Dict[str, int]:
    """Declared price of the cluster-level steps."""
    m = 3 * b
    w = _width(P, B, m)
    one = 1 + bound_convergecast(R, b, _width(P, B, b), CAP) + bound_broadcast(R, CAP * b, _width(P, B, CAP * b))
    return {
        "out_edge": 1 + bound_min(R, m, w) + bound_broadcast(R, m, w),
        "heavy": bound_convergecast(R, m, w, CAP) + bound_broadcast(R, 1 + CAP * m, _width(P, B, 1 + CAP * m)),
        "virtual_round": one,
        "pairing": 2 * R + 2,
        "deliver": 1 + bound_convergecast(R, 1, _width(P, B, 1), 1) + bound_broadcast(R, 1, 1),
    }


def _pair_tokens(tree: RootedTree, tokens: Dict[int, List[tuple]]) -> Dict[tuple, int]:
    """Bottom-up pairing; the smaller key of a pair is blue, odd leftovers move up."""
    got: Dict[tuple, int] = {}
    carry: Dict[int, List[tuple]] = {}
    order = sorted(tree.nodes, key=lambda v: -tree.depth[v])
    for v in order:
        here = sorted(tokens.get(v, []) + carry.pop(v, []))
        for k in range(0, len(here) - 1, 2):
            got[here[k]] = BLUE
            got[here[k + 1]] = RED
        if len(here) % 2:
            left = here[-1]
            p = tree.parent[v]
            if p < 0:
                got[left] = BLUE
            else:
                carry.setdefault(p, []).append(left)
    return got


def balanced_color_clusters(g: Graph, ids: IdAssignment, owner, cids: Dict[int, int], id_bits: int,
                            trees: Dict[int, RootedTree], cfg: ModelConfig = ModelConfig(),
                            delta: int = DELTA_BOUND) -> RBColoring:
    """Colour clusters so every colour holds at most 3/4 of each component.

    owner: array node -> cluster handle (-1 outside every cluster).
    cids: handle -> identifier (id_bits wide).  trees: handle -> Steiner tree
    containing every node the handle owns.
    """
    owner = np.asarray(owner, dtype=np.int64)
    handles = sorted(cids)
    if not handles:
        return RBColoring({}, declared(cfg.mode, 0, "cluster_color"))
    src, dst = g.arcs
    a, b2 = owner[src], owner[dst]
    sel = (a >= 0) & (b2 >= 0) & (a != b2)
    src, dst, a, b2 = src[sel], dst[sel], a[sel], b2[sel]
    # out-edge: smallest <C'.ID, w.ID, w'.ID>
    best: Dict[int, tuple] = {}
    nid = ids.ids
    for w, w2, c, c2 in zip(src.tolist(), dst.tolist(), a.tolist(), b2.tolist()):
        k = (cids[c2], nid[w], nid[w2], c2, w, w2)
        if c not in best or k < best[c]:
            best[c] = k
    lone = [c for c in handles if c not in best]
    if lone:
        raise PreconditionError(f"cluster {lone[0]} has no neighbouring cluster")
    out = {c: best[c][3] for c in handles}
    indeg: Dict[int, int] = {c: 0 for c in handles}
    for c in handles:
        indeg[out[c]] += 1
    heavy = {c for c in handles if indeg[c] >= HEAVY}
    hadj: Dict[int, set] = {c: set() for c in handles if c not in heavy}
    for c in handles:
        d = out[c]
        if c not in heavy and d not in heavy:
            hadj[c].add(d)
            hadj[d].add(c)
    key = lambda c: cids[c]
    light = sorted((c for c in hadj if hadj[c]), key=key)
    lonely = sorted((c for c in hadj if not hadj[c]), key=key)
    color: Dict[int, int] = {}
    groups: Dict[int, List[int]] = {}
    R, P = _tree_stats(trees)
    cost = cluster_round_cost(R, P, cfg.bandwidth, id_bits)
    met = declared(cfg.mode, cost["out_edge"], "out_edge")
    met.absorb(declared(cfg.mode, cost["heavy"], "heavy"))
    if light:
        sub = IdAssignment(id_bits, tuple(cids[c] for c in light), "cluster")
        c2, groups, m2 = _light_groups(light, hadj, key, sub, cfg, delta)
        color.update(c2)
        met.absorb(declared(cfg.mode, m2.rounds_total * cost["virtual_round"], "mis"))
    else:
        met.absorb(declared(cfg.mode, 2 * mis_rounds(id_bits, delta) * cost["virtual_round"], "mis"))
    # heavy clusters pair tokens for themselves and their lonely light in-neighbours
    tokens: Dict[int, Dict[int, List[tuple]]] = {h: {} for h in heavy}
    whose: Dict[tuple, int] = {}
    for c in lonely:
        h = out[c]
        if h not in heavy:
            raise AssertionError(f"lonely light cluster {c} points to light cluster {h}")
        _cid, idw, idw2, _c2, w, w2 = best[c]
        if w2 not in trees[h].parent:
            raise AssertionError(f"endpoint {w2} is outside the tree of {h}")
        tok = (cids[c], idw, idw2)
        tokens[h].setdefault(w2, []).append(tok)
        whose[tok] = c
    for h in sorted(heavy, key=key):
        t = trees[h]
        tok = (cids[h], -1, -1)
        tokens[h].setdefault(t.root, []).append(tok)
        whose[tok] = h
        for k, col in _pair_tokens(t, tokens[h]).items():
            color[whose[k]] = col
    met.absorb(declared(cfg.mode, cost["pairing"] + cost["deliver"], "pairing"))
    missing = [c for c in handles if c not in color]
    if missing:
        raise AssertionError(f"clusters {missing[:3]} left without a colour")
    info = {"heavy": len(heavy), "groups": len(groups), "lonely": len(lonely), "R": R, "P": P}
    return RBColoring(color, met, info)


# --- per-level partial colouring -------------------------------------------------

def fast_id_radius(n: int, b: int) -> int:
    """h * lg(n)^2 for the smallest integer h with h*lg^2 >= 200 (lg + b)^2."""
    L2 = lg(n) ** 2
    h = ceil_div(200 * (lg(n) + b) ** 2, L2)
    return h * L2


def _expand(indptr, indices, frontier):
    """All arcs (u, w) leaving the frontier."""
    cnt = indptr[frontier + 1] - indptr[frontier]
    s = np.repeat(frontier, cnt)
    offs = np.arange(int(cnt.sum())) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    return s, indices[np.repeat(indptr[frontier], cnt) + offs]


def extend_clusters(g: Graph, ids: IdAssignment, allowed: np.ndarray, sources: Dict[int, List[int]],
                    cids: Dict[int, int], radius: int):
    """Simultaneous BFS from each cluster inside the allowed node set.

    Returns (owner array, bfs parent array, depth array).  A node reached in
    the same round by several clusters goes to the smallest cluster
    identifier, then to the smallest sender identifier.
    """
    n = g.n
    owner = np.full(n, -1, dtype=np.int64)
    par = np.full(n, -1, dtype=np.int64)
    depth = np.full(n, -1, dtype=np.int64)
    for c, mem in sources.items():
        owner[mem] = c
        depth[mem] = 0
    if not sources:
        return owner, par, depth
    indptr, indices = g.csr
    hcid = {c: cids[c] for c in sources}
    frontier = np.nonzero(owner >= 0)[0]
    d = 0
    nodeid_rank = ids.rank
    while len(frontier) and d < radius:
        d += 1
        s, t = _expand(indptr, indices, frontier)
        ok = allowed[t] & (owner[t] < 0)
        s, t = s[ok], t[ok]
        if len(t) == 0:
            break
        crank = np.asarray([hcid[c] for c in owner[s].tolist()], dtype=object)
        order = sorted(range(len(t)), key=lambda k: (t[k], crank[k], nodeid_rank[s[k]]))
        seen = set()
        new = []
        for k in order:
            x = int(t[k])
            if x in seen:
                continue
            seen.add(x)
            owner[x] = owner[s[k]]
            par[x] = s[k]
            depth[x] = d
            new.append(x)
        frontier = np.asarray(sorted(new), dtype=np.int64)
    return owner, par, depth


def _extended_tree(base: RootedTree, region: List[int], par: np.ndarray) -> RootedTree:
    parent = dict(base.parent)
    for v in region:
        if v not in parent:
            parent[v] = int(par[v])
    return RootedTree(base.root, parent)


def partial_color_levels(g: Graph, ids: IdAssignment, cl: np.ndarray, level: Dict[int, int],
                         cids: Dict[int, int], id_bits: int, trees: Dict[int, RootedTree], radius: int,
                         cfg: ModelConfig = ModelConfig(), levels: Optional[Iterable[int]] = None,
                         delta: int = DELTA_BOUND) -> RBColoring:
    """Per level i: extended clusters by BFS inside U_{i+}, then the cluster lemma.

    cl: node -> cluster handle (-1 for dead or outside).  level: handle -> level
    for every live cluster.  Clusters whose extended cluster has no neighbour
    stay uncoloured.
    """
    all_levels = sorted(set(level.values()))
    todo = all_levels if levels is None else sorted(set(levels))
    if cfg.faithful and cfg.bandwidth != math.inf and cfg.bandwidth < len(todo):
        raise ValueError(f"{len(todo)} levels need one bit each, bandwidth is {cfg.bandwidth}")
    n = g.n
    lev_of_node = np.full(n, -1, dtype=np.int64)
    live = cl >= 0
    lv = np.asarray([level.get(int(c), -1) for c in cl.tolist()], dtype=np.int64) if n else lev_of_node
    lev_of_node[live] = lv[live]
    color: Dict[int, int] = {}
    met = RoundMetrics(mode=cfg.mode)
    worst_cost = 0
    info = {"levels": {}}
    bfs_depth = 0
    for i in todo:
        members: Dict[int, List[int]] = {}
        for c, l in level.items():
            if l == i:
                members[c] = []
        if not members:
            continue
        for v in np.nonzero(live & (lev_of_node == i))[0].tolist():
            members[int(cl[v])].append(v)
        members = {c: m for c, m in members.items() if m}
        allowed = live & (lev_of_node >= i)
        owner, par, depth = extend_clusters(g, ids, allowed, members, cids, radius)
        bfs_depth = max(bfs_depth, int(depth.max()) if n else 0)
        src, dst = g.arcs
        a, b2 = owner[src], owner[dst]
        touch = (a >= 0) & (b2 >= 0) & (a != b2)
        has_nb = set(a[touch].tolist())
        for c in members:
            if c not in has_nb:
                color[c] = UNCOLORED
        scope = sorted(has_nb)
        if scope:
            regions: Dict[int, List[int]] = {}
            for v in np.nonzero(owner >= 0)[0].tolist():
                regions.setdefault(int(owner[v]), []).append(v)
            ext = {c: _extended_tree(trees[c], regions[c], par) for c in scope}
            own2 = np.where(np.isin(owner, scope), owner, -1)
            res = balanced_color_clusters(g, ids, own2, {c: cids[c] for c in scope}, id_bits, ext, cfg, delta)
            color.update(res.color)
            worst_cost = max(worst_cost, res.metrics.rounds_total)
        info["levels"][i] = {"clusters": len(members), "colored": len(scope)}
    met.absorb(declared(cfg.mode, radius, "bfs"))
    met.absorb(declared(cfg.mode, worst_cost, "cluster_color"))
    info["bfs_depth"] = bfs_depth
    return RBColoring(color, met, info)
