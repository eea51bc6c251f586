"""Network decompositions assembled from repeated carving.

Four drivers share one loop (carve the remaining nodes, give the survivors the
next colour, repeat):

  fast      token/level carving keyed by identifier bits
  rg        the identifier-bit baseline: b phases, blue grows, red shrinks
  slow      the baseline with balanced cluster colourings instead of id bits
  fast-id   token/level carving keyed by per-level partial colourings
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from ._util import clog43, lg
from .aggregation import RootedTree
from .carving import (BALANCED, BLUE, ID_BITS, RED, UNCOLORED, CarveInvariantError, CarveParams,
                      CarveResult, CarveTrace, ClusterState, carve, step_cost)
from .coloring import balanced_color_clusters, fast_id_radius, partial_color_levels
from .graph import Graph, IdAssignment
from .sim import ModelConfig, RoundMetrics, declared

VARIANTS = ("fast", "rg", "slow", "fast-id")


class DecompositionFormatError(ValueError):
    pass


@dataclass
class Decomposition:
    variant: str
    n: int
    b: int
    color: List[int]
    cluster_of: List[int]
    trees: Dict[int, Tuple[int, Dict[int, int]]]
    cluster_ids: Dict[int, int] = field(default_factory=dict)
    params: Dict[str, object] = field(default_factory=dict)
    stats: Dict[str, object] = field(default_factory=dict)
    metrics: Optional[RoundMetrics] = None
    carves: List[CarveResult] = field(default_factory=list)

    @property
    def num_colors(self) -> int:
        return len(set(self.color))

    def members(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for v, c in enumerate(self.cluster_of):
            out.setdefault(c, []).append(v)
        return out

    # -- serialization --
    def dumps(self) -> str:
        lines = ["decomposition 1"]
        head = {"variant": self.variant, "n": self.n, "b": self.b}
        head.update(self.params)
        lines.append("h " + " ".join(f"{k}={v}" for k, v in head.items()))
        for v in range(self.n):
            lines.append(f"c {v} {self.color[v]} {self.cluster_of[v]}")
        for c in sorted(self.trees):
            root, parent = self.trees[c]
            lines.append(f"t {c} {root} {self.cluster_ids.get(c, c)}")
            for v in sorted(parent):
                if v != root:
                    lines.append(f"a {v} {parent[v]}")
        for k, v in self.stats.items():
            lines.append(f"s {k} {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Decomposition":
        it = enumerate(text.splitlines(), 1)
        body = [(k, ln.split()) for k, ln in it if ln.strip() and not ln.startswith("#")]
        if not body or body[0][1] != ["decomposition", "1"]:
            raise DecompositionFormatError("line 1: expected 'decomposition 1'")
        if len(body) < 2 or body[1][1][0] != "h":
            raise DecompositionFormatError("line 2: header missing")
        head = {}
        for kv in body[1][1][1:]:
            k, _, v = kv.partition("=")
            head[k] = int(v) if v.lstrip("-").isdigit() else v
        try:
            n = int(head.pop("n"))
            variant = str(head.pop("variant"))
            b = int(head.pop("b"))
        except KeyError as e:
            raise DecompositionFormatError(f"header lacks {e}") from None
        color: List[Optional[int]] = [None] * n
        cluster_of: List[Optional[int]] = [None] * n
        trees: Dict[int, Tuple[int, Dict[int, int]]] = {}
        cids: Dict[int, int] = {}
        stats: Dict[str, object] = {}
        cur = None
        for lineno, tok in body[2:]:
            try:
                if tok[0] == "c":
                    v, col, c = int(tok[1]), int(tok[2]), int(tok[3])
                    if not 0 <= v < n:
                        raise DecompositionFormatError(f"line {lineno}: node {v} out of range")
                    if color[v] is not None:
                        raise DecompositionFormatError(f"line {lineno}: node {v} listed twice")
                    color[v], cluster_of[v] = col, c
                elif tok[0] == "t":
                    cur = int(tok[1])
                    trees[cur] = (int(tok[2]), {int(tok[2]): -1})
                    cids[cur] = int(tok[3]) if len(tok) > 3 else cur
                elif tok[0] == "a":
                    if cur is None:
                        raise DecompositionFormatError(f"line {lineno}: tree edge before any tree")
                    trees[cur][1][int(tok[1])] = int(tok[2])
                elif tok[0] == "s":
                    val = tok[2] if len(tok) > 2 else ""
                    stats[tok[1]] = int(val) if val.lstrip("-").isdigit() else val
                else:
                    raise DecompositionFormatError(f"line {lineno}: unknown record {tok[0]!r}")
            except (IndexError, ValueError) as e:
                if isinstance(e, DecompositionFormatError):
                    raise
                raise DecompositionFormatError(f"line {lineno}: malformed record") from None
        return cls(variant, n, b, color, cluster_of, trees, cids, head, stats)


# --- the baseline carvings ---------------------------------------------------------

def baseline_params(n: int, id_bits: int, variant: str) -> CarveParams:
    b = id_bits if variant == "rg" else 1 + clog43(n)
    steps = 2 * b * lg(n) + 1
    return CarveParams(n, b, b + lg(n), b, steps, 2 * b, 0, variant)


class _Baseline:
    def __init__(self, g: Graph, ids: IdAssignment, S: Sequence[int], params: CarveParams,
                 cfg: ModelConfig):
        n = g.n
        self.g, self.ids, self.params, self.cfg, self.n = g, ids, params, cfg, n
        self.S = sorted(set(int(v) for v in S))
        if not self.S:
            raise ValueError("carve needs a nonempty node set")
        inS = np.zeros(n, dtype=bool)
        inS[self.S] = True
        self.cl = np.full(n, -1, dtype=np.int64)
        self.cl[self.S] = self.S
        self.size = inS.astype(np.int64)
        self.dissolved = np.zeros(n, dtype=bool)
        self.exists = inS.copy()
        self.color = np.full(n, UNCOLORED, dtype=np.int64)
        self.stopped = np.zeros(n, dtype=bool)
        self.cid = [ids[v] for v in range(n)]
        self.tpar: Dict[int, Dict[int, int]] = {c: {c: -1} for c in self.S}
        self.tdep: Dict[int, Dict[int, int]] = {c: {c: 0} for c in self.S}
        self.maxdep = np.zeros(n, dtype=np.int64)
        self.load: Dict[Tuple[int, int], int] = {}
        self.killed: List[int] = []
        src, dst = g.arcs
        keep = inS[src] & inS[dst]
        self.esrc, self.edst = src[keep], dst[keep]
        self.metrics = RoundMetrics(mode=cfg.mode)
        self.trace = CarveTrace({"variant": params.bit_source, **params.as_dict(),
                                 "S": len(self.S), "idbits": ids.b})
        for c in self.S:
            self.trace.add("I", c, self.cid[c])
        self.phase = 0

    def live(self) -> np.ndarray:
        return np.nonzero(self.exists & ~self.dissolved)[0]

    def cost(self) -> Dict[str, int]:
        live = self.live()
        R = int(self.maxdep[live].max()) if len(live) else 0
        P = max(self.load.values(), default=1)
        size = int(self.size[live].max()) if len(live) else 1
        return step_cost(R, P, size, self.n, self.cfg.bandwidth, self.ids.b + 3)

    def charge(self, cost: Dict[str, int], times: int = 1) -> None:
        for k, r in cost.items():
            self.metrics.absorb(declared(self.cfg.mode, r * times, k))

    def cluster_pairs(self):
        cu, cv = self.cl[self.esrc], self.cl[self.edst]
        sel = (cu >= 0) & (cv >= 0) & (cu != cv)
        return cu[sel], cv[sel]

    def set_colors(self, i: int) -> None:
        live = self.live()
        if self.params.bit_source == "rg":
            for c in live:
                self.color[c] = BLUE if (self.cid[c] >> (i - 1)) & 1 else RED
            return
        a, b = self.cluster_pairs()
        busy = sorted(set(a.tolist()))
        self.color[live] = UNCOLORED
        if busy:
            owner = np.where(np.isin(self.cl, busy), self.cl, -1)
            trees = {c: RootedTree(c, self.tpar[c]) for c in busy}
            res = balanced_color_clusters(self.g, self.ids, owner, {c: self.cid[c] for c in busy},
                                          self.ids.b, trees, self.cfg)
            for c, col in res.color.items():
                self.color[c] = col
            self.metrics.absorb(res.metrics)
        for c in live:
            self.trace.add("Z", i, int(c), int(self.color[c]))

    def propose(self):
        src, dst = self.esrc, self.edst
        cu, cv = self.cl[src], self.cl[dst]
        ok = (cu >= 0) & (cv >= 0) & (cu != cv)
        idx = np.nonzero(ok)[0]
        cu, cv = cu[idx], cv[idx]
        ok = (self.color[cu] == RED) & (self.color[cv] == BLUE) & ~self.stopped[cv]
        idx, cv = idx[ok], cv[ok]
        if len(idx) == 0:
            e = np.zeros(0, dtype=np.int64)
            return e, e, e
        rank = self.ids.rank
        key = rank[cv] * self.n + rank[dst[idx]]
        s = src[idx]
        order = np.lexsort((key, s))
        s_sorted = s[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = s_sorted[1:] != s_sorted[:-1]
        pick = idx[order[first]]
        return src[pick], self.cl[dst[pick]], dst[pick]

    def resolve(self, nodes, targets, contacts) -> None:
        tr, den = self.trace, self.params.accept_den
        order = np.lexsort((nodes, targets))
        by: Dict[int, List[Tuple[int, int]]] = {}
        for k in order:
            by.setdefault(int(targets[k]), []).append((int(nodes[k]), int(contacts[k])))
        touched = set()
        for c, plist in by.items():
            p, sz = len(plist), int(self.size[c])
            if p * den >= sz:
                tr.add("A", c, p, sz)
                for v, u in plist:
                    old = int(self.cl[v])
                    tr.add("M", v, old, c, u)
                    if v in self.tpar[c]:
                        raise CarveInvariantError(f"node {v} re-enters the tree of {c}")
                    self.tpar[c][v] = u
                    d = self.tdep[c][u] + 1
                    self.tdep[c][v] = d
                    self.maxdep[c] = max(self.maxdep[c], d)
                    e = (min(u, v), max(u, v))
                    self.load[e] = self.load.get(e, 0) + 1
                    self.cl[v] = c
                    self.size[old] -= 1
                    self.size[c] += 1
                    touched.add(old)
            else:
                tr.add("K", c, p, sz)
                self.stopped[c] = True
                for v, _u in plist:
                    old = int(self.cl[v])
                    tr.add("X", v, c)
                    self.cl[v] = -1
                    self.size[old] -= 1
                    self.killed.append(v)
                    touched.add(old)
        for c in sorted(touched):
            if self.size[c] == 0 and not self.dissolved[c]:
                self.dissolved[c] = True
                tr.add("D", c)
                for v, u in self.tpar[c].items():
                    if u >= 0:
                        e = (min(u, v), max(u, v))
                        self.load[e] -= 1
                        if self.load[e] == 0:
                            del self.load[e]
        if 2 * len(self.killed) > len(self.S):
            raise CarveInvariantError("more than half of S was killed")

    def run(self) -> None:
        prm, tr = self.params, self.trace
        for i in range(1, prm.phases + 1):
            self.phase = i
            tr.add("P", i)
            self.stopped[:] = False
            self.set_colors(i)
            for j in range(1, prm.steps_per_phase + 1):
                tr.add("S", i, j)
                cost = self.cost()
                nodes, targets, contacts = self.propose()
                self.charge(cost)
                if len(nodes) == 0:
                    rest = prm.steps_per_phase - j
                    if rest:
                        tr.add("Q", i, j + 1)
                        self.charge(cost, rest)
                    break
                self.resolve(nodes, targets, contacts)
            tr.add("E", i)
            a, b = self.cluster_pairs()
            mixed = (self.color[a] != self.color[b]) & (self.color[a] != UNCOLORED) & (self.color[b] != UNCOLORED)
            if mixed.any():
                raise CarveInvariantError(f"phase {i}: red and blue clusters still touch")
        a, b = self.cluster_pairs()
        if len(a):
            raise CarveInvariantError(f"clusters {int(a[0])} and {int(b[0])} are adjacent after the last phase")

    def result(self) -> CarveResult:
        clusters = []
        for c in self.live():
            c = int(c)
            mem = frozenset(int(v) for v in np.nonzero(self.cl == c)[0])
            clusters.append(ClusterState(c, self.cid[c], 0, 0, mem, False, True,
                                         RootedTree(c, self.tpar[c], mem), None, ()))
        S2 = sorted(int(v) for v in self.S if self.cl[v] >= 0)
        return CarveResult(S2, clusters, self.trace, self.metrics, sorted(self.killed), self.params)


def carve_rg_baseline(g: Graph, ids: IdAssignment, S: Sequence[int], cfg: ModelConfig = ModelConfig()
                      ) -> CarveResult:
    st = _Baseline(g, ids, S, baseline_params(g.n, ids.b, "rg"), cfg)
    st.run()
    return st.result()


def carve_id_independent_slow(g: Graph, ids: IdAssignment, S: Sequence[int],
                              cfg: ModelConfig = ModelConfig()) -> CarveResult:
    st = _Baseline(g, ids, S, baseline_params(g.n, ids.b, "slow"), cfg)
    st.run()
    return st.result()


# --- fast-id colourer ---------------------------------------------------------------

def fast_id_params(n: int) -> CarveParams:
    return CarveParams.make(n, 1 + clog43(n), BALANCED)


def level_colorer(radius: int):
    """Colouring hook for the balanced carve: partial colourings of the levels
    that received new clusters."""
    def colorer(state, todo):
        live = [int(c) for c in state.live_clusters()]
        lv = {c: int(state.level[c]) for c in live}
        levels = sorted({lv[c] for c in todo})
        trees = {c: RootedTree(c, state.tpar[c]) for c in live}
        cids = {c: state.cid[c] for c in live}
        res = partial_color_levels(state.g, state.ids, state.cl, lv, cids, state.ids.b, trees, radius,
                                   state.cfg, levels)
        state.metrics.absorb(res.metrics)
        return {c: res.color.get(c, UNCOLORED) for c in todo}
    return colorer


# --- drivers -------------------------------------------------------------------

def _carver(variant: str, g: Graph, ids: IdAssignment, cfg: ModelConfig):
    n = g.n
    if variant == "fast":
        prm = CarveParams.make(n, ids.b, ID_BITS)
        return lambda S: carve(g, ids, S, prm, cfg), prm
    if variant == "fast-id":
        prm = fast_id_params(n)
        col = level_colorer(fast_id_radius(n, prm.b))
        return lambda S: carve(g, ids, S, prm, cfg, col), prm
    if variant == "rg":
        return lambda S: carve_rg_baseline(g, ids, S, cfg), baseline_params(n, ids.b, "rg")
    if variant == "slow":
        return lambda S: carve_id_independent_slow(g, ids, S, cfg), baseline_params(n, ids.b, "slow")
    raise ValueError(f"unknown variant {variant!r}")


def variant_bounds(variant: str, n: int, params: CarveParams):
    """Declared quality bounds: (colors, steiner radius, weak diameter, overlap)."""
    colors = lg(n) + 1
    if variant in ("fast", "fast-id"):
        L = params.L
        return colors, 56 * L * L, 112 * L * L, 6 * L + 2
    R = params.phases * params.steps_per_phase
    return colors, R, 2 * R, params.phases + 1


def weak_diameters(g: Graph, clusters: Sequence[Sequence[int]]) -> List[float]:
    """Largest member-to-member hop distance in g, by layered sparse frontiers."""
    A = g.sparse().tocsr().astype(np.int32)
    out = []
    for mem in clusters:
        mem = np.asarray(list(mem), dtype=np.int64)
        k = len(mem)
        if k <= 1:
            out.append(0)
            continue
        is_mem = np.zeros(g.n, dtype=bool)
        is_mem[mem] = True
        seen = np.zeros((k, g.n), dtype=bool)
        rows = np.arange(k)
        seen[rows, mem] = True
        todo = np.full(k, k - 1)      # members each source has not reached yet
        alive = todo > 0
        d = 0
        fr, fc = rows, mem
        while alive.any():
            keep = alive[fr]
            fr, fc = fr[keep], fc[keep]
            if not np.isin(np.flatnonzero(alive), fr).all():
                d = math.inf
                break
            F = sp.csr_matrix((np.ones(len(fr), dtype=np.int32), (fr, fc)), shape=(k, g.n))
            nxt = (F @ A).tocoo()
            r, c = nxt.row, nxt.col
            new = ~seen[r, c]
            fr, fc = r[new], c[new]
            seen[fr, fc] = True
            d += 1
            hit = is_mem[fc]
            np.subtract.at(todo, fr[hit], 1)
            alive = todo > 0
        out.append(d)
    return out


def decompose(g: Graph, ids: IdAssignment, variant: str = "fast", cfg: ModelConfig = ModelConfig(),
              seed: Optional[int] = None, measure: bool = True) -> Decomposition:
    run, prm = _carver(variant, g, ids, cfg)
    n = g.n
    color = [0] * n
    cluster_of = [0] * n
    trees: Dict[int, Tuple[int, Dict[int, int]]] = {}
    cids: Dict[int, int] = {}
    metrics = RoundMetrics(mode=cfg.mode)
    carves: List[CarveResult] = []
    remaining = list(range(n))
    handle = 0
    while remaining:
        res = run(remaining)
        carves.append(res)
        j = len(carves)
        if 2 * len(res.S_prime) < len(remaining):
            raise CarveInvariantError(f"carve {j} kept {len(res.S_prime)} of {len(remaining)} nodes")
        metrics.absorb(res.metrics, label=f"carve{j}")
        for cs in sorted(res.clusters, key=lambda c: c.cluster):
            for v in cs.members:
                color[v] = j
                cluster_of[v] = handle
            trees[handle] = (cs.steiner.root, dict(cs.steiner.parent))
            cids[handle] = cs.cluster_id
            handle += 1
        kept = set(res.S_prime)
        remaining = [v for v in remaining if v not in kept]
    params = {"seed": seed if seed is not None else "none", "L": prm.L, "phases": prm.phases,
              "steps": prm.steps_per_phase, "b_internal": prm.b}
    d = Decomposition(variant, n, ids.b, color, cluster_of, trees, cids, params, {}, metrics, carves)
    d.stats = decomposition_stats(g, d, measure)
    return d


def decomposition_stats(g: Graph, d: Decomposition, measure: bool = True) -> Dict[str, object]:
    mem = d.members()
    radius = 0
    overlap = 0
    by_color: Dict[int, np.ndarray] = {}
    for c, (root, parent) in d.trees.items():
        t = RootedTree(root, parent)
        radius = max(radius, t.r)
        col = d.color[root] if c not in mem else d.color[mem[c][0]]
        arr = by_color.setdefault(col, np.zeros(d.n, dtype=np.int64))
        arr[list(t.nodes)] += 1
    if by_color:
        overlap = int(max(a.max() for a in by_color.values()))
    st = {"colors": d.num_colors, "clusters": len(d.trees),
          "killed": sum(len(r.killed) for r in d.carves) if d.carves else 0,
          "max_steiner_radius": radius, "max_overlap": overlap,
          "rounds": d.metrics.rounds_total if d.metrics else 0}
    if measure:
        diam = weak_diameters(g, [mem[c] for c in sorted(mem)])
        st["max_weak_diameter"] = max(diam, default=0)
    return st


def decompose_fast(g, ids, cfg=ModelConfig(), **kw) -> Decomposition:
    return decompose(g, ids, "fast", cfg, **kw)


def decompose_fast_id_independent(g, ids, cfg=ModelConfig(), **kw) -> Decomposition:
    return decompose(g, ids, "fast-id", cfg, **kw)
