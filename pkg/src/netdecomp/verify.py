"""Checkers.  They read serialized results and never look at algorithm state."""
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .graph import Graph

RED, BLUE, UNCOLORED = 0, 1, -1
_BRANCH = {RED: 0, BLUE: 1, UNCOLORED: 2}


@dataclass
class CheckReport:
    checks: Dict[str, Tuple[bool, Optional[str]]] = field(default_factory=dict)
    measures: Dict[str, object] = field(default_factory=dict)

    def add(self, name: str, passed: bool, witness: Optional[str] = None) -> bool:
        prev = self.checks.get(name)
        if prev is not None and not prev[0]:
            return passed  # keep the first witness
        if not passed and witness is None:
            witness = "unspecified"
        self.checks[name] = (bool(passed), None if passed else witness)
        return passed

    def fail(self, name: str, witness: str) -> None:
        self.add(name, False, witness)

    def ok_unless_failed(self, name: str) -> None:
        if name not in self.checks:
            self.checks[name] = (True, None)

    @property
    def ok(self) -> bool:
        return all(p for p, _ in self.checks.values())

    def failures(self) -> Dict[str, str]:
        return {k: w for k, (p, w) in self.checks.items() if not p}

    def lines(self) -> List[str]:
        out = [f"status={'pass' if self.ok else 'fail'}"]
        for k, (p, w) in self.checks.items():
            out.append(f"check.{k}={'pass' if p else 'fail'}")
            if not p:
                out.append(f"witness.{k}={w}")
        for k, v in self.measures.items():
            out.append(f"{k}={v}")
        return out

    def merge(self, other: "CheckReport", prefix: str = "") -> "CheckReport":
        for k, (p, w) in other.checks.items():
            self.add(prefix + k, p, w)
        for k, v in other.measures.items():
            self.measures[prefix + k] = v
        return self


# --- balance -----------------------------------------------------------------

def check_balance(coloring: Dict[int, int], scope: Optional[Sequence[Iterable[int]]] = None,
                  factor: float = 0.75, rounding: str = "ceil") -> CheckReport:
    """Every colour class within each scope group has at most factor*k members.

    scope: groups of entities (e.g. connected components); default one group
    holding every coloured or uncoloured entity.  rounding picks ceil or floor
    of factor*k.
    """
    rep = CheckReport()
    groups = [list(coloring)] if scope is None else [list(s) for s in scope]
    unc = sorted(e for e, c in coloring.items() if c == UNCOLORED)
    rep.measures["uncolored"] = len(unc)
    worst = 0.0
    for grp in groups:
        k = len(grp)
        if k == 0:
            continue
        lim = factor * k
        cap = math.floor(lim + 1e-9) if rounding == "floor" else math.ceil(lim - 1e-9)
        for col in (RED, BLUE):
            cnt = sum(1 for e in grp if coloring.get(e) == col)
            worst = max(worst, cnt / k)
            if cnt > cap:
                rep.fail("balance", f"colour {'blue' if col == BLUE else 'red'} has {cnt} of {k} > {cap}"
                                    f" (group starting {sorted(grp)[:4]})")
    rep.ok_unless_failed("balance")
    rep.measures["max_fraction"] = round(worst, 6)
    return rep


# --- decompositions ----------------------------------------------------------

@dataclass
class Bounds:
    D: Optional[int] = None          # weak diameter
    R: Optional[int] = None          # Steiner radius
    overlap: Optional[int] = None    # trees per node per colour
    colors: Optional[int] = None


def _weak_diameters(g: Graph, clusters: List[List[int]], limit: Optional[int]):
    """Largest member-to-member distance in g per cluster (inf if disconnected)."""
    from scipy.sparse.csgraph import shortest_path
    A = g.sparse()
    out = []
    for mem in clusters:
        if len(mem) <= 1:
            out.append(0)
            continue
        best = 0
        for lo in range(0, len(mem), 256):
            rows = shortest_path(A, method="D", unweighted=True, directed=False, indices=mem[lo:lo + 256])
            val = rows[:, mem].max()
            best = max(best, val)
            if limit is not None and best > limit:
                break
        out.append(int(best) if np.isfinite(best) else math.inf)
    return out


def check_decomposition(g: Graph, d, bounds: Bounds = Bounds()) -> CheckReport:
    """d is a Decomposition (see decomposition.py): color, cluster_of, trees."""
    rep = CheckReport()
    n = g.n
    if d.n != n:
        rep.fail("format", f"decomposition is for n={d.n}, graph has n={n}")
        return rep
    miss = [v for v in range(n) if d.color[v] is None or d.cluster_of[v] is None or d.color[v] < 1]
    rep.add("coverage", not miss, f"node {miss[0]} has no colour or cluster" if miss else None)
    members: Dict[int, List[int]] = {}
    for v in range(n):
        if d.cluster_of[v] is not None:
            members.setdefault(d.cluster_of[v], []).append(v)
    for c, mem in members.items():
        cols = {d.color[v] for v in mem}
        if len(cols) != 1:
            rep.fail("cluster_color", f"cluster {c} mixes colours {sorted(cols)}")
    rep.ok_unless_failed("cluster_color")
    for u, v in g.edges:
        cu, cv = d.cluster_of[u], d.cluster_of[v]
        if cu is not None and cv is not None and cu != cv and d.color[u] == d.color[v]:
            rep.fail("nonadjacent", f"edge {u}-{v} joins clusters {cu} and {cv} of colour {d.color[u]}")
            break
    rep.ok_unless_failed("nonadjacent")
    ncol = len({c for c in d.color if c is not None})
    rep.measures["colors"] = ncol
    if bounds.colors is not None:
        rep.add("colors", ncol <= bounds.colors, f"{ncol} colours > {bounds.colors}")
    # Steiner trees
    max_r, per_color_load = 0, {}
    for c, mem in sorted(members.items()):
        tree = d.trees.get(c)
        if tree is None:
            rep.fail("steiner_tree", f"cluster {c} has no Steiner tree")
            continue
        root, parent = tree
        nodes = set(parent) | {root}
        # walk to the root from each node; a cycle or a dangling parent fails
        depth = {root: 0}
        for v in parent:
            path, x = [], v
            while x not in depth:
                path.append(x)
                if len(path) > len(nodes) or x not in parent:
                    rep.fail("steiner_tree", f"cluster {c}: node {v} does not reach the root")
                    break
                x = parent[x]
            else:
                for k, y in enumerate(reversed(path)):
                    depth[y] = depth[x] + k + 1
        for v, p in parent.items():
            if v != root and not g.has_edge(v, p):
                rep.fail("steiner_edges", f"cluster {c}: tree edge {v}-{p} not in G")
        absent = [v for v in mem if v not in nodes]
        if absent:
            rep.fail("steiner_terminals", f"cluster {c}: member {absent[0]} missing from its tree")
        r = max(depth.values()) if depth else 0
        max_r = max(max_r, r)
        col = d.color[mem[0]]
        load = per_color_load.setdefault(col, np.zeros(n, dtype=np.int64))
        load[list(nodes)] += 1
    for name in ("steiner_tree", "steiner_edges", "steiner_terminals"):
        rep.ok_unless_failed(name)
    rep.measures["max_steiner_radius"] = max_r
    if bounds.R is not None:
        rep.add("steiner_radius", max_r <= bounds.R, f"radius {max_r} > {bounds.R}")
    ov = max((int(a.max()) for a in per_color_load.values()), default=0)
    rep.measures["max_overlap"] = ov
    if bounds.overlap is not None:
        worst = None
        for col, a in per_color_load.items():
            if a.max() > bounds.overlap:
                worst = (col, int(a.argmax()), int(a.max()))
                break
        rep.add("overlap", worst is None,
                None if worst is None else f"colour {worst[0]}: node {worst[1]} in {worst[2]} trees > {bounds.overlap}")
    keys = sorted(members)
    diams = _weak_diameters(g, [members[c] for c in keys], bounds.D)
    dmax = max(diams, default=0)
    rep.measures["max_weak_diameter"] = dmax
    if bounds.D is not None:
        bad = [(c, x) for c, x in zip(keys, diams) if x > bounds.D]
        rep.add("weak_diameter", not bad, f"cluster {bad[0][0]} has weak diameter {bad[0][1]} > {bounds.D}"
                if bad else None)
    return rep


# --- MIS / colouring -----------------------------------------------------------

def check_mis(g: Graph, selected: Iterable[int]) -> CheckReport:
    rep = CheckReport()
    sel = np.zeros(g.n, dtype=bool)
    sel[list(selected)] = True
    for u, v in g.edges:
        if sel[u] and sel[v]:
            rep.fail("independent", f"edge {u}-{v} inside the set")
            break
    rep.ok_unless_failed("independent")
    for v in range(g.n):
        if not sel[v] and not any(sel[w] for w in g.adj[v]):
            rep.fail("maximal", f"node {v} could be added")
            break
    rep.ok_unless_failed("maximal")
    rep.measures["size"] = int(sel.sum())
    return rep


def check_coloring(g: Graph, color: Sequence[int], palette: int) -> CheckReport:
    rep = CheckReport()
    for v in range(g.n):
        if color[v] is None or not 1 <= color[v] <= palette:
            rep.fail("palette", f"node {v} has colour {color[v]} outside 1..{palette}")
            break
    rep.ok_unless_failed("palette")
    for u, v in g.edges:
        if color[u] == color[v]:
            rep.fail("proper", f"edge {u}-{v} is monochromatic ({color[u]})")
            break
    rep.ok_unless_failed("proper")
    rep.measures["colors_used"] = len(set(color))
    return rep


def brute_force_mis_ok(g: Graph, selected: Iterable[int]) -> bool:
    """Exhaustive oracle: the set is independent and no proper superset is."""
    sel = set(selected)
    if any(u in sel and v in sel for u, v in g.edges):
        return False
    for v in range(g.n):
        if v in sel:
            continue
        bigger = sel | {v}
        if not any(a in bigger and b in bigger for a, b in g.edges):
            return False
    return True


def all_pairs_hops(g: Graph) -> np.ndarray:
    """Floyd-Warshall, for tiny graphs only."""
    n = g.n
    D = np.full((n, n), math.inf)
    np.fill_diagonal(D, 0)
    for u, v in g.edges:
        D[u, v] = D[v, u] = 1
    for k in range(n):
        D = np.minimum(D, D[:, [k]] + D[[k], :])
    return D


# --- carve traces ------------------------------------------------------------

class _Replay:
    def __init__(self, g: Graph, trace, rep: CheckReport):
        h = trace.header
        self.g, self.rep = g, rep
        self.variant = h["variant"]
        self.b = int(h["b"])
        self.L = int(h.get("L", 0))
        self.kill_cost = int(h.get("kill_cost", 0))
        self.den = int(h.get("accept_den", 0))
        self.phases = int(h["phases"])
        n = g.n
        self.cl = np.full(n, -1, dtype=np.int64)
        self.S: List[int] = []
        self.cid: Dict[int, int] = {}
        self.level: Dict[int, int] = {}
        self.tokens: Dict[int, int] = {}
        self.path: Dict[int, List[int]] = {}
        self.color: Dict[int, int] = {}
        self.stalling: Dict[int, bool] = {}
        self.finished: Dict[int, bool] = {}
        self.dissolved: Dict[int, bool] = {}
        self.tree: Dict[int, Dict[int, int]] = {}
        self.depth: Dict[int, Dict[int, int]] = {}
        self.changes = np.zeros(n, dtype=np.int64)
        self.kills = 0
        self.created = 0
        self.phase = 0
        self.step = 0
        self.cl_start = None
        self.depth_start: Dict[int, int] = {}
        self.prev_phi: Dict[int, int] = {}
        self.src, self.dst = g.arcs

    def bit(self, c: int) -> int:
        if self.variant == "id_bits":
            lev = self.level[c]
            return (self.cid[c] >> lev) & 1 if lev < self.b else 0
        return 1 if self.color.get(c, UNCOLORED) == BLUE else 0

    def phi(self, c: int, i: int) -> int:
        return 3 * i - 2 * self.level[c] + self.bit(c)

    def live(self):
        return [c for c in self.cid if not self.dissolved[c]]

    def where(self) -> str:
        return f"phase {self.phase} step {self.step}"


def _ancestry(rp: _Replay, isolation: bool = True) -> None:
    """Adjacent living nodes of different clusters sit on comparable transcript paths."""
    cl = rp.cl
    u, v = rp.src, rp.dst
    cu, cv = cl[u], cl[v]
    sel = (cu >= 0) & (cv >= 0) & (cu < cv)
    if not sel.any():
        return
    pairs = set(zip(cu[sel].tolist(), cv[sel].tolist()))
    for a, b in pairs:
        pa, pb = rp.path[a], rp.path[b]
        k = min(len(pa), len(pb))
        if pa[:k] != pb[:k]:
            rp.rep.fail("ancestry", f"{rp.where()}: adjacent clusters {a} {pa} and {b} {pb} are incomparable")
            return
        if isolation and rp.variant == "balanced" and rp.level[a] == rp.level[b] and (
                rp.color.get(a, UNCOLORED) == UNCOLORED or rp.color.get(b, UNCOLORED) == UNCOLORED):
            if not (rp.finished[a] or rp.finished[b]):
                rp.rep.fail("uncolored_isolation",
                            f"{rp.where()}: uncoloured cluster meets same-level cluster ({a}, {b})")


def _end_step(rp: _Replay) -> None:
    if rp.cl_start is None:
        return
    for c, d0 in rp.depth_start.items():
        d1 = max(rp.depth[c].values())
        if d1 - d0 > 1:
            rp.rep.fail("steiner_growth", f"{rp.where()}: tree of {c} deepened from {d0} to {d1}")
    _ancestry(rp)
    rp.cl_start = None


def check_carve_trace(g: Graph, trace, params=None) -> CheckReport:
    """Replay a CarveTrace for the token/level variants (id_bits, balanced)."""
    rep = CheckReport()
    if trace.header.get("variant") in ("rg", "slow"):
        return check_baseline_trace(g, trace)
    rp = _Replay(g, trace, rep)
    if params is not None:
        if (params.b, params.L, params.phases) != (rp.b, rp.L, rp.phases):
            rep.fail("record_consistency", "trace header disagrees with the parameters")
    L = rp.L
    for rec in trace.records:
        tag = rec[0]
        if tag != "S" and tag in ("P", "E", "Q") and rp.cl_start is not None:
            _end_step(rp)
        if tag == "I":
            c, x = rec[1], rec[2]
            rp.S.append(c)
            rp.cl[c] = c
            rp.cid[c] = x
            rp.level[c] = 0
            rp.tokens[c] = 1
            rp.created += 1
            rp.path[c] = []
            rp.stalling[c] = rp.finished[c] = rp.dissolved[c] = False
            rp.tree[c] = {c: -1}
            rp.depth[c] = {c: 0}
        elif tag == "P":
            i = rec[1]
            rp.phase, rp.step = i, 0
            _ancestry(rp, isolation=False)  # colours for phase i arrive in the Z records
            for c in rp.live():
                if rp.finished[c]:
                    continue
                e = i - 2 * rp.level[c] - 1
                t = rp.tokens[c]
                if t < 1 or (e > 0 and t < (1 << e)):
                    rep.fail("invariant1", f"phase {i}: cluster {c} holds {t} tokens at level {rp.level[c]}")
        elif tag == "Z":
            rp.color[rec[2]] = rec[3]
        elif tag == "Y":
            i, c, val = rec[1], rec[2], rec[3]
            mine = rp.phi(c, i)
            if mine != val:
                rep.fail("record_consistency", f"phase {i}: recorded potential {val} of {c}, replay gives {mine}")
            if c in rp.prev_phi and mine < rp.prev_phi[c]:
                rep.fail("invariant2", f"phase {i}: potential of {c} dropped from {rp.prev_phi[c]} to {mine}")
            rp.prev_phi[c] = mine
        elif tag == "S":
            if rp.cl_start is not None:
                _end_step(rp)
            rp.step = rec[2]
            if rp.step == 1:
                _ancestry(rp)
            rp.cl_start = rp.cl.copy()
            rp.depth_start = {c: max(rp.depth[c].values()) for c in rp.live()}
        elif tag == "M":
            v, old, c, u = rec[1:5]
            if rp.cl[v] != old or old == c:
                rep.fail("record_consistency", f"{rp.where()}: node {v} is not in cluster {old}")
            if rp.dissolved.get(c, True):
                rep.fail("record_consistency", f"{rp.where()}: move into missing cluster {c}")
                continue
            pa, pb = rp.phi(old, rp.phase), rp.phi(c, rp.phase)
            if not pb > pa:
                rep.fail("invariant2", f"{rp.where()}: node {v} moved from {old} (phi {pa}) to {c} (phi {pb})")
            if v in rp.tree[c]:
                rep.fail("steiner_tree", f"{rp.where()}: node {v} added twice to the tree of {c}")
            if rp.cl_start is None or rp.cl_start[u] != c:
                rep.fail("steiner_tree", f"{rp.where()}: contact {u} was not a member of {c}")
            if not g.has_edge(u, v):
                rep.fail("steiner_tree", f"{rp.where()}: contact edge {u}-{v} not in G")
            rp.tree[c][v] = u
            rp.depth[c][v] = rp.depth[c].get(u, 0) + 1
            rp.cl[v] = c
            rp.changes[v] += 1
        elif tag in ("A", "K"):
            c, p, d = rec[1:4]
            t = rp.tokens.get(c, 0)
            accept = p * rp.den >= t
            if (tag == "A") != accept:
                rep.fail("decision_rule", f"{rp.where()}: cluster {c} with {t} tokens and {p} proposals")
            want = p if tag == "A" else -p * rp.kill_cost
            if d != want:
                rep.fail("token_accounting", f"{rp.where()}: cluster {c} token delta {d}, expected {want}")
            rp.tokens[c] = t + d
            if d > 0:
                rp.created += d
            if tag == "K":
                rp.stalling[c] = True
        elif tag == "X":
            v = rec[1]
            rp.cl[v] = -1
            rp.kills += 1
        elif tag == "W":
            rp.stalling[rec[1]] = True
        elif tag == "T":
            rp.tokens[rec[1]] = rp.tokens.get(rec[1], 0) + rec[2]
        elif tag == "D":
            c = rec[1]
            if (rp.cl == c).any():
                rep.fail("record_consistency", f"{rp.where()}: cluster {c} dissolved with members left")
            rp.dissolved[c] = True
        elif tag == "Q":
            pass
        elif tag == "E":
            pass
        elif tag == "U":
            c, lev, branch = rec[1:4]
            if not rp.stalling[c]:
                rep.fail("level_rule", f"phase {rp.phase}: non-stalling cluster {c} changed level")
            if lev != rp.level[c] + 1:
                rep.fail("level_rule", f"phase {rp.phase}: cluster {c} jumps to level {lev}")
            if rp.variant == "id_bits":
                want = 2 * rp.phase + rp.bit(c)
            else:
                want = 3 * rp.phase + _BRANCH[rp.color.get(c, UNCOLORED)]
            if branch != want:
                rep.fail("transcript_branch", f"phase {rp.phase}: cluster {c} took branch {branch}, expected {want}")
            rp.level[c] = lev
            rp.path[c].append(branch)
            rp.stalling[c] = False
            if rp.variant != "id_bits":
                rp.color[c] = UNCOLORED
        elif tag == "F":
            c = rec[1]
            if rp.level[c] != rp.b:
                rep.fail("finishing", f"cluster {c} marked finished at level {rp.level[c]}")
            rp.finished[c] = True
        else:
            rep.fail("record_consistency", f"unknown record {tag}")
    if rp.cl_start is not None:
        _end_step(rp)
    _ancestry(rp)
    nS = len(rp.S)
    left = [c for c in rp.live() if not rp.finished[c]]
    rep.add("finishing", not left, f"clusters {left[:5]} unfinished after phase {rp.phases}" if left else None)
    worst = int(rp.changes.max()) if nS else 0
    rep.add("cluster_changes", worst <= 6 * L + 1,
            f"node {int(rp.changes.argmax())} changed cluster {worst} times > {6 * L + 1}")
    rep.add("token_budget", rp.created <= 7 * nS * L, f"{rp.created} tokens created > {7 * nS * L}")
    rep.add("kill_bound", 2 * rp.kills <= nS, f"{rp.kills} of {nS} nodes killed")
    _final_nonadjacent(rp)
    if rp.variant == "id_bits":
        groups: Dict[tuple, List[int]] = {}
        for c in rp.live():
            groups.setdefault(tuple(rp.path[c]), []).append(c)
        for pos, cs in groups.items():
            lev = len(pos)
            low = {rp.cid[c] & ((1 << lev) - 1) for c in cs}
            if len(low) > 1:
                rep.fail("id_agreement", f"clusters {cs[:4]} share position {pos} but differ in low bits")
                break
        rep.ok_unless_failed("id_agreement")
    for name in ("invariant1", "invariant2", "token_accounting", "decision_rule", "ancestry",
                 "steiner_tree", "steiner_growth", "level_rule", "transcript_branch", "record_consistency"):
        rep.ok_unless_failed(name)
    if rp.variant == "balanced":
        rep.ok_unless_failed("uncolored_isolation")
    rep.measures.update({"S": nS, "kills": rp.kills, "tokens_created": rp.created,
                         "max_cluster_changes": worst, "clusters": len(rp.live())})
    return rep


def _final_nonadjacent(rp: _Replay) -> None:
    cu, cv = rp.cl[rp.src], rp.cl[rp.dst]
    bad = np.nonzero((cu >= 0) & (cv >= 0) & (cu != cv))[0]
    rp.rep.add("nonadjacent", len(bad) == 0,
               f"edge {int(rp.src[bad[0]])}-{int(rp.dst[bad[0]])} joins two clusters" if len(bad) else None)


def check_baseline_trace(g: Graph, trace) -> CheckReport:
    """Replay for the identifier-bit baseline (rg) and its balanced-colour variant (slow)."""
    rep = CheckReport()
    h = trace.header
    variant = h["variant"]
    den = int(h["accept_den"])
    rp = _Replay(g, trace, rep)
    size: Dict[int, int] = {}
    prev_comps: Optional[List[List[int]]] = None
    comps_log = []

    def components():
        live = [c for c in rp.cid if not rp.dissolved[c] and (rp.cl == c).any()]
        idx = {c: k for k, c in enumerate(live)}
        parent = list(range(len(live)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x
        cu, cv = rp.cl[rp.src], rp.cl[rp.dst]
        sel = (cu >= 0) & (cv >= 0) & (cu != cv)
        for a, b in set(zip(cu[sel].tolist(), cv[sel].tolist())):
            ra, rb = find(idx[a]), find(idx[b])
            if ra != rb:
                parent[ra] = rb
        groups: Dict[int, List[int]] = {}
        for c in live:
            groups.setdefault(find(idx[c]), []).append(c)
        return sorted(groups.values())

    def color_of(c):
        if variant == "rg":
            return BLUE if (rp.cid[c] >> (rp.phase - 1)) & 1 else RED
        return rp.color.get(c, UNCOLORED)

    for rec in trace.records:
        tag = rec[0]
        if tag == "I":
            c = rec[1]
            rp.S.append(c)
            rp.cl[c] = c
            rp.cid[c] = rec[2]
            rp.dissolved[c] = False
            rp.tree[c] = {c: -1}
            size[c] = 1
        elif tag == "P":
            rp.phase = rec[1]
            rp.color = {}
            if variant == "slow":
                prev_comps = components()
                comps_log.append(max((len(x) for x in prev_comps), default=0))
        elif tag == "Z":
            rp.color[rec[2]] = rec[3]
        elif tag == "S":
            rp.step = rec[2]
            rp.cl_start = rp.cl.copy()
        elif tag == "M":
            v, old, c, u = rec[1:5]
            if color_of(old) != RED or color_of(c) != BLUE:
                rep.fail("color_rule", f"{rp.where()}: node {v} moved from {old} to {c}")
            if v in rp.tree[c]:
                rep.fail("steiner_tree", f"{rp.where()}: node {v} added twice to the tree of {c}")
            if rp.cl_start is None or rp.cl_start[u] != c or not g.has_edge(u, v):
                rep.fail("steiner_tree", f"{rp.where()}: bad contact {u} for {v}")
            rp.tree[c][v] = u
            rp.cl[v] = c
            size[old] -= 1
            size[c] += 1
            rp.changes[v] += 1
        elif tag in ("A", "K"):
            c, p, sz = rec[1:4]
            if sz != size[c]:
                rep.fail("record_consistency", f"{rp.where()}: cluster {c} size {sz}, replay has {size[c]}")
            if (tag == "A") != (p * den >= size[c]):
                rep.fail("decision_rule", f"{rp.where()}: cluster {c} of size {size[c]} with {p} proposals")
        elif tag == "X":
            v, c = rec[1], rec[2]
            size[int(rp.cl[v])] -= 1
            rp.cl[v] = -1
            rp.kills += 1
        elif tag == "D":
            rp.dissolved[rec[1]] = True
        elif tag == "E":
            i = rec[1]
            cu, cv = rp.cl[rp.src], rp.cl[rp.dst]
            sel = (cu >= 0) & (cv >= 0) & (cu != cv)
            if variant == "rg":
                mask = (1 << i) - 1
                for a, b in set(zip(cu[sel].tolist(), cv[sel].tolist())):
                    if (rp.cid[a] ^ rp.cid[b]) & mask:
                        rep.fail("id_agreement", f"after phase {i}: adjacent {a},{b} differ in the low {i} bits")
                        break
            else:
                for a, b in set(zip(cu[sel].tolist(), cv[sel].tolist())):
                    ca, cb = rp.color.get(a, UNCOLORED), rp.color.get(b, UNCOLORED)
                    if ca != cb:
                        rep.fail("separation", f"after phase {i}: clusters {a} and {b} of different colours touch")
                        break
                new = components()
                where = {}
                for k, comp in enumerate(prev_comps):
                    for c in comp:
                        where[c] = k
                for comp in new:
                    olds = {where.get(c) for c in comp}
                    if len(olds) > 1:
                        rep.fail("contraction", f"after phase {i}: component {comp[:4]} merges old components")
                        continue
                    k = olds.pop()
                    old = len(prev_comps[k]) if k is not None else 1
                    if old >= 2 and len(comp) > (3 * old) // 4:
                        rep.fail("contraction", f"after phase {i}: {len(comp)} of {old} clusters stay connected")
    for c in [c for c in rp.cid if not rp.dissolved[c]]:
        rp.path[c] = []
    _final_nonadjacent(rp)
    nS = len(rp.S)
    rep.add("kill_bound", 2 * rp.kills <= nS, f"{rp.kills} of {nS} nodes killed")
    for name in ("color_rule", "steiner_tree", "decision_rule", "record_consistency"):
        rep.ok_unless_failed(name)
    rep.ok_unless_failed("id_agreement" if variant == "rg" else "contraction")
    if variant == "slow":
        rep.ok_unless_failed("separation")
        rep.measures["component_sizes"] = ",".join(map(str, comps_log))
    rep.measures.update({"S": nS, "kills": rp.kills})
    return rep
