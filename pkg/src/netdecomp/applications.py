"""MIS and (Delta+1)-colouring driven by a decomposition.

Colour classes are handled one after another.  Inside a class the clusters
are pairwise non-adjacent, so each one gathers its remaining subgraph at the
Steiner root, solves it greedily in ascending identifier order, and sends the
answer back down.  Gathering and answering run through the pipelined tree
operations, so faithful mode really moves the bits.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional

from ._util import clog2
from .aggregation import (RootedTree, pipelined_broadcast, pipelined_convergecast, plan_channels,
                          split_batches)
from .decomposition import Decomposition
from .graph import Graph, IdAssignment
from .sim import ModelConfig, RoundMetrics, declared
from .verify import check_decomposition


class InvalidDecomposition(ValueError):
    pass


@dataclass
class MisResult:
    selected: List[int]
    metrics: RoundMetrics

    def dumps(self) -> str:
        return "".join(f"m {v}\n" for v in self.selected)


@dataclass
class ColoringResult:
    color: List[int]
    palette: int
    metrics: RoundMetrics

    def dumps(self) -> str:
        return "".join(f"col {v} {c}\n" for v, c in enumerate(self.color))


def parse_mis(text: str) -> List[int]:
    out = []
    for k, line in enumerate(text.splitlines(), 1):
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        if tok[0] != "m" or len(tok) != 2:
            raise ValueError(f"line {k}: expected 'm <node>'")
        out.append(int(tok[1]))
    return out


def parse_coloring(text: str, n: int) -> List[Optional[int]]:
    col: List[Optional[int]] = [None] * n
    for k, line in enumerate(text.splitlines(), 1):
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        if tok[0] != "col" or len(tok) != 3:
            raise ValueError(f"line {k}: expected 'col <node> <color>'")
        v = int(tok[1])
        if not 0 <= v < n:
            raise ValueError(f"line {k}: node {v} out of range")
        col[v] = int(tok[2])
    return col


def _precheck(g: Graph, d: Decomposition) -> None:
    rep = check_decomposition(g, d)
    if not rep.ok:
        name, wit = next(iter(rep.failures().items()))
        raise InvalidDecomposition(f"{name}: {wit}")


def _classes(d: Decomposition):
    mem = d.members()
    by: Dict[int, List[int]] = {}
    for c, vs in mem.items():
        by.setdefault(d.color[vs[0]], []).append(c)
    for col in sorted(by):
        yield col, sorted(by[col]), mem


def _gather_solve(g: Graph, ids: IdAssignment, d: Decomposition, handles: List[int],
                  mem: Dict[int, List[int]], records, width: int, solve,
                  cfg: ModelConfig, met: RoundMetrics, label: str):
    """Convergecast every cluster's records to its root, solve there, broadcast the answers.

    records(c) -> {node: [int records of `width` bits]}; solve(c, sorted records)
    -> (answer int, answer bit length).  Returns {handle: answer}.
    """
    trees = [RootedTree(*d.trees[c]) for c in handles]
    specials = [records(c) for c in handles]
    answers: Dict[int, int] = {}
    for batch in split_batches(trees, cfg.bandwidth):
        sub = [trees[k] for k in batch]
        plan = plan_channels(sub, cfg.bandwidth)
        cap = max((sum(len(x) for x in specials[k].values()) for k in batch), default=0)
        got, m1 = pipelined_convergecast(g, sub, [specials[k] for k in batch], width, plan, cap, cfg,
                                         label=f"{label}_gather")
        met.absorb(m1)
        msgs, bits = [], 0
        for k, recs in zip(batch, got):
            a, nb = solve(handles[k], recs)
            msgs.append(a)
            bits = max(bits, nb)
        rec, m2 = pipelined_broadcast(g, sub, msgs, bits, plan, cfg, label=f"{label}_answer")
        met.absorb(m2)
        for k, r in zip(batch, rec):
            root = trees[k].root
            answers[handles[k]] = r[root]
            for v in mem[handles[k]]:
                if r[v] != r[root]:
                    raise AssertionError(f"node {v} received a different answer than its root")
    return answers


def mis_via_decomposition(g: Graph, ids: IdAssignment, d: Decomposition,
                          cfg: ModelConfig = ModelConfig(), precheck: bool = True) -> MisResult:
    if precheck:
        _precheck(g, d)
    b = max(ids.b, 1)
    by_id = {ids[v]: v for v in range(g.n)}
    insel = [False] * g.n
    dominated = [False] * g.n
    met = RoundMetrics(mode=cfg.mode)
    for col, handles, mem in _classes(d):
        def records(c):
            out: Dict[int, List[int]] = {}
            for v in mem[c]:
                if dominated[v]:
                    continue
                lst = [(ids[v] << b) | ids[v]]
                for w in g.adj[v]:
                    if d.cluster_of[w] == c and not dominated[w] and ids[w] > ids[v]:
                        lst.append((ids[v] << b) | ids[w])
                out[v] = lst
            return out

        def solve(c, recs):
            nodes, adj = [], {}
            for r in recs:
                x, y = r >> b, r & ((1 << b) - 1)
                if x == y:
                    nodes.append(x)
                    adj.setdefault(x, set())
                else:
                    adj.setdefault(x, set()).add(y)
                    adj.setdefault(y, set()).add(x)
            chosen = set()
            for x in sorted(nodes):
                if not adj.get(x, set()) & chosen:
                    chosen.add(x)
            ans = 0
            for x in sorted(chosen):          # id + 1 so that id 0 is not a silent zero chunk
                ans = (ans << (b + 1)) | (x + 1)
            return ans, (b + 1) * len(chosen)

        answers = _gather_solve(g, ids, d, handles, mem, records, 2 * b, solve, cfg, met, f"mis{col}")
        for c in handles:
            a = answers[c]
            while a:
                insel[by_id[(a & ((1 << (b + 1)) - 1)) - 1]] = True
                a >>= b + 1
        # one round: new members tell their neighbours
        met.absorb(declared(cfg.mode, 1, f"mis{col}_notify"))
        for v in range(g.n):
            if insel[v]:
                dominated[v] = True
                for w in g.adj[v]:
                    dominated[w] = True
    sel = [v for v in range(g.n) if insel[v]]
    return MisResult(sel, met)


def coloring_via_decomposition(g: Graph, ids: IdAssignment, d: Decomposition, delta: int,
                               cfg: ModelConfig = ModelConfig(), precheck: bool = True) -> ColoringResult:
    if delta < g.max_degree():
        raise ValueError(f"delta {delta} is below the maximum degree {g.max_degree()}")
    if precheck:
        _precheck(g, d)
    b = max(ids.b, 1)
    pal = delta + 1
    cb = max(1, clog2(pal + 1))
    by_id = {ids[v]: v for v in range(g.n)}
    color = [0] * g.n
    met = RoundMetrics(mode=cfg.mode)
    full = (1 << pal) - 1
    for cls, handles, mem in _classes(d):
        # records: kind 0 = node with its forbidden-colour mask, kind 1 = inner edge
        W = 1 + 2 * b + pal

        def records(c):
            out: Dict[int, List[int]] = {}
            for v in mem[c]:
                mask = 0
                for w in g.adj[v]:
                    if color[w]:
                        mask |= 1 << (color[w] - 1)
                lst = [(((ids[v] << b) | ids[v]) << pal) | mask]
                for w in g.adj[v]:
                    if d.cluster_of[w] == c and ids[w] > ids[v]:
                        lst.append((1 << (W - 1)) | (((ids[v] << b) | ids[w]) << pal))
                out[v] = lst
            return out

        def solve(c, recs):
            forb, adj = {}, {}
            for r in recs:
                kind = r >> (W - 1)
                pair = (r >> pal) & ((1 << (2 * b)) - 1)
                x, y = pair >> b, pair & ((1 << b) - 1)
                if kind == 0:
                    forb[x] = r & full
                    adj.setdefault(x, set())
                else:
                    adj.setdefault(x, set()).add(y)
                    adj.setdefault(y, set()).add(x)
            got: Dict[int, int] = {}
            for x in sorted(forb):
                used = forb[x]
                for y in adj[x]:
                    if y in got:
                        used |= 1 << (got[y] - 1)
                free = [k for k in range(1, pal + 1) if not used >> (k - 1) & 1]
                if not free:
                    raise AssertionError(f"node with id {x} has no free colour")
                got[x] = free[0]
            ans = 0
            for x in sorted(got):
                ans = (ans << (b + cb)) | (x << cb) | got[x]
            return ans, (b + cb) * len(got)

        answers = _gather_solve(g, ids, d, handles, mem, records, W, solve, cfg, met, f"col{cls}")
        for c in handles:
            a = answers[c]
            while a:
                rec = a & ((1 << (b + cb)) - 1)
                a >>= b + cb
                color[by_id[rec >> cb]] = rec & ((1 << cb) - 1)
        met.absorb(declared(cfg.mode, 1, f"col{cls}_notify"))
    return ColoringResult(color, pal, met)
