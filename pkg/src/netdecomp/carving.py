"""Ball carving: clusters grow by eating boundary nodes or kill them and stall.

Each phase has a fixed number of steps.  In a step every living node looks at
the neighbouring clusters, possibly proposes to one of them, and every
proposed-to cluster either swallows all of its proposers or kills them all.
Clusters carry tokens (their budget for killing) and a level; stalling
clusters move one level up at the end of the phase.  Everything that happens
is written to a line-oriented CarveTrace that verify.check_carve_trace replays.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._util import ceil_div, lg
from .aggregation import (RootedTree, broadcast_rounds, pipelined_broadcast, pipelined_sum,
                          plan_channels, split_batches, sum_rounds, sum_width)
from .graph import Graph, IdAssignment
from .sim import (ModelConfig, NodeProgram, RoundMetrics, charge, run_protocol)

RED, BLUE, UNCOLORED = 0, 1, -1
COLOR_BRANCH = {RED: 0, BLUE: 1, UNCOLORED: 2}
ID_BITS = "id_bits"
BALANCED = "balanced"


class CarveInvariantError(RuntimeError):
    def __init__(self, msg: str, excerpt: Sequence[str] = ()):
        text = msg if not excerpt else msg + "\n  " + "\n  ".join(excerpt)
        super().__init__(text)
        self.excerpt = list(excerpt)


@dataclass(frozen=True)
class CarveParams:
    n: int
    b: int
    L: int
    phases: int
    steps_per_phase: int
    accept_den: int
    kill_cost: int
    bit_source: str = ID_BITS

    @classmethod
    def make(cls, n: int, b: int, bit_source: str = ID_BITS) -> "CarveParams":
        L = b + lg(n)
        return cls(n, b, L, 2 * L, 28 * L, 28 * L, 14 * L, bit_source)

    def as_dict(self):
        return {"n": self.n, "b": self.b, "L": self.L, "phases": self.phases,
                "steps": self.steps_per_phase, "accept_den": self.accept_den,
                "kill_cost": self.kill_cost, "bit_source": self.bit_source}


def potential(level: int, bit: int, i: int) -> int:
    """3i - 2*level + bit."""
    return 3 * i - 2 * level + bit


# --- trace ------------------------------------------------------------------

class CarveTrace:
    """Header plus one record per event.

    I c id            initial cluster c (index of its seed node) with identifier id
    P i               phase i starts
    Z i c color       colour of cluster c for this phase (-1 none, 0 red, 1 blue)
    Y i c phi         potential of c at the start of phase i
    S i j             step j of phase i (only steps in which something can happen)
    M v c c2 u        v leaves c for c2 through contact u
    A c p d           c accepts p proposals, token delta d
    K c p d           c kills its p proposers, token delta d
    X v c             v died proposing to c
    W c               c stalls after an empty step
    D c               c lost its last member
    Q i j             from step j on phase i is idle
    E i               phase i ends
    U c lev branch    c moves to level lev through transcript branch
    F c               c is finished
    T c d             bare token adjustment (never emitted by carve itself)
    """

    def __init__(self, header: Dict[str, object]):
        self.header = dict(header)
        self.records: List[tuple] = []

    def add(self, *rec) -> None:
        self.records.append(rec)

    def lines(self):
        yield "carve-trace 1"
        yield "H " + " ".join(f"{k}={v}" for k, v in self.header.items())
        for rec in self.records:
            yield " ".join(str(x) for x in rec)

    def dumps(self) -> str:
        return "\n".join(self.lines()) + "\n"

    @classmethod
    def loads(cls, text: str) -> "CarveTrace":
        it = iter(text.splitlines())
        if next(it, "").strip() != "carve-trace 1":
            raise ValueError("not a carve trace")
        head = next(it, "").split()
        if not head or head[0] != "H":
            raise ValueError("trace header missing")
        header = {}
        for kv in head[1:]:
            k, v = kv.split("=", 1)
            header[k] = int(v) if v.lstrip("-").isdigit() else v
        tr = cls(header)
        for line in it:
            tok = line.split()
            if tok:
                tr.records.append((tok[0],) + tuple(int(x) for x in tok[1:]))
        return tr

    def __eq__(self, other):
        return isinstance(other, CarveTrace) and self.dumps() == other.dumps()


@dataclass
class ClusterState:
    cluster: int
    cluster_id: int
    level: int
    tokens: int
    members: frozenset
    stalling: bool
    finished: bool
    steiner: RootedTree
    color_bit: Optional[int] = None
    path: Tuple[int, ...] = ()


@dataclass
class CarveResult:
    S_prime: List[int]
    clusters: List[ClusterState]
    trace: CarveTrace
    metrics: RoundMetrics
    killed: List[int]
    params: CarveParams
    dissolved_trees: List[RootedTree] = field(default_factory=list)


@dataclass
class Proposals:
    nodes: np.ndarray
    targets: np.ndarray
    contacts: np.ndarray

    def __len__(self):
        return len(self.nodes)


# --- state ------------------------------------------------------------------

class CarveState:
    def __init__(self, g: Graph, ids: IdAssignment, S: Sequence[int], params: CarveParams,
                 cfg: ModelConfig):
        n = g.n
        self.g, self.ids, self.params, self.cfg = g, ids, params, cfg
        self.n = n
        self.S = sorted(set(int(v) for v in S))
        if not self.S:
            raise ValueError("carve needs a nonempty node set")
        inS = np.zeros(n, dtype=bool)
        inS[self.S] = True
        self.inS = inS
        self.cl = np.full(n, -1, dtype=np.int64)
        self.cl[self.S] = self.S
        self.exists = inS.copy()              # cluster index c exists iff its seed is in S
        self.level = np.zeros(n, dtype=np.int64)
        self.tokens = np.where(inS, 1, 0).astype(np.int64)
        self.stalling = np.zeros(n, dtype=bool)
        self.finished = np.zeros(n, dtype=bool)
        self.dissolved = np.zeros(n, dtype=bool)
        self.members = inS.astype(np.int64)
        self.color = np.full(n, UNCOLORED, dtype=np.int64)
        self.needs_color = inS.copy()
        self.cid = [ids[v] for v in range(n)]
        self.crank = ids.rank
        self.bit = np.zeros(n, dtype=np.int64)
        self.changes = np.zeros(n, dtype=np.int64)
        self.tpar: Dict[int, Dict[int, int]] = {c: {c: -1} for c in self.S}
        self.tdep: Dict[int, Dict[int, int]] = {c: {c: 0} for c in self.S}
        self.maxdep = np.zeros(n, dtype=np.int64)
        self.tsize = inS.astype(np.int64)
        self.load: Dict[Tuple[int, int], int] = {}
        self.path: Dict[int, List[int]] = {c: [] for c in self.S}
        self.killed: List[int] = []
        self.created = len(self.S)
        self.phase = 0
        self.step = 0
        self._trees_dirty = True
        self._tree_cache: Optional[Tuple[List[int], List[RootedTree]]] = None
        src, dst = g.arcs
        keep = inS[src] & inS[dst]
        self.esrc, self.edst = src[keep], dst[keep]
        self.metrics = RoundMetrics(mode=cfg.mode)
        self.trace = CarveTrace({"variant": params.bit_source, **params.as_dict(),
                                 "S": len(self.S), "idbits": ids.b})
        for c in self.S:
            self.trace.add("I", c, self.cid[c])

    # -- helpers --
    def live_clusters(self) -> np.ndarray:
        return np.nonzero(self.exists & ~self.dissolved)[0]

    def refresh_bits(self) -> None:
        live = self.live_clusters()
        if self.params.bit_source == ID_BITS:
            b = self.params.b
            for c in live:
                lev = int(self.level[c])
                self.bit[c] = (self.cid[c] >> lev) & 1 if lev < b else 0
        else:
            self.bit[live] = (self.color[live] == BLUE).astype(np.int64)

    def trees(self) -> Tuple[List[int], List[RootedTree]]:
        if self._trees_dirty or self._tree_cache is None:
            live = [int(c) for c in self.live_clusters()]
            self._tree_cache = (live, [RootedTree(c, self.tpar[c]) for c in live])
            self._trees_dirty = False
        return self._tree_cache

    def tree_stats(self) -> Tuple[int, int, int]:
        """(max depth R, max edge overlap P, max tree size) over live trees."""
        live = self.live_clusters()
        R = int(self.maxdep[live].max()) if len(live) else 0
        P = max(self.load.values(), default=1)
        size = int(self.tsize[live].max()) if len(live) else 1
        return R, max(P, 1), size

    def exchange_bits(self) -> int:
        return 2 * self.ids.b + (self.params.b).bit_length() + 2

    def excerpt(self, k: int = 12) -> List[str]:
        return [" ".join(map(str, r)) for r in self.trace.records[-k:]]


# --- the three step operations ----------------------------------------------

def propose_step(state: CarveState) -> Proposals:
    """Every living node picks at most one neighbouring cluster to join."""
    src, dst = state.esrc, state.edst
    cl = state.cl
    cu, cv = cl[src], cl[dst]
    ok = (cu >= 0) & (cv >= 0) & (cu != cv)
    idx = np.nonzero(ok)[0]
    cu, cv = cu[idx], cv[idx]
    ok = ~state.stalling[cv]
    lu, lv = state.level[cu], state.level[cv]
    bu, bv = state.bit[cu], state.bit[cv]
    ok &= (lv < lu) | ((lv == lu) & (bv == 1) & (bu == 0))
    idx, cv, lv, bv = idx[ok], cv[ok], lv[ok], bv[ok]
    if len(idx) == 0:
        e = np.zeros(0, dtype=np.int64)
        return Proposals(e, e, e)
    n = state.n
    rank = state.crank
    key = ((lv * 2 + (1 - bv)) * n + rank[cv]) * n + rank[dst[idx]]
    s = src[idx]
    order = np.lexsort((key, s))
    s_sorted = s[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = s_sorted[1:] != s_sorted[:-1]
    pick = idx[order[first]]
    return Proposals(src[pick], cl[dst[pick]], dst[pick])


def choose_target(own, nbrs):
    """Node-local version of the proposal rule (used by the faithful programs).

    own = (cid, level, bit, stalling); nbrs = [(cid, level, bit, stalling, node_id)].
    Returns the chosen neighbour tuple or None.
    """
    cid, lev, bit, _ = own
    best, best_key = None, None
    for x in nbrs:
        c2, l2, b2, st2, nid = x
        if c2 == cid or st2:
            continue
        if l2 < lev or (l2 == lev and b2 == 1 and bit == 0):
            key = (l2, 1 - b2, c2, nid)
            if best_key is None or key < best_key:
                best, best_key = x, key
    return best


def resolve_step(state: CarveState, props: Proposals, counts: Optional[Dict[int, int]] = None
                 ) -> int:
    """Apply accept/kill decisions.  Returns the number of proposals handled."""
    prm, tr = state.params, state.trace
    n = state.n
    p = np.bincount(props.targets, minlength=n) if len(props) else np.zeros(n, dtype=np.int64)
    if counts is not None:
        for c, x in counts.items():
            if int(p[c]) != x:
                raise CarveInvariantError(f"aggregated count {x} for cluster {c} differs from {int(p[c])}",
                                          state.excerpt())
    if len(props):
        bad = props.targets[state.finished[props.targets] | state.stalling[props.targets]]
        if len(bad):
            raise CarveInvariantError(f"proposal to a stalling or finished cluster {int(bad[0])}",
                                      state.excerpt())
    order = np.lexsort((props.nodes, props.targets)) if len(props) else []
    by_target: Dict[int, List[Tuple[int, int]]] = {}
    for k in order:
        by_target.setdefault(int(props.targets[k]), []).append((int(props.nodes[k]), int(props.contacts[k])))
    touched = set()
    for c, plist in by_target.items():
        pc = len(plist)
        t = int(state.tokens[c])
        if pc * prm.accept_den >= t:
            state.tokens[c] = t + pc
            state.created += pc
            tr.add("A", c, pc, pc)
            for v, u in plist:
                old = int(state.cl[v])
                tr.add("M", v, old, c, u)
                if v in state.tpar[c]:
                    raise CarveInvariantError(f"node {v} re-enters the Steiner tree of {c}", state.excerpt())
                state.tpar[c][v] = u
                d = state.tdep[c][u] + 1
                state.tdep[c][v] = d
                if d > state.maxdep[c]:
                    state.maxdep[c] = d
                state.tsize[c] += 1
                e = (min(u, v), max(u, v))
                state.load[e] = state.load.get(e, 0) + 1
                state.cl[v] = c
                state.members[old] -= 1
                state.members[c] += 1
                state.changes[v] += 1
                touched.add(old)
        else:
            delta = -pc * prm.kill_cost
            if t + delta <= 0:
                raise CarveInvariantError(f"token underflow in cluster {c}", state.excerpt())
            state.tokens[c] = t + delta
            state.stalling[c] = True
            tr.add("K", c, pc, delta)
            for v, _u in plist:
                old = int(state.cl[v])
                tr.add("X", v, c)
                state.cl[v] = -1
                state.members[old] -= 1
                state.killed.append(v)
                touched.add(old)
    for c in sorted(touched):
        if state.members[c] == 0 and not state.dissolved[c]:
            state.dissolved[c] = True
            tr.add("D", c)
            for v, u in state.tpar[c].items():
                if u >= 0:
                    e = (min(u, v), max(u, v))
                    state.load[e] -= 1
                    if state.load[e] == 0:
                        del state.load[e]
    idle = state.exists & ~state.dissolved & ~state.stalling & ~state.finished & (p == 0)
    for c in np.nonzero(idle)[0]:
        state.stalling[c] = True
        tr.add("W", int(c))
    if len(props):
        state._trees_dirty = True
    if len(state.killed) * 2 > len(state.S):
        raise CarveInvariantError("more than half of S was killed", state.excerpt())
    return len(props)


def advance_phase(state: CarveState) -> None:
    """Stalling clusters move one level up; level b means finished."""
    prm, tr = state.params, state.trace
    i = state.phase
    tr.add("E", i)
    for c in state.live_clusters():
        c = int(c)
        if not state.stalling[c]:
            continue
        if prm.bit_source == ID_BITS:
            branch = 2 * i + int(state.bit[c])
        else:
            branch = 3 * i + COLOR_BRANCH[int(state.color[c])]
        state.level[c] += 1
        state.path[c].append(branch)
        state.stalling[c] = False
        tr.add("U", c, int(state.level[c]), branch)
        if state.level[c] >= prm.b:
            state.finished[c] = True
            tr.add("F", c)
        else:
            state.needs_color[c] = True
            state.color[c] = UNCOLORED


def start_phase(state: CarveState, i: int, colorer=None) -> None:
    prm, tr = state.params, state.trace
    state.phase = i
    tr.add("P", i)
    if prm.bit_source == BALANCED:
        if colorer is None:
            raise ValueError("the balanced variant needs a colouring routine")
        todo = [int(c) for c in state.live_clusters()
                if state.needs_color[c] and not state.finished[c]]
        colors = colorer(state, todo) if todo else {}
        for c in todo:
            col = colors.get(c, UNCOLORED)
            state.color[c] = col
            state.needs_color[c] = False
            tr.add("Z", i, c, col)
    state.refresh_bits()
    for c in state.live_clusters():
        c = int(c)
        lev = int(state.level[c])
        tr.add("Y", i, c, potential(lev, int(state.bit[c]), i))
        if state.finished[c]:
            continue
        e = i - 2 * lev - 1
        t = int(state.tokens[c])
        if (e > 0 and t < (1 << e)) or t < 1:
            raise CarveInvariantError(
                f"Invariant 1: phase {i} cluster {c} has {t} tokens at level {lev}", state.excerpt())


# --- step realisations -------------------------------------------------------

def step_cost(R: int, P: int, size: int, n: int, B: float, exchange_bits: int) -> Dict[str, int]:
    """Round price of one step: exchange, count up, verdict down, reply."""
    m = n.bit_length()
    M = sum_width(m, size)
    if B == math.inf:
        ex, batches, w = 1, 1, M
    else:
        ex = ceil_div(exchange_bits, int(B))
        batches = ceil_div(P, int(B))
        w = int(B) // ceil_div(P, batches)
    Ks = ceil_div(M, min(w, M))
    return {"exchange": ex + 1,
            "sum": batches * sum_rounds(R, Ks),
            "broadcast": batches * broadcast_rounds(R, 1),
            "reply": 1}


def logical_step_cost(state: CarveState) -> Dict[str, int]:
    R, P, size = state.tree_stats()
    return step_cost(R, P, size, state.n, state.cfg.bandwidth, state.exchange_bits())


class _ExchangeProgram(NodeProgram):
    """Neighbour exchange, local proposal choice, and delivery of the proposal bit."""

    def __init__(self, info, widths, B):
        self.info = info          # per node (cid, level, bit, stalling, ident) or None
        self.widths = widths
        self.total = sum(widths)
        self.frag = self.total if B == math.inf else int(B)
        self.nfrag = ceil_div(self.total, self.frag)

    def _encode(self, rec):
        return "".join(format(x, f"0{w}b") for x, w in zip(rec, self.widths))

    def _decode(self, s):
        out, pos = [], 0
        for w in self.widths:
            out.append(int(s[pos:pos + w], 2))
            pos += w
        return tuple(out)

    def init(self, node, ident, degree, params):
        rec = self.info[node]
        st = {"v": node, "tau": 0, "buf": {}, "choice": None, "proposers": []}
        if rec is None:
            st["live"] = False
            return st, {}
        st["live"] = True
        st["word"] = self._encode(rec)
        return st, self._frag(st, 0)

    def _frag(self, st, k):
        piece = st["word"][k * self.frag:(k + 1) * self.frag]
        return {w: piece for w in self._nbrs[st["v"]]}

    def bind(self, g):
        self._nbrs = g.adj
        return self

    def transition(self, st, inbox):
        st["tau"] += 1
        tau = st["tau"]
        if not st["live"]:
            return st, {}, True
        if tau <= self.nfrag:
            for u, msg in inbox.items():
                st["buf"][u] = st["buf"].get(u, "") + msg
            if tau < self.nfrag:
                return st, self._frag(st, tau), False
            nbrs = [self._decode(word) + (u,) for u, word in sorted(st["buf"].items())]
            own = self.info[st["v"]][:4]
            best = choose_target(own, [x[:5] for x in nbrs])
            if best is None:
                return st, {}, False
            contact = next(x[5] for x in nbrs if x[:5] == best)
            st["choice"] = (best[0], contact)
            return st, {contact: "1"}, False
        st["proposers"] = sorted(inbox)
        return st, {}, True

    def output(self, st):
        return st


class _ReplyProgram(NodeProgram):
    """Contacts tell their proposers the verdict (one bit, one round)."""

    def __init__(self, verdicts):
        self.verdicts = verdicts  # contact -> (bit, [proposers])

    def init(self, node, ident, degree, params):
        if node in self.verdicts:
            bit, props = self.verdicts[node]
            return {"got": None}, {v: str(bit) for v in props}
        return {"got": None}, {}

    def transition(self, st, inbox):
        if inbox:
            (msg,) = inbox.values()
            st["got"] = int(msg)
        return st, {}, True


def faithful_step(state: CarveState) -> Tuple[Proposals, Dict[int, int], RoundMetrics]:
    """One step through real message passing; returns what the nodes decided."""
    g, cfg = state.g, state.cfg
    met = RoundMetrics(mode=cfg.mode)
    b_id = state.ids.b
    widths = (b_id, max(1, state.params.b.bit_length()), 1, 1, b_id)
    info = [None] * state.n
    for v in range(state.n):
        c = int(state.cl[v])
        if c >= 0:
            info[v] = (state.cid[c], int(state.level[c]), int(state.bit[c]),
                       int(state.stalling[c]), state.ids[v])
    prog = _ExchangeProgram(info, widths, cfg.bandwidth).bind(g)
    outs, m1 = run_protocol(g, state.ids, prog, cfg, label="exchange")
    met.absorb(m1)
    by_cid = {state.cid[c]: c for c in state.live_clusters()}
    nodes, targets, contacts = [], [], []
    for v in range(state.n):
        ch = outs[v]["choice"]
        if ch is not None:
            nodes.append(v)
            targets.append(by_cid[ch[0]])
            contacts.append(ch[1])
    recv: Dict[int, List[int]] = {v: outs[v]["proposers"] for v in range(state.n) if outs[v]["proposers"]}
    props = Proposals(np.asarray(nodes, dtype=np.int64), np.asarray(targets, dtype=np.int64),
                      np.asarray(contacts, dtype=np.int64))
    # proposal counts travel up every live Steiner tree
    live, trees = state.trees()
    m = state.n.bit_length()
    values = []
    for c, t in zip(live, trees):
        values.append({u: len(recv[u]) for u in t.nodes if u in recv and state.cl[u] == c})
    counts: Dict[int, int] = {}
    verdict_bits: Dict[int, int] = {}
    batches = split_batches(trees, cfg.bandwidth)
    sums_all = {}
    for batch in batches:
        sub = [trees[k] for k in batch]
        plan = plan_channels(sub, cfg.bandwidth)
        sums, ms = pipelined_sum(g, sub, [values[k] for k in batch], m, plan, cfg, label="sum")
        met.absorb(ms)
        for k, s in zip(batch, sums):
            sums_all[k] = s
    for k, c in enumerate(live):
        pc = sums_all[k]
        if pc:
            counts[c] = pc
        verdict_bits[c] = 1 if (pc and not state.stalling[c]
                                and pc * state.params.accept_den >= int(state.tokens[c])) else 0
    # verdicts travel back down
    heard: Dict[int, int] = {}
    for batch in batches:
        sub = [trees[k] for k in batch]
        plan = plan_channels(sub, cfg.bandwidth)
        rec, mb = pipelined_broadcast(g, sub, [verdict_bits[live[k]] for k in batch], 1, plan, cfg,
                                      label="broadcast")
        met.absorb(mb)
        for k, r in zip(batch, rec):
            for u, bit in r.items():
                if state.cl[u] == live[k]:
                    heard[u] = bit
    reply = {u: (heard[u], ps) for u, ps in recv.items()}
    outs2, m3 = run_protocol(g, state.ids, _ReplyProgram(reply), cfg, label="reply")
    met.absorb(m3)
    for v, c in zip(nodes, targets):
        want = 1 if verdict_bits[c] else 0
        if outs2[v]["got"] != want:
            raise CarveInvariantError(f"node {v} heard verdict {outs2[v]['got']}, root decided {want}",
                                      state.excerpt())
    return props, counts, met


# --- driver ------------------------------------------------------------------

def run_carve(state: CarveState, colorer=None) -> None:
    prm, cfg, tr = state.params, state.cfg, state.trace
    for i in range(1, prm.phases + 1):
        start_phase(state, i, colorer)
        memo: Optional[RoundMetrics] = None
        for j in range(1, prm.steps_per_phase + 1):
            state.step = j
            tr.add("S", i, j)
            if cfg.faithful:
                props, counts, met = faithful_step(state)
                state.metrics.absorb(met)
                resolve_step(state, props, counts)
                memo = met
            else:
                cost = logical_step_cost(state)
                props = propose_step(state)
                resolve_step(state, props)
                for k, r in cost.items():
                    charge(state.metrics, r, k)
            if len(props) == 0:
                rest = prm.steps_per_phase - j
                if rest:
                    tr.add("Q", i, j + 1)
                    if cfg.faithful:
                        state.metrics.absorb(memo, times=rest)
                    else:
                        for k, r in logical_step_cost(state).items():
                            charge(state.metrics, r * rest, k)
                break
        advance_phase(state)
    unfinished = [int(c) for c in state.live_clusters() if not state.finished[c]]
    if unfinished:
        raise CarveInvariantError(f"clusters {unfinished[:5]} unfinished after the last phase",
                                  state.excerpt())


def collect(state: CarveState) -> CarveResult:
    clusters = []
    for c in state.live_clusters():
        c = int(c)
        mem = frozenset(int(v) for v in np.nonzero(state.cl == c)[0])
        col = None if state.params.bit_source == ID_BITS else int(state.color[c])
        clusters.append(ClusterState(c, state.cid[c], int(state.level[c]), int(state.tokens[c]), mem,
                                     bool(state.stalling[c]), bool(state.finished[c]),
                                     RootedTree(c, state.tpar[c], mem), col, tuple(state.path[c])))
    dead = [RootedTree(int(c), state.tpar[int(c)]) for c in np.nonzero(state.dissolved)[0]]
    S2 = sorted(int(v) for v in state.S if state.cl[v] >= 0)
    return CarveResult(S2, clusters, state.trace, state.metrics, sorted(state.killed), state.params, dead)


def carve(g: Graph, ids: IdAssignment, S: Sequence[int], params: Optional[CarveParams] = None,
          cfg: ModelConfig = ModelConfig(), colorer=None) -> CarveResult:
    """Cluster at least half of S into non-adjacent low-diameter clusters."""
    if params is None:
        params = CarveParams.make(g.n, ids.b)
    state = CarveState(g, ids, S, params, cfg)
    run_carve(state, colorer)
    return collect(state)
