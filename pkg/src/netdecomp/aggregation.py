"""Pipelined aggregation over (possibly overlapping) rooted trees.

All trees of one plan share a global schedule aligned to the deepest tree.
Every tree gets w = floor(B / P) bits on each of its edges per round, where P
is the largest number of trees sharing one edge.  Payloads are cut into
w-bit chunks (the last chunk zero padded) and each chunk costs one round.

Schedule conventions (engine round 0 is the init step):
  sum        node at depth d emits chunk k (LSB first) in round R-d+k
  min        node at depth d emits chunk k (MSB first) in round R-d+k
  broadcast  node at depth d forwards chunk k in round d+k
  convergecast  node at depth d emits chunk c of frame j in round R-d+jF+c

so a parent always reads its children's chunk in the same round in which it
has to emit its own.  Both min and sum therefore wake a node at depth d from
round R-d on, so the two protocols share one timing convention.

Declared round bounds (asserted in the tests):
  sum           rounds <= r + ceil(M/w) * C_S + C_0, M = m + ceil(log2 size) + 1
  min           rounds <= r + ceil(m/w) * C_S + C_0
  broadcast     rounds <= r + ceil(m/w) * C_S + C_0
  convergecast  rounds <= r + (K+1) * ceil((m+1)/w) * C_S + C_0
"""
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ._util import ceil_div, clog2
from .graph import Graph
from .sim import FAITHFUL, ModelConfig, NodeProgram, RoundMetrics, charge, run_protocol

C_S = 1
C_0 = 1


class PlanError(ValueError):
    pass


class RootedTree:
    """A rooted tree embedded in a host graph, given by parent pointers."""

    def __init__(self, root: int, parent: Dict[int, int], terminals: Optional[Iterable[int]] = None):
        self.root = root
        self.parent = dict(parent)
        self.parent[root] = -1
        self.children: Dict[int, List[int]] = {v: [] for v in self.parent}
        for v, p in self.parent.items():
            if p >= 0:
                if p not in self.children:
                    raise ValueError(f"parent {p} of {v} is not a tree node")
                self.children[p].append(v)
        for ch in self.children.values():
            ch.sort()
        self.depth: Dict[int, int] = {root: 0}
        order = [root]
        for v in order:
            for c in self.children[v]:
                self.depth[c] = self.depth[v] + 1
                order.append(c)
        if len(order) != len(self.parent):
            raise ValueError("parent pointers do not form a tree hanging from the root")
        self.terminals = frozenset(self.parent if terminals is None else terminals)

    @property
    def nodes(self):
        return self.parent.keys()

    @property
    def size(self) -> int:
        return len(self.parent)

    @property
    def r(self) -> int:
        return max(self.depth.values())

    def edges(self):
        return [(v, p) for v, p in self.parent.items() if p >= 0]

    def check_host(self, g: Graph) -> None:
        for v, p in self.edges():
            if not g.has_edge(v, p):
                raise ValueError(f"tree edge {v}-{p} is not in the host graph")


@dataclass
class ChannelPlan:
    trees: List[RootedTree]
    bandwidth: float
    P: int
    width: Optional[int]          # bits per tree per edge per round, None if unbounded
    edge_load: Dict[Tuple[int, int], List[int]]

    @property
    def R(self) -> int:
        return max((t.r for t in self.trees), default=0)

    def chunk_width(self, payload: int) -> int:
        if payload <= 0:
            return 1
        return payload if self.width is None else min(self.width, payload)


def edge_loads(trees: Sequence[RootedTree]) -> Dict[Tuple[int, int], List[int]]:
    load: Dict[Tuple[int, int], List[int]] = {}
    for i, t in enumerate(trees):
        for v, p in t.edges():
            load.setdefault((min(v, p), max(v, p)), []).append(i)
    return load


def plan_channels(trees: Sequence[RootedTree], B: float) -> ChannelPlan:
    trees = list(trees)
    load = edge_loads(trees)
    P = max((len(x) for x in load.values()), default=0)
    P = max(P, 1)
    if B == math.inf:
        return ChannelPlan(trees, B, P, None, load)
    if P > B:
        raise PlanError(f"{P} trees share an edge but only {B} bits are available")
    return ChannelPlan(trees, B, P, int(B) // P, load)


def plan_from_P(P: int, B: float) -> int:
    """The per-tree width the overlap rule assigns (exposed for the cost contracts)."""
    if P > B:
        raise PlanError(f"{P} trees share an edge but only {B} bits are available")
    return int(B) // max(P, 1)


def split_batches(trees: Sequence[RootedTree], B: float) -> List[List[int]]:
    """First-fit grouping of trees so that no edge carries more than B trees per group."""
    if B == math.inf:
        return [list(range(len(trees)))] if trees else []
    groups: List[Tuple[List[int], Dict[Tuple[int, int], int]]] = []
    for i, t in enumerate(trees):
        es = [(min(v, p), max(v, p)) for v, p in t.edges()]
        for members, load in groups:
            if all(load.get(e, 0) < B for e in es):
                members.append(i)
                for e in es:
                    load[e] = load.get(e, 0) + 1
                break
        else:
            groups.append(([i], {e: 1 for e in es}))
    return [m for m, _ in groups]


# --- schedule lengths (shared by both modes) --------------------------------

def sum_width(m: int, size: int) -> int:
    return m + clog2(max(size, 1)) + 1


def sum_rounds(R: int, K: int) -> int:
    return max(1, R + K - 1)


def bound_sum(r: int, m: int, w: int, size: int) -> int:
    return r + ceil_div(sum_width(m, size), w) * C_S + C_0


def bound_min(r: int, m: int, w: int) -> int:
    return r + ceil_div(m, w) * C_S + C_0


def bound_broadcast(r: int, m: int, w: int) -> int:
    return r + ceil_div(m, w) * C_S + C_0


def bound_convergecast(r: int, m: int, w: int, cap: int) -> int:
    return r + (cap + 1) * ceil_div(m + 1, w) * C_S + C_0


# --- shared layout for node programs ----------------------------------------

class _Role:
    __slots__ = ("t", "parent", "children", "depth")

    def __init__(self, t, parent, children, depth):
        self.t, self.parent, self.children, self.depth = t, parent, children, depth


def _roles(trees: Sequence[RootedTree], n: int) -> List[List[_Role]]:
    roles: List[List[_Role]] = [[] for _ in range(n)]
    for i, t in enumerate(trees):
        for v in t.nodes:
            roles[v].append(_Role(i, t.parent[v], tuple(t.children[v]), t.depth[v]))
    return roles


def _split(msg: str, expected: List[int], w: int) -> Dict[int, int]:
    if len(msg) != w * len(expected):
        raise RuntimeError(f"message of {len(msg)} bits, expected {w * len(expected)}")
    return {t: int(msg[k * w:(k + 1) * w], 2) for k, t in enumerate(expected)}


def _bits(val: int, w: int) -> str:
    return format(val, f"0{w}b")


def _emit(out: Dict[int, List[str]], dest: int, chunk: str) -> None:
    out.setdefault(dest, []).append(chunk)


def _flatten(out: Dict[int, List[str]]) -> Dict[int, str]:
    return {d: "".join(parts) for d, parts in out.items()}


class _Staggered(NodeProgram):
    """Common driver: subclasses implement act(state, tau, inbox) -> outbox parts."""

    def __init__(self, roles, R, w):
        self.roles = roles
        self.R = R
        self.w = w

    def init(self, node, ident, degree, params):
        st = self.make_state(node)
        out = self.act(st, 0, {})
        return st, _flatten(out)

    def transition(self, st, inbox):
        st["tau"] += 1
        out = self.act(st, st["tau"], inbox)
        return st, _flatten(out), st["tau"] >= st["end"]

    def output(self, st):
        return st


class _SumProgram(_Staggered):
    def __init__(self, roles, R, w, K, values, record):
        super().__init__(roles, R, w)
        self.K = K
        self.values = values
        self.record = record

    def make_state(self, v):
        rs = self.roles[v]
        end = 1
        for ro in rs:
            end = max(end, self.R + self.K - 1 if ro.parent < 0 else self.R - ro.depth + self.K - 1)
        x = {ro.t: self.values[ro.t].get(v, 0) for ro in rs}
        return {"v": v, "tau": 0, "end": end, "x": x, "hist": {ro.t: [] for ro in rs}}

    def act(self, st, tau, inbox):
        R, K, w = self.R, self.K, self.w
        v = st["v"]
        rs = self.roles[v]
        if inbox:
            expect: Dict[int, List[int]] = {}
            for ro in rs:
                k = tau - (R - ro.depth)  # children's chunk index read now
                if 0 <= k < K:
                    for c in ro.children:
                        expect.setdefault(c, []).append(ro.t)
            for c, msg in inbox.items():
                got = _split(msg, expect.get(c, []), w)
                for t, chunk in got.items():
                    ro_depth = self._depth(v, t)
                    k = tau - (R - ro_depth)
                    st["x"][t] += chunk << (k * w)
        out: Dict[int, List[str]] = {}
        mask = (1 << w) - 1
        for ro in rs:
            if ro.parent < 0:
                continue
            k = tau - (R - ro.depth)
            if 0 <= k < K:
                chunk = (st["x"][ro.t] >> (k * w)) & mask
                st["x"][ro.t] -= chunk << (k * w)
                if self.record:
                    st["hist"][ro.t].append((k + 1, st["x"][ro.t]))
                _emit(out, ro.parent, _bits(chunk, w))
        return out

    def _depth(self, v, t):
        for ro in self.roles[v]:
            if ro.t == t:
                return ro.depth
        raise KeyError(t)


class _MinProgram(_Staggered):
    """MSB-first minimum with survivor sets.  Frame = empty flag + m value bits."""

    def __init__(self, roles, R, w, K, values, m):
        super().__init__(roles, R, w)
        self.K = K
        self.values = values
        self.m = m
        self.pad = K * w - (m + 1)

    def make_state(self, v):
        rs = self.roles[v]
        end = 1
        surv, own, res = {}, {}, {}
        for ro in rs:
            end = max(end, self.R - ro.depth + self.K - 1)
            s = set(ro.children)
            val = self.values[ro.t].get(v)
            if val is not None:
                own[ro.t] = val << self.pad
                s.add(-1)
            surv[ro.t] = s
            res[ro.t] = 0
        return {"v": v, "tau": 0, "end": end, "surv": surv, "own": own, "res": res,
                "log": {ro.t: [] for ro in rs}}

    def act(self, st, tau, inbox):
        R, K, w = self.R, self.K, self.w
        rs = self.roles[st["v"]]
        recv: Dict[int, Dict[int, int]] = {}
        if inbox:
            expect: Dict[int, List[int]] = {}
            for ro in rs:
                if 0 <= tau - (R - ro.depth) < K:
                    for c in ro.children:
                        expect.setdefault(c, []).append(ro.t)
            for c, msg in inbox.items():
                for t, chunk in _split(msg, expect.get(c, []), w).items():
                    recv.setdefault(t, {})[c] = chunk
        out: Dict[int, List[str]] = {}
        mask = (1 << w) - 1
        empty_chunk_src = ((1 << (K * w)) - 1)  # all ones stands for "nothing below"
        for ro in rs:
            k = tau - (R - ro.depth)
            if not 0 <= k < K:
                continue
            shift = (K - 1 - k) * w
            surv = st["surv"][ro.t]
            cand = {}
            for s in surv:
                if s == -1:
                    cand[s] = (st["own"][ro.t] >> shift) & mask
                else:
                    cand[s] = recv.get(ro.t, {}).get(s)
            if cand:
                c = min(cand.values())
                dropped = sorted(s for s, val in cand.items() if val != c)
                for s in dropped:
                    surv.discard(s)
                st["log"][ro.t].append((k, tuple(dropped)))
            else:
                c = (empty_chunk_src >> shift) & mask
            if ro.parent < 0:
                st["res"][ro.t] = (st["res"][ro.t] << w) | c
            else:
                _emit(out, ro.parent, _bits(c, w))
        return out


class _BroadcastProgram(_Staggered):
    def __init__(self, roles, R, w, K, msgs):
        super().__init__(roles, R, w)
        self.K = K
        self.msgs = msgs  # padded per tree

    def make_state(self, v):
        rs = self.roles[v]
        end = 1
        got = {}
        for ro in rs:
            end = max(end, ro.depth + self.K - 1)
            got[ro.t] = self.msgs[ro.t] if ro.parent < 0 else 0
        return {"v": v, "tau": 0, "end": end, "got": got}

    def act(self, st, tau, inbox):
        K, w = self.K, self.w
        rs = self.roles[st["v"]]
        if inbox:
            expect: Dict[int, List[int]] = {}
            for ro in rs:
                if ro.parent >= 0 and 0 <= tau - ro.depth < K:
                    expect.setdefault(ro.parent, []).append(ro.t)
            for p, msg in inbox.items():
                for t, chunk in _split(msg, expect.get(p, []), w).items():
                    st["got"][t] = (st["got"][t] << w) | chunk
        out: Dict[int, List[str]] = {}
        mask = (1 << w) - 1
        for ro in rs:
            k = tau - ro.depth
            if not 0 <= k < K or not ro.children:
                continue
            if ro.parent < 0:
                chunk = (self.msgs[ro.t] >> ((K - 1 - k) * w)) & mask
            else:
                chunk = st["got"][ro.t] & mask  # the chunk that just arrived
            for c in ro.children:
                _emit(out, c, _bits(chunk, w))
        return out


class _ConvergecastProgram(_Staggered):
    """Streams each subtree's smallest messages upward in sorted order.

    Frames are (flag, message) with flag 1 marking the end of a stream, so the
    end marker sorts after every message.  A node merges its own list and its
    children's streams chunk by chunk, like the minimum protocol.
    """

    def __init__(self, roles, R, w, F, specials, m, cap):
        super().__init__(roles, R, w)
        self.F = F
        self.m = m
        self.cap = cap
        self.pad = F * w - (m + 1)
        self.END = (1 << m) << self.pad
        self.specials = specials

    def make_state(self, v):
        roles = {}
        for ro in self.roles[v]:
            own = sorted(self.specials[ro.t].get(v, []))[: self.cap]
            roles[ro.t] = {
                "ro": ro,
                "own": [x << self.pad for x in own],
                "buf": {c: [] for c in ro.children},    # completed frames per child
                "part": {c: 0 for c in ro.children},    # frame currently arriving
                "next": {c: 0 for c in ro.children},    # index of next unconsumed frame
                "cdone": {c: False for c in ro.children},
                "sent": {c: 0 for c in ro.children},    # frames the child has finished
                "surv": None,
                "cur": 0,
                "emitted": 0,
                "done": False,
                "collected": [],
            }
        return {"v": v, "tau": 0, "end": 10 ** 9, "roles": roles}

    def act(self, st, tau, inbox):
        R, F, w = self.R, self.F, self.w
        mask = (1 << w) - 1
        if inbox:
            expect: Dict[int, List[int]] = {}
            for t, rs in st["roles"].items():
                ro = rs["ro"]
                off = tau - 1 - (R - ro.depth - 1)
                if off < 0:
                    continue
                for c in ro.children:
                    if not rs["cdone"][c]:
                        expect.setdefault(c, []).append(t)
            for c, msg in inbox.items():
                for t, chunk in _split(msg, expect.get(c, []), w).items():
                    rs = st["roles"][t]
                    rs["part"][c] = (rs["part"][c] << w) | chunk
                    off = tau - (R - rs["ro"].depth)
                    if off % F == F - 1:
                        frame = rs["part"][c]
                        rs["buf"][c].append(frame)
                        rs["part"][c] = 0
                        rs["sent"][c] += 1
                        if frame == self.END or rs["sent"][c] >= self.cap:
                            rs["cdone"][c] = True
        out: Dict[int, List[str]] = {}
        all_done = True
        for t, rs in st["roles"].items():
            if rs["done"]:
                continue
            ro = rs["ro"]
            off = tau - (R - ro.depth)
            if off < 0:
                all_done = False
                continue
            ci = off % F
            shift = (F - 1 - ci) * w
            if ci == 0:
                surv = []
                if rs["own"]:
                    surv.append(-1)
                surv.extend(ro.children)
                rs["surv"] = surv
            cand = {}
            for s in rs["surv"]:
                if s == -1:
                    frame = rs["own"][0]
                elif rs["next"][s] < len(rs["buf"][s]):
                    frame = rs["buf"][s][rs["next"][s]]
                else:
                    # that frame is still arriving; its chunk ci came in this round
                    cand[s] = rs["part"][s] & mask
                    continue
                cand[s] = (frame >> shift) & mask
            if cand:
                c = min(cand.values())
                rs["surv"] = [s for s in rs["surv"] if cand[s] == c]
            else:
                c = (self.END >> shift) & mask
            rs["cur"] = (rs["cur"] << w) | c
            if ro.parent >= 0:
                _emit(out, ro.parent, _bits(c, w))
            if ci == F - 1:
                frame = rs["cur"]
                rs["cur"] = 0
                if frame == self.END:
                    rs["done"] = True
                else:
                    win = rs["surv"][0]
                    if win == -1:
                        rs["own"].pop(0)
                    else:
                        rs["next"][win] += 1
                    rs["emitted"] += 1
                    if ro.parent < 0:
                        rs["collected"].append(frame >> self.pad)
                    if rs["emitted"] >= self.cap:
                        rs["done"] = True
            if not rs["done"]:
                all_done = False
        if all_done:
            st["end"] = tau
        return out


# --- public operations ------------------------------------------------------

def _per_tree(values, k):
    if isinstance(values, dict):
        return [values] * k
    values = list(values)
    if len(values) != k:
        raise ValueError("need one value map per tree")
    return values


def _metrics(cfg: ModelConfig, rounds: int, label: str) -> RoundMetrics:
    m = RoundMetrics(mode=cfg.mode)
    if rounds or cfg.mode != FAITHFUL:
        charge(m, rounds, label)
    return m


def pipelined_sum(g: Graph, trees: Sequence[RootedTree], values, m: int, plan: ChannelPlan,
                  cfg: ModelConfig, record: bool = False, label: str = "sum"):
    """Per-tree sums of the nodes' m-bit values, modulo 2^M.  Returns (sums, metrics[, history])."""
    k = len(trees)
    vals = _per_tree(values, k)
    for vm in vals:
        for v, x in vm.items():
            if x < 0 or x >= (1 << m):
                raise ValueError(f"value {x} at node {v} does not fit in {m} bits")
    size = max((t.size for t in trees), default=1)
    M = sum_width(m, size)
    w = plan.chunk_width(M)
    K = ceil_div(M, w)
    R = plan.R
    if not cfg.faithful:
        sums = [sum(vals[i].get(v, 0) for v in t.nodes) % (1 << M) for i, t in enumerate(trees)]
        met = _metrics(cfg, sum_rounds(R, K), label)
        return (sums, met, None) if record else (sums, met)
    prog = _SumProgram(_roles(trees, g.n), R, w, K, vals, record)
    outs, met = run_protocol(g, None, prog, cfg, label=label)
    sums = [outs[t.root]["x"][i] % (1 << M) for i, t in enumerate(trees)]
    if record:
        hist = [{v: outs[v]["hist"][i] for v in t.nodes} for i, t in enumerate(trees)]
        return sums, met, hist
    return sums, met


def pipelined_min(g: Graph, trees: Sequence[RootedTree], values, m: int, plan: ChannelPlan,
                  cfg: ModelConfig, record: bool = False, label: str = "min"):
    """Per-tree minima (None for a tree without values)."""
    k = len(trees)
    vals = _per_tree(values, k)
    for vm in vals:
        for v, x in vm.items():
            if x < 0 or x >= (1 << m):
                raise ValueError(f"value {x} at node {v} does not fit in {m} bits")
    w = plan.chunk_width(m + 1)
    K = ceil_div(m + 1, w)
    R = plan.R
    if not cfg.faithful:
        res = []
        for i, t in enumerate(trees):
            xs = [vals[i][v] for v in t.nodes if v in vals[i]]
            res.append(min(xs) if xs else None)
        met = _metrics(cfg, sum_rounds(R, K), label)
        return (res, met, None) if record else (res, met)
    prog = _MinProgram(_roles(trees, g.n), R, w, K, vals, m)
    outs, met = run_protocol(g, None, prog, cfg, label=label)
    pad = K * w - (m + 1)
    res = []
    for i, t in enumerate(trees):
        raw = outs[t.root]["res"][i] >> pad
        res.append(None if raw >> m else raw)
    if record:
        logs = [{v: outs[v]["log"][i] for v in t.nodes} for i, t in enumerate(trees)]
        return res, met, logs
    return res, met


def broadcast_rounds(R: int, K: int) -> int:
    return 0 if K == 0 else max(1, R + K - 1)


def pipelined_broadcast(g: Graph, trees: Sequence[RootedTree], msgs: Sequence[int], m: int,
                        plan: ChannelPlan, cfg: ModelConfig, label: str = "broadcast"):
    """Deliver each root's m-bit message to every node of its tree.

    Returns (received, metrics) where received[i] maps tree node -> message.
    """
    if len(msgs) != len(trees):
        raise ValueError("need one message per tree")
    for x in msgs:
        if x < 0 or x >= (1 << max(m, 0)) and m > 0:
            raise ValueError(f"message {x} does not fit in {m} bits")
    if m == 0:
        return [{v: 0 for v in t.nodes} for t in trees], _metrics(cfg, 0, label)
    w = plan.chunk_width(m)
    K = ceil_div(m, w)
    R = plan.R
    if not cfg.faithful:
        rec = [{v: msgs[i] for v in t.nodes} for i, t in enumerate(trees)]
        return rec, _metrics(cfg, broadcast_rounds(R, K), label)
    pad = K * w - m
    prog = _BroadcastProgram(_roles(trees, g.n), R, w, K, [x << pad for x in msgs])
    outs, met = run_protocol(g, None, prog, cfg, label=label)
    rec = [{v: outs[v]["got"][i] >> pad for v in t.nodes} for i, t in enumerate(trees)]
    return rec, met


def convergecast_rounds(R: int, F: int, frames: int) -> int:
    return max(1, R + frames * F - 1)


def pipelined_convergecast(g: Graph, trees: Sequence[RootedTree], specials, m: int,
                           plan: ChannelPlan, cap: int, cfg: ModelConfig,
                           label: str = "convergecast"):
    """Each root learns the `cap` smallest m-bit messages held in its tree.

    specials: per tree (or shared) map node -> list of messages.  The result
    lists are sorted ascending; an empty list means the tree held none.
    """
    k = len(trees)
    spec = [{v: (list(x) if isinstance(x, (list, tuple)) else [x]) for v, x in s.items()}
            for s in _per_tree(specials, k)]
    for s in spec:
        for v, xs in s.items():
            for x in xs:
                if x < 0 or x >= (1 << m):
                    raise ValueError(f"message {x} at node {v} does not fit in {m} bits")
    if cap <= 0:
        return [[] for _ in trees], _metrics(cfg, 0, label)
    w = plan.chunk_width(m + 1)
    F = ceil_div(m + 1, w)
    R = plan.R
    if not cfg.faithful:
        res, frames = [], 0
        for i, t in enumerate(trees):
            allm = sorted(x for v in t.nodes for x in spec[i].get(v, []))
            res.append(allm[:cap])
            frames = max(frames, len(allm[:cap]) + (1 if len(allm) < cap else 0))
        return res, _metrics(cfg, convergecast_rounds(R, F, frames), label)
    prog = _ConvergecastProgram(_roles(trees, g.n), R, w, F, spec, m, cap)
    outs, met = run_protocol(g, None, prog, cfg, label=label)
    return [outs[t.root]["roles"][i]["collected"] for i, t in enumerate(trees)], met
