"""Synchronous message-passing engine with per-edge bit accounting.

Rounds run in lockstep.  A program's init() may already emit an outbox; the
messages produced by init or by the transition of round r are read by the
transitions of round r+1 (init counts as round 0).  Messages are strings over
{'0','1'}, so their length is exactly their bit count.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .graph import Graph, IdAssignment

LOGICAL = "logical"
FAITHFUL = "faithful"


@dataclass(frozen=True)
class ModelConfig:
    bandwidth: float = math.inf
    mode: str = LOGICAL

    def __post_init__(self):
        if self.mode not in (LOGICAL, FAITHFUL):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (self.bandwidth == math.inf or (int(self.bandwidth) == self.bandwidth and self.bandwidth >= 1)):
            raise ValueError("bandwidth must be a positive integer or inf")

    @property
    def faithful(self) -> bool:
        return self.mode == FAITHFUL


@dataclass
class RoundMetrics:
    rounds_total: int = 0
    phases: Dict[str, int] = field(default_factory=dict)
    max_bits: int = 0
    messages: int = 0
    bits_total: int = 0
    mode: str = LOGICAL

    def absorb(self, other: "RoundMetrics", label: Optional[str] = None, times: int = 1) -> "RoundMetrics":
        """Append the cost of a sub-run (executed `times` times back to back)."""
        if times <= 0:
            return self
        self.rounds_total += other.rounds_total * times
        self.messages += other.messages * times
        self.bits_total += other.bits_total * times
        self.max_bits = max(self.max_bits, other.max_bits)
        if label is None:
            for k, v in other.phases.items():
                self.phases[k] = self.phases.get(k, 0) + v * times
        else:
            self.phases[label] = self.phases.get(label, 0) + other.rounds_total * times
        return self

    def as_dict(self) -> Dict[str, Any]:
        return {"rounds_total": self.rounds_total, "max_bits": self.max_bits,
                "messages": self.messages, "bits_total": self.bits_total,
                "phases": dict(sorted(self.phases.items()))}


class ModeError(RuntimeError):
    pass


class BandwidthError(RuntimeError):
    def __init__(self, rnd: int, edge: Tuple[int, int], bits: int, limit):
        super().__init__(f"round {rnd}: edge {edge[0]}->{edge[1]} carries {bits} bits, bandwidth is {limit}")
        self.round = rnd
        self.edge = edge
        self.bits = bits


class ProtocolTimeout(RuntimeError):
    def __init__(self, max_rounds: int, metrics: RoundMetrics):
        super().__init__(f"protocol did not halt within {max_rounds} rounds")
        self.metrics = metrics


def charge(metrics: RoundMetrics, rounds: int, label: str) -> RoundMetrics:
    """Logical-mode accounting: add `rounds` to the total and to phase `label`."""
    if metrics.mode == FAITHFUL:
        raise ModeError("charge() is only meaningful in logical mode")
    if rounds < 0:
        raise ValueError("cannot charge a negative number of rounds")
    if rounds:
        metrics.rounds_total += rounds
        metrics.phases[label] = metrics.phases.get(label, 0) + rounds
    return metrics


def declared(mode: str, rounds: int, label: str) -> RoundMetrics:
    """Metrics for a step whose outcome is computed locally but priced at its
    message-passing schedule (usable in both modes)."""
    m = RoundMetrics(mode=mode)
    if rounds < 0:
        raise ValueError("negative round count")
    if rounds:
        m.rounds_total = rounds
        m.phases[label] = rounds
    return m


class NodeProgram:
    """Base class for node-local programs.  Subclasses keep transitions pure."""

    def init(self, node: int, ident: int, degree: int, params: Any) -> Tuple[Any, Dict[int, str]]:
        raise NotImplementedError

    def transition(self, state: Any, inbox: Dict[int, str]) -> Tuple[Any, Dict[int, str], bool]:
        raise NotImplementedError

    def output(self, state: Any) -> Any:
        return state


def run_protocol(g: Graph, ids: Optional[IdAssignment], prog: NodeProgram, cfg: ModelConfig,
                 max_rounds: int = 10 ** 6, params: Any = None, label: str = "protocol"
                 ) -> Tuple[List[Any], RoundMetrics]:
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    n = g.n
    limit = cfg.bandwidth
    enforce = cfg.faithful and limit != math.inf
    metrics = RoundMetrics(mode=cfg.mode)
    adjsets = [set(a) for a in g.adj]
    states: List[Any] = [None] * n
    pending: List[Dict[int, str]] = [None] * n
    for v in range(n):
        ident = ids[v] if ids is not None else v
        states[v], pending[v] = prog.init(v, ident, len(g.adj[v]), params)
    halted = [False] * n
    live = list(range(n))
    rnd = 0
    while live:
        rnd += 1
        if rnd > max_rounds:
            metrics.rounds_total = rnd - 1
            metrics.phases[label] = rnd - 1
            raise ProtocolTimeout(max_rounds, metrics)
        inbox: List[Dict[int, str]] = [dict() for _ in range(n)]
        for u in range(n):
            out = pending[u]
            if not out:
                continue
            for w in sorted(out):
                msg = out[w]
                if w not in adjsets[u]:
                    raise ValueError(f"node {u} addressed non-neighbour {w}")
                bits = len(msg)
                if enforce and bits > limit:
                    raise BandwidthError(rnd, (u, w), bits, limit)
                metrics.max_bits = max(metrics.max_bits, bits)
                metrics.messages += 1
                metrics.bits_total += bits
                if not halted[w]:
                    inbox[w][u] = msg
        nxt_live = []
        new_pending: List[Dict[int, str]] = [None] * n
        for v in live:
            states[v], new_pending[v], h = prog.transition(states[v], inbox[v])
            if h:
                halted[v] = True
            else:
                nxt_live.append(v)
        pending = new_pending
        live = nxt_live
    # outboxes produced by the final transitions have no reader left
    metrics.rounds_total = rnd
    metrics.phases[label] = rnd
    return [prog.output(s) for s in states], metrics
