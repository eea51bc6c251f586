import math

import pytest

from netdecomp.graph import assign_ids, gen
from netdecomp.sim import (BandwidthError, ModeError, ModelConfig, NodeProgram, ProtocolTimeout, RoundMetrics,
                           charge, declared, run_protocol)


class Flood(NodeProgram):
    def init(self, node, ident, degree, params):
        src = node == 0
        st = {"informed": src, "sent": src, "nbrs": params[node]}
        return st, ({w: "1" for w in st["nbrs"]} if src else {})

    def transition(self, st, inbox):
        if inbox:
            st["informed"] = True
        out = {}
        if st["informed"] and not st["sent"]:
            out = {w: "1" for w in st["nbrs"]}
            st["sent"] = True
        return st, out, st["sent"]

    def output(self, st):
        return st["informed"]


class Wide(NodeProgram):
    def __init__(self, bits):
        self.bits = bits

    def init(self, node, ident, degree, params):
        return None, {w: "0" * self.bits for w in params[node]}

    def transition(self, st, inbox):
        return st, {}, True


class Quiet(NodeProgram):
    def init(self, node, ident, degree, params):
        return ("start", node), {}

    def transition(self, st, inbox):
        return st, {}, True


class Echo(NodeProgram):
    """Each node sends its round number; records what it read and when."""

    def init(self, node, ident, degree, params):
        return {"r": 0, "seen": [], "nbrs": params[node]}, {w: "0" for w in params[node]}

    def transition(self, st, inbox):
        st["r"] += 1
        st["seen"].append(sorted(int(m, 2) for m in inbox.values()))
        return st, {w: format(st["r"], "b") for w in st["nbrs"]}, st["r"] >= 3


class Forever(NodeProgram):
    def init(self, node, ident, degree, params):
        return None, {}

    def transition(self, st, inbox):
        return st, {}, False


def test_flood_path_takes_eccentricity():
    g = gen("path", n=4)
    out, m = run_protocol(g, assign_ids(g), Flood(), ModelConfig(), params=g.adj)
    assert all(out)
    assert m.rounds_total == 3


def test_bandwidth_violation_named():
    g = gen("path", n=2)
    with pytest.raises(BandwidthError) as ei:
        run_protocol(g, None, Wide(9), ModelConfig(bandwidth=8, mode="faithful"), params=g.adj)
    e = ei.value
    assert e.round == 1 and e.bits == 9 and e.edge in ((0, 1), (1, 0))


def test_logical_mode_does_not_enforce():
    g = gen("path", n=2)
    _, m = run_protocol(g, None, Wide(9), ModelConfig(bandwidth=8), params=g.adj)
    assert m.max_bits == 9


def test_immediate_halt():
    g = gen("path", n=3)
    out, m = run_protocol(g, None, Quiet(), ModelConfig())
    assert m.rounds_total == 1
    assert out == [("start", 0), ("start", 1), ("start", 2)]


def test_synchrony_echo():
    g = gen("path", n=3)
    out, _ = run_protocol(g, None, Echo(), ModelConfig(), params=g.adj)
    # round r reads exactly what neighbours sent in round r - 1
    assert out[1]["seen"] == [[0, 0], [1, 1], [2, 2]]


def test_timeout_carries_metrics():
    g = gen("path", n=2)
    with pytest.raises(ProtocolTimeout) as ei:
        run_protocol(g, None, Forever(), ModelConfig(), max_rounds=5)
    assert ei.value.metrics.rounds_total == 5
    with pytest.raises(ValueError):
        run_protocol(g, None, Forever(), ModelConfig(), max_rounds=0)


def test_determinism():
    g = gen("gnp", n=40, p=0.1, seed=2)
    a = run_protocol(g, None, Echo(), ModelConfig(), params=g.adj)
    b = run_protocol(g, None, Echo(), ModelConfig(), params=g.adj)
    assert a[0] == b[0] and a[1].as_dict() == b[1].as_dict()


def test_charge_examples():
    m = RoundMetrics()
    charge(m, 5, "step")
    assert m.rounds_total == 5
    charge(m, 0, "noop")
    assert m.rounds_total == 5 and "noop" not in m.phases
    m2 = RoundMetrics()
    charge(m2, 3, "a")
    charge(m2, 4, "a")
    assert m2.rounds_total == 7 and m2.phases["a"] == 7


def test_charge_refused_in_faithful():
    with pytest.raises(ModeError):
        charge(RoundMetrics(mode="faithful"), 1, "x")


def test_declared_and_absorb():
    m = RoundMetrics()
    m.absorb(declared("faithful", 4, "x"), times=3)
    assert m.rounds_total == 12 and m.phases == {"x": 12}
    m.absorb(declared("logical", 2, "y"), label="z")
    assert m.phases["z"] == 2


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(mode="async")
    with pytest.raises(ValueError):
        ModelConfig(bandwidth=0)
    assert ModelConfig().bandwidth == math.inf
