import json
import math

import numpy as np
from hypothesis import given, strategies as st

from netdecomp import report


@given(st.floats(0.5, 6.0), st.floats(1.0, 1e4))
def test_fit_recovers_polylog_exponent(k, c):
    ns = np.array([2.0 ** e for e in range(6, 14)])
    rounds = c * np.log(ns) ** k
    f = report.fit_exponent(ns, rounds)
    assert abs(f["exponent"] - k) < 1e-3
    assert abs(f["intercept"] - math.log(c)) < 1e-3
    assert f["points"] == 8


def test_fit_underdetermined():
    assert report.fit_exponent([64], [10]) is None
    assert report.fit_exponent([], []) is None


def _rows():
    rows = []
    for algo in ("fast", "rg"):
        for n in (64, 128, 256):
            for seed in (1, 2):
                rows.append({"algo": algo, "n": n, "m": 3 * n, "seed": seed, "b": 8, "p": "0.1",
                             "mode": "logical", "bandwidth": "inf", "colors": 3, "clusters": 9, "killed": 1,
                             "max_steiner_radius": 4, "max_overlap": 2, "max_weak_diameter": 7,
                             "rounds": int(50 * math.log(n) ** 2) + seed})
    return rows


def test_csv_round_trip(tmp_path):
    text = report.to_csv(_rows())
    assert text.splitlines()[0] == ",".join(report.COLUMNS)
    p = tmp_path / "x.csv"
    p.write_text(text)
    back = report.read_csv(p)
    assert len(back) == 12 and back[0]["algo"] == "fast" and back[0]["rounds"] == str(_rows()[0]["rounds"])


def test_render(tmp_path):
    rows = _rows()
    fit = report.render(rows, tmp_path / "out")
    for name in ("bench.csv", "fit.json", "rounds.png", "quality.png"):
        assert (tmp_path / "out" / name).stat().st_size > 0
    assert json.loads((tmp_path / "out" / "fit.json").read_text()) == fit
    assert abs(fit["fast"]["exponent"] - 2.0) < 0.05


def test_render_is_deterministic(tmp_path):
    report.render(_rows(), tmp_path / "a")
    report.render(_rows(), tmp_path / "b")
    for name in ("bench.csv", "fit.json", "rounds.png", "quality.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_grid_rows():
    grid = report.bench_grid(["fast", "slow-id"], [32], [1], [None, 12], 4.0, "logical", math.inf)
    rows = report.run_grid(grid)
    assert [(r["algo"], r["b"]) for r in rows] == [("fast", 5), ("fast", 12), ("slow-id", 5), ("slow-id", 12)]
    assert all(r["rounds"] > 0 and r["colors"] <= 6 for r in rows)
    assert set(rows[0]) == set(report.COLUMNS)
