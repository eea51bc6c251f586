import csv
import json
import shutil
import subprocess

import pytest

from netdecomp.cli import EXIT_ALGO, EXIT_CHECK, EXIT_INPUT, EXIT_OK, main
from netdecomp.graph import gen, save_graph


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _record(out):
    lines = [ln for ln in out.splitlines() if ln.startswith("{")]
    assert len(lines) == 1
    return json.loads(lines[0])


def test_run_path4(capsys):
    code, out, err = _run(capsys, "run", "--graph", "gen:path:n=4", "--algo", "fast", "--check")
    assert code == EXIT_OK
    rec = _record(out)
    assert rec["stats"]["colors"] <= 3
    assert rec["checks"]["status"] == "pass"
    assert set(rec) == {"config", "stats", "metrics", "checks", "wall_s"}


def test_determinism(tmp_path, capsys):
    outs = []
    for k in range(2):
        o, t = tmp_path / f"d{k}.txt", tmp_path / f"t{k}.txt"
        code, out, _ = _run(capsys, "run", "--graph", "gen:gnp:n=256,p=0.03", "--seed", "7", "--algo", "fast",
                            "--mode", "faithful", "--bandwidth", "32", "--out", str(o), "--trace", str(t))
        assert code == EXIT_OK
        rec = _record(out)
        rec.pop("wall_s")
        outs.append((o.read_bytes(), t.read_bytes(), rec))
    assert outs[0] == outs[1]


def test_missing_file(capsys):
    code, _, err = _run(capsys, "run", "--algo", "fast", "--graph", "missing.txt")
    assert code == EXIT_INPUT and "missing.txt" in err


def test_seed_required(capsys):
    code, _, err = _run(capsys, "run", "--graph", "gen:gnp:n=20,p=0.1")
    assert code == EXIT_INPUT and "--seed" in err


def test_bad_spec(capsys):
    code, _, _ = _run(capsys, "run", "--graph", "gen:nosuch:n=3")
    assert code == EXIT_INPUT


def test_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["run", "--graph", "gen:path:n=4", "--algo", "nope"])
    assert e.value.code == 2


@pytest.mark.parametrize("algo", ["fast", "rg", "slow-id", "fast-id", "mis", "coloring", "balanced-color"])
def test_every_algo_checks(capsys, algo):
    code, out, err = _run(capsys, "run", "--graph", "gen:grid:rows=5,cols=6", "--algo", algo, "--check")
    assert code == EXIT_OK, err
    assert _record(out)["config"]["algo"] == algo


def test_precondition_exit(capsys):
    code, _, err = _run(capsys, "run", "--graph", "gen:path:n=1", "--algo", "balanced-color")
    assert code == EXIT_ALGO and "PreconditionError" in err


def _decomp_files(tmp_path, capsys, graph="gen:grid:rows=4,cols=5"):
    res, tr = tmp_path / "d.txt", tmp_path / "t.txt"
    code, _, _ = _run(capsys, "run", "--graph", graph, "--algo", "fast", "--out", str(res), "--trace", str(tr))
    assert code == EXIT_OK
    return res, tr


def test_verify_valid(tmp_path, capsys):
    res, tr = _decomp_files(tmp_path, capsys)
    code, out, _ = _run(capsys, "verify", str(res), "--graph", "gen:grid:rows=4,cols=5", "--trace", str(tr))
    assert code == EXIT_OK
    assert "carve1.invariant1=pass" in out.replace(" ", "")


def test_verify_tampered(tmp_path, capsys):
    res, _ = _decomp_files(tmp_path, capsys, "gen:path:n=6")
    lines = res.read_text().splitlines()
    # put node 0 in its own cluster with the colour of its neighbour's cluster
    lines = [ln if not ln.startswith("c 0 ") else f"c 0 {ln.split()[2]} 99" for ln in lines]
    lines.append("t 99 0 99")
    res.write_text("\n".join(lines) + "\n")
    code, out, _ = _run(capsys, "verify", str(res), "--graph", "gen:path:n=6")
    assert code == EXIT_CHECK
    assert "nonadjacent" in out and "edge 0-1" in out


def test_verify_mismatched_n(tmp_path, capsys):
    res, _ = _decomp_files(tmp_path, capsys)
    code, _, err = _run(capsys, "verify", str(res), "--graph", "gen:path:n=7")
    assert code == EXIT_INPUT and "format error" in err


def test_verify_file_graph_and_mis(tmp_path, capsys):
    g = gen("cycle", n=9)
    path = tmp_path / "g.txt"
    save_graph(g, path)
    out = tmp_path / "mis.txt"
    code, _, _ = _run(capsys, "run", "--graph", str(path), "--algo", "mis", "--out", str(out))
    assert code == EXIT_OK
    assert _run(capsys, "verify", str(out), "--graph", str(path))[0] == EXIT_OK
    out.write_text("m 0\nm 1\n")
    assert _run(capsys, "verify", str(out), "--graph", str(path))[0] == EXIT_CHECK
    out.write_text("m zero\n")
    assert _run(capsys, "verify", str(out), "--graph", str(path))[0] == EXIT_INPUT


def test_verify_balanced(tmp_path, capsys):
    out = tmp_path / "rb.txt"
    assert _run(capsys, "run", "--graph", "gen:cycle:n=12", "--algo", "balanced-color", "--out", str(out))[0] == 0
    assert _run(capsys, "verify", str(out), "--graph", "gen:cycle:n=12")[0] == EXIT_OK
    out.write_text("".join(f"rb {v} 1\n" for v in range(12)))
    assert _run(capsys, "verify", str(out), "--graph", "gen:cycle:n=12")[0] == EXIT_CHECK


def test_bench_shape(tmp_path, capsys):
    csv_path = tmp_path / "b.csv"
    code, _, _ = _run(capsys, "bench", "--sizes", "64,128", "--seeds", "1,2", "--out", str(csv_path))
    assert code == EXIT_OK
    rows = csv_path.read_text().splitlines()
    assert rows[0].startswith("algo,n,m,seed")
    assert len(rows) == 1 + 2 * 2


def test_bench_empty_grid(capsys):
    code, out, _ = _run(capsys, "bench", "--sizes", "", "--seeds", "1")
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("algo,n,m,seed") and len(out.splitlines()) == 1


def test_bench_id_sweep_quality_constant(tmp_path, capsys):
    csv_path = tmp_path / "ids.csv"
    code, _, _ = _run(capsys, "bench", "--algo", "fast-id", "--sizes", "128", "--seeds", "1",
                      "--id-bits-list", "16,32,64", "--out", str(csv_path))
    assert code == EXIT_OK
    rows = list(csv.DictReader(csv_path.open()))
    assert [r["b"] for r in rows] == ["16", "32", "64"]
    for k in ("colors", "clusters", "killed", "max_weak_diameter", "max_overlap"):
        assert len({r[k] for r in rows}) == 1


@pytest.mark.skipif(shutil.which("netdecomp") is None, reason="console script not installed")
def test_console_script():
    p = subprocess.run(["netdecomp", "run", "--graph", "gen:path:n=3", "--check"], capture_output=True, text=True)
    assert p.returncode == 0 and json.loads(p.stdout)["config"]["n"] == 3
