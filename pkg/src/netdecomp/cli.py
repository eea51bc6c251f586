"""Command line: run, bench, verify.

Exit status: 0 when every requested check passes, 1 when a check fails,
2 for usage, file and format errors, 3 when an algorithm rejects its input.
"""
import argparse
import json
import math
import sys
import time
from types import SimpleNamespace

from .applications import (InvalidDecomposition, coloring_via_decomposition,
                           mis_via_decomposition, parse_coloring, parse_mis)
from .carving import CarveTrace
from .coloring import DegreeError, PreconditionError, balanced_color_nodes
from .decomposition import Decomposition, DecompositionFormatError, decompose, variant_bounds
from .graph import GraphFormatError, SpecError, assign_ids, generate, load_graph_with_ids, parse_spec
from .sim import ModelConfig
from .verify import (Bounds, CheckReport, check_balance, check_carve_trace, check_coloring,
                     check_decomposition, check_mis)

ALGOS = ("fast", "rg", "slow-id", "fast-id", "mis", "coloring", "balanced-color")
DECOMP = {"fast": "fast", "rg": "rg", "slow-id": "slow", "fast-id": "fast-id"}
RANDOM_FAMILIES = ("gnp", "tree")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_ALGO = 0, 1, 2, 3


class InputError(Exception):
    pass


def _bandwidth(text):
    if text in ("inf", "unbounded"):
        return math.inf
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bandwidth must be an integer or 'inf', got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("bandwidth must be at least 1")
    return v


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def load_input(graph: str, seed, id_bits=None, id_scheme=None):
    """Graph and identifiers from a spec string or a file."""
    spec = parse_spec(graph, seed if seed is not None else 0)
    if spec.family in RANDOM_FAMILIES and seed is None:
        raise InputError(f"--seed is required for the random family {spec.family!r}")
    file_ids = None
    try:
        if spec.family == "file":
            g, file_ids = load_graph_with_ids(spec.get("path"))
        else:
            g = generate(spec)
    except OSError as e:
        raise InputError(f"cannot read graph {graph!r}: {e.strerror or e}")
    if file_ids is not None and id_bits is None and id_scheme is None:
        ids = file_ids
    else:
        ids = assign_ids(g, id_bits, id_scheme or "sequential", seed or 0)
    return g, ids


def _config(args) -> ModelConfig:
    return ModelConfig(bandwidth=args.bandwidth, mode=args.mode)


def _bounds_for(variant: str, n: int, params) -> Bounds:
    colors, R, D, overlap = variant_bounds(variant, n, params)
    return Bounds(D=D, R=R, overlap=overlap, colors=colors)


def _header_params(d: Decomposition):
    p = d.params
    try:
        return SimpleNamespace(L=int(p["L"]), phases=int(p["phases"]), steps_per_phase=int(p["steps"]))
    except (KeyError, ValueError):
        raise InputError("decomposition header lacks L, phases or steps")


def _decomposition_report(g, d, traces=True) -> CheckReport:
    rep = check_decomposition(g, d, _bounds_for(d.variant, g.n, _header_params(d)))
    if traces:
        for j, res in enumerate(d.carves, 1):
            rep.merge(check_carve_trace(g, res.trace), prefix=f"carve{j}.")
    return rep


def _summary(rep: CheckReport):
    return {"status": "pass" if rep.ok else "fail", "checks": len(rep.checks), "failures": rep.failures()}


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def execute(args):
    """Run one configuration.  Returns (record dict, result text, traces text, report or None)."""
    g, ids = load_input(args.graph, args.seed, args.id_bits, args.id_scheme)
    cfg = _config(args)
    algo = args.algo
    t0 = time.perf_counter()
    rep = None
    traces = ""
    if algo in DECOMP:
        d = decompose(g, ids, DECOMP[algo], cfg, seed=args.seed)
        stats, metrics, text = dict(d.stats), d.metrics, d.dumps()
        traces = "".join(r.trace.dumps() for r in d.carves)
        if args.check:
            rep = _decomposition_report(g, d)
    elif algo in ("mis", "coloring"):
        d = decompose(g, ids, DECOMP[args.base], cfg, seed=args.seed, measure=False)
        traces = "".join(r.trace.dumps() for r in d.carves)
        if algo == "mis":
            res = mis_via_decomposition(g, ids, d, cfg)
            stats = {"size": len(res.selected)}
            if args.check:
                rep = check_mis(g, res.selected)
        else:
            delta = g.max_degree()
            res = coloring_via_decomposition(g, ids, d, delta, cfg)
            stats = {"palette": res.palette, "colors_used": len(set(res.color))}
            if args.check:
                rep = check_coloring(g, res.color, res.palette)
        stats["decomposition_colors"] = d.num_colors
        stats["decomposition_rounds"] = d.metrics.rounds_total
        metrics, text = res.metrics, res.dumps()
    else:
        res = balanced_color_nodes(g, ids, cfg)
        stats = {"red": res.count(0), "blue": res.count(1),
                 **{k: res.info[k] for k in ("heavy", "stars", "groups")}}
        metrics = res.metrics
        text = "".join(f"rb {v} {res.color[v]}\n" for v in range(g.n))
        if args.check:
            rep = check_balance(res.color, rounding="floor")
    wall = time.perf_counter() - t0
    record = {
        "config": {"algo": algo, "graph": args.graph, "n": g.n, "m": g.m, "b": ids.b,
                   "id_scheme": ids.scheme, "seed": args.seed, "mode": cfg.mode,
                   "bandwidth": "inf" if cfg.bandwidth == math.inf else int(cfg.bandwidth)},
        "stats": stats,
        "metrics": metrics.as_dict(),
        "checks": _summary(rep) if rep is not None else None,
        "wall_s": round(wall, 3),
    }
    return record, text, traces, rep


def cmd_run(args) -> int:
    record, text, traces, rep = execute(args)
    if args.out:
        _write(args.out, text)
    if args.trace:
        if not traces:
            raise InputError(f"algorithm {args.algo} produces no carve trace")
        _write(args.trace, traces)
    print(json.dumps(record, sort_keys=True))
    if rep is not None:
        for line in rep.lines():
            print(line, file=sys.stderr)
        return EXIT_OK if rep.ok else EXIT_CHECK
    return EXIT_OK


# --- verify ---------------------------------------------------------------------

def split_traces(text: str):
    chunks, cur = [], None
    for line in text.splitlines():
        if line.strip() == "carve-trace 1":
            cur = [line]
            chunks.append(cur)
        elif cur is not None:
            cur.append(line)
        elif line.strip():
            raise InputError("trace file does not start with 'carve-trace 1'")
    try:
        return [CarveTrace.loads("\n".join(c)) for c in chunks]
    except ValueError as e:
        raise InputError(f"bad trace: {e}")


def _first_tag(text: str) -> str:
    for line in text.splitlines():
        if line.strip() and not line.startswith("#"):
            return line.split()[0]
    return ""


def parse_balanced(text: str, n: int):
    col = {}
    for k, line in enumerate(text.splitlines(), 1):
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        if tok[0] != "rb" or len(tok) != 3:
            raise InputError(f"line {k}: expected 'rb <node> <color>'")
        try:
            v, c = int(tok[1]), int(tok[2])
        except ValueError:
            raise InputError(f"line {k}: node and colour must be integers")
        if not 0 <= v < n:
            raise InputError(f"line {k}: node {v} out of range for n={n}")
        col[v] = c
    if len(col) != n:
        raise InputError(f"coloring lists {len(col)} nodes, graph has {n}")
    return col


def _parsed(parse, *a):
    try:
        return parse(*a)
    except ValueError as e:
        raise InputError(f"format error: {e}")


def verify_text(g, text: str, trace_text: str = "") -> CheckReport:
    tag = _first_tag(text)
    if tag == "decomposition":
        d = Decomposition.loads(text)
        if d.n != g.n:
            raise InputError(f"format error: decomposition is for n={d.n}, graph has n={g.n}")
        rep = _decomposition_report(g, d, traces=False)
    elif tag == "carve-trace":
        rep = CheckReport()
    elif tag == "m" or tag == "":
        sel = _parsed(parse_mis, text)
        bad = [v for v in sel if not 0 <= v < g.n]
        if bad:
            raise InputError(f"format error: node {bad[0]} out of range for n={g.n}")
        rep = check_mis(g, sel)
    elif tag == "col":
        col = _parsed(parse_coloring, text, g.n)
        rep = check_coloring(g, col, g.max_degree() + 1)
    elif tag == "rb":
        rep = check_balance(parse_balanced(text, g.n), rounding="floor")
    else:
        raise InputError(f"format error: unrecognised result record {tag!r}")
    if tag == "carve-trace":
        trace_text = text + trace_text
    for j, tr in enumerate(split_traces(trace_text) if trace_text else [], 1):
        if int(tr.header.get("n", g.n)) != g.n:
            raise InputError(f"format error: trace {j} is for n={tr.header.get('n')}, graph has n={g.n}")
        rep.merge(check_carve_trace(g, tr), prefix=f"carve{j}.")
    return rep


def cmd_verify(args) -> int:
    g, _ = load_input(args.graph, args.seed)
    try:
        with open(args.result) as fh:
            text = fh.read()
        trace_text = ""
        if args.trace:
            with open(args.trace) as fh:
                trace_text = fh.read()
    except OSError as e:
        raise InputError(f"cannot read {e.filename}: {e.strerror}")
    rep = verify_text(g, text, trace_text)
    for line in rep.lines():
        print(line)
    return EXIT_OK if rep.ok else EXIT_CHECK


# --- bench ----------------------------------------------------------------------

def cmd_bench(args) -> int:
    from . import report
    sizes = args.sizes if args.sizes is not None else [2 ** k for k in range(6, 14)]
    grid = report.bench_grid(args.algo or ["fast"], sizes, args.seeds, args.id_bits_list or [None],
                             args.degree, args.mode, args.bandwidth)
    rows = report.run_grid(grid, jobs=args.jobs, log=sys.stderr)
    csv_text = report.to_csv(rows)
    if args.out:
        _write(args.out, csv_text)
    else:
        sys.stdout.write(csv_text)
    fits = report.fits(rows)
    if args.report:
        report.render(rows, args.report, fits)
    print(json.dumps({"fit": fits}, sort_keys=True), file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


# --- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netdecomp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--mode", choices=("logical", "faithful"), default="logical")
        sp.add_argument("--bandwidth", type=_bandwidth, default=math.inf, help="bits per edge per round")

    r = sub.add_parser("run", help="run one algorithm on one graph")
    r.add_argument("--graph", required=True, help="gen:family:k=v,... or an edge-list file")
    r.add_argument("--seed", type=int)
    r.add_argument("--algo", choices=ALGOS, default="fast")
    r.add_argument("--base", choices=tuple(DECOMP), default="fast",
                   help="decomposition used by mis and coloring")
    common(r)
    r.add_argument("--id-bits", type=int)
    r.add_argument("--id-scheme", choices=("sequential", "shuffled", "padded"))
    r.add_argument("--check", action="store_true")
    r.add_argument("--out", help="write the result file here")
    r.add_argument("--trace", help="write the carve traces here")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check a serialized result against its graph")
    v.add_argument("result")
    v.add_argument("--graph", required=True)
    v.add_argument("--seed", type=int)
    v.add_argument("--trace", help="carve traces to replay as well")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="sweep sizes and seeds, emit CSV")
    b.add_argument("--algo", action="append", choices=tuple(DECOMP),
                   help="repeatable; default fast")
    b.add_argument("--sizes", type=_int_list, help="comma list, default 64..8192 in powers of two")
    b.add_argument("--seeds", type=_int_list, default=[1, 2, 3])
    b.add_argument("--degree", type=float, default=8.0, help="target average degree of gnp")
    b.add_argument("--id-bits-list", type=_int_list, help="identifier widths to sweep (padded ids)")
    common(b)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", help="CSV path (default stdout)")
    b.add_argument("--report", help="directory for figures and the fit")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SpecError, GraphFormatError, DecompositionFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (PreconditionError, DegreeError, InvalidDecomposition, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ALGO


if __name__ == "__main__":
    sys.exit(main())
