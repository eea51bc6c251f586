"""Benchmark sweeps, the polylog fit, and figures.

The fit regresses ln(rounds) on ln(ln n): rounds ~ c * (ln n)^k gives slope k.
"""
import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

COLUMNS = ["algo", "n", "m", "seed", "b", "p", "mode", "bandwidth", "colors", "clusters", "killed",
           "max_steiner_radius", "max_overlap", "max_weak_diameter", "rounds"]

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "axes.grid": True,
    "grid.alpha": 0.3,
}
PALETTE = {"fast": "#08589e", "fast-id": "#2b8cbe", "rg": "#d95f02", "slow-id": "#7570b3"}
VARIANT = {"fast": "fast", "fast-id": "fast-id", "rg": "rg", "slow-id": "slow"}


def bench_grid(algos, sizes, seeds, widths, degree, mode, bandwidth):
    grid = []
    for algo in algos:
        for n in sizes:
            for b in widths:
                for seed in seeds:
                    grid.append((algo, n, seed, b, degree, mode, bandwidth))
    return grid


def run_one(cfgrow):
    from .decomposition import decompose
    from .graph import assign_ids, gen
    from .sim import ModelConfig
    algo, n, seed, b, degree, mode, bandwidth = cfgrow
    p = min(1.0, degree / (n - 1)) if n > 1 else 0.0
    g = gen("gnp", n=n, p=p, seed=seed)
    ids = assign_ids(g, b, "padded" if b is not None else "sequential")
    t0 = time.perf_counter()
    d = decompose(g, ids, VARIANT[algo], ModelConfig(bandwidth=bandwidth, mode=mode), seed=seed)
    row = {"algo": algo, "n": n, "m": g.m, "seed": seed, "b": ids.b, "p": f"{p:.6g}", "mode": mode,
           "bandwidth": "inf" if bandwidth == math.inf else int(bandwidth)}
    for k in COLUMNS[8:]:
        row[k] = d.stats[k]
    return row, time.perf_counter() - t0


def run_grid(grid, jobs=1, log=None):
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            out = list(ex.map(run_one, grid))
    else:
        out = [run_one(c) for c in grid]
    if log is not None:
        for row, wall in out:
            print(f"{row['algo']} n={row['n']} seed={row['seed']} b={row['b']} "
                  f"rounds={row['rounds']} wall={wall:.2f}s", file=log)
    return [r for r, _ in out]


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _mean_by_n(rows, algo, key="rounds"):
    acc = {}
    for r in rows:
        if r["algo"] == algo:
            acc.setdefault(int(r["n"]), []).append(float(r[key]))
    ns = sorted(acc)
    return np.array(ns, dtype=float), np.array([np.mean(acc[n]) for n in ns])


def fit_exponent(ns, rounds):
    """Slope of ln(rounds) against ln(ln n) by least squares; None if under-determined."""
    ns, rounds = np.asarray(ns, float), np.asarray(rounds, float)
    ok = (ns > 2) & (rounds > 0)
    if ok.sum() < 2:
        return None
    x, y = np.log(np.log(ns[ok])), np.log(rounds[ok])
    k, c = np.polyfit(x, y, 1)
    return {"exponent": round(float(k), 4), "intercept": round(float(c), 4), "points": int(ok.sum())}


def fits(rows):
    algos = sorted({r["algo"] for r in rows})
    return {a: fit_exponent(*_mean_by_n(rows, a)) for a in algos}


def render(rows, outdir, fit=None):
    """Write bench.csv, fit.json, rounds.png and quality.png into outdir."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import matplotlib.ticker

    os.makedirs(outdir, exist_ok=True)
    fit = fits(rows) if fit is None else fit
    with open(os.path.join(outdir, "bench.csv"), "w") as fh:
        fh.write(to_csv(rows))
    with open(os.path.join(outdir, "fit.json"), "w") as fh:
        json.dump(fit, fh, indent=1, sort_keys=True)
        fh.write("\n")
    algos = sorted({r["algo"] for r in rows})
    meta = {"Software": None}
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for a in algos:
            ns, rd = _mean_by_n(rows, a)
            if not len(ns):
                continue
            col = PALETTE.get(a)
            ax.plot(np.log(ns), rd, "o", color=col, label=a)
            f = fit.get(a)
            if f:
                xs = np.linspace(np.log(ns).min(), np.log(ns).max(), 50)
                ax.plot(xs, np.exp(f["intercept"]) * xs ** f["exponent"], "-", color=col, alpha=0.7,
                        label=f"{a} fit k={f['exponent']:.2f}")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.xaxis.set_major_formatter(matplotlib.ticker.FormatStrFormatter("%.1f"))
        ax.xaxis.set_minor_formatter(matplotlib.ticker.FormatStrFormatter("%.1f"))
        ax.set_xlabel("ln n")
        ax.set_ylabel("rounds (mean over seeds)")
        if algos:
            ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, "rounds.png"), metadata=meta)
        plt.close(fig)

        fig, axes = plt.subplots(1, 2, figsize=(7.0, 3.0))
        for a in algos:
            for ax, key in zip(axes, ("colors", "max_weak_diameter")):
                ns, val = _mean_by_n(rows, a, key)
                ax.plot(ns, val, "o-", color=PALETTE.get(a), label=a)
        for ax, lab in zip(axes, ("colours", "max weak diameter")):
            ax.set_xscale("log", base=2)
            ax.set_xlabel("n")
            ax.set_ylabel(lab)
        if algos:
            axes[0].legend()
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, "quality.png"), metadata=meta)
        plt.close(fig)
    return fit
