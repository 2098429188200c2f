"""Compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--events N] [--conv N] [--repeat R]

Reports the best wall time of ``R`` repeats per kernel and backend, and checks
that both backends return the same numbers.
"""
import argparse
import time

import numpy as np

from growthnet import _fallback, build_model
from growthnet._backend import BACKEND, kernels


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_convolve(n, repeat):
    rng = np.random.default_rng(0)
    a = rng.normal(size=n) - 5.0
    b = rng.normal(size=n) - 5.0
    rows = []
    results = {}
    for name, mod in (("compiled", kernels), ("python", _fallback)):
        t, out = best_of(lambda: np.asarray(mod.log_convolve(a, b, n)), repeat)
        rows.append((f"log_convolve n={n}", name, t))
        results[name] = out
    agree = np.allclose(results["compiled"], results["python"], rtol=1e-13)
    return rows, agree


def bench_gillespie(events, python_events, repeat):
    model = build_model(500, [(250.0, 250)])
    counts = np.asarray(model.counts, dtype=np.int64)
    lam = np.ones(model.K)
    mu = np.asarray(model.kappas, dtype=np.float64)
    rows = []
    for name, mod, ev in (("compiled", kernels, events), ("python", _fallback, python_events)):
        t, _ = best_of(lambda: mod.gillespie_loop(counts, lam, mu, model.m, 0, ev,
                                                  np.random.PCG64(7)), repeat)
        rows.append((f"gillespie m=500 f=250 ({ev:.0e} events)", name, t))
        rows.append(("  per 1e6 events", name, t / ev * 1e6))
    # bit-identity on a common event count
    a = kernels.gillespie_loop(counts, lam, mu, model.m, 0, python_events, np.random.PCG64(3))
    b = _fallback.gillespie_loop(counts, lam, mu, model.m, 0, python_events, np.random.PCG64(3))
    same = all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b))
    return rows, same


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--events", type=int, default=10_000_000)
    ap.add_argument("--python-events", type=int, default=200_000)
    ap.add_argument("--conv", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if BACKEND != "cython":
        print("compiled extension not available; only the fallback would run")
        return
    rows, conv_ok = bench_convolve(args.conv, args.repeat)
    more, sim_ok = bench_gillespie(args.events, args.python_events, args.repeat)
    rows += more
    width = max(len(r[0]) for r in rows)
    for what, backend, t in rows:
        print(f"{what:<{width}}  {backend:<8}  {t:9.4f} s")
    print(f"log_convolve backends agree: {conv_ok}")
    print(f"gillespie backends bit-identical: {sim_ok}")


if __name__ == "__main__":
    main()
